//! Shared harness: an in-process service over synthetic corpora.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Request, Response, StatusCode};
use http_body_util::BodyExt;
use serde_json::Value;
use sma_core::adapters::{
    default_capabilities, BudgetConfig, FixtureAdapter, NativeItem, PlatformAdapter, QuotaLedger,
};
use sma_core::clock::ManualClock;
use sma_core::enrichment::{Enricher, EnrichmentResources};
use sma_core::fixtures::CORPUS_START;
use sma_core::gathering::GatheringService;
use sma_core::query::PlatformCapabilities;
use sma_core::storage::Store;
use sma_core::Platform;
use sma_server::{router, App};
use tower::ServiceExt;

pub struct TestApp {
    pub app: Arc<App>,
    pub clock: Arc<ManualClock>,
}

pub struct Builder {
    corpora: Vec<(Platform, Vec<NativeItem>)>,
    caps: BTreeMap<Platform, PlatformCapabilities>,
    budget: u64,
}

pub fn builder() -> Builder {
    Builder {
        corpora: Vec::new(),
        caps: BTreeMap::new(),
        budget: 10_000,
    }
}

impl Builder {
    pub fn corpus(mut self, p: Platform, items: Vec<NativeItem>) -> Self {
        self.corpora.push((p, items));
        self
    }

    pub fn caps(mut self, p: Platform, caps: PlatformCapabilities) -> Self {
        self.caps.insert(p, caps);
        self
    }

    pub fn budget(mut self, units: u64) -> Self {
        self.budget = units;
        self
    }

    pub fn build(self) -> TestApp {
        let clock = Arc::new(ManualClock::at_unix(CORPUS_START + 40 * 86_400));
        let budgets: BTreeMap<_, _> = Platform::ALL
            .iter()
            .map(|p| {
                (
                    *p,
                    BudgetConfig {
                        capacity: self.budget,
                        window_seconds: 900,
                    },
                )
            })
            .collect();
        let ledger = Arc::new(QuotaLedger::new(clock.clone(), &budgets));
        let adapters: Vec<Arc<dyn PlatformAdapter>> = self
            .corpora
            .into_iter()
            .map(|(p, items)| {
                let caps = self
                    .caps
                    .get(&p)
                    .cloned()
                    .unwrap_or_else(|| default_capabilities(p));
                Arc::new(FixtureAdapter::new(p, caps, items)) as Arc<dyn PlatformAdapter>
            })
            .collect();
        let enricher = Arc::new(Enricher::new(EnrichmentResources::builtin()));
        let service = GatheringService::new(
            adapters,
            ledger,
            Arc::new(Store::in_memory()),
            enricher.clone(),
            clock.clone(),
        );
        TestApp {
            app: Arc::new(App::new(Arc::new(service), enricher)),
            clock,
        }
    }
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: axum::http::HeaderMap,
    pub body: Value,
}

impl TestApp {
    pub async fn send(&self, req: Request<Body>) -> Reply {
        let resp: Response<Body> = router(self.app.clone()).oneshot(req).await.unwrap();
        let status = resp.status();
        let headers = resp.headers().clone();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let body = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes).unwrap()
        };
        Reply {
            status,
            headers,
            body,
        }
    }

    pub async fn get(&self, path: &str) -> Reply {
        self.send(Request::get(path).body(Body::empty()).unwrap())
            .await
    }

    pub async fn post_json(&self, path: &str, body: &Value) -> Reply {
        self.send(
            Request::post(path)
                .header(header::CONTENT_TYPE, "application/json")
                .body(Body::from(body.to_string()))
                .unwrap(),
        )
        .await
    }
}

/// Every error reply carries an ErrorBody.
pub fn assert_error_body(r: &Reply) {
    assert!(!r.status.is_success());
    assert!(r.body["error"].is_string(), "no error code in {}", r.body);
    assert!(r.body["message"].is_string(), "no message in {}", r.body);
}
