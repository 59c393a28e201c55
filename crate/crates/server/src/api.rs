//! REST surface. Every non-2xx response carries an [`ErrorBody`].

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderName, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use serde_json::{json, Value};
use sma_core::activity::{activity_from_value, validate_activity, Activity, ActivityCollection};
use sma_core::gathering::{rank_collection, CrawlJobSpec, GatherError, SearchRequest};
use sma_core::quality::WeightProfile;
use sma_core::storage::{JobRecord, StoreError};

use crate::app::App;

pub const BASE: &str = "/SocialMediaAPI";
pub const DEFAULT_PAGE_SIZE: usize = 100;
pub const HEADER_JOB_ID: &str = "x-sma-job-id";
pub const HEADER_TRUNCATED: &str = "x-sma-truncated";
pub const HEADER_REQUEST_UNITS: &str = "x-sma-request-units";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fields: Option<BTreeMap<String, String>>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
    retry_after: Option<i64>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                error: code.to_string(),
                message: message.into(),
                fields: None,
            },
            retry_after: None,
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_request", message)
    }

    fn with_fields(mut self, fields: BTreeMap<String, String>) -> Self {
        self.body.fields = (!fields.is_empty()).then_some(fields);
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut resp = (self.status, Json(self.body)).into_response();
        if let Some(secs) = self.retry_after {
            resp.headers_mut()
                .insert(header::RETRY_AFTER, HeaderValue::from(secs.max(0)));
        }
        resp
    }
}

impl From<GatherError> for ApiError {
    fn from(e: GatherError) -> Self {
        match e {
            GatherError::Invalid { message, fields } => {
                ApiError::bad_request(message).with_fields(fields)
            }
            GatherError::QuotaExhausted { retry_after_secs } => {
                let mut err = ApiError::new(
                    StatusCode::SERVICE_UNAVAILABLE,
                    "quota_exhausted",
                    e.to_string(),
                );
                err.retry_after = Some(retry_after_secs);
                err
            }
            GatherError::NotFound(_) => {
                ApiError::new(StatusCode::NOT_FOUND, "not_found", e.to_string())
            }
            GatherError::NotDue { .. } => {
                ApiError::new(StatusCode::CONFLICT, "not_due", e.to_string())
            }
            GatherError::Quality(q) => ApiError::bad_request(q.to_string()).with_fields(
                BTreeMap::from([("weightProfile".to_string(), q.to_string())]),
            ),
            GatherError::Storage(s) => s.into(),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::JobNotFound(_) => {
                ApiError::new(StatusCode::NOT_FOUND, "not_found", e.to_string())
            }
            StoreError::JobRunning(_) | StoreError::JobExists(_) | StoreError::InvalidUpdate(_) => {
                ApiError::new(StatusCode::CONFLICT, "conflict", e.to_string())
            }
            StoreError::InvalidArgument(_) | StoreError::InvalidActivity(_) => {
                ApiError::bad_request(e.to_string())
            }
            StoreError::Io(_) | StoreError::Corrupt { .. } => {
                tracing::error!(error = %e, "storage failure");
                ApiError::new(
                    StatusCode::INTERNAL_SERVER_ERROR,
                    "storage_error",
                    e.to_string(),
                )
            }
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(app: Arc<App>) -> Router {
    let crawl = format!("{BASE}/crawlService");
    Router::new()
        .route(&crawl, post(start_crawl))
        .route(&format!("{crawl}/allJobs"), get(all_jobs))
        .route(
            &format!("{crawl}/{{crawljobId}}"),
            get(load_job).delete(delete_job),
        )
        .route(&format!("{crawl}/{{crawljobId}}/status"), get(job_status))
        .route(&format!("{crawl}/{{crawljobId}}/stop"), post(stop_job))
        .route(&format!("{BASE}/searchService"), post(search))
        .route(&format!("{BASE}/enrichment"), post(enrich))
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .with_state(app)
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such resource")
}

async fn method_not_allowed() -> ApiError {
    ApiError::new(
        StatusCode::METHOD_NOT_ALLOWED,
        "method_not_allowed",
        "method not allowed",
    )
}

/// Checks the content type and parses the body as JSON.
fn json_body(headers: &HeaderMap, body: &Bytes) -> ApiResult<Value> {
    let ct = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("");
    let mime = ct
        .split(';')
        .next()
        .unwrap_or("")
        .trim()
        .to_ascii_lowercase();
    if mime != "application/json" {
        return Err(ApiError::new(
            StatusCode::UNSUPPORTED_MEDIA_TYPE,
            "unsupported_media_type",
            format!("expected application/json, got {:?}", ct),
        ));
    }
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed JSON: {e}")))
}

/// Blocking service work runs off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))
}

async fn start_crawl(
    State(app): State<Arc<App>>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Response> {
    let payload = json_body(&headers, &body)?;
    let gathering = match payload.get("gathering") {
        Some(g) if g.is_object() => g,
        Some(_) => {
            return Err(
                ApiError::bad_request("gathering must be an object").with_fields(BTreeMap::from([
                    ("gathering".into(), "must be an object".into()),
                ])),
            )
        }
        None => {
            return Err(ApiError::bad_request("gathering: required")
                .with_fields(BTreeMap::from([("gathering".into(), "required".into())])))
        }
    };
    let spec = CrawlJobSpec::from_json(gathering)?;
    let id = {
        let app = app.clone();
        blocking(move || app.service.start_crawl(&spec)).await??
    };
    app.driver.spawn(&id);
    Ok((StatusCode::CREATED, Json(json!({ "crawljobId": id }))).into_response())
}

async fn all_jobs(State(app): State<Arc<App>>) -> Json<Vec<JobRecord>> {
    Json(app.service.list_jobs())
}

fn page_param(params: &HashMap<String, String>, key: &str, default: i64) -> ApiResult<i64> {
    match params.get(key) {
        None => Ok(default),
        Some(raw) => raw.trim().parse::<i64>().map_err(|_| {
            ApiError::bad_request(format!("{key} must be an integer")).with_fields(BTreeMap::from(
                [(key.to_string(), "must be an integer".to_string())],
            ))
        }),
    }
}

async fn load_job(
    State(app): State<Arc<App>>,
    Path(id): Path<String>,
    Query(params): Query<HashMap<String, String>>,
) -> ApiResult<Json<ActivityCollection>> {
    let count = page_param(&params, "count", DEFAULT_PAGE_SIZE as i64)?;
    let offset = page_param(&params, "offset", 0)?;
    if count < 1 {
        return Err(ApiError::bad_request("count must be >= 1")
            .with_fields(BTreeMap::from([("count".into(), "must be >= 1".into())])));
    }
    if offset < 0 {
        return Err(ApiError::bad_request("offset must be >= 0")
            .with_fields(BTreeMap::from([("offset".into(), "must be >= 0".into())])));
    }
    let page = blocking(move || {
        app.service
            .store()
            .load_page(&id, count as usize, offset as usize)
    })
    .await??;
    Ok(Json(page))
}

async fn job_status(
    State(app): State<Arc<App>>,
    Path(id): Path<String>,
) -> ApiResult<Json<JobRecord>> {
    Ok(Json(app.service.job_status(&id)?))
}

async fn stop_job(
    State(app): State<Arc<App>>,
    Path(id): Path<String>,
) -> ApiResult<Json<JobRecord>> {
    Ok(Json(app.service.stop_crawl(&id)?))
}

async fn delete_job(State(app): State<Arc<App>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let removed = blocking(move || app.service.store().delete_job(&id)).await??;
    Ok(Json(json!({ "removedActivities": removed })))
}

async fn search(
    State(app): State<Arc<App>>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Response> {
    let payload = json_body(&headers, &body)?;
    let target = payload
        .get("gathering")
        .filter(|g| g.is_object())
        .unwrap_or(&payload);
    let req = SearchRequest::from_json(target)?;
    let profile = match payload.get("weightProfile") {
        None | Some(Value::Null) => None,
        Some(v) => {
            let p: WeightProfile = serde_json::from_value(v.clone()).map_err(|e| {
                ApiError::bad_request(format!("weightProfile: {e}"))
                    .with_fields(BTreeMap::from([("weightProfile".into(), e.to_string())]))
            })?;
            p.validate().map_err(GatherError::from)?;
            Some(p)
        }
    };
    let outcome = {
        let app = app.clone();
        let req = req.clone();
        blocking(move || app.service.run_search(&req)).await??
    };
    let collection = match profile {
        Some(p) => {
            let dnf = req.plan_query()?;
            ActivityCollection::new(rank_collection(outcome.collection.items(), &p, &dnf)?)
        }
        None => outcome.collection.clone(),
    };
    let mut resp = Json(collection).into_response();
    let h = resp.headers_mut();
    let flags = outcome
        .platforms
        .iter()
        .map(|(p, r)| format!("{p}={}", r.truncated))
        .collect::<Vec<_>>()
        .join(", ");
    let units = outcome
        .platforms
        .iter()
        .map(|(p, r)| format!("{p}={}", r.request_units))
        .collect::<Vec<_>>()
        .join(", ");
    for (name, value) in [
        (HEADER_JOB_ID, outcome.job_id.clone()),
        (HEADER_TRUNCATED, flags),
        (HEADER_REQUEST_UNITS, units),
    ] {
        if let Ok(v) = HeaderValue::from_str(&value) {
            h.insert(HeaderName::from_static(name), v);
        }
    }
    Ok(resp)
}

async fn enrich(
    State(app): State<Arc<App>>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Json<Vec<Activity>>> {
    let payload = json_body(&headers, &body)?;
    let Value::Array(items) = payload else {
        return Err(ApiError::bad_request(
            "body must be a JSON array of activities",
        ));
    };
    let mut parsed = Vec::with_capacity(items.len());
    let mut errors = BTreeMap::new();
    for (i, item) in items.into_iter().enumerate() {
        match activity_from_value(item) {
            Ok(a) => match validate_activity(&a) {
                Ok(()) => parsed.push(a),
                Err(violations) => {
                    let msg = violations
                        .iter()
                        .map(|v| format!("{}: {}", v.field, v.message))
                        .collect::<Vec<_>>()
                        .join("; ");
                    errors.insert(i.to_string(), msg);
                }
            },
            Err(e) => {
                errors.insert(i.to_string(), e.to_string());
            }
        }
    }
    if !errors.is_empty() {
        let first = errors.keys().next().cloned().unwrap_or_default();
        return Err(
            ApiError::bad_request(format!("invalid activity at index {first}")).with_fields(errors),
        );
    }
    let enriched = blocking(move || {
        parsed
            .iter()
            .map(|a| app.enricher.enrich_activity(a))
            .collect::<Vec<_>>()
    })
    .await?;
    Ok(Json(enriched))
}
