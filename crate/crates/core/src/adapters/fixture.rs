use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use parking_lot::RwLock;
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::schema::{self, NativeItem};
use super::{AdapterError, Page, PageCursor, PlatformAdapter};
use crate::activity::Platform;
use crate::query::{
    parse_query, MatchText, NativeRequest, Operator, PlatformCapabilities, QueryAst, RequestKind,
};

/// Deterministic stand-in for a platform search API, answering native
/// requests from an in-memory corpus under the platform's own semantics.
pub struct FixtureAdapter {
    platform: Platform,
    caps: PlatformCapabilities,
    items: RwLock<Vec<NativeItem>>,
}

impl FixtureAdapter {
    pub fn new(platform: Platform, caps: PlatformCapabilities, items: Vec<NativeItem>) -> Self {
        Self {
            platform,
            caps,
            items: RwLock::new(items),
        }
    }

    /// Loads one native record per line; blank lines are ignored.
    pub fn load_jsonl(
        platform: Platform,
        caps: PlatformCapabilities,
        path: &Path,
    ) -> Result<Self, AdapterError> {
        let file = File::open(path)
            .map_err(|e| AdapterError::Fixture(format!("{}: {e}", path.display())))?;
        let mut items = Vec::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line =
                line.map_err(|e| AdapterError::Fixture(format!("{}: {e}", path.display())))?;
            if line.trim().is_empty() {
                continue;
            }
            let v: Value = serde_json::from_str(&line)
                .map_err(|e| AdapterError::Fixture(format!("{}:{}: {e}", path.display(), n + 1)))?;
            items.push(NativeItem(v));
        }
        Ok(Self::new(platform, caps, items))
    }

    pub fn len(&self) -> usize {
        self.items.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.read().is_empty()
    }

    /// Appends records, as if new posts were published.
    pub fn publish(&self, more: impl IntoIterator<Item = NativeItem>) {
        self.items.write().extend(more);
    }

    pub fn items(&self) -> Vec<NativeItem> {
        self.items.read().clone()
    }

    fn check_request(&self, req: &NativeRequest) -> Result<Option<QueryAst>, AdapterError> {
        let violation = |msg: String| {
            Err(AdapterError::CapabilityViolation {
                platform: self.platform,
                message: msg,
            })
        };
        if req.geo.is_some() && !self.caps.native_geo_filter {
            return violation("geo filter is not supported natively".into());
        }
        if !req.time.is_unbounded() && !self.caps.native_time_filter {
            return violation("time filter is not supported natively".into());
        }
        match req.kind {
            RequestKind::Tag => {
                if self.caps.keyword_search {
                    return violation("tag request sent to a keyword platform".into());
                }
                if crate::query::word_tokens(&req.keyword_string).len() != 1 {
                    return violation(format!("{:?} is not a single tag", req.keyword_string));
                }
                Ok(None)
            }
            RequestKind::Keyword => {
                if !self.caps.keyword_search {
                    return violation("keyword search is not available".into());
                }
                let ast = parse_query(&req.keyword_string).map_err(|e| {
                    AdapterError::CapabilityViolation {
                        platform: self.platform,
                        message: format!("unparsable native query: {e}"),
                    }
                })?;
                if let Some(op) = first_unsupported(&ast, &self.caps) {
                    return violation(format!("operator {op:?} is not supported"));
                }
                Ok(Some(ast))
            }
        }
    }

    fn matches(&self, item: &NativeItem, req: &NativeRequest, ast: Option<&QueryAst>) -> bool {
        if !req.time.is_unbounded() {
            match schema::native_created(self.platform, item) {
                Some(t) if req.time.contains(&t) => {}
                _ => return false,
            }
        }
        if let Some(circle) = &req.geo {
            match schema::native_location(self.platform, item) {
                Some(p) if circle.contains(p.latitude, p.longitude) => {}
                _ => return false,
            }
        }
        match ast {
            Some(ast) => MatchText::new(&schema::native_text(self.platform, item)).matches(ast),
            None => {
                let tag = req.keyword_string.trim_start_matches('#').to_lowercase();
                schema::native_tags(self.platform, item).contains(&tag)
            }
        }
    }
}

fn first_unsupported(ast: &QueryAst, caps: &PlatformCapabilities) -> Option<Operator> {
    let (op, children): (Option<Operator>, Vec<&QueryAst>) = match ast {
        QueryAst::Term(_) => (None, vec![]),
        QueryAst::Phrase(_) => (Some(Operator::Phrase), vec![]),
        QueryAst::And(cs) => (Some(Operator::And), cs.iter().collect()),
        QueryAst::Or(cs) => (Some(Operator::Or), cs.iter().collect()),
        QueryAst::Not(c) => (Some(Operator::Not), vec![c.as_ref()]),
    };
    if let Some(op) = op.filter(|op| !caps.supports(*op)) {
        return Some(op);
    }
    children
        .into_iter()
        .find_map(|c| first_unsupported(c, caps))
}

fn fingerprint(req: &NativeRequest) -> String {
    let bytes = serde_json::to_vec(req).expect("request serializes");
    hex::encode(&Sha256::digest(&bytes)[..8])
}

impl PlatformAdapter for FixtureAdapter {
    fn platform(&self) -> Platform {
        self.platform
    }

    fn capabilities(&self) -> &PlatformCapabilities {
        &self.caps
    }

    fn fetch_page(
        &self,
        req: &NativeRequest,
        cursor: Option<&PageCursor>,
    ) -> Result<Page, AdapterError> {
        let ast = self.check_request(req)?;
        let fp = fingerprint(req);
        let offset = match cursor {
            None => 0,
            Some(c) => {
                let (cfp, off) =
                    c.0.split_once('.')
                        .ok_or_else(|| AdapterError::UnknownCursor(c.0.clone()))?;
                if cfp != fp {
                    return Err(AdapterError::UnknownCursor(c.0.clone()));
                }
                off.parse::<usize>()
                    .map_err(|_| AdapterError::UnknownCursor(c.0.clone()))?
            }
        };
        let limit = self.caps.max_results_per_request;
        let items = self.items.read();
        let mut matched = items
            .iter()
            .filter(|it| self.matches(it, req, ast.as_ref()))
            .skip(offset);
        let page: Vec<NativeItem> = matched.by_ref().take(limit).cloned().collect();
        let more = matched.next().is_some();
        let next = more.then(|| PageCursor(format!("{fp}.{}", offset + page.len())));
        Ok(Page { items: page, next })
    }
}
