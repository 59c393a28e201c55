//! One-time searches and interval crawl jobs.
//!
//! Every gathering round runs the same per-platform pipeline: rewrite the
//! query for the platform's capabilities, fetch every page of every native
//! request under the platform's rate budget, map, apply the residual
//! post-filter, enrich, then insert with deduplication.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::activity::{Activity, ActivityCollection, Platform};
use crate::adapters::{PlatformAdapter, QuotaLedger};
use crate::clock::Clock;
use crate::enrichment::Enricher;
use crate::geo::{GeoCircle, TimeWindow};
use crate::quality::{rank_activities, CorpusContext, QualityError, QueryContext, WeightProfile};
use crate::query::{
    estimate_cost, parse_query, rewrite_for_platform, to_dnf, Dnf, GatherScope,
    PlatformCapabilities, RewriteError, RewritePlan,
};
use crate::storage::{JobKind, JobRecord, JobState, Store, StoreError};

/// Radius used when a request has a center but no radius.
pub const DEFAULT_RADIUS_KM: f64 = 10.0;
pub const MIN_WAIT_MS: u64 = 1000;
/// Extension member carrying the quality score on ranked results.
pub const QUALITY_SCORE_KEY: &str = "qualityScore";

pub type FieldErrors = BTreeMap<String, String>;

#[derive(Debug, Error)]
pub enum GatherError {
    #[error("invalid request: {message}")]
    Invalid {
        message: String,
        fields: FieldErrors,
    },
    #[error("all platforms are quota-exhausted, retry in {retry_after_secs}s")]
    QuotaExhausted { retry_after_secs: i64 },
    #[error("job {0} not found")]
    NotFound(String),
    #[error("job {job_id} is not due until {due}")]
    NotDue { job_id: String, due: DateTime<Utc> },
    #[error(transparent)]
    Storage(StoreError),
    #[error(transparent)]
    Quality(#[from] QualityError),
}

impl GatherError {
    fn invalid(message: impl Into<String>) -> Self {
        GatherError::Invalid {
            message: message.into(),
            fields: FieldErrors::new(),
        }
    }

    fn field(field: &str, message: impl Into<String>) -> Self {
        let message = message.into();
        GatherError::Invalid {
            message: format!("{field}: {message}"),
            fields: FieldErrors::from([(field.to_string(), message)]),
        }
    }
}

impl From<StoreError> for GatherError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::JobNotFound(id) => GatherError::NotFound(id),
            other => GatherError::Storage(other),
        }
    }
}

/// Parameters shared by searches and crawl jobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchRequest {
    pub keyword: String,
    pub platforms: Vec<Platform>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub since: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub until: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub longitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

impl SearchRequest {
    pub fn new(keyword: impl Into<String>, platforms: impl IntoIterator<Item = Platform>) -> Self {
        Self {
            keyword: keyword.into(),
            platforms: platforms.into_iter().collect(),
            since: None,
            until: None,
            latitude: None,
            longitude: None,
            radius: None,
        }
    }

    /// Field-level parsing of a JSON request body. Unknown members are ignored.
    pub fn from_json(v: &Value) -> Result<Self, GatherError> {
        let mut f = FieldReader::new(v)?;
        let req = f.search_request();
        f.finish()?;
        req.validate()?;
        Ok(req)
    }

    pub fn validate(&self) -> Result<(), GatherError> {
        let mut errs = FieldErrors::new();
        if self.keyword.trim().is_empty() {
            errs.insert("keyword".into(), "required".into());
        }
        if self.platforms.is_empty() {
            errs.insert(
                "platforms".into(),
                "at least one platform is required".into(),
            );
        }
        if let (Some(s), Some(u)) = (self.since, self.until) {
            if s > u {
                errs.insert("until".into(), "must not be before since".into());
            }
        }
        match (self.latitude, self.longitude) {
            (Some(lat), Some(lon)) => {
                if !(-90.0..=90.0).contains(&lat) {
                    errs.insert("latitude".into(), "out of range".into());
                }
                if !(-180.0..=180.0).contains(&lon) {
                    errs.insert("longitude".into(), "out of range".into());
                }
            }
            (None, None) => {
                if self.radius.is_some() {
                    errs.insert("radius".into(), "requires latitude and longitude".into());
                }
            }
            (Some(_), None) => {
                errs.insert("longitude".into(), "required with latitude".into());
            }
            (None, Some(_)) => {
                errs.insert("latitude".into(), "required with longitude".into());
            }
        }
        if let Some(r) = self.radius {
            if !(r > 0.0 && r.is_finite()) {
                errs.insert("radius".into(), "must be positive".into());
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(invalid_fields(errs))
        }
    }

    pub fn geo(&self) -> Option<GeoCircle> {
        Some(GeoCircle {
            latitude: self.latitude?,
            longitude: self.longitude?,
            radius_km: self.radius.unwrap_or(DEFAULT_RADIUS_KM),
        })
    }

    pub fn scope(&self) -> GatherScope {
        GatherScope {
            geo: self.geo(),
            time: TimeWindow::new(self.since, self.until),
        }
    }

    /// Parses the keyword into its DNF.
    pub fn plan_query(&self) -> Result<Dnf, GatherError> {
        let ast =
            parse_query(&self.keyword).map_err(|e| GatherError::field("keyword", e.to_string()))?;
        to_dnf(&ast).map_err(|e| GatherError::field("keyword", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CrawlJobSpec {
    #[serde(flatten)]
    pub request: SearchRequest,
    /// Milliseconds between gathering rounds.
    pub wait_between_requests: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<i64>,
}

impl CrawlJobSpec {
    pub fn from_json(v: &Value) -> Result<Self, GatherError> {
        let mut f = FieldReader::new(v)?;
        let request = f.search_request();
        let wait = f.u64("waitBetweenRequests", true);
        let start = f.epoch("start");
        let end = f.epoch("end");
        f.finish()?;
        let spec = CrawlJobSpec {
            request,
            wait_between_requests: wait.expect("required field"),
            start,
            end,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), GatherError> {
        let mut errs = match self.request.validate() {
            Ok(()) => FieldErrors::new(),
            Err(GatherError::Invalid { fields, .. }) => fields,
            Err(e) => return Err(e),
        };
        if self.wait_between_requests < MIN_WAIT_MS {
            errs.insert(
                "waitBetweenRequests".into(),
                format!("below minimum interval of {MIN_WAIT_MS} ms"),
            );
        }
        if let (Some(s), Some(e)) = (self.start, self.end) {
            if e <= s {
                errs.insert("end".into(), "must be after start".into());
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(invalid_fields(errs))
        }
    }

    fn wait(&self) -> Duration {
        Duration::milliseconds(self.wait_between_requests as i64)
    }
}

fn invalid_fields(fields: FieldErrors) -> GatherError {
    let message = fields
        .iter()
        .map(|(k, v)| format!("{k}: {v}"))
        .collect::<Vec<_>>()
        .join("; ");
    GatherError::Invalid { message, fields }
}

/// Collects per-field errors while reading a loosely typed JSON object.
struct FieldReader<'a> {
    obj: &'a Map<String, Value>,
    errs: FieldErrors,
}

impl<'a> FieldReader<'a> {
    fn new(v: &'a Value) -> Result<Self, GatherError> {
        let obj = v
            .as_object()
            .ok_or_else(|| GatherError::invalid("request body must be a JSON object"))?;
        Ok(Self {
            obj,
            errs: FieldErrors::new(),
        })
    }

    fn present(&self, key: &str) -> Option<&'a Value> {
        self.obj.get(key).filter(|v| !v.is_null())
    }

    fn fail<T>(&mut self, key: &str, msg: impl Into<String>) -> Option<T> {
        self.errs.insert(key.to_string(), msg.into());
        None
    }

    fn string(&mut self, key: &str) -> Option<String> {
        match self.present(key) {
            None => self.fail(key, "required"),
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => self.fail(key, "must be a string"),
        }
    }

    fn platforms(&mut self, key: &str) -> Option<Vec<Platform>> {
        let list = match self.present(key) {
            None => return self.fail(key, "required"),
            Some(Value::Array(a)) => a,
            // A single comma-separated string is accepted as well.
            Some(Value::String(s)) => {
                return s
                    .split(',')
                    .map(|p| p.trim().parse::<Platform>())
                    .collect::<Result<Vec<_>, _>>()
                    .or_else(|e| self.fail(key, e.to_string()).ok_or(()))
                    .ok();
            }
            Some(_) => return self.fail(key, "must be a list of platforms"),
        };
        let mut out = Vec::new();
        for p in list {
            match p.as_str().map(str::parse::<Platform>) {
                Some(Ok(p)) if !out.contains(&p) => out.push(p),
                Some(Ok(_)) => {}
                Some(Err(e)) => return self.fail(key, e.to_string()),
                None => return self.fail(key, "must be a list of platforms"),
            }
        }
        Some(out)
    }

    /// Unix seconds as a number or numeric string.
    fn epoch(&mut self, key: &str) -> Option<i64> {
        match self.present(key)? {
            Value::Number(n) => n
                .as_i64()
                .or_else(|| self.fail(key, "must be an integer Unix time")),
            Value::String(s) => s
                .trim()
                .parse()
                .ok()
                .or_else(|| self.fail(key, "must be an integer Unix time")),
            _ => self.fail(key, "must be an integer Unix time"),
        }
    }

    fn f64(&mut self, key: &str) -> Option<f64> {
        match self.present(key)? {
            Value::Number(n) => n.as_f64(),
            Value::String(s) => s
                .trim()
                .parse()
                .ok()
                .or_else(|| self.fail(key, "must be a number")),
            _ => self.fail(key, "must be a number"),
        }
    }

    fn u64(&mut self, key: &str, required: bool) -> Option<u64> {
        match self.present(key) {
            None if required => self.fail(key, "required"),
            None => None,
            Some(Value::Number(n)) => n
                .as_u64()
                .or_else(|| self.fail(key, "must be a non-negative integer")),
            Some(Value::String(s)) => s
                .trim()
                .parse()
                .ok()
                .or_else(|| self.fail(key, "must be a non-negative integer")),
            Some(_) => self.fail(key, "must be a non-negative integer"),
        }
    }

    fn search_request(&mut self) -> SearchRequest {
        let keyword = self.string("keyword");
        let platforms = self.platforms("platforms");
        SearchRequest {
            keyword: keyword.unwrap_or_default(),
            platforms: platforms.unwrap_or_default(),
            since: self.epoch("since"),
            until: self.epoch("until"),
            latitude: self.f64("latitude"),
            longitude: self.f64("longitude"),
            radius: self.f64("radius"),
        }
    }

    fn finish(self) -> Result<(), GatherError> {
        if self.errs.is_empty() {
            Ok(())
        } else {
            Err(invalid_fields(self.errs))
        }
    }
}

/// Result of one platform's share of a gathering round.
#[derive(Debug, Clone, Default)]
pub struct PlatformRun {
    pub activities: Vec<Activity>,
    pub request_units: u64,
    /// The platform's budget ran out before all pages were fetched.
    pub truncated: bool,
    /// Native items that could not be mapped.
    pub unmapped: u64,
    pub diagnostics: Vec<String>,
    pub retry_after: Option<Duration>,
    fetched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PlatformReport {
    pub request_units: u64,
    pub truncated: bool,
    pub returned: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub job_id: String,
    pub collection: ActivityCollection,
    pub platforms: BTreeMap<Platform, PlatformReport>,
}

impl SearchOutcome {
    pub fn truncated(&self) -> bool {
        self.platforms.values().any(|r| r.truncated)
    }

    pub fn request_units(&self, p: Platform) -> u64 {
        self.platforms.get(&p).map_or(0, |r| r.request_units)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickReport {
    pub record: JobRecord,
    pub inserted: u64,
    pub duplicates: u64,
    /// False when the tick found the job finished and fetched nothing.
    pub ran: bool,
}

pub struct GatheringService {
    adapters: BTreeMap<Platform, Arc<dyn PlatformAdapter>>,
    ledger: Arc<QuotaLedger>,
    store: Arc<Store>,
    enricher: Arc<Enricher>,
    clock: Arc<dyn Clock>,
    nonce: AtomicU64,
    tick_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl GatheringService {
    pub fn new(
        adapters: impl IntoIterator<Item = Arc<dyn PlatformAdapter>>,
        ledger: Arc<QuotaLedger>,
        store: Arc<Store>,
        enricher: Arc<Enricher>,
        clock: Arc<dyn Clock>,
    ) -> Self {
        Self {
            adapters: adapters.into_iter().map(|a| (a.platform(), a)).collect(),
            ledger,
            store,
            enricher,
            clock,
            nonce: AtomicU64::new(0),
            tick_locks: Mutex::new(HashMap::new()),
        }
    }

    pub fn store(&self) -> &Arc<Store> {
        &self.store
    }

    pub fn ledger(&self) -> &Arc<QuotaLedger> {
        &self.ledger
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    pub fn adapter(&self, p: Platform) -> Option<&Arc<dyn PlatformAdapter>> {
        self.adapters.get(&p)
    }

    fn new_job_id(&self, spec: &Value) -> String {
        let nonce = self.nonce.fetch_add(1, Ordering::Relaxed);
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(spec).expect("spec serializes"));
        h.update(
            self.clock
                .now()
                .timestamp_nanos_opt()
                .unwrap_or_default()
                .to_be_bytes(),
        );
        h.update(nonce.to_be_bytes());
        hex::encode(h.finalize())[..40].to_string()
    }

    /// One platform's pipeline. Never fails: problems become diagnostics.
    pub fn gather_platform(
        &self,
        platform: Platform,
        dnf: &Dnf,
        scope: &GatherScope,
    ) -> PlatformRun {
        let mut run = PlatformRun::default();
        if dnf.is_empty() {
            return run;
        }
        let Some(adapter) = self.adapters.get(&platform) else {
            run.diagnostics
                .push(format!("{platform}: no adapter configured, skipped"));
            return run;
        };
        let plan = match rewrite_for_platform(dnf, adapter.capabilities(), scope) {
            Ok(plan) => plan,
            Err(e) => {
                run.diagnostics
                    .push(format!("{platform}: unsupported query, skipped: {e}"));
                return run;
            }
        };
        let mut seen = HashSet::new();
        'requests: for req in &plan.native_requests {
            let mut cursor = None;
            loop {
                if let Err(q) = self.ledger.consume(platform, 1) {
                    run.truncated = true;
                    run.retry_after = Some(q.retry_after);
                    run.diagnostics.push(format!("{platform}: {q}"));
                    break 'requests;
                }
                run.request_units += 1;
                run.fetched = true;
                let page = match adapter.fetch_page(req, cursor.as_ref()) {
                    Ok(page) => page,
                    Err(e) => {
                        run.diagnostics.push(format!("{platform}: {e}"));
                        break 'requests;
                    }
                };
                for item in &page.items {
                    let a = match adapter.map_native(item) {
                        Ok(a) => a,
                        Err(e) => {
                            run.unmapped += 1;
                            tracing::debug!(%platform, error = %e, "unmappable item");
                            continue;
                        }
                    };
                    if !plan.post_filter.accepts(
                        &a.object.content,
                        &a.object.start_time,
                        a.object.location.as_ref(),
                    ) {
                        continue;
                    }
                    if seen.insert(a.object.id.clone()) {
                        run.activities.push(self.enricher.enrich_activity(&a));
                    }
                }
                match page.next {
                    Some(next) => cursor = Some(next),
                    None => break,
                }
            }
        }
        run
    }

    fn gather_all(
        &self,
        req: &SearchRequest,
        dnf: &Dnf,
        scope: &GatherScope,
    ) -> BTreeMap<Platform, PlatformRun> {
        req.platforms
            .iter()
            .map(|&p| (p, self.gather_platform(p, dnf, scope)))
            .collect()
    }

    pub fn run_search(&self, req: &SearchRequest) -> Result<SearchOutcome, GatherError> {
        req.validate()?;
        let dnf = req.plan_query()?;
        let runs = self.gather_all(req, &dnf, &req.scope());
        let exhausted = runs.values().filter(|r| r.truncated).count();
        if exhausted > 0 && runs.values().all(|r| !r.fetched) {
            let retry_after_secs = runs
                .values()
                .filter_map(|r| r.retry_after)
                .map(|d| d.num_seconds())
                .min()
                .unwrap_or(0);
            return Err(GatherError::QuotaExhausted { retry_after_secs });
        }

        let spec = serde_json::to_value(req).expect("request serializes");
        let job_id = self.new_job_id(&spec);
        let mut record = JobRecord::new(&job_id, JobKind::Search, spec, self.clock.now());
        record.state = JobState::Running;
        self.store.create_job(record)?;
        let batch: Vec<Activity> = runs
            .values()
            .flat_map(|r| r.activities.iter().cloned())
            .collect();
        if let Err(e) = self.store.insert_activities(&job_id, &batch) {
            let msg = e.to_string();
            let _ = self.store.update_job(&job_id, |r| {
                r.state = JobState::Failed;
                r.push_diagnostic(msg);
            });
            return Err(e.into());
        }
        let now = self.clock.now();
        self.store.update_job(&job_id, |r| {
            apply_runs(r, &runs);
            r.counters.rounds += 1;
            r.last_tick_at = Some(now);
            r.state = JobState::Completed;
        })?;
        let collection = self.store.load_all(&job_id)?;
        let platforms = runs
            .into_iter()
            .map(|(p, r)| {
                (
                    p,
                    PlatformReport {
                        request_units: r.request_units,
                        truncated: r.truncated,
                        returned: r.activities.len(),
                        diagnostics: r.diagnostics,
                    },
                )
            })
            .collect();
        Ok(SearchOutcome {
            job_id,
            collection,
            platforms,
        })
    }

    /// Creates a crawl job. Ticks are driven by the caller (see
    /// [`GatheringService::next_due`] and [`GatheringService::crawl_tick`]).
    pub fn start_crawl(&self, spec: &CrawlJobSpec) -> Result<String, GatherError> {
        spec.validate()?;
        spec.request.plan_query()?;
        let value = serde_json::to_value(spec).expect("spec serializes");
        let job_id = self.new_job_id(&value);
        let now = self.clock.now();
        let mut record = JobRecord::new(&job_id, JobKind::Crawl, value, now);
        if spec.start.is_none_or(|s| s <= now.timestamp()) {
            record.state = JobState::Running;
        }
        self.store.create_job(record)?;
        Ok(job_id)
    }

    fn crawl_spec(record: &JobRecord) -> Result<CrawlJobSpec, GatherError> {
        serde_json::from_value(record.spec.clone()).map_err(|e| {
            GatherError::invalid(format!("job {} has an unreadable spec: {e}", record.job_id))
        })
    }

    /// When the job's next tick may run; `None` once the job is finished.
    pub fn next_due(&self, job_id: &str) -> Result<Option<DateTime<Utc>>, GatherError> {
        let record = self.store.job(job_id)?;
        if record.state.is_terminal() || record.kind != JobKind::Crawl {
            return Ok(None);
        }
        let spec = Self::crawl_spec(&record)?;
        let start = spec
            .start
            .and_then(|s| DateTime::from_timestamp(s, 0))
            .unwrap_or(record.created_at);
        Ok(Some(match record.last_tick_at {
            Some(last) => last + spec.wait(),
            None => start,
        }))
    }

    fn tick_lock(&self, job_id: &str) -> Arc<Mutex<()>> {
        self.tick_locks
            .lock()
            .entry(job_id.to_string())
            .or_default()
            .clone()
    }

    /// Runs one gathering round of a crawl job.
    pub fn crawl_tick(&self, job_id: &str) -> Result<TickReport, GatherError> {
        let lock = self.tick_lock(job_id);
        let _guard = lock.lock();
        let record = self.store.job(job_id)?;
        let idle = |record| TickReport {
            record,
            inserted: 0,
            duplicates: 0,
            ran: false,
        };
        if record.state.is_terminal() {
            return Ok(idle(record));
        }
        if record.kind != JobKind::Crawl {
            return Err(GatherError::invalid(format!(
                "job {job_id} is not a crawl job"
            )));
        }
        let spec = Self::crawl_spec(&record)?;
        let now = self.clock.now();
        if spec.end.is_some_and(|end| now.timestamp() > end) {
            let record = self.store.update_job(job_id, |r| {
                if !r.state.is_terminal() {
                    r.state = if r.state == JobState::Pending {
                        JobState::Cancelled
                    } else {
                        JobState::Completed
                    };
                    if r.state == JobState::Cancelled {
                        r.push_diagnostic("end passed before the job started");
                    }
                }
            })?;
            return Ok(idle(record));
        }
        let due = self.next_due(job_id)?.unwrap_or(now);
        if now < due {
            return Err(GatherError::NotDue {
                job_id: job_id.to_string(),
                due,
            });
        }
        if record.state == JobState::Pending {
            self.store.update_job(job_id, |r| {
                if r.state == JobState::Pending {
                    r.state = JobState::Running;
                }
            })?;
        }

        // Incremental window: items newer than the newest stored one, less
        // one interval of overlap so nothing at the boundary is lost.
        let mut req = spec.request.clone();
        if let Some(newest) = self.store.newest_start_time(job_id)? {
            let overlap = (spec.wait_between_requests as i64 + 999) / 1000;
            let floor = newest.timestamp() - overlap;
            req.since = Some(req.since.map_or(floor, |s| s.max(floor)));
        }
        let dnf = req.plan_query()?;
        let runs = self.gather_all(&req, &dnf, &req.scope());
        let batch: Vec<Activity> = runs
            .values()
            .flat_map(|r| r.activities.iter().cloned())
            .collect();
        let outcome = match self.store.insert_activities(job_id, &batch) {
            Ok(o) => o,
            Err(e) => {
                let msg = e.to_string();
                let _ = self.store.update_job(job_id, |r| {
                    r.state = JobState::Failed;
                    r.push_diagnostic(msg);
                });
                return Err(e.into());
            }
        };
        let record = self.store.update_job(job_id, |r| {
            apply_runs(r, &runs);
            r.counters.rounds += 1;
            if runs.values().any(|run| run.truncated) {
                r.counters.quota_deferrals += 1;
            }
            r.last_tick_at = Some(now);
        })?;
        Ok(TickReport {
            record,
            inserted: outcome.inserted,
            duplicates: outcome.duplicates,
            ran: true,
        })
    }

    /// Cancels a pending or running job; finished jobs are returned as is.
    pub fn stop_crawl(&self, job_id: &str) -> Result<JobRecord, GatherError> {
        Ok(self.store.update_job(job_id, |r| {
            if !r.state.is_terminal() {
                r.state = JobState::Cancelled;
            }
        })?)
    }

    pub fn job_status(&self, job_id: &str) -> Result<JobRecord, GatherError> {
        Ok(self.store.job(job_id)?)
    }

    pub fn list_jobs(&self) -> Vec<JobRecord> {
        self.store.jobs()
    }

    /// Per-platform plans for a query, without fetching anything.
    pub fn explain(
        &self,
        req: &SearchRequest,
        pages: usize,
    ) -> Result<BTreeMap<Platform, Explained>, GatherError> {
        let dnf = req.plan_query()?;
        let scope = req.scope();
        Ok(req
            .platforms
            .iter()
            .map(|&p| {
                let caps = self
                    .adapters
                    .get(&p)
                    .map(|a| a.capabilities().clone())
                    .unwrap_or_else(|| crate::adapters::default_capabilities(p));
                (p, explain_plan(&dnf, &caps, &scope, pages))
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Explained {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<RewritePlan>,
    pub estimated_cost: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn explain_plan(
    dnf: &Dnf,
    caps: &PlatformCapabilities,
    scope: &GatherScope,
    pages: usize,
) -> Explained {
    if dnf.is_empty() {
        return Explained {
            plan: None,
            estimated_cost: 0,
            error: Some("query is unsatisfiable, nothing to fetch".into()),
        };
    }
    match rewrite_for_platform(dnf, caps, scope) {
        Ok(plan) => Explained {
            estimated_cost: estimate_cost(&plan, pages.max(1)),
            plan: Some(plan),
            error: None,
        },
        Err(RewriteError::Capability(m)) | Err(RewriteError::InvalidInput(m)) => Explained {
            plan: None,
            estimated_cost: 0,
            error: Some(m),
        },
    }
}

fn apply_runs(r: &mut JobRecord, runs: &BTreeMap<Platform, PlatformRun>) {
    for (p, run) in runs {
        *r.counters.request_units_used.entry(*p).or_default() += run.request_units;
        r.counters.skipped += run.unmapped;
        for d in &run.diagnostics {
            r.push_diagnostic(d.clone());
        }
    }
}

/// Orders activities by quality score and stores each score in the
/// activity's `qualityScore` extension member.
pub fn rank_collection(
    items: &[Activity],
    profile: &WeightProfile,
    dnf: &Dnf,
) -> Result<Vec<Activity>, GatherError> {
    profile.validate()?;
    if items.is_empty() {
        return Ok(Vec::new());
    }
    let q = QueryContext::from_dnf(dnf);
    let ctx = CorpusContext::build(items, &q)?;
    Ok(rank_activities(items, profile, &ctx, &q)?
        .into_iter()
        .map(|(mut a, score)| {
            a.extensions
                .insert(QUALITY_SCORE_KEY.to_string(), Value::from(score));
            a
        })
        .collect())
}
