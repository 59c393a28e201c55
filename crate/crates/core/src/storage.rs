//! Activity store with a compound unique key on `(platform, native_id)`.
//!
//! Activities are shared between jobs: a job holds membership links, and an
//! activity is dropped once no job links to it. Every job lists its
//! activities in one global order, start time ascending then canonical id
//! ascending, which makes count/offset paging deterministic.
//!
//! The key index stores 128-bit digests of the canonical id rather than the
//! ids themselves, keeping it small and fixed-size per entry. With a data
//! directory the store appends every mutation to a JSON-lines log and
//! replays it on open; [`Store::compact`] rewrites the log from live state.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, FixedOffset, Utc};
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::activity::{Activity, ActivityCollection, Platform};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("job {0} not found")]
    JobNotFound(String),
    #[error("job {0} already exists")]
    JobExists(String),
    #[error("job {0} is running, stop first")]
    JobRunning(String),
    #[error("invalid job update: {0}")]
    InvalidUpdate(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("activity {0:?} has no valid platform id")]
    InvalidActivity(String),
    #[error("storage I/O failure: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt storage log at line {line}: {message}")]
    Corrupt { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobKind {
    Search,
    Crawl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Pending,
    Running,
    Completed,
    Failed,
    Cancelled,
}

impl JobState {
    pub fn is_terminal(self) -> bool {
        matches!(
            self,
            JobState::Completed | JobState::Failed | JobState::Cancelled
        )
    }

    pub fn can_become(self, next: JobState) -> bool {
        use JobState::*;
        self == next
            || matches!(
                (self, next),
                (Pending, Running)
                    | (Pending, Cancelled)
                    | (Pending, Failed)
                    | (Running, Completed)
                    | (Running, Failed)
                    | (Running, Cancelled)
            )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct JobCounters {
    /// Σ(inserted + duplicates) over all batches.
    pub gathered: u64,
    pub inserted: u64,
    pub deduplicated: u64,
    /// Items dropped because they could not be mapped.
    pub skipped: u64,
    pub rounds: u64,
    pub quota_deferrals: u64,
    pub request_units_used: BTreeMap<Platform, u64>,
}

impl JobCounters {
    fn dominates(&self, old: &JobCounters) -> bool {
        self.gathered >= old.gathered
            && self.inserted >= old.inserted
            && self.deduplicated >= old.deduplicated
            && self.skipped >= old.skipped
            && self.rounds >= old.rounds
            && self.quota_deferrals >= old.quota_deferrals
            && old
                .request_units_used
                .iter()
                .all(|(p, n)| self.request_units_used.get(p).copied().unwrap_or(0) >= *n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct JobRecord {
    pub job_id: String,
    pub kind: JobKind,
    /// The request that created the job, as submitted.
    pub spec: serde_json::Value,
    pub state: JobState,
    pub created_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_tick_at: Option<DateTime<Utc>>,
    pub counters: JobCounters,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl JobRecord {
    pub fn new(
        job_id: impl Into<String>,
        kind: JobKind,
        spec: serde_json::Value,
        created_at: DateTime<Utc>,
    ) -> Self {
        Self {
            job_id: job_id.into(),
            kind,
            spec,
            state: JobState::Pending,
            created_at,
            last_tick_at: None,
            counters: JobCounters::default(),
            diagnostics: Vec::new(),
        }
    }

    /// Keeps the most recent diagnostics only.
    pub fn push_diagnostic(&mut self, msg: impl Into<String>) {
        const KEEP: usize = 50;
        self.diagnostics.push(msg.into());
        if self.diagnostics.len() > KEEP {
            let drop = self.diagnostics.len() - KEEP;
            self.diagnostics.drain(..drop);
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct InsertOutcome {
    pub inserted: u64,
    pub duplicates: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadByIds {
    pub found: ActivityCollection,
    pub missing: Vec<String>,
}

type KeyDigest = [u8; 16];

fn key_digest(canonical_id: &str) -> KeyDigest {
    let d = Sha256::digest(canonical_id.as_bytes());
    let mut out = [0u8; 16];
    out.copy_from_slice(&d[..16]);
    out
}

/// Position in the global job order.
type OrderKey = (DateTime<Utc>, String);

fn order_key(a: &Activity) -> OrderKey {
    (a.object.start_time.with_timezone(&Utc), a.object.id.clone())
}

struct Slot {
    activity: Arc<Activity>,
    links: u32,
}

struct JobEntry {
    record: JobRecord,
    members: BTreeMap<OrderKey, u32>,
}

#[derive(Default)]
struct Inner {
    slots: Vec<Option<Slot>>,
    free: Vec<u32>,
    keys: HashMap<KeyDigest, u32>,
    jobs: HashMap<String, JobEntry>,
}

impl Inner {
    fn lookup(&self, canonical_id: &str) -> Option<u32> {
        let slot = *self.keys.get(&key_digest(canonical_id))?;
        let s = self.slots[slot as usize].as_ref()?;
        (s.activity.object.id == canonical_id).then_some(slot)
    }

    fn put(&mut self, a: Activity) -> u32 {
        let digest = key_digest(&a.object.id);
        let entry = Slot {
            activity: Arc::new(a),
            links: 0,
        };
        let slot = match self.free.pop() {
            Some(s) => {
                self.slots[s as usize] = Some(entry);
                s
            }
            None => {
                self.slots.push(Some(entry));
                (self.slots.len() - 1) as u32
            }
        };
        self.keys.insert(digest, slot);
        slot
    }

    /// Returns true when the link is new.
    fn link(&mut self, job_id: &str, slot: u32) -> bool {
        let s = self.slots[slot as usize].as_mut().expect("live slot");
        let key = order_key(&s.activity);
        let job = self.jobs.get_mut(job_id).expect("job exists");
        if job.members.insert(key, slot).is_none() {
            s.links += 1;
            true
        } else {
            false
        }
    }

    fn remove_job(&mut self, job_id: &str) -> usize {
        let Some(job) = self.jobs.remove(job_id) else {
            return 0;
        };
        let mut removed = 0;
        for slot in job.members.into_values() {
            let s = self.slots[slot as usize].as_mut().expect("live slot");
            s.links -= 1;
            if s.links == 0 {
                let digest = key_digest(&s.activity.object.id);
                self.keys.remove(&digest);
                self.slots[slot as usize] = None;
                self.free.push(slot);
                removed += 1;
            }
        }
        removed
    }

    fn live(&self) -> usize {
        self.slots.len() - self.free.len()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
enum LogOp {
    Put { activity: Box<Activity> },
    Link { job: String, id: String },
    Job { record: Box<JobRecord> },
    Drop { job: String },
}

struct Log {
    path: PathBuf,
    writer: BufWriter<File>,
    records: usize,
}

impl Log {
    fn append(&mut self, ops: &[LogOp]) -> io::Result<()> {
        for op in ops {
            serde_json::to_writer(&mut self.writer, op)?;
            self.writer.write_all(b"\n")?;
        }
        self.writer.flush()?;
        self.records += ops.len();
        Ok(())
    }
}

pub struct Store {
    inner: RwLock<Inner>,
    log: Option<Mutex<Log>>,
}

const LOG_FILE: &str = "activities.log";

impl Default for Store {
    fn default() -> Self {
        Self::in_memory()
    }
}

impl Store {
    pub fn in_memory() -> Self {
        Self {
            inner: RwLock::new(Inner::default()),
            log: None,
        }
    }

    /// Opens (or creates) a file-backed store under `dir`, replaying its log.
    pub fn open(dir: &Path) -> Result<Self, StoreError> {
        fs::create_dir_all(dir)?;
        let path = dir.join(LOG_FILE);
        let mut inner = Inner::default();
        let mut records = 0;
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (n, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let op: LogOp = serde_json::from_str(&line).map_err(|e| StoreError::Corrupt {
                    line: n + 1,
                    message: e.to_string(),
                })?;
                records += 1;
                replay(&mut inner, op).map_err(|message| StoreError::Corrupt {
                    line: n + 1,
                    message,
                })?;
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self {
            inner: RwLock::new(inner),
            log: Some(Mutex::new(Log {
                path,
                writer: BufWriter::new(file),
                records,
            })),
        })
    }

    fn persist(&self, ops: &[LogOp]) -> Result<(), StoreError> {
        if let Some(log) = &self.log {
            log.lock().append(ops)?;
        }
        Ok(())
    }

    pub fn create_job(&self, record: JobRecord) -> Result<(), StoreError> {
        let mut inner = self.inner.write();
        if inner.jobs.contains_key(&record.job_id) {
            return Err(StoreError::JobExists(record.job_id));
        }
        self.persist(&[LogOp::Job {
            record: Box::new(record.clone()),
        }])?;
        inner.jobs.insert(
            record.job_id.clone(),
            JobEntry {
                record,
                members: BTreeMap::new(),
            },
        );
        Ok(())
    }

    /// Applies `f` to the job record. State may only advance along the job
    /// lifecycle and counters never decrease.
    pub fn update_job(
        &self,
        job_id: &str,
        f: impl FnOnce(&mut JobRecord),
    ) -> Result<JobRecord, StoreError> {
        let mut inner = self.inner.write();
        let job = inner
            .jobs
            .get_mut(job_id)
            .ok_or_else(|| StoreError::JobNotFound(job_id.to_string()))?;
        let mut next = job.record.clone();
        f(&mut next);
        if next.job_id != job.record.job_id {
            return Err(StoreError::InvalidUpdate("job id is immutable".into()));
        }
        if !job.record.state.can_become(next.state) {
            return Err(StoreError::InvalidUpdate(format!(
                "{:?} -> {:?}",
                job.record.state, next.state
            )));
        }
        if !next.counters.dominates(&job.record.counters) {
            return Err(StoreError::InvalidUpdate(
                "counters must not decrease".into(),
            ));
        }
        self.persist(&[LogOp::Job {
            record: Box::new(next.clone()),
        }])?;
        job.record = next.clone();
        Ok(next)
    }

    pub fn job(&self, job_id: &str) -> Result<JobRecord, StoreError> {
        self.inner
            .read()
            .jobs
            .get(job_id)
            .map(|j| j.record.clone())
            .ok_or_else(|| StoreError::JobNotFound(job_id.to_string()))
    }

    /// All jobs, newest first.
    pub fn jobs(&self) -> Vec<JobRecord> {
        let mut out: Vec<JobRecord> = self
            .inner
            .read()
            .jobs
            .values()
            .map(|j| j.record.clone())
            .collect();
        out.sort_by(|a, b| {
            b.created_at
                .cmp(&a.created_at)
                .then_with(|| a.job_id.cmp(&b.job_id))
        });
        out
    }

    pub fn insert_activities(
        &self,
        job_id: &str,
        batch: &[Activity],
    ) -> Result<InsertOutcome, StoreError> {
        for a in batch {
            if a.key().is_none() {
                return Err(StoreError::InvalidActivity(a.object.id.clone()));
            }
        }
        let mut inner = self.inner.write();
        if !inner.jobs.contains_key(job_id) {
            return Err(StoreError::JobNotFound(job_id.to_string()));
        }
        let mut seen = HashSet::new();
        let mut ops = Vec::new();
        let mut out = InsertOutcome::default();
        let mut placed = Vec::new();
        for a in batch {
            if !seen.insert(a.object.id.as_str()) {
                continue;
            }
            match inner.lookup(&a.object.id) {
                Some(slot) => {
                    out.duplicates += 1;
                    placed.push(slot);
                }
                None => {
                    out.inserted += 1;
                    if self.log.is_some() {
                        ops.push(LogOp::Put {
                            activity: Box::new(a.clone()),
                        });
                    }
                    placed.push(inner.put(a.clone()));
                }
            }
            if self.log.is_some() {
                ops.push(LogOp::Link {
                    job: job_id.to_string(),
                    id: a.object.id.clone(),
                });
            }
        }
        for slot in placed {
            inner.link(job_id, slot);
        }
        let job = inner.jobs.get_mut(job_id).expect("checked above");
        job.record.counters.gathered += out.inserted + out.duplicates;
        job.record.counters.inserted += out.inserted;
        job.record.counters.deduplicated += out.duplicates;
        if self.log.is_some() {
            ops.push(LogOp::Job {
                record: Box::new(job.record.clone()),
            });
        }
        self.persist(&ops)?;
        Ok(out)
    }

    /// `count` items starting at `offset` in the global order.
    pub fn load_page(
        &self,
        job_id: &str,
        count: usize,
        offset: usize,
    ) -> Result<ActivityCollection, StoreError> {
        if count == 0 {
            return Err(StoreError::InvalidArgument("count must be >= 1".into()));
        }
        let inner = self.inner.read();
        let job = inner
            .jobs
            .get(job_id)
            .ok_or_else(|| StoreError::JobNotFound(job_id.to_string()))?;
        let items = job
            .members
            .values()
            .skip(offset)
            .take(count)
            .map(|&slot| {
                inner.slots[slot as usize]
                    .as_ref()
                    .expect("live slot")
                    .activity
                    .as_ref()
                    .clone()
            })
            .collect();
        Ok(ActivityCollection::new(items))
    }

    pub fn load_all(&self, job_id: &str) -> Result<ActivityCollection, StoreError> {
        self.load_page(job_id, usize::MAX, 0)
    }

    pub fn job_len(&self, job_id: &str) -> Result<usize, StoreError> {
        self.inner
            .read()
            .jobs
            .get(job_id)
            .map(|j| j.members.len())
            .ok_or_else(|| StoreError::JobNotFound(job_id.to_string()))
    }

    /// Found activities in request order plus the ids that are not stored.
    pub fn load_by_ids(&self, ids: &[String]) -> LoadByIds {
        let inner = self.inner.read();
        let mut found = Vec::new();
        let mut missing = Vec::new();
        for id in ids {
            match inner.lookup(id) {
                Some(slot) => found.push(
                    inner.slots[slot as usize]
                        .as_ref()
                        .unwrap()
                        .activity
                        .as_ref()
                        .clone(),
                ),
                None => missing.push(id.clone()),
            }
        }
        LoadByIds {
            found: ActivityCollection::new(found),
            missing,
        }
    }

    /// Newest start time among a job's activities.
    pub fn newest_start_time(
        &self,
        job_id: &str,
    ) -> Result<Option<DateTime<FixedOffset>>, StoreError> {
        let inner = self.inner.read();
        let job = inner
            .jobs
            .get(job_id)
            .ok_or_else(|| StoreError::JobNotFound(job_id.to_string()))?;
        Ok(job.members.values().next_back().map(|&slot| {
            inner.slots[slot as usize]
                .as_ref()
                .unwrap()
                .activity
                .object
                .start_time
        }))
    }

    /// Removes the job and every activity no other job links to. Returns the
    /// number of removed activities.
    pub fn delete_job(&self, job_id: &str) -> Result<usize, StoreError> {
        let removed = {
            let mut inner = self.inner.write();
            let job = inner
                .jobs
                .get(job_id)
                .ok_or_else(|| StoreError::JobNotFound(job_id.to_string()))?;
            if job.record.state == JobState::Running {
                return Err(StoreError::JobRunning(job_id.to_string()));
            }
            self.persist(&[LogOp::Drop {
                job: job_id.to_string(),
            }])?;
            inner.remove_job(job_id)
        };
        if self.garbage_ratio() > 2.0 {
            self.compact()?;
        }
        Ok(removed)
    }

    /// Distinct stored activities.
    pub fn len(&self) -> usize {
        self.inner.read().live()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every stored activity's canonical id (full scan).
    pub fn all_ids(&self) -> Vec<String> {
        self.inner
            .read()
            .slots
            .iter()
            .flatten()
            .map(|s| s.activity.object.id.clone())
            .collect()
    }

    /// Approximate heap size of the key index in bytes.
    pub fn key_index_bytes(&self) -> usize {
        let inner = self.inner.read();
        inner.keys.capacity() * (std::mem::size_of::<KeyDigest>() + std::mem::size_of::<u32>() + 1)
    }

    fn garbage_ratio(&self) -> f64 {
        let Some(log) = &self.log else { return 0.0 };
        let records = log.lock().records as f64;
        let inner = self.inner.read();
        let live: usize = inner.live()
            + inner
                .jobs
                .values()
                .map(|j| j.members.len() + 1)
                .sum::<usize>();
        records / (live.max(1000) as f64)
    }

    /// Rewrites the log so it holds exactly the live state.
    pub fn compact(&self) -> Result<(), StoreError> {
        let Some(log) = &self.log else { return Ok(()) };
        let inner = self.inner.write();
        let mut log = log.lock();
        let tmp = log.path.with_extension("log.tmp");
        let mut records = 0;
        {
            let mut w = BufWriter::new(File::create(&tmp)?);
            let mut emit = |op: &LogOp| -> io::Result<()> {
                serde_json::to_writer(&mut w, op)?;
                w.write_all(b"\n")?;
                records += 1;
                Ok(())
            };
            for slot in inner.slots.iter().flatten() {
                emit(&LogOp::Put {
                    activity: Box::new(slot.activity.as_ref().clone()),
                })?;
            }
            let mut jobs: Vec<_> = inner.jobs.values().collect();
            jobs.sort_by_key(|j| j.record.created_at);
            for job in jobs {
                emit(&LogOp::Job {
                    record: Box::new(job.record.clone()),
                })?;
                for (_, id) in job.members.keys() {
                    emit(&LogOp::Link {
                        job: job.record.job_id.clone(),
                        id: id.clone(),
                    })?;
                }
            }
            w.flush()?;
        }
        fs::rename(&tmp, &log.path)?;
        log.writer = BufWriter::new(OpenOptions::new().append(true).open(&log.path)?);
        log.records = records;
        Ok(())
    }

    pub fn export_jsonl(&self, job_id: &str, out: &mut impl Write) -> Result<usize, StoreError> {
        let all = self.load_all(job_id)?;
        for a in all.items() {
            serde_json::to_writer(&mut *out, a).map_err(io::Error::from)?;
            out.write_all(b"\n")?;
        }
        Ok(all.total_items())
    }

    pub fn export_collection(
        &self,
        job_id: &str,
        out: &mut impl Write,
    ) -> Result<usize, StoreError> {
        let all = self.load_all(job_id)?;
        serde_json::to_writer_pretty(&mut *out, &all).map_err(io::Error::from)?;
        out.write_all(b"\n")?;
        Ok(all.total_items())
    }
}

fn replay(inner: &mut Inner, op: LogOp) -> Result<(), String> {
    match op {
        LogOp::Put { activity } => {
            if inner.lookup(&activity.object.id).is_none() {
                inner.put(*activity);
            }
        }
        LogOp::Link { job, id } => {
            let slot = inner
                .lookup(&id)
                .ok_or_else(|| format!("link to unknown activity {id}"))?;
            if !inner.jobs.contains_key(&job) {
                return Err(format!("link to unknown job {job}"));
            }
            inner.link(&job, slot);
        }
        LogOp::Job { record } => match inner.jobs.get_mut(&record.job_id) {
            Some(entry) => entry.record = *record,
            None => {
                inner.jobs.insert(
                    record.job_id.clone(),
                    JobEntry {
                        record: *record,
                        members: BTreeMap::new(),
                    },
                );
            }
        },
        LogOp::Drop { job } => {
            inner.remove_job(&job);
        }
    }
    Ok(())
}
