//! Runs crawl jobs in the background, one task per job.

use std::collections::HashSet;
use std::sync::Arc;
use std::time::Duration;

use parking_lot::Mutex;
use sma_core::gathering::{GatherError, GatheringService};
use sma_core::storage::JobKind;

/// Upper bound on one sleep, so stopped jobs are noticed promptly.
const MAX_SLEEP: Duration = Duration::from_secs(1);

pub struct CrawlDriver {
    service: Arc<GatheringService>,
    active: Arc<Mutex<HashSet<String>>>,
}

impl CrawlDriver {
    pub fn new(service: Arc<GatheringService>) -> Self {
        Self {
            service,
            active: Arc::new(Mutex::new(HashSet::new())),
        }
    }

    /// Starts driving `job_id` unless a task already does. Must be called
    /// from within a tokio runtime.
    pub fn spawn(&self, job_id: &str) {
        if !self.active.lock().insert(job_id.to_string()) {
            return;
        }
        let service = self.service.clone();
        let active = self.active.clone();
        let id = job_id.to_string();
        tokio::spawn(async move {
            drive(&service, &id).await;
            active.lock().remove(&id);
        });
    }

    /// Picks up unfinished crawl jobs, e.g. after a restart.
    pub fn resume_all(&self) -> usize {
        let pending: Vec<_> = self
            .service
            .list_jobs()
            .into_iter()
            .filter(|j| j.kind == JobKind::Crawl && !j.state.is_terminal())
            .collect();
        for j in &pending {
            self.spawn(&j.job_id);
        }
        pending.len()
    }

    pub fn active(&self) -> usize {
        self.active.lock().len()
    }
}

async fn drive(service: &Arc<GatheringService>, id: &str) {
    loop {
        let due = match service.next_due(id) {
            Ok(Some(due)) => due,
            Ok(None) => break,
            Err(e) => {
                tracing::warn!(job = id, error = %e, "cannot schedule crawl job");
                break;
            }
        };
        let now = service.clock().now();
        if due > now {
            let wait = (due - now).to_std().unwrap_or_default().min(MAX_SLEEP);
            tokio::time::sleep(wait.max(Duration::from_millis(10))).await;
            continue;
        }
        let s = service.clone();
        let jid = id.to_string();
        match tokio::task::spawn_blocking(move || s.crawl_tick(&jid)).await {
            Ok(Ok(report)) => {
                tracing::debug!(
                    job = id,
                    inserted = report.inserted,
                    duplicates = report.duplicates,
                    "crawl tick"
                );
            }
            Ok(Err(GatherError::NotDue { .. })) => {}
            Ok(Err(e)) => {
                tracing::warn!(job = id, error = %e, "crawl tick failed");
                if matches!(e, GatherError::Storage(_) | GatherError::NotFound(_)) {
                    break;
                }
                tokio::time::sleep(MAX_SLEEP).await;
            }
            Err(e) => {
                tracing::error!(job = id, error = %e, "crawl tick panicked");
                break;
            }
        }
    }
}
