//! Fixed-window request budgets.

use std::collections::BTreeMap;
use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activity::Platform;
use crate::clock::Clock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BudgetConfig {
    /// Requests allowed per window.
    pub capacity: u64,
    #[serde(alias = "window_seconds")]
    pub window_seconds: i64,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self {
            capacity: 180,
            window_seconds: 900,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("quota exceeded, retry in {}s", retry_after.num_seconds())]
pub struct QuotaExceeded {
    pub retry_after: Duration,
}

/// Token budget with a full refill at every window boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RateBudget {
    capacity: u64,
    window: Duration,
    tokens: u64,
    window_start: DateTime<Utc>,
}

impl RateBudget {
    pub fn new(config: BudgetConfig, now: DateTime<Utc>) -> Self {
        assert!(config.window_seconds > 0, "window must be positive");
        Self {
            capacity: config.capacity,
            window: Duration::seconds(config.window_seconds),
            tokens: config.capacity,
            window_start: now,
        }
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn tokens(&self) -> u64 {
        self.tokens
    }

    pub fn window_end(&self) -> DateTime<Utc> {
        self.window_start + self.window
    }

    fn roll(&mut self, now: DateTime<Utc>) {
        if now >= self.window_end() {
            let elapsed = (now - self.window_start).num_milliseconds();
            let windows = elapsed / self.window.num_milliseconds();
            self.window_start += Duration::milliseconds(windows * self.window.num_milliseconds());
            self.tokens = self.capacity;
        }
    }

    /// Tokens available at `now` after any pending refill.
    pub fn available(&mut self, now: DateTime<Utc>) -> u64 {
        self.roll(now);
        self.tokens
    }

    pub fn consume(&mut self, n: u64, now: DateTime<Utc>) -> Result<(), QuotaExceeded> {
        assert!(n >= 1, "must consume at least one request unit");
        self.roll(now);
        if self.tokens >= n {
            self.tokens -= n;
            Ok(())
        } else {
            Err(QuotaExceeded {
                retry_after: self.window_end() - now,
            })
        }
    }
}

/// Per-platform budgets plus a running count of consumed units. Each
/// platform's budget is behind its own lock, so consumption on one platform
/// is totally ordered across concurrent jobs.
pub struct QuotaLedger {
    clock: Arc<dyn Clock>,
    budgets: BTreeMap<Platform, Mutex<(RateBudget, u64)>>,
}

impl QuotaLedger {
    pub fn new(clock: Arc<dyn Clock>, configs: &BTreeMap<Platform, BudgetConfig>) -> Self {
        let now = clock.now();
        let budgets = Platform::ALL
            .iter()
            .map(|p| {
                let cfg = configs.get(p).copied().unwrap_or_default();
                (*p, Mutex::new((RateBudget::new(cfg, now), 0)))
            })
            .collect();
        Self { clock, budgets }
    }

    pub fn consume(&self, platform: Platform, n: u64) -> Result<(), QuotaExceeded> {
        let mut slot = self.budgets[&platform].lock();
        slot.0.consume(n, self.clock.now())?;
        slot.1 += n;
        Ok(())
    }

    /// Units consumed on `platform` since the ledger was created.
    pub fn used(&self, platform: Platform) -> u64 {
        self.budgets[&platform].lock().1
    }

    pub fn available(&self, platform: Platform) -> u64 {
        self.budgets[&platform].lock().0.available(self.clock.now())
    }
}
