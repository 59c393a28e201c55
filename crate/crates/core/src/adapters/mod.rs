//! Uniform adapter interface over the five platforms.
//!
//! The shipped adapters answer from fixture corpora; a live adapter would
//! implement the same [`PlatformAdapter`] trait.

mod budget;
mod fixture;
pub mod schema;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use budget::{BudgetConfig, QuotaExceeded, QuotaLedger, RateBudget};
pub use fixture::FixtureAdapter;
pub use schema::{map_native, MappingError, NativeItem};

use crate::activity::{Activity, Platform, UnknownPlatform};
use crate::query::{NativeRequest, Operator, PlatformCapabilities};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdapterError {
    #[error("unknown page cursor {0:?}")]
    UnknownCursor(String),
    #[error("{platform} adapter rejected request: {message}")]
    CapabilityViolation { platform: Platform, message: String },
    #[error("fixture error: {0}")]
    Fixture(String),
}

/// Opaque continuation token; absent means "first page".
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PageCursor(pub String);

#[derive(Debug, Clone, PartialEq)]
pub struct Page {
    pub items: Vec<NativeItem>,
    pub next: Option<PageCursor>,
}

pub trait PlatformAdapter: Send + Sync {
    fn platform(&self) -> Platform;

    fn capabilities(&self) -> &PlatformCapabilities;

    /// Fetches one page. Callers consume one request unit per call.
    fn fetch_page(
        &self,
        req: &NativeRequest,
        cursor: Option<&PageCursor>,
    ) -> Result<Page, AdapterError>;

    fn map_native(&self, item: &NativeItem) -> Result<Activity, MappingError> {
        schema::map_native(self.platform(), item)
    }
}

/// Shipped capability profiles.
pub fn default_capabilities(platform: Platform) -> PlatformCapabilities {
    use Operator::*;
    let (ops, geo, time, keyword, max): (&[Operator], _, _, _, _) = match platform {
        Platform::Twitter => (&[And, Or, Not, Phrase], true, true, true, 100),
        Platform::Youtube => (&[And, Or, Not, Phrase], true, true, true, 50),
        Platform::GooglePlus => (&[And, Or, Not, Phrase], false, false, true, 20),
        Platform::Facebook => (&[And], false, true, true, 25),
        Platform::Instagram => (&[], false, false, false, 20),
    };
    PlatformCapabilities {
        operators: ops.iter().copied().collect(),
        native_geo_filter: geo,
        native_time_filter: time,
        keyword_search: keyword,
        max_results_per_request: max,
    }
}

/// Profile lookup by platform name.
pub fn capabilities(platform: &str) -> Result<PlatformCapabilities, UnknownPlatform> {
    Ok(default_capabilities(platform.parse()?))
}
