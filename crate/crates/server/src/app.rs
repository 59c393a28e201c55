//! Service assembly from configuration.

use std::path::Path;
use std::sync::Arc;

use sma_core::adapters::{AdapterError, QuotaLedger};
use sma_core::clock::{Clock, SystemClock};
use sma_core::enrichment::{Enricher, EnrichmentResources, ResourceError};
use sma_core::fixtures::load_fixture_adapters;
use sma_core::gathering::GatheringService;
use sma_core::storage::{Store, StoreError};
use thiserror::Error;

use crate::config::{Config, ConfigError};
use crate::driver::CrawlDriver;

#[derive(Debug, Error)]
pub enum StartupError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("storage: {0}")]
    Store(#[from] StoreError),
    #[error("fixtures: {0}")]
    Fixtures(#[from] AdapterError),
    #[error("resources: {0}")]
    Resources(#[from] ResourceError),
}

pub struct App {
    pub service: Arc<GatheringService>,
    pub enricher: Arc<Enricher>,
    pub driver: CrawlDriver,
}

impl App {
    pub fn new(service: Arc<GatheringService>, enricher: Arc<Enricher>) -> Self {
        Self {
            driver: CrawlDriver::new(service.clone()),
            service,
            enricher,
        }
    }

    /// Builds the service described by `cfg` on the system clock.
    pub fn from_config(cfg: &Config) -> Result<Self, StartupError> {
        Self::from_config_with_clock(cfg, Arc::new(SystemClock))
    }

    pub fn from_config_with_clock(
        cfg: &Config,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, StartupError> {
        let store = match &cfg.data_dir {
            Some(dir) => Store::open(dir)?,
            None => Store::in_memory(),
        };
        let resources = match &cfg.resources_dir {
            Some(dir) if dir.exists() => EnrichmentResources::load(dir)?,
            _ => EnrichmentResources::builtin(),
        };
        let adapters = load_adapters(&cfg.fixture_dir, cfg)?;
        if adapters.is_empty() {
            tracing::warn!(dir = %cfg.fixture_dir.display(), "no fixture corpora found; every platform will be skipped");
        }
        let ledger = Arc::new(QuotaLedger::new(clock.clone(), &cfg.budgets));
        let enricher = Arc::new(Enricher::new(resources));
        let service =
            GatheringService::new(adapters, ledger, Arc::new(store), enricher.clone(), clock);
        Ok(Self::new(Arc::new(service), enricher))
    }
}

fn load_adapters(
    dir: &Path,
    cfg: &Config,
) -> Result<Vec<Arc<dyn sma_core::adapters::PlatformAdapter>>, StartupError> {
    Ok(load_fixture_adapters(dir, &cfg.capability_profiles()?)?)
}
