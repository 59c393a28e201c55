//! Cross-platform social media gathering: a uniform activity model, a
//! boolean query language with per-platform rewriting, adapters, enrichment,
//! quality ranking and storage.

pub mod activity;
pub mod adapters;
pub mod clock;
pub mod enrichment;
pub mod fixtures;
pub mod gathering;
pub mod geo;
pub mod quality;
pub mod query;
pub mod storage;

pub use activity::{Activity, ActivityCollection, Platform, PlatformId};
