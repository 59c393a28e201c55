//! REST service, background crawl driver and configuration for the social
//! media gathering core.

pub mod api;
pub mod app;
pub mod config;
pub mod driver;

pub use api::{router, ErrorBody};
pub use app::App;
pub use config::Config;
