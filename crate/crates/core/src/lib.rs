pub mod analysis;
pub mod config;
pub mod container;
pub mod contf0;
pub mod error;
pub mod metrics;
pub mod model;
pub mod signal;
pub mod synthesis;
pub mod synthetic;

pub use error::{Error, Result};
