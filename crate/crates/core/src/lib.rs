pub mod backend;
pub mod coev;
pub mod config;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod metrics;
pub mod mixture;
pub mod neural;
pub mod report;
pub mod runtime;
pub mod toy;

pub use error::{Error, Result};
