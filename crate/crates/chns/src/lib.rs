//! File formats, configuration and the run driver for `chns-core`.

pub mod config;
pub mod driver;
pub mod error;
pub mod levelset;
pub mod output;

pub use driver::{eoc_sweep, run, RunConfig, RunSummary};
pub use error::{AppError, AppResult};
