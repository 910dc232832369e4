//! File formats, embedding caches, pipeline orchestration and the command
//! line for `topirank-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod pipeline;
pub mod run;

pub use config::RunConfig;
pub use error::{Error, Result};
