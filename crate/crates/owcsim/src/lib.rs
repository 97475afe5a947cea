//! Std companion to `owcsim-core`: configuration files, the channel artifact,
//! threaded execution, experiment and backhaul reports and the self-check
//! suite behind the `owcsim` binary.

pub mod artifact;
pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod parallel;
pub mod ponio;
pub mod validation;

pub use error::{Error, Result};
