//! File formats, the ensemble experiment runner and report writers built
//! on `efs-core`.

pub mod config;
pub mod error;
pub mod experiment;
pub mod formats;
pub mod report;

pub use efs_core as core;
pub use error::{Error, Result};
