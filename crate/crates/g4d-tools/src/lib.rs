//! Batch tooling around the core scene model: binary file formats, the flat
//! pipeline config, run manifests, storage accounting and the `g4d` CLI
//! subcommands.

// Negated float comparisons below are deliberate: they must reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod pipeline;
pub mod report;

pub use config::PipelineConfig;
pub use error::ToolsError;
pub use pipeline::{run, Command};
pub use report::StorageReport;

pub type Result<T> = std::result::Result<T, ToolsError>;
