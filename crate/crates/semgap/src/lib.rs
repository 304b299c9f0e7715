//! File formats, IO and the command-line pipeline around `semgap-core`.

pub use semgap_core as core;

pub mod compress;
pub mod corpus;
pub mod embedio;
pub mod error;
pub mod ingest;

pub use error::{Error, Result};
pub mod parallel;
pub mod config;
pub mod manifest;
pub mod report;
pub mod pipeline;
