//! File formats and the `pet` command line on top of `pet-core`: CSV
//! dialog triples, embedding tables, JSON checkpoints, configuration and
//! plain-text report tables.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod embeddings;
pub mod error;
pub mod json;
pub mod table;
pub mod triples;

pub use error::FormatError;
