//! File formats and loaders around `logmap-core`, plus the pieces of the
//! `logmap` command line that are worth testing directly.

pub mod data;
pub mod embeddings;
pub mod error;
pub mod qfg_file;
pub mod querylog;
pub mod schema;
pub mod tasks;

pub use error::LoadError;
