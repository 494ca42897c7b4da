//! Library side of the `cbf` command-line tool: configuration parsing, CSV
//! serialization, and sweep orchestration over [`cbf_core`].

pub mod config;
pub mod csvio;
pub mod error;
pub mod sweep;

pub use error::CliError;
