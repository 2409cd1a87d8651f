//! File formats, reports and a function registry around [`sobonet_core`].

pub mod error;
pub mod json;
pub mod registry;
pub mod report;

pub use error::{CliError, Result};
pub use sobonet_core as core;
