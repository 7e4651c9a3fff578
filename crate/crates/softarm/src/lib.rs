//! File formats, experiment reports and the `softarm` command line on top
//! of [`softarm_core`].

pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod report;
pub mod schedule;

pub use error::FormatError;
