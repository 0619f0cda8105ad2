//! File formats, configuration, parallel evaluation and the command-line
//! front end around `robustaug-core`.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod parallel;
pub mod pnm;

pub use error::{Error, Result};
