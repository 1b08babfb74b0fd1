//! Command-line front end for the preimpact simulation toolkit: scenario
//! runs, parameter sweeps, design ranges and trace verification.

pub mod config;
pub mod design;
pub mod error;
pub mod report;
pub mod sweep;
pub mod trace_io;
pub mod verify;

pub use config::{ConfigSource, Override};
pub use error::{CliError, Result};
