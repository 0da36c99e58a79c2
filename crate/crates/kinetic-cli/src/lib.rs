//! User surface of the kinetic laboratory: scenario files, the counterexample
//! suite and CSV reports. The `kinetic` binary wraps these.

pub mod counterexamples;
pub mod error;
pub mod report;
pub mod scenario;

pub use error::{CliError, Result};
