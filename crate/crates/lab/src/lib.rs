//! Monte Carlo laboratory for generalized Wigner matrices: configs, the
//! experiment harness, report and profile file formats, and CLI helpers.

pub mod config;
pub mod error;
pub mod experiments;
pub mod harness;
pub mod manifest;
pub mod probes;
pub mod profile_io;
pub mod report;
pub mod runner;

pub use error::{LabError, Result};
