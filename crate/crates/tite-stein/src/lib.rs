//! Standard-library companion to `tite-stein-core`: configuration files,
//! parallel simulation, reports, live trial conduct and its HTTP service.
//!
//! The `tite-stein` binary wraps these modules in a command-line tool.

pub mod conduct;
pub mod files;
pub mod report;
pub mod runner;
pub mod service;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 2024;
