//! Command-line tools and HTTP service for the acouforge design studio.
//!
//! The CLI and the HTTP handlers share [`ops`], so the same request yields
//! byte-identical CSV, WAV and STL output on both paths.

pub mod api;
pub mod cli;
pub mod error;
pub mod jobs;
pub mod ops;
pub mod store;
