//! Classify software repositories into application domains and compare
//! software-engineering practices across those domains.

pub mod corpus;
mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod model;
pub mod practices;
pub mod stats;
pub mod synthetic;

pub use error::Error;
