//! Scenarios, result records, the command runner and the property suite.

pub mod record;
pub mod runner;
pub mod scenario;
pub mod suite;
