//! Harness library behind the `sqpc` binary: argument types, command
//! runners and report shaping. Kept as a library so the acceptance suite
//! can drive the exact code paths the binary runs.

pub mod args;
pub mod commands;
pub mod report;
