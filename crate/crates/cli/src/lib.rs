//! Command-line front end for the `irsjam` simulator.

pub mod app;
pub mod config;
pub mod output;
