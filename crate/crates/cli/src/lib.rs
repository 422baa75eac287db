//! Experiment runner: parses JSON configs, runs the numerical experiments
//! of `rotlab-core` and writes deterministic CSV and JSON artifacts.

pub mod config;
pub mod experiments;
pub mod output;
pub mod reproduce;
