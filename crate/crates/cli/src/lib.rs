//! Command-line driver for the chaoscast benchmark: dataset generation,
//! hyperparameter tuning, evaluation, and reporting, all reproducible from a
//! run manifest and a master seed, with bit-exact file formats.
//!
//! The binary is thin orchestration: every numeric pipeline (and all
//! parallelism) lives in `chaoscast_core`; this crate owns the manifest, the
//! on-disk layout, and the CSV/JSON formats.

pub mod args;
pub mod commands;
pub mod files;
pub mod manifest;
