//! Benchmark framework for forecasting chaotic ordinary differential equations.
//!
//! The pipeline generates noisy observations of Lorenz-type systems, fits a
//! family of forecasting methods to each training series, rolls the fitted
//! models forward past the training horizon, and scores the forecasts against
//! the noise-free continuation of the true trajectory.
//!
//! Modules, roughly bottom-up:
//!
//! * [`series`] — time-series containers shared by every stage.
//! * [`seeding`] — deterministic seed derivation for reproducible runs.
//! * [`numkit`] — numerical kernels: polynomial features, ridge and kernel
//!   regression, splines, sparse regression, fixed-step integration.
//! * [`preprocess`] — affine normalization fitted on training data.
//! * [`metrics`] — forecast verification scores.
//! * [`systems`] — ground-truth systems and dataset generation.
//! * [`forecasters`] — the forecasting methods behind one fit/predict contract.
//! * [`tuner`] — local grid search over per-method hyperparameter domains.
//! * [`bench`] — scoring runs, aggregation, significance tests, perturbation
//!   baselines.
//! * [`io`] — on-disk dataset and results formats.

pub mod forecasters;
pub mod metrics;
pub mod numkit;
pub mod preprocess;
pub mod seeding;
pub mod series;
pub mod systems;
pub mod bench;
pub mod tuner;
