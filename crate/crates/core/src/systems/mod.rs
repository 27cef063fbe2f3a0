//! Ground-truth systems and dataset generation.
//!
//! Three flavors of the Lorenz convection equations serve as data-generating
//! systems: fixed classic parameters, parameters drawn uniformly per
//! repetition, and smooth state-dependent parameter functions drawn from a
//! random-feature Gaussian-process prior. Trajectories are integrated with a
//! fine fixed-step fourth-order Runge–Kutta solver and observed under four
//! schemes (constant or exponentially distributed sampling intervals, with
//! or without additive Gaussian noise).

mod field;
mod generate;

pub use field::{
    sample_field, sample_nonpar_field, sample_random_params, LorenzParams, NonparField,
    VectorField, RANDOM_BETA_RANGE, RANDOM_RHO_RANGE, RANDOM_SIGMA_RANGE,
};
pub use generate::{generate_repetition, sample_initial_condition, GeneratedInstance};

use thiserror::Error;

use crate::numkit::NumError;
use crate::series::SeriesError;

/// Errors raised while sampling systems or generating datasets.
#[derive(Debug, Error)]
pub enum SystemError {
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("state must be finite and 3-dimensional")]
    BadState,
    #[error("trajectory diverged at solver step {step}")]
    Divergence { step: usize },
    #[error("{attempts} consecutive draws settled near a fixed point")]
    RepeatedFixedPoint { attempts: usize },
    #[error("observation scheme produced no training points")]
    EmptyTraining,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// The three data-generating system families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SystemKind {
    /// Classic parameters σ=10, ρ=28, β=8/3.
    Standard,
    /// Constant parameters drawn uniformly per repetition.
    RandomParams,
    /// Smooth state-dependent parameter functions drawn per repetition.
    Nonparametric,
}

impl SystemKind {
    pub fn all() -> [SystemKind; 3] {
        [
            SystemKind::Standard,
            SystemKind::RandomParams,
            SystemKind::Nonparametric,
        ]
    }

    /// Stable identifier used in paths, CSV fields, and the CLI.
    pub fn name(&self) -> &'static str {
        match self {
            SystemKind::Standard => "lorenz63std",
            SystemKind::RandomParams => "lorenz63random",
            SystemKind::Nonparametric => "lorenz63nonpar",
        }
    }

    pub fn from_name(name: &str) -> Option<SystemKind> {
        Self::all().into_iter().find(|k| k.name() == name)
    }
}

impl std::fmt::Display for SystemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// How training observation times are laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimestepMode {
    /// Observations at i·Δt₀ for i = 1..n.
    Constant,
    /// Increments drawn from Exp(1/Δt₀), truncated at the end of training.
    Exponential,
}

/// Observation-time layout plus additive noise level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationScheme {
    pub mode: TimestepMode,
    /// Base sampling interval Δt₀ (the exact stride in constant mode, the
    /// mean stride in exponential mode, and always the test stride).
    pub base_dt: f64,
    /// Standard deviation of the isotropic Gaussian observation noise.
    pub noise_sd: f64,
}

impl ObservationScheme {
    pub fn new(mode: TimestepMode, base_dt: f64, noise_sd: f64) -> Self {
        ObservationScheme {
            mode,
            base_dt,
            noise_sd,
        }
    }

    /// The four canonical schemes in a fixed order.
    pub fn all_named() -> [ObservationScheme; 4] {
        [
            Self::new(TimestepMode::Constant, 1e-2, 0.0),
            Self::new(TimestepMode::Constant, 1e-2, 0.1),
            Self::new(TimestepMode::Exponential, 1e-2, 0.0),
            Self::new(TimestepMode::Exponential, 1e-2, 0.1),
        ]
    }

    /// Stable identifier; `None` for non-canonical parameter combinations.
    pub fn name(&self) -> Option<&'static str> {
        let noisefree = self.noise_sd == 0.0;
        let noisy = (self.noise_sd - 0.1).abs() < 1e-12;
        if (self.base_dt - 1e-2).abs() > 1e-12 || !(noisefree || noisy) {
            return None;
        }
        Some(match (self.mode, noisefree) {
            (TimestepMode::Constant, true) => "const-noisefree",
            (TimestepMode::Constant, false) => "const-noisy",
            (TimestepMode::Exponential, true) => "rand-noisefree",
            (TimestepMode::Exponential, false) => "rand-noisy",
        })
    }

    pub fn from_name(name: &str) -> Option<ObservationScheme> {
        Self::all_named()
            .into_iter()
            .find(|s| s.name() == Some(name))
    }

    pub fn validate(&self) -> Result<(), SystemError> {
        if !(self.base_dt.is_finite() && self.base_dt > 0.0) {
            return Err(SystemError::InvalidConfig(format!(
                "base timestep must be positive, got {}",
                self.base_dt
            )));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return Err(SystemError::InvalidConfig(format!(
                "noise level must be non-negative, got {}",
                self.noise_sd
            )));
        }
        Ok(())
    }
}

/// Spans and solver resolution for dataset generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationConfig {
    /// Length of the training window [0, train_span].
    pub train_span: f64,
    /// Length of the forecast window (train_span, train_span + horizon].
    pub horizon: f64,
    /// Fixed solver step of the ground-truth integrator.
    pub solver_step: f64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            train_span: 100.0,
            horizon: 10.0,
            solver_step: 1e-3,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self, scheme: &ObservationScheme) -> Result<(), SystemError> {
        scheme.validate()?;
        for (name, v) in [
            ("training span", self.train_span),
            ("forecast horizon", self.horizon),
            ("solver step", self.solver_step),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SystemError::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.solver_step > scheme.base_dt {
            return Err(SystemError::InvalidConfig(
                "solver step must not exceed the observation interval".into(),
            ));
        }
        Ok(())
    }
}
