//! The forecasting method suite behind one fit/predict contract.
//!
//! Three families:
//! - **baselines**: climatology (`ConstM`), persistence (`ConstL`), and
//!   analog replay (`Analog`);
//! - **propagators**: regressors of the one-step map with next-state (`S`)
//!   or difference-quotient (`D`) targets, optionally fed the timestep
//!   (`T` suffix) — ridge on polynomial features (`Lin*`, `LinPo*`), random
//!   tanh features (`RaFe*`), echo state networks (`Esn*`), localized
//!   Gaussian processes (`PgGp*`), and local linear regression (`PgLl*`);
//! - **solution smoothers**: two-stage estimators that smooth the observed
//!   trajectory, regress its derivative on its value to recover the vector
//!   field, and integrate that field forward (`PwNn`, `SpNn`, `LlNn`,
//!   `SpPo`, `SpPo2`, `SpPo4`, `SpGp`, `GpGp`, `SINDy`, `SINDyN`).
//!
//! Every method normalizes the training states first (full whitening,
//! except `SINDy`, which only rescales so sparsity patterns in the raw
//! coordinates survive), fits in normalized coordinates, and maps
//! predictions back to data units. All fits are pure functions of
//! (data, hyperparameters, seed).

mod baselines;
mod esn;
mod lin;
mod pg;
mod propagator;
mod rafe;
mod smoother;

pub use baselines::analog_predict;
pub use propagator::{
    build_propagator_data, propagator_rollout, PropagatorConfig, PropagatorData, StepFn,
    TargetKind,
};
pub use smoother::SparseFieldCoefficients;

use crate::numkit::NumError;
use crate::preprocess::{fit_normalizer, AffineNormalizer, NormalizeMode};
use crate::series::{Prediction, SeriesError, State, TimeSeries};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Largest polynomial feature dictionary a ridge fit will materialize.
/// Hyperparameter combinations above this limit error out (and score as a
/// failed configuration during tuning) instead of exhausting memory.
pub const MAX_POLY_FEATURES: usize = 8192;

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("{method}: missing parameter `{param}`")]
    MissingParam { method: String, param: String },
    #[error("{method}: parameter `{param}`: {message}")]
    BadParam {
        method: String,
        param: String,
        message: String,
    },
    #[error("training series has {got} points but the configuration needs at least {needed}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("invalid forecast problem: {0}")]
    BadProblem(String),
}

/// A parameter value in a method configuration: the vocabulary is numbers
/// plus free-form strings (for categorical options).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Text(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Number(x) => write!(f, "{x}"),
            ParamValue::Text(s) => write!(f, "{s}"),
        }
    }
}

/// A method plus its hyperparameters, in wire form.
///
/// Serializes as `{"method": "LinD", "params": {"K": 1, "s": 2, ...}}`. The
/// parameter map is ordered, so equal configurations serialize identically —
/// callers may use the JSON string as a memoization key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub method: String,
    #[serde(default)]
    pub params: BTreeMap<String, ParamValue>,
}

impl MethodConfig {
    pub fn new(method: &str) -> Self {
        Self {
            method: method.to_string(),
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.into(), ParamValue::Number(value));
        self
    }

    /// Canonical serialization (sorted parameter names), usable as a map key.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("method config serializes")
    }

    fn require_f64(&self, name: &str) -> Result<f64, ForecastError> {
        match self.params.get(name) {
            Some(ParamValue::Number(x)) if x.is_finite() => Ok(*x),
            Some(other) => Err(ForecastError::BadParam {
                method: self.method.clone(),
                param: name.into(),
                message: format!("expected a finite number, got `{other}`"),
            }),
            None => Err(ForecastError::MissingParam {
                method: self.method.clone(),
                param: name.into(),
            }),
        }
    }

    fn require_nonneg(&self, name: &str) -> Result<f64, ForecastError> {
        let x = self.require_f64(name)?;
        if x < 0.0 {
            return Err(ForecastError::BadParam {
                method: self.method.clone(),
                param: name.into(),
                message: format!("must be non-negative, got {x}"),
            });
        }
        Ok(x)
    }

    fn require_positive(&self, name: &str) -> Result<f64, ForecastError> {
        let x = self.require_f64(name)?;
        if x <= 0.0 {
            return Err(ForecastError::BadParam {
                method: self.method.clone(),
                param: name.into(),
                message: format!("must be positive, got {x}"),
            });
        }
        Ok(x)
    }

    fn require_uint(&self, name: &str, lo: u64, hi: u64) -> Result<usize, ForecastError> {
        let x = self.require_f64(name)?;
        let rounded = x.round();
        if (x - rounded).abs() > 1e-9 || rounded < lo as f64 || rounded > hi as f64 {
            return Err(ForecastError::BadParam {
                method: self.method.clone(),
                param: name.into(),
                message: format!("must be an integer in [{lo}, {hi}], got {x}"),
            });
        }
        Ok(rounded as usize)
    }

    fn reject_unknown(&self, allowed: &[&str]) -> Result<(), ForecastError> {
        for key in self.params.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(ForecastError::BadParam {
                    method: self.method.clone(),
                    param: key.clone(),
                    message: format!(
                        "unexpected parameter (this method takes {})",
                        if allowed.is_empty() {
                            "no parameters".to_string()
                        } else {
                            allowed.join(", ")
                        }
                    ),
                });
            }
        }
        Ok(())
    }
}

macro_rules! method_names {
    ($($variant:ident => $name:literal),+ $(,)?) => {
        /// The method catalog.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum MethodName {
            $($variant),+
        }

        impl MethodName {
            pub const ALL: &'static [MethodName] = &[$(MethodName::$variant),+];

            pub fn as_str(&self) -> &'static str {
                match self {
                    $(MethodName::$variant => $name),+
                }
            }

            pub fn parse(s: &str) -> Result<Self, ForecastError> {
                match s {
                    $($name => Ok(MethodName::$variant),)+
                    other => Err(ForecastError::UnknownMethod(other.to_string())),
                }
            }
        }

        impl fmt::Display for MethodName {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

method_names! {
    ConstM => "ConstM",
    ConstL => "ConstL",
    Analog => "Analog",
    LinS => "LinS",
    LinD => "LinD",
    LinST => "LinST",
    LinDT => "LinDT",
    LinPo4 => "LinPo4",
    LinPo6 => "LinPo6",
    LinPo4T => "LinPo4T",
    LinPo6T => "LinPo6T",
    RaFeS => "RaFeS",
    RaFeD => "RaFeD",
    RaFeST => "RaFeST",
    RaFeDT => "RaFeDT",
    EsnS => "EsnS",
    EsnD => "EsnD",
    EsnST => "EsnST",
    EsnDT => "EsnDT",
    PgGpS => "PgGpS",
    PgGpD => "PgGpD",
    PgGpST => "PgGpST",
    PgGpDT => "PgGpDT",
    PgLlS => "PgLlS",
    PgLlD => "PgLlD",
    PgLlST => "PgLlST",
    PgLlDT => "PgLlDT",
    PwNn => "PwNn",
    SpNn => "SpNn",
    LlNn => "LlNn",
    SpPo => "SpPo",
    SpPo2 => "SpPo2",
    SpPo4 => "SpPo4",
    SpGp => "SpGp",
    GpGp => "GpGp",
    SINDy => "SINDy",
    SINDyN => "SINDyN",
}

impl MethodName {
    /// S/D target and timestep-input flag for the propagator families;
    /// `None` for baselines and smoothers.
    pub fn variant(&self) -> Option<(TargetKind, bool)> {
        use MethodName::*;
        match self {
            LinS | RaFeS | EsnS | PgGpS | PgLlS => Some((TargetKind::State, false)),
            LinD | RaFeD | EsnD | PgGpD | PgLlD => Some((TargetKind::DiffQuotient, false)),
            LinST | RaFeST | EsnST | PgGpST | PgLlST => Some((TargetKind::State, true)),
            LinDT | RaFeDT | EsnDT | PgGpDT | PgLlDT => Some((TargetKind::DiffQuotient, true)),
            LinPo4 | LinPo6 => Some((TargetKind::DiffQuotient, false)),
            LinPo4T | LinPo6T => Some((TargetKind::DiffQuotient, true)),
            _ => None,
        }
    }

    /// True for methods with an empty tuning domain.
    pub fn is_tuning_free(&self) -> bool {
        use MethodName::*;
        matches!(
            self,
            ConstM | ConstL | LinPo4 | LinPo6 | LinPo4T | LinPo6T | PwNn | SpNn | SpPo2 | SpPo4
        )
    }
}

/// One forecasting task: the observed series, the exact state at the
/// forecast origin, and the future times to predict.
#[derive(Debug, Clone)]
pub struct ForecastProblem {
    train: TimeSeries,
    origin_state: State,
    origin_time: f64,
    target_times: Vec<f64>,
}

impl ForecastProblem {
    /// Validates: non-empty series and targets, a finite origin state of the
    /// series' dimension, an origin no earlier than the last observation,
    /// and strictly increasing target times all after the origin.
    pub fn new(
        train: TimeSeries,
        origin_state: State,
        origin_time: f64,
        target_times: Vec<f64>,
    ) -> Result<Self, ForecastError> {
        if target_times.is_empty() {
            return Err(ForecastError::BadProblem("no target times".into()));
        }
        if !origin_state.iter().all(|x| x.is_finite()) {
            return Err(ForecastError::BadProblem("origin state is not finite".into()));
        }
        if origin_state.len() != train.dim() {
            return Err(ForecastError::BadProblem(format!(
                "origin state has dimension {} but the series has {}",
                origin_state.len(),
                train.dim()
            )));
        }
        if !origin_time.is_finite() || origin_time < train.last_time() {
            return Err(ForecastError::BadProblem(format!(
                "origin time {origin_time} precedes the last observation at {}",
                train.last_time()
            )));
        }
        let mut prev = origin_time;
        for &t in &target_times {
            if !t.is_finite() || t <= prev {
                return Err(ForecastError::BadProblem(format!(
                    "target times must be finite, strictly increasing, and after the origin \
                     (offender: {t})"
                )));
            }
            prev = t;
        }
        Ok(Self {
            train,
            origin_state,
            origin_time,
            target_times,
        })
    }

    pub fn train(&self) -> &TimeSeries {
        &self.train
    }

    pub fn origin_state(&self) -> &State {
        &self.origin_state
    }

    pub fn origin_time(&self) -> f64 {
        self.origin_time
    }

    pub fn target_times(&self) -> &[f64] {
        &self.target_times
    }
}

/// Learned state, one variant per estimator family.
#[derive(Debug, Clone)]
enum FittedModel {
    /// Climatology: the normalized-space training mean.
    ConstMean(State),
    /// Persistence: copy the origin state.
    Persistence,
    /// Analog replay over the normalized training series.
    Analog { train: TimeSeries, margin: usize },
    /// Stateless one-step model rolled out recursively.
    Propagator {
        cfg: PropagatorConfig,
        step: StepFn,
    },
    /// Echo state network (recurrent; carries its warmed reservoir).
    Esn(esn::EsnModel),
    /// Estimated vector field integrated forward from the origin.
    Field(smoother::FieldForecast),
}

/// A fitted method: immutable, shareable across threads, deterministic.
#[derive(Debug, Clone)]
pub struct FittedForecaster {
    method: MethodName,
    config: MethodConfig,
    normalizer: AffineNormalizer,
    model: FittedModel,
}

/// Fit `config` on `train`, drawing any randomness from `rng`.
///
/// The training states are normalized first — full whitening for every
/// method except `SINDy`, which uses the scale-only variant — and the
/// method-specific estimator runs in normalized coordinates. Degenerate
/// training sets (e.g. constant data, where the covariance has no inverse
/// square root) fall back from whitening to scale-only to identity, taking
/// the first normalization that is well defined.
pub fn fit(
    config: &MethodConfig,
    train: &TimeSeries,
    rng: &mut ChaCha12Rng,
) -> Result<FittedForecaster, ForecastError> {
    let method = MethodName::parse(&config.method)?;
    let (past_steps, skip, forward_skip) = match method {
        MethodName::LinS | MethodName::LinD | MethodName::LinST | MethodName::LinDT => (
            config.require_uint("K", 0, 32)?,
            config.require_uint("s", 1, 9)?,
            0,
        ),
        MethodName::RaFeS
        | MethodName::RaFeD
        | MethodName::RaFeST
        | MethodName::RaFeDT
        | MethodName::EsnS
        | MethodName::EsnD
        | MethodName::EsnST
        | MethodName::EsnDT => (0, 1, config.require_uint("psi", 0, 64)?),
        _ => (0, 1, 0),
    };

    let needed = (past_steps * skip + 2).max(forward_skip + 2).max(10);
    if train.len() < needed {
        return Err(ForecastError::TooFewPoints {
            needed,
            got: train.len(),
        });
    }

    let preferred = if method == MethodName::SINDy {
        NormalizeMode::ScaleOnly
    } else {
        NormalizeMode::Full
    };
    let normalizer = fit_normalizer_with_fallback(train.states(), preferred)?;
    let norm_train = normalizer.apply_series(train);

    let model = match method {
        MethodName::ConstM => {
            config.reject_unknown(&[])?;
            FittedModel::ConstMean(baselines::state_mean(norm_train.states()))
        }
        MethodName::ConstL => {
            config.reject_unknown(&[])?;
            FittedModel::Persistence
        }
        MethodName::Analog => {
            config.reject_unknown(&["omega"])?;
            let omega = config.require_uint("omega", 1, u64::MAX)?;
            if ![1, 10, 100].contains(&omega) {
                return Err(ForecastError::BadParam {
                    method: config.method.clone(),
                    param: "omega".into(),
                    message: format!("must be one of 1, 10, 100, got {omega}"),
                });
            }
            if train.len() <= omega {
                return Err(ForecastError::TooFewPoints {
                    needed: omega + 1,
                    got: train.len(),
                });
            }
            FittedModel::Analog {
                train: norm_train,
                margin: omega,
            }
        }
        MethodName::LinS | MethodName::LinD | MethodName::LinST | MethodName::LinDT => {
            config.reject_unknown(&["K", "s", "degree", "lambda"])?;
            let (target, with_dt) = method.variant().expect("propagator");
            let degree = config.require_uint("degree", 1, 64)?;
            let lambda = config.require_nonneg("lambda")?;
            let cfg = PropagatorConfig {
                target,
                timestep_input: with_dt,
                past_steps,
                skip,
                forward_skip: 0,
            };
            let step = lin::fit_lin(&norm_train, degree, lambda, &cfg)?;
            FittedModel::Propagator { cfg, step }
        }
        MethodName::LinPo4 | MethodName::LinPo6 | MethodName::LinPo4T | MethodName::LinPo6T => {
            config.reject_unknown(&[])?;
            let (target, with_dt) = method.variant().expect("propagator");
            let degree = match method {
                MethodName::LinPo4 | MethodName::LinPo4T => 4,
                _ => 6,
            };
            let cfg = PropagatorConfig {
                target,
                timestep_input: with_dt,
                past_steps: 0,
                skip: 1,
                forward_skip: 0,
            };
            let step = lin::fit_lin(&norm_train, degree, 0.0, &cfg)?;
            FittedModel::Propagator { cfg, step }
        }
        MethodName::RaFeS | MethodName::RaFeD | MethodName::RaFeST | MethodName::RaFeDT => {
            config.reject_unknown(&["c", "lambda", "psi", "r"])?;
            let (target, with_dt) = method.variant().expect("propagator");
            let c = config.require_positive("c")?;
            let lambda = config.require_nonneg("lambda")?;
            let realization = config.require_uint("r", 1, 64)?;
            let cfg = PropagatorConfig {
                target,
                timestep_input: with_dt,
                past_steps: 0,
                skip: 1,
                forward_skip,
            };
            let step = rafe::fit_rafe(&norm_train, c, lambda, realization, &cfg, rng)?;
            FittedModel::Propagator { cfg, step }
        }
        MethodName::EsnS | MethodName::EsnD | MethodName::EsnST | MethodName::EsnDT => {
            config.reject_unknown(&["c", "lambda", "psi", "r"])?;
            let (target, with_dt) = method.variant().expect("propagator");
            let c = config.require_positive("c")?;
            let lambda = config.require_nonneg("lambda")?;
            let realization = config.require_uint("r", 1, 64)?;
            let cfg = PropagatorConfig {
                target,
                timestep_input: with_dt,
                past_steps: 0,
                skip: 1,
                forward_skip,
            };
            FittedModel::Esn(esn::fit_esn(&norm_train, c, lambda, realization, &cfg, rng)?)
        }
        MethodName::PgGpS | MethodName::PgGpD | MethodName::PgGpST | MethodName::PgGpDT => {
            config.reject_unknown(&["h", "lambda"])?;
            let (target, with_dt) = method.variant().expect("propagator");
            let h = config.require_positive("h")?;
            let lambda = config.require_nonneg("lambda")?;
            let cfg = PropagatorConfig {
                target,
                timestep_input: with_dt,
                past_steps: 0,
                skip: 1,
                forward_skip: 0,
            };
            let step = pg::fit_pg_gp(&norm_train, h, lambda, &cfg)?;
            FittedModel::Propagator { cfg, step }
        }
        MethodName::PgLlS | MethodName::PgLlD | MethodName::PgLlST | MethodName::PgLlDT => {
            config.reject_unknown(&["h"])?;
            let (target, with_dt) = method.variant().expect("propagator");
            let h = config.require_positive("h")?;
            let cfg = PropagatorConfig {
                target,
                timestep_input: with_dt,
                past_steps: 0,
                skip: 1,
                forward_skip: 0,
            };
            let step = pg::fit_pg_ll(&norm_train, h, &cfg)?;
            FittedModel::Propagator { cfg, step }
        }
        MethodName::PwNn => {
            config.reject_unknown(&[])?;
            FittedModel::Field(smoother::fit_smoother(
                &norm_train,
                smoother::Stage1::PiecewiseLinear,
                smoother::Stage2::NearestNeighbor,
            )?)
        }
        MethodName::SpNn => {
            config.reject_unknown(&[])?;
            FittedModel::Field(smoother::fit_smoother(
                &norm_train,
                smoother::Stage1::Spline,
                smoother::Stage2::NearestNeighbor,
            )?)
        }
        MethodName::LlNn => {
            config.reject_unknown(&["h"])?;
            let h = config.require_positive("h")?;
            FittedModel::Field(smoother::fit_smoother(
                &norm_train,
                smoother::Stage1::LocalLinear { bandwidth: h },
                smoother::Stage2::NearestNeighbor,
            )?)
        }
        MethodName::SpPo => {
            config.reject_unknown(&["degree", "lambda"])?;
            let degree = config.require_uint("degree", 1, 64)?;
            let lambda = config.require_nonneg("lambda")?;
            FittedModel::Field(smoother::fit_smoother(
                &norm_train,
                smoother::Stage1::Spline,
                smoother::Stage2::Poly { degree, lambda },
            )?)
        }
        MethodName::SpPo2 | MethodName::SpPo4 => {
            config.reject_unknown(&[])?;
            let degree = if method == MethodName::SpPo2 { 2 } else { 4 };
            FittedModel::Field(smoother::fit_smoother(
                &norm_train,
                smoother::Stage1::Spline,
                smoother::Stage2::Poly { degree, lambda: 0.0 },
            )?)
        }
        MethodName::SpGp => {
            config.reject_unknown(&["h", "lambda"])?;
            let h = config.require_positive("h")?;
            let lambda = config.require_nonneg("lambda")?;
            FittedModel::Field(smoother::fit_smoother(
                &norm_train,
                smoother::Stage1::Spline,
                smoother::Stage2::Gp {
                    bandwidth: h,
                    lambda,
                },
            )?)
        }
        MethodName::GpGp => {
            config.reject_unknown(&["h", "lambda", "mu"])?;
            let h = config.require_positive("h")?;
            let lambda = config.require_nonneg("lambda")?;
            let mu = config.require_nonneg("mu")?;
            FittedModel::Field(smoother::fit_smoother(
                &norm_train,
                smoother::Stage1::Gp { regularization: mu },
                smoother::Stage2::Gp {
                    bandwidth: h,
                    lambda,
                },
            )?)
        }
        MethodName::SINDy | MethodName::SINDyN => {
            config.reject_unknown(&["tau"])?;
            let tau = config.require_nonneg("tau")?;
            FittedModel::Field(smoother::fit_smoother(
                &norm_train,
                smoother::Stage1::Spline,
                smoother::Stage2::Sindy { threshold: tau },
            )?)
        }
    };

    Ok(FittedForecaster {
        method,
        config: config.clone(),
        normalizer,
        model,
    })
}

fn fit_normalizer_with_fallback(
    states: &[State],
    preferred: NormalizeMode,
) -> Result<AffineNormalizer, ForecastError> {
    let ladder: &[NormalizeMode] = match preferred {
        NormalizeMode::Full => &[
            NormalizeMode::Full,
            NormalizeMode::ScaleOnly,
            NormalizeMode::Identity,
        ],
        NormalizeMode::ScaleOnly => &[NormalizeMode::ScaleOnly, NormalizeMode::Identity],
        NormalizeMode::Identity => &[NormalizeMode::Identity],
    };
    let mut last_err = None;
    for &mode in ladder {
        match fit_normalizer(states, mode) {
            Ok(n) => return Ok(n),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("ladder is never empty").into())
}

impl FittedForecaster {
    pub fn method(&self) -> MethodName {
        self.method
    }

    pub fn config(&self) -> &MethodConfig {
        &self.config
    }

    /// For sparse polynomial vector-field fits in raw coordinates: the
    /// recovered monomial coefficients, mapped back to data units. `None`
    /// for every other method (whitening mixes coordinates, so per-monomial
    /// coefficients have no raw-space meaning there).
    pub fn sparse_field_coefficients(&self) -> Option<SparseFieldCoefficients> {
        match (&self.model, self.normalizer.scale_factor()) {
            (FittedModel::Field(field), Some(scale)) => field.sparse_coefficients(scale),
            _ => None,
        }
    }

    /// Forecast at the problem's target times. Diverging rollouts report
    /// missing entries from the point of divergence on; genuine failures
    /// (dimension mismatches, non-finite origins) are errors.
    pub fn predict(&self, problem: &ForecastProblem) -> Result<Prediction, ForecastError> {
        if problem.train.dim() != self.normalizer.dim() {
            return Err(ForecastError::BadProblem(format!(
                "problem dimension {} does not match the fitted dimension {}",
                problem.train.dim(),
                self.normalizer.dim()
            )));
        }
        let targets = problem.target_times();
        match &self.model {
            FittedModel::ConstMean(mean) => {
                let value = self.normalizer.invert_state(mean);
                Ok(Prediction {
                    times: targets.to_vec(),
                    states: vec![Some(value); targets.len()],
                })
            }
            FittedModel::Persistence => Ok(Prediction {
                times: targets.to_vec(),
                states: vec![Some(problem.origin_state().clone()); targets.len()],
            }),
            FittedModel::Analog { train, margin } => {
                let origin = self.normalizer.apply_state(problem.origin_state());
                let pred = baselines::analog_predict(
                    train,
                    &origin,
                    problem.origin_time(),
                    targets,
                    *margin,
                )?;
                Ok(self.normalizer.invert_prediction(&pred))
            }
            FittedModel::Propagator { cfg, step } => {
                let origin = self.normalizer.apply_state(problem.origin_state());
                let pred =
                    propagator_rollout(step, &origin, problem.origin_time(), targets, cfg);
                Ok(self.normalizer.invert_prediction(&pred))
            }
            FittedModel::Esn(model) => {
                let origin = self.normalizer.apply_state(problem.origin_state());
                let pred = model.predict(&origin, problem.origin_time(), targets);
                Ok(self.normalizer.invert_prediction(&pred))
            }
            FittedModel::Field(field) => {
                let origin = self.normalizer.apply_state(problem.origin_state());
                let pred = field.predict(&origin, problem.origin_time(), targets);
                Ok(self.normalizer.invert_prediction(&pred))
            }
        }
    }
}
