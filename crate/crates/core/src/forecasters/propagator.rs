//! Shared machinery for one-step ("propagator") forecasters: assembling the
//! supervised training set from a time series, and rolling a fitted step
//! model forward recursively.

use super::ForecastError;
use crate::numkit::{FeatureMap, GpMemory, KernelSpec, LocalLinearMemory, NumError, RidgeModel};
use crate::series::{Prediction, State, TimeSeries};
use nalgebra::{DMatrix, DVector};

/// Neighborhood size for localized kernel and local-linear step models.
pub(crate) const KERNEL_NEIGHBORS: usize = 50;

/// What the step model is trained to output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    /// The next state itself.
    State,
    /// The difference quotient `(next - current) / span`; predictions then
    /// advance by an explicit Euler step `u + span * g`.
    DiffQuotient,
}

/// Shape of a propagator: target kind, timestep input, lagged inputs, and
/// forward skip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PropagatorConfig {
    pub target: TargetKind,
    /// Append the spanned timestep as an extra model input (`T` suffix).
    pub timestep_input: bool,
    /// Number of additional past states `K` in the input (0 = current only).
    pub past_steps: usize,
    /// Index stride `s` between the lagged input states.
    pub skip: usize,
    /// Forward skip `psi`: the target lies `1 + psi` indices ahead.
    pub forward_skip: usize,
}

impl PropagatorConfig {
    pub fn validate(&self) -> Result<(), ForecastError> {
        if self.past_steps > 32 {
            return Err(ForecastError::BadProblem(format!(
                "past-step count {} exceeds 32",
                self.past_steps
            )));
        }
        if self.skip == 0 || self.skip > 9 {
            return Err(ForecastError::BadProblem(format!(
                "lag stride {} outside 1..=9",
                self.skip
            )));
        }
        if self.forward_skip > 64 {
            return Err(ForecastError::BadProblem(format!(
                "forward skip {} exceeds 64",
                self.forward_skip
            )));
        }
        Ok(())
    }

    /// Length of one assembled input row, excluding any timestep column.
    pub fn input_dim(&self, state_dim: usize) -> usize {
        state_dim * (self.past_steps + 1)
    }
}

/// The supervised data extracted from a series for a propagator fit.
#[derive(Debug, Clone)]
pub struct PropagatorData {
    /// Row `i`: `concat(Y_{i-sK}, ..., Y_{i-s}, Y_i)` (oldest lag first),
    /// without the timestep column.
    pub inputs: Vec<Vec<f64>>,
    /// Regression targets: the state (or difference quotient) `1 + psi`
    /// indices ahead.
    pub targets: Vec<State>,
    /// The time `t_{i+1+psi} - t_i` each row's target spans. This is the
    /// quotient denominator for difference targets and the value fed as the
    /// timestep input of `T` variants.
    pub spans: Vec<f64>,
}

/// Assemble one-step regression data from a series.
///
/// Usable anchor indices run from `K*s` (enough history for the lags) to
/// `n - 2 - psi` (the target must exist), inclusive.
pub fn build_propagator_data(
    train: &TimeSeries,
    cfg: &PropagatorConfig,
) -> Result<PropagatorData, ForecastError> {
    cfg.validate()?;
    let n = train.len();
    let history = cfg.past_steps * cfg.skip;
    let ahead = 1 + cfg.forward_skip;
    if n < history + ahead + 1 {
        return Err(ForecastError::TooFewPoints {
            needed: history + ahead + 1,
            got: n,
        });
    }
    let d = train.dim();
    let rows = n - history - ahead;
    let mut inputs = Vec::with_capacity(rows);
    let mut targets = Vec::with_capacity(rows);
    let mut spans = Vec::with_capacity(rows);
    for i in history..n - ahead {
        let mut row = Vec::with_capacity(cfg.input_dim(d));
        for lag in (0..=cfg.past_steps).rev() {
            row.extend_from_slice(train.state(i - lag * cfg.skip).as_slice());
        }
        let span = train.time(i + ahead) - train.time(i);
        let target = match cfg.target {
            TargetKind::State => train.state(i + ahead).clone(),
            TargetKind::DiffQuotient => (train.state(i + ahead) - train.state(i)) / span,
        };
        inputs.push(row);
        targets.push(target);
        spans.push(span);
    }
    Ok(PropagatorData {
        inputs,
        targets,
        spans,
    })
}

/// A fitted one-step map. Inputs are the assembled lag row; `span` is the
/// timestep the step covers (consumed only by `T` variants).
#[derive(Debug, Clone)]
pub enum StepFn {
    /// Ridge regression on polynomial features of the input row.
    Ridge {
        features: FeatureMap,
        model: RidgeModel,
    },
    /// Ridge readout over random tanh features `tanh(W_in z + b)`.
    RandomFeatures {
        w_in: DMatrix<f64>,
        bias: DVector<f64>,
        model: RidgeModel,
    },
    /// Localized kernel-ridge prediction from memorized pairs.
    Gp { memory: GpMemory, spec: KernelSpec },
    /// Localized weighted-affine prediction from memorized pairs.
    LocalLinear {
        memory: LocalLinearMemory,
        bandwidth: f64,
    },
}

impl StepFn {
    /// Raw model output for one input row (state or difference quotient,
    /// depending on how the model was trained).
    pub fn eval(&self, input: &[f64], span: Option<f64>) -> Result<State, NumError> {
        match self {
            StepFn::Ridge { features, model } => {
                let row = features.eval(input, span)?;
                Ok(DVector::from_vec(model.predict_row(&row)))
            }
            StepFn::RandomFeatures { w_in, bias, model } => {
                let z = assemble_query(input, span);
                let mut acts = w_in * z + bias;
                acts.apply(|a| *a = a.tanh());
                Ok(DVector::from_vec(model.predict_row(acts.as_slice())))
            }
            StepFn::Gp { memory, spec } => memory.predict(&assemble_query(input, span), spec),
            StepFn::LocalLinear { memory, bandwidth } => {
                memory.predict(&assemble_query(input, span), *bandwidth, KERNEL_NEIGHBORS)
            }
        }
    }
}

/// Input row plus optional timestep coordinate, as one vector.
pub(crate) fn assemble_query(input: &[f64], span: Option<f64>) -> State {
    match span {
        None => DVector::from_row_slice(input),
        Some(dt) => {
            let mut z = DVector::zeros(input.len() + 1);
            z.rows_mut(0, input.len()).copy_from_slice(input);
            z[input.len()] = dt;
            z
        }
    }
}

/// Recursive closed-loop forecast of a fitted step model.
///
/// The chain starts at the origin state and advances `(1 + psi)` target
/// strides per step; with `psi > 0` the intermediate target times are filled
/// by linear interpolation along the chain. Lag history that predates the
/// origin is initialized by replicating the origin state. A non-finite step
/// output ends the chain; every target from there on is reported missing.
pub fn propagator_rollout(
    step: &StepFn,
    origin_state: &State,
    origin_time: f64,
    target_times: &[f64],
    cfg: &PropagatorConfig,
) -> Prediction {
    let m = target_times.len();
    if m == 0 {
        return Prediction {
            times: Vec::new(),
            states: Vec::new(),
        };
    }
    let d = origin_state.len();
    let dt0 = target_times[0] - origin_time;
    let stride = 1 + cfg.forward_skip;
    let span = stride as f64 * dt0;
    let chain_steps = m.div_ceil(stride);

    let mut chain: Vec<State> = Vec::with_capacity(chain_steps + 1);
    chain.push(origin_state.clone());
    let mut input = vec![0.0; cfg.input_dim(d)];
    'steps: for j in 0..chain_steps {
        // oldest lag first; history before the origin replicates the origin
        for (slot, lag) in (0..=cfg.past_steps).rev().enumerate() {
            let idx = j.saturating_sub(lag * cfg.skip);
            input[slot * d..(slot + 1) * d].copy_from_slice(chain[idx].as_slice());
        }
        let dt_input = cfg.timestep_input.then_some(span);
        let g = match step.eval(&input, dt_input) {
            Ok(g) => g,
            Err(_) => break 'steps,
        };
        let next = match cfg.target {
            TargetKind::State => g,
            TargetKind::DiffQuotient => &chain[j] + g * span,
        };
        if !next.iter().all(|x| x.is_finite()) {
            break 'steps;
        }
        chain.push(next);
    }
    chain_to_prediction(&chain, target_times, cfg.forward_skip)
}

/// Sample a coarse forecast chain (one node per `(1 + psi)` target strides,
/// node 0 = origin) at the target times, interpolating linearly along the
/// chain for intermediate targets. Targets beyond the last chain node are
/// missing.
pub(crate) fn chain_to_prediction(
    chain: &[State],
    target_times: &[f64],
    forward_skip: usize,
) -> Prediction {
    let stride = 1 + forward_skip;
    let states = (1..=target_times.len())
        .map(|k| {
            let q = k / stride;
            let r = k % stride;
            if r == 0 {
                chain.get(q).cloned()
            } else {
                match (chain.get(q), chain.get(q + 1)) {
                    (Some(a), Some(b)) => {
                        let w = r as f64 / stride as f64;
                        Some(a + (b - a) * w)
                    }
                    _ => None,
                }
            }
        })
        .collect();
    Prediction {
        times: target_times.to_vec(),
        states,
    }
}
