//! Training-data-only baselines: the observation mean (climatology) and
//! analog replay of the nearest training segment.

use super::ForecastError;
use crate::series::{Prediction, State, TimeSeries};

/// Arithmetic mean of a non-empty state slice.
pub(crate) fn state_mean(states: &[State]) -> State {
    let mut mean = State::zeros(states[0].len());
    for s in states {
        mean += s;
    }
    mean / states.len() as f64
}

/// Relative tolerance for recognizing a constant observation grid.
const GRID_TOLERANCE: f64 = 1e-9;

/// Forecast by replaying the training segment that starts nearest to the
/// current state.
///
/// Starting from `x = origin_state`, find the training index `k` minimizing
/// `||Y_k - x||` among indices at least `margin` steps from the end (ties:
/// smallest index), then emit the subsequent training states at the
/// successive target times — directly (`Y_{k+1}, Y_{k+2}, ...`) when the
/// observation grid and the target grid share one constant stride, otherwise
/// by linearly interpolating the training series at the equivalent time
/// offsets. When the training series is exhausted, restart the search with
/// `x` set to the last emitted state. On non-constant grids a restart point
/// can sit too close to the end of the series to reach the next target
/// offset; the forecast then emits the final training state and continues,
/// so every call terminates.
pub fn analog_predict(
    train: &TimeSeries,
    origin_state: &State,
    origin_time: f64,
    target_times: &[f64],
    margin: usize,
) -> Result<Prediction, ForecastError> {
    if train.is_empty() {
        return Err(ForecastError::BadProblem("empty training series".into()));
    }
    if margin == 0 || train.len() <= margin {
        return Err(ForecastError::BadProblem(format!(
            "margin {margin} must be in 1..{} (series length {})",
            train.len(),
            train.len()
        )));
    }
    if origin_state.len() != train.dim() {
        return Err(ForecastError::BadProblem(format!(
            "origin state has dimension {} but the series has {}",
            origin_state.len(),
            train.dim()
        )));
    }
    let n = train.len();
    let m = target_times.len();

    let constant_stride = shared_constant_stride(train, origin_time, target_times);

    let mut states: Vec<Option<State>> = Vec::with_capacity(m);
    let mut x = origin_state.clone();
    // the time the current anchor state corresponds to on the target axis
    let mut anchor_time = origin_time;

    while states.len() < m {
        let k = nearest_index(train, &x, n - margin);
        if constant_stride.is_some() {
            // index arithmetic: target j steps after the anchor replays Y_{k+j}
            let mut j = 1;
            while k + j < n && states.len() < m {
                states.push(Some(train.state(k + j).clone()));
                j += 1;
            }
            // series exhausted (k + j == n): restart from the last emitted
            // state, which is Y_{n-1}; k <= n - 1 - margin guarantees at
            // least `margin` emissions per round, so this loop terminates.
        } else {
            let mut emitted = 0usize;
            while states.len() < m {
                let offset = target_times[states.len()] - anchor_time;
                let replay_time = train.time(k) + offset;
                if replay_time > train.last_time() {
                    break;
                }
                states.push(Some(train.interpolate_linear(replay_time)));
                emitted += 1;
            }
            if emitted == 0 && states.len() < m {
                // the anchor sits within one target stride of the series
                // end: emit the final state to guarantee progress
                states.push(Some(train.last_state().clone()));
            }
        }
        if states.len() < m {
            x = states
                .last()
                .and_then(|s| s.clone())
                .expect("at least one state emitted per round");
            anchor_time = target_times[states.len() - 1];
        }
    }

    Ok(Prediction {
        times: target_times.to_vec(),
        states,
    })
}

/// The common stride when both the training grid and the target grid
/// (including the origin-to-first-target gap) advance by one constant step.
fn shared_constant_stride(
    train: &TimeSeries,
    origin_time: f64,
    target_times: &[f64],
) -> Option<f64> {
    let dt = train.time(1.min(train.len() - 1)) - train.time(0);
    if train.len() < 2 || dt <= 0.0 {
        return None;
    }
    let tol = GRID_TOLERANCE * dt.abs().max(1.0);
    for i in 1..train.len() {
        if (train.time(i) - train.time(i - 1) - dt).abs() > tol {
            return None;
        }
    }
    let mut prev = origin_time;
    for &t in target_times {
        if (t - prev - dt).abs() > tol {
            return None;
        }
        prev = t;
    }
    Some(dt)
}

/// Index of the training state nearest to `x` among `0..limit`; ties break
/// toward the smallest index.
fn nearest_index(train: &TimeSeries, x: &State, limit: usize) -> usize {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for i in 0..limit {
        let d = (train.state(i) - x).norm_squared();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}
