//! Trajectory integration and observed-dataset assembly.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Exp, Normal};

use super::{
    sample_field, GenerationConfig, ObservationScheme, SystemError, SystemKind, TimestepMode,
    VectorField,
};
use crate::series::{State, TimeSeries};

/// Attempt budget for the fixed-point rejection loop.
const MAX_DRAW_ATTEMPTS: usize = 21;
/// Length of the tail window inspected by the fixed-point rejection.
const REJECTION_TAIL_SPAN: f64 = 20.0;
/// Tail-to-whole variance ratio below which a run counts as parked.
const REJECTION_VARIANCE_RATIO: f64 = 1e-3;

/// One repetition's training observations and noise-free evaluation data.
#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    /// Observed (possibly noisy) training series on (0, origin_time].
    pub train: TimeSeries,
    /// Noise-free truth at the test stride on (origin_time, origin_time + horizon].
    pub truth_test: TimeSeries,
    /// Noise-free state at the forecast origin (end of the training span).
    pub origin_state: State,
    /// Forecast origin time (the training span).
    pub origin_time: f64,
    /// Length of the forecast window.
    pub horizon: f64,
    /// Seed this instance was generated from.
    pub seed: u64,
}

#[inline]
fn rk4_step3(field: &VectorField, u: &[f64; 3], dt: f64) -> [f64; 3] {
    let add = |a: &[f64; 3], b: &[f64; 3], c: f64| {
        [a[0] + b[0] * c, a[1] + b[1] * c, a[2] + b[2] * c]
    };
    let k1 = field.eval3(u);
    let k2 = field.eval3(&add(u, &k1, dt / 2.0));
    let k3 = field.eval3(&add(u, &k2, dt / 2.0));
    let k4 = field.eval3(&add(u, &k3, dt));
    [
        u[0] + (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]) * (dt / 6.0),
        u[1] + (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]) * (dt / 6.0),
        u[2] + (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]) * (dt / 6.0),
    ]
}

#[inline]
fn finite3(u: &[f64; 3]) -> bool {
    u.iter().all(|v| v.is_finite())
}

/// Integrate on the solver grid, keeping the full trajectory.
fn solve_grid(
    field: &VectorField,
    u0: [f64; 3],
    h: f64,
    steps: usize,
) -> Result<Vec<[f64; 3]>, SystemError> {
    let mut traj = Vec::with_capacity(steps + 1);
    traj.push(u0);
    let mut u = u0;
    for i in 1..=steps {
        u = rk4_step3(field, &u, h);
        if !finite3(&u) {
            return Err(SystemError::Divergence { step: i });
        }
        traj.push(u);
    }
    Ok(traj)
}

/// Integrate to an off-grid time without storing the trajectory.
fn integrate_to(
    field: &VectorField,
    u0: [f64; 3],
    t_end: f64,
    h: f64,
) -> Result<[f64; 3], SystemError> {
    let whole = (t_end / h).floor() as usize;
    let mut u = u0;
    for i in 1..=whole {
        u = rk4_step3(field, &u, h);
        if !finite3(&u) {
            return Err(SystemError::Divergence { step: i });
        }
    }
    let rem = t_end - whole as f64 * h;
    if rem > 1e-12 {
        u = rk4_step3(field, &u, rem);
        if !finite3(&u) {
            return Err(SystemError::Divergence { step: whole + 1 });
        }
    }
    Ok(u)
}

/// State at an arbitrary time inside the solved span: the stored sample when
/// `t` hits the solver grid, otherwise one partial solver step from the grid
/// node just below `t`.
fn sample_at(traj: &[[f64; 3]], field: &VectorField, h: f64, t: f64) -> [f64; 3] {
    let tol = 1e-9 * t.abs().max(1.0);
    let last = traj.len() - 1;
    let mut k = (t / h).floor() as usize;
    if k > last {
        k = last;
    }
    if (t - k as f64 * h).abs() <= tol {
        return traj[k];
    }
    if k + 1 <= last && ((k + 1) as f64 * h - t).abs() <= tol {
        return traj[k + 1];
    }
    let k = k.min(last - 1);
    rk4_step3(field, &traj[k], t - k as f64 * h)
}

/// Draw a state from the attractor of the classic system: burn in from
/// (1,1,1) for 100 time units, then take the state at a uniformly random
/// time within the following 100 units.
pub fn sample_initial_condition<R: Rng + ?Sized>(rng: &mut R) -> Result<State, SystemError> {
    let pick = rng.random_range(100.0..200.0);
    let u = integrate_to(&VectorField::Standard, [1.0, 1.0, 1.0], pick, 1e-3)?;
    Ok(DVector::from_column_slice(&u))
}

/// True when the trajectory's tail window has collapsed relative to the run.
fn approaches_fixed_point(traj: &[[f64; 3]], h: f64, total_span: f64) -> bool {
    // subsample for speed; the statistics are insensitive to the stride
    let stride = (1e-2 / h).round().max(1.0) as usize;
    let tail_start = total_span - REJECTION_TAIL_SPAN;
    let variance = |lo_t: f64| -> f64 {
        let samples: Vec<&[f64; 3]> = traj
            .iter()
            .enumerate()
            .filter(|(i, _)| i % stride == 0 && (*i as f64) * h >= lo_t)
            .map(|(_, u)| u)
            .collect();
        let n = samples.len() as f64;
        let mut mean = [0.0; 3];
        for u in &samples {
            for c in 0..3 {
                mean[c] += u[c];
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        samples
            .iter()
            .map(|u| {
                (0..3)
                    .map(|c| (u[c] - mean[c]) * (u[c] - mean[c]))
                    .sum::<f64>()
            })
            .sum::<f64>()
            / n
    };
    let whole = variance(0.0);
    let tail = variance(tail_start.max(0.0));
    tail < REJECTION_VARIANCE_RATIO * whole
}

/// Generate one repetition: draw a field and initial condition from `seed`,
/// integrate the truth, and observe it under `scheme`.
///
/// Consumes one deterministic random stream in a fixed order (field, initial
/// condition, observation times, noise), so equal seeds give bitwise equal
/// instances. Randomly drawn fields (constant-parameter and state-dependent
/// alike) whose trajectory parks near a fixed point are rejected and redrawn
/// from the same stream; the classic fixed parameters never park, so that
/// variant skips the check.
pub fn generate_repetition(
    kind: SystemKind,
    scheme: &ObservationScheme,
    cfg: &GenerationConfig,
    seed: u64,
) -> Result<GeneratedInstance, SystemError> {
    cfg.validate(scheme)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let total_span = cfg.train_span + cfg.horizon;
    let steps = (total_span / cfg.solver_step).round() as usize;

    for _ in 0..MAX_DRAW_ATTEMPTS {
        let field = sample_field(kind, &mut rng);
        let u0 = sample_initial_condition(&mut rng)?;
        let u0 = [u0[0], u0[1], u0[2]];
        let traj = solve_grid(&field, u0, cfg.solver_step, steps)?;
        if kind != SystemKind::Standard
            && approaches_fixed_point(&traj, cfg.solver_step, total_span)
        {
            continue;
        }
        return build_instance(&field, &traj, scheme, cfg, seed, &mut rng);
    }
    Err(SystemError::RepeatedFixedPoint {
        attempts: MAX_DRAW_ATTEMPTS,
    })
}

fn build_instance(
    field: &VectorField,
    traj: &[[f64; 3]],
    scheme: &ObservationScheme,
    cfg: &GenerationConfig,
    seed: u64,
    rng: &mut ChaCha12Rng,
) -> Result<GeneratedInstance, SystemError> {
    let h = cfg.solver_step;
    let origin_state =
        DVector::from_column_slice(&sample_at(traj, field, h, cfg.train_span));

    let train_times: Vec<f64> = match scheme.mode {
        TimestepMode::Constant => {
            let n = (cfg.train_span / scheme.base_dt).round() as usize;
            (1..=n).map(|i| i as f64 * scheme.base_dt).collect()
        }
        TimestepMode::Exponential => {
            let exp = Exp::new(1.0 / scheme.base_dt)
                .map_err(|e| SystemError::InvalidConfig(e.to_string()))?;
            let mut times = Vec::new();
            let mut t = 0.0f64;
            loop {
                t += rng.sample(exp);
                if t >= cfg.train_span {
                    break;
                }
                // merge increments too small to advance the clock in floating point
                if times.last().is_some_and(|&prev| t <= prev) {
                    continue;
                }
                times.push(t);
            }
            times
        }
    };
    if train_times.is_empty() {
        return Err(SystemError::EmptyTraining);
    }

    let mut train_states: Vec<State> = train_times
        .iter()
        .map(|&t| DVector::from_column_slice(&sample_at(traj, field, h, t)))
        .collect();
    if scheme.noise_sd > 0.0 {
        let normal = Normal::new(0.0, scheme.noise_sd)
            .map_err(|e| SystemError::InvalidConfig(e.to_string()))?;
        for state in &mut train_states {
            for c in 0..3 {
                state[c] += rng.sample(normal);
            }
        }
    }

    let m = (cfg.horizon / scheme.base_dt).round() as usize;
    let test_times: Vec<f64> = (1..=m)
        .map(|k| cfg.train_span + k as f64 * scheme.base_dt)
        .collect();
    let test_states: Vec<State> = test_times
        .iter()
        .map(|&t| DVector::from_column_slice(&sample_at(traj, field, h, t)))
        .collect();

    Ok(GeneratedInstance {
        train: TimeSeries::new(train_times, train_states)?,
        truth_test: TimeSeries::new(test_times, test_states)?,
        origin_state,
        origin_time: cfg.train_span,
        horizon: cfg.horizon,
        seed,
    })
}
