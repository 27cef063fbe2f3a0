//! Two-stage vector-field forecasters: stage 1 smooths the observed series
//! and differentiates it to estimate (state, velocity) samples; stage 2 fits
//! a vector field to those samples; prediction integrates the fitted field.

use super::propagator::KERNEL_NEIGHBORS;
use super::ForecastError;
use crate::numkit::{
    cubic_spline, gp_smooth_with_derivative, piecewise_linear, ridge_fit, rk4_step, stlsq, Curve,
    FeatureMap, GpMemory, KernelSpec, LocalLinearMemory, NumError, RidgeModel, SparseModel,
};
use crate::series::{Prediction, State, TimeSeries};
use faer::Mat;

/// Time-kernel bandwidth of the kernel-ridge smoothing stage.
const SMOOTHER_TIME_BANDWIDTH: f64 = 0.1;
/// Integration substeps per forecast interval.
const SUBSTEPS: usize = 10;
/// Dictionary degree of the sparse-regression field model.
const SPARSE_DEGREE: usize = 5;
/// Maximum thresholding passes of the sparse-regression fit.
const SPARSE_PASSES: usize = 100;

/// How the observed series is smoothed and differentiated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Stage1 {
    /// Piecewise-linear interpolation; velocities are segment slopes at the
    /// observation times.
    PiecewiseLinear,
    /// Not-a-knot cubic spline; velocities are its analytic derivative at
    /// the observation times.
    Spline,
    /// Weighted local-linear regression against time, sampled with its
    /// slope on a uniform grid spanning the observation window.
    LocalLinear { bandwidth: f64 },
    /// Kernel-ridge smoothing against time, sampled with its analytic
    /// derivative on a uniform grid spanning the observation window.
    Gp { regularization: f64 },
}

/// How the vector field is fitted to the (state, velocity) samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Stage2 {
    /// Velocity of the nearest sampled state (ties: first sample).
    NearestNeighbor,
    /// Polynomial ridge regression.
    Poly { degree: usize, lambda: f64 },
    /// Localized kernel ridge over the samples.
    Gp { bandwidth: f64, lambda: f64 },
    /// Sequentially thresholded least squares on a degree-5 monomial
    /// dictionary: a sparse polynomial field.
    Sindy { threshold: f64 },
}

/// (state, velocity) samples estimated from the series by stage 1.
fn velocity_samples(
    train: &TimeSeries,
    stage1: &Stage1,
) -> Result<(Vec<State>, Vec<State>), ForecastError> {
    let times = train.times();
    let states = train.states();
    match stage1 {
        Stage1::PiecewiseLinear => {
            let curve = piecewise_linear(times, states)?;
            Ok(sample_curve(&curve, times))
        }
        Stage1::Spline => {
            let curve = cubic_spline(times, states)?;
            Ok(sample_curve(&curve, times))
        }
        Stage1::LocalLinear { bandwidth } => {
            let grid = uniform_grid(times[0], train.last_time(), train.len());
            let time_points: Vec<State> =
                times.iter().map(|&t| State::from_row_slice(&[t])).collect();
            let memory = LocalLinearMemory::new(&time_points, states)?;
            let mut points = Vec::with_capacity(grid.len());
            let mut velocities = Vec::with_capacity(grid.len());
            for &t in &grid {
                let fit = memory.fit_at(
                    &State::from_row_slice(&[t]),
                    *bandwidth,
                    KERNEL_NEIGHBORS,
                )?;
                velocities.push(fit.gradient.column(0).clone_owned());
                points.push(fit.value);
            }
            Ok((points, velocities))
        }
        Stage1::Gp { regularization } => {
            let grid = uniform_grid(times[0], train.last_time(), train.len());
            let spec = KernelSpec {
                bandwidth: SMOOTHER_TIME_BANDWIDTH,
                regularization: *regularization,
                neighbors: Some(KERNEL_NEIGHBORS),
            };
            Ok(gp_smooth_with_derivative(times, states, &grid, &spec)?)
        }
    }
}

fn sample_curve(curve: &impl Curve, times: &[f64]) -> (Vec<State>, Vec<State>) {
    let points = times.iter().map(|&t| curve.value(t)).collect();
    let velocities = times.iter().map(|&t| curve.derivative(t)).collect();
    (points, velocities)
}

fn uniform_grid(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![t0];
    }
    (0..n)
        .map(|i| t0 + (t1 - t0) * i as f64 / (n - 1) as f64)
        .collect()
}

fn to_rows(states: &[State]) -> Vec<Vec<f64>> {
    states.iter().map(|s| s.as_slice().to_vec()).collect()
}

fn to_mat(states: &[State]) -> Mat<f64> {
    let d = states[0].len();
    let mut m = Mat::<f64>::zeros(states.len(), d);
    for (i, s) in states.iter().enumerate() {
        for j in 0..d {
            m[(i, j)] = s[j];
        }
    }
    m
}

/// The fitted vector field.
#[derive(Debug, Clone)]
enum FieldModel {
    NearestNeighbor {
        points: Vec<State>,
        velocities: Vec<State>,
    },
    Poly {
        features: FeatureMap,
        model: RidgeModel,
    },
    Gp {
        memory: GpMemory,
        spec: KernelSpec,
    },
    Sparse {
        features: FeatureMap,
        model: SparseModel,
    },
}

impl FieldModel {
    fn eval(&self, u: &State) -> Result<State, NumError> {
        match self {
            FieldModel::NearestNeighbor { points, velocities } => {
                let mut best = 0;
                let mut best_d = f64::INFINITY;
                for (i, p) in points.iter().enumerate() {
                    let d = (p - u).norm_squared();
                    if d < best_d {
                        best_d = d;
                        best = i;
                    }
                }
                Ok(velocities[best].clone())
            }
            FieldModel::Poly { features, model } => {
                let row = features.eval(u.as_slice(), None)?;
                Ok(State::from_vec(model.predict_row(&row)))
            }
            FieldModel::Gp { memory, spec } => memory.predict(u, spec),
            FieldModel::Sparse { features, model } => {
                let row = features.eval(u.as_slice(), None)?;
                let q = model.weights.ncols();
                let mut out = State::zeros(q);
                for c in 0..q {
                    // only the surviving features contribute
                    for &p in &model.active[c] {
                        out[c] += model.weights[(p, c)] * row[p];
                    }
                }
                Ok(out)
            }
        }
    }
}

/// A fitted field forecaster: integrate the learned field from the forecast
/// origin with classical Runge-Kutta.
#[derive(Debug, Clone)]
pub(crate) struct FieldForecast {
    model: FieldModel,
}

/// Sparse polynomial field coefficients mapped back to data units.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseFieldCoefficients {
    /// Monomial exponent tuples, in dictionary order.
    pub exponents: Vec<Vec<u32>>,
    /// `coefficients[output][monomial]`, with exact zeros off the active
    /// sets.
    pub coefficients: Vec<Vec<f64>>,
}

impl SparseFieldCoefficients {
    /// The coefficient of the monomial with exponents `alpha` in the given
    /// output component, if that monomial is in the dictionary.
    pub fn coefficient(&self, output: usize, alpha: &[u32]) -> Option<f64> {
        let idx = self.exponents.iter().position(|e| e.as_slice() == alpha)?;
        self.coefficients.get(output).map(|c| c[idx])
    }
}

/// Fit a two-stage field forecaster on a (normalized) series.
pub(crate) fn fit_smoother(
    train: &TimeSeries,
    stage1: Stage1,
    stage2: Stage2,
) -> Result<FieldForecast, ForecastError> {
    let (points, velocities) = velocity_samples(train, &stage1)?;
    let d = train.dim();
    let model = match stage2 {
        Stage2::NearestNeighbor => FieldModel::NearestNeighbor { points, velocities },
        Stage2::Poly { degree, lambda } => {
            let features = FeatureMap::new(d, degree, false)?;
            let x = features.eval_matrix(&to_rows(&points), None)?;
            let y = to_mat(&velocities);
            FieldModel::Poly {
                model: ridge_fit(x.as_ref(), y.as_ref(), lambda)?,
                features,
            }
        }
        Stage2::Gp { bandwidth, lambda } => FieldModel::Gp {
            memory: GpMemory::new(&points, &velocities)?,
            spec: KernelSpec {
                bandwidth,
                regularization: lambda,
                neighbors: Some(KERNEL_NEIGHBORS),
            },
        },
        Stage2::Sindy { threshold } => {
            let features = FeatureMap::new(d, SPARSE_DEGREE, false)?;
            let x = features.eval_matrix(&to_rows(&points), None)?;
            let y = to_mat(&velocities);
            FieldModel::Sparse {
                model: stlsq(x.as_ref(), y.as_ref(), threshold, SPARSE_PASSES)?,
                features,
            }
        }
    };
    Ok(FieldForecast { model })
}

impl FieldForecast {
    /// Integrate the learned field from the origin through the target times
    /// (normalized coordinates), with [`SUBSTEPS`] Runge-Kutta substeps per
    /// interval. A non-finite state ends the forecast; the remaining targets
    /// are missing.
    pub(crate) fn predict(
        &self,
        origin_state: &State,
        origin_time: f64,
        target_times: &[f64],
    ) -> Prediction {
        let d = origin_state.len();
        let f = |u: &State| {
            self.model
                .eval(u)
                .unwrap_or_else(|_| State::from_element(d, f64::NAN))
        };
        let mut u = origin_state.clone();
        let mut t_prev = origin_time;
        let mut alive = true;
        let mut states = Vec::with_capacity(target_times.len());
        for &t in target_times {
            if alive {
                let h = (t - t_prev) / SUBSTEPS as f64;
                for _ in 0..SUBSTEPS {
                    u = rk4_step(&f, &u, h);
                    if !u.iter().all(|x| x.is_finite()) {
                        alive = false;
                        break;
                    }
                }
            }
            states.push(alive.then(|| u.clone()));
            t_prev = t;
        }
        Prediction {
            times: target_times.to_vec(),
            states,
        }
    }

    /// For a sparse polynomial field fitted on scale-normalized data
    /// (`z = u / s`): the field coefficients rewritten in data units,
    /// `w * s^(1 - |alpha|)`. `None` for any other field model.
    pub(crate) fn sparse_coefficients(&self, scale: f64) -> Option<SparseFieldCoefficients> {
        let FieldModel::Sparse { features, model } = &self.model else {
            return None;
        };
        let exponents = features.exponents().to_vec();
        let q = model.weights.ncols();
        let mut coefficients = vec![vec![0.0; exponents.len()]; q];
        for (idx, alpha) in exponents.iter().enumerate() {
            let total: u32 = alpha.iter().sum();
            let factor = scale.powi(1 - total as i32);
            for (c, out) in coefficients.iter_mut().enumerate() {
                out[idx] = model.weights[(idx, c)] * factor;
            }
        }
        Some(SparseFieldCoefficients {
            exponents,
            coefficients,
        })
    }
}
