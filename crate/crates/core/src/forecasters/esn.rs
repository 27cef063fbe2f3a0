//! Echo state network: a fixed sparse random reservoir with tanh updates
//! and a ridge-trained linear readout, run closed-loop for prediction.

use super::propagator::{
    assemble_query, build_propagator_data, chain_to_prediction, PropagatorConfig,
};
use super::rafe::NEURONS;
use super::ForecastError;
use crate::numkit::{ridge_fit, RidgeModel};
use crate::seeding;
use crate::series::{Prediction, State, TimeSeries};
use faer::Mat;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};
use rand_chacha::ChaCha12Rng;

/// Nonzero recurrent connections per reservoir node.
pub(crate) const NODE_DEGREE: usize = 6;
/// Spectral radius the reservoir matrix is rescaled to.
pub(crate) const SPECTRAL_RADIUS: f64 = 0.1;
/// Power-iteration steps used to estimate the spectral radius.
const POWER_STEPS: usize = 100;
/// Trailing growth factors averaged for the radius estimate (geometric
/// mean over a window damps the oscillation a complex leading pair causes).
const POWER_WINDOW: usize = 50;

/// Square sparse matrix with a fixed number of nonzeros per row.
#[derive(Debug, Clone)]
pub(crate) struct SparseReservoir {
    size: usize,
    /// Column indices, `NODE_DEGREE` per row.
    cols: Vec<u32>,
    /// Matching weights.
    vals: Vec<f64>,
}

impl SparseReservoir {
    /// Sample a reservoir: per row, `NODE_DEGREE` distinct columns with
    /// weights uniform on (-1, 1), then rescale to [`SPECTRAL_RADIUS`].
    fn sample(size: usize, rng: &mut ChaCha12Rng) -> Self {
        let mut cols = Vec::with_capacity(size * NODE_DEGREE);
        let mut vals = Vec::with_capacity(size * NODE_DEGREE);
        for _ in 0..size {
            let picks = rand::seq::index::sample(rng, size, NODE_DEGREE);
            for c in picks {
                cols.push(c as u32);
                vals.push(rng.random_range(-1.0..1.0));
            }
        }
        let mut reservoir = Self { size, cols, vals };
        let start = DVector::from_fn(size, |_, _| rng.random_range(-1.0..1.0));
        let rho = reservoir.spectral_radius_estimate(&start);
        let scale = SPECTRAL_RADIUS / rho;
        for v in &mut reservoir.vals {
            *v *= scale;
        }
        reservoir
    }

    fn apply(&self, x: &DVector<f64>, out: &mut DVector<f64>) {
        for i in 0..self.size {
            let mut acc = 0.0;
            let base = i * NODE_DEGREE;
            for k in 0..NODE_DEGREE {
                acc += self.vals[base + k] * x[self.cols[base + k] as usize];
            }
            out[i] = acc;
        }
    }

    /// Power-iteration estimate of the spectral radius: normalize the
    /// iterate each step and return the geometric mean of the trailing
    /// growth factors.
    fn spectral_radius_estimate(&self, start: &DVector<f64>) -> f64 {
        let mut v = start.clone();
        let norm = v.norm();
        assert!(norm > 0.0, "power iteration needs a nonzero start");
        v /= norm;
        let mut w = DVector::zeros(self.size);
        let mut log_growth = Vec::with_capacity(POWER_STEPS);
        for _ in 0..POWER_STEPS {
            self.apply(&v, &mut w);
            let g = w.norm();
            if g == 0.0 {
                return 0.0;
            }
            log_growth.push(g.ln());
            v.copy_from(&w);
            v /= g;
        }
        let tail = &log_growth[POWER_STEPS - POWER_WINDOW..];
        (tail.iter().sum::<f64>() / tail.len() as f64).exp()
    }

    #[cfg(test)]
    fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        for i in 0..self.size {
            for k in 0..NODE_DEGREE {
                let base = i * NODE_DEGREE;
                m[(i, self.cols[base + k] as usize)] += self.vals[base + k];
            }
        }
        m
    }
}

/// A fitted echo state network, including the reservoir state reached after
/// absorbing the full training sequence (predictions start closed-loop from
/// there).
#[derive(Debug, Clone)]
pub(crate) struct EsnModel {
    w_in: DMatrix<f64>,
    bias: DVector<f64>,
    reservoir: SparseReservoir,
    readout: RidgeModel,
    warm: DVector<f64>,
    cfg: PropagatorConfig,
}

impl EsnModel {
    /// One reservoir update `r <- tanh(A r + W_in z + b)`.
    fn update(&self, r: &mut DVector<f64>, scratch: &mut DVector<f64>, z: &State) {
        self.reservoir.apply(r, scratch);
        *scratch += &self.w_in * z + &self.bias;
        scratch.apply(|a| *a = a.tanh());
        std::mem::swap(r, scratch);
    }

    /// Closed-loop forecast from the warmed reservoir, in normalized
    /// coordinates.
    pub(crate) fn predict(
        &self,
        origin_state: &State,
        origin_time: f64,
        target_times: &[f64],
    ) -> Prediction {
        let m = target_times.len();
        if m == 0 {
            return Prediction {
                times: Vec::new(),
                states: Vec::new(),
            };
        }
        let stride = 1 + self.cfg.forward_skip;
        let span = stride as f64 * (target_times[0] - origin_time);
        let chain_steps = m.div_ceil(stride);

        let mut r = self.warm.clone();
        let mut scratch = DVector::zeros(r.len());
        let mut chain: Vec<State> = Vec::with_capacity(chain_steps + 1);
        chain.push(origin_state.clone());
        for j in 0..chain_steps {
            let z = assemble_query(
                chain[j].as_slice(),
                self.cfg.timestep_input.then_some(span),
            );
            self.update(&mut r, &mut scratch, &z);
            let g = DVector::from_vec(self.readout.predict_row(r.as_slice()));
            let next = match self.cfg.target {
                super::TargetKind::State => g,
                super::TargetKind::DiffQuotient => &chain[j] + g * span,
            };
            if !next.iter().all(|x| x.is_finite()) {
                break;
            }
            chain.push(next);
        }
        chain_to_prediction(&chain, target_times, self.cfg.forward_skip)
    }
}

/// Fit an echo state network on a (normalized) series.
///
/// The reservoir processes the training inputs in time order; the readout
/// is ridge-fitted from the reservoir states to the propagator targets. The
/// sequence is then fed to its end so the stored reservoir state has
/// absorbed every observation. Timestep inputs for the trailing feeds,
/// whose target span lies beyond the data, reuse the mean training span.
pub(crate) fn fit_esn(
    train: &TimeSeries,
    c: f64,
    lambda: f64,
    realization: usize,
    cfg: &PropagatorConfig,
    rng: &mut ChaCha12Rng,
) -> Result<EsnModel, ForecastError> {
    let data = build_propagator_data(train, cfg)?;
    let d_in = cfg.input_dim(train.dim()) + usize::from(cfg.timestep_input);

    // one sub-stream per realization index drives every random draw
    let mut sub = seeding::rng(rng.next_u64(), "reservoir", &[realization as u64]);
    let w_in = DMatrix::from_fn(NEURONS, d_in, |_, _| sub.random_range(-c..c));
    let bias = DVector::from_fn(NEURONS, |_, _| sub.random_range(-c..c));
    let reservoir = SparseReservoir::sample(NEURONS, &mut sub);

    let n = train.len();
    let rows = data.inputs.len();
    let mean_span = data.spans.iter().sum::<f64>() / data.spans.len() as f64;

    let mut r = DVector::zeros(NEURONS);
    let mut scratch = DVector::zeros(NEURONS);
    let mut x = Mat::<f64>::zeros(rows, NEURONS);
    let model_stub = EsnModel {
        w_in,
        bias,
        reservoir,
        readout: RidgeModel {
            weights: Mat::zeros(0, 0),
            penalty: lambda,
        },
        warm: DVector::zeros(0),
        cfg: *cfg,
    };
    for i in 0..n {
        let span = if i < rows {
            data.spans[i]
        } else {
            mean_span
        };
        let z = assemble_query(
            train.state(i).as_slice(),
            cfg.timestep_input.then_some(span),
        );
        model_stub.update(&mut r, &mut scratch, &z);
        if i < rows {
            for j in 0..NEURONS {
                x[(i, j)] = r[j];
            }
        }
    }

    let d = train.dim();
    let mut y = Mat::<f64>::zeros(rows, d);
    for (i, t) in data.targets.iter().enumerate() {
        for j in 0..d {
            y[(i, j)] = t[j];
        }
    }
    let readout = ridge_fit(x.as_ref(), y.as_ref(), lambda)?;

    Ok(EsnModel {
        readout,
        warm: r,
        ..model_stub
    })
}
