//! Random-feature propagator: a fixed, untrained one-layer tanh network
//! supplies features; ridge regression trains the readout.

use super::propagator::{assemble_query, build_propagator_data, PropagatorConfig, StepFn};
use super::ForecastError;
use crate::numkit::ridge_fit;
use crate::seeding;
use crate::series::TimeSeries;
use faer::Mat;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};
use rand_chacha::ChaCha12Rng;

/// Width of the random feature layer.
pub(crate) const NEURONS: usize = 400;

/// Draw the random input layer: `NEURONS x d_in` weights and a bias vector,
/// all uniform on `(-c, c)`, from a sub-stream tied to the realization
/// index so distinct realizations decorrelate while staying reproducible.
pub(crate) fn draw_input_layer(
    d_in: usize,
    c: f64,
    realization: usize,
    rng: &mut ChaCha12Rng,
) -> (DMatrix<f64>, DVector<f64>) {
    let mut sub = seeding::rng(rng.next_u64(), "input-layer", &[realization as u64]);
    let w_in = DMatrix::from_fn(NEURONS, d_in, |_, _| sub.random_range(-c..c));
    let bias = DVector::from_fn(NEURONS, |_, _| sub.random_range(-c..c));
    (w_in, bias)
}

/// Fit the random-feature propagator on a (normalized) series.
pub(crate) fn fit_rafe(
    train: &TimeSeries,
    c: f64,
    lambda: f64,
    realization: usize,
    cfg: &PropagatorConfig,
    rng: &mut ChaCha12Rng,
) -> Result<StepFn, ForecastError> {
    let data = build_propagator_data(train, cfg)?;
    let d_in = cfg.input_dim(train.dim()) + usize::from(cfg.timestep_input);
    let (w_in, bias) = draw_input_layer(d_in, c, realization, rng);

    let rows = data.inputs.len();
    let mut x = Mat::<f64>::zeros(rows, NEURONS);
    for (i, input) in data.inputs.iter().enumerate() {
        let z = assemble_query(input, cfg.timestep_input.then(|| data.spans[i]));
        let mut acts = &w_in * z + &bias;
        acts.apply(|a| *a = a.tanh());
        for j in 0..NEURONS {
            x[(i, j)] = acts[j];
        }
    }
    let d = train.dim();
    let mut y = Mat::<f64>::zeros(rows, d);
    for (i, t) in data.targets.iter().enumerate() {
        for j in 0..d {
            y[(i, j)] = t[j];
        }
    }
    let model = ridge_fit(x.as_ref(), y.as_ref(), lambda)?;
    Ok(StepFn::RandomFeatures { w_in, bias, model })
}
