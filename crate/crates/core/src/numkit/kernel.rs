//! Gaussian kernel-ridge ("GP mean") prediction.

use super::solve::spd_solve;
use super::NumError;
use crate::series::State;
use nalgebra::DMatrix;
use std::cmp::Ordering;

/// Gaussian kernel configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    /// Bandwidth `h` of `exp(-||x - x'||^2 / (2 h^2))`.
    pub bandwidth: f64,
    /// Nugget added to the kernel matrix diagonal.
    pub regularization: f64,
    /// When set, each prediction uses only the `k` nearest training inputs.
    pub neighbors: Option<usize>,
}

impl KernelSpec {
    pub fn validate(&self) -> Result<(), NumError> {
        if !(self.bandwidth.is_finite() && self.bandwidth > 0.0) {
            return Err(NumError::InvalidArgument(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth
            )));
        }
        if !(self.regularization.is_finite() && self.regularization >= 0.0) {
            return Err(NumError::InvalidArgument(format!(
                "regularization must be non-negative, got {}",
                self.regularization
            )));
        }
        if let Some(k) = self.neighbors {
            if k == 0 {
                return Err(NumError::InvalidArgument("neighbor count must be >= 1".into()));
            }
        }
        Ok(())
    }
}

/// Total order on float slices; inputs are validated finite beforehand.
fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).expect("finite values") {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Memorized training set in a canonical order.
///
/// Training pairs are sorted by input (then target) coordinates before any
/// arithmetic, so neighbor selection and the summation order — hence the
/// exact floating-point result — do not depend on how the caller happened to
/// order the data.
#[derive(Debug, Clone)]
pub struct GpMemory {
    x: Vec<State>,
    y: Vec<State>,
}

impl GpMemory {
    pub fn new(train_x: &[State], train_y: &[State]) -> Result<Self, NumError> {
        if train_x.is_empty() {
            return Err(NumError::EmptyTrainingSet);
        }
        if train_x.len() != train_y.len() {
            return Err(NumError::Dimension(format!(
                "{} inputs vs {} targets",
                train_x.len(),
                train_y.len()
            )));
        }
        for (i, (x, y)) in train_x.iter().zip(train_y).enumerate() {
            if !x.iter().all(|v| v.is_finite()) || !y.iter().all(|v| v.is_finite()) {
                return Err(NumError::NonFinite(format!("training pair {i}")));
            }
        }
        let mut order: Vec<usize> = (0..train_x.len()).collect();
        order.sort_by(|&a, &b| {
            lex_cmp(train_x[a].as_slice(), train_x[b].as_slice())
                .then_with(|| lex_cmp(train_y[a].as_slice(), train_y[b].as_slice()))
        });
        Ok(Self {
            x: order.iter().map(|&i| train_x[i].clone()).collect(),
            y: order.iter().map(|&i| train_y[i].clone()).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Indices of the prediction set for `query`: the `k` nearest points when
    /// localization is on (ties by canonical position), otherwise everything.
    fn selection(&self, query: &State, spec: &KernelSpec) -> Vec<usize> {
        match spec.neighbors {
            None => (0..self.x.len()).collect(),
            Some(k) => {
                let k = k.min(self.x.len());
                let mut scored: Vec<(f64, usize)> = self
                    .x
                    .iter()
                    .enumerate()
                    .map(|(i, x)| ((x - query).norm_squared(), i))
                    .collect();
                scored.sort_by(|a, b| {
                    a.0.partial_cmp(&b.0).expect("finite").then(a.1.cmp(&b.1))
                });
                let mut idx: Vec<usize> = scored[..k].iter().map(|s| s.1).collect();
                idx.sort_unstable(); // canonical order for summation
                idx
            }
        }
    }

    /// Kernel-ridge mean prediction at `query` with zero prior mean.
    pub fn predict(&self, query: &State, spec: &KernelSpec) -> Result<State, NumError> {
        spec.validate()?;
        if !query.iter().all(|v| v.is_finite()) {
            return Err(NumError::NonFinite("query".into()));
        }
        let idx = self.selection(query, spec);
        let m = idx.len();
        let q = self.y[0].len();
        let inv_two_h2 = 0.5 / (spec.bandwidth * spec.bandwidth);

        let mut kmat = DMatrix::<f64>::zeros(m, m);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate().skip(a) {
                let v = (-(&self.x[i] - &self.x[j]).norm_squared() * inv_two_h2).exp();
                kmat[(a, b)] = v;
                kmat[(b, a)] = v;
            }
            kmat[(a, a)] += spec.regularization;
        }
        let mut rhs = DMatrix::<f64>::zeros(m, q);
        for (a, &i) in idx.iter().enumerate() {
            for c in 0..q {
                rhs[(a, c)] = self.y[i][c];
            }
        }
        let alpha = spd_solve(&kmat, &rhs)?;

        let mut out = State::zeros(q);
        for (a, &i) in idx.iter().enumerate() {
            let w = (-(&self.x[i] - query).norm_squared() * inv_two_h2).exp();
            for c in 0..q {
                out[c] += w * alpha[(a, c)];
            }
        }
        Ok(out)
    }
}

/// One-shot kernel-ridge prediction; see [`GpMemory`] for the semantics.
pub fn gp_predict(
    train_x: &[State],
    train_y: &[State],
    query: &State,
    spec: &KernelSpec,
) -> Result<State, NumError> {
    GpMemory::new(train_x, train_y)?.predict(query, spec)
}

/// Kernel-ridge smoothing of a time series over scalar time, returning the
/// smoothed values and their analytic time derivatives on `queries`.
///
/// Each query uses the `k` training times nearest to it (a contiguous window,
/// since times are sorted). The derivative is the exact derivative of the
/// local kernel expansion: `sum_i alpha_i * -(t - t_i)/h^2 * k(t, t_i)`.
pub fn gp_smooth_with_derivative(
    times: &[f64],
    values: &[State],
    queries: &[f64],
    spec: &KernelSpec,
) -> Result<(Vec<State>, Vec<State>), NumError> {
    spec.validate()?;
    if times.is_empty() {
        return Err(NumError::EmptyTrainingSet);
    }
    if times.len() != values.len() {
        return Err(NumError::Dimension(format!(
            "{} times vs {} values",
            times.len(),
            values.len()
        )));
    }
    let n = times.len();
    let q = values[0].len();
    let k = spec.neighbors.unwrap_or(n).min(n);
    let inv_h2 = 1.0 / (spec.bandwidth * spec.bandwidth);
    let inv_two_h2 = 0.5 * inv_h2;

    let mut vals = Vec::with_capacity(queries.len());
    let mut derivs = Vec::with_capacity(queries.len());
    let mut kmat = DMatrix::<f64>::zeros(k, k);
    let mut rhs = DMatrix::<f64>::zeros(k, q);
    for &t in queries {
        // nearest contiguous window of k sorted times
        let pos = times.partition_point(|&x| x < t);
        let (mut lo, mut hi) = (pos, pos); // window [lo, hi)
        while hi - lo < k {
            let take_left = if lo == 0 {
                false
            } else if hi == n {
                true
            } else {
                (t - times[lo - 1]) <= (times[hi] - t)
            };
            if take_left {
                lo -= 1;
            } else {
                hi += 1;
            }
        }
        for a in 0..k {
            for b in a..k {
                let d = times[lo + a] - times[lo + b];
                let v = (-d * d * inv_two_h2).exp();
                kmat[(a, b)] = v;
                kmat[(b, a)] = v;
            }
            kmat[(a, a)] += spec.regularization;
            for c in 0..q {
                rhs[(a, c)] = values[lo + a][c];
            }
        }
        let alpha = spd_solve(&kmat, &rhs)?;
        let mut val = State::zeros(q);
        let mut der = State::zeros(q);
        for a in 0..k {
            let d = t - times[lo + a];
            let w = (-d * d * inv_two_h2).exp();
            let wprime = -d * inv_h2 * w;
            for c in 0..q {
                val[c] += w * alpha[(a, c)];
                der[c] += wprime * alpha[(a, c)];
            }
        }
        vals.push(val);
        derivs.push(der);
    }
    Ok((vals, derivs))
}
