//! Local linear (weighted affine) regression.

use super::solve::spd_solve;
use super::NumError;
use crate::series::State;
use nalgebra::DMatrix;
use std::cmp::Ordering;

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).expect("finite values") {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Memorized training set in canonical order (same rationale as
/// [`super::GpMemory`]: bitwise permutation invariance).
#[derive(Debug, Clone)]
pub struct LocalLinearMemory {
    x: Vec<State>,
    y: Vec<State>,
}

/// Fit of one local weighted affine model.
pub(crate) struct AffineFit {
    /// Model value at the expansion point (the query).
    pub value: State,
    /// Jacobian rows: `gradient[(c, d)]` is d output_c / d input_d.
    pub gradient: DMatrix<f64>,
}

impl LocalLinearMemory {
    pub fn new(train_x: &[State], train_y: &[State]) -> Result<Self, NumError> {
        if train_x.is_empty() {
            return Err(NumError::EmptyTrainingSet);
        }
        if train_x.len() < 2 {
            return Err(NumError::InsufficientData(
                "local linear regression needs at least two training points".into(),
            ));
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

    fn neighbors(&self, query: &State, k: usize) -> Vec<usize> {
        let k = k.max(1).min(self.x.len());
        let mut scored: Vec<(f64, usize)> = self
            .x
            .iter()
            .enumerate()
            .map(|(i, x)| ((x - query).norm_squared(), i))
            .collect();
        scored.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite").then(a.1.cmp(&b.1)));
        let mut idx: Vec<usize> = scored[..k].iter().map(|s| s.1).collect();
        idx.sort_unstable();
        idx
    }

    /// Weighted affine fit over the `k` nearest neighbors with weights
    /// `exp(-||x_i - query||^2 / h^2)`, expanded around the query point.
    ///
    /// A singular local system falls back to the weighted mean (zero
    /// gradient); fully underflowed weights fall back to the nearest point.
    pub(crate) fn fit_at(&self, query: &State, bandwidth: f64, k: usize) -> Result<AffineFit, NumError> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(NumError::InvalidArgument(format!(
                "bandwidth must be positive, got {bandwidth}"
            )));
        }
        if !query.iter().all(|v| v.is_finite()) {
            return Err(NumError::NonFinite("query".into()));
        }
        let idx = self.neighbors(query, k);
        let d = self.x[0].len();
        let q = self.y[0].len();
        let inv_h2 = 1.0 / (bandwidth * bandwidth);

        let mut weights: Vec<f64> = idx
            .iter()
            .map(|&i| (-(&self.x[i] - query).norm_squared() * inv_h2).exp())
            .collect();
        if weights.iter().sum::<f64>() == 0.0 {
            // all weights underflowed: fall back to the nearest point alone
            let nearest = idx
                .iter()
                .enumerate()
                .min_by(|a, b| {
                    let da = (&self.x[*a.1] - query).norm_squared();
                    let db = (&self.x[*b.1] - query).norm_squared();
                    da.partial_cmp(&db).expect("finite").then(a.1.cmp(b.1))
                })
                .map(|(pos, _)| pos)
                .expect("non-empty");
            weights.iter_mut().for_each(|w| *w = 0.0);
            weights[nearest] = 1.0;
        }

        // design (1, x_i - query); the intercept is then the value at `query`
        let m = idx.len();
        let mut a = DMatrix::<f64>::zeros(d + 1, d + 1);
        let mut b = DMatrix::<f64>::zeros(d + 1, q);
        let mut row = vec![0.0; d + 1];
        for (pos, &i) in idx.iter().enumerate() {
            let w = weights[pos];
            row[0] = 1.0;
            for c in 0..d {
                row[c + 1] = self.x[i][c] - query[c];
            }
            for r in 0..=d {
                for c in r..=d {
                    a[(r, c)] += w * row[r] * row[c];
                }
                for c in 0..q {
                    b[(r, c)] += w * row[r] * self.y[i][c];
                }
            }
        }
        for r in 0..=d {
            for c in 0..r {
                a[(r, c)] = a[(c, r)];
            }
        }
        let _ = m;

        match spd_solve(&a, &b) {
            Ok(beta) => {
                let value = State::from_iterator(q, (0..q).map(|c| beta[(0, c)]));
                let mut gradient = DMatrix::<f64>::zeros(q, d);
                for c in 0..q {
                    for r in 0..d {
                        gradient[(c, r)] = beta[(r + 1, c)];
                    }
                }
                Ok(AffineFit { value, gradient })
            }
            Err(NumError::Conditioning(_)) => {
                // weighted mean fallback
                let wsum: f64 = weights.iter().sum();
                let mut value = State::zeros(q);
                for (pos, &i) in idx.iter().enumerate() {
                    value += &self.y[i] * (weights[pos] / wsum);
                }
                Ok(AffineFit {
                    value,
                    gradient: DMatrix::zeros(q, d),
                })
            }
            Err(e) => Err(e),
        }
    }

    pub fn predict(&self, query: &State, bandwidth: f64, k: usize) -> Result<State, NumError> {
        Ok(self.fit_at(query, bandwidth, k)?.value)
    }
}

/// One-shot local linear prediction; see [`LocalLinearMemory`].
pub fn local_linear_predict(
    train_x: &[State],
    train_y: &[State],
    query: &State,
    bandwidth: f64,
    k: usize,
) -> Result<State, NumError> {
    LocalLinearMemory::new(train_x, train_y)?.predict(query, bandwidth, k)
}
