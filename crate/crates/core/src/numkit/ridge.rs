//! Ridge regression on dense design matrices.

use super::solve::JITTER_LADDER;
use super::NumError;
use faer::prelude::Solve;
use faer::{Mat, MatRef};

/// Linear model fitted by [`ridge_fit`].
#[derive(Debug, Clone)]
pub struct RidgeModel {
    /// Coefficients, `feature_dim x output_dim`.
    pub weights: Mat<f64>,
    /// The penalty the model was fitted with.
    pub penalty: f64,
}

impl RidgeModel {
    /// Apply the model to one feature row.
    pub fn predict_row(&self, features: &[f64]) -> Vec<f64> {
        debug_assert_eq!(features.len(), self.weights.nrows());
        let q = self.weights.ncols();
        let mut out = vec![0.0; q];
        for (j, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (i, f) in features.iter().enumerate() {
                acc += f * self.weights[(i, j)];
            }
            *o = acc;
        }
        out
    }
}

fn check_finite(m: MatRef<'_, f64>, name: &str) -> Result<(), NumError> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(NumError::NonFinite(format!("{name}[{i},{j}]")));
            }
        }
    }
    Ok(())
}

/// Minimize `||X W - Y||^2 + lambda ||W||^2` over `W`.
///
/// The penalty applies to every coefficient uniformly, including any constant
/// column. Solved through the normal equations with a Cholesky factorization;
/// at `lambda = 0` the Gram matrix is additionally equilibrated (symmetric
/// diagonal scaling, which leaves the least-squares solution unchanged) to
/// tame the wide dynamic range of high-degree polynomial features. Failed
/// factorizations retry on a relative diagonal jitter ladder starting at
/// 1e-12; a system that stays unfactorizable is a conditioning error.
pub fn ridge_fit(x: MatRef<'_, f64>, y: MatRef<'_, f64>, lambda: f64) -> Result<RidgeModel, NumError> {
    let (n, p) = (x.nrows(), x.ncols());
    let q = y.ncols();
    if n == 0 || p == 0 {
        return Err(NumError::InsufficientData(
            "ridge_fit needs at least one row and one column".into(),
        ));
    }
    if y.nrows() != n {
        return Err(NumError::Dimension(format!(
            "X has {n} rows but Y has {}",
            y.nrows()
        )));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(NumError::InvalidArgument(format!(
            "penalty must be finite and non-negative, got {lambda}"
        )));
    }
    check_finite(x, "X")?;
    check_finite(y, "Y")?;

    let mut gram = x.transpose() * x;
    let mut xty = x.transpose() * y;

    // Equilibrate at lambda = 0 only: with a penalty the scaling would change
    // the minimizer, without one it is a pure change of variables.
    let col_scale: Option<Vec<f64>> = if lambda == 0.0 {
        let s: Vec<f64> = (0..p)
            .map(|j| {
                let d = gram[(j, j)].sqrt();
                if d > 0.0 {
                    d
                } else {
                    1.0
                }
            })
            .collect();
        for j in 0..p {
            for i in 0..p {
                gram[(i, j)] /= s[i] * s[j];
            }
        }
        for j in 0..q {
            for i in 0..p {
                xty[(i, j)] /= s[i];
            }
        }
        Some(s)
    } else {
        for i in 0..p {
            gram[(i, i)] += lambda;
        }
        None
    };

    let mean_diag = (0..p).map(|i| gram[(i, i)].abs()).sum::<f64>() / p as f64;
    let scale = if mean_diag > 0.0 { mean_diag } else { 1.0 };

    let mut solved: Option<Mat<f64>> = None;
    for jitter in JITTER_LADDER {
        let mut trial = gram.clone();
        if jitter > 0.0 {
            for i in 0..p {
                trial[(i, i)] += jitter * scale;
            }
        }
        let Ok(llt) = trial.llt(faer::Side::Lower) else {
            continue;
        };
        let mut w = llt.solve(&xty);
        // refinement against the unjittered system
        for _ in 0..2 {
            let r = &xty - &gram * &w;
            let d = llt.solve(&r);
            w += d;
        }
        let finite = (0..q).all(|j| (0..p).all(|i| w[(i, j)].is_finite()));
        if finite {
            solved = Some(w);
            break;
        }
    }
    let mut w = solved.ok_or_else(|| {
        NumError::Conditioning(format!(
            "normal equations ({p}x{p}, lambda={lambda}) stayed unfactorizable under jitter"
        ))
    })?;

    if let Some(s) = col_scale {
        for j in 0..q {
            for i in 0..p {
                w[(i, j)] /= s[i];
            }
        }
    }

    Ok(RidgeModel {
        weights: w,
        penalty: lambda,
    })
}
