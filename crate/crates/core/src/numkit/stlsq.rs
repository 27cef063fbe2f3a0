//! Sequential thresholded least squares (the SINDy inner loop).

use super::ridge::ridge_fit;
use super::NumError;
use faer::{Mat, MatRef};

/// Sparse linear model produced by [`stlsq`].
#[derive(Debug, Clone)]
pub struct SparseModel {
    /// Dense coefficient matrix, `feature_dim x output_dim`, with exact zeros
    /// outside the active sets.
    pub weights: Mat<f64>,
    /// Surviving feature indices per output column.
    pub active: Vec<Vec<usize>>,
    /// True when every output column thresholded out entirely.
    pub all_zero: bool,
}

/// Sequential thresholded least squares.
///
/// Per output column: solve unpenalized least squares, zero every coefficient
/// with `|w| < threshold`, re-solve on the surviving features, and repeat
/// until the active set is stable or `iterations` passes have run. The active
/// set never grows. An empty active set is a valid all-zero model.
pub fn stlsq(
    x: MatRef<'_, f64>,
    y: MatRef<'_, f64>,
    threshold: f64,
    iterations: usize,
) -> Result<SparseModel, NumError> {
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(NumError::InvalidArgument(format!(
            "threshold must be non-negative, got {threshold}"
        )));
    }
    if iterations == 0 {
        return Err(NumError::InvalidArgument("iterations must be >= 1".into()));
    }
    let (n, p) = (x.nrows(), x.ncols());
    let q = y.ncols();
    let mut weights = Mat::<f64>::zeros(p, q);
    let mut active_sets = Vec::with_capacity(q);

    let mut sub = Mat::<f64>::zeros(n, p);
    for col in 0..q {
        let ycol = y.get(0..n, col..col + 1);
        let mut active: Vec<usize> = (0..p).collect();
        let mut final_w: Vec<f64> = Vec::new();

        let solve_active = |active: &[usize], sub: &mut Mat<f64>| -> Result<Vec<f64>, NumError> {
            for (jj, &j) in active.iter().enumerate() {
                for i in 0..n {
                    sub[(i, jj)] = x[(i, j)];
                }
            }
            let model = ridge_fit(sub.get(0..n, 0..active.len()), ycol, 0.0)?;
            Ok((0..active.len()).map(|i| model.weights[(i, 0)]).collect())
        };

        for pass in 0..iterations {
            let w = solve_active(&active, &mut sub)?;
            let survivors: Vec<usize> = active
                .iter()
                .zip(&w)
                .filter(|(_, wi)| wi.abs() >= threshold)
                .map(|(&j, _)| j)
                .collect();
            if survivors.len() == active.len() {
                final_w = w;
                break;
            }
            active = survivors;
            if active.is_empty() {
                final_w.clear();
                break;
            }
            if pass + 1 == iterations {
                // iteration budget exhausted: report the solve on the final set
                final_w = solve_active(&active, &mut sub)?;
            }
        }

        for (jj, &j) in active.iter().enumerate() {
            weights[(j, col)] = final_w[jj];
        }
        active_sets.push(active);
    }

    let all_zero = active_sets.iter().all(|a| a.is_empty());
    Ok(SparseModel {
        weights,
        active: active_sets,
        all_zero,
    })
}
