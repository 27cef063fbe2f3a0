//! Symmetric positive-definite solves with a shared jitter policy.
//!
//! Factorization failures are retried with a relative diagonal jitter
//! starting at 1e-12 of the mean diagonal and escalating twice by 100x;
//! only then do we give up with a conditioning error. Solutions are polished
//! by iterative refinement against the original (unjittered) matrix.

use super::NumError;
use nalgebra::DMatrix;

pub(crate) const JITTER_LADDER: [f64; 4] = [0.0, 1e-12, 1e-10, 1e-8];

/// Solve `a x = b` for symmetric positive semi-definite `a` (nalgebra path,
/// intended for small local systems).
pub(crate) fn spd_solve(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<DMatrix<f64>, NumError> {
    let p = a.nrows();
    debug_assert_eq!(a.ncols(), p);
    debug_assert_eq!(b.nrows(), p);
    let mean_diag = a.diagonal().iter().map(|d| d.abs()).sum::<f64>() / p.max(1) as f64;
    let scale = if mean_diag > 0.0 { mean_diag } else { 1.0 };
    for jitter in JITTER_LADDER {
        let mut trial = a.clone();
        if jitter > 0.0 {
            for i in 0..p {
                trial[(i, i)] += jitter * scale;
            }
        }
        if let Some(chol) = trial.cholesky() {
            let mut x = chol.solve(b);
            // refinement against the original matrix
            for _ in 0..2 {
                let r = b - a * &x;
                x += chol.solve(&r);
            }
            if x.iter().all(|v| v.is_finite()) {
                return Ok(x);
            }
        }
    }
    Err(NumError::Conditioning(format!(
        "SPD factorization failed for a {p}x{p} system even with diagonal jitter"
    )))
}
