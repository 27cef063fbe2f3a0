//! Interpolants with analytic first derivatives.

use super::NumError;
use crate::series::State;

/// A fitted curve evaluable anywhere in (and, by segment extension, slightly
/// beyond) its knot span.
pub trait Curve: Send + Sync {
    fn value(&self, t: f64) -> State;
    fn derivative(&self, t: f64) -> State;
    fn knot_times(&self) -> &[f64];
}

fn validate_knots(times: &[f64], values: &[State], minimum: usize) -> Result<(), NumError> {
    if times.len() != values.len() {
        return Err(NumError::Dimension(format!(
            "{} times vs {} values",
            times.len(),
            values.len()
        )));
    }
    if times.len() < minimum {
        return Err(NumError::InsufficientData(format!(
            "need at least {minimum} knots, got {}",
            times.len()
        )));
    }
    for (i, t) in times.iter().enumerate() {
        if !t.is_finite() {
            return Err(NumError::NonFinite(format!("time {i}")));
        }
        if i > 0 && times[i - 1] >= *t {
            return Err(NumError::InvalidArgument(format!(
                "knot times must be strictly increasing (index {i})"
            )));
        }
    }
    for (i, v) in values.iter().enumerate() {
        if !v.iter().all(|x| x.is_finite()) {
            return Err(NumError::NonFinite(format!("value {i}")));
        }
        if v.len() != values[0].len() {
            return Err(NumError::Dimension(format!("value {i} has mixed dimension")));
        }
    }
    Ok(())
}

/// Index of the segment containing `t`, clamped to the end segments.
fn segment(times: &[f64], t: f64) -> usize {
    if t <= times[0] {
        return 0;
    }
    let n = times.len();
    if t >= times[n - 1] {
        return n - 2;
    }
    // first index with time > t, minus one; in [0, n-2]
    times.partition_point(|&x| x <= t) - 1
}

/// Piecewise-linear interpolant. The derivative is the segment slope; at a
/// knot we report the slope of the segment to its left (the first segment at
/// the left boundary).
#[derive(Debug, Clone)]
pub struct PiecewiseLinear {
    times: Vec<f64>,
    values: Vec<State>,
}

pub fn piecewise_linear(times: &[f64], values: &[State]) -> Result<PiecewiseLinear, NumError> {
    validate_knots(times, values, 2)?;
    Ok(PiecewiseLinear {
        times: times.to_vec(),
        values: values.to_vec(),
    })
}

impl Curve for PiecewiseLinear {
    fn value(&self, t: f64) -> State {
        let i = segment(&self.times, t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        if t == t0 {
            return self.values[i].clone();
        }
        if t == t1 {
            return self.values[i + 1].clone();
        }
        let w = (t - t0) / (t1 - t0);
        &self.values[i] * (1.0 - w) + &self.values[i + 1] * w
    }

    fn derivative(&self, t: f64) -> State {
        // at interior knots use the left segment: for t == times[i] the
        // segment lookup returns i, so step down unless at the left edge
        let mut i = segment(&self.times, t);
        if i > 0 && t == self.times[i] {
            i -= 1;
        }
        (&self.values[i + 1] - &self.values[i]) / (self.times[i + 1] - self.times[i])
    }

    fn knot_times(&self) -> &[f64] {
        &self.times
    }
}

/// Not-a-knot cubic spline interpolant.
///
/// The not-a-knot end condition (third derivative continuous across the
/// second and second-to-last knots) avoids the artificial flat curvature a
/// "natural" spline imposes at the boundaries, which would otherwise corrupt
/// derivative estimates near the ends.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    times: Vec<f64>,
    values: Vec<State>,
    /// Second derivatives at the knots, one state-shaped vector per knot.
    sigma: Vec<State>,
}

pub fn cubic_spline(times: &[f64], values: &[State]) -> Result<CubicSpline, NumError> {
    validate_knots(times, values, 4)?;
    let n = times.len();
    let dim = values[0].len();
    let h: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();

    // Tridiagonal system for the interior second derivatives sigma_1..sigma_{n-2};
    // sigma_0 and sigma_{n-1} are recovered from the not-a-knot conditions
    //   (sigma_1 - sigma_0)/h_0 = (sigma_2 - sigma_1)/h_1
    //   (sigma_{n-1} - sigma_{n-2})/h_{n-2} = (sigma_{n-2} - sigma_{n-3})/h_{n-3}
    // substituted into the standard continuity equations.
    let m = n - 2;
    let mut sub = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut sup = vec![0.0; m];
    let mut rhs = vec![State::zeros(dim); m];
    for i in 1..=m {
        let row = i - 1;
        let d6 = (&values[i + 1] - &values[i]) / h[i] - (&values[i] - &values[i - 1]) / h[i - 1];
        rhs[row] = d6 * 6.0;
        sub[row] = h[i - 1];
        diag[row] = 2.0 * (h[i - 1] + h[i]);
        sup[row] = h[i];
    }
    // fold the not-a-knot conditions into the first and last rows
    diag[0] += h[0] * (1.0 + h[0] / h[1]);
    sup[0] -= h[0] * h[0] / h[1];
    sub[0] = 0.0;
    let last = m - 1;
    diag[last] += h[n - 2] * (1.0 + h[n - 2] / h[n - 3]);
    sub[last] -= h[n - 2] * h[n - 2] / h[n - 3];
    sup[last] = 0.0;

    // Thomas algorithm; the rows are diagonally dominant for any strictly
    // increasing knot sequence, so no pivoting is required.
    let mut cp = vec![0.0; m];
    let mut dp = rhs.clone();
    cp[0] = sup[0] / diag[0];
    dp[0] = &rhs[0] / diag[0];
    for i in 1..m {
        let denom = diag[i] - sub[i] * cp[i - 1];
        cp[i] = sup[i] / denom;
        dp[i] = (&rhs[i] - &dp[i - 1] * sub[i]) / denom;
    }
    let mut interior = vec![State::zeros(dim); m];
    interior[m - 1] = dp[m - 1].clone();
    for i in (0..m - 1).rev() {
        interior[i] = &dp[i] - &interior[i + 1] * cp[i];
    }

    let mut sigma = Vec::with_capacity(n);
    let s0 = &interior[0] * (1.0 + h[0] / h[1])
        - &interior[1.min(m - 1)] * (h[0] / h[1]);
    sigma.push(s0);
    sigma.extend(interior.iter().cloned());
    let send = &sigma[n - 2] * (1.0 + h[n - 2] / h[n - 3])
        - &sigma[n - 3] * (h[n - 2] / h[n - 3]);
    sigma.push(send);

    Ok(CubicSpline {
        times: times.to_vec(),
        values: values.to_vec(),
        sigma,
    })
}

impl Curve for CubicSpline {
    fn value(&self, t: f64) -> State {
        let i = segment(&self.times, t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let a = t1 - t;
        let b = t - t0;
        &self.sigma[i] * (a * a * a / (6.0 * h))
            + &self.sigma[i + 1] * (b * b * b / (6.0 * h))
            + (&self.values[i] / h - &self.sigma[i] * (h / 6.0)) * a
            + (&self.values[i + 1] / h - &self.sigma[i + 1] * (h / 6.0)) * b
    }

    fn derivative(&self, t: f64) -> State {
        let i = segment(&self.times, t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let a = t1 - t;
        let b = t - t0;
        &self.sigma[i] * (-a * a / (2.0 * h))
            + &self.sigma[i + 1] * (b * b / (2.0 * h))
            + (&self.values[i + 1] - &self.values[i]) / h
            - (&self.sigma[i + 1] - &self.sigma[i]) * (h / 6.0)
    }

    fn knot_times(&self) -> &[f64] {
        &self.times
    }
}
