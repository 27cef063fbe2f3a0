//! Forecast verification scores.
//!
//! Three scores compare a forecast against the noise-free truth over a
//! scoring window `(start, start + horizon]`:
//!
//! * **cumulative maximum error** (`cme`) — mean over the window of the
//!   running maximum of the clipped normalized error; lives in `[0, 1]` and
//!   never forgives a forecast that has already strayed.
//! * **symmetric mean absolute percent error** (`smape`) — bounded relative
//!   error in `[0, 200]`.
//! * **valid time** (`valid_time`) — how long the normalized error stays at
//!   or below a threshold κ.
//!
//! Missing forecast entries are worst-cased: they clip to 1 inside the CME,
//! count as exceedances for the valid time, and are excluded from the sMAPE
//! average.

use nalgebra::DVector;
use thiserror::Error;

use crate::series::{Prediction, State, TimeSeries};

/// Errors raised by pair construction and the score functions.
#[derive(Debug, Error)]
pub enum MetricError {
    #[error("aligned pair must contain at least one time")]
    Empty,
    #[error("times, truth, and prediction must have equal lengths")]
    LengthMismatch,
    #[error("truth states must be finite")]
    NonFiniteTruth,
    #[error("times must be strictly increasing")]
    NonIncreasingTimes,
    #[error("time {time} lies outside the scoring window ({start}, {end}]")]
    TimeOutOfWindow { time: f64, start: f64, end: f64 },
    #[error("state dimensions are inconsistent")]
    DimensionMismatch,
    #[error("scoring window must have positive finite extent")]
    BadWindow,
    #[error("valid time is undefined for a truth with zero spread")]
    ZeroSpread,
    #[error("sMAPE is undefined when prediction and truth are both zero")]
    ZeroByZero,
    #[error("sMAPE is undefined when every prediction entry is missing")]
    NoPresentEntries,
    #[error("threshold must be positive and finite, got {0}")]
    InvalidThreshold(f64),
    #[error("prediction times do not match truth times")]
    TimeMismatch,
}

/// Configuration shared by the score functions.
#[derive(Debug, Clone, Copy)]
pub struct MetricConfig {
    /// Valid-time threshold κ on the normalized error.
    pub kappa: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig { kappa: 0.4 }
    }
}

impl MetricConfig {
    fn validate(&self) -> Result<(), MetricError> {
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(MetricError::InvalidThreshold(self.kappa));
        }
        Ok(())
    }
}

/// A forecast aligned with the noise-free truth on a scoring window.
///
/// `start` is the forecast origin and `horizon` the window length; every
/// time lies in `(start, start + horizon]`. Non-finite forecast entries are
/// normalized to missing (`None`) at construction so the scores never see a
/// NaN.
#[derive(Debug, Clone)]
pub struct AlignedPair {
    start: f64,
    horizon: f64,
    times: Vec<f64>,
    truth: Vec<State>,
    prediction: Vec<Option<State>>,
}

impl AlignedPair {
    pub fn new(
        start: f64,
        horizon: f64,
        times: Vec<f64>,
        truth: Vec<State>,
        prediction: Vec<Option<State>>,
    ) -> Result<Self, MetricError> {
        if !(start.is_finite() && horizon.is_finite() && horizon > 0.0) {
            return Err(MetricError::BadWindow);
        }
        if times.is_empty() {
            return Err(MetricError::Empty);
        }
        if times.len() != truth.len() || times.len() != prediction.len() {
            return Err(MetricError::LengthMismatch);
        }
        if truth
            .iter()
            .any(|u| u.iter().any(|v| !v.is_finite()))
        {
            return Err(MetricError::NonFiniteTruth);
        }
        let dim = truth[0].len();
        if truth.iter().any(|u| u.len() != dim) {
            return Err(MetricError::DimensionMismatch);
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(MetricError::NonIncreasingTimes);
        }
        let end = start + horizon;
        let tol = 1e-9 * (1.0f64).max(end.abs());
        for &t in &times {
            if !(t > start && t <= end + tol) {
                return Err(MetricError::TimeOutOfWindow { time: t, start, end });
            }
        }
        let prediction = prediction
            .into_iter()
            .map(|p| match p {
                Some(s) if s.len() == dim && s.iter().all(|v| v.is_finite()) => Some(s),
                _ => None,
            })
            .collect();
        Ok(AlignedPair {
            start,
            horizon,
            times,
            truth,
            prediction,
        })
    }

    /// Align a prediction with a truth series sharing the same time stamps.
    pub fn from_series(
        start: f64,
        horizon: f64,
        truth: &TimeSeries,
        pred: &Prediction,
    ) -> Result<Self, MetricError> {
        if truth.times() != pred.times.as_slice() {
            return Err(MetricError::TimeMismatch);
        }
        AlignedPair::new(
            start,
            horizon,
            truth.times().to_vec(),
            truth.states().to_vec(),
            pred.states.clone(),
        )
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn truth(&self) -> &[State] {
        &self.truth
    }

    pub fn prediction(&self) -> &[Option<State>] {
        &self.prediction
    }

    fn is_exactly_perfect(&self) -> bool {
        self.prediction
            .iter()
            .zip(&self.truth)
            .all(|(p, u)| matches!(p, Some(p) if p == u))
    }
}

/// Mean state and root-mean-square Euclidean spread of the truth.
pub fn sd_mu(truth: &[State]) -> Result<(f64, State), MetricError> {
    if truth.is_empty() {
        return Err(MetricError::Empty);
    }
    let m = truth.len() as f64;
    let mut mu = DVector::zeros(truth[0].len());
    for u in truth {
        if u.len() != mu.len() {
            return Err(MetricError::DimensionMismatch);
        }
        mu += u;
    }
    mu /= m;
    let sd = (truth.iter().map(|u| (u - &mu).norm_squared()).sum::<f64>() / m).sqrt();
    Ok((sd, mu))
}

/// Running maximum of the clipped normalized error, one entry per time.
///
/// This is the sequence whose mean is the cumulative maximum error. Missing
/// entries contribute a term of 1. A zero-spread truth degenerates the whole
/// sequence to 0 (exactly perfect, fully present forecast) or 1 (anything
/// else).
pub fn running_normalized_max(pair: &AlignedPair) -> Vec<f64> {
    let (sd, _) = sd_mu(&pair.truth).expect("pair is non-empty");
    if sd == 0.0 {
        let v = if pair.is_exactly_perfect() { 0.0 } else { 1.0 };
        return vec![v; pair.len()];
    }
    let mut out = Vec::with_capacity(pair.len());
    let mut running = 0.0f64;
    for (p, u) in pair.prediction.iter().zip(&pair.truth) {
        let term = match p {
            Some(p) => ((p - u).norm() / sd).min(1.0),
            None => 1.0,
        };
        if term > running {
            running = term;
        }
        out.push(running);
    }
    out
}

/// Cumulative maximum error in `[0, 1]`; 0 only for a complete, exact forecast.
pub fn cme(pair: &AlignedPair) -> f64 {
    let seq = running_normalized_max(pair);
    seq.iter().sum::<f64>() / seq.len() as f64
}

/// Symmetric mean absolute percent error in `[0, 200]` over present entries.
pub fn smape(pair: &AlignedPair) -> Result<f64, MetricError> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (p, u) in pair.prediction.iter().zip(&pair.truth) {
        let Some(p) = p else { continue };
        let num = (p - u).norm();
        let den = p.norm() + u.norm();
        if den == 0.0 {
            return Err(MetricError::ZeroByZero);
        }
        sum += num / den;
        count += 1;
    }
    if count == 0 {
        return Err(MetricError::NoPresentEntries);
    }
    Ok(200.0 * sum / count as f64)
}

/// Time (relative to the forecast origin) until the normalized error first
/// exceeds κ; the full horizon if it never does. Missing entries exceed.
pub fn valid_time(pair: &AlignedPair, cfg: &MetricConfig) -> Result<f64, MetricError> {
    cfg.validate()?;
    let (sd, _) = sd_mu(&pair.truth)?;
    if sd == 0.0 {
        return Err(MetricError::ZeroSpread);
    }
    for ((p, u), &t) in pair.prediction.iter().zip(&pair.truth).zip(&pair.times) {
        let exceeds = match p {
            Some(p) => (p - u).norm() / sd > cfg.kappa,
            None => true,
        };
        if exceeds {
            return Ok(t - pair.start);
        }
    }
    Ok(pair.horizon)
}
