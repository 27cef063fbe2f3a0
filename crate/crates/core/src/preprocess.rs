//! Affine normalization fitted on training observations.
//!
//! Every forecasting method sees normalized data: full whitening maps the
//! training cloud to mean zero and identity covariance; the scale-only
//! variant divides by a single RMS scale so coordinate axes (and hence
//! monomial sparsity patterns) survive; identity is a no-op placeholder.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::numkit::NumError;
use crate::series::{Prediction, State, TimeSeries};

/// How the training cloud is mapped to normalized coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeMode {
    /// Center and whiten: x̄ = W (x − μ) with W = Σ^{−1/2} (symmetric root).
    Full,
    /// Divide by one positive scalar; no centering, no rotation.
    ScaleOnly,
    /// Leave data untouched.
    Identity,
}

/// An invertible affine map fitted to training observations.
#[derive(Debug, Clone)]
pub struct AffineNormalizer {
    mean: State,
    whitener: DMatrix<f64>,
    dewhitener: DMatrix<f64>,
    mode: NormalizeMode,
}

/// Fit a normalizer of the requested `mode` on the training states.
pub fn fit_normalizer(states: &[State], mode: NormalizeMode) -> Result<AffineNormalizer, NumError> {
    if states.is_empty() {
        return Err(NumError::EmptyTrainingSet);
    }
    let d = states[0].len();
    if states.iter().any(|s| s.len() != d) {
        return Err(NumError::Dimension(
            "normalizer training states have mixed dimensions".into(),
        ));
    }
    if states.iter().any(|s| s.iter().any(|v| !v.is_finite())) {
        return Err(NumError::NonFinite("normalizer training states".into()));
    }
    match mode {
        NormalizeMode::Identity => Ok(AffineNormalizer {
            mean: DVector::zeros(d),
            whitener: DMatrix::identity(d, d),
            dewhitener: DMatrix::identity(d, d),
            mode,
        }),
        NormalizeMode::ScaleOnly => {
            if states.len() < 2 {
                return Err(NumError::InsufficientData(
                    "normalization needs at least 2 observations".into(),
                ));
            }
            let n = states.len() as f64;
            let sum_sq: f64 = states.iter().map(|s| s.norm_squared()).sum();
            let scale = (sum_sq / (n - 1.0)).sqrt();
            if scale <= 0.0 {
                return Err(NumError::InvalidArgument(
                    "scale-only normalization of all-zero data".into(),
                ));
            }
            Ok(AffineNormalizer {
                mean: DVector::zeros(d),
                whitener: DMatrix::identity(d, d) / scale,
                dewhitener: DMatrix::identity(d, d) * scale,
                mode,
            })
        }
        NormalizeMode::Full => {
            if states.len() < 2 {
                return Err(NumError::InsufficientData(
                    "normalization needs at least 2 observations".into(),
                ));
            }
            let n = states.len() as f64;
            let mut mean = DVector::zeros(d);
            for s in states {
                mean += s;
            }
            mean /= n;
            let mut cov = DMatrix::zeros(d, d);
            for s in states {
                let c = s - &mean;
                cov.syger(1.0 / (n - 1.0), &c, &c, 1.0);
            }
            cov.fill_upper_triangle_with_lower_triangle();
            let trace = cov.trace();
            if !(trace > 0.0) {
                return Err(NumError::InvalidArgument(
                    "degenerate (all-equal) normalization data".into(),
                ));
            }
            let eig = nalgebra::SymmetricEigen::new(cov);
            let floor = 1e-12 * trace;
            let floored = eig.eigenvalues.map(|l| l.max(floor));
            let q = &eig.eigenvectors;
            let inv_sqrt = DMatrix::from_diagonal(&floored.map(|l| 1.0 / l.sqrt()));
            let sqrt = DMatrix::from_diagonal(&floored.map(|l| l.sqrt()));
            let whitener = q * inv_sqrt * q.transpose();
            let dewhitener = q * sqrt * q.transpose();
            Ok(AffineNormalizer {
                mean,
                whitener,
                dewhitener,
                mode,
            })
        }
    }
}

impl AffineNormalizer {
    /// Dimension of the states this normalizer maps.
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// The mode this normalizer was fitted with.
    pub fn mode(&self) -> NormalizeMode {
        self.mode
    }

    /// The positive scalar divisor, when the map is a pure scaling.
    pub fn scale_factor(&self) -> Option<f64> {
        match self.mode {
            NormalizeMode::ScaleOnly => Some(self.dewhitener[(0, 0)]),
            NormalizeMode::Identity => Some(1.0),
            NormalizeMode::Full => None,
        }
    }

    /// Map one state into normalized coordinates.
    pub fn apply_state(&self, x: &State) -> State {
        &self.whitener * (x - &self.mean)
    }

    /// Map one normalized state back to original coordinates.
    pub fn invert_state(&self, x: &State) -> State {
        &self.dewhitener * x + &self.mean
    }

    /// Normalize every state of a series; times are untouched.
    pub fn apply_series(&self, series: &TimeSeries) -> TimeSeries {
        let states = series.states().iter().map(|s| self.apply_state(s)).collect();
        TimeSeries::new(series.times().to_vec(), states)
            .expect("normalization preserves series shape")
    }

    /// Undo the normalization on every present state of a prediction.
    pub fn invert_prediction(&self, pred: &Prediction) -> Prediction {
        Prediction {
            times: pred.times.clone(),
            states: pred
                .states
                .iter()
                .map(|s| s.as_ref().map(|x| self.invert_state(x)))
                .collect(),
        }
    }
}
