//! Shared numerical kernels.
//!
//! Everything here is a pure function of its inputs: polynomial feature maps,
//! ridge regression, Gaussian kernel-ridge ("GP") prediction, local linear
//! regression, interpolants with analytic derivatives, sequential thresholded
//! least squares, and classical fixed-step RK4 integration.

mod features;
mod interp;
mod kernel;
mod locallin;
mod ridge;
mod rk4;
mod solve;
mod stlsq;

pub use features::FeatureMap;
pub use interp::{cubic_spline, piecewise_linear, CubicSpline, Curve, PiecewiseLinear};
pub use kernel::{gp_predict, gp_smooth_with_derivative, GpMemory, KernelSpec};
pub use locallin::{local_linear_predict, LocalLinearMemory};
pub use ridge::{ridge_fit, RidgeModel};
pub use rk4::{rk4_integrate, rk4_step};
pub use stlsq::{stlsq, SparseModel};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("conditioning failure: {0}")]
    Conditioning(String),
    #[error("divergence at integration step {step}")]
    Divergence { step: usize },
}
