//! Lorenz-type vector fields with fixed, random, or state-dependent parameters.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{SystemError, SystemKind};
use crate::series::State;

/// Sampling interval for σ in the random-parameter family.
pub const RANDOM_SIGMA_RANGE: (f64, f64) = (5.0, 15.0);
/// Sampling interval for ρ in the random-parameter family.
pub const RANDOM_RHO_RANGE: (f64, f64) = (20.0, 80.0);
/// Sampling interval for β in the random-parameter family.
pub const RANDOM_BETA_RANGE: (f64, f64) = (2.0, 6.0);

/// Number of random Fourier features per state-dependent parameter function.
const FOURIER_FEATURES: usize = 64;
/// Length scale (in state units) of the squared-exponential prior.
const LENGTH_SCALE: f64 = 20.0;
/// Gain applied before the sigmoid squashing; a unit-variance draw then
/// typically sweeps well over 80% of the target interval.
const SQUASH_GAIN: f64 = 2.0;

/// Parameters of the Lorenz convection equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorenzParams {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
}

impl LorenzParams {
    /// The classic chaotic parameter choice σ=10, ρ=28, β=8/3.
    pub fn standard() -> Self {
        LorenzParams {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
        }
    }
}

#[inline]
fn lorenz_rhs(sigma: f64, rho: f64, beta: f64, u: &[f64; 3]) -> [f64; 3] {
    [
        sigma * (u[1] - u[0]),
        u[0] * (rho - u[2]) - u[1],
        u[0] * u[1] - beta * u[2],
    ]
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One smooth random function squashed into a fixed interval.
#[derive(Debug, Clone)]
struct ParamFunc {
    lo: f64,
    hi: f64,
    /// Frequencies ω_j ~ N(0, I/ℓ²).
    omegas: Vec<[f64; 3]>,
    /// Phases b_j ~ U(0, 2π).
    phases: Vec<f64>,
    /// Feature coefficients a_j ~ N(0, 1).
    coeffs: Vec<f64>,
}

impl ParamFunc {
    fn sample<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> Self {
        let m = FOURIER_FEATURES;
        let omegas = (0..m)
            .map(|_| {
                let mut w = [0.0; 3];
                for wi in &mut w {
                    let z: f64 = rng.sample(StandardNormal);
                    *wi = z / LENGTH_SCALE;
                }
                w
            })
            .collect();
        let phases = (0..m)
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        let coeffs = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        ParamFunc {
            lo,
            hi,
            omegas,
            phases,
            coeffs,
        }
    }

    /// Approximate unit-variance Gaussian-process draw g(u).
    fn latent(&self, u: &[f64; 3]) -> f64 {
        let norm = (2.0 / FOURIER_FEATURES as f64).sqrt();
        let mut g = 0.0;
        for j in 0..FOURIER_FEATURES {
            let w = &self.omegas[j];
            let arg = w[0] * u[0] + w[1] * u[1] + w[2] * u[2] + self.phases[j];
            g += self.coeffs[j] * norm * arg.cos();
        }
        g
    }

    fn value(&self, u: &[f64; 3]) -> f64 {
        self.lo + (self.hi - self.lo) * sigmoid(SQUASH_GAIN * self.latent(u))
    }

    fn gradient(&self, u: &[f64; 3]) -> [f64; 3] {
        let norm = (2.0 / FOURIER_FEATURES as f64).sqrt();
        let s = sigmoid(SQUASH_GAIN * self.latent(u));
        let outer = (self.hi - self.lo) * s * (1.0 - s) * SQUASH_GAIN;
        let mut grad = [0.0; 3];
        for j in 0..FOURIER_FEATURES {
            let w = &self.omegas[j];
            let arg = w[0] * u[0] + w[1] * u[1] + w[2] * u[2] + self.phases[j];
            let d = -self.coeffs[j] * norm * arg.sin() * outer;
            grad[0] += d * w[0];
            grad[1] += d * w[1];
            grad[2] += d * w[2];
        }
        grad
    }
}

/// A realization of the state-dependent parameter functions σ(u), ρ(u), β(u).
#[derive(Debug, Clone)]
pub struct NonparField {
    sigma: ParamFunc,
    rho: ParamFunc,
    beta: ParamFunc,
}

impl NonparField {
    pub(crate) fn params_at(&self, u: &[f64; 3]) -> (f64, f64, f64) {
        (self.sigma.value(u), self.rho.value(u), self.beta.value(u))
    }

    /// σ(u), ρ(u), β(u) at one state.
    pub fn param_values(&self, u: &State) -> Result<[f64; 3], SystemError> {
        let u = as_array(u)?;
        Ok([self.sigma.value(&u), self.rho.value(&u), self.beta.value(&u)])
    }

    /// Gradients of σ, ρ, β with respect to the state, in that order.
    pub fn param_gradients(&self, u: &State) -> Result<[State; 3], SystemError> {
        let u = as_array(u)?;
        Ok([
            DVector::from_column_slice(&self.sigma.gradient(&u)),
            DVector::from_column_slice(&self.rho.gradient(&u)),
            DVector::from_column_slice(&self.beta.gradient(&u)),
        ])
    }
}

/// A concrete right-hand side drawn from one of the three system families.
#[derive(Debug, Clone)]
pub enum VectorField {
    Standard,
    Random(LorenzParams),
    Nonparametric(Box<NonparField>),
}

fn as_array(u: &State) -> Result<[f64; 3], SystemError> {
    if u.len() != 3 || u.iter().any(|v| !v.is_finite()) {
        return Err(SystemError::BadState);
    }
    Ok([u[0], u[1], u[2]])
}

impl VectorField {
    pub fn kind(&self) -> SystemKind {
        match self {
            VectorField::Standard => SystemKind::Standard,
            VectorField::Random(_) => SystemKind::RandomParams,
            VectorField::Nonparametric(_) => SystemKind::Nonparametric,
        }
    }

    /// Time derivative of the state under this field.
    pub fn eval(&self, u: &State) -> Result<State, SystemError> {
        let arr = as_array(u)?;
        Ok(DVector::from_column_slice(&self.eval3(&arr)))
    }

    /// Allocation-free evaluation used by the integrators.
    pub(crate) fn eval3(&self, u: &[f64; 3]) -> [f64; 3] {
        match self {
            VectorField::Standard => {
                let p = LorenzParams::standard();
                lorenz_rhs(p.sigma, p.rho, p.beta, u)
            }
            VectorField::Random(p) => lorenz_rhs(p.sigma, p.rho, p.beta, u),
            VectorField::Nonparametric(f) => {
                let (s, r, b) = f.params_at(u);
                lorenz_rhs(s, r, b, u)
            }
        }
    }
}

/// Draw constant parameters uniformly from the sampling intervals.
pub fn sample_random_params<R: Rng + ?Sized>(rng: &mut R) -> LorenzParams {
    LorenzParams {
        sigma: rng.random_range(RANDOM_SIGMA_RANGE.0..RANDOM_SIGMA_RANGE.1),
        rho: rng.random_range(RANDOM_RHO_RANGE.0..RANDOM_RHO_RANGE.1),
        beta: rng.random_range(RANDOM_BETA_RANGE.0..RANDOM_BETA_RANGE.1),
    }
}

/// Draw one realization of the state-dependent parameter functions.
pub fn sample_nonpar_field<R: Rng + ?Sized>(rng: &mut R) -> NonparField {
    NonparField {
        sigma: ParamFunc::sample(rng, RANDOM_SIGMA_RANGE.0, RANDOM_SIGMA_RANGE.1),
        rho: ParamFunc::sample(rng, RANDOM_RHO_RANGE.0, RANDOM_RHO_RANGE.1),
        beta: ParamFunc::sample(rng, RANDOM_BETA_RANGE.0, RANDOM_BETA_RANGE.1),
    }
}

/// Draw a field of the requested family (the standard family consumes no
/// randomness).
pub fn sample_field<R: Rng + ?Sized>(kind: SystemKind, rng: &mut R) -> VectorField {
    match kind {
        SystemKind::Standard => VectorField::Standard,
        SystemKind::RandomParams => VectorField::Random(sample_random_params(rng)),
        SystemKind::Nonparametric => {
            VectorField::Nonparametric(Box::new(sample_nonpar_field(rng)))
        }
    }
}
