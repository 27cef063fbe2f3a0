//! Classical fixed-step fourth-order Runge–Kutta integration.

use super::NumError;
use crate::series::{State, TimeSeries};

/// One classical RK4 step of size `dt` for an autonomous field.
pub fn rk4_step<F>(f: &F, u: &State, dt: f64) -> State
where
    F: Fn(&State) -> State + ?Sized,
{
    let k1 = f(u);
    let k2 = f(&(u + &k1 * (dt / 2.0)));
    let k3 = f(&(u + &k2 * (dt / 2.0)));
    let k4 = f(&(u + &k3 * dt));
    u + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

/// Integrate an autonomous field with fixed step `dt` for `steps` steps.
///
/// Returns the full trajectory including the initial state (`steps + 1`
/// samples at `t0 + i*dt`). A non-finite state aborts with the 1-based index
/// of the failing step.
pub fn rk4_integrate<F>(
    f: &F,
    u0: &State,
    t0: f64,
    dt: f64,
    steps: usize,
) -> Result<TimeSeries, NumError>
where
    F: Fn(&State) -> State + ?Sized,
{
    if !(dt.is_finite() && dt > 0.0) {
        return Err(NumError::InvalidArgument(format!(
            "step size must be positive, got {dt}"
        )));
    }
    if !u0.iter().all(|v| v.is_finite()) {
        return Err(NumError::NonFinite("initial state".into()));
    }
    let mut states = Vec::with_capacity(steps + 1);
    let mut times = Vec::with_capacity(steps + 1);
    states.push(u0.clone());
    times.push(t0);
    let mut u = u0.clone();
    for i in 1..=steps {
        u = rk4_step(f, &u, dt);
        if !u.iter().all(|v| v.is_finite()) {
            return Err(NumError::Divergence { step: i });
        }
        // multiply rather than accumulate so grid times stay exact
        times.push(t0 + i as f64 * dt);
        states.push(u.clone());
    }
    TimeSeries::new(times, states).map_err(|e| NumError::InvalidArgument(e.to_string()))
}
