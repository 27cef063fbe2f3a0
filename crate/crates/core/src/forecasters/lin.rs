//! One-step ridge regression on polynomial features of the (lagged) state —
//! the nonlinear vector autoregression family.

use super::propagator::{build_propagator_data, PropagatorConfig, StepFn};
use super::{ForecastError, MAX_POLY_FEATURES};
use crate::numkit::{ridge_fit, FeatureMap, NumError};
use crate::series::TimeSeries;
use faer::Mat;

/// Fit a polynomial ridge propagator on a (normalized) series.
///
/// The full concatenated lag vector enters one polynomial feature map, so
/// cross terms between lags are included; `T` variants append the spanned
/// timestep as a single extra feature column. Feature dictionaries larger
/// than [`MAX_POLY_FEATURES`] are refused.
pub(crate) fn fit_lin(
    train: &TimeSeries,
    degree: usize,
    lambda: f64,
    cfg: &PropagatorConfig,
) -> Result<StepFn, ForecastError> {
    let data = build_propagator_data(train, cfg)?;
    let input_dim = cfg.input_dim(train.dim());
    // size the dictionary combinatorially BEFORE building the map: the
    // refused configurations are exactly the ones too large to materialize
    let dictionary = monomial_count(input_dim, degree) + usize::from(cfg.timestep_input);
    if dictionary > MAX_POLY_FEATURES {
        return Err(ForecastError::Num(NumError::InvalidArgument(format!(
            "{dictionary} polynomial features exceed the limit of {MAX_POLY_FEATURES} \
             (inputs of dimension {input_dim}, degree {degree})"
        ))));
    }
    let features = FeatureMap::new(input_dim, degree, cfg.timestep_input)?;
    let x = features.eval_matrix(
        &data.inputs,
        cfg.timestep_input.then_some(data.spans.as_slice()),
    )?;
    let d = train.dim();
    let mut y = Mat::<f64>::zeros(data.targets.len(), d);
    for (i, t) in data.targets.iter().enumerate() {
        for j in 0..d {
            y[(i, j)] = t[j];
        }
    }
    let model = ridge_fit(x.as_ref(), y.as_ref(), lambda)?;
    Ok(StepFn::Ridge { features, model })
}

/// Number of monomials of total degree at most `degree` in `dim` variables,
/// C(dim + degree, degree), saturating on overflow.
fn monomial_count(dim: usize, degree: usize) -> usize {
    let mut acc: u128 = 1;
    for i in 1..=degree as u128 {
        // exact at every step: the running value is C(dim + i, i)
        acc = acc.saturating_mul(dim as u128 + i) / i;
        if acc >= usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

#[cfg(test)]
mod tests {
    use super::super::propagator::{propagator_rollout, TargetKind};
    use super::super::{fit, ForecastProblem, MethodConfig};
    use super::*;
    use crate::series::State;
    use nalgebra::{DMatrix, DVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn s(vals: &[f64]) -> State {
        DVector::from_row_slice(vals)
    }

    /// Data generated by a known 3x3 contraction is recovered to high
    /// accuracy by an unpenalized linear fit, and the rollout matches the
    /// true iteration.
    #[test]
    fn recovers_a_linear_map_and_rolls_it_out() {
        let a = DMatrix::<f64>::from_row_slice(
            3,
            3,
            &[0.6, 0.2, -0.1, -0.15, 0.7, 0.05, 0.1, -0.2, 0.8],
        );
        let mut u = s(&[1.0, -0.5, 0.8]);
        let mut times = Vec::new();
        let mut states = Vec::new();
        for i in 0..50 {
            times.push(0.01 * (i + 1) as f64);
            states.push(u.clone());
            u = &a * &u;
        }
        let train = TimeSeries::new(times.clone(), states).unwrap();

        let config = MethodConfig::new("LinS")
            .with("K", 0.0)
            .with("s", 1.0)
            .with("degree", 1.0)
            .with("lambda", 0.0);
        let fitted = fit(&config, &train, &mut ChaCha12Rng::seed_from_u64(0)).unwrap();

        let origin = train.last_state().clone();
        let t_end = train.last_time();
        let targets: Vec<f64> = (1..=10).map(|k| t_end + 0.01 * k as f64).collect();
        let problem = ForecastProblem::new(train, origin.clone(), t_end, targets).unwrap();
        let pred = fitted.predict(&problem).unwrap();

        let mut truth = origin;
        for out in &pred.states {
            truth = &a * &truth;
            assert!(
                (out.as_ref().unwrap() - &truth).norm() < 1e-6,
                "rollout drifted from the generating map"
            );
        }
    }

    /// An overwhelming ridge penalty crushes every coefficient, so the
    /// difference-quotient rollout degenerates to persistence.
    #[test]
    fn huge_penalty_reduces_difference_fit_to_persistence() {
        let times: Vec<f64> = (1..=40).map(|i| 0.05 * i as f64).collect();
        let states: Vec<State> = times
            .iter()
            .map(|&t| s(&[t.sin(), t.cos(), (0.5 * t).sin()]))
            .collect();
        let train = TimeSeries::new(times, states).unwrap();
        let config = MethodConfig::new("LinD")
            .with("K", 0.0)
            .with("s", 1.0)
            .with("degree", 2.0)
            .with("lambda", 1e12);
        let fitted = fit(&config, &train, &mut ChaCha12Rng::seed_from_u64(0)).unwrap();
        let origin = train.last_state().clone();
        let t_end = train.last_time();
        let targets: Vec<f64> = (1..=5).map(|k| t_end + 0.05 * k as f64).collect();
        let problem = ForecastProblem::new(train, origin.clone(), t_end, targets).unwrap();
        let pred = fitted.predict(&problem).unwrap();
        for out in &pred.states {
            assert!(
                (out.as_ref().unwrap() - &origin).norm() < 1e-3,
                "crushed fit should forecast persistence"
            );
        }
    }

    /// The feature-dictionary cap turns absurd lag/degree combinations into
    /// a clean error instead of an allocation storm.
    #[test]
    fn oversized_feature_dictionaries_are_refused() {
        let times: Vec<f64> = (1..=120).map(|i| 0.01 * i as f64).collect();
        let states: Vec<State> = times.iter().map(|&t| s(&[t, t * t, 1.0 - t])).collect();
        let train = TimeSeries::new(times, states).unwrap();
        let cfg = PropagatorConfig {
            target: TargetKind::State,
            timestep_input: false,
            past_steps: 32,
            skip: 1,
            forward_skip: 0,
        };
        // dimension 99 at degree 8: far beyond the cap
        let err = fit_lin(&train, 8, 0.0, &cfg).unwrap_err();
        assert!(err.to_string().contains("exceed the limit"));
    }

    /// The combinatorial dictionary count agrees with the feature map it
    /// guards, and saturates instead of overflowing.
    #[test]
    fn monomial_count_matches_the_feature_map() {
        for (dim, degree) in [(1, 1), (2, 3), (3, 5), (4, 4), (6, 2)] {
            let map = FeatureMap::new(dim, degree, false).unwrap();
            assert_eq!(
                monomial_count(dim, degree),
                map.n_features(),
                "dim {dim} degree {degree}"
            );
        }
        // the refused configuration really is over the cap, by a wide margin
        assert!(monomial_count(3267, 8) > MAX_POLY_FEATURES);
        // absurd sizes saturate instead of overflowing
        assert_eq!(monomial_count(usize::MAX / 2, 4), usize::MAX);
    }

    /// Degree-4 difference fit without penalty emulates smooth dynamics over
    /// a one-unit horizon (scripted pendulum-like system instead of a full
    /// chaotic run; the chaotic case is covered by integration tests). The
    /// attainable accuracy is set by the degree-4 truncation of the sine,
    /// roughly u^5/5! pointwise, compounded over the rollout.
    #[test]
    fn tuning_free_polynomial_variant_tracks_smooth_dynamics() {
        // du/dt = (u2, -sin(u1)) sampled densely via RK4
        let f = |u: &State| s(&[u[1], -u[0].sin()]);
        let dt = 0.01;
        let mut u = s(&[1.2, 0.0]);
        let mut times = Vec::new();
        let mut states = Vec::new();
        for i in 0..400 {
            times.push(dt * (i + 1) as f64);
            states.push(u.clone());
            u = crate::numkit::rk4_step(&f, &u, dt);
        }
        let train = TimeSeries::new(times, states).unwrap();
        let fitted = fit(
            &MethodConfig::new("LinPo4"),
            &train,
            &mut ChaCha12Rng::seed_from_u64(0),
        )
        .unwrap();
        let origin = train.last_state().clone();
        let t_end = train.last_time();
        let targets: Vec<f64> = (1..=100).map(|k| t_end + dt * k as f64).collect();
        let problem = ForecastProblem::new(train, origin.clone(), t_end, targets).unwrap();
        let pred = fitted.predict(&problem).unwrap();

        let mut truth = origin;
        let mut worst = 0.0f64;
        for out in &pred.states {
            truth = crate::numkit::rk4_step(&f, &truth, dt);
            worst = worst.max((out.as_ref().unwrap() - &truth).norm());
        }
        assert!(worst < 5e-3, "LinPo4 drifted by {worst:.2e} over one unit");
    }

    /// Plumbing check: rollout of a fitted StepFn agrees with calling the
    /// same step manually.
    #[test]
    fn rollout_matches_manual_stepping() {
        let times: Vec<f64> = (1..=30).map(|i| 0.1 * i as f64).collect();
        let states: Vec<State> = times.iter().map(|&t| s(&[t.sin(), t.cos()])).collect();
        let train = TimeSeries::new(times, states).unwrap();
        let cfg = PropagatorConfig {
            target: TargetKind::State,
            timestep_input: true,
            past_steps: 0,
            skip: 1,
            forward_skip: 0,
        };
        let step = fit_lin(&train, 2, 1e-8, &cfg).unwrap();
        let origin = train.last_state().clone();
        let t_end = train.last_time();
        let targets: Vec<f64> = (1..=4).map(|k| t_end + 0.1 * k as f64).collect();
        let pred = propagator_rollout(&step, &origin, t_end, &targets, &cfg);

        let span = targets[0] - t_end;
        let mut u = origin;
        for out in &pred.states {
            u = step.eval(u.as_slice(), Some(span)).unwrap();
            assert_eq!(out.as_ref().unwrap(), &u);
        }
    }
}
