//! Shared helpers for the integration suites: independently coded score
//! oracles on randomly generated aligned instances, plus closed-form checks
//! for the numerical kernels and the grid tuner.
//!
//! Everything here deliberately avoids the library's own reduction helpers:
//! spreads, norms, and cumulative maxima are recomputed with plain nested
//! loops over `Vec<f64>` so that agreement with the library is meaningful.

#![allow(dead_code)] // each suite uses its own subset of these helpers

use chaoscast_core::forecasters::ParamValue;
use chaoscast_core::metrics::{self, AlignedPair, MetricConfig};
use chaoscast_core::numkit::{ridge_fit, rk4_integrate, stlsq, FeatureMap};
use chaoscast_core::series::State;
use chaoscast_core::tuner::{local_grid_search, ParamDomain};
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Random aligned instances and brute-force score oracles
// ---------------------------------------------------------------------------

/// A raw truth/prediction instance kept as plain vectors so the oracle side
/// never touches the library's linear-algebra types.
#[derive(Debug, Clone)]
pub struct RawInstance {
    pub start: f64,
    pub horizon: f64,
    pub times: Vec<f64>,
    pub truth: Vec<Vec<f64>>,
    pub pred: Vec<Option<Vec<f64>>>,
}

impl RawInstance {
    pub fn pair(&self) -> AlignedPair {
        AlignedPair::new(
            self.start,
            self.horizon,
            self.times.clone(),
            self.truth
                .iter()
                .map(|u| State::from_column_slice(u))
                .collect(),
            self.pred
                .iter()
                .map(|p| p.as_ref().map(|v| State::from_column_slice(v)))
                .collect(),
        )
        .expect("generated instance aligns")
    }

    /// The same instance with every state mapped through `x -> c*x + shift`.
    pub fn affine_image(&self, c: f64, shift: &[f64]) -> RawInstance {
        let map = |v: &[f64]| -> Vec<f64> {
            v.iter().zip(shift).map(|(x, b)| c * x + b).collect()
        };
        RawInstance {
            start: self.start,
            horizon: self.horizon,
            times: self.times.clone(),
            truth: self.truth.iter().map(|u| map(u)).collect(),
            pred: self
                .pred
                .iter()
                .map(|p| p.as_ref().map(|v| map(v)))
                .collect(),
        }
    }
}

/// How the generated prediction relates to the truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PredictionShape {
    /// Truth plus noise, with occasional missing entries.
    Generic,
    /// Truth plus noise, every entry present.
    FullyPresent,
    /// An exact, fully present copy of the truth.
    Perfect,
}

pub fn random_instance(
    r: &mut ChaCha12Rng,
    min_len: usize,
    max_len: usize,
    constant_truth: bool,
    shape: PredictionShape,
) -> RawInstance {
    let m = r.random_range(min_len..=max_len);
    let dim = r.random_range(1..=4);
    let start: f64 = r.random_range(-5.0..5.0);
    let horizon: f64 = r.random_range(0.1..10.0);
    // strictly increasing stamps in (start, start + horizon]
    let gaps: Vec<f64> = (0..m).map(|_| r.random_range(0.01..1.0)).collect();
    let total: f64 = gaps.iter().sum();
    let mut acc = 0.0;
    let times: Vec<f64> = gaps
        .iter()
        .map(|g| {
            acc += g;
            start + horizon * (acc / total)
        })
        .collect();

    let scale = 10f64.powf(r.random_range(-2.0..2.0));
    let draw_state = |r: &mut ChaCha12Rng| -> Vec<f64> {
        (0..dim)
            .map(|_| {
                let z: f64 = r.sample(StandardNormal);
                scale * z
            })
            .collect()
    };
    let base = draw_state(r);
    let truth: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            if constant_truth {
                base.clone()
            } else {
                draw_state(r)
            }
        })
        .collect();

    let noise = scale * 10f64.powf(r.random_range(-2.0..1.0));
    let pred: Vec<Option<Vec<f64>>> = truth
        .iter()
        .map(|u| match shape {
            PredictionShape::Perfect => Some(u.clone()),
            PredictionShape::FullyPresent | PredictionShape::Generic => {
                if shape == PredictionShape::Generic && r.random_range(0.0..1.0) < 0.15 {
                    None
                } else {
                    Some(
                        u.iter()
                            .map(|x| {
                                let z: f64 = r.sample(StandardNormal);
                                x + noise * z
                            })
                            .collect(),
                    )
                }
            }
        })
        .collect();

    RawInstance {
        start,
        horizon,
        times,
        truth,
        pred,
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    let mut sq = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        sq += d * d;
    }
    sq.sqrt()
}

/// Root-mean-square Euclidean deviation of the truth states from their mean,
/// rebuilt from scratch with plain loops.
pub fn oracle_spread(truth: &[Vec<f64>]) -> f64 {
    let m = truth.len() as f64;
    let dim = truth[0].len();
    let mut mean = vec![0.0; dim];
    for u in truth {
        for (acc, x) in mean.iter_mut().zip(u) {
            *acc += *x;
        }
    }
    for acc in &mut mean {
        *acc /= m;
    }
    let mut total = 0.0;
    for u in truth {
        let mut sq = 0.0;
        for (x, c) in u.iter().zip(&mean) {
            let d = x - c;
            sq += d * d;
        }
        total += sq;
    }
    (total / m).sqrt()
}

/// Brute-force cumulative maximum error: for every index `j`, rescan all
/// `k <= j` (nested loops, quadratic on purpose), clip at 1, and average.
/// A missing entry contributes the clipped worst term 1. Zero spread scores
/// 0 for an exact and complete prediction and 1 otherwise.
pub fn oracle_cme(truth: &[Vec<f64>], pred: &[Option<Vec<f64>>]) -> f64 {
    let m = truth.len();
    let sd = oracle_spread(truth);
    if sd == 0.0 {
        let perfect = pred
            .iter()
            .zip(truth)
            .all(|(p, u)| p.as_ref().is_some_and(|v| v == u));
        return if perfect { 0.0 } else { 1.0 };
    }
    let mut sum = 0.0;
    for j in 0..m {
        let mut worst = 0.0f64;
        for k in 0..=j {
            let term = match &pred[k] {
                Some(p) => (euclid(p, &truth[k]) / sd).min(1.0),
                None => 1.0,
            };
            worst = worst.max(term);
        }
        sum += worst;
    }
    sum / m as f64
}

/// Brute-force validity horizon: elapsed time from the forecast start until
/// the normalized error first exceeds `kappa` (a missing entry exceeds), or
/// the full horizon if it never does.
pub fn oracle_valid_time(inst: &RawInstance, kappa: f64) -> f64 {
    let sd = oracle_spread(&inst.truth);
    for (j, &t) in inst.times.iter().enumerate() {
        let exceeded = match &inst.pred[j] {
            Some(p) => euclid(p, &inst.truth[j]) / sd > kappa,
            None => true,
        };
        if exceeded {
            return t - inst.start;
        }
    }
    inst.horizon
}

// ---------------------------------------------------------------------------
// The score property battery
// ---------------------------------------------------------------------------

/// The library's cumulative error must equal the quadratic rescan oracle
/// bit for bit, across generic, degenerate-spread, and perfect instances.
pub fn check_cme_matches_bruteforce(instances: usize) {
    let mut r = rng(0xC3E0);
    for i in 0..instances {
        let constant = i % 10 == 0;
        let shape = match i % 10 {
            0 if i % 20 == 0 => PredictionShape::Perfect,
            1 => PredictionShape::Perfect,
            _ => PredictionShape::Generic,
        };
        let inst = random_instance(&mut r, 1, 20, constant, shape);
        let got = metrics::cme(&inst.pair());
        let want = oracle_cme(&inst.truth, &inst.pred);
        assert!(
            got == want,
            "instance {i}: library cme {got:e} differs from the rescan oracle {want:e}"
        );
    }
}

/// Cumulative error lies in [0, 1]; the running sequence it averages is
/// non-decreasing and itself clipped to [0, 1].
pub fn check_bounds_and_monotonicity(instances: usize) {
    let mut r = rng(0xB07D);
    for i in 0..instances {
        let constant = i % 7 == 0;
        let shape = if i % 5 == 0 {
            PredictionShape::Perfect
        } else {
            PredictionShape::Generic
        };
        let inst = random_instance(&mut r, 1, 20, constant, shape);
        let pair = inst.pair();
        let seq = metrics::running_normalized_max(&pair);
        assert_eq!(seq.len(), inst.times.len());
        for w in seq.windows(2) {
            assert!(w[1] >= w[0], "instance {i}: running maximum decreased");
        }
        for &v in &seq {
            assert!((0.0..=1.0).contains(&v), "instance {i}: term {v} out of range");
        }
        let score = metrics::cme(&pair);
        assert!(
            (0.0..=1.0).contains(&score),
            "instance {i}: cme {score} out of range"
        );
    }
}

/// Mapping both trajectories through the same invertible affine change of
/// coordinates `x -> c*x + b` (scalar `c != 0`, constant shift `b`) must not
/// move the cumulative error or the validity horizon by more than 1e-12.
pub fn check_affine_invariance(instances: usize) {
    let mut r = rng(0xAFF1);
    for i in 0..instances {
        let inst = random_instance(&mut r, 2, 20, false, PredictionShape::Generic);
        let dim = inst.truth[0].len();
        let c = loop {
            let c: f64 = r.random_range(-4.0..4.0);
            if c.abs() >= 0.25 {
                break c;
            }
        };
        let shift: Vec<f64> = (0..dim).map(|_| r.random_range(-10.0..10.0)).collect();
        let moved = inst.affine_image(c, &shift);

        let a = metrics::cme(&inst.pair());
        let b = metrics::cme(&moved.pair());
        assert!(
            (a - b).abs() <= 1e-12,
            "instance {i}: cme moved from {a} to {b} under c={c}"
        );

        let cfg = MetricConfig {
            kappa: r.random_range(0.1..1.5),
        };
        let va = metrics::valid_time(&inst.pair(), &cfg).expect("spread is positive");
        let vb = metrics::valid_time(&moved.pair(), &cfg).expect("spread is positive");
        assert!(
            (va - vb).abs() <= 1e-12,
            "instance {i}: valid time moved from {va} to {vb} under c={c}"
        );
    }
}

/// The library's validity horizon must equal the brute-force scan exactly.
pub fn check_valid_time_matches_bruteforce(instances: usize) {
    let mut r = rng(0x7A11);
    for i in 0..instances {
        let inst = random_instance(&mut r, 2, 20, false, PredictionShape::Generic);
        let kappa = r.random_range(0.05..2.0);
        let got = metrics::valid_time(&inst.pair(), &MetricConfig { kappa })
            .expect("spread is positive");
        let want = oracle_valid_time(&inst, kappa);
        assert!(
            got == want,
            "instance {i}: library valid time {got} differs from the scan oracle {want}"
        );
    }
}

/// Symmetric percentage error: bounded by [0, 200], exactly symmetric in its
/// two arguments, zero iff the prediction is exact, and exactly 200 for a
/// sign-flipped prediction.
pub fn check_smape_properties(instances: usize) {
    let mut r = rng(0x5A9E);
    for i in 0..instances {
        // bounds, including instances with missing entries
        let generic = random_instance(&mut r, 1, 20, false, PredictionShape::Generic);
        if let Ok(v) = metrics::smape(&generic.pair()) {
            assert!(
                (0.0..=200.0).contains(&v),
                "instance {i}: smape {v} out of range"
            );
        }

        // exact symmetry: swap the roles of truth and prediction
        let full = random_instance(&mut r, 1, 20, false, PredictionShape::FullyPresent);
        let swapped = RawInstance {
            start: full.start,
            horizon: full.horizon,
            times: full.times.clone(),
            truth: full
                .pred
                .iter()
                .map(|p| p.clone().expect("fully present"))
                .collect(),
            pred: full.truth.iter().map(|u| Some(u.clone())).collect(),
        };
        match (metrics::smape(&full.pair()), metrics::smape(&swapped.pair())) {
            (Ok(a), Ok(b)) => {
                assert!(
                    a.to_bits() == b.to_bits(),
                    "instance {i}: smape is not symmetric ({a} vs {b})"
                );
                if full.truth != swapped.truth {
                    assert!(a > 0.0, "instance {i}: differing prediction scored zero");
                }
            }
            (Err(_), Err(_)) => {}
            (a, b) => panic!("instance {i}: asymmetric smape outcome {a:?} vs {b:?}"),
        }

        // zero for an exact copy
        let perfect = random_instance(&mut r, 1, 20, false, PredictionShape::Perfect);
        assert_eq!(
            metrics::smape(&perfect.pair()).expect("nonzero states"),
            0.0,
            "instance {i}: exact prediction must score zero"
        );

        // exactly 200 for a sign flip
        let mirror = RawInstance {
            pred: perfect
                .truth
                .iter()
                .map(|u| Some(u.iter().map(|x| -x).collect()))
                .collect(),
            ..perfect
        };
        assert_eq!(
            metrics::smape(&mirror.pair()).expect("nonzero states"),
            200.0,
            "instance {i}: sign-flipped prediction must score the ceiling"
        );
    }
}

/// Dominance: a prediction that is strictly closer at the first time and at
/// least as close everywhere else scores strictly better, provided the
/// worse prediction never hits the clip.
pub fn check_dominance(instances: usize) {
    let mut r = rng(0xD011);
    for i in 0..instances {
        let base = random_instance(&mut r, 2, 20, false, PredictionShape::Perfect);
        let sd = oracle_spread(&base.truth);
        assert!(sd > 0.0, "instance {i}: degenerate spread in generator");
        let dim = base.truth[0].len();

        // errors with norms in [0.05, 0.7]*sd: nonzero and below the clip
        let coarse: Vec<Option<Vec<f64>>> = base
            .truth
            .iter()
            .map(|u| {
                let dir: Vec<f64> = (0..dim)
                    .map(|_| {
                        let z: f64 = r.sample(StandardNormal);
                        z
                    })
                    .collect();
                let norm = euclid(&dir, &vec![0.0; dim]);
                let target = sd * r.random_range(0.05..0.7);
                Some(
                    u.iter()
                        .zip(&dir)
                        .map(|(x, d)| x + d * target / norm)
                        .collect(),
                )
            })
            .collect();
        let fine: Vec<Option<Vec<f64>>> = coarse
            .iter()
            .zip(&base.truth)
            .map(|(p, u)| {
                let p = p.as_ref().expect("present");
                Some(
                    p.iter()
                        .zip(u)
                        .map(|(pv, uv)| uv + (pv - uv) / 2.0)
                        .collect(),
                )
            })
            .collect();

        let worse = RawInstance {
            pred: coarse,
            ..base.clone()
        };
        let better = RawInstance { pred: fine, ..base };
        let a = metrics::cme(&better.pair());
        let b = metrics::cme(&worse.pair());
        assert!(
            a < b,
            "instance {i}: uniformly closer prediction did not score strictly better ({a} vs {b})"
        );
    }
}

/// The full battery at the counts the acceptance gate requires.
pub fn metric_property_battery() {
    check_cme_matches_bruteforce(1000);
    check_bounds_and_monotonicity(1000);
    check_affine_invariance(300);
    check_valid_time_matches_bruteforce(500);
    check_smape_properties(500);
    check_dominance(200);
}

// ---------------------------------------------------------------------------
// Closed-form oracles for the numerical kernels
// ---------------------------------------------------------------------------

/// Sequential thresholded least squares must recover planted 2-sparse
/// polynomial targets: exact support, coefficients within 1e-6, and exact
/// zeros elsewhere.
pub fn check_stlsq_recovery() {
    for case in 0..20u64 {
        let mut r = rng(0x57AB + case);
        let dim = 2 + (case as usize % 2);
        let map = FeatureMap::new(dim, 3, false).expect("valid map");
        let p = map.n_features();
        let n = 40 * p;
        let xs: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| r.random_range(-1.5..1.5)).collect())
            .collect();
        let design = map.eval_matrix(&xs, None).expect("evaluable");

        let j1 = r.random_range(0..p);
        let j2 = loop {
            let j = r.random_range(0..p);
            if j != j1 {
                break j;
            }
        };
        let sign = |r: &mut ChaCha12Rng| if r.random_range(0.0..1.0) < 0.5 { -1.0 } else { 1.0 };
        let c1 = sign(&mut r) * r.random_range(0.8..3.0);
        let c2 = sign(&mut r) * r.random_range(0.8..3.0);
        let y = Mat::from_fn(n, 1, |i, _| c1 * design[(i, j1)] + c2 * design[(i, j2)]);

        let model = stlsq(design.as_ref(), y.as_ref(), 0.4, 100).expect("solvable");
        let mut want = [(j1, c1), (j2, c2)];
        want.sort_by_key(|(j, _)| *j);
        assert_eq!(
            model.active[0],
            vec![want[0].0, want[1].0],
            "case {case}: support not recovered"
        );
        for &(j, c) in &want {
            assert!(
                (model.weights[(j, 0)] - c).abs() <= 1e-6,
                "case {case}: coefficient {j} is {} but {c} was planted",
                model.weights[(j, 0)]
            );
        }
        for j in 0..p {
            if j != j1 && j != j2 {
                assert_eq!(
                    model.weights[(j, 0)],
                    0.0,
                    "case {case}: phantom coefficient at {j}"
                );
            }
        }
        assert!(!model.all_zero);
    }
}

/// Ridge regression against hand-derived closed forms, within 1e-10.
pub fn check_ridge_closed_forms() {
    // identity design interpolates
    let x = Mat::from_fn(2, 2, |i, j| if i == j { 1.0 } else { 0.0 });
    let y = Mat::from_fn(2, 1, |i, _| (i + 1) as f64);
    let w = ridge_fit(x.as_ref(), y.as_ref(), 0.0).expect("solvable");
    assert!((w.weights[(0, 0)] - 1.0).abs() <= 1e-10);
    assert!((w.weights[(1, 0)] - 2.0).abs() <= 1e-10);

    // duplicated row with unit penalty: (X'X + 1)^-1 X'Y = 4/3
    let x = Mat::from_fn(2, 1, |_, _| 1.0);
    let y = Mat::from_fn(2, 1, |_, _| 2.0);
    let w = ridge_fit(x.as_ref(), y.as_ref(), 1.0).expect("solvable");
    assert!((w.weights[(0, 0)] - 4.0 / 3.0).abs() <= 1e-10);

    // single-feature problems: w = sum(x*y) / (sum(x^2) + lambda)
    let mut r = rng(0x41D6);
    for case in 0..10 {
        let n = r.random_range(3..40);
        let xs: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
        let ys: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
        let lambda = [0.0, 1e-6, 0.1, 3.0][case % 4];
        let x = Mat::from_fn(n, 1, |i, _| xs[i]);
        let y = Mat::from_fn(n, 1, |i, _| ys[i]);
        let w = ridge_fit(x.as_ref(), y.as_ref(), lambda).expect("solvable");
        let num: f64 = xs.iter().zip(&ys).map(|(a, b)| a * b).sum();
        let den: f64 = xs.iter().map(|a| a * a).sum::<f64>() + lambda;
        let closed = num / den;
        assert!(
            (w.weights[(0, 0)] - closed).abs() <= 1e-10 * closed.abs().max(1.0),
            "case {case}: {} vs closed form {closed}",
            w.weights[(0, 0)]
        );
    }

    // orthonormal design: W = Q'Y / (1 + lambda)
    for case in 0..5 {
        let theta = 0.7 * (case as f64 + 1.0);
        let lambda = [0.0, 0.3, 1.0, 2.5, 10.0][case];
        let q = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => theta.cos(),
            (0, 1) => -theta.sin(),
            (1, 0) => theta.sin(),
            (1, 1) => theta.cos(),
            _ => unreachable!(),
        });
        let y = Mat::from_fn(2, 2, |i, j| (2 * i + j) as f64 - 1.5);
        let w = ridge_fit(q.as_ref(), y.as_ref(), lambda).expect("solvable");
        for a in 0..2 {
            for b in 0..2 {
                let closed =
                    (q[(0, a)] * y[(0, b)] + q[(1, a)] * y[(1, b)]) / (1.0 + lambda);
                assert!(
                    (w.weights[(a, b)] - closed).abs() <= 1e-10,
                    "case {case}: entry ({a},{b}) {} vs {closed}",
                    w.weights[(a, b)]
                );
            }
        }
    }

    // shrinkage limit
    let mut r = rng(0x5471);
    let x = Mat::from_fn(8, 3, |_, _| r.random_range(-1.0..1.0));
    let y = Mat::from_fn(8, 2, |_, _| r.random_range(-1.0..1.0));
    let w = ridge_fit(x.as_ref(), y.as_ref(), 1e12).expect("solvable");
    let wn: f64 = (0..3)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| w.weights[(i, j)] * w.weights[(i, j)])
        .sum::<f64>()
        .sqrt();
    let yn: f64 = (0..8)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| y[(i, j)] * y[(i, j)])
        .sum::<f64>()
        .sqrt();
    assert!(wn < 1e-6 * yn, "big penalties must shrink the weights away");
}

/// Empirical convergence order of the integrator under step halving, on two
/// fields with known closed-form solutions. Returns the measured orders.
pub fn check_rk4_order() -> (f64, f64) {
    let order = |err_coarse: f64, err_fine: f64| (err_coarse / err_fine).log2();

    // u' = u on [0, 1]: u(1) = e
    let growth = |u: &State| u.clone();
    let u0 = State::from_column_slice(&[1.0]);
    let coarse = rk4_integrate(&growth, &u0, 0.0, 0.05, 20).expect("integrates");
    let fine = rk4_integrate(&growth, &u0, 0.0, 0.025, 40).expect("integrates");
    let e = std::f64::consts::E;
    let growth_order = order(
        (coarse.last_state()[0] - e).abs(),
        (fine.last_state()[0] - e).abs(),
    );
    assert!(
        growth_order >= 3.9,
        "exponential field converged at order {growth_order}"
    );

    // logistic u' = u(1-u), u(0) = 0.1 on [0, 2]: u(t) = 1/(1 + 9 e^-t)
    let logistic = |u: &State| State::from_column_slice(&[u[0] * (1.0 - u[0])]);
    let u0 = State::from_column_slice(&[0.1]);
    let truth = 1.0 / (1.0 + 9.0 * (-2.0f64).exp());
    let coarse = rk4_integrate(&logistic, &u0, 0.0, 0.1, 20).expect("integrates");
    let fine = rk4_integrate(&logistic, &u0, 0.0, 0.05, 40).expect("integrates");
    let logistic_order = order(
        (coarse.last_state()[0] - truth).abs(),
        (fine.last_state()[0] - truth).abs(),
    );
    assert!(
        logistic_order >= 3.9,
        "logistic field converged at order {logistic_order}"
    );

    (growth_order, logistic_order)
}

// ---------------------------------------------------------------------------
// Grid tuner vs. exhaustive lattice search
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct LatticeAxis {
    name: String,
    linear: bool,
    anchor: f64,
    step: f64,
    lo: i64,
    hi: i64,
    weight: f64,
    target: f64,
}

impl LatticeAxis {
    fn value(&self, i: i64) -> f64 {
        if self.linear {
            self.anchor + i as f64 * self.step
        } else {
            self.anchor * self.step.powi(i as i32)
        }
    }

    fn index_of(&self, v: f64) -> i64 {
        let raw = if self.linear {
            (v - self.anchor) / self.step
        } else {
            (v / self.anchor).ln() / self.step.ln()
        };
        raw.round() as i64
    }

    fn cost(&self, i: i64) -> f64 {
        let d = i as f64 - self.target;
        self.weight * d * d
    }

    fn domain(&self) -> ParamDomain {
        let bounds = (self.value(self.lo), self.value(self.hi));
        if self.linear {
            ParamDomain::linear(&self.name, self.step, bounds, &[self.anchor])
                .expect("valid axis")
        } else {
            ParamDomain::exponential(&self.name, self.step, bounds, &[self.anchor])
                .expect("valid axis")
        }
    }
}

/// On separable convex scores over 1-D and 2-D lattices, iterated local grid
/// refinement must land exactly where exhaustive enumeration lands.
pub fn check_tuner_against_bruteforce() {
    for case in 0..20u64 {
        let mut r = rng(0x6A1D + case);
        let ndim = 1 + (case as usize % 2);
        let axes: Vec<LatticeAxis> = (0..ndim)
            .map(|d| {
                let (linear, anchor, step) = if r.random_range(0.0..1.0) < 0.5 {
                    let step = [0.5, 1.0, 2.0][r.random_range(0..3)];
                    (true, r.random_range(-3.0..3.0), step)
                } else {
                    (false, 1.0, [2.0, 10.0][r.random_range(0..2)])
                };
                let lo = -(r.random_range(3..9) as i64);
                let hi = r.random_range(3..9) as i64;
                let target = r.random_range((lo - 2) as f64..(hi + 2) as f64).floor() + 0.3;
                LatticeAxis {
                    name: format!("x{d}"),
                    linear,
                    anchor,
                    step,
                    lo,
                    hi,
                    weight: r.random_range(0.5..4.0),
                    target,
                }
            })
            .collect();

        // exhaustive enumeration of the whole bounded lattice
        let mut best_score = f64::INFINITY;
        let mut best_idx = vec![0i64; ndim];
        let mut scan = |idx: &[i64]| {
            let s: f64 = idx.iter().zip(&axes).map(|(&i, a)| a.cost(i)).sum();
            if s < best_score {
                best_score = s;
                best_idx = idx.to_vec();
            }
        };
        if ndim == 1 {
            for i in axes[0].lo..=axes[0].hi {
                scan(&[i]);
            }
        } else {
            for i in axes[0].lo..=axes[0].hi {
                for j in axes[1].lo..=axes[1].hi {
                    scan(&[i, j]);
                }
            }
        }

        let domains: Vec<ParamDomain> = axes.iter().map(|a| a.domain()).collect();
        let outcome = local_grid_search(&format!("lattice{case}"), &domains, 100_000, |cfg| {
            let score: f64 = axes
                .iter()
                .map(|a| {
                    let ParamValue::Number(v) = cfg.params[&a.name] else {
                        panic!("scalar axis produced a non-numeric value");
                    };
                    a.cost(a.index_of(v))
                })
                .sum();
            Ok(score)
        })
        .expect("search completes");

        assert!(
            outcome.best_score.to_bits() == best_score.to_bits(),
            "case {case}: refinement found {} but enumeration found {best_score}",
            outcome.best_score
        );
        let found_idx: Vec<i64> = axes
            .iter()
            .map(|a| {
                let ParamValue::Number(v) = outcome.best.params[&a.name] else {
                    panic!("scalar axis produced a non-numeric value");
                };
                a.index_of(v)
            })
            .collect();
        assert_eq!(
            found_idx, best_idx,
            "case {case}: refinement and enumeration disagree on the minimizer"
        );
        assert!(outcome.trace.len() <= 100_000);
    }
}
