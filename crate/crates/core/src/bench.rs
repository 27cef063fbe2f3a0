//! Benchmark orchestration: per-repetition evaluation of a method on a
//! dataset, score aggregation with confidence intervals and ranks, paired
//! significance tests between methods, and the trajectory-perturbation
//! baseline study.
//!
//! Determinism: for a fixed master seed, every score field of every record
//! is a pure function of the inputs — the per-repetition fitting RNG is
//! derived from (master seed, method, system, scheme, split, repetition).
//! The two wall-clock timing fields are diagnostics and vary between runs.
//! Repetitions are independent and evaluated in parallel; records are
//! returned in repetition order regardless of completion order, and every
//! aggregation is a single-threaded reduction over that deterministic
//! ordering.

use crate::forecasters::{fit, MethodConfig};
use crate::metrics::{cme, smape, valid_time, AlignedPair, MetricConfig, MetricError};
use crate::numkit::rk4_integrate;
use crate::seeding;
use crate::series::{Prediction, State};
use crate::systems::{
    sample_initial_condition, GeneratedInstance, LorenzParams, SystemError, VectorField,
};
use rand_distr::{Distribution, UnitSphere};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::Instant;
use thiserror::Error;

/// Solver step shared with dataset generation.
const PERTURB_SOLVER_STEP: f64 = 1e-3;
/// Forecast window of the perturbation study.
const PERTURB_HORIZON: f64 = 10.0;
/// Scoring stride of the perturbation study (solver samples in between are
/// discarded).
const PERTURB_SCORE_DT: f64 = 1e-2;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("a paired test needs at least two repetitions, got {0}")]
    TooFewRepetitions(usize),
    #[error("methods cover different repetition sets: {0}")]
    MismatchedRepetitions(String),
    #[error("records must come from one (system, scheme, split) group; found {0}")]
    MixedGroups(String),
    #[error("invalid study setup: {0}")]
    InvalidStudy(String),
}

/// Which half of the benchmark a record belongs to: hyperparameters are
/// chosen on validation repetitions, reported scores come from test
/// repetitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Validation,
    Test,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }

    pub fn from_name(name: &str) -> Option<Split> {
        match name {
            "validation" => Some(Split::Validation),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One method scored on one repetition.
///
/// `cme` is in `[0, 1]`, `smape` in `[0, 200]` when defined, and
/// `valid_time` in `[0, horizon]`. A failed fit or prediction yields a
/// record with `failed = true`, the worst error `cme = 1`, no `smape`, and
/// `valid_time = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub method: String,
    pub system: String,
    pub scheme: String,
    pub split: Split,
    /// Repetition index within the split.
    pub rep: usize,
    pub cme: f64,
    pub smape: Option<f64>,
    pub valid_time: f64,
    /// Wall-clock diagnostics; everything else is reproducible bit for bit.
    pub fit_seconds: f64,
    pub predict_seconds: f64,
    pub failed: bool,
}

/// Labels and seeds shared by every repetition of one evaluation call.
#[derive(Debug, Clone)]
pub struct EvalContext<'a> {
    pub master_seed: u64,
    pub system: &'a str,
    pub scheme: &'a str,
    pub split: Split,
    pub metric: MetricConfig,
}

/// Score the three metrics of one prediction against an instance's truth.
/// `smape` is absent when no entry is present (or on a 0/0 ratio);
/// `valid_time` falls back to 0 if the truth has no spread to normalize by.
fn scored_fields(
    instance: &GeneratedInstance,
    prediction: &Prediction,
    metric: &MetricConfig,
) -> Result<(f64, Option<f64>, f64), MetricError> {
    let pair = AlignedPair::from_series(
        instance.origin_time,
        instance.horizon,
        &instance.truth_test,
        prediction,
    )?;
    let cme = cme(&pair);
    debug_assert!((0.0..=1.0).contains(&cme));
    let smape = smape(&pair).ok();
    let valid = valid_time(&pair, metric).unwrap_or(0.0);
    Ok((cme, smape, valid))
}

/// Fit `config` on each repetition's training series, predict the test
/// window from the exact origin state, and score against the noise-free
/// truth. One record per repetition, in repetition order; failures yield
/// worst-score records rather than dropping the repetition.
pub fn evaluate(
    config: &MethodConfig,
    instances: &[GeneratedInstance],
    ctx: &EvalContext,
) -> Vec<ScoreRecord> {
    let role = format!(
        "fit/{}/{}/{}/{}",
        config.method, ctx.system, ctx.scheme, ctx.split
    );
    instances
        .par_iter()
        .enumerate()
        .map(|(rep, instance)| {
            let mut record = ScoreRecord {
                method: config.method.clone(),
                system: ctx.system.to_string(),
                scheme: ctx.scheme.to_string(),
                split: ctx.split,
                rep,
                cme: 1.0,
                smape: None,
                valid_time: 0.0,
                fit_seconds: 0.0,
                predict_seconds: 0.0,
                failed: true,
            };

            let mut rng = seeding::rng(ctx.master_seed, &role, &[rep as u64]);
            let fit_start = Instant::now();
            let fitted = fit(config, &instance.train, &mut rng);
            record.fit_seconds = fit_start.elapsed().as_secs_f64();
            let Ok(fitted) = fitted else {
                return record;
            };

            let problem = crate::forecasters::ForecastProblem::new(
                instance.train.clone(),
                instance.origin_state.clone(),
                instance.origin_time,
                instance.truth_test.times().to_vec(),
            );
            let predict_start = Instant::now();
            let prediction = problem.and_then(|p| fitted.predict(&p));
            record.predict_seconds = predict_start.elapsed().as_secs_f64();
            let Ok(prediction) = prediction else {
                return record;
            };

            match scored_fields(instance, &prediction, &ctx.metric) {
                Ok((cme, smape, valid_time)) => {
                    record.cme = cme;
                    record.smape = smape;
                    record.valid_time = valid_time;
                    record.failed = false;
                }
                Err(_) => {
                    // alignment failure: keep the worst-score record
                }
            }
            record
        })
        .collect()
}

/// Mean score, rank, and confidence half-width of one method within one
/// (system, scheme, split) group.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub system: String,
    pub scheme: String,
    pub split: Split,
    pub method: String,
    pub reps: usize,
    pub failures: usize,
    pub mean_cme: f64,
    /// Half-width of the 95% Student-t interval over repetitions; absent
    /// with a single repetition.
    pub ci_half_width: Option<f64>,
    /// 1-based rank by mean score within the group, ties broken by method
    /// name.
    pub rank: usize,
}

fn t_quantile_975(dof: f64) -> f64 {
    StudentsT::new(0.0, 1.0, dof)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975)
}

fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Group records by (system, scheme, split), average each method's score
/// over repetitions, attach the 95% Student-t half-width, and rank methods
/// within each group (ascending mean, ties by name). Ranks in each group
/// are a permutation of `1..=#methods`.
pub fn aggregate(records: &[ScoreRecord]) -> Vec<MethodSummary> {
    let mut groups: BTreeMap<(String, String, Split), BTreeMap<String, Vec<&ScoreRecord>>> =
        BTreeMap::new();
    for record in records {
        groups
            .entry((
                record.system.clone(),
                record.scheme.clone(),
                record.split,
            ))
            .or_default()
            .entry(record.method.clone())
            .or_default()
            .push(record);
    }

    let mut out = Vec::new();
    for ((system, scheme, split), methods) in groups {
        let mut summaries: Vec<MethodSummary> = methods
            .into_iter()
            .map(|(method, records)| {
                let scores: Vec<f64> = records.iter().map(|r| r.cme).collect();
                let (mean, sd) = mean_and_sd(&scores);
                let ci_half_width = (scores.len() > 1)
                    .then(|| t_quantile_975((scores.len() - 1) as f64) * sd / (scores.len() as f64).sqrt());
                MethodSummary {
                    system: system.clone(),
                    scheme: scheme.clone(),
                    split,
                    method,
                    reps: records.len(),
                    failures: records.iter().filter(|r| r.failed).count(),
                    mean_cme: mean,
                    ci_half_width,
                    rank: 0,
                }
            })
            .collect();
        summaries.sort_by(|a, b| {
            a.mean_cme
                .total_cmp(&b.mean_cme)
                .then_with(|| a.method.cmp(&b.method))
        });
        for (i, summary) in summaries.iter_mut().enumerate() {
            summary.rank = i + 1;
        }
        out.extend(summaries);
    }
    out
}

/// A one-sided paired comparison. Small `p` means the first method scored
/// significantly lower (better) than the second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub mean_diff: f64,
    pub t: f64,
    /// Lower-tail p-value of the t statistic.
    pub p: f64,
    /// Zero-variance differences: `p` degenerates to 1 (mean >= 0) or to
    /// the smallest positive float (mean < 0).
    pub degenerate: bool,
}

/// One-sample t-test of the paired differences against zero, lower tail.
pub fn paired_t_test(diffs: &[f64]) -> Result<TTest, BenchError> {
    if diffs.len() < 2 {
        return Err(BenchError::TooFewRepetitions(diffs.len()));
    }
    let n = diffs.len() as f64;
    let (mean, sd) = mean_and_sd(diffs);
    if sd == 0.0 {
        return Ok(TTest {
            mean_diff: mean,
            t: if mean == 0.0 {
                0.0
            } else {
                mean.signum() * f64::INFINITY
            },
            p: if mean >= 0.0 { 1.0 } else { f64::MIN_POSITIVE },
            degenerate: true,
        });
    }
    let t = mean / (sd / n.sqrt());
    let p = StudentsT::new(0.0, 1.0, n - 1.0)
        .expect("n >= 2 gives positive degrees of freedom")
        .cdf(t);
    Ok(TTest {
        mean_diff: mean,
        t,
        p,
        degenerate: false,
    })
}

/// All pairwise one-sided comparisons within one (system, scheme, split)
/// group of records. `p[(a, b)]` is small when `a` beats `b`; the diagonal
/// is absent.
#[derive(Debug, Clone, PartialEq)]
pub struct TTestMatrix {
    pub methods: Vec<String>,
    pub p: BTreeMap<(String, String), f64>,
}

pub fn t_test_matrix(records: &[ScoreRecord]) -> Result<TTestMatrix, BenchError> {
    let groups: BTreeSet<(String, String, Split)> = records
        .iter()
        .map(|r| (r.system.clone(), r.scheme.clone(), r.split))
        .collect();
    if groups.len() > 1 {
        return Err(BenchError::MixedGroups(format!("{groups:?}")));
    }

    let mut by_method: BTreeMap<&str, BTreeMap<usize, f64>> = BTreeMap::new();
    for record in records {
        by_method
            .entry(&record.method)
            .or_default()
            .insert(record.rep, record.cme);
    }
    let reps: Vec<BTreeSet<usize>> = by_method
        .values()
        .map(|scores| scores.keys().copied().collect())
        .collect();
    if let Some(other) = reps.iter().find(|r| **r != reps[0]) {
        return Err(BenchError::MismatchedRepetitions(format!(
            "{:?} vs {:?}",
            reps[0], other
        )));
    }

    let methods: Vec<String> = by_method.keys().map(|m| m.to_string()).collect();
    let mut p = BTreeMap::new();
    for (a, scores_a) in &by_method {
        for (b, scores_b) in &by_method {
            if a == b {
                continue;
            }
            let diffs: Vec<f64> = scores_a
                .iter()
                .map(|(rep, cme_a)| cme_a - scores_b[rep])
                .collect();
            p.insert((a.to_string(), b.to_string()), paired_t_test(&diffs)?.p);
        }
    }
    Ok(TTestMatrix { methods, p })
}

/// What the perturbation study perturbs: the initial condition of the
/// standard convection system, or its three parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationTarget {
    InitialCondition,
    Parameters,
}

impl PerturbationTarget {
    fn tag(&self) -> &'static str {
        match self {
            PerturbationTarget::InitialCondition => "perturb/state",
            PerturbationTarget::Parameters => "perturb/params",
        }
    }
}

/// Median forecast error over repetitions at one perturbation radius.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationRow {
    pub radius: f64,
    pub median_cme: f64,
    pub reps: usize,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Integrate the standard-system window `(0, PERTURB_HORIZON]` and keep
/// every `PERTURB_SCORE_DT` sample; `None` when the trajectory diverges.
fn perturbed_window(field: &VectorField, u0: &State) -> Option<(Vec<f64>, Vec<State>)> {
    let f = {
        let field = field.clone();
        move |u: &State| {
            field
                .eval(u)
                .unwrap_or_else(|_| State::from_element(3, f64::NAN))
        }
    };
    let steps = (PERTURB_HORIZON / PERTURB_SOLVER_STEP).round() as usize;
    let series = rk4_integrate(&f, u0, 0.0, PERTURB_SOLVER_STEP, steps).ok()?;
    let keep_every = (PERTURB_SCORE_DT / PERTURB_SOLVER_STEP).round() as usize;
    let mut times = Vec::with_capacity(steps / keep_every);
    let mut states = Vec::with_capacity(steps / keep_every);
    for i in (keep_every..=steps).step_by(keep_every) {
        times.push(series.time(i));
        states.push(series.state(i).clone());
    }
    Some((times, states))
}

/// How fast forecasts can degrade at all: perturb the initial state or the
/// system parameters by a uniformly random point on the sphere of each
/// radius, integrate the perturbed and unperturbed systems side by side,
/// and report the median forecast error per radius.
///
/// Each repetition draws one base point on the attractor and one direction,
/// shared across all radii, so the per-repetition error curves (and in turn
/// the medians) are comparable across radii. A diverging perturbed
/// trajectory scores the worst error 1.
pub fn perturbation_study(
    target: PerturbationTarget,
    radii: &[f64],
    reps: usize,
    master_seed: u64,
) -> Result<Vec<PerturbationRow>, BenchError> {
    if reps == 0 {
        return Err(BenchError::InvalidStudy("need at least one repetition".into()));
    }
    if radii.is_empty() {
        return Err(BenchError::InvalidStudy("need at least one radius".into()));
    }
    if let Some(bad) = radii.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
        return Err(BenchError::InvalidStudy(format!(
            "radii must be finite and nonnegative, got {bad}"
        )));
    }

    let per_rep: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|rep| -> Result<Vec<f64>, BenchError> {
            let mut rng = seeding::rng(master_seed, target.tag(), &[rep as u64]);
            let u0 = sample_initial_condition(&mut rng)?;
            let direction: [f64; 3] = UnitSphere.sample(&mut rng);

            let reference = perturbed_window(&VectorField::Standard, &u0)
                .expect("the standard system stays on its attractor");
            let (times, truth) = reference;

            let scores = radii
                .iter()
                .map(|&radius| {
                    let offset = State::from_column_slice(&direction) * radius;
                    let window = match target {
                        PerturbationTarget::InitialCondition => {
                            perturbed_window(&VectorField::Standard, &(&u0 + offset))
                        }
                        PerturbationTarget::Parameters => {
                            let p = LorenzParams::standard();
                            let perturbed = LorenzParams {
                                sigma: p.sigma + offset[0],
                                rho: p.rho + offset[1],
                                beta: p.beta + offset[2],
                            };
                            perturbed_window(&VectorField::Random(perturbed), &u0)
                        }
                    };
                    let Some((_, states)) = window else {
                        return Ok(1.0);
                    };
                    let pair = AlignedPair::new(
                        0.0,
                        PERTURB_HORIZON,
                        times.clone(),
                        truth.clone(),
                        states.into_iter().map(Some).collect(),
                    )?;
                    Ok(cme(&pair))
                })
                .collect::<Result<Vec<f64>, MetricError>>()?;
            Ok(scores)
        })
        .collect::<Result<_, _>>()?;

    Ok(radii
        .iter()
        .enumerate()
        .map(|(j, &radius)| {
            let mut scores: Vec<f64> = per_rep.iter().map(|row| row[j]).collect();
            PerturbationRow {
                radius,
                median_cme: median(&mut scores),
                reps,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::TimeSeries;
    use crate::systems::{generate_repetition, GenerationConfig, ObservationScheme, SystemKind};
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    fn s(vals: &[f64]) -> State {
        DVector::from_row_slice(vals)
    }

    /// A smooth three-dimensional instance that needs no integrator.
    fn analytic_instance() -> GeneratedInstance {
        let state_at = |t: f64| {
            s(&[
                (0.9 * t).sin() + 0.2 * (2.3 * t).cos(),
                0.5 * (1.7 * t).cos(),
                0.3 * (0.4 * t).sin() - 0.1 * (1.1 * t).cos(),
            ])
        };
        let dt = 0.05;
        let train_times: Vec<f64> = (1..=120).map(|i| i as f64 * dt).collect();
        let origin_time = 120.0 * dt;
        let truth_times: Vec<f64> = (1..=40).map(|i| origin_time + i as f64 * dt).collect();
        GeneratedInstance {
            train: TimeSeries::new(
                train_times.clone(),
                train_times.iter().map(|&t| state_at(t)).collect(),
            )
            .unwrap(),
            truth_test: TimeSeries::new(
                truth_times.clone(),
                truth_times.iter().map(|&t| state_at(t)).collect(),
            )
            .unwrap(),
            origin_state: state_at(origin_time),
            origin_time,
            horizon: 40.0 * dt,
            seed: 0,
        }
    }

    fn ctx(split: Split) -> EvalContext<'static> {
        EvalContext {
            master_seed: 17,
            system: "lorenz63std",
            scheme: "const-noisefree",
            split,
            metric: MetricConfig::default(),
        }
    }

    fn records_from(scores: &[(&str, usize, f64)]) -> Vec<ScoreRecord> {
        scores
            .iter()
            .map(|&(method, rep, cme)| ScoreRecord {
                method: method.to_string(),
                system: "sys".into(),
                scheme: "sch".into(),
                split: Split::Test,
                rep,
                cme,
                smape: Some(10.0),
                valid_time: 1.0,
                fit_seconds: 0.0,
                predict_seconds: 0.0,
                failed: false,
            })
            .collect()
    }

    #[test]
    fn truth_replay_scores_zero_error() {
        let instance = analytic_instance();
        let prediction = Prediction {
            times: instance.truth_test.times().to_vec(),
            states: instance
                .truth_test
                .states()
                .iter()
                .map(|u| Some(u.clone()))
                .collect(),
        };
        let (cme, smape, valid) =
            scored_fields(&instance, &prediction, &MetricConfig::default()).unwrap();
        assert_eq!(cme, 0.0);
        assert_eq!(smape, Some(0.0));
        assert_eq!(valid, instance.horizon);
    }

    #[test]
    fn evaluate_yields_one_record_per_repetition_in_order() {
        let instances = vec![analytic_instance(), analytic_instance()];
        let config = MethodConfig::new("ConstL");
        let records = evaluate(&config, &instances, &ctx(Split::Test));
        assert_eq!(records.len(), 2);
        for (rep, record) in records.iter().enumerate() {
            assert_eq!(record.rep, rep);
            assert_eq!(record.method, "ConstL");
            assert_eq!(record.split, Split::Test);
            assert!(!record.failed);
            assert!((0.0..=1.0).contains(&record.cme));
            assert!((0.0..=instances[rep].horizon).contains(&record.valid_time));
            let smape = record.smape.expect("present predictions have a smape");
            assert!((0.0..=200.0).contains(&smape));
        }
    }

    #[test]
    fn evaluate_is_reproducible_apart_from_timings() {
        let instances = vec![analytic_instance()];
        // seeded feature draws make this the strictest determinism case
        let config = MethodConfig::new("RaFeD")
            .with("c", 0.1)
            .with("lambda", 1e-6)
            .with("psi", 0.0)
            .with("r", 2.0);
        let pass1 = evaluate(&config, &instances, &ctx(Split::Validation));
        let pass2 = evaluate(&config, &instances, &ctx(Split::Validation));
        for (a, b) in pass1.iter().zip(&pass2) {
            assert_eq!(a.cme.to_bits(), b.cme.to_bits());
            assert_eq!(a.smape.map(f64::to_bits), b.smape.map(f64::to_bits));
            assert_eq!(a.valid_time.to_bits(), b.valid_time.to_bits());
            assert_eq!(a.failed, b.failed);
        }
        // a different split draws a different fitting stream
        let other = evaluate(&config, &instances, &ctx(Split::Test));
        assert_ne!(pass1[0].cme.to_bits(), other[0].cme.to_bits());
    }

    #[test]
    fn failing_configurations_score_worst_and_are_flagged() {
        let instances = vec![analytic_instance()];
        // an unknown parameter makes every fit fail
        let config = MethodConfig::new("ConstM").with("bogus", 1.0);
        let records = evaluate(&config, &instances, &ctx(Split::Test));
        assert_eq!(records.len(), 1);
        assert!(records[0].failed);
        assert_eq!(records[0].cme, 1.0);
        assert_eq!(records[0].smape, None);
        assert_eq!(records[0].valid_time, 0.0);
    }

    #[test]
    fn climatology_saturates_the_error_on_a_real_instance() {
        let scheme = ObservationScheme::from_name("const-noisefree").unwrap();
        let instance = generate_repetition(
            SystemKind::Standard,
            &scheme,
            &GenerationConfig::default(),
            424242,
        )
        .unwrap();
        let records = evaluate(&MethodConfig::new("ConstM"), &[instance], &ctx(Split::Test));
        assert!(
            (0.9..=1.0).contains(&records[0].cme),
            "climatology must approach the worst error, got {}",
            records[0].cme
        );
    }

    #[test]
    fn aggregate_computes_the_t_interval_half_width() {
        let records = records_from(&[("A", 0, 0.1), ("A", 1, 0.2), ("A", 2, 0.3)]);
        let summary = &aggregate(&records)[0];
        assert_relative_eq!(summary.mean_cme, 0.2, epsilon = 1e-12);
        // t(0.975, dof 2) = 4.3027, times sd 0.1 over sqrt(3)
        let hw = summary.ci_half_width.unwrap();
        assert!((hw - 0.2484).abs() < 5e-5, "got {hw}");
        assert_eq!(summary.reps, 3);
    }

    #[test]
    fn aggregate_handles_degenerate_spreads() {
        let single = aggregate(&records_from(&[("A", 0, 0.4)]));
        assert_eq!(single[0].ci_half_width, None);
        let constant = aggregate(&records_from(&[("A", 0, 0.4), ("A", 1, 0.4)]));
        assert_eq!(constant[0].ci_half_width, Some(0.0));
    }

    #[test]
    fn ranks_are_a_permutation_with_name_tiebreak() {
        let records = records_from(&[
            ("Slow", 0, 0.9),
            ("Quick", 0, 0.1),
            ("Tied2", 0, 0.5),
            ("Tied1", 0, 0.5),
        ]);
        let summaries = aggregate(&records);
        let order: Vec<(&str, usize)> = summaries
            .iter()
            .map(|s| (s.method.as_str(), s.rank))
            .collect();
        assert_eq!(
            order,
            [("Quick", 1), ("Tied1", 2), ("Tied2", 3), ("Slow", 4)]
        );
    }

    #[test]
    fn aggregate_groups_by_system_scheme_and_split() {
        let mut records = records_from(&[("A", 0, 0.2), ("B", 0, 0.4)]);
        let mut other = records_from(&[("A", 0, 0.8), ("B", 0, 0.1)]);
        for r in &mut other {
            r.scheme = "other".into();
        }
        records.append(&mut other);
        let summaries = aggregate(&records);
        assert_eq!(summaries.len(), 4);
        let rank_of = |scheme: &str, method: &str| {
            summaries
                .iter()
                .find(|s| s.scheme == scheme && s.method == method)
                .unwrap()
                .rank
        };
        assert_eq!(rank_of("sch", "A"), 1);
        assert_eq!(rank_of("sch", "B"), 2);
        assert_eq!(rank_of("other", "B"), 1);
        assert_eq!(rank_of("other", "A"), 2);
    }

    #[test]
    fn paired_test_flags_zero_variance_differences() {
        let test = paired_t_test(&[0.0, 0.0, 0.0]).unwrap();
        assert!(test.degenerate);
        assert_eq!(test.p, 1.0);
        let worse = paired_t_test(&[0.2, 0.2]).unwrap();
        assert!(worse.degenerate);
        assert_eq!(worse.p, 1.0);
        let better = paired_t_test(&[-0.2, -0.2]).unwrap();
        assert!(better.degenerate);
        assert_eq!(better.p, f64::MIN_POSITIVE);
        assert!(matches!(
            paired_t_test(&[0.1]),
            Err(BenchError::TooFewRepetitions(1))
        ));
    }

    #[test]
    fn paired_test_detects_a_clear_improvement() {
        // diffs around -1 with sd 0.1: overwhelming evidence
        let mut rng = seeding::rng(7, "ttest", &[0]);
        let normal = rand_distr::Normal::new(-1.0, 0.1).unwrap();
        let diffs: Vec<f64> = (0..100).map(|_| normal.sample(&mut rng)).collect();
        let test = paired_t_test(&diffs).unwrap();
        assert!(!test.degenerate);
        assert!(test.p < 1e-6, "p = {}", test.p);

        // flipping the sign mirrors the p-value
        let flipped: Vec<f64> = diffs.iter().map(|d| -d).collect();
        let mirror = paired_t_test(&flipped).unwrap();
        assert_relative_eq!(mirror.p, 1.0 - test.p, epsilon = 1e-12);
    }

    #[test]
    fn t_test_matrix_pairs_by_repetition() {
        let records = records_from(&[
            ("A", 0, 0.10),
            ("A", 1, 0.12),
            ("A", 2, 0.11),
            ("B", 0, 0.30),
            ("B", 1, 0.33),
            ("B", 2, 0.29),
        ]);
        let matrix = t_test_matrix(&records).unwrap();
        assert_eq!(matrix.methods, ["A", "B"]);
        assert_eq!(matrix.p.len(), 2, "both directions, no diagonal");
        let p_ab = matrix.p[&("A".to_string(), "B".to_string())];
        let p_ba = matrix.p[&("B".to_string(), "A".to_string())];
        assert!(p_ab < 0.05, "A clearly beats B, got {p_ab}");
        assert!(p_ba > 0.95);
        assert!((0.0..1.0).contains(&p_ab) && p_ba < 1.0, "strictly inside (0,1)");

        let missing = records_from(&[("A", 0, 0.1), ("A", 1, 0.2), ("B", 0, 0.3)]);
        assert!(matches!(
            t_test_matrix(&missing),
            Err(BenchError::MismatchedRepetitions(_))
        ));

        let mut mixed = records_from(&[("A", 0, 0.1)]);
        mixed.push(ScoreRecord {
            scheme: "other".into(),
            ..mixed[0].clone()
        });
        assert!(matches!(t_test_matrix(&mixed), Err(BenchError::MixedGroups(_))));
    }

    #[test]
    fn perturbation_grows_from_zero_to_saturation() {
        let radii = [0.0, 1e-8, 1e-6, 1e-4, 1e-2, 1e2];
        let rows = perturbation_study(PerturbationTarget::InitialCondition, &radii, 100, 3)
            .unwrap();
        assert_eq!(rows.len(), radii.len());
        assert_eq!(
            rows[0].median_cme, 0.0,
            "an unperturbed twin reproduces the truth exactly"
        );
        for pair in rows.windows(2) {
            assert!(
                pair[0].median_cme <= pair[1].median_cme,
                "median error must not shrink when the radius grows: {pair:?}"
            );
        }
        assert!(
            rows.last().unwrap().median_cme > 0.9,
            "a huge kick decorrelates the trajectories: {rows:?}"
        );
    }

    #[test]
    fn parameter_perturbation_behaves_like_state_perturbation() {
        let rows =
            perturbation_study(PerturbationTarget::Parameters, &[0.0, 1e-4, 1e2], 50, 5).unwrap();
        assert_eq!(rows[0].median_cme, 0.0);
        assert!(rows[1].median_cme > 0.0);
        assert!(rows[1].median_cme < 0.5, "tiny parameter shifts stay close");
        assert!(rows[2].median_cme > 0.9, "{rows:?}");
    }

    #[test]
    fn study_rejects_bad_setups() {
        assert!(matches!(
            perturbation_study(PerturbationTarget::InitialCondition, &[], 10, 0),
            Err(BenchError::InvalidStudy(_))
        ));
        assert!(matches!(
            perturbation_study(PerturbationTarget::InitialCondition, &[1.0], 0, 0),
            Err(BenchError::InvalidStudy(_))
        ));
        assert!(matches!(
            perturbation_study(PerturbationTarget::InitialCondition, &[-1.0], 10, 0),
            Err(BenchError::InvalidStudy(_))
        ));
    }
}
