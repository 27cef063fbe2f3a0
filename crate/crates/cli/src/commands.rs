//! Subcommand implementations: thin, single-threaded orchestration over the
//! core library. All parallelism lives inside the library's evaluation
//! loops; `--jobs` merely caps that worker pool.

use crate::args::{
    Cli, Command, GenerateArgs, GlobalArgs, MetricsArgs, PerturbArgs, PerturbTarget, RunArgs,
    TuneArgs,
};
use crate::files::{self, format_fixed8};
use crate::manifest::RunManifest;
use anyhow::{bail, Context, Result};
use chaoscast_core::bench::{
    self, BenchError, EvalContext, PerturbationTarget, ScoreRecord, Split, TTestMatrix,
};
use chaoscast_core::forecasters::{MethodConfig, MethodName};
use chaoscast_core::metrics::{self, AlignedPair, MetricConfig};
use chaoscast_core::seeding;
use chaoscast_core::systems::{
    generate_repetition, GeneratedInstance, GenerationConfig, ObservationScheme,
};
use chaoscast_core::tuner::{default_grid, local_grid_search, EvalError};
use std::collections::BTreeMap;

/// Entry point behind `main`: resolve the manifest, size the worker pool,
/// dispatch.
pub fn run(cli: Cli) -> Result<()> {
    let manifest = effective_manifest(&cli.global)?;
    if let Some(jobs) = manifest.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("sizing the worker pool")?;
    }
    match cli.command {
        Command::Generate(args) => cmd_generate(&manifest, &args),
        Command::Tune(args) => cmd_tune(&manifest, &args),
        Command::Run(args) => cmd_run(&manifest, &args),
        Command::Report => cmd_report(&manifest),
        Command::Perturb(args) => cmd_perturb(&manifest, &args),
        Command::Metrics(args) => cmd_metrics(&args),
    }
}

/// Manifest file merged with the global flag overrides
/// (flag > environment > manifest > default).
pub fn effective_manifest(global: &GlobalArgs) -> Result<RunManifest> {
    let mut manifest = match &global.manifest {
        Some(path) => RunManifest::load(path)?,
        None => RunManifest::default(),
    };
    if let Some(seed) = global.seed {
        manifest.master_seed = seed;
    }
    if let Some(root) = &global.data_root {
        manifest.data_root = root.clone();
    }
    if let Some(jobs) = global.jobs {
        manifest.jobs = Some(jobs as usize);
    }
    Ok(manifest)
}

fn scheme_name(scheme: &ObservationScheme) -> &'static str {
    scheme.name().expect("resolved schemes are named")
}

fn generation_seed(manifest: &RunManifest, system: &str, scheme: &str, split: Split, rep: usize) -> u64 {
    let role = format!("generate/{system}/{scheme}/{split}");
    seeding::derive(manifest.master_seed, &role, &[rep as u64])
}

// ---------------------------------------------------------------------------
// generate

pub fn cmd_generate(manifest: &RunManifest, args: &GenerateArgs) -> Result<()> {
    let mut manifest = manifest.clone();
    if let Some(n) = args.validation_reps {
        manifest.validation_reps = n as usize;
    }
    if let Some(n) = args.test_reps {
        manifest.test_reps = n as usize;
    }
    let systems = manifest.resolved_systems(&args.systems)?;
    let schemes = manifest.resolved_schemes(&args.schemes)?;
    if systems.is_empty() || schemes.is_empty() {
        bail!("nothing to generate: no systems or no schemes selected");
    }
    let splits = [
        (Split::Validation, manifest.validation_reps),
        (Split::Test, manifest.test_reps),
    ];

    // Refuse up front if any target already holds data, so a run without
    // --force never leaves a half-written tree.
    if !args.force {
        for kind in &systems {
            for scheme in &schemes {
                for (split, reps) in splits {
                    for rep in 0..reps {
                        let dir = files::rep_dir(
                            &manifest.data_root,
                            kind.name(),
                            scheme_name(scheme),
                            split,
                            rep,
                        );
                        let occupied = dir
                            .read_dir()
                            .map(|mut entries| entries.next().is_some())
                            .unwrap_or(false);
                        if occupied {
                            bail!(
                                "{} already holds data; pass --force to overwrite",
                                dir.display()
                            );
                        }
                    }
                }
            }
        }
    }

    let cfg = GenerationConfig::default();
    let mut total = 0;
    for kind in &systems {
        for scheme in &schemes {
            let scheme_name = scheme_name(scheme);
            for (split, reps) in splits {
                for rep in 0..reps {
                    let seed = generation_seed(&manifest, kind.name(), scheme_name, split, rep);
                    let instance = generate_repetition(*kind, scheme, &cfg, seed)
                        .with_context(|| {
                            format!("generating {}/{scheme_name} {split} rep {rep}", kind.name())
                        })?;
                    let meta = files::InstanceMeta::describe(
                        &instance,
                        kind.name(),
                        scheme_name,
                        split,
                        rep,
                    );
                    let dir =
                        files::rep_dir(&manifest.data_root, kind.name(), scheme_name, split, rep);
                    files::write_instance(&dir, &instance, &meta)?;
                    total += 1;
                }
            }
            println!(
                "{}/{}: wrote {} validation + {} test repetitions",
                kind.name(),
                scheme_name,
                manifest.validation_reps,
                manifest.test_reps
            );
        }
    }
    println!(
        "generated {total} repetitions under {}",
        manifest.data_root.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// tune

fn load_split(
    manifest: &RunManifest,
    system: &str,
    scheme: &str,
    split: Split,
    reps: usize,
) -> Result<Vec<GeneratedInstance>> {
    (0..reps)
        .map(|rep| {
            let dir = files::rep_dir(&manifest.data_root, system, scheme, split, rep);
            files::read_instance(&dir).with_context(|| {
                format!(
                    "loading {} (is the data tree complete? run `chaoscast generate`)",
                    dir.display()
                )
            })
        })
        .collect()
}

fn mean_cme(records: &[ScoreRecord]) -> f64 {
    records.iter().map(|r| r.cme).sum::<f64>() / records.len() as f64
}

pub fn cmd_tune(manifest: &RunManifest, args: &TuneArgs) -> Result<()> {
    let methods = manifest.resolved_methods(&args.methods)?;
    let systems = manifest.resolved_systems(&args.systems)?;
    let schemes = manifest.resolved_schemes(&args.schemes)?;
    if methods.is_empty() || systems.is_empty() || schemes.is_empty() {
        bail!("nothing to tune: no methods, systems, or schemes selected");
    }

    for kind in &systems {
        for scheme in &schemes {
            let scheme_name = scheme_name(scheme);
            // loaded lazily: tuning-free methods need no data at all
            let mut instances: Option<Vec<GeneratedInstance>> = None;
            for method in &methods {
                let config_path = files::tuned_config_path(
                    &manifest.data_root,
                    kind.name(),
                    scheme_name,
                    method.as_str(),
                );
                let trace_path = files::tuned_trace_path(
                    &manifest.data_root,
                    kind.name(),
                    scheme_name,
                    method.as_str(),
                );
                std::fs::create_dir_all(config_path.parent().expect("tuned paths have parents"))?;

                if method.is_tuning_free() {
                    files::write_method_config(&config_path, &MethodConfig::new(method.as_str()))?;
                    files::write_trace(&trace_path, &[])?;
                    println!(
                        "{} {}/{}: tuning-free, wrote the passthrough configuration (0 evaluations)",
                        method.as_str(),
                        kind.name(),
                        scheme_name
                    );
                    continue;
                }

                if instances.is_none() {
                    instances = Some(load_split(
                        manifest,
                        kind.name(),
                        scheme_name,
                        Split::Validation,
                        manifest.validation_reps,
                    )?);
                }
                let instances = instances.as_ref().expect("just loaded");
                let ctx = EvalContext {
                    master_seed: manifest.master_seed,
                    system: kind.name(),
                    scheme: scheme_name,
                    split: Split::Validation,
                    metric: MetricConfig::default(),
                };
                let domains = default_grid(*method);
                let outcome = local_grid_search(
                    method.as_str(),
                    &domains,
                    args.max_evals,
                    |config| -> Result<f64, EvalError> {
                        Ok(mean_cme(&bench::evaluate(config, instances, &ctx)))
                    },
                )
                .with_context(|| format!("tuning {}", method.as_str()))?;
                files::write_method_config(&config_path, &outcome.best)?;
                files::write_trace(&trace_path, &outcome.trace)?;
                let rounds = outcome.trace.last().map_or(0, |r| r.step + 1);
                println!(
                    "{} {}/{}: best mean CME {} after {} evaluations ({} rounds)",
                    method.as_str(),
                    kind.name(),
                    scheme_name,
                    format_fixed8(outcome.best_score),
                    outcome.trace.len(),
                    rounds
                );
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// run

fn tuned_or_passthrough(
    manifest: &RunManifest,
    system: &str,
    scheme: &str,
    method: MethodName,
) -> Result<MethodConfig> {
    let path = files::tuned_config_path(&manifest.data_root, system, scheme, method.as_str());
    if path.exists() {
        let config = files::read_method_config(&path)?;
        if config.method != method.as_str() {
            bail!(
                "{} holds a configuration for {:?}, not {}",
                path.display(),
                config.method,
                method.as_str()
            );
        }
        return Ok(config);
    }
    if method.is_tuning_free() {
        return Ok(MethodConfig::new(method.as_str()));
    }
    bail!(
        "no tuned configuration at {}; run `chaoscast tune --method {}` first",
        path.display(),
        method.as_str()
    );
}

pub fn cmd_run(manifest: &RunManifest, args: &RunArgs) -> Result<()> {
    let methods = manifest.resolved_methods(&args.methods)?;
    let systems = manifest.resolved_systems(&args.systems)?;
    let schemes = manifest.resolved_schemes(&args.schemes)?;
    if methods.is_empty() || systems.is_empty() || schemes.is_empty() {
        bail!("nothing to run: no methods, systems, or schemes selected");
    }

    let mut all_records = Vec::new();
    for kind in &systems {
        for scheme in &schemes {
            let scheme_name = scheme_name(scheme);
            let instances = load_split(
                manifest,
                kind.name(),
                scheme_name,
                Split::Test,
                manifest.test_reps,
            )?;
            let ctx = EvalContext {
                master_seed: manifest.master_seed,
                system: kind.name(),
                scheme: scheme_name,
                split: Split::Test,
                metric: MetricConfig::default(),
            };
            for method in &methods {
                let config = tuned_or_passthrough(manifest, kind.name(), scheme_name, *method)?;
                let records = bench::evaluate(&config, &instances, &ctx);
                let failures = records.iter().filter(|r| r.failed).count();
                println!(
                    "{} {}/{}: mean CME {} over {} repetitions ({} failures)",
                    method.as_str(),
                    kind.name(),
                    scheme_name,
                    format_fixed8(mean_cme(&records)),
                    records.len(),
                    failures
                );
                all_records.extend(records);
            }
        }
    }

    let path = files::results_csv_path(&manifest.data_root);
    std::fs::create_dir_all(path.parent().expect("the results file has a parent"))?;
    files::write_results_csv(&path, &all_records)?;
    println!("wrote {} ({} records)", path.display(), all_records.len());
    Ok(())
}

// ---------------------------------------------------------------------------
// report

pub fn cmd_report(manifest: &RunManifest) -> Result<()> {
    let results_path = files::results_csv_path(&manifest.data_root);
    let records = files::read_results_csv(&results_path)
        .with_context(|| "no results to report; run `chaoscast run` first")?;
    if records.is_empty() {
        bail!("{} holds no records", results_path.display());
    }

    let summaries = bench::aggregate(&records);
    let test_summaries: Vec<_> = summaries
        .iter()
        .filter(|s| s.split == Split::Test)
        .cloned()
        .collect();

    let dir = files::report_dir(&manifest.data_root);
    std::fs::create_dir_all(&dir)?;
    files::write_aggregate_csv(&dir.join("aggregate.csv"), &summaries)?;
    files::write_ranks_csv(&dir.join("ranks.csv"), &test_summaries)?;
    files::write_plot_csv(&dir.join("plot_mean_cme.csv"), &test_summaries)?;

    // pairwise significance per (system, scheme) over the test split
    let mut groups: BTreeMap<(String, String), Vec<ScoreRecord>> = BTreeMap::new();
    for record in records.iter().filter(|r| r.split == Split::Test) {
        groups
            .entry((record.system.clone(), record.scheme.clone()))
            .or_default()
            .push(record.clone());
    }
    let mut matrices = Vec::new();
    for ((system, scheme), group) in groups {
        let matrix = match bench::t_test_matrix(&group) {
            Ok(matrix) => matrix,
            Err(BenchError::TooFewRepetitions(n)) => {
                eprintln!(
                    "note: skipping t-tests for {system}/{scheme}: {n} repetition(s) is too few"
                );
                let mut methods: Vec<String> =
                    group.iter().map(|r| r.method.clone()).collect();
                methods.sort();
                methods.dedup();
                TTestMatrix {
                    methods,
                    p: BTreeMap::new(),
                }
            }
            Err(err) => {
                return Err(err).with_context(|| format!("t-tests for {system}/{scheme}"))
            }
        };
        matrices.push((system, scheme, matrix));
    }
    files::write_ttests_csv(&dir.join("ttests.csv"), &matrices)?;

    let mut current_group = None;
    for s in &test_summaries {
        let group = (s.system.clone(), s.scheme.clone());
        if current_group.as_ref() != Some(&group) {
            println!("{}/{} ({} repetitions):", s.system, s.scheme, s.reps);
            current_group = Some(group);
        }
        let ci = s
            .ci_half_width
            .map(|hw| format!(" ± {}", format_fixed8(hw)))
            .unwrap_or_default();
        println!(
            "  {:>2}. {:<8} mean CME {}{}",
            s.rank,
            s.method,
            format_fixed8(s.mean_cme),
            ci
        );
    }
    println!(
        "wrote aggregate.csv, ranks.csv, plot_mean_cme.csv, ttests.csv under {}",
        dir.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// perturb

pub fn cmd_perturb(manifest: &RunManifest, args: &PerturbArgs) -> Result<()> {
    let target = match args.target {
        PerturbTarget::State => PerturbationTarget::InitialCondition,
        PerturbTarget::Params => PerturbationTarget::Parameters,
    };
    let rows = bench::perturbation_study(target, &args.radii, args.reps, manifest.master_seed)?;
    let mut table = String::from("radius,median_cme,reps\n");
    for row in &rows {
        table.push_str(&format!(
            "{},{},{}\n",
            format_fixed8(row.radius),
            format_fixed8(row.median_cme),
            row.reps
        ));
    }
    match &args.out {
        Some(path) => {
            std::fs::write(path, &table)
                .with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {} ({} radii)", path.display(), rows.len());
        }
        None => print!("{table}"),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// metrics

pub fn cmd_metrics(args: &MetricsArgs) -> Result<()> {
    let truth = files::read_series_csv(&args.truth)?;
    let prediction = files::read_prediction_csv(&args.prediction)?;
    let (origin_time, horizon) = match (&args.meta, args.origin_time) {
        (Some(meta_path), _) => {
            let meta = files::read_meta(meta_path)?;
            (meta.origin_time, meta.horizon)
        }
        (None, Some(origin_time)) => (
            origin_time,
            args.horizon
                .unwrap_or_else(|| truth.last_time() - origin_time),
        ),
        (None, None) => unreachable!("clap requires --meta or --origin-time"),
    };
    let pair = AlignedPair::from_series(origin_time, horizon, &truth, &prediction)
        .context("aligning the forecast with the truth")?;
    let cme = metrics::cme(&pair);
    let smape = metrics::smape(&pair).ok();
    let valid_time = metrics::valid_time(&pair, &MetricConfig { kappa: args.kappa })
        .context("computing the valid time")?;
    println!("cme,smape,tvalid");
    println!(
        "{},{},{}",
        format_fixed8(cme),
        smape.map(format_fixed8).unwrap_or_default(),
        format_fixed8(valid_time)
    );
    Ok(())
}
