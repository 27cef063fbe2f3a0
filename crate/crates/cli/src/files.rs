//! Bit-exact file formats and the on-disk layout of the data tree.
//!
//! Trajectory CSVs carry the header `time,u1,...,uD` and every numeric field
//! with exactly eight fractional digits (fixed point, '.' separator, UNIX
//! newlines), matching the stored precision of the published datasets.
//! Alongside them, `meta.json` records the generation seed and the
//! full-precision forecast origin.
//!
//! The forecast window (origin time, horizon) and the origin state u_T come
//! from `meta.json`, where they are kept at full precision: under the
//! exponential timestep law the origin is the nominal end of training, not
//! the last observation stamp, so it cannot be derived from the CSVs. The
//! loader clamps the origin up to the last stored train stamp — eight-digit
//! rounding may push that stamp a hair past the recorded origin, and the
//! forecast-problem contract insists on origin ≥ last observation.
//!
//! Layout under the data root:
//! ```text
//! <root>/<system>/<scheme>/<split>/rep<NNNN>/{train.csv,truth.csv,meta.json}
//! <root>/tuned/<system>/<scheme>/<method>.json      (+ <method>.trace.jsonl)
//! <root>/results/results.csv
//! <root>/report/{aggregate,ranks,ttests,plot_mean_cme}.csv
//! ```

use anyhow::{bail, Context, Result};
use chaoscast_core::bench::{MethodSummary, ScoreRecord, Split, TTestMatrix};
use chaoscast_core::forecasters::MethodConfig;
use chaoscast_core::series::{Prediction, State, TimeSeries};
use chaoscast_core::systems::GeneratedInstance;
use chaoscast_core::tuner::TraceRecord;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Header of every per-repetition score table.
pub const RESULTS_HEADER: [&str; 10] = [
    "method", "system", "scheme", "split", "rep", "cme", "smape", "tvalid", "fit_s", "predict_s",
];

// ---------------------------------------------------------------------------
// paths

pub fn rep_dir(root: &Path, system: &str, scheme: &str, split: Split, rep: usize) -> PathBuf {
    root.join(system)
        .join(scheme)
        .join(split.as_str())
        .join(format!("rep{rep:04}"))
}

pub fn tuned_config_path(root: &Path, system: &str, scheme: &str, method: &str) -> PathBuf {
    root.join("tuned")
        .join(system)
        .join(scheme)
        .join(format!("{method}.json"))
}

pub fn tuned_trace_path(root: &Path, system: &str, scheme: &str, method: &str) -> PathBuf {
    root.join("tuned")
        .join(system)
        .join(scheme)
        .join(format!("{method}.trace.jsonl"))
}

pub fn results_csv_path(root: &Path) -> PathBuf {
    root.join("results").join("results.csv")
}

pub fn report_dir(root: &Path) -> PathBuf {
    root.join("report")
}

// ---------------------------------------------------------------------------
// numeric formatting

/// Fixed-point rendering with exactly eight fractional digits. Values that
/// round to zero never keep a minus sign, so reruns cannot disagree on
/// `-0.00000000` vs `0.00000000`.
pub fn format_fixed8(x: f64) -> String {
    let s = format!("{x:.8}");
    if s == "-0.00000000" {
        "0.00000000".to_string()
    } else {
        s
    }
}

fn format_opt_fixed8(x: Option<f64>) -> String {
    x.map(format_fixed8).unwrap_or_default()
}

fn parse_f64(field: &str, what: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .with_context(|| format!("parsing {what} from {field:?}"))
}

// ---------------------------------------------------------------------------
// trajectory CSVs

fn series_header(dim: usize) -> Vec<String> {
    let mut header = vec!["time".to_string()];
    header.extend((1..=dim).map(|i| format!("u{i}")));
    header
}

pub fn write_series_csv(path: &Path, series: &TimeSeries) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    writer.write_record(series_header(series.dim()))?;
    for i in 0..series.len() {
        let mut record = vec![format_fixed8(series.time(i))];
        record.extend(series.state(i).iter().map(|&v| format_fixed8(v)));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads rows of `(time, state)`, handing each present state to `sink`.
/// Returns the column dimension. Missing entries (any empty or non-finite
/// coordinate) are allowed only when `allow_missing` is set.
fn read_trajectory_rows(
    path: &Path,
    allow_missing: bool,
    mut sink: impl FnMut(f64, Option<State>),
) -> Result<usize> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let dim = headers.len().saturating_sub(1);
    if dim == 0 || headers.get(0) != Some("time") {
        bail!(
            "{}: expected a `time,u1,...,uD` header, found {:?}",
            path.display(),
            headers
        );
    }
    for (i, expected) in series_header(dim).iter().enumerate().skip(1) {
        if headers.get(i) != Some(expected.as_str()) {
            bail!(
                "{}: column {i} is named {:?}, expected {expected:?}",
                path.display(),
                headers.get(i)
            );
        }
    }
    for (row, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{} row {row}", path.display()))?;
        if record.len() != dim + 1 {
            bail!(
                "{} row {row}: {} fields, expected {}",
                path.display(),
                record.len(),
                dim + 1
            );
        }
        let time = parse_f64(&record[0], "a timestamp")
            .with_context(|| format!("{} row {row}", path.display()))?;
        let coords: Vec<Option<f64>> = record
            .iter()
            .skip(1)
            .map(|field| field.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect();
        let state = if coords.iter().all(|c| c.is_some()) {
            Some(State::from_iterator(dim, coords.into_iter().flatten()))
        } else if allow_missing {
            None
        } else {
            bail!(
                "{} row {row}: a trajectory file cannot have missing coordinates",
                path.display()
            );
        };
        sink(time, state);
    }
    Ok(dim)
}

pub fn read_series_csv(path: &Path) -> Result<TimeSeries> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    read_trajectory_rows(path, false, |t, u| {
        times.push(t);
        states.push(u.expect("strict rows are always present"));
    })?;
    TimeSeries::new(times, states).with_context(|| format!("validating {}", path.display()))
}

/// Reads an externally produced forecast. A state is either fully present
/// or missing: any empty, unparseable, or non-finite coordinate marks the
/// whole row as a missing forecast (missing entries score the worst error).
pub fn read_prediction_csv(path: &Path) -> Result<Prediction> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    read_trajectory_rows(path, true, |t, u| {
        times.push(t);
        states.push(u);
    })?;
    if times.is_empty() {
        bail!("{}: no forecast rows", path.display());
    }
    Ok(Prediction { times, states })
}

// ---------------------------------------------------------------------------
// per-repetition metadata

/// Sidecar record of how a repetition was generated. `origin_state` (the
/// forecast anchor u_T) and the window fields are stored at full precision;
/// the CSVs next to it hold the eight-digit dataset of record.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceMeta {
    pub seed: u64,
    pub system: String,
    pub scheme: String,
    pub split: String,
    pub rep: usize,
    pub train_points: usize,
    pub test_points: usize,
    pub origin_time: f64,
    pub horizon: f64,
    pub origin_state: Vec<f64>,
}

impl InstanceMeta {
    pub fn describe(
        instance: &GeneratedInstance,
        system: &str,
        scheme: &str,
        split: Split,
        rep: usize,
    ) -> InstanceMeta {
        InstanceMeta {
            seed: instance.seed,
            system: system.to_string(),
            scheme: scheme.to_string(),
            split: split.as_str().to_string(),
            rep,
            train_points: instance.train.len(),
            test_points: instance.truth_test.len(),
            origin_time: instance.origin_time,
            horizon: instance.horizon,
            origin_state: instance.origin_state.iter().copied().collect(),
        }
    }
}

pub fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_meta(path: &Path) -> Result<InstanceMeta> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_instance(dir: &Path, instance: &GeneratedInstance, meta: &InstanceMeta) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_series_csv(&dir.join("train.csv"), &instance.train)?;
    write_series_csv(&dir.join("truth.csv"), &instance.truth_test)?;
    write_json_pretty(&dir.join("meta.json"), meta)
}

/// Loads one repetition back. The metadata supplies the seed, the
/// full-precision origin state, and the forecast window; the origin is
/// clamped up to the last stored train stamp (see the module docs).
pub fn read_instance(dir: &Path) -> Result<GeneratedInstance> {
    let train = read_series_csv(&dir.join("train.csv"))?;
    let truth_test = read_series_csv(&dir.join("truth.csv"))?;
    let meta = read_meta(&dir.join("meta.json"))?;
    if meta.origin_state.len() != train.dim() {
        bail!(
            "{}: origin state has dimension {}, the series {}",
            dir.display(),
            meta.origin_state.len(),
            train.dim()
        );
    }
    if meta.origin_state.iter().any(|v| !v.is_finite()) {
        bail!("{}: origin state is not finite", dir.display());
    }
    if !(meta.origin_time.is_finite() && meta.horizon.is_finite() && meta.horizon > 0.0) {
        bail!("{}: invalid forecast window in meta.json", dir.display());
    }
    let origin_time = meta.origin_time.max(train.last_time());
    if truth_test.time(0) <= origin_time {
        bail!(
            "{}: the forecast window begins before the training data ends",
            dir.display()
        );
    }
    Ok(GeneratedInstance {
        train,
        truth_test,
        origin_state: State::from_vec(meta.origin_state.clone()),
        origin_time,
        horizon: meta.horizon,
        seed: meta.seed,
    })
}

// ---------------------------------------------------------------------------
// tuned configurations and traces

pub fn write_method_config(path: &Path, config: &MethodConfig) -> Result<()> {
    write_json_pretty(path, config)
}

pub fn read_method_config(path: &Path) -> Result<MethodConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// One JSON object per evaluation, in evaluation order.
pub fn write_trace(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    let mut text = String::new();
    for record in trace {
        text.push_str(&serde_json::to_string(record)?);
        text.push('\n');
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

// ---------------------------------------------------------------------------
// score tables

pub fn write_results_csv(path: &Path, records: &[ScoreRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    writer.write_record(RESULTS_HEADER)?;
    for r in records {
        writer.write_record([
            r.method.as_str(),
            r.system.as_str(),
            r.scheme.as_str(),
            r.split.as_str(),
            &r.rep.to_string(),
            &format_fixed8(r.cme),
            &format_opt_fixed8(r.smape),
            &format_fixed8(r.valid_time),
            &format_fixed8(r.fit_seconds),
            &format_fixed8(r.predict_seconds),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a score table back. The in-memory failure flag is not a column;
/// it is reconstructed from the worst-score signature (cme 1, no sMAPE,
/// zero valid time), which is exactly what failed repetitions are given.
pub fn read_results_csv(path: &Path) -> Result<Vec<ScoreRecord>> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers = reader.headers()?.clone();
    if headers.iter().ne(RESULTS_HEADER) {
        bail!(
            "{}: unexpected header {:?}",
            path.display(),
            headers
        );
    }
    let mut records = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{} row {row}", path.display()))?;
        let context = || format!("{} row {row}", path.display());
        let split = Split::from_name(&record[3])
            .with_context(|| format!("{}: unknown split {:?}", context(), &record[3]))?;
        let smape = match record[6].trim() {
            "" => None,
            field => Some(parse_f64(field, "smape").with_context(context)?),
        };
        let cme = parse_f64(&record[5], "cme").with_context(context)?;
        let valid_time = parse_f64(&record[7], "tvalid").with_context(context)?;
        records.push(ScoreRecord {
            method: record[0].to_string(),
            system: record[1].to_string(),
            scheme: record[2].to_string(),
            split,
            rep: record[4]
                .trim()
                .parse::<usize>()
                .with_context(context)?,
            cme,
            smape,
            valid_time,
            fit_seconds: parse_f64(&record[8], "fit_s").with_context(context)?,
            predict_seconds: parse_f64(&record[9], "predict_s").with_context(context)?,
            failed: cme == 1.0 && smape.is_none() && valid_time == 0.0,
        });
    }
    Ok(records)
}

// ---------------------------------------------------------------------------
// report tables

pub fn write_aggregate_csv(path: &Path, summaries: &[MethodSummary]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    writer.write_record([
        "system",
        "scheme",
        "split",
        "method",
        "reps",
        "failures",
        "mean_cme",
        "ci_halfwidth",
    ])?;
    for s in summaries {
        writer.write_record([
            s.system.as_str(),
            s.scheme.as_str(),
            s.split.as_str(),
            s.method.as_str(),
            &s.reps.to_string(),
            &s.failures.to_string(),
            &format_fixed8(s.mean_cme),
            &format_opt_fixed8(s.ci_half_width),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_ranks_csv(path: &Path, summaries: &[MethodSummary]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    writer.write_record(["system", "scheme", "method", "rank", "mean_cme"])?;
    for s in summaries {
        writer.write_record([
            s.system.as_str(),
            s.scheme.as_str(),
            s.method.as_str(),
            &s.rank.to_string(),
            &format_fixed8(s.mean_cme),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Plot data for the mean-error chart: one point per method with its 95%
/// interval endpoints (empty with a single repetition).
pub fn write_plot_csv(path: &Path, summaries: &[MethodSummary]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    writer.write_record(["system", "scheme", "method", "mean_cme", "ci_lo", "ci_hi"])?;
    for s in summaries {
        writer.write_record([
            s.system.as_str(),
            s.scheme.as_str(),
            s.method.as_str(),
            &format_fixed8(s.mean_cme),
            &format_opt_fixed8(s.ci_half_width.map(|hw| s.mean_cme - hw)),
            &format_opt_fixed8(s.ci_half_width.map(|hw| s.mean_cme + hw)),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_ttests_csv(
    path: &Path,
    groups: &[(String, String, TTestMatrix)],
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    writer.write_record(["system", "scheme", "method_a", "method_b", "p"])?;
    for (system, scheme, matrix) in groups {
        for a in &matrix.methods {
            for b in &matrix.methods {
                if let Some(p) = matrix.p.get(&(a.clone(), b.clone())) {
                    writer.write_record([
                        system.as_str(),
                        scheme.as_str(),
                        a.as_str(),
                        b.as_str(),
                        &format_fixed8(*p),
                    ])?;
                }
            }
        }
    }
    writer.flush()?;
    Ok(())
}
