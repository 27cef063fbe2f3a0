//! The run manifest: one JSON document from which the whole pipeline
//! (generate, tune, run, report) is reproducible. Every randomized step
//! derives its seed purely from the manifest's master seed, a role tag, and
//! integer indices, so reruns are bit-identical.

use anyhow::{bail, Context, Result};
use chaoscast_core::forecasters::MethodName;
use chaoscast_core::systems::{ObservationScheme, SystemKind};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Configuration of a full benchmark run. Fields missing from a manifest
/// file fall back to the defaults, so a partial manifest is valid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunManifest {
    /// Root seed of every derived random stream.
    pub master_seed: u64,
    /// System identifiers (see `chaoscast generate --help` for the list).
    pub systems: Vec<String>,
    /// Observation-scheme identifiers.
    pub schemes: Vec<String>,
    /// Forecasting methods to tune and evaluate.
    pub methods: Vec<String>,
    /// Repetitions used to pick hyperparameters.
    pub validation_reps: usize,
    /// Repetitions used for the reported scores.
    pub test_reps: usize,
    /// Root of the data tree (overridden by --data-root or CHAOSCAST_DATA).
    pub data_root: PathBuf,
    /// Worker-thread cap for parallel evaluation; absent = one per core.
    pub jobs: Option<usize>,
}

impl Default for RunManifest {
    fn default() -> Self {
        RunManifest {
            master_seed: 0,
            systems: SystemKind::all()
                .iter()
                .map(|k| k.name().to_string())
                .collect(),
            schemes: ObservationScheme::all_named()
                .iter()
                .map(|s| s.name().expect("built-in schemes are named").to_string())
                .collect(),
            methods: MethodName::ALL
                .iter()
                .map(|m| m.as_str().to_string())
                .collect(),
            validation_reps: 10,
            test_reps: 10,
            data_root: PathBuf::from("data"),
            jobs: None,
        }
    }
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<RunManifest> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        let manifest: RunManifest = serde_json::from_str(&text)
            .with_context(|| format!("parsing manifest {}", path.display()))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        if self.validation_reps == 0 {
            bail!("validation_reps must be at least 1");
        }
        if self.test_reps == 0 {
            bail!("test_reps must be at least 1");
        }
        self.resolved_systems(&[])?;
        self.resolved_schemes(&[])?;
        self.resolved_methods(&[])?;
        Ok(())
    }

    /// The systems to operate on: the (validated) CLI filter when present,
    /// else the manifest list.
    pub fn resolved_systems(&self, filter: &[String]) -> Result<Vec<SystemKind>> {
        let names = if filter.is_empty() { &self.systems } else { filter };
        names
            .iter()
            .map(|name| {
                SystemKind::from_name(name).with_context(|| {
                    format!(
                        "unknown system {name:?} (known: {})",
                        known(SystemKind::all().iter().map(|k| k.name()))
                    )
                })
            })
            .collect()
    }

    pub fn resolved_schemes(&self, filter: &[String]) -> Result<Vec<ObservationScheme>> {
        let names = if filter.is_empty() { &self.schemes } else { filter };
        names
            .iter()
            .map(|name| {
                ObservationScheme::from_name(name).with_context(|| {
                    format!(
                        "unknown scheme {name:?} (known: {})",
                        known(
                            ObservationScheme::all_named()
                                .iter()
                                .map(|s| s.name().expect("built-in schemes are named"))
                        )
                    )
                })
            })
            .collect()
    }

    pub fn resolved_methods(&self, filter: &[String]) -> Result<Vec<MethodName>> {
        let names = if filter.is_empty() { &self.methods } else { filter };
        names
            .iter()
            .map(|name| {
                MethodName::parse(name)
                    .with_context(|| format!("unknown forecasting method {name:?}"))
            })
            .collect()
    }
}

fn known<'a>(names: impl Iterator<Item = &'a str>) -> String {
    names.collect::<Vec<_>>().join(", ")
}
