//! `run`: validate a config, then execute its experiments into an output
//! directory.

use std::path::Path;

use crate::config::{self, ProfileKind, RunConfig};
use crate::error::{LabError, Result};
use crate::experiments::{self, RunInput};
use crate::harness;
use crate::manifest::{unix_now, ManifestEntry, RunManifest};
use crate::report::ExperimentReport;

#[derive(Debug)]
pub struct RunOutcome {
    pub reports: Vec<ExperimentReport>,
}

impl RunOutcome {
    pub fn all_passed(&self) -> bool {
        self.reports.iter().all(ExperimentReport::all_passed)
    }
}

/// Everything that can be checked without running: profile files load and
/// match their `n_values`.
fn preflight(cfg: &RunConfig) -> Result<()> {
    for (k, exp) in cfg.file.experiments.iter().enumerate() {
        if exp.ensemble.profile == ProfileKind::File {
            for &n in &exp.n_values {
                exp.ensemble
                    .build_profile(n, &cfg.base_dir)
                    .map_err(|e| LabError::config(format!("experiment[{k}].ensemble.path"), e.to_string()))?;
            }
        }
    }
    Ok(())
}

pub fn run_config(config_path: &Path, output_dir: &Path, threads: usize) -> Result<RunOutcome> {
    let cfg = config::load(config_path)?;
    preflight(&cfg)?;
    let pool = harness::pool(threads)?;
    std::fs::create_dir_all(output_dir).map_err(|e| LabError::io(output_dir, e))?;
    let mut manifest = RunManifest {
        schema_version: config::SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_path: config_path.display().to_string(),
        config_sha256: cfg.sha256.clone(),
        master_seed: cfg.master_seed,
        seed_source: cfg.seed_source,
        output_dir: output_dir.display().to_string(),
        threads: pool.current_num_threads(),
        started_unix: unix_now(),
        finished_unix: None,
        experiments: cfg.file.experiments.clone(),
        results: Vec::new(),
        error: None,
    };
    manifest.write(output_dir)?;

    let mut reports = Vec::new();
    for (k, exp) in cfg.file.experiments.iter().enumerate() {
        let input = RunInput {
            config: exp,
            master_seed: cfg.master_seed,
            seed: cfg.experiment_seed(k),
            config_sha256: &cfg.sha256,
            base_dir: &cfg.base_dir,
        };
        let result = pool.install(|| experiments::run(input)).and_then(|report| {
            let files = report.write(output_dir)?;
            Ok((report, files))
        });
        match result {
            Ok((report, files)) => {
                manifest.results.push(ManifestEntry {
                    name: report.name.clone(),
                    kind: report.experiment.clone(),
                    passed: report.all_passed(),
                    files: files
                        .iter()
                        .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
                        .collect(),
                });
                reports.push(report);
            }
            Err(e) => {
                manifest.error = Some(format!("experiment `{}`: {e}", exp.name));
                manifest.finished_unix = Some(unix_now());
                manifest.write(output_dir)?;
                return Err(e);
            }
        }
    }
    manifest.finished_unix = Some(unix_now());
    manifest.write(output_dir)?;
    Ok(RunOutcome { reports })
}
