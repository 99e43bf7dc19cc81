//! Monte Carlo experiments. Each one turns an [`ExperimentConfig`] into an
//! [`ExperimentReport`] with per-point tables, fitted exponents and pass flags.

use std::path::Path;
use std::sync::Arc;

use rmt_core::ensemble::EnsembleSpec;
use rmt_core::profile::VarianceProfile;
use rmt_core::stats;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::Result;
use crate::report::{ExperimentReport, FittedExponent, Provenance, Table, REPORT_SCHEMA_VERSION};

pub mod counting;
pub mod domination;
pub mod extremes;
pub mod fluct_avg;
pub mod lde;
pub mod local_law;
pub mod rigidity;
pub mod universality;

/// Everything an experiment needs besides its own config.
#[derive(Debug, Clone, Copy)]
pub struct RunInput<'a> {
    pub config: &'a ExperimentConfig,
    pub master_seed: u64,
    pub seed: u64,
    pub config_sha256: &'a str,
    pub base_dir: &'a Path,
}

impl<'a> RunInput<'a> {
    /// Input for a config that is not backed by a file.
    pub fn standalone(config: &'a ExperimentConfig, seed: u64) -> Self {
        Self {
            config,
            master_seed: seed,
            seed,
            config_sha256: "",
            base_dir: Path::new("."),
        }
    }

    fn setup(&self, n: usize) -> Result<Setup> {
        let profile = Arc::new(self.config.ensemble.build_profile(n, self.base_dir)?);
        let spec = Arc::new(self.config.ensemble.build_spec(profile.clone(), self.seed)?);
        Ok(Setup { n, profile, spec })
    }

    fn report(&self, tables: Vec<Table>, fitted: Vec<FittedExponent>, flags: Vec<crate::report::PassFlag>, notes: Vec<String>) -> ExperimentReport {
        ExperimentReport {
            schema_version: REPORT_SCHEMA_VERSION,
            experiment: self.config.kind.tag().to_string(),
            name: self.config.name.clone(),
            tables,
            fitted_exponents: fitted,
            pass_flags: flags,
            notes,
            provenance: Provenance {
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                config_sha256: self.config_sha256.to_string(),
                master_seed: self.master_seed,
                experiment_seed: self.seed,
                n_values: self.config.n_values.clone(),
                samples: self.config.samples,
            },
        }
    }
}

struct Setup {
    n: usize,
    profile: Arc<VarianceProfile>,
    spec: Arc<EnsembleSpec>,
}

impl Setup {
    fn m_param(&self) -> f64 {
        self.profile.m_param()
    }

    fn log_n(&self) -> f64 {
        (self.n as f64).ln().max(1.0)
    }
}

pub fn run(input: RunInput<'_>) -> Result<ExperimentReport> {
    match input.config.kind {
        ExperimentKind::LocalLaw => local_law::run(input),
        ExperimentKind::Counting => counting::run(input),
        ExperimentKind::Rigidity => rigidity::run(input),
        ExperimentKind::Extremes => extremes::run(input),
        ExperimentKind::FluctAvg => fluct_avg::run(input),
        ExperimentKind::Universality => universality::run(input),
        ExperimentKind::Domination => domination::run(input),
        ExperimentKind::Lde => lde::run(input),
    }
}

/// One entry of `rmt-lab list`.
pub struct Description {
    pub kind: ExperimentKind,
    pub fields: &'static str,
    pub summary: &'static str,
}

pub fn descriptions() -> Vec<Description> {
    ExperimentKind::ALL
        .iter()
        .map(|&kind| {
            let (fields, summary) = match kind {
                ExperimentKind::LocalLaw => (
                    "n_values samples gamma_exponent ensemble z_grid [options.slack options.lambda_stride]",
                    "Theta·M·eta, Lambda/Pi and outside-spectrum errors on the spectral domain; bulk slope of Theta vs eta (Theorem 2.1)",
                ),
                ExperimentKind::Counting => (
                    "n_values samples ensemble [options.slack]",
                    "sup_E |n_N(E) - n(E)| against Y log N (Lemma 7.1, Theorem 7.4)",
                ),
                ExperimentKind::Rigidity => (
                    "n_values samples ensemble [options.slack options.epsilon]",
                    "|lambda_a - gamma_a| against the bulk and edge location bounds and the mean-square bound (Theorem 7.5, Corollary 7.6)",
                ),
                ExperimentKind::Extremes => (
                    "n_values samples ensemble",
                    "distance of the extreme eigenvalues to +-2 and its decay in N (Theorem 7.2)",
                ),
                ExperimentKind::FluctAvg => (
                    "n_values samples ensemble z_grid [options.weights options.resamples]",
                    "averaged [Q 1/G] and [Upsilon] against single terms Q_k(1/G_kk) over an eta sweep (Theorems 4.6-4.7)",
                ),
                ExperimentKind::Universality => (
                    "n_values samples ensemble [options.poisson_control options.pair_range options.pair_bins]",
                    "bulk gap-ratio mean against an in-harness GOE/GUE reference, 2-point histogram as plot data (Section 8, Theorem 8.1)",
                ),
                ExperimentKind::Domination => (
                    "n_values samples ensemble z_grid options.statistic options.epsilon [options.d]",
                    "exceedance probability P(X > N^eps Y) for theta, lambda or entry across N (Definition 2.1)",
                ),
                ExperimentKind::Lde => (
                    "n_values samples ensemble",
                    "q = 0.99 quantiles of normalized linear, bilinear and off-diagonal quadratic forms (Theorem C.1)",
                ),
            };
            Description { kind, fields, summary }
        })
        .collect()
}

/// Log-log slope fit, `NaN` when fewer than two positive points remain.
fn fit(name: String, xs: &[f64], ys: &[f64]) -> FittedExponent {
    match stats::log_log_fit(xs, ys) {
        Some(f) => FittedExponent {
            name,
            value: f.slope,
            stderr: f.slope_stderr,
        },
        None => FittedExponent {
            name,
            value: f64::NAN,
            stderr: f64::NAN,
        },
    }
}

/// Short numeric label for names such as `theta_slope_N2048_E0.5`.
fn label(x: f64) -> String {
    let s = format!("{x}");
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(f64::NEG_INFINITY, |a, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) })
}
