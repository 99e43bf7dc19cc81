//! Bulk gap-ratio statistics against an in-harness GOE/GUE reference, with an
//! optional independent-diagonal (Poisson) control and a 2-point histogram.

use std::sync::Arc;

use rmt_core::ensemble::{derive_rng, sample, EnsembleSpec, EntryLaw, STREAM_AUX};
use rmt_core::profile::mean_field_profile;
use rmt_core::resolvent::HermitianSpectrum;
use rmt_core::spectral::{bulk_window, gap_ratios, unfolded_pair_distances};
use rmt_core::stats::{mean, std_dev};

use super::RunInput;
use crate::error::Result;
use crate::harness::par_samples;
use crate::report::{ExperimentReport, PassFlag, Table};

/// Largest accepted difference of mean gap ratios.
pub const MATCH_TOLERANCE: f64 = 0.01;
/// Smallest accepted separation of the Poisson control.
pub const CONTROL_SEPARATION: f64 = 0.05;
pub const MIN_SAMPLES: usize = 200;
/// Seed offset of the reference ensemble.
pub const REFERENCE_SALT: u64 = 0x5eed_0f00_d5c1_a55e;
/// Energy window of the 2-point histogram.
pub const PAIR_WINDOW: (f64, f64) = (-0.5, 0.5);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioSummary {
    pub mean: f64,
    /// Standard error from per-sample means.
    pub stderr: f64,
}

struct SampleOut {
    ratios: Vec<f64>,
    pairs: Vec<f64>,
    in_window: usize,
}

fn analyse(eig: &[f64], pair_range: f64) -> SampleOut {
    let n = eig.len();
    SampleOut {
        ratios: gap_ratios(eig, bulk_window(n)),
        pairs: unfolded_pair_distances(eig, PAIR_WINDOW, pair_range),
        in_window: eig.iter().filter(|&&l| l >= PAIR_WINDOW.0 && l <= PAIR_WINDOW.1).count(),
    }
}

fn summarize(out: &[SampleOut]) -> RatioSummary {
    let pooled: Vec<f64> = out.iter().flat_map(|s| s.ratios.iter().copied()).collect();
    let per_sample: Vec<f64> = out.iter().map(|s| mean(&s.ratios)).collect();
    RatioSummary {
        mean: mean(&pooled),
        stderr: std_dev(&per_sample) / (per_sample.len() as f64).sqrt(),
    }
}

/// Pair density per unit unfolded distance and per eigenvalue in the window.
fn histogram(out: &[SampleOut], range: f64, bins: usize) -> Vec<f64> {
    let mut counts = vec![0usize; bins];
    for d in out.iter().flat_map(|s| s.pairs.iter()) {
        let b = ((d / range) * bins as f64) as usize;
        if b < bins {
            counts[b] += 1;
        }
    }
    let points: usize = out.iter().map(|s| s.in_window).sum();
    let width = range / bins as f64;
    counts.iter().map(|&c| c as f64 / (points.max(1) as f64 * width)).collect()
}

/// Eigenvalues of a diagonal matrix with independent entries (Poisson statistics).
fn poisson_eigenvalues(law: EntryLaw, seed: u64, n: usize, idx: u64) -> Vec<f64> {
    let mut rng = derive_rng(seed, n as u64, idx, STREAM_AUX);
    let mut eig: Vec<f64> = (0..n).map(|_| law.draw(&mut rng)).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

pub fn run(input: RunInput<'_>) -> Result<ExperimentReport> {
    let cfg = input.config;
    let opts = &cfg.options;
    let mut table = Table::new(
        "points",
        &["N", "M", "mean_ratio", "stderr_ratio", "reference_mean", "reference_stderr", "poisson_mean", "poisson_stderr"],
    );
    let mut pair_table = Table::new("pair_density", &["N", "distance", "ensemble", "reference"]);
    let mut flags = vec![PassFlag::at_least("min_samples", cfg.samples as f64, MIN_SAMPLES as f64)];
    for &n in &cfg.n_values {
        let setup = input.setup(n)?;
        let reference = Arc::new(EnsembleSpec::new(
            Arc::new(mean_field_profile(n)?),
            EntryLaw::Gaussian,
            setup.spec.symmetry(),
            0.0,
            input.seed ^ REFERENCE_SALT,
        )?);
        let run_one = |spec: &Arc<EnsembleSpec>| {
            par_samples(cfg.samples, |idx| {
                let h = sample(spec, idx);
                Ok(analyse(&HermitianSpectrum::eigenvalues_only(&h)?, opts.pair_range))
            })
        };
        let ens = run_one(&setup.spec)?;
        let refr = run_one(&reference)?;
        let (a, b) = (summarize(&ens), summarize(&refr));
        flags.push(PassFlag::at_most(format!("reference_match_N{n}"), (a.mean - b.mean).abs(), MATCH_TOLERANCE));
        let control = if opts.poisson_control {
            let law = setup.spec.entry_law();
            let out = par_samples(cfg.samples, |idx| Ok(analyse(&poisson_eigenvalues(law, input.seed, n, idx), opts.pair_range)))?;
            let p = summarize(&out);
            flags.push(PassFlag::at_least(
                format!("poisson_separation_N{n}"),
                (p.mean - b.mean).abs(),
                CONTROL_SEPARATION,
            ));
            Some(p)
        } else {
            None
        };
        table.push(vec![
            Some(n as f64),
            Some(setup.m_param()),
            Some(a.mean),
            Some(a.stderr),
            Some(b.mean),
            Some(b.stderr),
            control.map(|p| p.mean),
            control.map(|p| p.stderr),
        ]);
        let he = histogram(&ens, opts.pair_range, opts.pair_bins);
        let hr = histogram(&refr, opts.pair_range, opts.pair_bins);
        let width = opts.pair_range / opts.pair_bins as f64;
        for (k, (x, y)) in he.iter().zip(&hr).enumerate() {
            pair_table.push_values(&[n as f64, (k as f64 + 0.5) * width, *x, *y]);
        }
    }
    Ok(input.report(vec![table, pair_table], Vec::new(), flags, Vec::new()))
}
