//! Extreme eigenvalues: distance of `λ_1`, `λ_N` to the edges `∓2`.

use rmt_core::ensemble::sample;
use rmt_core::resolvent::HermitianSpectrum;
use rmt_core::spectral::norm_excess;
use rmt_core::stats::mean;

use super::{fit, max_of, RunInput};
use crate::config::ProfileKind;
use crate::error::Result;
use crate::harness::par_samples;
use crate::report::{ExperimentReport, PassFlag, Table};

/// Accepted window for the decay exponent of the edge deviation in `N`.
pub const SLOPE_WINDOW: (f64, f64) = (-0.8, -0.55);
/// Crude desk-scale ceiling `λ_N ≤ 2 + 1`.
pub const CEILING: f64 = 3.0;

struct Edges {
    first: f64,
    last: f64,
}

impl Edges {
    /// `(|λ_N − 2| + |λ_1 + 2|)/2`.
    fn pooled_deviation(&self) -> f64 {
        0.5 * ((self.last - 2.0).abs() + (self.first + 2.0).abs())
    }
}

pub fn run(input: RunInput<'_>) -> Result<ExperimentReport> {
    let cfg = input.config;
    let mut table = Table::new(
        "points",
        &["N", "M", "mean_norm_excess", "mean_top_minus_2", "mean_minus_2_minus_bottom", "mean_edge_deviation", "max_top", "min_bottom"],
    );
    let mut flags = Vec::new();
    let mut notes = Vec::new();
    let (mut ns, mut pooled, mut capped) = (Vec::new(), Vec::new(), Vec::new());
    let mut top = f64::NEG_INFINITY;
    let mut bottom = f64::INFINITY;
    for &n in &cfg.n_values {
        let setup = input.setup(n)?;
        let edges = par_samples(cfg.samples, |idx| {
            let h = sample(&setup.spec, idx);
            let eig = HermitianSpectrum::eigenvalues_only(&h)?;
            Ok((Edges { first: eig[0], last: eig[n - 1] }, norm_excess(&eig)))
        })?;
        let dev = mean(&edges.iter().map(|(e, _)| e.pooled_deviation()).collect::<Vec<_>>());
        let excess = mean(&edges.iter().map(|(_, x)| *x).collect::<Vec<_>>());
        let max_top = max_of(edges.iter().map(|(e, _)| e.last));
        let min_bottom = -max_of(edges.iter().map(|(e, _)| -e.first));
        top = top.max(max_top);
        bottom = bottom.min(min_bottom);
        table.push_values(&[
            n as f64,
            setup.m_param(),
            excess,
            mean(&edges.iter().map(|(e, _)| e.last - 2.0).collect::<Vec<_>>()),
            mean(&edges.iter().map(|(e, _)| -2.0 - e.first).collect::<Vec<_>>()),
            dev,
            max_top,
            min_bottom,
        ]);
        ns.push(n as f64);
        pooled.push(dev);
        capped.push(excess);
    }
    flags.push(PassFlag::at_most("ceiling_top", top, CEILING));
    flags.push(PassFlag::at_least("ceiling_bottom", bottom, -CEILING));
    let mut fitted = Vec::new();
    if ns.len() >= 2 {
        let f = fit("edge_deviation_slope".into(), &ns, &pooled);
        if cfg.ensemble.profile == ProfileKind::MeanField {
            flags.push(PassFlag::within(f.name.clone(), f.value, SLOPE_WINDOW.0, SLOPE_WINDOW.1));
        } else {
            notes.push("edge slope window applies to mean-field profiles only; exponent reported".into());
        }
        fitted.push(f);
        fitted.push(fit("norm_excess_slope".into(), &ns, &capped));
    }
    Ok(input.report(vec![table], fitted, flags, notes))
}
