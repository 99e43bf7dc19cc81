//! Eigenvalue locations `|λ_α − γ_α|` against the rigidity bounds.

use rmt_core::ensemble::sample;
use rmt_core::resolvent::HermitianSpectrum;
use rmt_core::sc::classical_locations;
use rmt_core::spectral::{alpha_hat, bulk_window, control_x, control_y, rigidity_bound};
use rmt_core::stability::spectral_gaps;
use rmt_core::stats::{mean, median};

use super::RunInput;
use crate::error::Result;
use crate::harness::par_samples;
use crate::report::{ExperimentReport, PassFlag, Table};

pub const DEFAULT_EPSILON: f64 = 0.1;
/// Required fraction of samples meeting the bulk bound.
pub const BULK_FRACTION: f64 = 0.95;
/// `N^{0.1}` allowance on the mean-square bound.
pub const MEAN_SQUARE_EXPONENT: f64 = 0.1;

struct SampleStats {
    bulk_max: f64,
    /// `max_α |λ_α − γ_α| / bound_α` over indices on the `Y (N/α̂)^{1/3}` branch.
    bulk_branch_ratio: f64,
    /// Same over indices on the `X + (M^ε Y)^{2/3}` branch (0 if there are none).
    edge_branch_ratio: f64,
    mean_square: f64,
}

fn branch_max(dev: &[f64], bounds: &[f64], on_edge: &[bool], edge: bool) -> f64 {
    dev.iter()
        .zip(bounds)
        .zip(on_edge)
        .filter(|(_, &e)| e == edge)
        .map(|((d, b), _)| d / b)
        .fold(0.0, f64::max)
}

pub fn run(input: RunInput<'_>) -> Result<ExperimentReport> {
    let cfg = input.config;
    let c = cfg.options.slack;
    let eps = cfg.options.epsilon.unwrap_or(DEFAULT_EPSILON);
    let mut table = Table::new(
        "points",
        &[
            "N", "M", "delta_plus", "X", "Y", "median_bulk_max", "bulk_threshold", "bulk_fraction",
            "edge_branch_indices", "median_bulk_branch_ratio", "median_edge_branch_ratio", "median_mean_square",
            "mean_square_threshold",
        ],
    );
    let mut flags = Vec::new();
    for &n in &cfg.n_values {
        let setup = input.setup(n)?;
        let m_param = setup.m_param();
        let (_, delta_plus) = spectral_gaps(&setup.profile)?;
        let x = control_x(n, m_param, delta_plus);
        let y = control_y(m_param, delta_plus);
        let gamma = classical_locations(n);
        let bounds: Vec<f64> = (1..=n).map(|a| rigidity_bound(n, a, m_param, x, y, eps)).collect();
        let me_ny = m_param.powf(eps) * n as f64 * y;
        let on_edge: Vec<bool> = (1..=n).map(|a| (alpha_hat(n, a) as f64) < me_ny).collect();
        let edge_count = on_edge.iter().filter(|&&e| e).count();
        let window = bulk_window(n);
        let stats = par_samples(cfg.samples, |idx| {
            let h = sample(&setup.spec, idx);
            let eig = HermitianSpectrum::eigenvalues_only(&h)?;
            let dev: Vec<f64> = eig.iter().zip(&gamma).map(|(l, g)| (l - g).abs()).collect();
            Ok(SampleStats {
                bulk_max: dev[window.clone()].iter().copied().fold(0.0, f64::max),
                bulk_branch_ratio: branch_max(&dev, &bounds, &on_edge, false),
                edge_branch_ratio: branch_max(&dev, &bounds, &on_edge, true),
                mean_square: mean(&dev.iter().map(|d| d * d).collect::<Vec<_>>()),
            })
        })?;
        let bulk_threshold = c * setup.log_n() / m_param;
        let bulk: Vec<f64> = stats.iter().map(|s| s.bulk_max).collect();
        let fraction = bulk.iter().filter(|&&b| b <= bulk_threshold).count() as f64 / bulk.len() as f64;
        let bulk_ratios: Vec<f64> = stats.iter().map(|s| s.bulk_branch_ratio).collect();
        let edge_ratios: Vec<f64> = stats.iter().map(|s| s.edge_branch_ratio).collect();
        let squares: Vec<f64> = stats.iter().map(|s| s.mean_square).collect();
        let ms_threshold = c * y * (y + x * x) * (n as f64).powf(MEAN_SQUARE_EXPONENT);
        let (med_bulk, med_edge, med_sq) = (median(&bulk_ratios), median(&edge_ratios), median(&squares));
        table.push_values(&[
            n as f64,
            m_param,
            delta_plus,
            x,
            y,
            median(&bulk),
            bulk_threshold,
            fraction,
            edge_count as f64,
            med_bulk,
            med_edge,
            med_sq,
            ms_threshold,
        ]);
        flags.push(PassFlag::at_least(format!("bulk_fraction_N{n}"), fraction, BULK_FRACTION));
        flags.push(PassFlag::at_most(format!("location_bulk_branch_N{n}"), med_bulk, c));
        if edge_count > 0 {
            flags.push(PassFlag::at_most(format!("location_edge_branch_N{n}"), med_edge, c));
        }
        flags.push(PassFlag::at_most(format!("mean_square_N{n}"), med_sq, ms_threshold));
    }
    Ok(input.report(vec![table], Vec::new(), flags, Vec::new()))
}
