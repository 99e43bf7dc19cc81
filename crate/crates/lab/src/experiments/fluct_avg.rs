//! Fluctuation averaging: averages of `Q_k(1/G_kk)` against single terms
//! along an `η` sweep at fixed bulk energies.

use std::sync::Arc;

use faer::Mat;
use rmt_core::c64;
use rmt_core::ensemble::sample;
use rmt_core::resolvent::{fluct_avg, q_inverse, upsilon_all, FluctAvgOptions, HermitianSpectrum, ResolventBundle};
use rmt_core::sc::{edge_params, SpectralPoint};
use rmt_core::stats::{mean, median};

use super::{fit, label, RunInput};
use crate::config::Weights;
use crate::error::Result;
use crate::harness::par_samples;
use crate::report::{ExperimentReport, PassFlag, Table};

/// `|slope(avg) − 2·slope(single)|` must not exceed this.
pub const SLOPE_TOLERANCE: f64 = 0.3;
/// Ratio window for the `t = S` and `t = 1/N` averages.
pub const WEIGHT_RATIO_WINDOW: (f64, f64) = (0.1, 10.0);

#[derive(Default, Clone)]
struct PointSample {
    /// `|[Q 1/G]|` with `t = 1/N`.
    avg_q: f64,
    /// `|[Υ]|`.
    avg_upsilon: f64,
    /// `max_k |Q_k(1/G_kk)|`.
    max_q: f64,
    /// `N⁻¹ Σ_i |Σ_k s_ik Q_k(1/G_kk)|`.
    profile_q: Option<f64>,
    /// `|[Q G]|` with resampled partial expectations.
    avg_q_g: Option<f64>,
}

pub fn run(input: RunInput<'_>) -> Result<ExperimentReport> {
    let cfg = input.config;
    let grid = cfg.z_grid.as_ref().expect("validated");
    let use_profile = matches!(cfg.options.weights, Weights::Profile | Weights::Both);
    let resamples = cfg.options.resamples;
    let mut table = Table::new(
        "points",
        &[
            "N", "E", "eta", "pi", "mean_abs_avg_q", "mean_abs_avg_upsilon", "mean_max_q", "mean_profile_q",
            "mean_abs_avg_q_g", "pi_squared",
        ],
    );
    let mut fitted = Vec::new();
    let mut flags = Vec::new();
    for &n in &cfg.n_values {
        let setup = input.setup(n)?;
        let m_param = setup.m_param();
        let (es, etas) = grid.resolve(n, "z_grid")?;
        let points: Vec<SpectralPoint> = es
            .iter()
            .flat_map(|&e| etas.iter().map(move |&eta| SpectralPoint::new(e, eta)))
            .collect::<rmt_core::Result<_>>()?;
        let uniform = Mat::from_fn(n, n, |_, _| 1.0 / n as f64);
        let profile = setup.profile.clone();
        let per_sample: Vec<Vec<PointSample>> = par_samples(cfg.samples, |idx| {
            let h = sample(&setup.spec, idx);
            let spectrum = Arc::new(HermitianSpectrum::decompose(&h)?);
            points
                .iter()
                .map(|&z| {
                    let bundle = ResolventBundle::new(spectrum.clone(), z);
                    let q = q_inverse(&h, &bundle)?;
                    let ups = upsilon_all(&h, &bundle)?;
                    let avg = |x: &[c64]| (x.iter().sum::<c64>() / n as f64).norm();
                    let profile_q = use_profile.then(|| {
                        let s = profile.s();
                        (0..n)
                            .map(|i| (0..n).map(|k| q[k] * s[(i, k)]).sum::<c64>().norm())
                            .sum::<f64>()
                            / n as f64
                    });
                    let avg_q_g = if resamples > 0 {
                        let opts = FluctAvgOptions {
                            resamples,
                            seed: setup.spec.seed() ^ idx.rotate_left(32),
                        };
                        let m = edge_params(z, m_param).m;
                        let fa = fluct_avg(&h, &bundle, m, uniform.as_ref(), opts)?;
                        fa.sum_q_g.map(|v| v[0].norm())
                    } else {
                        None
                    };
                    Ok(PointSample {
                        avg_q: avg(&q),
                        avg_upsilon: avg(&ups),
                        max_q: q.iter().map(|x| x.norm()).fold(0.0, f64::max),
                        profile_q,
                        avg_q_g,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })?;

        for &e in &es {
            let (mut xs, mut avg_ys, mut max_ys, mut ups_ys) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            let mut ratios = Vec::new();
            for (k, z) in points.iter().enumerate().filter(|(_, z)| z.e() == e) {
                let col = |f: &dyn Fn(&PointSample) -> f64| mean(&per_sample.iter().map(|s| f(&s[k])).collect::<Vec<_>>());
                let opt_col = |f: &dyn Fn(&PointSample) -> Option<f64>| -> Option<Vec<f64>> {
                    per_sample.iter().map(|s| f(&s[k])).collect()
                };
                let avg_q = col(&|s| s.avg_q);
                let max_q = col(&|s| s.max_q);
                let avg_u = col(&|s| s.avg_upsilon);
                let prof = opt_col(&|s| s.profile_q);
                if let Some(p) = &prof {
                    let uni: Vec<f64> = per_sample.iter().map(|s| s[k].avg_q).collect();
                    ratios.push(median(p) / median(&uni));
                }
                let q_g = opt_col(&|s| s.avg_q_g).map(|v| mean(&v));
                let pi = edge_params(*z, m_param).pi_bound;
                table.push(vec![
                    Some(n as f64),
                    Some(e),
                    Some(z.eta()),
                    Some(pi),
                    Some(avg_q),
                    Some(avg_u),
                    Some(max_q),
                    prof.map(|p| mean(&p)),
                    q_g,
                    Some(pi * pi),
                ]);
                xs.push(z.eta());
                avg_ys.push(avg_q);
                max_ys.push(max_q);
                ups_ys.push(avg_u);
            }
            let tag = format!("N{n}_E{}", label(e));
            if xs.len() >= 2 {
                let fa = fit(format!("avg_q_slope_{tag}"), &xs, &avg_ys);
                let fm = fit(format!("max_q_slope_{tag}"), &xs, &max_ys);
                let fu = fit(format!("avg_upsilon_slope_{tag}"), &xs, &ups_ys);
                flags.push(PassFlag::within(
                    format!("quadratic_gain_{tag}"),
                    fa.value - 2.0 * fm.value,
                    -SLOPE_TOLERANCE,
                    SLOPE_TOLERANCE,
                ));
                fitted.extend([fa, fm, fu]);
            }
            if !ratios.is_empty() {
                let (lo, hi) = WEIGHT_RATIO_WINDOW;
                // The ratio closest to (or furthest outside) the window decides.
                let worst = ratios
                    .iter()
                    .copied()
                    .min_by(|a, b| (a - lo).min(hi - a).total_cmp(&(b - lo).min(hi - b)))
                    .expect("nonempty");
                flags.push(PassFlag::within(
                    format!("weights_same_order_{tag}"),
                    worst,
                    WEIGHT_RATIO_WINDOW.0,
                    WEIGHT_RATIO_WINDOW.1,
                ));
            }
        }
    }
    Ok(input.report(vec![table], fitted, flags, Vec::new()))
}
