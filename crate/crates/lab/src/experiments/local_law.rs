//! Local law sweep: `Θ = |m_N − m|`, `Λ` and the outside-spectrum error on
//! the part of the `z` grid that lies in the spectral domain.

use std::sync::Arc;

use rmt_core::ensemble::sample;
use rmt_core::resolvent::{control, HermitianSpectrum, ResolventBundle};
use rmt_core::sc::{edge_params, kappa, SpectralPoint};
use rmt_core::stability::StabilityContext;
use rmt_core::stats::{median, quantile};

use super::{fit, label, max_of, RunInput};
use crate::error::{LabError, Result};
use crate::harness::par_samples;
use crate::report::{ExperimentReport, PassFlag, Table};

/// Accepted window for the bulk slope of median `Θ` against `η`.
pub const SLOPE_TARGET: f64 = -1.0;
pub const SLOPE_TOLERANCE: f64 = 0.2;

struct PointSample {
    theta: f64,
    lambda: Option<f64>,
}

/// `1/(M(κ+η)) + 1/((Mη)²√(κ+η))`.
pub fn outside_bound(z: SpectralPoint, m_param: f64) -> f64 {
    let k = kappa(z.e()) + z.eta();
    let me = m_param * z.eta();
    1.0 / (m_param * k) + 1.0 / (me * me * k.sqrt())
}

pub fn run(input: RunInput<'_>) -> Result<ExperimentReport> {
    let cfg = input.config;
    let grid = cfg.z_grid.as_ref().expect("validated");
    let c = cfg.options.slack;
    let mut table = Table::new(
        "points",
        &[
            "N", "M", "E", "eta", "lambda_computed", "median_theta", "q90_theta", "median_theta_m_eta",
            "max_theta_m", "median_lambda", "pi", "median_lambda_over_pi", "outside_bound", "median_outside_ratio",
        ],
    );
    let mut fitted = Vec::new();
    let mut flags = Vec::new();
    let mut notes = Vec::new();

    for &n in &cfg.n_values {
        let setup = input.setup(n)?;
        let m_param = setup.m_param();
        let ctx = StabilityContext::new(setup.profile.clone())?;
        let (es, etas) = grid.resolve(n, "z_grid")?;
        let points = ctx.filter_domain(&es, &etas, cfg.gamma_exponent)?;
        if points.is_empty() {
            return Err(LabError::EmptyDomain(format!(
                "no grid point of `{}` lies in the spectral domain at N = {n} (gamma = {})",
                cfg.name, cfg.gamma_exponent
            )));
        }
        let dropped = es.len() * etas.len() - points.len();
        if dropped > 0 {
            notes.push(format!("N = {n}: {dropped} grid points outside the spectral domain were skipped"));
        }
        // Full Green functions only on every `stride`-th eta of each energy.
        let stride = cfg.options.lambda_stride;
        let mut rank = 0usize;
        let with_lambda: Vec<bool> = points
            .iter()
            .enumerate()
            .map(|(k, p)| {
                if k > 0 && points[k - 1].e() != p.e() {
                    rank = 0;
                }
                let on = rank % stride == 0;
                rank += 1;
                on
            })
            .collect();
        let refs: Vec<_> = points.iter().map(|&z| edge_params(z, m_param)).collect();

        let per_sample: Vec<Vec<PointSample>> = par_samples(cfg.samples, |idx| {
            let h = sample(&setup.spec, idx);
            let spectrum = Arc::new(HermitianSpectrum::decompose(&h)?);
            Ok(points
                .iter()
                .zip(&refs)
                .zip(&with_lambda)
                .map(|((&z, r), &lam)| {
                    let theta = (spectrum.stieltjes(z.z()) - r.m).norm();
                    let lambda = lam.then(|| {
                        let bundle = ResolventBundle::new(spectrum.clone(), z);
                        control(&bundle, r).lambda
                    });
                    PointSample { theta, lambda }
                })
                .collect())
        })?;

        let mut slope_data: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::new();
        let mut worst_theta = f64::NEG_INFINITY;
        let mut worst_lambda: Option<f64> = None;
        let mut worst_outside: Option<f64> = None;
        for (k, (&z, r)) in points.iter().zip(&refs).enumerate() {
            let thetas: Vec<f64> = per_sample.iter().map(|s| s[k].theta).collect();
            let med_theta = median(&thetas);
            let me = m_param * z.eta();
            let theta_m_eta = med_theta * me;
            worst_theta = worst_theta.max(theta_m_eta);
            let lambdas: Vec<f64> = per_sample.iter().filter_map(|s| s[k].lambda).collect();
            let (med_lambda, lambda_ratio) = if lambdas.is_empty() {
                (None, None)
            } else {
                let ml = median(&lambdas);
                let ratio = ml / r.pi_bound;
                worst_lambda = Some(worst_lambda.map_or(ratio, |w: f64| w.max(ratio)));
                (Some(ml), Some(ratio))
            };
            let outside = z.e().abs() >= 2.0;
            let bound = outside.then(|| outside_bound(z, m_param));
            let outside_ratio = bound.map(|b| {
                let ratio = med_theta / b;
                worst_outside = Some(worst_outside.map_or(ratio, |w: f64| w.max(ratio)));
                ratio
            });
            table.push(vec![
                Some(n as f64),
                Some(m_param),
                Some(z.e()),
                Some(z.eta()),
                Some(if lambdas.is_empty() { 0.0 } else { 1.0 }),
                Some(med_theta),
                Some(quantile(&thetas, 0.9)),
                Some(theta_m_eta),
                Some(max_of(thetas.iter().map(|t| t * m_param))),
                med_lambda,
                Some(r.pi_bound),
                lambda_ratio,
                bound,
                outside_ratio,
            ]);
            if z.e().abs() < 2.0 {
                match slope_data.iter_mut().find(|(e, _, _)| *e == z.e()) {
                    Some((_, xs, ys)) => {
                        xs.push(z.eta());
                        ys.push(med_theta);
                    }
                    None => slope_data.push((z.e(), vec![z.eta()], vec![med_theta])),
                }
            }
        }

        flags.push(PassFlag::at_most(format!("theta_m_eta_N{n}"), worst_theta, c));
        if let Some(w) = worst_lambda {
            flags.push(PassFlag::at_most(format!("lambda_over_pi_N{n}"), w, c));
        }
        if let Some(w) = worst_outside {
            flags.push(PassFlag::at_most(format!("outside_spectrum_N{n}"), w, c));
        }
        for (e, xs, ys) in slope_data {
            if xs.len() < 3 {
                continue;
            }
            let f = fit(format!("theta_slope_N{n}_E{}", label(e)), &xs, &ys);
            flags.push(PassFlag::within(
                f.name.clone(),
                f.value,
                SLOPE_TARGET - SLOPE_TOLERANCE,
                SLOPE_TARGET + SLOPE_TOLERANCE,
            ));
            fitted.push(f);
        }
    }
    Ok(input.report(vec![table], fitted, flags, notes))
}
