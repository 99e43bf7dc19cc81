//! Single-shot evaluations behind the `sc eval`, `stability map` and
//! `resolvent probe` subcommands.

use std::path::Path;
use std::sync::Arc;

use rmt_core::ensemble::{sample, EnsembleSpec};
use rmt_core::profile::{mean_field_profile, VarianceProfile};
use rmt_core::resolvent::{control, green, schur_terms};
use rmt_core::sc::{edge_params, SpectralPoint};
use rmt_core::stability::{StabilityContext, ETA_MAX};
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::report::Table;

#[derive(Debug, Clone, Serialize)]
pub struct ScEval {
    #[serde(rename = "E")]
    pub e: f64,
    pub eta: f64,
    pub m_re: f64,
    pub m_im: f64,
    pub rho: f64,
    pub kappa: f64,
    pub theta: f64,
}

pub fn sc_eval(e: f64, eta: f64) -> Result<ScEval> {
    let z = SpectralPoint::new(e, eta)?;
    // `Π` is not reported, so `M` is irrelevant here.
    let r = edge_params(z, 1.0);
    Ok(ScEval {
        e,
        eta,
        m_re: r.m.re,
        m_im: r.m.im,
        rho: r.rho,
        kappa: r.kappa,
        theta: r.theta,
    })
}

/// `E` values and `η` count of a stability map.
#[derive(Debug, Clone, Copy)]
pub struct MapGrid {
    pub e_min: f64,
    pub e_max: f64,
    pub e_count: usize,
    /// Geometric `η` grid on `[1/M, 10]`.
    pub eta_count: usize,
}

impl Default for MapGrid {
    fn default() -> Self {
        Self {
            e_min: -3.0,
            e_max: 3.0,
            e_count: 61,
            eta_count: 20,
        }
    }
}

pub const MAP_COLUMNS: [&str; 8] = ["E", "eta", "Gamma", "Gamma_tilde", "eta_tilde_E", "eta_E", "delta_minus", "delta_plus"];

pub fn stability_map(profile: VarianceProfile, gamma_exponent: f64, grid: MapGrid) -> Result<Table> {
    if grid.e_count == 0 || grid.eta_count < 2 {
        return Err(LabError::config("grid", "need at least one energy and two eta values"));
    }
    if !(grid.e_min <= grid.e_max && grid.e_min >= -ETA_MAX && grid.e_max <= ETA_MAX) {
        return Err(LabError::config("grid", "energy range must lie in [-10, 10]"));
    }
    let ctx = StabilityContext::new(Arc::new(profile))?;
    let floor = (1.0 / ctx.profile().m_param()).min(ETA_MAX);
    let (dm, dp) = (ctx.spectrum().delta_minus(), ctx.spectrum().delta_plus());
    let mut table = Table::new("stability_map", &MAP_COLUMNS);
    for k in 0..grid.e_count {
        let e = if grid.e_count == 1 {
            grid.e_min
        } else {
            grid.e_min + (grid.e_max - grid.e_min) * k as f64 / (grid.e_count - 1) as f64
        };
        let t = ctx.eta_thresholds(e, gamma_exponent)?;
        for j in 0..grid.eta_count {
            let eta = floor * (ETA_MAX / floor).powf(j as f64 / (grid.eta_count - 1) as f64);
            let p = ctx.gamma_norms(SpectralPoint::new(e, eta)?)?;
            table.push_values(&[e, eta, p.gamma, p.gamma_tilde, t.eta_tilde, t.eta_lower, dm, dp]);
        }
    }
    Ok(table)
}

pub fn stability_map_file(profile_path: &Path, gamma_exponent: f64, grid: MapGrid) -> Result<Table> {
    let loaded = crate::profile_io::read_profile(profile_path)?;
    stability_map(loaded.profile, gamma_exponent, grid)
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolventProbe {
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    #[serde(rename = "E")]
    pub e: f64,
    pub eta: f64,
    pub lambda: f64,
    pub lambda_o: f64,
    pub lambda_d: f64,
    pub theta: f64,
    pub pi: f64,
    pub worst_self_consistent_residual: f64,
    pub worst_schur_residual: f64,
}

/// One real symmetric Gaussian mean-field sample (GOE), index 0.
pub fn resolvent_probe(n: usize, seed: u64, e: f64, eta: f64) -> Result<ResolventProbe> {
    let z = SpectralPoint::new(e, eta)?;
    let profile = Arc::new(mean_field_profile(n)?);
    let spec = Arc::new(EnsembleSpec::real_gaussian(profile, seed));
    let h = sample(&spec, 0);
    let bundle = green(&h, z)?;
    let r = edge_params(z, n as f64);
    let c = control(&bundle, &r);
    let (mut sc, mut schur) = (0.0f64, 0.0f64);
    for i in 0..n {
        let t = schur_terms(&h, &bundle, &r, i)?;
        sc = sc.max(t.residual.norm());
        schur = schur.max(t.schur_residual.norm());
    }
    Ok(ResolventProbe {
        n,
        seed,
        e,
        eta,
        lambda: c.lambda,
        lambda_o: c.lambda_o,
        lambda_d: c.lambda_d,
        theta: c.theta,
        pi: c.pi,
        worst_self_consistent_residual: sc,
        worst_schur_residual: schur,
    })
}
