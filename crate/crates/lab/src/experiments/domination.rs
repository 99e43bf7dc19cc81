//! Stochastic domination probe: empirical `P(X > N^ε Y)` across `N`.

use std::sync::Arc;

use rmt_core::ensemble::sample;
use rmt_core::resolvent::{control, HermitianSpectrum, ResolventBundle};
use rmt_core::sc::{edge_params, SpectralPoint};

use super::RunInput;
use crate::config::Statistic;
use crate::error::Result;
use crate::harness::par_samples;
use crate::report::{ExperimentReport, PassFlag, Table};

/// Exceedances and trials of one sample.
fn count(values: impl Iterator<Item = (f64, f64)>, scale: f64) -> (u64, u64) {
    values.fold((0, 0), |(e, t), (x, y)| (e + u64::from(x > scale * y), t + 1))
}

pub fn run(input: RunInput<'_>) -> Result<ExperimentReport> {
    let cfg = input.config;
    let statistic = cfg.options.statistic.expect("validated");
    let eps = cfg.options.epsilon.expect("validated");
    let mut table = Table::new(
        "points",
        &["N", "M", "threshold_factor", "trials", "exceedances", "probability", "d_eff", "target_probability"],
    );
    let mut notes = vec![format!(
        "statistic {:?}; trials pool {} within each sample",
        statistic,
        match statistic {
            Statistic::Entry => "all upper-triangular entries with s_ij > 0",
            _ => "all grid points",
        }
    )];
    let mut probs = Vec::new();
    for &n in &cfg.n_values {
        let setup = input.setup(n)?;
        let m_param = setup.m_param();
        let scale = (n as f64).powf(eps);
        let points: Vec<SpectralPoint> = match &cfg.z_grid {
            Some(g) => {
                let (es, etas) = g.resolve(n, "z_grid")?;
                es.iter()
                    .flat_map(|&e| etas.iter().map(move |&eta| SpectralPoint::new(e, eta)))
                    .collect::<rmt_core::Result<_>>()?
            }
            None => Vec::new(),
        };
        let refs: Vec<_> = points.iter().map(|&z| edge_params(z, m_param)).collect();
        let profile = setup.profile.clone();
        let counts = par_samples(cfg.samples, |idx| {
            let h = sample(&setup.spec, idx);
            Ok(match statistic {
                Statistic::Entry => count(
                    (0..n).flat_map(|j| (0..j).map(move |i| (i, j))).filter_map(|(i, j)| {
                        let s = profile.entry(i, j);
                        (s > 0.0).then(|| (h.entry(i, j).norm(), s.sqrt()))
                    }),
                    scale,
                ),
                Statistic::Theta => {
                    let eig = HermitianSpectrum::eigenvalues_only(&h)?;
                    count(
                        refs.iter().map(|r| {
                            let m_n = rmt_core::spectral::empirical_stieltjes(&eig, r.z.z());
                            ((m_n - r.m).norm(), 1.0 / (m_param * r.z.eta()))
                        }),
                        scale,
                    )
                }
                Statistic::Lambda => {
                    let spectrum = Arc::new(HermitianSpectrum::decompose(&h)?);
                    count(
                        refs.iter().map(|r| {
                            let bundle = ResolventBundle::new(spectrum.clone(), r.z);
                            (control(&bundle, r).lambda, r.pi_bound)
                        }),
                        scale,
                    )
                }
            })
        })?;
        let (exceed, trials) = counts.iter().fold((0u64, 0u64), |a, b| (a.0 + b.0, a.1 + b.1));
        let p = exceed as f64 / trials as f64;
        let ln_n = (n as f64).ln();
        // With no exceedances the sample only resolves probabilities down to 1/trials.
        let d_eff = if exceed > 0 { -p.ln() / ln_n } else { (trials as f64).ln() / ln_n };
        table.push_values(&[
            n as f64,
            m_param,
            scale,
            trials as f64,
            exceed as f64,
            p,
            d_eff,
            (n as f64).powf(-cfg.options.d),
        ]);
        probs.push(p);
    }
    // Largest increase between consecutive N (in listed order); nonpositive passes.
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by_key(|&k| cfg.n_values[k]);
    let rise = order
        .windows(2)
        .map(|w| probs[w[1]] - probs[w[0]])
        .fold(0.0f64, f64::max);
    if cfg.n_values.len() < 2 {
        notes.push("monotonicity needs at least two N values".into());
    }
    let flags = vec![PassFlag::at_most("nonincreasing", rise, 0.0)];
    Ok(input.report(vec![table], Vec::new(), flags, notes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counting_is_strict() {
        let v = [(1.0, 1.0), (2.0, 1.0), (0.5, 1.0)];
        assert_eq!(count(v.into_iter(), 1.0), (1, 3));
        assert_eq!(count(v.into_iter(), 100.0), (0, 3));
    }
}
