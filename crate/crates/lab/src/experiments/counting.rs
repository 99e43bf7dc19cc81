//! Counting function: `sup_E |n_N(E) − n(E)|` against the control parameter `Y`.

use rmt_core::ensemble::sample;
use rmt_core::resolvent::HermitianSpectrum;
use rmt_core::spectral::{control_y, counting_sup_error};
use rmt_core::stability::spectral_gaps;
use rmt_core::stats::{median, quantile};

use super::{fit, RunInput};
use crate::error::Result;
use crate::harness::par_samples;
use crate::report::{ExperimentReport, PassFlag, Table};

pub fn run(input: RunInput<'_>) -> Result<ExperimentReport> {
    let cfg = input.config;
    let c = cfg.options.slack;
    let mut table = Table::new(
        "points",
        &["N", "M", "delta_plus", "Y", "median_sup_error", "q90_sup_error", "bound_y_log_n", "bound_log_n_over_m"],
    );
    let mut flags = Vec::new();
    let (mut ns, mut meds) = (Vec::new(), Vec::new());
    for &n in &cfg.n_values {
        let setup = input.setup(n)?;
        let m_param = setup.m_param();
        let (_, delta_plus) = spectral_gaps(&setup.profile)?;
        let y = control_y(m_param, delta_plus);
        let errors = par_samples(cfg.samples, |idx| {
            let h = sample(&setup.spec, idx);
            Ok(counting_sup_error(&HermitianSpectrum::eigenvalues_only(&h)?))
        })?;
        let med = median(&errors);
        let bound_y = c * y * setup.log_n();
        let bound_m = c * setup.log_n() / m_param;
        table.push_values(&[n as f64, m_param, delta_plus, y, med, quantile(&errors, 0.9), bound_y, bound_m]);
        flags.push(PassFlag::at_most(format!("sup_error_y_N{n}"), med, bound_y));
        flags.push(PassFlag::at_most(format!("sup_error_log_n_over_m_N{n}"), med, bound_m));
        ns.push(n as f64);
        meds.push(med);
    }
    let fitted = if ns.len() >= 2 {
        vec![fit("sup_error_slope".into(), &ns, &meds)]
    } else {
        Vec::new()
    };
    Ok(input.report(vec![table], fitted, flags, Vec::new()))
}
