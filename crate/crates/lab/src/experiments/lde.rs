//! Large deviation probe for linear, bilinear and off-diagonal quadratic forms
//! of i.i.d. unit-variance variables.

use rmt_core::ensemble::{derive_rng, EntryLaw, STREAM_AUX};
use rmt_core::stats::{median, quantile};

use super::{fit, RunInput};
use crate::error::Result;
use crate::harness::par_samples;
use crate::report::{ExperimentReport, PassFlag, Table};

pub const QUANTILE: f64 = 0.99;
/// Growth exponent the quantiles must stay below.
pub const GROWTH_LIMIT: f64 = 0.1;
/// Standard normal 0.99 quantile and its tolerance.
pub const GAUSSIAN_Q99: f64 = 2.33;
pub const GAUSSIAN_TOLERANCE: f64 = 0.15;
pub const GAUSSIAN_MIN_TRIALS: usize = 10_000;
const STREAM_SECOND: u64 = STREAM_AUX + 1;

/// Normalized forms for one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Forms {
    /// `Σ b_i X_i / ‖b‖` with `b_i = 1/√N` (signed).
    pub linear: f64,
    /// `|Σ_ij a_ij X_i Y_j| / ‖a‖` with `a_ij = 1/N`.
    pub bilinear: f64,
    /// `|Σ_{i≠j} a_ij X_i X_j| / ‖a‖_{i≠j}` with `a_ij = 1/N`.
    pub offdiag: f64,
}

/// The constant coefficients reduce every form to sums of `X` and `X²`.
pub fn forms(x: &[f64], y: &[f64]) -> Forms {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    Forms {
        linear: sx / n.sqrt(),
        bilinear: (sx * sy / n).abs(),
        offdiag: if n > 1.0 { ((sx * sx - sxx) / n).abs() / ((n * (n - 1.0)).sqrt() / n) } else { 0.0 },
    }
}

/// `|Σ b_i X_i| / ‖b‖` for general `b`.
pub fn linear_form(b: &[f64], x: &[f64]) -> f64 {
    let norm: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    b.iter().zip(x).map(|(b, x)| b * x).sum::<f64>().abs() / norm
}

fn draw(law: EntryLaw, seed: u64, n: usize, idx: u64, stream: u64) -> Vec<f64> {
    let mut rng = derive_rng(seed, n as u64, idx, stream);
    (0..n).map(|_| law.draw(&mut rng)).collect()
}

pub fn run(input: RunInput<'_>) -> Result<ExperimentReport> {
    let cfg = input.config;
    let law = cfg.ensemble.entry_law();
    let mut table = Table::new(
        "points",
        &["N", "trials", "q99_linear_signed", "q99_linear_abs", "q99_bilinear", "q99_offdiag", "median_offdiag"],
    );
    let mut flags = Vec::new();
    let (mut ns, mut q_lin, mut q_bil, mut q_off) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for &n in &cfg.n_values {
        let f = par_samples(cfg.samples, |idx| {
            let x = draw(law, input.seed, n, idx, STREAM_AUX);
            let y = draw(law, input.seed, n, idx, STREAM_SECOND);
            Ok(forms(&x, &y))
        })?;
        let signed: Vec<f64> = f.iter().map(|t| t.linear).collect();
        let abs: Vec<f64> = signed.iter().map(|v| v.abs()).collect();
        let bil: Vec<f64> = f.iter().map(|t| t.bilinear).collect();
        let off: Vec<f64> = f.iter().map(|t| t.offdiag).collect();
        let q_signed = quantile(&signed, QUANTILE);
        let row = [
            n as f64,
            cfg.samples as f64,
            q_signed,
            quantile(&abs, QUANTILE),
            quantile(&bil, QUANTILE),
            quantile(&off, QUANTILE),
            median(&off),
        ];
        table.push_values(&row);
        if law == EntryLaw::Gaussian && cfg.samples >= GAUSSIAN_MIN_TRIALS {
            flags.push(PassFlag::within(
                format!("gaussian_quantile_N{n}"),
                q_signed,
                GAUSSIAN_Q99 - GAUSSIAN_TOLERANCE,
                GAUSSIAN_Q99 + GAUSSIAN_TOLERANCE,
            ));
        }
        ns.push(n as f64);
        q_lin.push(row[3]);
        q_bil.push(row[4]);
        q_off.push(row[5]);
    }
    let mut fitted = Vec::new();
    if ns.len() >= 2 {
        for (name, ys) in [("linear", &q_lin), ("bilinear", &q_bil), ("offdiag", &q_off)] {
            let f = fit(format!("q99_{name}_growth"), &ns, ys);
            flags.push(PassFlag::at_most(format!("growth_{name}"), f.value, GROWTH_LIMIT));
            fitted.push(f);
        }
    }
    Ok(input.report(vec![table], fitted, flags, Vec::new()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_coefficient_reduces_to_one_variable() {
        let x = [-1.7, 0.3, 2.2];
        assert_eq!(linear_form(&[0.0, 0.0, 5.0], &x), 2.2);
        assert_eq!(linear_form(&[-3.0, 0.0, 0.0], &x), 1.7);
    }

    #[test]
    fn constant_coefficient_forms_match_direct_sums() {
        let x = [0.5, -1.0, 2.0, 0.25];
        let y = [1.0, 1.5, -0.5, 3.0];
        let n = 4.0;
        let f = forms(&x, &y);
        let mut bil = 0.0;
        let mut off = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                bil += x[i] * y[j] / n;
                if i != j {
                    off += x[i] * x[j] / n;
                }
            }
        }
        let off_norm = (12.0f64 / 16.0).sqrt();
        assert!((f.bilinear - bil.abs()).abs() < 1e-12);
        assert!((f.offdiag - off.abs() / off_norm).abs() < 1e-12);
        assert!((f.linear - x.iter().sum::<f64>() / 2.0).abs() < 1e-12);
    }
}
