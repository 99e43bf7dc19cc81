//! Stability of the self-consistent equation: the norms
//! `Γ = ‖(1 − m²S)⁻¹‖_{ℓ∞→ℓ∞}` and `Γ̃` (restricted to `e^⊥`), the spectral
//! gaps `δ±` of `S`, and the lower edge `η̃_E` of the spectral domain.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, Side};
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::Rng;

use crate::c64;
use crate::ensemble::{derive_rng, STREAM_AUX};
use crate::profile::VarianceProfile;
use crate::sc::{self, SpectralPoint};
use crate::{Error, Result};

/// Ratio of consecutive points of the downward `η` scan.
pub const ETA_GRID_RATIO: f64 = 1.02;
/// Top of the spectral domain in `η` (and bound on `|E|`).
pub const ETA_MAX: f64 = 10.0;

/// Symmetric eigendecomposition of `S`, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct ProfileSpectrum {
    eigenvalues: Vec<f64>,
    vectors: Mat<f64>,
}

impl ProfileSpectrum {
    pub fn new(profile: &VarianceProfile) -> Result<Self> {
        let evd = profile
            .s()
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::Eigensolver)?;
        let n = profile.n();
        let diag = evd.S().column_vector();
        let eigenvalues = (0..n).map(|k| diag[k]).collect();
        Ok(Self {
            eigenvalues,
            vectors: evd.U().to_owned(),
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `δ₋ = 1 + λ_min(S)`.
    pub fn delta_minus(&self) -> f64 {
        1.0 + self.eigenvalues[0]
    }

    /// `δ₊ = 1 − λ₂(S)` with `λ₂` the second largest eigenvalue. For `N = 1`
    /// the complement of `e` is empty and the gap is reported as 2.
    pub fn delta_plus(&self) -> f64 {
        let n = self.eigenvalues.len();
        if n < 2 {
            2.0
        } else {
            1.0 - self.eigenvalues[n - 2]
        }
    }

    fn inverse_weights(&self, m2: c64) -> Vec<c64> {
        self.eigenvalues
            .iter()
            .map(|&s| (c64::new(1.0, 0.0) - m2 * s).inv())
            .collect()
    }

    /// Row `i` of `B = V diag(w) Vᵀ`.
    fn b_row(&self, weights: &[c64], i: usize) -> Vec<c64> {
        let n = self.eigenvalues.len();
        let v = &self.vectors;
        let mut row = vec![c64::new(0.0, 0.0); n];
        for k in 0..n {
            let a = weights[k] * v[(i, k)];
            let col = v.col(k);
            for (j, r) in row.iter_mut().enumerate() {
                *r += a * col[j];
            }
        }
        row
    }

    /// `B x` for a complex vector.
    fn b_apply(&self, weights: &[c64], x: &[c64]) -> Vec<c64> {
        let n = self.eigenvalues.len();
        let v = &self.vectors;
        let mut out = vec![c64::new(0.0, 0.0); n];
        for k in 0..n {
            let col = v.col(k);
            let proj: c64 = (0..n).map(|j| x[j] * col[j]).sum();
            let a = weights[k] * proj;
            for (j, o) in out.iter_mut().enumerate() {
                *o += a * col[j];
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityParams {
    pub z: SpectralPoint,
    pub gamma: f64,
    /// Norm of `B` restricted to `e^⊥`.
    pub gamma_tilde: f64,
    /// `‖BP‖_{ℓ∞→ℓ∞}`, between `Γ̃` and `2Γ̃`.
    pub gamma_tilde_projected: f64,
    pub delta_minus: f64,
    pub delta_plus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainThresholds {
    pub e: f64,
    /// `η̃_E`; equal to [`ETA_MAX`] when `empty` is set.
    pub eta_tilde: f64,
    /// `η_E` (same scan with `Γ` in place of `Γ̃`).
    pub eta_lower: f64,
    pub gamma_exponent: f64,
    /// The defining inequality already fails at `η = 10`.
    pub empty: bool,
    /// `η̃_E` hit the floor `1/M`.
    pub clamped: bool,
}

/// Profile together with its cached spectrum; every `z` evaluation reuses it.
#[derive(Debug, Clone)]
pub struct StabilityContext {
    profile: Arc<VarianceProfile>,
    spectrum: Arc<ProfileSpectrum>,
}

/// `1/(Mη) ≤ min{M^{−γ}/g³, M^{−2γ}/(g⁴ Im m)}`.
pub fn domain_condition(m_param: f64, eta: f64, im_m: f64, g: f64, gamma_exponent: f64) -> bool {
    let lhs = 1.0 / (m_param * eta);
    let a = m_param.powf(-gamma_exponent) / g.powi(3);
    let b = m_param.powf(-2.0 * gamma_exponent) / (g.powi(4) * im_m);
    lhs <= a.min(b)
}

/// `(Σ_j |b_j|, min_c Σ_j |b_j − c|, Σ_j |b_j − mean(b)|)` for one row of `B`.
///
/// The middle entry is the norm of the row functional restricted to `e^⊥`
/// (the ℓ¹ distance from the row to the constants), so its maximum over rows
/// is exactly the `ℓ∞ → ℓ∞` norm of `B` on `e^⊥`. The last entry is the row
/// norm of `BP` with `P = I − eeᵀ`, an upper bound within a factor 2.
fn row_norms(row: &[c64]) -> (f64, f64, f64) {
    let n = row.len() as f64;
    let mean: c64 = row.iter().sum::<c64>() / n;
    let gamma = row.iter().map(|b| b.norm()).sum();
    let projected = row.iter().map(|b| (b - mean).norm()).sum();
    (gamma, l1_distance_to_constants(row), projected)
}

fn l1_cost(row: &[c64], c: c64) -> f64 {
    row.iter().map(|b| (b - c).norm()).sum()
}

/// `min_c Σ_j |b_j − c|` (geometric median) by the Weiszfeld iteration with
/// the Vardi–Zhang step at data points, started from the coordinate-wise
/// median. Returns the smallest cost visited.
fn l1_distance_to_constants(row: &[c64]) -> f64 {
    const MAX_ITER: usize = 500;
    let n = row.len();
    if n == 0 {
        return 0.0;
    }
    let mut re: Vec<f64> = row.iter().map(|b| b.re).collect();
    let mut im: Vec<f64> = row.iter().map(|b| b.im).collect();
    re.sort_by(f64::total_cmp);
    im.sort_by(f64::total_cmp);
    let mut y = c64::new(re[n / 2], im[n / 2]);
    let mut best = l1_cost(row, y).min(l1_cost(row, c64::new(0.0, 0.0)));
    let scale = row.iter().map(|b| b.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for _ in 0..MAX_ITER {
        let mut num = c64::new(0.0, 0.0);
        let mut den = 0.0;
        let mut pull = c64::new(0.0, 0.0);
        let mut coincident = 0usize;
        for &b in row {
            let d = b - y;
            let r = d.norm();
            if r == 0.0 {
                coincident += 1;
            } else {
                num += b / r;
                den += 1.0 / r;
                pull += d / r;
            }
        }
        if den == 0.0 {
            break;
        }
        let t = num / den;
        let next = if coincident == 0 {
            t
        } else {
            let r = pull.norm();
            if r <= coincident as f64 {
                break;
            }
            let beta = coincident as f64 / r;
            t * (1.0 - beta) + y * beta
        };
        let step = (next - y).norm();
        y = next;
        best = best.min(l1_cost(row, y));
        if step <= 1e-15 * scale {
            break;
        }
    }
    best
}

impl StabilityContext {
    pub fn new(profile: Arc<VarianceProfile>) -> Result<Self> {
        let spectrum = Arc::new(ProfileSpectrum::new(&profile)?);
        Ok(Self { profile, spectrum })
    }

    pub fn profile(&self) -> &Arc<VarianceProfile> {
        &self.profile
    }

    pub fn spectrum(&self) -> &ProfileSpectrum {
        &self.spectrum
    }

    /// `Γ`, `Γ̃` and `δ±` at `z`.
    ///
    /// Translation-invariant profiles have all row norms equal, so one row of
    /// `B` is assembled from the cached eigenvectors; otherwise `B` comes
    /// from a dense LU factorization.
    pub fn gamma_norms(&self, z: SpectralPoint) -> Result<StabilityParams> {
        if self.profile.is_translation_invariant() {
            let m = sc::m_sc(z);
            let weights = self.spectrum.inverse_weights(m * m);
            let row = self.spectrum.b_row(&weights, 0);
            let (gamma, gamma_tilde, projected) = row_norms(&row);
            self.finish(z, gamma, gamma_tilde, projected)
        } else {
            self.gamma_norms_dense(z)
        }
    }

    /// Dense route: `B = (1 − m²S)⁻¹` by LU, then all row norms.
    pub fn gamma_norms_dense(&self, z: SpectralPoint) -> Result<StabilityParams> {
        let b = self.b_matrix(z)?;
        let n = b.nrows();
        let mut gamma = 0.0f64;
        let mut gamma_tilde = 0.0f64;
        let mut projected = 0.0f64;
        let mut row = vec![c64::new(0.0, 0.0); n];
        for i in 0..n {
            for (j, r) in row.iter_mut().enumerate() {
                *r = b[(i, j)];
            }
            let (g, gt, gp) = row_norms(&row);
            gamma = gamma.max(g);
            gamma_tilde = gamma_tilde.max(gt);
            projected = projected.max(gp);
        }
        self.finish(z, gamma, gamma_tilde, projected)
    }

    /// `B = (1 − m(z)²S)⁻¹` as a dense matrix.
    pub fn b_matrix(&self, z: SpectralPoint) -> Result<Mat<c64>> {
        let m = sc::m_sc(z);
        let m2 = m * m;
        let s = self.profile.s();
        let n = self.profile.n();
        let a = Mat::<c64>::from_fn(n, n, |i, j| {
            let d = if i == j { 1.0 } else { 0.0 };
            c64::new(d, 0.0) - m2 * s[(i, j)]
        });
        let b = a.partial_piv_lu().inverse();
        for j in 0..n {
            for i in 0..n {
                let v = b[(i, j)];
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(Error::Singular {
                        re: z.e(),
                        im: z.eta(),
                    });
                }
            }
        }
        Ok(b)
    }

    fn finish(
        &self,
        z: SpectralPoint,
        gamma: f64,
        gamma_tilde: f64,
        gamma_tilde_projected: f64,
    ) -> Result<StabilityParams> {
        if !gamma.is_finite() || !gamma_tilde_projected.is_finite() {
            return Err(Error::Singular {
                re: z.e(),
                im: z.eta(),
            });
        }
        Ok(StabilityParams {
            z,
            gamma,
            gamma_tilde,
            gamma_tilde_projected,
            delta_minus: self.spectrum.delta_minus(),
            delta_plus: self.spectrum.delta_plus(),
        })
    }

    /// Lower estimate of the true restricted norm:
    /// `max ‖Bv‖∞/‖v‖∞` over `trials` test vectors `v ⊥ e`. The first
    /// vectors are projected phase patterns of the heaviest rows of `B`, the
    /// rest are projected Rademacher vectors drawn from `seed`.
    pub fn restricted_norm_lower(&self, z: SpectralPoint, trials: usize, seed: u64) -> f64 {
        let n = self.profile.n();
        if n < 2 {
            return 0.0;
        }
        let m = sc::m_sc(z);
        let weights = self.spectrum.inverse_weights(m * m);
        let project = |v: &mut Vec<c64>| {
            let mean: c64 = v.iter().sum::<c64>() / n as f64;
            for x in v.iter_mut() {
                *x -= mean;
            }
        };
        let ratio = |v: &[c64]| -> f64 {
            let vmax = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
            if vmax == 0.0 {
                return 0.0;
            }
            let bv = self.spectrum.b_apply(&weights, v);
            bv.iter().map(|x| x.norm()).fold(0.0, f64::max) / vmax
        };
        let structured_rows: Vec<usize> = if self.profile.is_translation_invariant() {
            vec![0]
        } else {
            let mut rows: Vec<(usize, f64)> = (0..n)
                .map(|i| (i, row_norms(&self.spectrum.b_row(&weights, i)).2))
                .collect();
            rows.sort_by(|a, b| b.1.total_cmp(&a.1));
            rows.iter().take(4).map(|r| r.0).collect()
        };
        let mut best = 0.0f64;
        let mut used = 0;
        for &i in structured_rows.iter().take(trials) {
            let row = self.spectrum.b_row(&weights, i);
            let mean: c64 = row.iter().sum::<c64>() / n as f64;
            let mut v: Vec<c64> = row
                .iter()
                .map(|b| {
                    let d = b - mean;
                    let r = d.norm();
                    if r > 0.0 {
                        d.conj() / r
                    } else {
                        c64::new(0.0, 0.0)
                    }
                })
                .collect();
            project(&mut v);
            best = best.max(ratio(&v));
            used += 1;
        }
        let mut rng = derive_rng(seed, n as u64, 0, STREAM_AUX);
        for _ in used..trials {
            let mut v: Vec<c64> = (0..n)
                .map(|_| c64::new(if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0))
                .collect();
            project(&mut v);
            best = best.max(ratio(&v));
        }
        best
    }

    /// Downward scan of the grid `10·1.02^{−k}` (followed by `1/M`) for the
    /// lower boundaries `η̃_E` and `η_E` of the spectral domain.
    pub fn eta_thresholds(&self, e: f64, gamma_exponent: f64) -> Result<DomainThresholds> {
        if !(gamma_exponent > 0.0 && gamma_exponent < 0.5) {
            return Err(Error::InvalidArgument(alloc::format!(
                "gamma exponent {gamma_exponent} outside (0, 1/2)"
            )));
        }
        if !(e.abs() <= ETA_MAX) {
            return Err(Error::InvalidSpectralParameter { e, eta: ETA_MAX });
        }
        let m_param = self.profile.m_param();
        let floor = (1.0 / m_param).min(ETA_MAX);
        let mut tilde: Option<f64> = None;
        let mut lower: Option<f64> = None;
        let (mut tilde_open, mut lower_open) = (true, true);
        for eta in eta_grid(floor) {
            let z = SpectralPoint::new(e, eta)?;
            let p = self.gamma_norms(z)?;
            let im_m = sc::m_sc(z).im;
            if tilde_open {
                if domain_condition(m_param, eta, im_m, p.gamma_tilde, gamma_exponent) {
                    tilde = Some(eta);
                } else {
                    tilde_open = false;
                }
            }
            if lower_open {
                if domain_condition(m_param, eta, im_m, p.gamma, gamma_exponent) {
                    lower = Some(eta);
                } else {
                    lower_open = false;
                }
            }
            if !tilde_open && !lower_open {
                break;
            }
        }
        let empty = tilde.is_none();
        let eta_tilde = tilde.unwrap_or(ETA_MAX);
        Ok(DomainThresholds {
            e,
            eta_tilde,
            eta_lower: lower.unwrap_or(ETA_MAX),
            gamma_exponent,
            empty,
            clamped: tilde == Some(floor),
        })
    }

    /// Whether `z` satisfies the defining inequality of `η̃_E` at its own point.
    pub fn satisfies_domain_condition(&self, z: SpectralPoint, gamma_exponent: f64) -> Result<bool> {
        let p = self.gamma_norms(z)?;
        let im_m = sc::m_sc(z).im;
        Ok(domain_condition(
            self.profile.m_param(),
            z.eta(),
            im_m,
            p.gamma_tilde,
            gamma_exponent,
        ))
    }

    /// Points of a uniform `E` grid on `[−10, 10]` times a geometric `η` grid
    /// on `[1/M, 10]` that lie in the domain `η̃_E ≤ η ≤ 10`.
    pub fn domain_grid(&self, gamma_exponent: f64, n_e: usize, n_eta: usize) -> Result<Vec<SpectralPoint>> {
        if n_e < 2 || n_eta < 2 {
            return Err(Error::InvalidArgument(alloc::format!(
                "grid sizes must be at least 2, got {n_e} x {n_eta}"
            )));
        }
        let floor = (1.0 / self.profile.m_param()).min(ETA_MAX);
        let es: Vec<f64> = (0..n_e)
            .map(|k| -ETA_MAX + 2.0 * ETA_MAX * k as f64 / (n_e - 1) as f64)
            .collect();
        let etas: Vec<f64> = (0..n_eta)
            .map(|k| floor * (ETA_MAX / floor).powf(k as f64 / (n_eta - 1) as f64))
            .collect();
        self.filter_domain(&es, &etas, gamma_exponent)
    }

    /// Keeps the points of `es × etas` with `η ≥ η̃_E` that also satisfy the
    /// defining inequality at their own location.
    pub fn filter_domain(&self, es: &[f64], etas: &[f64], gamma_exponent: f64) -> Result<Vec<SpectralPoint>> {
        let floor = 1.0 / self.profile.m_param();
        let mut out = Vec::new();
        for &e in es {
            let t = self.eta_thresholds(e, gamma_exponent)?;
            if t.empty {
                continue;
            }
            for &eta in etas {
                if eta < t.eta_tilde || eta < floor || eta > ETA_MAX {
                    continue;
                }
                let z = SpectralPoint::new(e, eta)?;
                if self.satisfies_domain_condition(z, gamma_exponent)? {
                    out.push(z);
                }
            }
        }
        Ok(out)
    }
}

/// `10, 10/1.02, …` down to (and ending exactly at) `floor`.
pub fn eta_grid(floor: f64) -> Vec<f64> {
    let mut grid = Vec::new();
    let mut eta = ETA_MAX;
    while eta > floor {
        grid.push(eta);
        eta /= ETA_GRID_RATIO;
    }
    grid.push(floor);
    grid
}

pub fn gamma_norms(profile: &Arc<VarianceProfile>, z: SpectralPoint) -> Result<StabilityParams> {
    StabilityContext::new(profile.clone())?.gamma_norms(z)
}

/// `(δ₋, δ₊)`.
pub fn spectral_gaps(profile: &VarianceProfile) -> Result<(f64, f64)> {
    let s = ProfileSpectrum::new(profile)?;
    Ok((s.delta_minus(), s.delta_plus()))
}

fn log_n(n: usize) -> f64 {
    (n as f64).ln().max(1.0)
}

/// `1/√(κ+η)`: the shape of the lower bound on `Γ`.
pub fn gamma_lower_shape(z: SpectralPoint) -> f64 {
    1.0 / (sc::kappa(z.e()) + z.eta()).sqrt()
}

/// `log N / min{η + E², θ}` (with `log N` floored at 1).
pub fn gamma_upper_shape(n: usize, z: SpectralPoint) -> f64 {
    let (e, eta) = (z.e(), z.eta());
    log_n(n) / (eta + e * e).min(sc::theta(e, eta))
}

/// `log N / min{δ₋ + η + E², θ}`.
pub fn gamma_gap_shape(n: usize, z: SpectralPoint, delta_minus: f64) -> f64 {
    let (e, eta) = (z.e(), z.eta());
    log_n(n) / (delta_minus + eta + e * e).min(sc::theta(e, eta))
}

/// `log N / min{δ₋ + η + E², δ₊ + θ}`.
pub fn gamma_tilde_shape(n: usize, z: SpectralPoint, delta_minus: f64, delta_plus: f64) -> f64 {
    let (e, eta) = (z.e(), z.eta());
    log_n(n) / (delta_minus + eta + e * e).min(delta_plus + sc::theta(e, eta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{band_profile_with_shape, mean_field_profile, mixture_profile, ProfileShape};

    fn pt(e: f64, eta: f64) -> SpectralPoint {
        SpectralPoint::new(e, eta).unwrap()
    }

    fn band(l: usize, w: usize) -> VarianceProfile {
        band_profile_with_shape(1, l, w, ProfileShape::Box).unwrap()
    }

    #[test]
    fn mean_field_closed_form() {
        let n = 40;
        let ctx = StabilityContext::new(Arc::new(mean_field_profile(n).unwrap())).unwrap();
        for &(e, eta) in &[(0.0, 0.1), (1.9, 0.01), (-2.5, 0.3), (0.3, 5.0)] {
            let z = pt(e, eta);
            let m = sc::m_sc(z);
            let c = m * m / (c64::new(1.0, 0.0) - m * m);
            let nf = n as f64;
            let expected = (c64::new(1.0, 0.0) + c / nf).norm() + (nf - 1.0) * c.norm() / nf;
            let p = ctx.gamma_norms(z).unwrap();
            assert!((p.gamma - expected).abs() < 1e-10 * expected, "{} vs {expected}", p.gamma);
            assert!((p.gamma_tilde - 1.0).abs() < 1e-10);
            let projected = 2.0 * (nf - 1.0) / nf;
            assert!((p.gamma_tilde_projected - projected).abs() < 1e-10);
            let d = ctx.gamma_norms_dense(z).unwrap();
            assert!((d.gamma - expected).abs() < 1e-10 * expected);
            assert!((d.gamma_tilde - 1.0).abs() < 1e-10);
        }
        assert!((ctx.spectrum().delta_minus() - 1.0).abs() < 1e-12);
        assert!((ctx.spectrum().delta_plus() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn b_maps_e_to_scaled_e() {
        let profile = Arc::new(mixture_profile(&band(32, 3), &mean_field_profile(32).unwrap(), 0.3).unwrap());
        let ctx = StabilityContext::new(profile).unwrap();
        let z = pt(0.7, 0.05);
        let b = ctx.b_matrix(z).unwrap();
        let m = sc::m_sc(z);
        let target = (c64::new(1.0, 0.0) - m * m).inv();
        for i in 0..32 {
            let s: c64 = (0..32).map(|j| b[(i, j)]).sum();
            assert!((s - target).norm() < 1e-10);
        }
    }

    #[test]
    fn row_path_matches_dense_path() {
        let ctx = StabilityContext::new(Arc::new(band(64, 5))).unwrap();
        for &(e, eta) in &[(0.0, 0.01), (1.99, 0.001), (2.3, 0.1), (-1.0, 1.0)] {
            let a = ctx.gamma_norms(pt(e, eta)).unwrap();
            let b = ctx.gamma_norms_dense(pt(e, eta)).unwrap();
            assert!((a.gamma - b.gamma).abs() < 1e-8 * b.gamma);
            assert!((a.gamma_tilde - b.gamma_tilde).abs() < 1e-8 * b.gamma_tilde);
        }
    }

    #[test]
    fn surrogate_brackets_restricted_norm() {
        let ctx = StabilityContext::new(Arc::new(band(48, 4))).unwrap();
        for &(e, eta) in &[(0.0, 0.02), (1.9, 0.01), (0.5, 0.5)] {
            let z = pt(e, eta);
            let p = ctx.gamma_norms(z).unwrap();
            let lower = ctx.restricted_norm_lower(z, 100, 7);
            assert!(lower <= p.gamma_tilde * (1.0 + 1e-9));
            assert!(p.gamma_tilde <= p.gamma_tilde_projected * (1.0 + 1e-12));
            assert!(p.gamma_tilde_projected <= 2.0 * p.gamma_tilde * (1.0 + 1e-9));
            assert!(p.gamma_tilde <= p.gamma * (1.0 + 1e-12));
        }
    }

    #[test]
    fn gaps_of_band_profiles() {
        // Box band on the cycle: eigenvalues are Dirichlet-kernel values.
        let (l, w) = (40, 3);
        let (dm, dp) = spectral_gaps(&band(l, w)).unwrap();
        let m = (2 * w + 1) as f64;
        let lam = |k: usize| {
            let t = 2.0 * core::f64::consts::PI * k as f64 / l as f64;
            (1..=w).map(|d| 2.0 * (d as f64 * t).cos()).sum::<f64>() / m + 1.0 / m
        };
        let second = (1..l).map(lam).fold(f64::NEG_INFINITY, f64::max);
        let min = (0..l).map(lam).fold(f64::INFINITY, f64::min);
        assert!((dp - (1.0 - second)).abs() < 1e-12);
        assert!((dm - (1.0 + min)).abs() < 1e-12);
    }

    #[test]
    fn single_site_profile() {
        let p = mean_field_profile(1).unwrap();
        let (dm, dp) = spectral_gaps(&p).unwrap();
        assert_eq!(dm, 2.0);
        assert_eq!(dp, 2.0);
    }

    #[test]
    fn thresholds_defining_property() {
        let ctx = StabilityContext::new(Arc::new(band(128, 8))).unwrap();
        let m_param = ctx.profile().m_param();
        for &e in &[0.0, 1.0, 1.95, 2.5] {
            let t = ctx.eta_thresholds(e, 0.1).unwrap();
            assert!(!t.empty);
            assert!(t.eta_tilde >= 1.0 / m_param);
            assert!(t.eta_tilde <= t.eta_lower);
            assert!(ctx.satisfies_domain_condition(pt(e, t.eta_tilde), 0.1).unwrap());
            if !t.clamped {
                let below = pt(e, t.eta_tilde / ETA_GRID_RATIO);
                assert!(!ctx.satisfies_domain_condition(below, 0.1).unwrap());
            }
        }
    }

    #[test]
    fn thresholds_reject_bad_exponent() {
        let ctx = StabilityContext::new(Arc::new(mean_field_profile(8).unwrap())).unwrap();
        assert!(ctx.eta_thresholds(0.0, 0.5).is_err());
        assert!(ctx.eta_thresholds(0.0, 0.0).is_err());
        assert!(ctx.eta_thresholds(11.0, 0.1).is_err());
    }

    #[test]
    fn domain_grid_points_are_valid() {
        let ctx = StabilityContext::new(Arc::new(mean_field_profile(200).unwrap())).unwrap();
        let grid = ctx.domain_grid(0.1, 11, 30).unwrap();
        assert!(!grid.is_empty());
        for z in &grid {
            assert!(z.eta() >= 1.0 / 200.0);
            assert!(ctx.satisfies_domain_condition(*z, 0.1).unwrap());
        }
        assert!(ctx.domain_grid(0.1, 1, 30).is_err());
    }

    #[test]
    fn geometric_median_is_a_minimum() {
        let mut rng = derive_rng(3, 0, 0, STREAM_AUX);
        for _ in 0..20 {
            let row: Vec<c64> = (0..15)
                .map(|_| c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let best = l1_distance_to_constants(&row);
            // Oracle: fine grid over the bounding box.
            let mut grid_min = f64::INFINITY;
            for a in 0..=400 {
                for b in 0..=400 {
                    let c = c64::new(-1.0 + a as f64 / 200.0, -1.0 + b as f64 / 200.0);
                    grid_min = grid_min.min(l1_cost(&row, c));
                }
            }
            assert!(best <= grid_min + 1e-12);
            assert!(grid_min - best < 15.0 * 0.01);
        }
        let clustered = [c64::new(2.0, 0.0), c64::new(0.1, 0.1), c64::new(0.1, 0.1), c64::new(0.1, 0.1)];
        assert!((l1_distance_to_constants(&clustered) - c64::new(1.9, -0.1).norm()).abs() < 1e-14);
    }

    #[test]
    fn eta_grid_shape() {
        let g = eta_grid(0.01);
        assert_eq!(g[0], 10.0);
        assert_eq!(*g.last().unwrap(), 0.01);
        assert!(g.windows(2).all(|w| w[0] > w[1]));
    }
}
