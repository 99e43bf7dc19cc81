//! Green function `G(z) = (H − z)⁻¹` of a sample and the exactly computable
//! quantities built from it: minors `G^{(T)}`, the control parameters
//! `Λ_o, Λ_d, Θ`, the Schur complement error terms `A_i, Z_i, Υ_i` and
//! weighted fluctuation averages.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use faer::{Mat, MatRef, Side};
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::c64;
use crate::ensemble::{derive_rng, SampleMatrix, STREAM_RESAMPLE};
use crate::sc::{ScReference, SpectralPoint};
use crate::{Error, Result};

/// Pivot threshold of the minor recursion.
pub const PIVOT_THRESHOLD: f64 = 1e-14;

const ZERO: c64 = c64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone)]
pub enum Eigenvectors {
    Real(Mat<f64>),
    Complex(Mat<c64>),
}

/// `H = U diag(λ) U*` with `λ` ascending. Computed once per sample and reused
/// for every spectral parameter.
#[derive(Debug, Clone)]
pub struct HermitianSpectrum {
    eigenvalues: Vec<f64>,
    vectors: Eigenvectors,
}

fn real_spectrum(a: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let evd = a.self_adjoint_eigen(Side::Lower).map_err(|_| Error::Eigensolver)?;
    let d = evd.S().column_vector();
    Ok(((0..a.nrows()).map(|k| d[k]).collect(), evd.U().to_owned()))
}

impl HermitianSpectrum {
    /// Real symmetric samples use the real eigensolver.
    pub fn decompose(h: &SampleMatrix) -> Result<Self> {
        if h.is_real() {
            let (eigenvalues, u) = real_spectrum(h.real_part().as_ref())?;
            return Ok(Self {
                eigenvalues,
                vectors: Eigenvectors::Real(u),
            });
        }
        let evd = h.h().self_adjoint_eigen(Side::Lower).map_err(|_| Error::Eigensolver)?;
        let d = evd.S().column_vector();
        let eigenvalues = (0..h.n()).map(|k| d[k].re).collect();
        Ok(Self {
            eigenvalues,
            vectors: Eigenvectors::Complex(evd.U().to_owned()),
        })
    }

    /// Eigenvalues only (no vectors), ascending.
    pub fn eigenvalues_only(h: &SampleMatrix) -> Result<Vec<f64>> {
        if h.is_real() {
            h.real_part()
                .self_adjoint_eigenvalues(Side::Lower)
                .map_err(|_| Error::Eigensolver)
        } else {
            h.h()
                .self_adjoint_eigenvalues(Side::Lower)
                .map_err(|_| Error::Eigensolver)
        }
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vectors(&self) -> &Eigenvectors {
        &self.vectors
    }

    fn weights(&self, z: c64) -> Vec<c64> {
        self.eigenvalues
            .iter()
            .map(|&l| (c64::new(l, 0.0) - z).inv())
            .collect()
    }

    /// `G(z) = U diag(1/(λ_k − z)) U*`.
    pub fn green(&self, z: c64) -> Mat<c64> {
        let w = self.weights(z);
        let n = self.n();
        match &self.vectors {
            Eigenvectors::Real(u) => {
                let ur = Mat::from_fn(n, n, |i, k| u[(i, k)] * w[k].re);
                let ui = Mat::from_fn(n, n, |i, k| u[(i, k)] * w[k].im);
                let gr = &ur * u.transpose();
                let gi = &ui * u.transpose();
                Mat::from_fn(n, n, |i, j| c64::new(gr[(i, j)], gi[(i, j)]))
            }
            Eigenvectors::Complex(u) => {
                let us = Mat::from_fn(n, n, |i, k| u[(i, k)] * w[k]);
                &us * u.adjoint()
            }
        }
    }

    /// `G_ii(z)` for all `i`, in `O(N²)`.
    pub fn green_diagonal(&self, z: c64) -> Vec<c64> {
        let w = self.weights(z);
        let n = self.n();
        let mut out = vec![ZERO; n];
        match &self.vectors {
            Eigenvectors::Real(u) => {
                for k in 0..n {
                    let col = u.col(k);
                    for (i, o) in out.iter_mut().enumerate() {
                        *o += w[k] * (col[i] * col[i]);
                    }
                }
            }
            Eigenvectors::Complex(u) => {
                for k in 0..n {
                    let col = u.col(k);
                    for (i, o) in out.iter_mut().enumerate() {
                        *o += w[k] * col[i].norm_sqr();
                    }
                }
            }
        }
        out
    }

    /// `m_N(z) = N⁻¹ Σ_k 1/(λ_k − z)`.
    pub fn stieltjes(&self, z: c64) -> c64 {
        crate::spectral::empirical_stieltjes(&self.eigenvalues, z)
    }
}

/// `G(z)` for one sample together with `m_N(z) = N⁻¹ tr G`.
#[derive(Debug, Clone)]
pub struct ResolventBundle {
    spectrum: Arc<HermitianSpectrum>,
    z: SpectralPoint,
    g: Mat<c64>,
    m_n: c64,
}

impl ResolventBundle {
    pub fn new(spectrum: Arc<HermitianSpectrum>, z: SpectralPoint) -> Self {
        let g = spectrum.green(z.z());
        let n = g.nrows();
        let m_n = (0..n).map(|i| g[(i, i)]).sum::<c64>() / n as f64;
        Self { spectrum, z, g, m_n }
    }

    pub fn spectrum(&self) -> &Arc<HermitianSpectrum> {
        &self.spectrum
    }

    pub fn eigenvalues(&self) -> &[f64] {
        self.spectrum.eigenvalues()
    }

    pub fn z(&self) -> SpectralPoint {
        self.z
    }

    pub fn g(&self) -> MatRef<'_, c64> {
        self.g.as_ref()
    }

    pub fn m_n(&self) -> c64 {
        self.m_n
    }

    pub fn n(&self) -> usize {
        self.g.nrows()
    }

    /// `‖(H − z)G − I‖_max`.
    pub fn residual(&self, h: &SampleMatrix) -> f64 {
        let n = self.n();
        let z = self.z.z();
        let hz = Mat::from_fn(n, n, |i, j| if i == j { h.entry(i, j) - z } else { h.entry(i, j) });
        let prod = &hz * &self.g;
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let target = if i == j { c64::new(1.0, 0.0) } else { ZERO };
                worst = worst.max((prod[(i, j)] - target).norm());
            }
        }
        worst
    }
}

/// Decomposes `h` and evaluates `G` at `z`.
pub fn green(h: &SampleMatrix, z: SpectralPoint) -> Result<ResolventBundle> {
    let spectrum = Arc::new(HermitianSpectrum::decompose(h)?);
    Ok(ResolventBundle::new(spectrum, z))
}

/// `G^{(T)}` on the indices outside `T` (ascending).
#[derive(Debug, Clone)]
pub struct Minor {
    indices: Vec<usize>,
    g: Mat<c64>,
}

impl Minor {
    /// Remaining global indices, ascending.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn matrix(&self) -> MatRef<'_, c64> {
        self.g.as_ref()
    }

    /// Entry by global indices; `None` if either index was removed.
    pub fn get(&self, i: usize, j: usize) -> Option<c64> {
        let a = self.indices.binary_search(&i).ok()?;
        let b = self.indices.binary_search(&j).ok()?;
        Some(self.g[(a, b)])
    }
}

/// `G^{(T)}` by the recursion `G^{(Tk)}_ij = G^{(T)}_ij − G^{(T)}_ik G^{(T)}_kj / G^{(T)}_kk`,
/// removing the indices of `t` in the given order.
pub fn minor(bundle: &ResolventBundle, t: &[usize]) -> Result<Minor> {
    minor_of(bundle.g(), t)
}

pub fn minor_of(g: MatRef<'_, c64>, t: &[usize]) -> Result<Minor> {
    let n = g.nrows();
    if t.len() >= n {
        return Err(Error::InvalidArgument(format!(
            "cannot remove {} of {n} indices",
            t.len()
        )));
    }
    let mut active = vec![true; n];
    for &k in t {
        if k >= n {
            return Err(Error::IndexOutOfRange { index: k, n });
        }
        if !active[k] {
            return Err(Error::InvalidArgument(format!("index {k} repeated")));
        }
        active[k] = false;
    }
    active.iter_mut().for_each(|a| *a = true);
    let mut w = g.to_owned();
    let mut col = vec![ZERO; n];
    let mut row = vec![ZERO; n];
    for &k in t {
        let pivot = w[(k, k)];
        if pivot.norm() < PIVOT_THRESHOLD {
            return Err(Error::PivotDegeneracy {
                index: k,
                value: pivot.norm(),
            });
        }
        active[k] = false;
        for i in 0..n {
            col[i] = w[(i, k)];
            row[i] = w[(k, i)] / pivot;
        }
        for j in (0..n).filter(|&j| active[j]) {
            let r = row[j];
            for i in (0..n).filter(|&i| active[i]) {
                w[(i, j)] -= col[i] * r;
            }
        }
    }
    let indices: Vec<usize> = (0..n).filter(|&i| active[i]).collect();
    let g = Mat::from_fn(indices.len(), indices.len(), |a, b| w[(indices[a], indices[b])]);
    Ok(Minor { indices, g })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlParams {
    /// `Λ_o = max_{i≠j} |G_ij|`.
    pub lambda_o: f64,
    /// `Λ_d = max_i |G_ii − m|`.
    pub lambda_d: f64,
    pub lambda: f64,
    /// `Θ = |[v]|`.
    pub theta: f64,
    /// `v_i = G_ii − m`.
    pub v: Vec<c64>,
    pub v_avg: c64,
    /// `Π(z)` of the reference.
    pub pi: f64,
}

pub fn control(bundle: &ResolventBundle, reference: &ScReference) -> ControlParams {
    let g = bundle.g();
    let n = bundle.n();
    let m = reference.m;
    let mut lambda_o = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                lambda_o = lambda_o.max(g[(i, j)].norm());
            }
        }
    }
    let v: Vec<c64> = (0..n).map(|i| g[(i, i)] - m).collect();
    let lambda_d = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let v_avg = v.iter().sum::<c64>() / n as f64;
    ControlParams {
        lambda_o,
        lambda_d,
        lambda: lambda_o.max(lambda_d),
        theta: v_avg.norm(),
        v,
        v_avg,
        pi: reference.pi_bound,
    }
}

/// Diagonal-only control parameters `(Λ_d, Θ)` from `G_ii`, for sweeps that
/// do not need the full Green function.
pub fn diagonal_control(diag: &[c64], m: c64) -> (f64, f64) {
    let n = diag.len() as f64;
    let lambda_d = diag.iter().map(|g| (g - m).norm()).fold(0.0, f64::max);
    let avg = diag.iter().map(|g| g - m).sum::<c64>() / n;
    (lambda_d, avg.norm())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchurTerms {
    pub i: usize,
    /// `A_i = Σ_k s_ik G_ik G_ki / G_ii`.
    pub a_i: c64,
    /// `Z_i = Σ^{(i)}_{kl} h_ik G^{(i)}_kl h_li − Σ^{(i)}_k s_ik G^{(i)}_kk`.
    pub z_i: c64,
    /// `Υ_i = A_i + h_ii − Z_i`.
    pub upsilon_i: c64,
    /// `[−Σ_k s_ik v_k + Υ_i] − [1/(m + v_i) − 1/m]`.
    pub residual: c64,
    /// `Σ^{(i)}_{kl} h_ik G^{(i)}_kl h_li`.
    pub quadratic_form: c64,
    /// `1/G_ii − (h_ii − z − quadratic_form)`.
    pub schur_residual: c64,
}

/// Schur complement terms at index `i`, with `G^{(i)}` from [`minor`].
pub fn schur_terms(
    h: &SampleMatrix,
    bundle: &ResolventBundle,
    reference: &ScReference,
    i: usize,
) -> Result<SchurTerms> {
    let n = bundle.n();
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    let g = bundle.g();
    let s = h.profile().s();
    let m = reference.m;
    let z = bundle.z().z();
    let gi = minor(bundle, &[i])?;
    let idx = gi.indices();
    let gm = gi.matrix();
    let mut quad = ZERO;
    for (b, &l) in idx.iter().enumerate() {
        let h_li = h.entry(l, i);
        let mut inner = ZERO;
        for (a, &k) in idx.iter().enumerate() {
            inner += h.entry(i, k) * gm[(a, b)];
        }
        quad += inner * h_li;
    }
    let p_part: c64 = idx
        .iter()
        .enumerate()
        .map(|(a, &k)| gm[(a, a)] * s[(i, k)])
        .sum();
    let g_ii = g[(i, i)];
    let a_i = (0..n).map(|k| g[(i, k)] * g[(k, i)] * s[(i, k)]).sum::<c64>() / g_ii;
    let z_i = quad - p_part;
    let h_ii = h.entry(i, i);
    let upsilon_i = a_i + h_ii - z_i;
    let sv: c64 = (0..n).map(|k| (g[(k, k)] - m) * s[(i, k)]).sum();
    let v_i = g_ii - m;
    let residual = (upsilon_i - sv) - ((m + v_i).inv() - m.inv());
    let schur_residual = g_ii.inv() - (h_ii - z - quad);
    Ok(SchurTerms {
        i,
        a_i,
        z_i,
        upsilon_i,
        residual,
        quadratic_form: quad,
        schur_residual,
    })
}

/// `G_ij + G_ii Σ^{(i)}_k h_ik G^{(i)}_kj` for `i ≠ j` (zero in exact
/// arithmetic).
pub fn resolvent_identity_defect(h: &SampleMatrix, bundle: &ResolventBundle, i: usize, j: usize) -> Result<c64> {
    let n = bundle.n();
    if i >= n || j >= n || i == j {
        return Err(Error::InvalidArgument(format!(
            "need distinct indices below {n}, got ({i}, {j})"
        )));
    }
    let gi = minor(bundle, &[i])?;
    let b = gi.indices().binary_search(&j).expect("j survives the minor");
    let sum: c64 = gi
        .indices()
        .iter()
        .enumerate()
        .map(|(a, &k)| h.entry(i, k) * gi.matrix()[(a, b)])
        .sum();
    let g = bundle.g();
    Ok(g[(i, j)] + g[(i, i)] * sum)
}

/// `Q_k(1/G_kk) = h_kk − Z_k` for every `k`, using
/// `Q_k(1/G_kk) = 1/G_kk + z + Σ_{i≠k} s_ki G^{(k)}_ii` and
/// `G^{(k)}_ii = G_ii − G_ik G_ki / G_kk` (`O(N²)` overall).
pub fn q_inverse(h: &SampleMatrix, bundle: &ResolventBundle) -> Result<Vec<c64>> {
    let g = bundle.g();
    let s = h.profile().s();
    let n = bundle.n();
    let z = bundle.z().z();
    (0..n)
        .map(|k| {
            let gkk = g[(k, k)];
            if gkk.norm() < PIVOT_THRESHOLD {
                return Err(Error::PivotDegeneracy {
                    index: k,
                    value: gkk.norm(),
                });
            }
            let mut p = ZERO;
            for i in (0..n).filter(|&i| i != k) {
                let gi = g[(i, i)] - g[(i, k)] * g[(k, i)] / gkk;
                p += gi * s[(k, i)];
            }
            Ok(gkk.inv() + z + p)
        })
        .collect()
}

/// `Υ_i` for every `i` through [`q_inverse`].
pub fn upsilon_all(h: &SampleMatrix, bundle: &ResolventBundle) -> Result<Vec<c64>> {
    let q = q_inverse(h, bundle)?;
    let g = bundle.g();
    let s = h.profile().s();
    let n = bundle.n();
    Ok((0..n)
        .map(|i| {
            let a_i = (0..n).map(|k| g[(i, k)] * g[(k, i)] * s[(i, k)]).sum::<c64>() / g[(i, i)];
            a_i + q[i]
        })
        .collect())
}

/// Checks `|t_ik| ≤ 1/M` and `Σ_k |t_ik| ≤ 1` (with `1e−12` slack).
pub fn validate_weights(t: MatRef<'_, f64>, m_param: f64) -> Result<()> {
    const SLACK: f64 = 1e-12;
    let cap = 1.0 / m_param;
    for i in 0..t.nrows() {
        let mut row = 0.0;
        for k in 0..t.ncols() {
            let a = t[(i, k)].abs();
            if !a.is_finite() || a > cap * (1.0 + SLACK) {
                return Err(Error::WeightCondition(format!(
                    "|t[{i},{k}]| = {a:e} exceeds 1/M = {cap:e}"
                )));
            }
            row += a;
        }
        if row > 1.0 + SLACK {
            return Err(Error::WeightCondition(format!(
                "row {i} has absolute sum {row} > 1"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluctAvgOptions {
    /// Resamples of row/column `k` per index for `P_k G_kk`; 0 skips the
    /// `Q_k G_kk` average.
    pub resamples: usize,
    pub seed: u64,
}

impl Default for FluctAvgOptions {
    fn default() -> Self {
        Self {
            resamples: 64,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationAverages {
    /// `Σ_k t_ik Q_k(1/G_kk)`.
    pub sum_q_inv: Vec<c64>,
    /// `Σ_k t_ik Q_k G_kk` with `P_k G_kk` estimated by resampling.
    pub sum_q_g: Option<Vec<c64>>,
    /// `Σ_k t_ik v_k`.
    pub sum_v: Vec<c64>,
    /// `Q_k(1/G_kk)` itself.
    pub q_inv: Vec<c64>,
    /// Largest standard error of the resampled `P_k G_kk` over `k`.
    pub q_g_stderr: Option<f64>,
}

/// Weighted averages of `Q_k(1/G_kk)`, `Q_k G_kk` and `v_k`.
pub fn fluct_avg(
    h: &SampleMatrix,
    bundle: &ResolventBundle,
    m: c64,
    t: MatRef<'_, f64>,
    options: FluctAvgOptions,
) -> Result<FluctuationAverages> {
    let n = bundle.n();
    if t.nrows() != n || t.ncols() != n {
        return Err(Error::DimensionMismatch {
            left: t.nrows(),
            right: n,
        });
    }
    validate_weights(t, h.profile().m_param())?;
    let q_inv = q_inverse(h, bundle)?;
    let g = bundle.g();
    let v: Vec<c64> = (0..n).map(|k| g[(k, k)] - m).collect();
    let weighted = |x: &[c64]| -> Vec<c64> {
        (0..n)
            .map(|i| (0..n).map(|k| x[k] * t[(i, k)]).sum())
            .collect()
    };
    let (sum_q_g, q_g_stderr) = if options.resamples > 0 {
        let (q_g, err) = q_g_resampled(h, bundle, options)?;
        (Some(weighted(&q_g)), Some(err))
    } else {
        (None, None)
    };
    Ok(FluctuationAverages {
        sum_q_inv: weighted(&q_inv),
        sum_q_g,
        sum_v: weighted(&v),
        q_inv,
        q_g_stderr,
    })
}

/// `Q_k G_kk = G_kk − P̂_k G_kk`, where `P̂_k` averages
/// `1/(h'_kk − z − y'* G^{(k)} y')` over fresh draws of column `k`.
fn q_g_resampled(h: &SampleMatrix, bundle: &ResolventBundle, options: FluctAvgOptions) -> Result<(Vec<c64>, f64)> {
    let n = bundle.n();
    let r = options.resamples;
    let z = bundle.z().z();
    let spec = h.spec();
    let g = bundle.g();
    let mut out = vec![ZERO; n];
    let mut worst_err = 0.0f64;
    for k in 0..n {
        let gk = minor(bundle, &[k])?;
        let idx = gk.indices();
        let mut rng = derive_rng(options.seed, h.sample_index(), k as u64, STREAM_RESAMPLE);
        let mut y = Mat::<c64>::zeros(n - 1, r);
        let mut diag = vec![ZERO; r];
        for c in 0..r {
            diag[c] = spec.draw_entry(&mut rng, k, k);
            for (a, &l) in idx.iter().enumerate() {
                let x = if l > k {
                    spec.draw_entry(&mut rng, k, l).conj()
                } else {
                    spec.draw_entry(&mut rng, l, k)
                };
                y[(a, c)] = x;
            }
        }
        let gy = gk.matrix() * &y;
        let vals: Vec<c64> = (0..r)
            .map(|c| {
                let quad: c64 = (0..n - 1).map(|a| y[(a, c)].conj() * gy[(a, c)]).sum();
                (diag[c] - z - quad).inv()
            })
            .collect();
        let mean = vals.iter().sum::<c64>() / r as f64;
        if r > 1 {
            let var = vals.iter().map(|x| (x - mean).norm_sqr()).sum::<f64>() / (r - 1) as f64;
            worst_err = worst_err.max((var / r as f64).sqrt());
        }
        out[k] = g[(k, k)] - mean;
    }
    Ok((out, worst_err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{sample, EnsembleSpec, EntryLaw, Symmetry};
    use crate::profile::{band_profile_with_shape, mean_field_profile, mixture_profile, Geometry, ProfileShape, VarianceProfile};
    use crate::sc::{edge_params, m_sc};
    use faer::linalg::solvers::DenseSolveCore;

    fn pt(e: f64, eta: f64) -> SpectralPoint {
        SpectralPoint::new(e, eta).unwrap()
    }

    fn spec(profile: VarianceProfile, sym: Symmetry, seed: u64) -> Arc<EnsembleSpec> {
        Arc::new(EnsembleSpec::new(Arc::new(profile), EntryLaw::Gaussian, sym, 0.3, seed).unwrap())
    }

    /// Diagonal `H` over the degenerate profile `S = I`.
    fn fixture(diag: &[f64]) -> SampleMatrix {
        let n = diag.len();
        let identity = Mat::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 });
        let profile = VarianceProfile::from_matrix(identity, Geometry::Custom).unwrap();
        let s = spec(profile, Symmetry::RealSymmetric, 0);
        let h = Mat::from_fn(n, n, |i, j| if i == j { c64::new(diag[i], 0.0) } else { ZERO });
        SampleMatrix::from_matrix(h, s).unwrap()
    }

    fn direct_inverse(h: &SampleMatrix, keep: &[usize], z: c64) -> Mat<c64> {
        let k = keep.len();
        let a = Mat::from_fn(k, k, |a, b| {
            let v = h.entry(keep[a], keep[b]);
            if a == b {
                v - z
            } else {
                v
            }
        });
        a.partial_piv_lu().inverse()
    }

    #[test]
    fn zero_matrix_resolvent() {
        let h = fixture(&[0.0, 0.0, 0.0]);
        let b = green(&h, pt(0.0, 1.0)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { c64::new(0.0, 1.0) } else { ZERO };
                assert!((b.g()[(i, j)] - expected).norm() < 1e-15);
            }
        }
        assert!((b.m_n() - c64::new(0.0, 1.0)).norm() < 1e-15);
        let z = pt(0.0, 1.0);
        let r = edge_params(z, 3.0);
        let c = control(&b, &r);
        assert_eq!(c.lambda_o, 0.0);
        let expected = ((-z.z()).inv() - m_sc(z)).norm();
        assert!((c.lambda_d - expected).abs() < 1e-15);
    }

    #[test]
    fn diagonal_resolvent() {
        let d = [0.5, -1.0, 2.0, 0.0];
        let h = fixture(&d);
        let z = pt(0.3, 0.2);
        let b = green(&h, z).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { (c64::new(d[i], 0.0) - z.z()).inv() } else { ZERO };
                assert!((b.g()[(i, j)] - expected).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn goe_residual() {
        let s = spec(mean_field_profile(50).unwrap(), Symmetry::RealSymmetric, 42);
        let h = sample(&s, 0);
        for &(e, eta) in &[(0.0, 0.01), (1.5, 0.1), (-2.2, 1e-3)] {
            let b = green(&h, pt(e, eta)).unwrap();
            assert!(b.residual(&h) <= 1e-9, "{}", b.residual(&h));
        }
        let s = spec(mean_field_profile(40).unwrap(), Symmetry::ComplexHermitian, 42);
        let h = sample(&s, 0);
        let b = green(&h, pt(0.2, 0.05)).unwrap();
        assert!(b.residual(&h) <= 1e-9);
    }

    #[test]
    fn diagonal_of_green_matches_full() {
        for sym in [Symmetry::RealSymmetric, Symmetry::ComplexHermitian] {
            let s = spec(mean_field_profile(30).unwrap(), sym, 1);
            let h = sample(&s, 2);
            let sp = HermitianSpectrum::decompose(&h).unwrap();
            let z = c64::new(0.4, 0.03);
            let g = sp.green(z);
            let d = sp.green_diagonal(z);
            for i in 0..30 {
                assert!((g[(i, i)] - d[i]).norm() < 1e-10);
            }
            let tr = (0..30).map(|i| g[(i, i)]).sum::<c64>() / 30.0;
            assert!((tr - sp.stieltjes(z)).norm() < 1e-10);
        }
    }

    #[test]
    fn minor_matches_reinversion() {
        let s = spec(mean_field_profile(3).unwrap(), Symmetry::RealSymmetric, 9);
        let h = sample(&s, 0);
        let z = pt(0.1, 0.5);
        let b = green(&h, z).unwrap();
        let m = minor(&b, &[0]).unwrap();
        let direct = direct_inverse(&h, &[1, 2], z.z());
        for a in 0..2 {
            for c in 0..2 {
                assert!((m.matrix()[(a, c)] - direct[(a, c)]).norm() < 1e-10);
            }
        }
        let s = spec(mean_field_profile(60).unwrap(), Symmetry::ComplexHermitian, 9);
        let h = sample(&s, 1);
        let b = green(&h, z).unwrap();
        let m = minor(&b, &[5, 17, 40]).unwrap();
        let keep: Vec<usize> = (0..60).filter(|i| ![5, 17, 40].contains(i)).collect();
        let direct = direct_inverse(&h, &keep, z.z());
        assert_eq!(m.indices(), &keep[..]);
        for a in 0..keep.len() {
            for c in 0..keep.len() {
                assert!((m.matrix()[(a, c)] - direct[(a, c)]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn minor_order_independent() {
        let s = spec(mean_field_profile(20).unwrap(), Symmetry::RealSymmetric, 4);
        let h = sample(&s, 0);
        let b = green(&h, pt(-0.5, 0.1)).unwrap();
        let a = minor(&b, &[1, 2]).unwrap();
        let c = minor(&b, &[2, 1]).unwrap();
        for i in 0..18 {
            for j in 0..18 {
                assert!((a.matrix()[(i, j)] - c.matrix()[(i, j)]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn one_by_one_minor() {
        let s = spec(mean_field_profile(6).unwrap(), Symmetry::ComplexHermitian, 4);
        let h = sample(&s, 0);
        let z = pt(0.3, 0.2);
        let b = green(&h, z).unwrap();
        for i in 0..6 {
            let t: Vec<usize> = (0..6).filter(|&k| k != i).collect();
            let m = minor(&b, &t).unwrap();
            let expected = (h.entry(i, i) - z.z()).inv();
            assert!((m.get(i, i).unwrap() - expected).norm() < 1e-10);
        }
    }

    #[test]
    fn minor_errors() {
        let h = fixture(&[0.0, 1.0, 2.0]);
        let b = green(&h, pt(0.0, 1.0)).unwrap();
        assert!(minor(&b, &[0, 1, 2]).is_err());
        assert!(minor(&b, &[3]).is_err());
        assert!(minor(&b, &[1, 1]).is_err());
        let g = Mat::from_fn(2, 2, |i, j| if i == j { ZERO } else { c64::new(1.0, 0.0) });
        assert!(matches!(minor_of(g.as_ref(), &[0]), Err(Error::PivotDegeneracy { .. })));
    }

    #[test]
    fn ward_identity() {
        let s = spec(mean_field_profile(40).unwrap(), Symmetry::ComplexHermitian, 2);
        let h = sample(&s, 0);
        let z = pt(0.7, 0.02);
        let b = green(&h, z).unwrap();
        for i in 0..40 {
            let lhs: f64 = (0..40).map(|j| b.g()[(i, j)].norm_sqr()).sum();
            let rhs = b.g()[(i, i)].im / z.eta();
            assert!((lhs - rhs).abs() <= 1e-8 * rhs.max(1.0));
        }
    }

    #[test]
    fn y_im_m_n_is_monotone() {
        let s = spec(mean_field_profile(64).unwrap(), Symmetry::RealSymmetric, 8);
        let h = sample(&s, 0);
        let sp = HermitianSpectrum::decompose(&h).unwrap();
        let mut prev = 0.0;
        for k in 0..200 {
            let y = 1e-4 * 1.06f64.powi(k);
            let v = y * sp.stieltjes(c64::new(0.25, y)).im;
            assert!(v >= prev * (1.0 - 1e-12));
            prev = v;
        }
    }

    fn mixed_sample(n: usize, seed: u64, sym: Symmetry) -> SampleMatrix {
        let band = band_profile_with_shape(1, n, 2.max(n / 8), ProfileShape::Box).unwrap();
        let p = mixture_profile(&band, &mean_field_profile(n).unwrap(), 0.2).unwrap();
        sample(&spec(p, sym, seed), 0)
    }

    #[test]
    fn schur_identities() {
        for (n, sym) in [(16, Symmetry::RealSymmetric), (24, Symmetry::ComplexHermitian)] {
            let h = mixed_sample(n, 3, sym);
            let z = pt(0.4, 0.05);
            let b = green(&h, z).unwrap();
            let r = edge_params(z, h.profile().m_param());
            let fast = q_inverse(&h, &b).unwrap();
            let ups = upsilon_all(&h, &b).unwrap();
            for i in 0..n {
                let st = schur_terms(&h, &b, &r, i).unwrap();
                assert!(st.residual.norm() <= 1e-9);
                assert!(st.schur_residual.norm() <= 1e-9);
                assert_eq!(st.upsilon_i, st.a_i + h.entry(i, i) - st.z_i);
                assert!((fast[i] - (h.entry(i, i) - st.z_i)).norm() <= 1e-9);
                assert!((ups[i] - st.upsilon_i).norm() <= 1e-9);
            }
            for (i, j) in [(0, 1), (3, 0), (n - 1, 2)] {
                assert!(resolvent_identity_defect(&h, &b, i, j).unwrap().norm() <= 1e-9);
            }
        }
    }

    #[test]
    fn diagonal_schur_terms() {
        let d = [0.5, -1.0, 2.0, 0.25];
        let h = fixture(&d);
        let z = pt(0.1, 0.3);
        let b = green(&h, z).unwrap();
        let r = edge_params(z, 4.0);
        for i in 0..4 {
            let st = schur_terms(&h, &b, &r, i).unwrap();
            assert_eq!(st.z_i, ZERO);
            assert!((st.a_i - b.g()[(i, i)]).norm() < 1e-15);
            assert!((st.upsilon_i - st.a_i - d[i]).norm() < 1e-15);
        }
    }

    #[test]
    fn fluct_avg_diagonal_closed_form() {
        let d = [0.5, -1.0, 2.0, 0.25];
        let h = fixture(&d);
        let z = pt(0.1, 0.3);
        let b = green(&h, z).unwrap();
        let t = Mat::from_fn(4, 4, |_, _| 0.25);
        let out = fluct_avg(&h, &b, m_sc(z), t.as_ref(), FluctAvgOptions { resamples: 0, seed: 0 }).unwrap();
        let expected = d.iter().sum::<f64>() / 4.0;
        for x in &out.sum_q_inv {
            assert!((x - c64::new(expected, 0.0)).norm() < 1e-12);
        }
        assert!(out.sum_q_g.is_none());
    }

    #[test]
    fn fluct_avg_single_term_weight() {
        let h = mixed_sample(32, 5, Symmetry::RealSymmetric);
        let z = pt(0.0, 0.1);
        let b = green(&h, z).unwrap();
        let r = edge_params(z, h.profile().m_param());
        let mp = h.profile().m_param();
        let t = Mat::from_fn(32, 32, |i, k| if i == k { 1.0 / mp } else { 0.0 });
        let out = fluct_avg(&h, &b, r.m, t.as_ref(), FluctAvgOptions { resamples: 8, seed: 1 }).unwrap();
        for i in 0..32 {
            let st = schur_terms(&h, &b, &r, i).unwrap();
            let bound = (h.entry(i, i) - st.z_i).norm() / mp;
            assert!(out.sum_q_inv[i].norm() <= bound * (1.0 + 1e-9));
        }
        assert_eq!(out.sum_q_g.as_ref().unwrap().len(), 32);
        assert!(out.q_g_stderr.unwrap().is_finite());
    }

    #[test]
    fn resampled_partial_expectation_matches_quadrature() {
        // N = 2 mean-field, H = 0, z = i: G^{(0)}_11 = i, so
        // P_0 G_00 = E[1/(x/√2 − i(1 + y²/2))] over independent standard normals.
        let s = spec(mean_field_profile(2).unwrap(), Symmetry::RealSymmetric, 0);
        let h = SampleMatrix::from_matrix(Mat::zeros(2, 2), s).unwrap();
        let z = pt(0.0, 1.0);
        let b = green(&h, z).unwrap();
        let t = Mat::from_fn(2, 2, |_, _| 0.5);
        let opts = FluctAvgOptions { resamples: 20000, seed: 3 };
        let out = fluct_avg(&h, &b, m_sc(z), t.as_ref(), opts).unwrap();
        let (qg, err) = q_g_resampled(&h, &b, opts).unwrap();
        let steps = 1600;
        let (lo, hi) = (-8.0, 8.0);
        let dx = (hi - lo) / steps as f64;
        let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * core::f64::consts::PI).sqrt();
        let mut oracle = ZERO;
        for a in 0..=steps {
            let x = lo + a as f64 * dx;
            for c in 0..=steps {
                let y = lo + c as f64 * dx;
                let w = phi(x) * phi(y) * dx * dx;
                oracle += c64::new(x / 2f64.sqrt(), -(1.0 + y * y / 2.0)).inv() * w;
            }
        }
        let expected_q = c64::new(0.0, 1.0) - oracle;
        assert!((qg[0] - expected_q).norm() < 5.0 * err, "{:?} vs {:?}", qg[0], expected_q);
        assert!(out.q_g_stderr.unwrap() < 0.01);
    }

    #[test]
    fn weight_validation() {
        let t = Mat::from_fn(4, 4, |_, _| 0.3);
        assert!(validate_weights(t.as_ref(), 4.0).is_err());
        let t = Mat::from_fn(4, 4, |_, _| 0.25);
        assert!(validate_weights(t.as_ref(), 4.0).is_ok());
        let t = Mat::from_fn(4, 4, |i, k| if i == k { 0.5 } else { 0.0 });
        assert!(validate_weights(t.as_ref(), 4.0).is_err());
    }
}
