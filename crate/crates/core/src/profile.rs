//! Variance profiles: symmetric doubly stochastic matrices `S = (s_ij)`.
//!
//! Every constructor funnels through [`VarianceProfile::from_matrix`], which
//! checks symmetry, nonnegativity and the row-sum condition, and fixes the
//! parameter `M = 1 / max_ij s_ij`.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use faer::{Mat, MatRef};
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::{Error, Result};

/// Maximum tolerated deviation of a row sum of `S` from 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Iteration cap for [`custom_profile`].
pub const SINKHORN_MAX_ITERATIONS: usize = 100_000;

/// How a profile was built. Only used for metadata and for the
/// translation-invariance shortcut in the stability module.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    MeanField,
    Band {
        d: u32,
        l: usize,
        w: usize,
        profile_name: String,
    },
    Mixture {
        nu: f64,
        /// Both components commute with torus translations.
        translation_invariant: bool,
    },
    Custom,
}

impl Geometry {
    pub fn name(&self) -> &'static str {
        match self {
            Geometry::MeanField => "mean_field",
            Geometry::Band { .. } => "band",
            Geometry::Mixture { .. } => "mixture",
            Geometry::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone)]
pub struct VarianceProfile {
    s: Mat<f64>,
    m_param: f64,
    geometry: Geometry,
}

impl VarianceProfile {
    /// Validates `s` and wraps it. `s` must be exactly symmetric, nonnegative,
    /// finite and have all row sums within [`ROW_SUM_TOLERANCE`] of 1.
    pub fn from_matrix(s: Mat<f64>, geometry: Geometry) -> Result<Self> {
        let n = s.nrows();
        if n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if s.ncols() != n {
            return Err(Error::DimensionMismatch {
                left: n,
                right: s.ncols(),
            });
        }
        let mut max_entry = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let v = s[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidProfile(format!(
                        "entry ({i}, {j}) = {v} is not a finite nonnegative number"
                    )));
                }
                if v != s[(j, i)] {
                    return Err(Error::InvalidProfile(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
                max_entry = max_entry.max(v);
            }
        }
        let deviation = max_row_deviation(s.as_ref());
        if deviation > ROW_SUM_TOLERANCE {
            return Err(Error::InvalidProfile(format!(
                "row sums deviate from 1 by {deviation:e}"
            )));
        }
        Ok(Self {
            s,
            m_param: 1.0 / max_entry,
            geometry,
        })
    }

    pub fn n(&self) -> usize {
        self.s.nrows()
    }

    pub fn s(&self) -> MatRef<'_, f64> {
        self.s.as_ref()
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.s[(i, j)]
    }

    /// `M = 1 / max_ij s_ij`.
    pub fn m_param(&self) -> f64 {
        self.m_param
    }

    pub fn max_entry(&self) -> f64 {
        1.0 / self.m_param
    }

    pub fn min_entry(&self) -> f64 {
        let n = self.n();
        let mut min = f64::INFINITY;
        for j in 0..n {
            for i in 0..n {
                min = min.min(self.s[(i, j)]);
            }
        }
        min
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn max_row_deviation(&self) -> f64 {
        max_row_deviation(self.s.as_ref())
    }

    /// True when every row of `S` is a permutation of row 0 (torus
    /// translation invariance), so row-wise norms can be read off one row.
    pub fn is_translation_invariant(&self) -> bool {
        match &self.geometry {
            Geometry::MeanField | Geometry::Band { .. } => true,
            Geometry::Mixture {
                translation_invariant,
                ..
            } => *translation_invariant,
            Geometry::Custom => false,
        }
    }

    /// `S x` for a real vector.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        assert_eq!(x.len(), n);
        let mut out = vec![0.0; n];
        for (j, &xj) in x.iter().enumerate() {
            let col = self.s.col(j);
            for (i, o) in out.iter_mut().enumerate() {
                *o += col[i] * xj;
            }
        }
        out
    }
}

fn max_row_deviation(s: MatRef<'_, f64>) -> f64 {
    let n = s.nrows();
    let mut sums = vec![0.0f64; n];
    for j in 0..n {
        for (i, sum) in sums.iter_mut().enumerate() {
            *sum += s[(i, j)];
        }
    }
    sums.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max)
}

/// `s_ij = 1/n`.
pub fn mean_field_profile(n: usize) -> Result<VarianceProfile> {
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let v = 1.0 / n as f64;
    VarianceProfile::from_matrix(Mat::from_fn(n, n, |_, _| v), Geometry::MeanField)
}

/// Named profile functions for band matrices. The normalization of `f` is
/// irrelevant because rows are rescaled to sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileShape {
    /// `f(x) = 1` if `max_k |x_k| <= 1`, else 0.
    Box,
    /// `f(x) = exp(-|x|^2 / 2)`.
    Gaussian,
}

impl ProfileShape {
    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            ProfileShape::Box => {
                if x.iter().all(|c| c.abs() <= 1.0) {
                    1.0
                } else {
                    0.0
                }
            }
            ProfileShape::Gaussian => {
                let r2: f64 = x.iter().map(|c| c * c).sum();
                (-0.5 * r2).exp()
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProfileShape::Box => "box",
            ProfileShape::Gaussian => "gaussian",
        }
    }
}

/// Canonical representative of `x` in `[-l/2, l/2) ∩ Z`.
pub fn torus_representative(x: i64, l: usize) -> i64 {
    let l = l as i64;
    let lo = -(l / 2);
    (x - lo).rem_euclid(l) + lo
}

/// `d`-dimensional band profile on the torus of side `l` with band width `w`:
/// `s_ij = f([i − j]_l / w) / Z`. Lattice points are indexed by
/// `i = Σ_k c_k l^k` with coordinates `c_k ∈ [0, l)`.
pub fn band_profile(
    d: u32,
    l: usize,
    w: usize,
    f: &dyn Fn(&[f64]) -> f64,
    profile_name: &str,
) -> Result<VarianceProfile> {
    if d == 0 || l == 0 {
        return Err(Error::InvalidDimension(0));
    }
    if w == 0 || w > l {
        return Err(Error::InvalidBand { w, l });
    }
    let n = l
        .checked_pow(d)
        .ok_or_else(|| Error::InvalidArgument("l^d overflows".to_string()))?;
    let d = d as usize;

    // Kernel over displacement classes δ ∈ Z_l^d, indexed like lattice points.
    let mut kernel = vec![0.0f64; n];
    let mut x = vec![0.0f64; d];
    for (idx, k) in kernel.iter_mut().enumerate() {
        let mut rest = idx;
        for c in x.iter_mut() {
            let coord = (rest % l) as i64;
            rest /= l;
            *c = torus_representative(coord, l) as f64 / w as f64;
        }
        let v = f(&x);
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidProfile(format!(
                "profile function returned {v} at lattice displacement {idx}"
            )));
        }
        *k = v;
    }
    let z: f64 = kernel.iter().sum();
    if z <= 0.0 {
        return Err(Error::DegenerateProfile);
    }

    let coords = |mut i: usize| {
        let mut c = vec![0usize; d];
        for ck in c.iter_mut() {
            *ck = i % l;
            i /= l;
        }
        c
    };
    let all: Vec<Vec<usize>> = (0..n).map(coords).collect();
    let mut s = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut idx = 0usize;
            let mut stride = 1usize;
            for k in 0..d {
                let delta = (all[i][k] + l - all[j][k]) % l;
                idx += delta * stride;
                stride *= l;
            }
            let v = kernel[idx] / z;
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    VarianceProfile::from_matrix(
        s,
        Geometry::Band {
            d: d as u32,
            l,
            w,
            profile_name: profile_name.to_string(),
        },
    )
}

/// Band profile with one of the named shapes.
pub fn band_profile_with_shape(
    d: u32,
    l: usize,
    w: usize,
    shape: ProfileShape,
) -> Result<VarianceProfile> {
    band_profile(d, l, w, &|x| shape.eval(x), shape.name())
}

/// Variance profile of `√(1−ν) H_B + √ν H_W`: `(1 − ν) S_B + ν S_W`.
pub fn mixture_profile(
    band: &VarianceProfile,
    full: &VarianceProfile,
    nu: f64,
) -> Result<VarianceProfile> {
    if band.n() != full.n() {
        return Err(Error::DimensionMismatch {
            left: band.n(),
            right: full.n(),
        });
    }
    if !(0.0..=1.0).contains(&nu) {
        return Err(Error::InvalidMixing(nu));
    }
    if nu == 0.0 {
        return Ok(band.clone());
    }
    if nu == 1.0 {
        return Ok(full.clone());
    }
    let n = band.n();
    let s = Mat::from_fn(n, n, |i, j| {
        (1.0 - nu) * band.entry(i, j) + nu * full.entry(i, j)
    });
    VarianceProfile::from_matrix(
        s,
        Geometry::Mixture {
            nu,
            translation_invariant: band.is_translation_invariant()
                && full.is_translation_invariant(),
        },
    )
}

/// Outcome of [`sinkhorn_symmetric`].
#[derive(Debug, Clone)]
pub struct SinkhornScaling {
    /// Positive diagonal `D` with `D·raw·D` doubly stochastic.
    pub scaling: Vec<f64>,
    pub iterations: usize,
    /// Max row-sum deviation of the scaled matrix.
    pub deviation: f64,
}

/// Symmetric Sinkhorn iteration `d ← sqrt(d / (raw d))` until the row sums of
/// `D·raw·D` are within `tolerance` of one. The input is not validated.
pub fn sinkhorn_symmetric(
    raw: MatRef<'_, f64>,
    tolerance: f64,
    max_iterations: usize,
) -> Result<SinkhornScaling> {
    let n = raw.nrows();
    let mut d = vec![1.0f64; n];
    let mut ad = vec![0.0f64; n];
    let mut iterations = 0usize;
    loop {
        for v in ad.iter_mut() {
            *v = 0.0;
        }
        for j in 0..n {
            let col = raw.col(j);
            let dj = d[j];
            for (i, v) in ad.iter_mut().enumerate() {
                *v += col[i] * dj;
            }
        }
        let deviation = d
            .iter()
            .zip(&ad)
            .map(|(di, adi)| (di * adi - 1.0).abs())
            .fold(0.0, f64::max);
        if deviation <= tolerance {
            return Ok(SinkhornScaling {
                scaling: d,
                iterations,
                deviation,
            });
        }
        if iterations >= max_iterations || !deviation.is_finite() {
            return Err(Error::Convergence {
                iterations,
                deviation,
            });
        }
        for (di, adi) in d.iter_mut().zip(&ad) {
            *di = (*di / adi).sqrt();
        }
        iterations += 1;
    }
}

/// Normalizes a nonnegative symmetric irreducible matrix to a symmetric
/// doubly stochastic profile `D·raw·D`.
pub fn custom_profile(raw: MatRef<'_, f64>) -> Result<VarianceProfile> {
    let n = raw.nrows();
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    if raw.ncols() != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: raw.ncols(),
        });
    }
    let mut scale = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let v = raw[(i, j)];
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidProfile(format!(
                    "entry ({i}, {j}) = {v} is not a finite nonnegative number"
                )));
            }
            scale = scale.max(v);
        }
    }
    for j in 0..n {
        for i in 0..j {
            if (raw[(i, j)] - raw[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::InvalidProfile(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    for i in 0..n {
        if (0..n).all(|j| raw[(i, j)] == 0.0) {
            return Err(Error::NonNormalizable("zero row"));
        }
    }
    if !is_irreducible(raw) {
        return Err(Error::NonNormalizable("matrix is reducible"));
    }

    // Symmetrize from the upper triangle so the output is exactly symmetric.
    let sym = Mat::from_fn(n, n, |i, j| {
        if i <= j {
            raw[(i, j)]
        } else {
            raw[(j, i)]
        }
    });
    if max_row_deviation(sym.as_ref()) <= ROW_SUM_TOLERANCE {
        return VarianceProfile::from_matrix(sym, Geometry::Custom);
    }
    let scaling = sinkhorn_symmetric(sym.as_ref(), 0.25 * ROW_SUM_TOLERANCE, SINKHORN_MAX_ITERATIONS)?;
    let d = &scaling.scaling;
    let mut s = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let v = d[i] * sym[(i, j)] * d[j];
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    VarianceProfile::from_matrix(s, Geometry::Custom)
}

/// Connectivity of the graph with an edge wherever `raw_ij > 0`.
fn is_irreducible(raw: MatRef<'_, f64>) -> bool {
    let n = raw.nrows();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    seen[0] = true;
    queue.push_back(0usize);
    let mut count = 1usize;
    while let Some(i) = queue.pop_front() {
        for j in 0..n {
            if !seen[j] && raw[(i, j)] > 0.0 {
                seen[j] = true;
                count += 1;
                queue.push_back(j);
            }
        }
    }
    count == n
}
