//! Entry laws, ensemble recipes and reproducible Hermitian samples
//! `h_ij = √s_ij · ζ_ij`.

use alloc::format;
use alloc::sync::Arc;

use faer::Mat;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::c64;
use crate::profile::VarianceProfile;
use crate::{Error, Result};

/// Stream tag for the matrix entries of a sample.
pub const STREAM_ENTRIES: u64 = 0;
/// Stream tag for conditional resampling of rows (partial expectations).
pub const STREAM_RESAMPLE: u64 = 1;
/// Stream tag for auxiliary draws made by experiments.
pub const STREAM_AUX: u64 = 2;

/// Generator for one `(seed, n, index, stream)` tuple. The four words are
/// laid out verbatim in the ChaCha key, so distinct tuples give independent
/// streams and the result does not depend on evaluation order.
pub fn derive_rng(seed: u64, n: u64, index: u64, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&n.to_le_bytes());
    key[16..24].copy_from_slice(&index.to_le_bytes());
    key[24..32].copy_from_slice(&stream.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Mean-zero, unit-variance real laws used for the normalized entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryLaw {
    Gaussian,
    /// `±1` with probability 1/2 each.
    Rademacher,
    /// Uniform on `[−√3, √3]`.
    UniformPmSqrt3,
}

impl EntryLaw {
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            EntryLaw::Gaussian => rng.sample(StandardNormal),
            EntryLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            EntryLaw::UniformPmSqrt3 => {
                let r3 = 3.0f64.sqrt();
                rng.random_range(-r3..r3)
            }
        }
    }

    /// `E|ξ|^p` for the real law, in closed form.
    pub fn absolute_moment(self, p: u32) -> f64 {
        match self {
            EntryLaw::Gaussian => {
                if p % 2 == 0 {
                    // (p − 1)!!
                    (1..p).step_by(2).map(|k| k as f64).product()
                } else {
                    // √(2/π) · 2^{(p−1)/2} · ((p−1)/2)!
                    let k = (p - 1) / 2;
                    let fact: f64 = (1..=k).map(|v| v as f64).product();
                    (2.0 / core::f64::consts::PI).sqrt() * 2.0f64.powi(k as i32) * fact
                }
            }
            EntryLaw::Rademacher => 1.0,
            EntryLaw::UniformPmSqrt3 => 3.0f64.powf(p as f64 / 2.0) / (p as f64 + 1.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EntryLaw::Gaussian => "gaussian",
            EntryLaw::Rademacher => "rademacher",
            EntryLaw::UniformPmSqrt3 => "uniform_pm_sqrt3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    RealSymmetric,
    ComplexHermitian,
}

impl Symmetry {
    pub fn name(self) -> &'static str {
        match self {
            Symmetry::RealSymmetric => "real_symmetric",
            Symmetry::ComplexHermitian => "complex_hermitian",
        }
    }
}

/// Recipe for drawing matrices: profile, entry law, symmetry class and seed.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    profile: Arc<VarianceProfile>,
    entry_law: EntryLaw,
    symmetry: Symmetry,
    complex_second_moment: f64,
    seed: u64,
}

impl EnsembleSpec {
    /// `complex_second_moment` is `|E ζ²|` for off-diagonal complex entries
    /// and must lie in `[0, 1]`; it is ignored for real symmetric matrices.
    pub fn new(
        profile: Arc<VarianceProfile>,
        entry_law: EntryLaw,
        symmetry: Symmetry,
        complex_second_moment: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&complex_second_moment) {
            return Err(Error::InvalidArgument(format!(
                "complex_second_moment {complex_second_moment} outside [0, 1]"
            )));
        }
        Ok(Self {
            profile,
            entry_law,
            symmetry,
            complex_second_moment,
            seed,
        })
    }

    /// Real symmetric Gaussian entries (GOE-type when the profile is mean-field).
    pub fn real_gaussian(profile: Arc<VarianceProfile>, seed: u64) -> Self {
        Self {
            profile,
            entry_law: EntryLaw::Gaussian,
            symmetry: Symmetry::RealSymmetric,
            complex_second_moment: 0.0,
            seed,
        }
    }

    pub fn profile(&self) -> &Arc<VarianceProfile> {
        &self.profile
    }

    pub fn entry_law(&self) -> EntryLaw {
        self.entry_law
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn complex_second_moment(&self) -> f64 {
        match self.symmetry {
            Symmetry::RealSymmetric => 0.0,
            Symmetry::ComplexHermitian => self.complex_second_moment,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    /// Normalized entry `ζ_ij`: real on the diagonal and in the real class,
    /// `(ξ₁ + iξ₂)/√2` with `corr(ξ₁, ξ₂) = |E ζ²|` otherwise.
    pub fn draw_normalized<R: Rng + ?Sized>(&self, rng: &mut R, diagonal: bool) -> c64 {
        let x1 = self.entry_law.draw(rng);
        if diagonal || self.symmetry == Symmetry::RealSymmetric {
            return c64::new(x1, 0.0);
        }
        let rho = self.complex_second_moment;
        let x3 = self.entry_law.draw(rng);
        let x2 = rho * x1 + (1.0 - rho * rho).sqrt() * x3;
        let r = core::f64::consts::FRAC_1_SQRT_2;
        c64::new(r * x1, r * x2)
    }

    /// `h_ij = √s_ij ζ_ij`; zero without consuming randomness when `s_ij = 0`.
    pub fn draw_entry<R: Rng + ?Sized>(&self, rng: &mut R, i: usize, j: usize) -> c64 {
        let s = self.profile.entry(i, j);
        if s == 0.0 {
            return c64::new(0.0, 0.0);
        }
        self.draw_normalized(rng, i == j) * s.sqrt()
    }
}

/// One Hermitian draw `H`.
#[derive(Debug, Clone)]
pub struct SampleMatrix {
    h: Mat<c64>,
    spec: Arc<EnsembleSpec>,
    sample_index: u64,
}

impl SampleMatrix {
    /// Wraps a deterministic matrix (test fixtures). The upper triangle is
    /// mirrored and the diagonal made real so the result is exactly Hermitian.
    pub fn from_matrix(h: Mat<c64>, spec: Arc<EnsembleSpec>) -> Result<Self> {
        let n = spec.profile().n();
        if h.nrows() != n || h.ncols() != n {
            return Err(Error::DimensionMismatch {
                left: h.nrows(),
                right: n,
            });
        }
        let h = Mat::from_fn(n, n, |i, j| {
            if i == j {
                c64::new(h[(i, i)].re, 0.0)
            } else if i < j {
                h[(i, j)]
            } else {
                h[(j, i)].conj()
            }
        });
        Ok(Self {
            h,
            spec,
            sample_index: u64::MAX,
        })
    }

    pub fn h(&self) -> faer::MatRef<'_, c64> {
        self.h.as_ref()
    }

    pub fn n(&self) -> usize {
        self.h.nrows()
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> c64 {
        self.h[(i, j)]
    }

    pub fn spec(&self) -> &Arc<EnsembleSpec> {
        &self.spec
    }

    pub fn profile(&self) -> &VarianceProfile {
        self.spec.profile()
    }

    pub fn sample_index(&self) -> u64 {
        self.sample_index
    }

    pub fn is_real(&self) -> bool {
        self.spec.symmetry() == Symmetry::RealSymmetric
    }

    /// Real part as a dense real matrix.
    pub fn real_part(&self) -> Mat<f64> {
        let n = self.n();
        Mat::from_fn(n, n, |i, j| self.h[(i, j)].re)
    }
}

/// Draws sample number `sample_index` of `spec`. Entries of the upper
/// triangle are generated row by row from the stream
/// `(seed, N, sample_index, STREAM_ENTRIES)`; the lower triangle is the
/// conjugate mirror.
pub fn sample(spec: &Arc<EnsembleSpec>, sample_index: u64) -> SampleMatrix {
    let n = spec.profile().n();
    let mut rng = derive_rng(spec.seed(), n as u64, sample_index, STREAM_ENTRIES);
    let mut h = Mat::<c64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = spec.draw_entry(&mut rng, i, j);
            h[(i, j)] = v;
            if i != j {
                h[(j, i)] = v.conj();
            }
        }
    }
    SampleMatrix {
        h,
        spec: spec.clone(),
        sample_index,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{band_profile_with_shape, mean_field_profile, torus_representative, ProfileShape};
    use alloc::vec::Vec;

    fn spec(profile: VarianceProfile, law: EntryLaw, sym: Symmetry, seed: u64) -> Arc<EnsembleSpec> {
        Arc::new(EnsembleSpec::new(Arc::new(profile), law, sym, 0.0, seed).unwrap())
    }

    #[test]
    fn deterministic_per_index() {
        for sym in [Symmetry::RealSymmetric, Symmetry::ComplexHermitian] {
            let s = spec(mean_field_profile(20).unwrap(), EntryLaw::Gaussian, sym, 11);
            let a = sample(&s, 3);
            let b = sample(&s, 3);
            let c = sample(&s, 4);
            assert_eq!(a.h(), b.h());
            assert_ne!(a.h(), c.h());
        }
    }

    #[test]
    fn exactly_hermitian_with_real_diagonal() {
        for law in [EntryLaw::Gaussian, EntryLaw::Rademacher, EntryLaw::UniformPmSqrt3] {
            let s = spec(mean_field_profile(17).unwrap(), law, Symmetry::ComplexHermitian, 5);
            let h = sample(&s, 0);
            for i in 0..17 {
                assert_eq!(h.entry(i, i).im, 0.0);
                for j in 0..17 {
                    assert_eq!(h.entry(i, j), h.entry(j, i).conj());
                }
            }
        }
    }

    #[test]
    fn band_zero_variance_entries_vanish() {
        let p = band_profile_with_shape(1, 64, 4, ProfileShape::Box).unwrap();
        let s = spec(p, EntryLaw::Gaussian, Symmetry::RealSymmetric, 1);
        let h = sample(&s, 0);
        for i in 0..64i64 {
            for j in 0..64i64 {
                let v = h.entry(i as usize, j as usize);
                if torus_representative(i - j, 64).abs() > 4 {
                    assert_eq!(v, c64::new(0.0, 0.0));
                } else {
                    assert_ne!(v, c64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn entry_variance_monte_carlo() {
        // h_12 of mean_field(512): entries are drawn through the same path as
        // `sample`, at 10^4 independent (index) streams.
        let s = spec(mean_field_profile(512).unwrap(), EntryLaw::Gaussian, Symmetry::RealSymmetric, 99);
        let n_draws = 10_000u64;
        let draws: Vec<f64> = (0..n_draws)
            .map(|k| {
                let mut rng = derive_rng(s.seed(), 512, k, STREAM_AUX);
                s.draw_entry(&mut rng, 0, 1).re
            })
            .collect();
        let s12 = 1.0 / 512.0;
        let mean = draws.iter().sum::<f64>() / n_draws as f64;
        let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n_draws - 1) as f64;
        assert!(mean.abs() <= 4.0 * (s12 / n_draws as f64).sqrt());
        assert!((var - s12).abs() <= 0.1 * s12);
    }

    #[test]
    fn laws_have_unit_variance_and_known_moments() {
        for law in [EntryLaw::Gaussian, EntryLaw::Rademacher, EntryLaw::UniformPmSqrt3] {
            assert!((law.absolute_moment(2) - 1.0).abs() < 1e-14);
            let mut rng = derive_rng(7, 0, 0, STREAM_AUX);
            let m = 200_000;
            let (mut s1, mut s2, mut s4) = (0.0, 0.0, 0.0);
            for _ in 0..m {
                let x = law.draw(&mut rng);
                s1 += x;
                s2 += x * x;
                s4 += x * x * x * x;
            }
            let m = m as f64;
            assert!((s1 / m).abs() < 0.01);
            assert!((s2 / m - 1.0).abs() < 0.01);
            assert!((s4 / m - law.absolute_moment(4)).abs() < 0.05 * law.absolute_moment(4));
        }
        assert!((EntryLaw::Gaussian.absolute_moment(4) - 3.0).abs() < 1e-14);
        assert!((EntryLaw::Gaussian.absolute_moment(1) - (2.0 / core::f64::consts::PI).sqrt()).abs() < 1e-15);
        assert!((EntryLaw::UniformPmSqrt3.absolute_moment(4) - 1.8).abs() < 1e-14);
    }

    #[test]
    fn complex_second_moment_is_realized() {
        let p = Arc::new(mean_field_profile(4).unwrap());
        let s = EnsembleSpec::new(p, EntryLaw::Gaussian, Symmetry::ComplexHermitian, 0.6, 3).unwrap();
        let mut rng = derive_rng(1, 0, 0, STREAM_AUX);
        let m = 200_000;
        let mut sq = c64::new(0.0, 0.0);
        let mut abs2 = 0.0;
        for _ in 0..m {
            let z = s.draw_normalized(&mut rng, false);
            sq += z * z;
            abs2 += z.norm_sqr();
        }
        let m = m as f64;
        assert!(((sq / m).norm() - 0.6).abs() < 0.01);
        assert!((abs2 / m - 1.0).abs() < 0.01);
        assert!(EnsembleSpec::new(s.profile().clone(), EntryLaw::Gaussian, Symmetry::ComplexHermitian, 1.5, 0).is_err());
    }
}
