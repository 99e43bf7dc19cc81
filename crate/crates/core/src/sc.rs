//! Semicircle law reference quantities.
//!
//! `ρ(x) = √((4 − x²)₊)/(2π)`, its Stieltjes transform `m(z)` (the root of
//! `m² + zm + 1 = 0` in the upper half plane), the distribution function
//! `n(E)`, classical locations `γ_α` and the edge parameters `κ`, `θ`.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::c64;
use crate::{Error, Result};

/// `z = E + iη` with `η > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    e: f64,
    eta: f64,
}

impl SpectralPoint {
    pub fn new(e: f64, eta: f64) -> Result<Self> {
        if !e.is_finite() || !eta.is_finite() || eta <= 0.0 {
            return Err(Error::InvalidSpectralParameter { e, eta });
        }
        Ok(Self { e, eta })
    }

    pub fn e(&self) -> f64 {
        self.e
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn z(&self) -> c64 {
        c64::new(self.e, self.eta)
    }

    /// `|E| ≤ 10` and `1/M ≤ η ≤ 10`.
    pub fn in_spectral_domain(&self, m_param: f64) -> bool {
        self.e.abs() <= 10.0 && self.eta >= 1.0 / m_param && self.eta <= 10.0
    }
}

pub fn rho(e: f64) -> f64 {
    let r = 4.0 - e * e;
    if r <= 0.0 {
        0.0
    } else {
        r.sqrt() / (2.0 * PI)
    }
}

/// Stieltjes transform of the semicircle law.
///
/// The two roots of `m² + zm + 1` are `q` and `1/q`; `q` is taken as the
/// root computed without cancellation and the result is whichever of the two
/// has positive imaginary part.
pub fn m_sc(z: SpectralPoint) -> c64 {
    m_of(z.z())
}

pub(crate) fn m_of(z: c64) -> c64 {
    let disc = (z * z - 4.0).sqrt();
    let r1 = (-z + disc) * 0.5;
    let r2 = (-z - disc) * 0.5;
    let q = if r1.norm_sqr() >= r2.norm_sqr() { r1 } else { r2 };
    let inv = q.inv();
    if q.im > 0.0 {
        q
    } else {
        inv
    }
}

/// `n(E) = ∫_{−∞}^E ρ`, closed form on `[−2, 2]`.
pub fn n_sc(e: f64) -> f64 {
    if e <= -2.0 {
        return 0.0;
    }
    if e >= 2.0 {
        return 1.0;
    }
    let v = 0.5 + e * (4.0 - e * e).sqrt() / (4.0 * PI) + (e / 2.0).asin() / PI;
    v.clamp(0.0, 1.0)
}

/// Bisection tolerance for [`gamma_alpha`].
pub const GAMMA_TOLERANCE: f64 = 1e-12;

/// Classical location `γ_α`: the solution of `n(γ) = α/N` on `[−2, 2]`.
pub fn gamma_alpha(n: usize, alpha: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    if alpha == 0 || alpha > n {
        return Err(Error::IndexOutOfRange { index: alpha, n });
    }
    Ok(quantile(alpha as f64 / n as f64))
}

/// `n⁻¹(t)` by bisection.
pub fn quantile(target: f64) -> f64 {
    if target >= 1.0 {
        return 2.0;
    }
    if target <= 0.0 {
        return -2.0;
    }
    let (mut lo, mut hi) = (-2.0f64, 2.0f64);
    while hi - lo > GAMMA_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        let v = n_sc(mid);
        if v == target {
            return mid;
        }
        if v < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All classical locations `γ_1 ≤ … ≤ γ_N`.
pub fn classical_locations(n: usize) -> Vec<f64> {
    (1..=n).map(|a| quantile(a as f64 / n as f64)).collect()
}

/// `κ = ||E| − 2|`.
pub fn kappa(e: f64) -> f64 {
    (e.abs() - 2.0).abs()
}

/// `θ = κ + η/√(κ+η)` inside `[−2, 2]`, `√(κ+η)` outside.
pub fn theta(e: f64, eta: f64) -> f64 {
    let k = kappa(e);
    if e.abs() <= 2.0 {
        k + eta / (k + eta).sqrt()
    } else {
        (k + eta).sqrt()
    }
}

/// `Π(z) = √(Im m / (Mη)) + 1/(Mη)`.
pub fn pi_bound(z: SpectralPoint, m_param: f64) -> f64 {
    let m = m_sc(z);
    let me = m_param * z.eta();
    (m.im / me).sqrt() + 1.0 / me
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScReference {
    pub z: SpectralPoint,
    pub m: c64,
    pub rho: f64,
    pub kappa: f64,
    pub theta: f64,
    pub im_m: f64,
    pub pi_bound: f64,
}

/// Semicircle quantities at `z`; `Π` uses the supplied `M`.
pub fn edge_params(z: SpectralPoint, m_param: f64) -> ScReference {
    let m = m_sc(z);
    let me = m_param * z.eta();
    ScReference {
        z,
        m,
        rho: rho(z.e()),
        kappa: kappa(z.e()),
        theta: theta(z.e(), z.eta()),
        im_m: m.im,
        pi_bound: (m.im / me).sqrt() + 1.0 / me,
    }
}
