//! Statistics of a sorted spectrum `λ_1 ≤ … ≤ λ_N`: counting function,
//! rigidity bounds, extreme eigenvalues and consecutive gap ratios.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::c64;
use crate::sc;

/// `m_N(z) = N⁻¹ Σ_k 1/(λ_k − z)`.
pub fn empirical_stieltjes(eigenvalues: &[f64], z: c64) -> c64 {
    let n = eigenvalues.len() as f64;
    eigenvalues
        .iter()
        .map(|&l| (c64::new(l, 0.0) - z).inv())
        .sum::<c64>()
        / n
}

/// `n_N(E) = N⁻¹ #{α : λ_α ≤ E}` for sorted eigenvalues.
pub fn counting_function(eigenvalues: &[f64], e: f64) -> f64 {
    let count = eigenvalues.partition_point(|&l| l <= e);
    count as f64 / eigenvalues.len() as f64
}

/// `sup_E |n_N(E) − n(E)|`. The supremum is attained at an eigenvalue,
/// either at the jump itself or just to its left.
pub fn counting_sup_error(eigenvalues: &[f64]) -> f64 {
    let n = eigenvalues.len();
    let nf = n as f64;
    let mut sup = 0.0f64;
    let mut below = 0usize;
    let mut a = 0usize;
    while a < n {
        let lambda = eigenvalues[a];
        let mut b = a;
        while b + 1 < n && eigenvalues[b + 1] == lambda {
            b += 1;
        }
        let n_sc = sc::n_sc(lambda);
        let left = below as f64 / nf;
        let right = (b + 1) as f64 / nf;
        sup = sup.max((left - n_sc).abs()).max((right - n_sc).abs());
        below = b + 1;
        a = b + 1;
    }
    sup
}

/// `X = N²/M^{8/3} + (N/M²)² [δ₊ + (N/M²)^{1/7}]^{−12}` (extreme eigenvalues).
pub fn control_x(n: usize, m_param: f64, delta_plus: f64) -> f64 {
    let n = n as f64;
    let r = n / (m_param * m_param);
    n * n / m_param.powf(8.0 / 3.0) + r * r * (delta_plus + r.powf(1.0 / 7.0)).powi(-12)
}

/// `Y = M⁻¹ (δ₊ + M^{−1/5})^{−7/2}` (counting function).
pub fn control_y(m_param: f64, delta_plus: f64) -> f64 {
    (delta_plus + m_param.powf(-0.2)).powf(-3.5) / m_param
}

/// `α̂ = min{α, N + 1 − α}` for 1-based `α`.
pub fn alpha_hat(n: usize, alpha: usize) -> usize {
    alpha.min(n + 1 - alpha)
}

/// Deterministic rigidity bound for the 1-based index `α`:
/// `Y (N/α̂)^{1/3}` when `α̂ ≥ M^ε N Y`, otherwise `X + (M^ε Y)^{2/3}`.
pub fn rigidity_bound(n: usize, alpha: usize, m_param: f64, x: f64, y: f64, epsilon: f64) -> f64 {
    let ah = alpha_hat(n, alpha) as f64;
    let me = m_param.powf(epsilon);
    if ah >= me * n as f64 * y {
        y * (n as f64 / ah).powf(1.0 / 3.0)
    } else {
        x + (me * y).powf(2.0 / 3.0)
    }
}

/// `|λ_α − γ_α|` for all α (0-based storage of 1-based indices).
pub fn classical_deviations(eigenvalues: &[f64], classical: &[f64]) -> Vec<f64> {
    eigenvalues
        .iter()
        .zip(classical)
        .map(|(l, g)| (l - g).abs())
        .collect()
}

/// `‖H‖ − 2` capped below at zero: `max(λ_N − 2, −2 − λ_1, 0)`.
pub fn norm_excess(eigenvalues: &[f64]) -> f64 {
    let (first, last) = (eigenvalues[0], eigenvalues[eigenvalues.len() - 1]);
    (last - 2.0).max(-2.0 - first).max(0.0)
}

/// Bulk index window `[N/4, 3N/4)` (0-based).
pub fn bulk_window(n: usize) -> core::ops::Range<usize> {
    n / 4..(3 * n) / 4
}

/// Consecutive gap ratios `r_α = min(g_α, g_{α+1}) / max(g_α, g_{α+1})`
/// with `g_α = λ_{α+1} − λ_α`, for 0-based `α` in `window` (clipped so
/// `α + 2 < N`). Pairs of zero gaps are skipped.
pub fn gap_ratios(eigenvalues: &[f64], window: core::ops::Range<usize>) -> Vec<f64> {
    let n = eigenvalues.len();
    let end = window.end.min(n.saturating_sub(2));
    (window.start..end)
        .filter_map(|a| {
            let g1 = eigenvalues[a + 1] - eigenvalues[a];
            let g2 = eigenvalues[a + 2] - eigenvalues[a + 1];
            let hi = g1.max(g2);
            (hi > 0.0).then(|| g1.min(g2) / hi)
        })
        .collect()
}

/// Differences of unfolded eigenvalues `N·n(λ)` within `energy_window` that
/// fall in `[0, max_distance)`, for the averaged two-point function.
pub fn unfolded_pair_distances(eigenvalues: &[f64], energy_window: (f64, f64), max_distance: f64) -> Vec<f64> {
    let n = eigenvalues.len() as f64;
    let unfolded: Vec<f64> = eigenvalues
        .iter()
        .filter(|&&l| l >= energy_window.0 && l <= energy_window.1)
        .map(|&l| n * sc::n_sc(l))
        .collect();
    let mut out = Vec::new();
    for (i, a) in unfolded.iter().enumerate() {
        for b in &unfolded[i + 1..] {
            let d = b - a;
            if d >= max_distance {
                break;
            }
            out.push(d);
        }
    }
    out
}
