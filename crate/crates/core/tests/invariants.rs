use std::sync::Arc;

use proptest::prelude::*;
use rmt_core::c64;
use rmt_core::ensemble::{sample, EnsembleSpec, EntryLaw, Symmetry};
use rmt_core::profile::{band_profile_with_shape, mean_field_profile, mixture_profile, ProfileShape, VarianceProfile};
use rmt_core::resolvent::{green, minor, q_inverse, schur_terms};
use rmt_core::sc::{edge_params, SpectralPoint};
use rmt_core::stability::StabilityContext;

fn check_profile(p: &VarianceProfile) {
    let n = p.n();
    let s = p.s();
    let mut max = 0.0f64;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            assert_eq!(s[(i, j)], s[(j, i)]);
            assert!(s[(i, j)] >= 0.0);
            row += s[(i, j)];
            max = max.max(s[(i, j)]);
        }
        assert!((row - 1.0).abs() <= 1e-12);
    }
    // M = 1/max is correctly rounded, so the product is 1 up to one ulp.
    assert!((p.m_param() * max - 1.0).abs() <= f64::EPSILON);
    let e = vec![1.0 / (n as f64).sqrt(); n];
    let se = p.apply(&e);
    for (a, b) in se.iter().zip(&e) {
        assert!((a - b).abs() <= 1e-12);
    }
}

fn shape() -> impl Strategy<Value = ProfileShape> {
    prop_oneof![Just(ProfileShape::Box), Just(ProfileShape::Gaussian)]
}

fn law() -> impl Strategy<Value = EntryLaw> {
    prop_oneof![
        Just(EntryLaw::Gaussian),
        Just(EntryLaw::Rademacher),
        Just(EntryLaw::UniformPmSqrt3)
    ]
}

fn symmetry() -> impl Strategy<Value = Symmetry> {
    prop_oneof![Just(Symmetry::RealSymmetric), Just(Symmetry::ComplexHermitian)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn band_and_mixture_profiles_are_doubly_stochastic(
        l in 4usize..48,
        wf in 0.05f64..1.0,
        nu in 0.0f64..1.0,
        shape in shape(),
    ) {
        let w = ((l as f64 * wf) as usize).max(1);
        let band = band_profile_with_shape(1, l, w, shape).unwrap();
        check_profile(&band);
        let mix = mixture_profile(&band, &mean_field_profile(l).unwrap(), nu).unwrap();
        check_profile(&mix);
        let l2 = (l / 6).max(2);
        let band2 = band_profile_with_shape(2, l2, 1, shape).unwrap();
        check_profile(&band2);
    }

    #[test]
    fn samples_are_hermitian_and_respect_zero_variances(
        seed in any::<u64>(),
        idx in 0u64..1000,
        law in law(),
        sym in symmetry(),
        rho in 0.0f64..1.0,
    ) {
        let p = Arc::new(band_profile_with_shape(1, 24, 3, ProfileShape::Box).unwrap());
        let spec = Arc::new(EnsembleSpec::new(p.clone(), law, sym, rho, seed).unwrap());
        let h = sample(&spec, idx);
        for i in 0..24 {
            prop_assert_eq!(h.entry(i, i).im, 0.0);
            for j in 0..24 {
                prop_assert_eq!(h.entry(i, j), h.entry(j, i).conj());
                if p.entry(i, j) == 0.0 {
                    prop_assert_eq!(h.entry(i, j), c64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn self_consistent_residual_is_exact(
        seed in any::<u64>(),
        e in -3.0f64..3.0,
        log_eta in -3.0f64..1.0,
        sym in symmetry(),
        nu in 0.0f64..1.0,
    ) {
        let n = 20;
        let band = band_profile_with_shape(1, n, 3, ProfileShape::Gaussian).unwrap();
        let p = Arc::new(mixture_profile(&band, &mean_field_profile(n).unwrap(), nu).unwrap());
        let spec = Arc::new(EnsembleSpec::new(p.clone(), EntryLaw::Rademacher, sym, 0.0, seed).unwrap());
        let h = sample(&spec, 0);
        let z = SpectralPoint::new(e, 10f64.powf(log_eta)).unwrap();
        let b = green(&h, z).unwrap();
        let r = edge_params(z, p.m_param());
        let q = q_inverse(&h, &b).unwrap();
        for i in 0..n {
            let st = schur_terms(&h, &b, &r, i).unwrap();
            prop_assert!(st.residual.norm() <= 1e-9);
            prop_assert!(st.schur_residual.norm() <= 1e-9);
            prop_assert!((q[i] - (h.entry(i, i) - st.z_i)).norm() <= 1e-9);
        }
    }

    #[test]
    fn minor_removal_order_does_not_matter(seed in any::<u64>(), a in 0usize..12, b in 0usize..12, c in 0usize..12) {
        prop_assume!(a != b && b != c && a != c);
        let p = Arc::new(mean_field_profile(12).unwrap());
        let spec = Arc::new(EnsembleSpec::real_gaussian(p, seed));
        let h = sample(&spec, 0);
        let bundle = green(&h, SpectralPoint::new(0.3, 0.2).unwrap()).unwrap();
        let m1 = minor(&bundle, &[a, b, c]).unwrap();
        let m2 = minor(&bundle, &[c, a, b]).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                prop_assert!((m1.matrix()[(i, j)] - m2.matrix()[(i, j)]).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn restricted_norm_is_dominated(e in -4.0f64..4.0, log_eta in -3.0f64..1.0, w in 1usize..10, nu in 0.0f64..0.5) {
        let band = band_profile_with_shape(1, 40, w, ProfileShape::Box).unwrap();
        let p = Arc::new(mixture_profile(&band, &mean_field_profile(40).unwrap(), nu).unwrap());
        let ctx = StabilityContext::new(p).unwrap();
        let z = SpectralPoint::new(e, 10f64.powf(log_eta)).unwrap();
        let s = ctx.gamma_norms(z).unwrap();
        prop_assert!(s.gamma_tilde <= s.gamma * (1.0 + 1e-12));
        prop_assert!(s.gamma_tilde <= s.gamma_tilde_projected * (1.0 + 1e-12));
        prop_assert!(s.gamma_tilde_projected <= 2.0 * s.gamma_tilde * (1.0 + 1e-9));
        prop_assert!(s.gamma_tilde >= 0.5);
        let lower = ctx.restricted_norm_lower(z, 20, 1);
        prop_assert!(lower <= s.gamma_tilde * (1.0 + 1e-9));
    }
}

#[test]
fn parallel_order_does_not_change_samples() {
    let p = Arc::new(mean_field_profile(16).unwrap());
    let spec = Arc::new(EnsembleSpec::real_gaussian(p, 77));
    let forward: Vec<_> = (0..8).map(|k| sample(&spec, k)).collect();
    let backward: Vec<_> = (0..8).rev().map(|k| sample(&spec, k)).collect();
    for (a, b) in forward.iter().zip(backward.iter().rev()) {
        assert_eq!(a.h(), b.h());
    }
}
