use std::f64::consts::PI;

use kge_core::ewi::stability_bound;
use kge_core::oscillatory::osc_stability_bound;
use kge_core::spectral::{forward_coefficients, inverse_transform, make_grid, sobolev_norm};
use kge_core::{NodalField, SpectralField};
use num_complex::Complex64;
use proptest::prelude::*;

fn modes() -> impl Strategy<Value = usize> {
    (2u32..=8).prop_map(|k| 1usize << k)
}

fn field(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, m)
}

proptest! {
    #[test]
    fn roundtrip_and_symmetry((m, values) in modes().prop_flat_map(|m| (Just(m), field(m))), a in -5.0f64..5.0, len in 0.5f64..20.0) {
        let grid = make_grid(a, a + len, m).unwrap();
        let f = NodalField::new(grid, values.clone()).unwrap();
        let c = forward_coefficients(&f);
        let scale = values.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
        prop_assert!(c.symmetry_defect() <= 1e-15 * scale);
        let back = inverse_transform(&c).unwrap();
        let err = back.values().iter().zip(&values).fold(0.0f64, |s, (x, y)| s.max((x - y).abs()));
        prop_assert!(err <= 1e-13 * scale, "M = {m}: {err:e}");
    }

    #[test]
    fn parseval_and_norm_ordering((m, raw) in modes().prop_flat_map(|m| (Just(m), prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), m / 2)))) {
        let grid = make_grid(0.0, 2.0 * PI, m).unwrap();
        let mut c = SpectralField::zeros(grid.clone());
        c.set_mode(0, Complex64::new(raw[0].0, 0.0)).unwrap();
        for (l, &(re, im)) in raw.iter().enumerate().skip(1) {
            let z = Complex64::new(re, im);
            c.set_mode(l as i64, z).unwrap();
            c.set_mode(-(l as i64), z.conj()).unwrap();
        }
        let u = inverse_transform(&c).unwrap();
        let quad = grid.h() * u.values().iter().map(|v| v * v).sum::<f64>();
        let n0 = sobolev_norm(&c, 0).unwrap();
        prop_assert!((n0 * n0 * grid.len() - quad).abs() <= 1e-11 * quad);
        prop_assert!(sobolev_norm(&c, 1).unwrap() >= n0);
    }

    #[test]
    fn oscillatory_bound_is_rescaled(h in 0.01f64..4.0, eps in 0.01f64..1.0, beta in 0.0f64..2.0, sigma in 0.0f64..100.0) {
        let weak = stability_bound(h, eps, sigma);
        let osc = osc_stability_bound(h, eps, beta, sigma);
        prop_assert!((osc - eps.powf(beta) * weak).abs() <= 1e-15 * weak);
    }
}
