use proptest::prelude::*;

use plp_core::lp_transform::{analyze, band_limited_random, g_discrete};
use plp_core::{convolve, DilationGroup, FrequencySymbol, Geometry, GridFunction, PeriodicGrid, ScaleWindow};

fn group(kind: u8) -> DilationGroup {
    match kind % 3 {
        0 => DilationGroup::identity(2),
        1 => DilationGroup::diagonal(&[1.0, 2.0]).unwrap(),
        _ => DilationGroup::from_row_major(2, &[1.0, 1.0, -1.0, 1.0]).unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dilations_form_a_semigroup(kind in 0u8..3, lt in -3.0f64..3.0, ls in -3.0f64..3.0) {
        let g = group(kind);
        let (t, s) = (lt.exp(), ls.exp());
        let prod = g.dilate(t, false).unwrap() * g.dilate(s, false).unwrap();
        let direct = g.dilate(t * s, false).unwrap();
        prop_assert!((prod - &direct).norm() <= 1e-10 * direct.norm());
    }

    #[test]
    fn determinant_is_t_to_gamma(kind in 0u8..3, lt in -3.0f64..3.0) {
        let g = group(kind);
        let t = lt.exp();
        let expect = t.powf(g.gamma());
        prop_assert!((g.dilate(t, false).unwrap().determinant() - expect).abs() <= 1e-10 * expect);
    }

    #[test]
    fn rho_is_homogeneous(kind in 0u8..3, x in prop::array::uniform2(-5.0f64..5.0), lt in -2.0f64..2.0) {
        prop_assume!(x[0].abs() + x[1].abs() > 1e-3);
        let g = group(kind);
        let t = lt.exp();
        for dual in [false, true] {
            let r = g.rho(&x, dual);
            let moved = g.apply(t, &x, dual);
            prop_assert!((g.rho(&moved, dual) - t * r).abs() <= 1e-9 * t * r);
        }
    }

    #[test]
    fn convolution_commutes(seed in 0u64..1000) {
        let grid = PeriodicGrid::new(2, 8.0, 16).unwrap();
        let geom = Geometry::new(&grid, &DilationGroup::identity(2)).unwrap();
        let f = band_limited_random(&geom, 0.1, 0.9, seed);
        let h = band_limited_random(&geom, 0.1, 0.9, seed + 1);
        let a = convolve(&f, &h).unwrap();
        let b = convolve(&h, &f).unwrap();
        let scale = a.max_abs().max(1e-300);
        let diff = a.sub(&b).unwrap().max_abs();
        prop_assert!(diff <= 1e-12 * scale);
    }

    #[test]
    fn g_is_absolutely_homogeneous(seed in 0u64..1000, alpha in -4.0f64..4.0) {
        let grid = PeriodicGrid::new(2, 8.0, 16).unwrap();
        let geom = Geometry::new(&grid, &DilationGroup::diagonal(&[1.0, 2.0]).unwrap()).unwrap();
        let w = ScaleWindow::new(0.5, -2, 3, 1).unwrap();
        let sym = FrequencySymbol::heat();
        let f = band_limited_random(&geom, 0.2, 2.0, seed);
        let base = g_discrete(&analyze(&f, &sym, &geom, w).unwrap()).re();
        let scaled = g_discrete(&analyze(&f.scaled(alpha.into()), &sym, &geom, w).unwrap()).re();
        let top = base.iter().copied().fold(0.0, f64::max);
        for (a, b) in base.iter().zip(&scaled) {
            prop_assert!((alpha.abs() * a - b).abs() <= 1e-13 * (1.0 + alpha.abs()) * top.max(1.0));
        }
    }

    #[test]
    fn analysis_commutes_with_lattice_shifts(seed in 0u64..1000, s0 in -8i64..8, s1 in -8i64..8) {
        let grid = PeriodicGrid::new(2, 8.0, 16).unwrap();
        let geom = Geometry::new(&grid, &DilationGroup::diagonal(&[1.0, 2.0]).unwrap()).unwrap();
        let w = ScaleWindow::new(0.5, -2, 3, 1).unwrap();
        let sym = FrequencySymbol::annulus();
        let f = band_limited_random(&geom, 0.2, 2.0, seed);
        let a = analyze(&f.translated(&[s0, s1]).unwrap(), &sym, &geom, w).unwrap();
        let b = analyze(&f, &sym, &geom, w).unwrap();
        for j in w.indices() {
            let moved = b.get(j).unwrap().translated(&[s0, s1]).unwrap();
            let diff = a.get(j).unwrap().sub(&moved).unwrap().max_abs();
            prop_assert!(diff <= 1e-12 * (1.0 + moved.max_abs()));
        }
    }
}

#[test]
fn from_real_round_trips() {
    let grid = PeriodicGrid::new(1, 4.0, 8).unwrap();
    let v: Vec<f64> = (0..8).map(|k| k as f64).collect();
    assert_eq!(GridFunction::from_real(&grid, &v).unwrap().re(), v);
}
