use paradiff::dyadic::low_pass;
use paradiff::paraproducts::Paraproduct;
use paradiff::random::{band_limited, band_limited_real};
use paradiff::{Grid, GridFunction};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn product_splits_exactly(seed in any::<u64>(), cut in 3usize..6) {
        let g = Grid::line(256).unwrap();
        let a = band_limited_real(g, seed, 0, 1.5, 64);
        let u = band_limited(g, seed, 1, 1.0, 64);
        let p = Paraproduct::with_cut(a.clone(), cut).unwrap();
        let sum = &p.apply(&u).unwrap() + &p.remainder(&u).unwrap();
        let prod = a.mul(&u).unwrap();
        prop_assert!((&sum - &prod).l2_norm() <= 1e-12 * prod.l2_norm());
    }

    #[test]
    fn adjoint_matches_the_inner_product(seed in any::<u64>()) {
        let g = Grid::line(128).unwrap();
        let a = band_limited(g, seed, 0, 1.0, 32);
        let u = band_limited(g, seed, 1, 0.5, 60);
        let v = band_limited(g, seed, 2, 0.5, 60);
        let p = Paraproduct::new(a);
        let lhs = p.apply(&u).unwrap().inner(&v);
        let rhs = u.inner(&p.adjoint(&v).unwrap());
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
    }

    #[test]
    fn constant_symbol_cuts_off_low_frequencies(c in -3.0f64..3.0, seed in any::<u64>()) {
        // T_c u = c (u − S_{N−1} u)
        let g = Grid::line(256).unwrap();
        let u = band_limited(g, seed, 3, 1.0, 100);
        let p = Paraproduct::new(GridFunction::constant(g, c));
        let expected = (&u - &low_pass(&u, Paraproduct::DEFAULT_CUT - 1)).scale(c);
        prop_assert!((&p.apply(&u).unwrap() - &expected).l2_norm() <= 1e-12 * (1.0 + u.l2_norm()));
    }

    #[test]
    fn paraproduct_is_linear_in_the_symbol(seed in any::<u64>(), s in -2.0f64..2.0) {
        let g = Grid::line(128).unwrap();
        let a = band_limited_real(g, seed, 0, 1.0, 30);
        let b = band_limited_real(g, seed, 1, 1.0, 30);
        let u = band_limited(g, seed, 2, 1.0, 60);
        let lhs = Paraproduct::new(&a + &b.scale(s)).apply(&u).unwrap();
        let rhs = &Paraproduct::new(a).apply(&u).unwrap() + &Paraproduct::new(b).apply(&u).unwrap().scale(s);
        prop_assert!((&lhs - &rhs).l2_norm() <= 1e-12 * (1.0 + lhs.l2_norm()));
    }
}
