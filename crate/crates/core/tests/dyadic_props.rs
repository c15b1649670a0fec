use paradiff::dyadic::{block_norms, decompose, dyadic_block, low_pass, CutoffProfile};
use paradiff::random::band_limited;
use paradiff::Grid;
use proptest::prelude::*;

fn grid_size() -> impl Strategy<Value = usize> {
    prop::sample::select(vec![16usize, 64, 256, 1024])
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn blocks_sum_to_the_input(n in grid_size(), seed in any::<u64>(), decay in 0.0f64..2.0) {
        let g = Grid::line(n).unwrap();
        let u = band_limited(g, seed, 0, decay, n / 2);
        let back = decompose(&u).reconstruct();
        prop_assert!((&back - &u).l2_norm() <= 1e-12 * u.l2_norm().max(1e-300));
    }

    #[test]
    fn cutoff_is_a_partition_of_unity(r in 0.0f64..5000.0) {
        let chi = CutoffProfile;
        let total: f64 = (0..16).map(|k| chi.block(k, r)).sum();
        // telescoping sum equals χ(r/2^15), which is 1 on this range
        prop_assert!((total - 1.0).abs() < 1e-14);
        for k in 0..16 {
            let b = chi.block(k, r);
            prop_assert!((-1e-15..=1.0 + 1e-15).contains(&b));
        }
    }

    #[test]
    fn block_spectra_stay_in_their_annuli(seed in any::<u64>(), k in 0usize..8) {
        let g = Grid::line(512).unwrap();
        let u = band_limited(g, seed, 1, 0.0, 255);
        let b = dyadic_block(&u, k);
        let lo = if k == 0 { 0.0 } else { 1.1 * (1u64 << (k - 1)) as f64 };
        let hi = 1.9 * (1u64 << k) as f64;
        for (i, c) in b.spectrum().iter().enumerate() {
            let r = g.frequency_magnitude(i);
            if r < lo || r > hi {
                prop_assert!(c.norm() == 0.0, "k={} r={}", k, r);
            }
        }
    }

    #[test]
    fn low_pass_is_monotone_in_k(seed in any::<u64>()) {
        let g = Grid::line(256).unwrap();
        let u = band_limited(g, seed, 2, 1.0, 128);
        let norms: Vec<f64> = (0..=g.max_block()).map(|k| low_pass(&u, k).l2_norm()).collect();
        prop_assert!(norms.windows(2).all(|w| w[0] <= w[1] * (1.0 + 1e-12)));
        let total: f64 = block_norms(&u).iter().map(|x| x * x).sum();
        prop_assert!(total <= u.l2_norm().powi(2) * (1.0 + 1e-12));
    }
}
