//! Littlewood–Paley analysis on the periodic grid.
//!
//! `S_k` multiplies the spectrum by `χ(|ξ| / 2^k)` and `Δ_k = S_k − S_{k−1}` (with
//! `Δ_0 = S_0`). The cutoff `χ` equals 1 on `[0, 1.1]`, vanishes on `[1.9, ∞)` and joins the
//! two plateaus with a C∞ partition-of-unity transition built from `exp(−1/t)`.

use crate::grid::GridFunction;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CutoffProfile;

impl CutoffProfile {
    pub const LOWER_PLATEAU: f64 = 1.1;
    pub const UPPER_SUPPORT: f64 = 1.9;

    /// `χ(r)`; depends only on `|r|`.
    pub fn evaluate(&self, r: f64) -> f64 {
        let r = r.abs();
        if r <= Self::LOWER_PLATEAU {
            return 1.0;
        }
        if r >= Self::UPPER_SUPPORT {
            return 0.0;
        }
        let width = Self::UPPER_SUPPORT - Self::LOWER_PLATEAU;
        let up = smooth_step_kernel((Self::UPPER_SUPPORT - r) / width);
        let down = smooth_step_kernel((r - Self::LOWER_PLATEAU) / width);
        up / (up + down)
    }

    /// `χ_k(r) = χ(r / 2^k)`.
    pub fn scaled(&self, k: usize, r: f64) -> f64 {
        self.evaluate(r / (1u64 << k) as f64)
    }

    /// Symbol of `Δ_k` at radius `r`.
    pub fn block(&self, k: usize, r: f64) -> f64 {
        if k == 0 {
            self.evaluate(r)
        } else {
            self.scaled(k, r) - self.scaled(k - 1, r)
        }
    }
}

fn smooth_step_kernel(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

pub fn make_cutoff() -> CutoffProfile {
    CutoffProfile
}

/// `S_k u`.
pub fn low_pass(u: &GridFunction, k: usize) -> GridFunction {
    let chi = CutoffProfile;
    u.apply_radial(|r| chi.scaled(k, r))
}

/// `Δ_k u`, applied as the single multiplier `χ_k − χ_{k−1}`.
pub fn dyadic_block(u: &GridFunction, k: usize) -> GridFunction {
    let chi = CutoffProfile;
    u.apply_radial(|r| chi.block(k, r))
}

/// The blocks `Δ_0 u … Δ_K u` and partial sums `S_0 u … S_K u`, `K = log2(n) + 1`.
#[derive(Clone, Debug)]
pub struct DyadicDecomposition {
    pub source: GridFunction,
    pub blocks: Vec<GridFunction>,
    pub partial_sums: Vec<GridFunction>,
}

impl DyadicDecomposition {
    pub fn max_index(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn block_l2_norms(&self) -> Vec<f64> {
        self.blocks.iter().map(GridFunction::l2_norm).collect()
    }

    /// `Σ_k Δ_k u`.
    pub fn reconstruct(&self) -> GridFunction {
        let mut acc = GridFunction::zeros(self.source.grid());
        for b in &self.blocks {
            acc = &acc + b;
        }
        acc
    }
}

pub fn decompose(u: &GridFunction) -> DyadicDecomposition {
    let k_max = u.grid().max_block();
    let partial_sums: Vec<GridFunction> = (0..=k_max).map(|k| low_pass(u, k)).collect();
    let mut blocks = Vec::with_capacity(k_max + 1);
    blocks.push(partial_sums[0].clone());
    for k in 1..=k_max {
        blocks.push(&partial_sums[k] - &partial_sums[k - 1]);
    }
    DyadicDecomposition { source: u.clone(), blocks, partial_sums }
}

/// L² norms `‖Δ_k u‖` for `k = 0..=K`, computed from the spectrum without inverse transforms.
pub fn block_norms(u: &GridFunction) -> Vec<f64> {
    let grid = u.grid();
    let chi = CutoffProfile;
    let k_max = grid.max_block();
    let mut sq = vec![0.0; k_max + 1];
    for (i, c) in u.spectrum().iter().enumerate() {
        let p = c.norm_sqr();
        if p == 0.0 {
            continue;
        }
        let r = grid.frequency_magnitude(i);
        for (k, s) in sq.iter_mut().enumerate() {
            let m = chi.block(k, r);
            if m != 0.0 {
                *s += m * m * p;
            }
        }
    }
    sq.into_iter().map(f64::sqrt).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::random::band_limited;
    use num_complex::Complex64;

    #[test]
    fn cutoff_plateaus() {
        let chi = make_cutoff();
        assert_eq!(chi.evaluate(0.5), 1.0);
        assert_eq!(chi.evaluate(1.1), 1.0);
        assert_eq!(chi.evaluate(2.0), 0.0);
        assert_eq!(chi.evaluate(1.9), 0.0);
        assert_eq!(chi.evaluate(-0.3), 1.0);
    }

    #[test]
    fn cutoff_transition_regression() {
        let chi = make_cutoff();
        // Symmetric point of the transition: both kernels equal.
        assert_eq!(chi.evaluate(1.5), 0.5);
        // Independent evaluation at r = 1.3: e^{-4/3} / (e^{-4/3} + e^{-4}).
        let expect = (-4.0f64 / 3.0).exp() / ((-4.0f64 / 3.0).exp() + (-4.0f64).exp());
        assert!((chi.evaluate(1.3) - expect).abs() < 1e-15);
        assert!((chi.evaluate(1.3) - 0.935_030_830).abs() < 1e-8);
    }

    #[test]
    fn cutoff_monotone_on_transition() {
        let chi = make_cutoff();
        let mut prev = 1.0;
        for i in 0..=800 {
            let r = 1.1 + 0.8 * i as f64 / 800.0;
            let v = chi.evaluate(r);
            assert!(v <= prev + 1e-15 && (0.0..=1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn low_pass_examples() {
        let g = Grid::line(64).unwrap();
        let one = GridFunction::constant(g, 1.0);
        for k in 0..5 {
            assert!((&low_pass(&one, k) - &one).linf_norm() < 1e-14);
        }
        let w4 = GridFunction::plane_wave(g, [4, 0]);
        assert!(low_pass(&w4, 0).linf_norm() < 1e-14);
        assert!((&low_pass(&w4, 2) - &w4).linf_norm() < 1e-14);
    }

    #[test]
    fn single_dyadic_frequency_lands_in_one_block() {
        let g = Grid::line(64).unwrap();
        for k in 0..6 {
            let u = GridFunction::plane_wave(g, [1 << k, 0]);
            for j in 0..=g.max_block() {
                let b = dyadic_block(&u, j);
                if j == k {
                    assert!((&b - &u).linf_norm() < 1e-13);
                } else {
                    assert!(b.linf_norm() < 1e-13, "k={k} j={j}");
                }
            }
        }
        let c = GridFunction::constant(g, 3.0);
        assert!(dyadic_block(&c, 1).linf_norm() < 1e-15);
    }

    #[test]
    fn decomposition_of_zero_and_of_e8() {
        let g = Grid::line(64).unwrap();
        let d = decompose(&GridFunction::zeros(g));
        assert!(d.blocks.iter().all(|b| b.linf_norm() == 0.0));
        let u = GridFunction::plane_wave(g, [8, 0]);
        let d = decompose(&u);
        let nonzero: Vec<usize> =
            d.blocks.iter().enumerate().filter(|(_, b)| b.l2_norm() > 1e-12).map(|(k, _)| k).collect();
        assert_eq!(nonzero, vec![3]);
        assert_eq!(d.max_index(), 7);
    }

    #[test]
    fn partial_sums_differ_by_blocks_exactly() {
        let g = Grid::line(128).unwrap();
        let u = band_limited(g, 11, 0, 1.0, 64);
        let d = decompose(&u);
        for k in 1..d.blocks.len() {
            let diff = &d.partial_sums[k] - &d.partial_sums[k - 1];
            assert_eq!(diff.values(), d.blocks[k].values());
        }
    }

    #[test]
    fn block_norms_match_decomposition() {
        let g = Grid::line(256).unwrap();
        let u = band_limited(g, 3, 1, 1.0, 128);
        let d = decompose(&u);
        for (a, b) in block_norms(&u).iter().zip(d.block_l2_norms()) {
            assert!((a - b).abs() < 1e-12 * (1.0 + b));
        }
    }

    #[test]
    fn blocks_are_self_adjoint_and_real() {
        let g = Grid::line(128).unwrap();
        let u = band_limited(g, 5, 0, 1.0, 64);
        let v = band_limited(g, 6, 0, 1.0, 64);
        for k in 0..=g.max_block() {
            let lhs = dyadic_block(&u, k).inner(&v);
            let rhs = u.inner(&dyadic_block(&v, k));
            assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
        }
        let real = GridFunction::from_real_fn(g, |x| (x[0]).cos().exp());
        for k in 0..=g.max_block() {
            assert!(dyadic_block(&real, k).values().iter().all(|c| c.im.abs() < 1e-14));
        }
    }

    #[test]
    fn plateau_containment_of_low_passes() {
        // S_j S_k = S_j when 1.9 * 2^j <= 1.1 * 2^k, i.e. k >= j + 1.
        let g = Grid::line(256).unwrap();
        let u = band_limited(g, 9, 0, 1.0, 128);
        for j in 0..6 {
            let k = j + 1;
            let lhs = low_pass(&low_pass(&u, k), j);
            let rhs = low_pass(&u, j);
            assert!((&lhs - &rhs).l2_norm() < 1e-13);
        }
    }

    #[test]
    fn two_dimensional_reconstruction() {
        let g = Grid::new(2, 32).unwrap();
        let u = GridFunction::from_fn(g, |x| Complex64::new((x[0] * 3.0).sin() * x[1].cos(), (x[1] * 7.0).cos()));
        let d = decompose(&u);
        assert!((&d.reconstruct() - &u).l2_norm() < 1e-12 * u.l2_norm());
    }
}
