//! Bony paraproducts and their modified and time-mollified variants.
//!
//! Every operator here has the form `u ↦ Σ_i m_i · F_i u` where `F_i` is a low-pass or
//! dyadic-block multiplier and `m_i` a smoothed piece of the coefficient. The adjoint is then
//! `u ↦ Σ_i F_i (conj(m_i) u)` because the `F_i` are real and self-adjoint.

mod defect;
mod estimate;
mod modified;
mod mollified;

pub use defect::{
    composition_defect_on_constants, defect_operator, DefectData, DefectKind, DefectOperator, Psi, Side,
};
pub use estimate::{
    estimate_operator_norm, estimate_with_majorant, LinearOperator, OperatorNormEstimate, TrialConfig,
};
pub use modified::{
    apply_modified, assemble_matrix, choose_nu, min_symmetric_eigenvalue, positivity_gap, MatrixModifiedParaproduct,
    ModifiedParaproduct, PositivityReport,
};
pub use mollified::{apply_mollified, mollifier_mass, FrozenMollified, MollifiedParaproduct, Mollifier};

use num_complex::Complex64;

use crate::dyadic::{low_pass, CutoffProfile};
use crate::error::{Error, Result};
use crate::grid::{forward, inverse, Grid, GridFunction};

/// Which multiplier a term applies to `u`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Filter {
    LowPass(usize),
    Block(usize),
}

impl Filter {
    fn symbol(self, r: f64) -> f64 {
        let chi = CutoffProfile;
        match self {
            Filter::LowPass(k) => chi.scaled(k, r),
            Filter::Block(k) => chi.block(k, r),
        }
    }
}

#[derive(Clone, Debug)]
struct Term {
    weight: Vec<Complex64>,
    symbol: Vec<f64>,
}

/// `u ↦ Σ_i m_i · F_i u` with precomputed multiplier tables.
#[derive(Clone, Debug)]
pub(crate) struct BlockSum {
    grid: Grid,
    terms: Vec<Term>,
}

impl BlockSum {
    pub(crate) fn new(grid: Grid) -> Self {
        BlockSum { grid, terms: Vec::new() }
    }

    pub(crate) fn push(&mut self, weight: &GridFunction, filter: Filter) {
        let grid = self.grid;
        let symbol: Vec<f64> = (0..grid.len()).map(|i| filter.symbol(grid.frequency_magnitude(i))).collect();
        if symbol.iter().all(|&s| s == 0.0) {
            return;
        }
        self.terms.push(Term { weight: weight.values().to_vec(), symbol });
    }

    pub(crate) fn grid(&self) -> Grid {
        self.grid
    }

    pub(crate) fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        self.grid.ensure_same(&u.grid())?;
        let mut acc = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        let mut buf = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        for term in &self.terms {
            for ((b, c), s) in buf.iter_mut().zip(u.spectrum()).zip(&term.symbol) {
                *b = c * s;
            }
            let filtered = inverse(&self.grid, &buf);
            for ((a, w), f) in acc.iter_mut().zip(&term.weight).zip(&filtered) {
                *a += w * f;
            }
        }
        Ok(GridFunction::from_values(self.grid, acc))
    }

    pub(crate) fn adjoint(&self, u: &GridFunction) -> Result<GridFunction> {
        self.grid.ensure_same(&u.grid())?;
        let mut acc = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        let mut buf = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        for term in &self.terms {
            for ((b, w), v) in buf.iter_mut().zip(&term.weight).zip(u.values()) {
                *b = w.conj() * v;
            }
            let spec = forward(&self.grid, &buf);
            for ((a, c), s) in acc.iter_mut().zip(&spec).zip(&term.symbol) {
                *a += c * s;
            }
        }
        Ok(GridFunction::from_spectrum(self.grid, acc))
    }
}

/// `S_0 a, …, S_K a`.
pub(crate) fn low_passes(a: &GridFunction) -> Vec<GridFunction> {
    (0..=a.grid().max_block()).map(|j| low_pass(a, j)).collect()
}

/// Bony paraproduct `T^N_a u = Σ_{k≥N} S_{k−N} a · Δ_k u`.
#[derive(Clone, Debug)]
pub struct Paraproduct {
    symbol_a: GridFunction,
    cut_n: usize,
    sum: BlockSum,
}

impl Paraproduct {
    pub const DEFAULT_CUT: usize = 3;

    pub fn new(a: GridFunction) -> Self {
        Self::with_cut(a, Self::DEFAULT_CUT).expect("default cut is valid")
    }

    pub fn with_cut(a: GridFunction, cut_n: usize) -> Result<Self> {
        if cut_n < 3 {
            return Err(Error::param("cut_n", format!("{cut_n} < 3")));
        }
        let grid = a.grid();
        let lows = low_passes(&a);
        let mut sum = BlockSum::new(grid);
        for k in cut_n..=grid.max_block() {
            sum.push(&lows[k - cut_n], Filter::Block(k));
        }
        Ok(Paraproduct { symbol_a: a, cut_n, sum })
    }

    pub fn symbol(&self) -> &GridFunction {
        &self.symbol_a
    }

    pub fn cut(&self) -> usize {
        self.cut_n
    }

    pub fn grid(&self) -> Grid {
        self.symbol_a.grid()
    }

    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        self.sum.apply(u)
    }

    /// `(T_a)^* u = Σ_{k≥N} Δ_k (conj(S_{k−N} a) u)`.
    pub fn adjoint(&self, u: &GridFunction) -> Result<GridFunction> {
        self.sum.adjoint(u)
    }

    /// `R_a u = a u − T_a u`.
    pub fn remainder(&self, u: &GridFunction) -> Result<GridFunction> {
        Ok(&self.symbol_a.mul(u)? - &self.apply(u)?)
    }
}

pub fn apply_paraproduct(p: &Paraproduct, u: &GridFunction) -> Result<GridFunction> {
    p.apply(u)
}

pub fn apply_remainder(p: &Paraproduct, u: &GridFunction) -> Result<GridFunction> {
    p.remainder(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{decompose, dyadic_block};
    use crate::field::tent;
    use crate::random::{band_limited, band_limited_real};

    fn rel(a: &GridFunction, b: &GridFunction) -> f64 {
        (a - b).l2_norm() / b.l2_norm().max(1e-300)
    }

    #[test]
    fn unit_symbol_removes_low_frequencies() {
        let g = Grid::line(128).unwrap();
        let u = band_limited(g, 1, 0, 1.0, 64);
        let t = Paraproduct::new(GridFunction::constant(g, 1.0));
        let expect = &u - &low_pass(&u, 2);
        assert!(rel(&t.apply(&u).unwrap(), &expect) < 1e-13);
        assert!(rel(&t.remainder(&u).unwrap(), &low_pass(&u, 2)) < 1e-13);
    }

    #[test]
    fn single_block_sees_low_pass_of_symbol() {
        let g = Grid::line(128).unwrap();
        let u = GridFunction::plane_wave(g, [32, 0]);
        let a = band_limited_real(g, 2, 0, 1.0, 64);
        let t = Paraproduct::new(a.clone());
        let expect = low_pass(&a, 2).mul(&u).unwrap();
        assert!(rel(&t.apply(&u).unwrap(), &expect) < 1e-12);
    }

    #[test]
    fn remainder_is_full_product_for_high_symbol_low_input() {
        let g = Grid::line(256).unwrap();
        let a = GridFunction::plane_wave(g, [64, 0]);
        let u = GridFunction::plane_wave(g, [2, 0]);
        let t = Paraproduct::new(a.clone());
        assert!(t.apply(&u).unwrap().l2_norm() < 1e-13);
        assert!(rel(&t.remainder(&u).unwrap(), &a.mul(&u).unwrap()) < 1e-13);
    }

    #[test]
    fn remainder_matches_block_expansion() {
        // R_a u = Σ_{k≥3} Δ_k a S_{k−3} u + Σ_k Σ_{|k−j|≤2} Δ_j a Δ_k u
        let g = Grid::line(128).unwrap();
        let a = GridFunction::from_real_fn(g, |x| tent(x[0]));
        let u = band_limited(g, 4, 0, 1.0, 32);
        let da = decompose(&a);
        let du = decompose(&u);
        let kmax = g.max_block();
        let mut acc = GridFunction::zeros(g);
        for k in 3..=kmax {
            acc = &acc + &da.blocks[k].mul(&du.partial_sums[k - 3]).unwrap();
        }
        for k in 0..=kmax {
            for j in k.saturating_sub(2)..=(k + 2).min(kmax) {
                acc = &acc + &da.blocks[j].mul(&du.blocks[k]).unwrap();
            }
        }
        let r = Paraproduct::new(a).remainder(&u).unwrap();
        assert!(rel(&r, &acc) < 1e-12);
    }

    #[test]
    fn adjoint_matches_inner_products() {
        let g = Grid::line(64).unwrap();
        let a = band_limited(g, 5, 0, 1.0, 16);
        let u = band_limited(g, 6, 0, 1.0, 32);
        let v = band_limited(g, 7, 0, 1.0, 32);
        let t = Paraproduct::new(a);
        let lhs = t.apply(&u).unwrap().inner(&v);
        let rhs = u.inner(&t.adjoint(&v).unwrap());
        assert!((lhs - rhs).norm() < 1e-13 * (1.0 + lhs.norm()));
    }

    #[test]
    fn adjoint_is_sum_of_filtered_products() {
        let g = Grid::line(64).unwrap();
        let a = band_limited_real(g, 8, 0, 1.0, 16);
        let u = band_limited(g, 9, 0, 1.0, 32);
        let t = Paraproduct::new(a.clone());
        let mut acc = GridFunction::zeros(g);
        for k in 3..=g.max_block() {
            acc = &acc + &dyadic_block(&low_pass(&a, k - 3).mul(&u).unwrap(), k);
        }
        assert!(rel(&t.adjoint(&u).unwrap(), &acc) < 1e-12);
    }

    #[test]
    fn cut_below_three_is_rejected() {
        let g = Grid::line(16).unwrap();
        assert!(Paraproduct::with_cut(GridFunction::constant(g, 1.0), 2).is_err());
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let p = Paraproduct::new(GridFunction::constant(Grid::line(16).unwrap(), 1.0));
        let u = GridFunction::constant(Grid::line(32).unwrap(), 1.0);
        assert!(p.apply(&u).is_err());
    }
}
