//! Modified paraproducts `P^ν_a` and the positivity (Gårding-type) checks they satisfy.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimate::{LinearOperator, TrialConfig};
use super::{BlockSum, Filter};
use crate::dyadic::low_pass;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};

/// `P^ν_a u = S_ν a S_{ν+2} u + Σ_{k≥ν} S_k a Δ_{k+3} u`.
#[derive(Clone, Debug)]
pub struct ModifiedParaproduct {
    symbol_a: GridFunction,
    nu: usize,
    sum: BlockSum,
}

impl ModifiedParaproduct {
    pub fn new(a: GridFunction, nu: usize) -> Self {
        let sum = modified_sum(a.grid(), nu, |k| low_pass(&a, k));
        ModifiedParaproduct { symbol_a: a, nu, sum }
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn symbol(&self) -> &GridFunction {
        &self.symbol_a
    }

    pub fn grid(&self) -> Grid {
        self.symbol_a.grid()
    }

    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        self.sum.apply(u)
    }

    pub fn adjoint(&self, u: &GridFunction) -> Result<GridFunction> {
        self.sum.adjoint(u)
    }
}

/// The block sum of `P^ν` with `S_k a` replaced by `smoothed(k)`.
pub(crate) fn modified_sum(grid: Grid, nu: usize, mut smoothed: impl FnMut(usize) -> GridFunction) -> BlockSum {
    let mut sum = BlockSum::new(grid);
    sum.push(&smoothed(nu), Filter::LowPass(nu + 2));
    let kmax = grid.max_block();
    for k in nu..=kmax.saturating_sub(3) {
        sum.push(&smoothed(k), Filter::Block(k + 3));
    }
    sum
}

pub fn apply_modified(p: &ModifiedParaproduct, u: &GridFunction) -> Result<GridFunction> {
    p.apply(u)
}

impl LinearOperator for ModifiedParaproduct {
    fn apply(&self, u: &GridFunction) -> GridFunction {
        self.sum.apply(u).expect("trial on the operator grid")
    }
}

/// Smallest `ν ≥ 1` with `ν 2^{−ν} ≤ c₀ δ / ‖a‖_LL`; `1` when `‖a‖_LL = 0`.
pub fn choose_nu(delta: f64, ll_norm: f64, c0: f64) -> Result<usize> {
    if !(delta > 0.0) {
        return Err(Error::param("delta", format!("{delta} must be positive")));
    }
    if !(c0 > 0.0) {
        return Err(Error::param("c0", format!("{c0} must be positive")));
    }
    if !(ll_norm >= 0.0) {
        return Err(Error::param("ll_norm", format!("{ll_norm} must be nonnegative")));
    }
    if ll_norm == 0.0 {
        return Ok(1);
    }
    let bound = c0 * delta / ll_norm;
    let mut nu = 1usize;
    while nu < 62 && nu as f64 * 2f64.powi(-(nu as i32)) > bound {
        nu += 1;
    }
    Ok(nu)
}

/// Result of a randomized positivity sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    /// `min Re⟨P u, u⟩ / ‖u‖²` over the trials.
    pub gap: f64,
    pub witness_trial: usize,
    pub trials: usize,
}

impl PositivityReport {
    /// Fails with the witnessing trial when `gap < required`.
    pub fn require(&self, required: f64) -> Result<()> {
        if self.gap < required {
            return Err(Error::PositivityViolation { gap: self.gap, required, trial: self.witness_trial });
        }
        Ok(())
    }
}

/// `min Re⟨P u, u⟩ / ‖u‖²` over `cfg.trials` seeded random `u`.
pub fn positivity_gap(op: &dyn LinearOperator, grid: Grid, cfg: &TrialConfig) -> PositivityReport {
    let ratios: Vec<f64> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let u = cfg.trial(grid, i);
            op.apply(&u).inner(&u).re / u.inner(&u).re
        })
        .collect();
    min_report(&ratios)
}

fn min_report(ratios: &[f64]) -> PositivityReport {
    let (witness_trial, gap) = ratios
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, v)| if v < bv { (i, v) } else { (bi, bv) });
    PositivityReport { gap, witness_trial, trials: ratios.len() }
}

/// Matrix of a linear map on `components`-vector grid functions, in the basis of point
/// evaluations (column `c·len + j` is the unit impulse at point `j` of component `c`).
pub fn assemble_matrix(
    grid: Grid,
    components: usize,
    apply: impl Fn(&[GridFunction]) -> Vec<GridFunction> + Sync,
) -> DMatrix<Complex64> {
    let n = grid.len();
    let dim = n * components;
    let columns: Vec<Vec<Complex64>> = (0..dim)
        .into_par_iter()
        .map(|col| {
            let (c, j) = (col / n, col % n);
            let input: Vec<GridFunction> = (0..components)
                .map(|m| {
                    let mut v = vec![Complex64::new(0.0, 0.0); n];
                    if m == c {
                        v[j] = Complex64::new(1.0, 0.0);
                    }
                    GridFunction::from_values(grid, v)
                })
                .collect();
            apply(&input).iter().flat_map(|f| f.values().to_vec()).collect()
        })
        .collect();
    DMatrix::from_fn(dim, dim, |i, j| columns[j][i])
}

/// Smallest eigenvalue of `(M + M^*)/2`. With the grid-mean inner product this is the exact
/// minimum of `Re⟨M u, u⟩ / ‖u‖²`.
pub fn min_symmetric_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// `(P u)_i = Σ_j P^ν_{a_ij} u_j` for a symmetric matrix coefficient `a`.
#[derive(Clone, Debug)]
pub struct MatrixModifiedParaproduct {
    size: usize,
    entries: Vec<ModifiedParaproduct>,
}

impl MatrixModifiedParaproduct {
    /// `entries` in row-major order; must be square and symmetric.
    pub fn new(entries: Vec<Vec<GridFunction>>, nu: usize) -> Result<Self> {
        let size = entries.len();
        if size == 0 || entries.iter().any(|row| row.len() != size) {
            return Err(Error::param("entries", "coefficient matrix must be square and nonempty"));
        }
        for i in 0..size {
            for j in 0..i {
                if (&entries[i][j] - &entries[j][i]).linf_norm() > 1e-14 {
                    return Err(Error::param("entries", format!("entry ({i},{j}) differs from ({j},{i})")));
                }
            }
        }
        let grid = entries[0][0].grid();
        let mut flat = Vec::with_capacity(size * size);
        for row in entries {
            for a in row {
                grid.ensure_same(&a.grid())?;
                flat.push(ModifiedParaproduct::new(a, nu));
            }
        }
        Ok(MatrixModifiedParaproduct { size, entries: flat })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn grid(&self) -> Grid {
        self.entries[0].grid()
    }

    pub fn apply(&self, u: &[GridFunction]) -> Result<Vec<GridFunction>> {
        if u.len() != self.size {
            return Err(Error::param("u", format!("{} components, expected {}", u.len(), self.size)));
        }
        (0..self.size)
            .map(|i| {
                let mut acc = GridFunction::zeros(self.grid());
                for (j, uj) in u.iter().enumerate() {
                    acc = &acc + &self.entries[i * self.size + j].apply(uj)?;
                }
                Ok(acc)
            })
            .collect()
    }

    /// `min Re Σ_i ⟨(P u)_i, u_i⟩ / Σ_i ‖u_i‖²` over seeded random vector `u`.
    pub fn positivity_gap(&self, cfg: &TrialConfig) -> PositivityReport {
        let grid = self.grid();
        let ratios: Vec<f64> = (0..cfg.trials)
            .into_par_iter()
            .map(|i| {
                let u: Vec<GridFunction> = (0..self.size).map(|c| cfg.trial(grid, i * self.size + c)).collect();
                let pu = self.apply(&u).expect("components match");
                let num: f64 = pu.iter().zip(&u).map(|(p, v)| p.inner(v).re).sum();
                let den: f64 = u.iter().map(|v| v.inner(v).re).sum();
                num / den
            })
            .collect();
        min_report(&ratios)
    }

    pub fn min_symmetric_eigenvalue(&self) -> f64 {
        let m = assemble_matrix(self.grid(), self.size, |u| self.apply(u).expect("components match"));
        min_symmetric_eigenvalue(&m)
    }
}
