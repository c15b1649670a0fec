//! Second-order hyperbolic operators with Log-Lipschitz principal part and a pseudospectral
//! method-of-lines solver for the equivalent first-order system in `(u, v = Xu + c₀u)`.

mod energy;
mod store;
mod system;

pub use energy::{energy_report, select_lambda, EnergyParams, EnergySample, EnergyTrace, K0Table, LambdaInputs};
pub use store::{load_trajectory, save_trajectory, TrajectoryMeta, FORMAT_VERSION};
pub use system::{
    assemble_direct, assemble_factored, extract_traces, finite_speed_check, integrate, rhs, time_derivative,
    CauchyData, FiniteSpeedReport, IntegrateConfig, Jet, Manufactured, Source, SourceFn, StateUV, Trajectory,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{time_samples, CoefficientField, SpaceTimeReport};
use crate::grid::Grid;

/// `L = ∂_t a₀ ∂_t + Σ(∂_t a_j ∂_j + ∂_j a_j ∂_t) − Σ ∂_j a_jk ∂_k
///      + b₀∂_t + ∂_t c₀ + Σ(b_j ∂_j + ∂_j c_j) + d`.
#[derive(Clone, Debug)]
pub struct HyperbolicOperator {
    dim: usize,
    a0: CoefficientField,
    a: Vec<CoefficientField>,
    /// Upper triangle of `a_jk`, row major.
    a_jk: Vec<CoefficientField>,
    b0: CoefficientField,
    c0: CoefficientField,
    b: Vec<CoefficientField>,
    c: Vec<CoefficientField>,
    d: CoefficientField,
    alpha: f64,
}

fn tri(dim: usize, j: usize, k: usize) -> usize {
    let (j, k) = if j <= k { (j, k) } else { (k, j) };
    j * dim - j * (j + 1) / 2 + k
}

impl HyperbolicOperator {
    /// `∂_t² − Δ` in `dim` space dimensions.
    pub fn wave(dim: usize) -> Self {
        let mut a_jk = Vec::new();
        for j in 0..dim {
            for k in j..dim {
                a_jk.push(CoefficientField::constant(if j == k { 1.0 } else { 0.0 }));
            }
        }
        HyperbolicOperator {
            dim,
            a0: CoefficientField::constant(1.0),
            a: vec![CoefficientField::zero(); dim],
            a_jk,
            b0: CoefficientField::zero(),
            c0: CoefficientField::zero(),
            b: vec![CoefficientField::zero(); dim],
            c: vec![CoefficientField::zero(); dim],
            d: CoefficientField::zero(),
            alpha: 0.75,
        }
    }

    pub fn with_a0(mut self, f: CoefficientField) -> Self {
        self.a0 = f;
        self
    }

    pub fn with_a(mut self, j: usize, f: CoefficientField) -> Self {
        self.a[j] = f;
        self
    }

    /// Sets `a_jk` and `a_kj` together.
    pub fn with_a_jk(mut self, j: usize, k: usize, f: CoefficientField) -> Self {
        let i = tri(self.dim, j, k);
        self.a_jk[i] = f;
        self
    }

    pub fn with_b0(mut self, f: CoefficientField) -> Self {
        self.b0 = f;
        self
    }

    pub fn with_c0(mut self, f: CoefficientField) -> Self {
        self.c0 = f;
        self
    }

    pub fn with_b(mut self, j: usize, f: CoefficientField) -> Self {
        self.b[j] = f;
        self
    }

    pub fn with_c(mut self, j: usize, f: CoefficientField) -> Self {
        self.c[j] = f;
        self
    }

    pub fn with_d(mut self, f: CoefficientField) -> Self {
        self.d = f;
        self
    }

    /// Hölder exponent declared for the first-order coefficients, in `(1/2, 1)`.
    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.5 && alpha < 1.0) {
            return Err(Error::param("alpha", format!("{alpha} not in (1/2, 1)")));
        }
        self.alpha = alpha;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn a0(&self) -> &CoefficientField {
        &self.a0
    }

    pub fn a(&self, j: usize) -> &CoefficientField {
        &self.a[j]
    }

    pub fn a_jk(&self, j: usize, k: usize) -> &CoefficientField {
        &self.a_jk[tri(self.dim, j, k)]
    }

    pub fn b0(&self) -> &CoefficientField {
        &self.b0
    }

    pub fn c0(&self) -> &CoefficientField {
        &self.c0
    }

    pub fn b(&self, j: usize) -> &CoefficientField {
        &self.b[j]
    }

    pub fn c(&self, j: usize) -> &CoefficientField {
        &self.c[j]
    }

    pub fn d(&self) -> &CoefficientField {
        &self.d
    }

    /// `a₀`, the `a_j` and the upper triangle of `a_jk`.
    pub fn principal(&self) -> Vec<&CoefficientField> {
        std::iter::once(&self.a0).chain(&self.a).chain(&self.a_jk).collect()
    }

    /// `b₀`, `c₀`, the `b_j` and the `c_j`.
    pub fn first_order(&self) -> Vec<&CoefficientField> {
        [&self.b0, &self.c0].into_iter().chain(&self.b).chain(&self.c).collect()
    }

    pub fn is_time_independent(&self) -> bool {
        self.principal().into_iter().chain(self.first_order()).chain([&self.d]).all(|f| f.is_time_independent())
    }

    fn check_grid(&self, grid: Grid) -> Result<()> {
        if grid.dim() != self.dim {
            return Err(Error::GridMismatch { left: format!("operator dim {}", self.dim), right: grid.to_string() });
        }
        Ok(())
    }
}

/// Coefficients of the factorized form `L = (Y* + b̃₀)(X + c₀) − L̃₂ + L̃₁ + d̃`, sampled at
/// one time.
#[derive(Clone, Debug)]
pub struct TildeCoefficients {
    pub t: f64,
    pub grid: Grid,
    pub a0: Vec<f64>,
    pub c0: Vec<f64>,
    /// `a_j` (needed for `X`).
    pub a: Vec<Vec<f64>>,
    /// `ã_jk = a_jk + a_j a_k / a₀`, upper triangle.
    pub a_tilde_jk: Vec<Vec<f64>>,
    /// `ã_j = a_j / a₀`.
    pub a_tilde_j: Vec<Vec<f64>>,
    /// `b̃₀ = b₀ / a₀`.
    pub b_tilde_0: Vec<f64>,
    /// `b̃_j = b_j − b̃₀ a_j`.
    pub b_tilde_j: Vec<Vec<f64>>,
    /// `c̃_j = c_j − ã_j c₀`.
    pub c_tilde_j: Vec<Vec<f64>>,
    /// `c̃₀ = c₀ / a₀`.
    pub c_tilde_0: Vec<f64>,
    /// `d̃ = d − b̃₀ c₀`.
    pub d_tilde: Vec<f64>,
}

impl TildeCoefficients {
    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn a_tilde(&self, j: usize, k: usize) -> &[f64] {
        &self.a_tilde_jk[tri(self.dim(), j, k)]
    }

    /// Smallest and largest eigenvalue of `(ã_jk)` at grid point `i`.
    pub fn eigen_range(&self, i: usize) -> (f64, f64) {
        match self.dim() {
            1 => (self.a_tilde_jk[0][i], self.a_tilde_jk[0][i]),
            _ => {
                let (p, q, r) = (self.a_tilde(0, 0)[i], self.a_tilde(0, 1)[i], self.a_tilde(1, 1)[i]);
                let mean = 0.5 * (p + r);
                let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
                (mean - rad, mean + rad)
            }
        }
    }

    /// Largest characteristic speed at point `i`: `|ã_j| + sqrt(λ_max(ã_jk) / a₀)`.
    pub fn speed(&self, i: usize) -> f64 {
        let drift: f64 = self.a_tilde_j.iter().map(|a| a[i] * a[i]).sum::<f64>().sqrt();
        drift + (self.eigen_range(i).1.max(0.0) / self.a0[i]).sqrt()
    }

    pub fn max_speed(&self) -> f64 {
        (0..self.grid.len()).map(|i| self.speed(i)).fold(0.0, f64::max)
    }
}

/// Pointwise tilde coefficients at time `t`.
pub fn derive_tilde(op: &HyperbolicOperator, grid: Grid, t: f64) -> Result<TildeCoefficients> {
    op.check_grid(grid)?;
    let n = op.dim;
    let a0 = op.a0.sample(grid, t);
    if let Some((index, &v)) = a0.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(Error::NotHyperbolic { t, index, detail: format!("a0 = {v} is not positive") });
    }
    let a: Vec<Vec<f64>> = op.a.iter().map(|f| f.sample(grid, t)).collect();
    let c0 = op.c0.sample(grid, t);
    let b0 = op.b0.sample(grid, t);
    let d = op.d.sample(grid, t);
    let a_tilde_j: Vec<Vec<f64>> = a.iter().map(|aj| aj.iter().zip(&a0).map(|(x, y)| x / y).collect()).collect();
    let mut a_tilde_jk = Vec::new();
    for j in 0..n {
        for k in j..n {
            let base = op.a_jk(j, k).sample(grid, t);
            a_tilde_jk.push((0..grid.len()).map(|i| base[i] + a[j][i] * a[k][i] / a0[i]).collect());
        }
    }
    let b_tilde_0: Vec<f64> = b0.iter().zip(&a0).map(|(b, a)| b / a).collect();
    let c_tilde_0: Vec<f64> = c0.iter().zip(&a0).map(|(c, a)| c / a).collect();
    let b_tilde_j = (0..n)
        .map(|j| {
            let bj = op.b[j].sample(grid, t);
            (0..grid.len()).map(|i| bj[i] - b_tilde_0[i] * a[j][i]).collect()
        })
        .collect();
    let c_tilde_j = (0..n)
        .map(|j| {
            let cj = op.c[j].sample(grid, t);
            (0..grid.len()).map(|i| cj[i] - a_tilde_j[j][i] * c0[i]).collect()
        })
        .collect();
    let d_tilde = (0..grid.len()).map(|i| d[i] - b_tilde_0[i] * c0[i]).collect();
    Ok(TildeCoefficients {
        t,
        grid,
        a0,
        c0,
        a,
        a_tilde_jk,
        a_tilde_j,
        b_tilde_0,
        b_tilde_j,
        c_tilde_j,
        c_tilde_0,
        d_tilde,
    })
}

/// Hyperbolicity constants over a space-time sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperbolicity {
    /// `min a₀`.
    pub delta0: f64,
    /// `min λ_min(ã_jk)`.
    pub delta1: f64,
    /// `max |ã_j| + sqrt(λ_max(ã_jk)/a₀)`.
    pub c_max: f64,
}

/// Checks `a₀ ≥ δ₀ > 0` and `ã_jk ≥ δ₁ > 0` on the grid at `nt + 1` times in `[0, t_max]`.
pub fn check_hyperbolicity(op: &HyperbolicOperator, grid: Grid, t_max: f64, nt: usize) -> Result<Hyperbolicity> {
    let times = if op.is_time_independent() { vec![0.0] } else { time_samples(t_max, nt) };
    let mut h = Hyperbolicity { delta0: f64::INFINITY, delta1: f64::INFINITY, c_max: 0.0 };
    for &t in &times {
        let tilde = derive_tilde(op, grid, t)?;
        for i in 0..grid.len() {
            let lo = tilde.eigen_range(i).0;
            if !(lo > 0.0) {
                return Err(Error::NotHyperbolic {
                    t,
                    index: i,
                    detail: format!("smallest eigenvalue of a_tilde_jk is {lo}"),
                });
            }
            h.delta0 = h.delta0.min(tilde.a0[i]);
            h.delta1 = h.delta1.min(lo);
            h.c_max = h.c_max.max(tilde.speed(i));
        }
    }
    Ok(h)
}

/// `A_{L∞}` and `A_LL` of the principal coefficients (space-time, spatial LL on the grid and
/// temporal LL on `nt + 1` samples).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrincipalBounds {
    pub a_linf: f64,
    pub a_ll: f64,
}

pub fn principal_bounds(op: &HyperbolicOperator, grid: Grid, t_max: f64, nt: usize) -> Result<PrincipalBounds> {
    let mut b = PrincipalBounds { a_linf: 0.0, a_ll: 0.0 };
    for f in op.principal() {
        let r: SpaceTimeReport = f.space_time_report(grid, t_max, nt, op.alpha)?;
        b.a_linf = b.a_linf.max(r.l_infinity);
        b.a_ll = b.a_ll.max(r.ll_seminorm);
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wave_operator_constants() {
        let g = Grid::line(32).unwrap();
        let h = check_hyperbolicity(&HyperbolicOperator::wave(1), g, 1.0, 4).unwrap();
        assert_eq!((h.delta0, h.delta1, h.c_max), (1.0, 1.0, 1.0));
        let g2 = Grid::new(2, 16).unwrap();
        let h2 = check_hyperbolicity(&HyperbolicOperator::wave(2), g2, 1.0, 4).unwrap();
        assert_eq!((h2.delta0, h2.delta1), (1.0, 1.0));
    }

    #[test]
    fn variable_a11_minimum() {
        let g = Grid::line(64).unwrap();
        let op = HyperbolicOperator::wave(1).with_a_jk(0, 0, CoefficientField::spatial("2+sin", |x| 2.0 + x[0].sin()));
        let h = check_hyperbolicity(&op, g, 1.0, 2).unwrap();
        assert_eq!(h.delta0, 1.0);
        // the grid contains x = 3π/2
        assert!((h.delta1 - 1.0).abs() < 1e-15);
        assert!((h.c_max - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn drift_raises_effective_coefficient() {
        let g = Grid::line(16).unwrap();
        let c = 0.5;
        let op = HyperbolicOperator::wave(1)
            .with_a(0, CoefficientField::constant(1.0))
            .with_a_jk(0, 0, CoefficientField::constant(c));
        let h = check_hyperbolicity(&op, g, 1.0, 2).unwrap();
        assert_eq!(h.delta1, c + 1.0);
        assert!((h.c_max - (1.0 + (c + 1.0f64).sqrt())).abs() < 1e-15);
    }

    #[test]
    fn witness_of_failure() {
        let g = Grid::line(16).unwrap();
        let op = HyperbolicOperator::wave(1).with_a_jk(0, 0, CoefficientField::spatial("sin", |x| x[0].sin()));
        match check_hyperbolicity(&op, g, 1.0, 2) {
            Err(Error::NotHyperbolic { index, .. }) => assert_eq!(index, 0),
            other => panic!("{other:?}"),
        }
        let op = HyperbolicOperator::wave(1).with_a0(CoefficientField::temporal("1-t", |t| 1.0 - t));
        assert!(matches!(check_hyperbolicity(&op, g, 2.0, 4), Err(Error::NotHyperbolic { .. })));
    }

    #[test]
    fn tilde_lower_order_vanish_without_drift() {
        let g = Grid::line(16).unwrap();
        let op = HyperbolicOperator::wave(1).with_a_jk(0, 0, CoefficientField::spatial("2+cos", |x| 2.0 + x[0].cos()));
        let t = derive_tilde(&op, g, 0.0).unwrap();
        assert_eq!(t.a_tilde_jk[0], op.a_jk(0, 0).sample(g, 0.0));
        for v in [&t.b_tilde_0, &t.c_tilde_0, &t.d_tilde, &t.b_tilde_j[0], &t.c_tilde_j[0], &t.a_tilde_j[0]] {
            assert!(v.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn tilde_pointwise_formulas() {
        let g = Grid::new(2, 8).unwrap();
        let op = HyperbolicOperator::wave(2)
            .with_a0(CoefficientField::new("a0", |t, x| 2.0 + (x[0] + t).sin()))
            .with_a(0, CoefficientField::spatial("a1", |x| 0.3 * x[1].cos()))
            .with_a(1, CoefficientField::constant(0.2))
            .with_a_jk(0, 1, CoefficientField::spatial("a12", |x| 0.1 * x[0].sin()))
            .with_b0(CoefficientField::constant(0.7))
            .with_c0(CoefficientField::spatial("c0", |x| x[1].sin()))
            .with_b(1, CoefficientField::constant(-0.4))
            .with_c(0, CoefficientField::constant(0.9))
            .with_d(CoefficientField::constant(1.5));
        let t = 0.3;
        let tl = derive_tilde(&op, g, t).unwrap();
        for i in 0..g.len() {
            let x = g.coordinates(i);
            let ev = |f: &CoefficientField| f.evaluate(t, &x[..2]);
            let (a0, a1, a2, c0) = (ev(op.a0()), ev(op.a(0)), ev(op.a(1)), ev(op.c0()));
            let b0t = 0.7 / a0;
            assert!((tl.a_tilde(0, 1)[i] - (ev(op.a_jk(1, 0)) + a1 * a2 / a0)).abs() < 1e-12);
            assert!((tl.b_tilde_j[1][i] - (-0.4 - b0t * a2)).abs() < 1e-12);
            assert!((tl.c_tilde_j[0][i] - (0.9 - a1 / a0 * c0)).abs() < 1e-12);
            assert!((tl.d_tilde[i] - (1.5 - b0t * c0)).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_range() {
        assert!(HyperbolicOperator::wave(1).with_alpha(0.5).is_err());
        assert!(HyperbolicOperator::wave(1).with_alpha(0.8).is_ok());
    }
}
