//! Time-mollified modified paraproducts `P̃^ν_{a(t)}`.
//!
//! `a_k = ȷ_k ∗_t ã` with `ȷ_k(t) = 2^k ȷ(2^k t)` and `ã` the extension of `a` by its values at
//! `t = 0` and `t = T₀`. The convolution is evaluated by the trapezoid rule on uniform nodes of
//! `(−1, 1)`, which is spectrally accurate because every derivative of the bump vanishes at
//! the endpoints.

use super::estimate::LinearOperator;
use super::modified::modified_sum;
use super::BlockSum;
use crate::dyadic::low_pass;
use crate::error::{Error, Result};
use crate::field::CoefficientField;
use crate::grid::{Grid, GridFunction};

/// The bump `ȷ(τ) = c exp(−1/(1−τ²))` on `(−1, 1)`, normalized to unit mass.
#[derive(Clone, Debug)]
pub struct Mollifier {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `h ȷ'(τ_j)` for the positive nodes, paired with `positive_nodes`.
    derivative_weights: Vec<f64>,
    positive_nodes: Vec<f64>,
    normalization: f64,
}

fn bump(tau: f64) -> f64 {
    if tau.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - tau * tau)).exp()
    }
}

fn bump_derivative(tau: f64) -> f64 {
    if tau.abs() >= 1.0 {
        0.0
    } else {
        let q = 1.0 - tau * tau;
        bump(tau) * (-2.0 * tau / (q * q))
    }
}

impl Default for Mollifier {
    fn default() -> Self {
        Self::with_intervals(256)
    }
}

impl Mollifier {
    /// Quadrature with `intervals` uniform subintervals of `(−1, 1)` (even, ≥ 8).
    pub fn with_intervals(intervals: usize) -> Self {
        assert!(intervals >= 8 && intervals % 2 == 0, "intervals must be even and >= 8");
        let h = 2.0 / intervals as f64;
        let nodes: Vec<f64> = (1..intervals).map(|j| -1.0 + j as f64 * h).collect();
        let raw: Vec<f64> = nodes.iter().map(|&t| bump(t)).collect();
        let mass: f64 = raw.iter().sum::<f64>() * h;
        let weights = raw.iter().map(|w| w * h / mass).collect();
        let positive_nodes: Vec<f64> = nodes.iter().copied().filter(|&t| t > 0.0).collect();
        let derivative_weights = positive_nodes.iter().map(|&t| h * bump_derivative(t) / mass).collect();
        Mollifier { nodes, weights, derivative_weights, positive_nodes, normalization: 1.0 / mass }
    }

    /// `ȷ(τ)`.
    pub fn density(&self, tau: f64) -> f64 {
        self.normalization * bump(tau)
    }

    /// `ȷ_k(t) = 2^k ȷ(2^k t)`.
    pub fn scaled_density(&self, k: usize, t: f64) -> f64 {
        let s = 2f64.powi(k as i32);
        s * self.density(s * t)
    }

    /// `a_k(t, ·) = Σ_j W_j ã(t − 2^{−k} τ_j, ·)`.
    pub fn smooth(&self, a: &CoefficientField, grid: Grid, t_max: f64, k: usize, t: f64) -> Vec<f64> {
        if a.is_time_independent() {
            return a.sample(grid, t);
        }
        let scale = 2f64.powi(-(k as i32));
        let mut acc = vec![0.0; grid.len()];
        for (&tau, &w) in self.nodes.iter().zip(&self.weights) {
            let s = (t - scale * tau).clamp(0.0, t_max);
            for (a, v) in acc.iter_mut().zip(a.sample(grid, s)) {
                *a += w * v;
            }
        }
        acc
    }

    /// `∂_t a_k(t, ·) = 2^k Σ_{τ_j>0} h ȷ'(τ_j) (ã(t − 2^{−k}τ_j) − ã(t + 2^{−k}τ_j))`.
    pub fn smooth_dt(&self, a: &CoefficientField, grid: Grid, t_max: f64, k: usize, t: f64) -> Vec<f64> {
        if a.is_time_independent() {
            return vec![0.0; grid.len()];
        }
        let scale = 2f64.powi(-(k as i32));
        let mut acc = vec![0.0; grid.len()];
        for (&tau, &w) in self.positive_nodes.iter().zip(&self.derivative_weights) {
            let before = a.sample(grid, (t - scale * tau).clamp(0.0, t_max));
            let after = a.sample(grid, (t + scale * tau).clamp(0.0, t_max));
            for ((acc, b), f) in acc.iter_mut().zip(before).zip(after) {
                *acc += w * (b - f) / scale;
            }
        }
        acc
    }
}

/// `P̃^ν_{a(t)} u = S_ν a_ν S_{ν+2} u + Σ_{k≥ν} S_k a_k Δ_{k+3} u` on `[0, T₀]`.
#[derive(Clone, Debug)]
pub struct MollifiedParaproduct {
    symbol_a: CoefficientField,
    grid: Grid,
    nu: usize,
    t_max: f64,
    mollifier: Mollifier,
}

impl MollifiedParaproduct {
    pub fn new(a: CoefficientField, grid: Grid, nu: usize, t_max: f64) -> Result<Self> {
        if !(t_max > 0.0) {
            return Err(Error::param("t_max", format!("{t_max} must be positive")));
        }
        Ok(MollifiedParaproduct { symbol_a: a, grid, nu, t_max, mollifier: Mollifier::default() })
    }

    pub fn with_mollifier(mut self, mollifier: Mollifier) -> Self {
        self.mollifier = mollifier;
        self
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn symbol(&self) -> &CoefficientField {
        &self.symbol_a
    }

    pub fn mollifier(&self) -> &Mollifier {
        &self.mollifier
    }

    /// `a_k(t)` sampled on the grid.
    pub fn smoothed(&self, k: usize, t: f64) -> Result<GridFunction> {
        self.check_time(t)?;
        Ok(GridFunction::from_real(self.grid, &self.mollifier.smooth(&self.symbol_a, self.grid, self.t_max, k, t)))
    }

    /// `∂_t a_k(t)` sampled on the grid.
    pub fn smoothed_dt(&self, k: usize, t: f64) -> Result<GridFunction> {
        self.check_time(t)?;
        Ok(GridFunction::from_real(self.grid, &self.mollifier.smooth_dt(&self.symbol_a, self.grid, self.t_max, k, t)))
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.t_max).contains(&t) {
            return Err(Error::TimeOutOfRange { t, t_max: self.t_max });
        }
        Ok(())
    }

    /// All operators at time `t`.
    pub fn freeze(&self, t: f64) -> Result<FrozenMollified> {
        self.check_time(t)?;
        let grid = self.grid;
        let kmax = grid.max_block();
        let last = kmax.saturating_sub(3).max(self.nu);
        let mut smoothed = Vec::new();
        let mut smoothed_dt = Vec::new();
        for k in self.nu..=last {
            smoothed.push(low_pass(&self.smoothed(k, t)?, k));
            smoothed_dt.push(low_pass(&self.smoothed_dt(k, t)?, k));
        }
        let nu = self.nu;
        let mollified = modified_sum(grid, nu, |k| smoothed[k - nu].clone());
        let derivative = modified_sum(grid, nu, |k| smoothed_dt[k - nu].clone());
        let a_t = GridFunction::from_real(grid, &self.symbol_a.sample(grid, t));
        let modified = modified_sum(grid, nu, |k| low_pass(&a_t, k));
        Ok(FrozenMollified { t, nu, a_t, mollified, derivative, modified })
    }

    pub fn apply(&self, t: f64, u: &GridFunction) -> Result<GridFunction> {
        self.freeze(t)?.apply(u)
    }
}

pub fn apply_mollified(p: &MollifiedParaproduct, t: f64, u: &GridFunction) -> Result<GridFunction> {
    p.apply(t, u)
}

/// `P̃^ν_{a(t)}`, its adjoint, `[∂_t, P̃^ν_a](t)` and the unmollified `P^ν_{a(t)}` at one time.
#[derive(Clone, Debug)]
pub struct FrozenMollified {
    t: f64,
    nu: usize,
    a_t: GridFunction,
    mollified: BlockSum,
    derivative: BlockSum,
    modified: BlockSum,
}

impl FrozenMollified {
    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn grid(&self) -> Grid {
        self.mollified.grid()
    }

    /// `a(t)` on the grid.
    pub fn coefficient(&self) -> &GridFunction {
        &self.a_t
    }

    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        self.mollified.apply(u)
    }

    pub fn adjoint(&self, u: &GridFunction) -> Result<GridFunction> {
        self.mollified.adjoint(u)
    }

    /// `[∂_t, P̃^ν_a](t) u` for `u` independent of `t`: `P̃` with `a_k` replaced by `∂_t a_k`.
    pub fn time_commutator(&self, u: &GridFunction) -> Result<GridFunction> {
        self.derivative.apply(u)
    }

    /// `P^ν_{a(t)} u` without time mollification.
    pub fn unmollified(&self, u: &GridFunction) -> Result<GridFunction> {
        self.modified.apply(u)
    }
}

impl LinearOperator for FrozenMollified {
    fn apply(&self, u: &GridFunction) -> GridFunction {
        self.mollified.apply(u).expect("trial on the operator grid")
    }
}

/// `∫ ȷ` by composite Simpson on a fine grid, independent of the quadrature used for `a_k`.
pub fn mollifier_mass(m: &Mollifier) -> f64 {
    let n = 20_000;
    let h = 2.0 / n as f64;
    let mut s = 0.0;
    for i in 0..=n {
        let t = -1.0 + i as f64 * h;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        s += w * m.density(t);
    }
    s * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::tent;
    use crate::paraproducts::ModifiedParaproduct;
    use crate::random::band_limited;

    #[test]
    fn mollifier_has_unit_mass_and_is_nonnegative() {
        let m = Mollifier::default();
        assert!((mollifier_mass(&m) - 1.0).abs() < 1e-10);
        for i in 0..=100 {
            let t = -1.2 + 2.4 * i as f64 / 100.0;
            assert!(m.density(t) >= 0.0);
            if t.abs() >= 1.0 {
                assert_eq!(m.density(t), 0.0);
            }
        }
        assert!((m.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn time_independent_symbol_reduces_to_modified() {
        let g = Grid::line(128).unwrap();
        let a = CoefficientField::spatial("2+cos", |x| 2.0 + x[0].cos());
        let p = MollifiedParaproduct::new(a, g, 2, 1.0).unwrap();
        let frozen = p.freeze(0.3).unwrap();
        let u = band_limited(g, 1, 0, 1.0, 64);
        let q = ModifiedParaproduct::new(GridFunction::from_real_fn(g, |x| 2.0 + x[0].cos()), 2);
        assert!((&frozen.apply(&u).unwrap() - &q.apply(&u).unwrap()).l2_norm() < 1e-13);
        assert_eq!(frozen.time_commutator(&u).unwrap().l2_norm(), 0.0);
    }

    #[test]
    fn time_dependent_constant_in_space_is_reproduced_when_smooth() {
        // a(t) = 1 + t: the symmetric bump reproduces affine functions away from the ends.
        let g = Grid::line(16).unwrap();
        let a = CoefficientField::temporal("1+t", |t| 1.0 + t);
        let p = MollifiedParaproduct::new(a, g, 0, 4.0).unwrap();
        for k in 2..6 {
            let ak = p.smoothed(k, 2.0).unwrap();
            assert!((ak.values()[3].re - 3.0).abs() < 1e-12);
            let dk = p.smoothed_dt(k, 2.0).unwrap();
            assert!((dk.values()[3].re - 1.0).abs() < 1e-9, "k={k}: {}", dk.values()[3].re);
        }
    }

    #[test]
    fn mollified_derivative_matches_difference_quotient() {
        let g = Grid::line(16).unwrap();
        let (k, t, h) = (4, 0.52, 1e-5);
        let smooth = CoefficientField::new("sin", |t, x| (3.0 * t).sin() * (2.0 + x[0].cos()));
        let kink = CoefficientField::new("tent", |t, x| tent(t - 0.5) * (2.0 + x[0].cos()));
        for (a, tol) in [(smooth, 1e-6), (kink, 2e-2)] {
            let p = MollifiedParaproduct::new(a, g, 0, 1.0).unwrap();
            let fd = (&p.smoothed(k, t + h).unwrap() - &p.smoothed(k, t - h).unwrap()).scale(0.5 / h);
            let exact = p.smoothed_dt(k, t).unwrap();
            let err = (&fd - &exact).linf_norm() / exact.linf_norm();
            assert!(err < tol, "{}: {err}", p.symbol().label());
        }
    }

    #[test]
    fn out_of_range_time_is_rejected() {
        let g = Grid::line(16).unwrap();
        let p = MollifiedParaproduct::new(CoefficientField::constant(1.0), g, 1, 1.0).unwrap();
        assert!(matches!(p.freeze(1.5), Err(Error::TimeOutOfRange { .. })));
        assert!(p.freeze(-0.1).is_err());
    }

    #[test]
    fn adjoint_pairs_with_apply() {
        let g = Grid::line(64).unwrap();
        let a = CoefficientField::new("tent", |t, x| 1.0 + tent(t - 0.5) * (2.0 + x[0].cos()));
        let p = MollifiedParaproduct::new(a, g, 1, 1.0).unwrap().freeze(0.4).unwrap();
        let u = band_limited(g, 2, 0, 1.0, 16);
        let v = band_limited(g, 3, 0, 1.0, 16);
        let lhs = p.apply(&u).unwrap().inner(&v);
        let rhs = u.inner(&p.adjoint(&v).unwrap());
        assert!((lhs - rhs).norm() < 1e-13 * (1.0 + lhs.norm()));
    }
}
