//! Commutator, adjoint and composition defects of the paraproducts, packaged with the
//! mapping bound each one is expected to satisfy.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::estimate::LinearOperator;
use super::mollified::MollifiedParaproduct;
use super::{ModifiedParaproduct, Paraproduct};
use crate::error::{Error, Result};
use crate::field::{spatial_report, CoefficientField};
use crate::grid::{Grid, GridFunction};
use crate::norms::LogSobolevIndex;

/// Fourier multiplier `Ψ` of degree `m` in the commutator `[Q^{−s}Ψ, T_a]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Psi {
    /// `m = 0`.
    Identity,
    /// `∂_{x_1}`, `m = 1`.
    Derivative,
    /// `(1 − Δ)^{1/2}`, `m = 1`.
    Bessel,
}

impl Psi {
    pub fn degree(self) -> f64 {
        match self {
            Psi::Identity => 0.0,
            Psi::Derivative | Psi::Bessel => 1.0,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Psi::Identity => "id",
            Psi::Derivative => "dx",
            Psi::Bessel => "bessel",
        }
    }
}

/// Whether the derivative acts after (`Left`, `∂ ∘ D`) or before (`Right`, `D ∘ ∂`) the defect.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DefectKind {
    /// `[Q^{−s}Ψ, T_a]`: `H^{−s+½log} → H^{1−m−½log}`, bound `C‖a‖_LL`.
    CommutatorQpsi { s: f64, psi: Psi },
    /// `(T_a − T_a^*)∂` or `∂(T_a − T_a^*)`: `H^{½log} → H^{−½log}`, bound `C‖a‖_LL`.
    AdjointDefect { side: Side },
    /// `(T_a T_b − T_{ab})∂`: `H^{½log} → H^{−½log}`, bound `C(‖a‖_LL‖b‖∞ + ‖b‖_LL‖a‖∞)`.
    CompositionDefect,
    /// `(P^ν_a − (P^ν_a)^*)∂` or `∂(P^ν_a − (P^ν_a)^*)`, bound `C‖a‖_LL(‖u‖_{½log} + ν‖u‖)`.
    ModifiedAdjointDefect { nu: usize, side: Side },
    /// `R_1 … R_5` of the time-mollified paraproduct at time `t`, same bound as above.
    Mollified { index: u8, nu: usize, t: f64 },
    /// `Λ^{½}[P̃^ν, Λ^{½}]` (`Left`) or `[P̃^ν, Λ^{½}]Λ^{½}` (`Right`) on `L²`,
    /// bound `C(ν² 2^{−ν}‖a‖_LL + ν‖a‖∞)`.
    LambdaHalfCommutator { nu: usize, t: f64, side: Side },
    /// `T^N_a − T^{N'}_a`: `H^{s+½log} → H^{s+1−½log}`, bound `C(‖a‖∞ + ‖a‖_LL)`.
    CutDifference { cut: usize, cut_prime: usize, s: f64 },
}

impl DefectKind {
    /// Stable identifier used as a calibration key.
    pub fn id(&self) -> String {
        match *self {
            DefectKind::CommutatorQpsi { s, psi } => format!("commutator_qpsi.{}.s{s}", psi.name()),
            DefectKind::AdjointDefect { side } => format!("adjoint_defect.{}", side.name()),
            DefectKind::CompositionDefect => "composition_defect".to_string(),
            DefectKind::ModifiedAdjointDefect { side, .. } => format!("modified_adjoint_defect.{}", side.name()),
            DefectKind::Mollified { index, .. } => format!("mollified.r{index}"),
            DefectKind::LambdaHalfCommutator { side, .. } => format!("lambda_half_commutator.{}", side.name()),
            DefectKind::CutDifference { cut, cut_prime, s } => format!("cut_difference.{cut}_{cut_prime}.s{s}"),
        }
    }

    /// Whether the operator is identically zero when `a` (and `b`) are constant.
    pub fn vanishes_on_constants(&self) -> bool {
        !matches!(self, DefectKind::CompositionDefect | DefectKind::CutDifference { .. })
    }
}

impl fmt::Display for DefectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// Coefficients a defect operator is built from.
#[derive(Clone, Debug)]
pub struct DefectData {
    pub grid: Grid,
    pub a: CoefficientField,
    pub b: Option<CoefficientField>,
    /// Time at which the spatial (non-mollified) kinds sample `a` and `b`.
    pub t: f64,
    /// Horizon `T₀` of the time-mollified kinds.
    pub t_max: f64,
    /// Time samples used to measure space-time seminorms.
    pub time_samples: usize,
}

impl DefectData {
    pub fn spatial(grid: Grid, a: CoefficientField) -> Self {
        DefectData { grid, a, b: None, t: 0.0, t_max: 1.0, time_samples: 200 }
    }

    pub fn with_b(mut self, b: CoefficientField) -> Self {
        self.b = Some(b);
        self
    }

    pub fn over(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self
    }
}

type Closure = Arc<dyn Fn(&GridFunction) -> GridFunction + Send + Sync>;

/// A defect operator with the target space and majorant of its expected bound. The majorant
/// already includes the coefficient norms, so the measured ratio is the constant `C`.
#[derive(Clone)]
pub struct DefectOperator {
    pub kind: DefectKind,
    pub target: LogSobolevIndex,
    pub majorant: Vec<(f64, LogSobolevIndex)>,
    /// `‖a‖∞` and `‖a‖_LL` (space-time for the mollified kinds).
    pub a_sup: f64,
    pub a_ll: f64,
    op: Closure,
}

impl fmt::Debug for DefectOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DefectOperator")
            .field("kind", &self.kind)
            .field("target", &self.target)
            .field("majorant", &self.majorant)
            .finish()
    }
}

impl LinearOperator for DefectOperator {
    fn apply(&self, u: &GridFunction) -> GridFunction {
        (self.op)(u)
    }
}

fn multiplier(u: &GridFunction, m: impl Fn(usize) -> Complex64) -> GridFunction {
    u.apply_multiplier(m)
}

/// `Q^{−s}Ψ u`.
fn q_psi(u: &GridFunction, s: f64, psi: Psi) -> GridFunction {
    let grid = u.grid();
    multiplier(u, |i| {
        let r = grid.frequency_magnitude(i);
        let q = (1.0 + r * r).powf(-0.5 * s);
        match psi {
            Psi::Identity => Complex64::new(q, 0.0),
            Psi::Bessel => Complex64::new(q * (1.0 + r * r).sqrt(), 0.0),
            Psi::Derivative => {
                if grid.is_nyquist(i, 0) {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, q * grid.frequency(i)[0] as f64)
                }
            }
        }
    })
}

/// `Λ^{½} u = Log(2 + |D|)^{½} u`.
fn lambda_half(u: &GridFunction) -> GridFunction {
    u.apply_radial(|r| (2.0 + r).ln().sqrt())
}

fn dx(u: &GridFunction) -> GridFunction {
    u.derivative(0)
}

fn sided(side: Side, f: impl Fn(&GridFunction) -> GridFunction + Send + Sync + 'static) -> Closure {
    match side {
        Side::Right => Arc::new(move |u| f(&dx(u))),
        Side::Left => Arc::new(move |u| dx(&f(u))),
    }
}

fn spatial_norms(grid: Grid, a: &CoefficientField, t: f64) -> Result<(GridFunction, f64, f64)> {
    let values = a.sample(grid, t);
    let r = spatial_report(grid, &values, 0.5)?;
    Ok((GridFunction::from_real(grid, &values), r.l_infinity, r.ll_seminorm))
}

/// Builds the defect operator `kind` for the coefficients in `data`.
pub fn defect_operator(kind: DefectKind, data: &DefectData) -> Result<DefectOperator> {
    let grid = data.grid;
    let half = LogSobolevIndex::plus_half_log(0.0);
    let minus_half = LogSobolevIndex::minus_half_log(0.0);
    let l2 = LogSobolevIndex::l2();
    let built = match kind {
        DefectKind::CommutatorQpsi { s, psi } => {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::param("s", format!("{s} not in [0, 1]")));
            }
            let (a, sup, ll) = spatial_norms(grid, &data.a, data.t)?;
            let t = Paraproduct::new(a);
            let op: Closure = Arc::new(move |u| {
                let left = q_psi(&t.apply(u).expect("grid"), s, psi);
                let right = t.apply(&q_psi(u, s, psi)).expect("grid");
                &left - &right
            });
            let target = LogSobolevIndex::minus_half_log(1.0 - psi.degree());
            (op, target, vec![(ll, LogSobolevIndex::plus_half_log(-s))], sup, ll)
        }
        DefectKind::AdjointDefect { side } => {
            let (a, sup, ll) = spatial_norms(grid, &data.a, data.t)?;
            let t = Paraproduct::new(a);
            let op = sided(side, move |u| &t.apply(u).expect("grid") - &t.adjoint(u).expect("grid"));
            (op, minus_half, vec![(ll, half)], sup, ll)
        }
        DefectKind::CompositionDefect => {
            let b_field = data.b.as_ref().ok_or_else(|| Error::param("b", "composition defect needs b"))?;
            let (a, a_sup, a_ll) = spatial_norms(grid, &data.a, data.t)?;
            let (b, b_sup, b_ll) = spatial_norms(grid, b_field, data.t)?;
            let ab = a.mul(&b)?;
            let (ta, tb, tab) = (Paraproduct::new(a), Paraproduct::new(b), Paraproduct::new(ab));
            let op = sided(Side::Right, move |u| {
                let lhs = ta.apply(&tb.apply(u).expect("grid")).expect("grid");
                &lhs - &tab.apply(u).expect("grid")
            });
            (op, minus_half, vec![(a_ll * b_sup + b_ll * a_sup, half)], a_sup, a_ll)
        }
        DefectKind::ModifiedAdjointDefect { nu, side } => {
            let (a, sup, ll) = spatial_norms(grid, &data.a, data.t)?;
            let p = ModifiedParaproduct::new(a, nu);
            let op = sided(side, move |u| &p.apply(u).expect("grid") - &p.adjoint(u).expect("grid"));
            (op, minus_half, vec![(ll, half), (ll * nu as f64, l2)], sup, ll)
        }
        DefectKind::Mollified { index, nu, t } => {
            if !(1..=5).contains(&index) {
                return Err(Error::param("index", format!("R{index} does not exist (1..=5)")));
            }
            let report = data.a.space_time_report(grid, data.t_max, data.time_samples, 0.5)?;
            let frozen = MollifiedParaproduct::new(data.a.clone(), grid, nu, data.t_max)?.freeze(t)?;
            let f = frozen.clone();
            let op: Closure = match index {
                1 => sided(Side::Right, move |u| &f.unmollified(u).expect("grid") - &f.apply(u).expect("grid")),
                2 => sided(Side::Left, move |u| &f.unmollified(u).expect("grid") - &f.apply(u).expect("grid")),
                3 => sided(Side::Right, move |u| &f.adjoint(u).expect("grid") - &f.apply(u).expect("grid")),
                4 => sided(Side::Left, move |u| &f.adjoint(u).expect("grid") - &f.apply(u).expect("grid")),
                _ => Arc::new(move |u| f.time_commutator(u).expect("grid")),
            };
            let ll = report.ll_seminorm;
            (op, minus_half, vec![(ll, half), (ll * nu as f64, l2)], report.l_infinity, ll)
        }
        DefectKind::LambdaHalfCommutator { nu, t, side } => {
            let report = data.a.space_time_report(grid, data.t_max, data.time_samples, 0.5)?;
            let f = MollifiedParaproduct::new(data.a.clone(), grid, nu, data.t_max)?.freeze(t)?;
            let commutator = move |u: &GridFunction| {
                let pl = f.apply(&lambda_half(u)).expect("grid");
                let lp = lambda_half(&f.apply(u).expect("grid"));
                &lp - &pl
            };
            let op: Closure = match side {
                // Λ^{½}[P̃, Λ^{½}] u with [P̃, Λ^{½}] = P̃Λ^{½} − Λ^{½}P̃
                Side::Left => Arc::new(move |u| lambda_half(&commutator(u)).scale(-1.0)),
                Side::Right => Arc::new(move |u| commutator(&lambda_half(u)).scale(-1.0)),
            };
            let nuf = nu as f64;
            let weight = nuf * nuf * 2f64.powi(-(nu as i32)) * report.ll_seminorm + nuf * report.l_infinity;
            (op, l2, vec![(weight, l2)], report.l_infinity, report.ll_seminorm)
        }
        DefectKind::CutDifference { cut, cut_prime, s } => {
            if cut_prime < cut {
                return Err(Error::param("cut_prime", format!("{cut_prime} < {cut}")));
            }
            let (a, sup, ll) = spatial_norms(grid, &data.a, data.t)?;
            let t1 = Paraproduct::with_cut(a.clone(), cut)?;
            let t2 = Paraproduct::with_cut(a, cut_prime)?;
            let op: Closure = Arc::new(move |u| &t1.apply(u).expect("grid") - &t2.apply(u).expect("grid"));
            (op, LogSobolevIndex::minus_half_log(s + 1.0), vec![(sup + ll, LogSobolevIndex::plus_half_log(s))], sup, ll)
        }
    };
    let (op, target, majorant, a_sup, a_ll) = built;
    Ok(DefectOperator { kind, target, majorant, a_sup, a_ll, op })
}

/// `ab (S_2² − S_2) ∂u`: what `(T_a T_b − T_{ab})∂u` reduces to for constants `a`, `b`.
pub fn composition_defect_on_constants(a: f64, b: f64, u: &GridFunction) -> GridFunction {
    let chi = crate::dyadic::CutoffProfile;
    dx(u).apply_radial(|r| {
        let s = chi.scaled(2, r);
        a * b * (s * s - s)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::tent;
    use crate::random::band_limited;

    fn all_kinds() -> Vec<DefectKind> {
        vec![
            DefectKind::CommutatorQpsi { s: 0.5, psi: Psi::Identity },
            DefectKind::CommutatorQpsi { s: 0.0, psi: Psi::Derivative },
            DefectKind::CommutatorQpsi { s: 1.0, psi: Psi::Bessel },
            DefectKind::AdjointDefect { side: Side::Left },
            DefectKind::AdjointDefect { side: Side::Right },
            DefectKind::CompositionDefect,
            DefectKind::ModifiedAdjointDefect { nu: 3, side: Side::Left },
            DefectKind::ModifiedAdjointDefect { nu: 3, side: Side::Right },
            DefectKind::Mollified { index: 1, nu: 2, t: 0.4 },
            DefectKind::Mollified { index: 2, nu: 2, t: 0.4 },
            DefectKind::Mollified { index: 3, nu: 2, t: 0.4 },
            DefectKind::Mollified { index: 4, nu: 2, t: 0.4 },
            DefectKind::Mollified { index: 5, nu: 2, t: 0.4 },
            DefectKind::LambdaHalfCommutator { nu: 2, t: 0.4, side: Side::Left },
            DefectKind::LambdaHalfCommutator { nu: 2, t: 0.4, side: Side::Right },
            DefectKind::CutDifference { cut: 3, cut_prime: 5, s: 0.0 },
        ]
    }

    #[test]
    fn constants_annihilate_all_but_the_smoothing_defects() {
        let g = Grid::line(64).unwrap();
        let data = DefectData::spatial(g, CoefficientField::constant(1.7)).with_b(CoefficientField::constant(0.6));
        let u = band_limited(g, 1, 0, 1.0, 32);
        for kind in all_kinds() {
            let op = defect_operator(kind, &data).unwrap();
            let out = op.apply(&u);
            if kind.vanishes_on_constants() {
                assert!(out.l2_norm() <= 1e-12 * u.l2_norm(), "{kind}: {}", out.l2_norm());
            } else {
                assert!(out.l2_norm() > 1e-6, "{kind}");
            }
        }
    }

    #[test]
    fn composition_defect_of_constants_is_the_cutoff_residual() {
        let g = Grid::line(64).unwrap();
        let data = DefectData::spatial(g, CoefficientField::constant(1.7)).with_b(CoefficientField::constant(0.6));
        let op = defect_operator(DefectKind::CompositionDefect, &data).unwrap();
        let u = band_limited(g, 2, 0, 1.0, 32);
        let expect = composition_defect_on_constants(1.7, 0.6, &u);
        assert!((&op.apply(&u) - &expect).l2_norm() < 1e-12 * u.l2_norm());
    }

    #[test]
    fn adjoint_defect_is_antisymmetric_part() {
        let g = Grid::line(64).unwrap();
        let a = CoefficientField::spatial("tent", |x| tent(x[0]));
        let op = defect_operator(DefectKind::AdjointDefect { side: Side::Right }, &DefectData::spatial(g, a)).unwrap();
        assert!(op.a_ll > 0.9);
        let u = band_limited(g, 3, 0, 1.0, 16);
        assert!(op.apply(&u).l2_norm() > 0.0);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let g = Grid::line(16).unwrap();
        let data = DefectData::spatial(g, CoefficientField::constant(1.0));
        assert!(defect_operator(DefectKind::CompositionDefect, &data).is_err());
        assert!(defect_operator(DefectKind::Mollified { index: 6, nu: 1, t: 0.0 }, &data).is_err());
        assert!(defect_operator(DefectKind::CommutatorQpsi { s: 1.5, psi: Psi::Identity }, &data).is_err());
        assert!(defect_operator(DefectKind::CutDifference { cut: 5, cut_prime: 3, s: 0.0 }, &data).is_err());
    }
}
