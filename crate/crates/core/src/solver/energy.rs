//! Weighted energy bookkeeping and the choice of the loss rate `λ`.

use serde::{Deserialize, Serialize};

use super::system::{time_derivative, CauchyData, Source, Trajectory};
use super::{check_hyperbolicity, principal_bounds, HyperbolicOperator};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::norms::{sobolev_norm_multiplier, time_integral, LogSobolevIndex};

/// Piecewise-linear, nondecreasing `K₀(A_{L∞}/δ₀)`, constant beyond its end points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct K0Table {
    points: Vec<(f64, f64)>,
}

impl K0Table {
    pub fn constant(k0: f64) -> Self {
        K0Table { points: vec![(1.0, k0)] }
    }

    pub fn from_points(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::param("k0_table", "empty"));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[1].1 < w[0].1 || w[1].0 == w[0].0) {
            return Err(Error::param("k0_table", "values must be nondecreasing in distinct ratios"));
        }
        if points.iter().any(|p| !(p.1 >= 0.0)) {
            return Err(Error::param("k0_table", "values must be nonnegative"));
        }
        Ok(K0Table { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn evaluate(&self, ratio: f64) -> f64 {
        let p = &self.points;
        if ratio <= p[0].0 {
            return p[0].1;
        }
        for w in p.windows(2) {
            if ratio <= w[1].0 {
                let s = (ratio - w[0].0) / (w[1].0 - w[0].0);
                return w[0].1 + s * (w[1].1 - w[0].1);
            }
        }
        p[p.len() - 1].1
    }
}

/// The measured constants `λ` depends on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaInputs {
    pub a_linf: f64,
    pub a_ll: f64,
    pub delta0: f64,
    pub delta1: f64,
}

impl LambdaInputs {
    /// Measures `A_{L∞}`, `A_LL`, `δ₀` and `δ₁` on the grid and `nt + 1` times in `[0, t_max]`.
    pub fn measure(op: &HyperbolicOperator, grid: Grid, t_max: f64, nt: usize) -> Result<Self> {
        let h = check_hyperbolicity(op, grid, t_max, nt)?;
        let b = principal_bounds(op, grid, t_max, nt)?;
        Ok(LambdaInputs { a_linf: b.a_linf, a_ll: b.a_ll, delta0: h.delta0, delta1: h.delta1 })
    }
}

/// `λ = max(2K₀ A_LL A_{L∞}/(δ₀δ₁), 2K₀ A_LL A_{L∞}/δ₀²)` with `K₀ = K₀(A_{L∞}/δ₀)`; zero when
/// `A_LL` vanishes.
pub fn select_lambda(inputs: &LambdaInputs, table: &K0Table) -> f64 {
    if inputs.a_ll <= 1e-12 {
        return 0.0;
    }
    let k0 = table.evaluate(inputs.a_linf / inputs.delta0);
    let base = 2.0 * k0 * inputs.a_ll * inputs.a_linf / inputs.delta0;
    (base / inputs.delta1).max(base / inputs.delta0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    pub theta: f64,
    pub theta1: f64,
    pub lambda: f64,
    pub gamma: f64,
}

impl EnergyParams {
    /// `s(t) = θ + λt`.
    pub fn s(&self, t: f64) -> f64 {
        self.theta + self.lambda * t
    }

    /// `T = min(T₀, (θ₁ − θ)/λ)`.
    pub fn horizon(&self, t0: f64) -> f64 {
        if self.lambda > 0.0 {
            t0.min((self.theta1 - self.theta) / self.lambda)
        } else {
            t0
        }
    }

    fn validate(&self, alpha: f64) -> Result<()> {
        if !(1.0 - alpha < self.theta && self.theta < self.theta1 && self.theta1 < alpha) {
            return Err(Error::param(
                "theta",
                format!("need 1-alpha < theta < theta1 < alpha, got {} {} (alpha={alpha})", self.theta, self.theta1),
            ));
        }
        if !(self.lambda >= 0.0 && self.gamma >= 0.0) {
            return Err(Error::param("lambda", "lambda and gamma must be nonnegative"));
        }
        Ok(())
    }
}

/// Norms at one snapshot; all carry the weight `e^{−γt}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub t: f64,
    pub s: f64,
    /// `‖u‖_{H^{1−s}}`
    pub u: f64,
    /// `‖∂_t u‖_{H^{−s}}`
    pub u_t: f64,
    /// `‖u‖_{H^{1−s+½log}}`
    pub u_half: f64,
    /// `‖∂_t u‖_{H^{−s+½log}}`
    pub u_t_half: f64,
    /// `‖f₁‖_{H^{−s}}`
    pub f1: f64,
    /// `‖f₂‖_{H^{−s−½log}}`
    pub f2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub params: EnergyParams,
    /// Horizon actually covered.
    pub t_end: f64,
    pub samples: Vec<EnergySample>,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; `None` when both vanish.
    pub k_emp: Option<f64>,
}

/// Evaluates both sides of the weighted energy inequality along a trajectory.
pub fn energy_report(
    op: &HyperbolicOperator,
    traj: &Trajectory,
    data: &CauchyData,
    source: &Source,
    params: EnergyParams,
) -> Result<EnergyTrace> {
    params.validate(op.alpha())?;
    let t_end = params.horizon(traj.last().t);
    let mut samples = Vec::new();
    for state in traj.snapshots.iter().filter(|s| s.t <= t_end + 1e-12) {
        let t = state.t;
        let s = params.s(t);
        let w = (-params.gamma * t).exp();
        let ut = time_derivative(op, state)?;
        let norm = |u: &crate::grid::GridFunction, idx: LogSobolevIndex| w * sobolev_norm_multiplier(u, idx);
        let f1 = source.f1.as_ref().map_or(0.0, |f| norm(&f(t), LogSobolevIndex::plain(-s)));
        let f2 = source.f2.as_ref().map_or(0.0, |f| norm(&f(t), LogSobolevIndex::minus_half_log(-s)));
        samples.push(EnergySample {
            t,
            s,
            u: norm(&state.u, LogSobolevIndex::plain(1.0 - s)),
            u_t: norm(&ut, LogSobolevIndex::plain(-s)),
            u_half: norm(&state.u, LogSobolevIndex::plus_half_log(1.0 - s)),
            u_t_half: norm(&ut, LogSobolevIndex::plus_half_log(-s)),
            f1,
            f2,
        });
    }
    let times: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let col = |g: fn(&EnergySample) -> f64| samples.iter().map(g).collect::<Vec<f64>>();
    let sup_sq = |v: Vec<f64>| v.iter().fold(0.0f64, |m, x| m.max(x * x));
    let lhs = sup_sq(col(|s| s.u))
        + sup_sq(col(|s| s.u_t))
        + time_integral(&times, &col(|s| s.u_half * s.u_half + s.u_t_half * s.u_t_half));
    let f1_int = time_integral(&times, &col(|s| s.f1));
    let rhs = sobolev_norm_multiplier(&data.u0, LogSobolevIndex::plain(1.0 - params.theta)).powi(2)
        + sobolev_norm_multiplier(&data.u1, LogSobolevIndex::plain(-params.theta)).powi(2)
        + f1_int * f1_int
        + time_integral(&times, &col(|s| s.f2 * s.f2));
    let k_emp = match (lhs > 0.0, rhs > 0.0) {
        (false, false) => None,
        (_, true) => Some(lhs / rhs),
        (true, false) => Some(f64::INFINITY),
    };
    Ok(EnergyTrace { params, t_end, samples, lhs, rhs, k_emp })
}
