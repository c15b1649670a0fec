//! The first-order system
//!
//! ```text
//! ∂_t u = −Σ ã_j ∂_j u − c̃₀ u + v / a₀
//! ∂_t v = −Σ ∂_j(ã_j v) − b̃₀ v + Σ ∂_j(ã_jk ∂_k u) − Σ b̃_j ∂_j u − Σ ∂_j(c̃_j u) − d̃ u + f
//! ```
//!
//! discretized with spectral derivatives, collocation products and classical RK4.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{check_hyperbolicity, derive_tilde, HyperbolicOperator, TildeCoefficients};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};

/// `(t, u, v)` with `v = Xu + c₀u`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateUV {
    pub t: f64,
    pub u: GridFunction,
    pub v: GridFunction,
}

/// Cauchy data `u|_{t=0} = u₀`, `Xu|_{t=0} = u₁`.
#[derive(Clone, Debug, PartialEq)]
pub struct CauchyData {
    pub u0: GridFunction,
    pub u1: GridFunction,
}

impl CauchyData {
    pub fn zero(grid: Grid) -> Self {
        CauchyData { u0: GridFunction::zeros(grid), u1: GridFunction::zeros(grid) }
    }
}

pub type SourceFn = Arc<dyn Fn(f64) -> GridFunction + Send + Sync>;

/// `f = f₁ + f₂`; the parts are only distinguished by the energy report.
#[derive(Clone, Default)]
pub struct Source {
    pub f1: Option<SourceFn>,
    pub f2: Option<SourceFn>,
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Source").field("f1", &self.f1.is_some()).field("f2", &self.f2.is_some()).finish()
    }
}

impl Source {
    pub fn none() -> Self {
        Source::default()
    }

    /// A single source, filed under `f₂`.
    pub fn single(f: impl Fn(f64) -> GridFunction + Send + Sync + 'static) -> Self {
        Source { f1: None, f2: Some(Arc::new(f)) }
    }

    pub fn split(
        f1: impl Fn(f64) -> GridFunction + Send + Sync + 'static,
        f2: impl Fn(f64) -> GridFunction + Send + Sync + 'static,
    ) -> Self {
        Source { f1: Some(Arc::new(f1)), f2: Some(Arc::new(f2)) }
    }

    pub fn is_none(&self) -> bool {
        self.f1.is_none() && self.f2.is_none()
    }

    pub fn total(&self, t: f64) -> Option<GridFunction> {
        match (&self.f1, &self.f2) {
            (None, None) => None,
            (Some(a), None) => Some(a(t)),
            (None, Some(b)) => Some(b(t)),
            (Some(a), Some(b)) => Some(&a(t) + &b(t)),
        }
    }
}

/// Time derivatives of the system at one state.
pub fn rhs(tilde: &TildeCoefficients, u: &GridFunction, v: &GridFunction, f: Option<&GridFunction>) -> (GridFunction, GridFunction) {
    let grid = tilde.grid;
    let n = tilde.dim();
    let len = grid.len();
    let du: Vec<GridFunction> = (0..n).map(|j| u.derivative(j)).collect();
    let (uv, vv) = (u.values(), v.values());
    let mut ut = vec![Complex64::new(0.0, 0.0); len];
    let mut vt = vec![Complex64::new(0.0, 0.0); len];
    for i in 0..len {
        let mut drift = Complex64::new(0.0, 0.0);
        let mut lower = Complex64::new(0.0, 0.0);
        for j in 0..n {
            let d = du[j].values()[i];
            drift += tilde.a_tilde_j[j][i] * d;
            lower += tilde.b_tilde_j[j][i] * d;
        }
        ut[i] = vv[i] / tilde.a0[i] - tilde.c_tilde_0[i] * uv[i] - drift;
        vt[i] = -tilde.b_tilde_0[i] * vv[i] - lower - tilde.d_tilde[i] * uv[i];
    }
    if let Some(f) = f {
        for (a, b) in vt.iter_mut().zip(f.values()) {
            *a += b;
        }
    }
    for j in 0..n {
        // flux_j = −ã_j v + Σ_k ã_jk ∂_k u − c̃_j u
        let mut flux = vec![Complex64::new(0.0, 0.0); len];
        for (i, fl) in flux.iter_mut().enumerate() {
            let mut s = -tilde.a_tilde_j[j][i] * vv[i] - tilde.c_tilde_j[j][i] * uv[i];
            for (k, dk) in du.iter().enumerate() {
                s += tilde.a_tilde(j, k)[i] * dk.values()[i];
            }
            *fl = s;
        }
        let df = GridFunction::from_values(grid, flux).derivative(j);
        for (a, b) in vt.iter_mut().zip(df.values()) {
            *a += b;
        }
    }
    (GridFunction::from_values(grid, ut), GridFunction::from_values(grid, vt))
}

/// `∂_t u` recovered from the first equation of the system (never from differencing snapshots).
pub fn time_derivative(op: &HyperbolicOperator, state: &StateUV) -> Result<GridFunction> {
    let tilde = derive_tilde(op, state.u.grid(), state.t)?;
    Ok(time_derivative_with(&tilde, state))
}

fn time_derivative_with(tilde: &TildeCoefficients, state: &StateUV) -> GridFunction {
    let grid = tilde.grid;
    let mut ut: Vec<Complex64> =
        (0..grid.len()).map(|i| state.v.values()[i] / tilde.a0[i] - tilde.c_tilde_0[i] * state.u.values()[i]).collect();
    for j in 0..tilde.dim() {
        let d = state.u.derivative(j);
        for (i, x) in ut.iter_mut().enumerate() {
            *x -= tilde.a_tilde_j[j][i] * d.values()[i];
        }
    }
    GridFunction::from_values(grid, ut)
}

/// `Xu = a₀ ∂_t u + Σ a_j ∂_j u` with `∂_t u` from the system.
fn x_trace(tilde: &TildeCoefficients, state: &StateUV) -> GridFunction {
    let ut = time_derivative_with(tilde, state);
    let mut acc = ut.mul_real(&tilde.a0);
    for j in 0..tilde.dim() {
        acc = &acc + &state.u.derivative(j).mul_real(&tilde.a[j]);
    }
    acc
}

/// `u(0)` and `Xu(0)` of a trajectory that starts at `t = 0`.
pub fn extract_traces(op: &HyperbolicOperator, traj: &Trajectory) -> Result<(GridFunction, GridFunction)> {
    let first = traj.snapshots.first().filter(|s| s.t == 0.0).ok_or_else(|| Error::param("traj", "no snapshot at t = 0"))?;
    let tilde = derive_tilde(op, traj.grid, 0.0)?;
    Ok((first.u.clone(), x_trace(&tilde, first)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrateConfig {
    /// Requested step; the actual step is `t_end / ceil(t_end / dt)`.
    pub dt: f64,
    pub t_end: f64,
    pub cfl: f64,
    /// Keep every `stride`-th step (the final step is always kept).
    pub stride: usize,
    /// Abort when `max |u|` or `max |v|` exceeds this.
    pub blowup_limit: f64,
    /// Time samples used for the hyperbolicity and CFL check.
    pub check_samples: usize,
}

impl IntegrateConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        IntegrateConfig { dt, t_end, cfl: 0.5, stride: 1, blowup_limit: 1e12, check_samples: 64 }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }

    pub fn steps(&self) -> usize {
        if self.t_end <= 0.0 {
            return 0;
        }
        ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub grid: Grid,
    /// Step actually used.
    pub dt: f64,
    pub stride: usize,
    pub c_max: f64,
    pub snapshots: Vec<StateUV>,
}

impl Trajectory {
    pub fn last(&self) -> &StateUV {
        self.snapshots.last().expect("trajectory has the initial snapshot")
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }
}

fn finite_below(u: &GridFunction, limit: f64) -> bool {
    u.values().iter().all(|c| c.re.is_finite() && c.im.is_finite() && c.norm() <= limit)
}

/// RK4 on the system from `v(0) = u₁ + c₀(0) u₀`.
pub fn integrate(
    op: &HyperbolicOperator,
    grid: Grid,
    data: &CauchyData,
    source: &Source,
    cfg: &IntegrateConfig,
) -> Result<Trajectory> {
    grid.ensure_same(&data.u0.grid())?;
    grid.ensure_same(&data.u1.grid())?;
    if !(cfg.dt > 0.0) || !(cfg.t_end >= 0.0) {
        return Err(Error::param("dt", format!("dt={} and T={} must be positive", cfg.dt, cfg.t_end)));
    }
    let h = check_hyperbolicity(op, grid, cfg.t_end, cfg.check_samples)?;
    let limit = cfg.cfl * grid.spacing() / h.c_max;
    if cfg.dt > limit * (1.0 + 1e-12) {
        return Err(Error::CflViolation { dt: cfg.dt, limit, cfl: cfg.cfl, c_max: h.c_max });
    }
    let frozen = if op.is_time_independent() { Some(derive_tilde(op, grid, 0.0)?) } else { None };
    let tilde_at = |t: f64| -> Result<TildeCoefficients> {
        match &frozen {
            Some(tl) => Ok(tl.clone()),
            None => derive_tilde(op, grid, t),
        }
    };
    let c0 = op.c0().sample(grid, 0.0);
    let v0 = &data.u1 + &data.u0.mul_real(&c0);
    let steps = cfg.steps();
    let dt = if steps == 0 { cfg.dt } else { cfg.t_end / steps as f64 };
    let mut state = StateUV { t: 0.0, u: data.u0.clone(), v: v0 };
    let mut snapshots = vec![state.clone()];
    let eval = |t: f64, u: &GridFunction, v: &GridFunction| -> Result<(GridFunction, GridFunction)> {
        let tl = tilde_at(t)?;
        let f = source.total(t);
        Ok(rhs(&tl, u, v, f.as_ref()))
    };
    for step in 1..=steps {
        let t = state.t;
        let (k1u, k1v) = eval(t, &state.u, &state.v)?;
        let (k2u, k2v) = eval(t + 0.5 * dt, &state.u.axpy(0.5 * dt, &k1u), &state.v.axpy(0.5 * dt, &k1v))?;
        let (k3u, k3v) = eval(t + 0.5 * dt, &state.u.axpy(0.5 * dt, &k2u), &state.v.axpy(0.5 * dt, &k2v))?;
        let (k4u, k4v) = eval(t + dt, &state.u.axpy(dt, &k3u), &state.v.axpy(dt, &k3v))?;
        let combine = |x: &GridFunction, k1: &GridFunction, k2: &GridFunction, k3: &GridFunction, k4: &GridFunction| {
            let vals = (0..grid.len())
                .map(|i| {
                    x.values()[i]
                        + dt / 6.0
                            * (k1.values()[i] + 2.0 * k2.values()[i] + 2.0 * k3.values()[i] + k4.values()[i])
                })
                .collect();
            GridFunction::from_values(grid, vals)
        };
        let u = combine(&state.u, &k1u, &k2u, &k3u, &k4u);
        let v = combine(&state.v, &k1v, &k2v, &k3v, &k4v);
        let t_new = if step == steps { cfg.t_end } else { step as f64 * dt };
        if !finite_below(&u, cfg.blowup_limit) || !finite_below(&v, cfg.blowup_limit) {
            return Err(Error::BlowUp { t: t_new, limit: cfg.blowup_limit });
        }
        state = StateUV { t: t_new, u, v };
        if step % cfg.stride == 0 || step == steps {
            snapshots.push(state.clone());
        }
    }
    Ok(Trajectory { grid, dt, stride: cfg.stride, c_max: h.c_max, snapshots })
}

/// `u`, `∂_t u` and `∂_t² u` at one time.
#[derive(Clone, Debug)]
pub struct Jet {
    pub u: GridFunction,
    pub u_t: GridFunction,
    pub u_tt: GridFunction,
}

fn sample_dt(f: &crate::field::CoefficientField, grid: Grid, t: f64) -> Vec<f64> {
    f.sample_dt(grid, t)
}

/// `Lu` assembled from the divergence form of the operator.
pub fn assemble_direct(op: &HyperbolicOperator, grid: Grid, t: f64, jet: &Jet) -> Result<GridFunction> {
    let n = op.dim();
    let s = |f: &crate::field::CoefficientField| f.sample(grid, t);
    let (u, ut, utt) = (&jet.u, &jet.u_t, &jet.u_tt);
    // ∂_t(a₀ ∂_t u)
    let mut acc = &ut.mul_real(&sample_dt(op.a0(), grid, t)) + &utt.mul_real(&s(op.a0()));
    for j in 0..n {
        let aj = s(op.a(j));
        let dju = u.derivative(j);
        // ∂_t(a_j ∂_j u) + ∂_j(a_j ∂_t u)
        acc = &acc + &dju.mul_real(&sample_dt(op.a(j), grid, t));
        acc = &acc + &ut.derivative(j).mul_real(&aj);
        acc = &acc + &ut.mul_real(&aj).derivative(j);
        // − ∂_j(a_jk ∂_k u)
        let mut inner = GridFunction::zeros(grid);
        for k in 0..n {
            inner = &inner + &u.derivative(k).mul_real(&s(op.a_jk(j, k)));
        }
        acc = &acc - &inner.derivative(j);
        // b_j ∂_j u + ∂_j(c_j u)
        acc = &acc + &dju.mul_real(&s(op.b(j)));
        acc = &acc + &u.mul_real(&s(op.c(j))).derivative(j);
    }
    // b₀ ∂_t u + ∂_t(c₀ u) + d u
    acc = &acc + &ut.mul_real(&s(op.b0()));
    acc = &acc + &u.mul_real(&sample_dt(op.c0(), grid, t));
    acc = &acc + &ut.mul_real(&s(op.c0()));
    acc = &acc + &u.mul_real(&s(op.d()));
    Ok(acc)
}

/// `Lu` assembled from `(Y* + b̃₀)(X + c₀)u − L̃₂u + L̃₁u + d̃u`.
pub fn assemble_factored(op: &HyperbolicOperator, grid: Grid, t: f64, jet: &Jet) -> Result<GridFunction> {
    let n = op.dim();
    let tl = derive_tilde(op, grid, t)?;
    let (u, ut, utt) = (&jet.u, &jet.u_t, &jet.u_tt);
    // w = (X + c₀) u and its time derivative
    let mut w = &ut.mul_real(&tl.a0) + &u.mul_real(&tl.c0);
    let mut wt = &(&ut.mul_real(&sample_dt(op.a0(), grid, t)) + &utt.mul_real(&tl.a0))
        + &(&u.mul_real(&sample_dt(op.c0(), grid, t)) + &ut.mul_real(&tl.c0));
    for j in 0..n {
        w = &w + &u.derivative(j).mul_real(&tl.a[j]);
        wt = &wt + &u.derivative(j).mul_real(&sample_dt(op.a(j), grid, t));
        wt = &wt + &ut.derivative(j).mul_real(&tl.a[j]);
    }
    // Y* w = ∂_t w + Σ ∂_j(ã_j w)
    let mut acc = &wt + &w.mul_real(&tl.b_tilde_0);
    for j in 0..n {
        acc = &acc + &w.mul_real(&tl.a_tilde_j[j]).derivative(j);
        let mut inner = GridFunction::zeros(grid);
        for k in 0..n {
            inner = &inner + &u.derivative(k).mul_real(tl.a_tilde(j, k));
        }
        acc = &acc - &inner.derivative(j);
        acc = &acc + &u.derivative(j).mul_real(&tl.b_tilde_j[j]);
        acc = &acc + &u.mul_real(&tl.c_tilde_j[j]).derivative(j);
    }
    Ok(&acc + &u.mul_real(&tl.d_tilde))
}

type JetFn = Arc<dyn Fn(f64, &[f64]) -> [Complex64; 3] + Send + Sync>;

/// A closed-form `u*(t, x)` with its first two time derivatives, for manufactured sources.
#[derive(Clone)]
pub struct Manufactured {
    label: String,
    eval: JetFn,
}

impl fmt::Debug for Manufactured {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Manufactured").field("label", &self.label).finish()
    }
}

impl Manufactured {
    /// `eval(t, x) = [u, ∂_t u, ∂_t² u]`.
    pub fn new(label: impl Into<String>, eval: impl Fn(f64, &[f64]) -> [Complex64; 3] + Send + Sync + 'static) -> Self {
        Manufactured { label: label.into(), eval: Arc::new(eval) }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn jet(&self, grid: Grid, t: f64) -> Jet {
        let rows: Vec<[Complex64; 3]> = (0..grid.len()).map(|i| (self.eval)(t, &grid.coordinates(i)[..grid.dim()])).collect();
        let part = |m: usize| GridFunction::from_values(grid, rows.iter().map(|r| r[m]).collect());
        Jet { u: part(0), u_t: part(1), u_tt: part(2) }
    }

    /// `(u*(0), Xu*(0))`.
    pub fn cauchy(&self, op: &HyperbolicOperator, grid: Grid) -> Result<CauchyData> {
        let state = self.state(op, grid, 0.0)?;
        let c0 = op.c0().sample(grid, 0.0);
        Ok(CauchyData { u1: &state.v - &state.u.mul_real(&c0), u0: state.u })
    }

    /// `(u*, Xu* + c₀u*)` at time `t`.
    pub fn state(&self, op: &HyperbolicOperator, grid: Grid, t: f64) -> Result<StateUV> {
        let jet = self.jet(grid, t);
        let tl = derive_tilde(op, grid, t)?;
        let mut v = &jet.u_t.mul_real(&tl.a0) + &jet.u.mul_real(&tl.c0);
        for j in 0..op.dim() {
            v = &v + &jet.u.derivative(j).mul_real(&tl.a[j]);
        }
        Ok(StateUV { t, u: jet.u, v })
    }

    /// `f = L u*`, assembled directly.
    pub fn source(&self, op: &HyperbolicOperator, grid: Grid) -> Source {
        let (me, op) = (self.clone(), op.clone());
        Source::single(move |t| assemble_direct(&op, grid, t, &me.jet(grid, t)).expect("grid matches operator"))
    }
}

/// Support tracking against `support0 + c_max t + tolerance_cells Δx`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteSpeedReport {
    pub pass: bool,
    pub c_max: f64,
    pub tolerance_cells: usize,
    /// `(t, measured support radius beyond support0, allowed radius)` per snapshot.
    pub rows: Vec<(f64, f64, f64)>,
    /// Largest `(measured − allowed) / Δx`.
    pub max_excess_cells: f64,
    /// Largest `measured / t` over the second half of the run.
    pub growth_rate: f64,
}

fn distance_to_interval(x: f64, lo: f64, hi: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let r = (x - lo).rem_euclid(two_pi);
    let width = hi - lo;
    if r <= width {
        0.0
    } else {
        (r - width).min(two_pi - r)
    }
}

/// Checks that `{|u| > 1e−8 max|u|}` stays within `support0` widened by `c_max t + tol·Δx`.
pub fn finite_speed_check(traj: &Trajectory, support0: (f64, f64), tolerance_cells: usize) -> Result<FiniteSpeedReport> {
    if traj.grid.dim() != 1 {
        return Err(Error::param("grid", "finite speed check is one-dimensional"));
    }
    let (lo, hi) = support0;
    if !(hi >= lo && hi - lo < 2.0 * std::f64::consts::PI) {
        return Err(Error::param("support0", format!("[{lo}, {hi}] is not a proper interval")));
    }
    let dx = traj.grid.spacing();
    let t_end = traj.last().t;
    let mut report = FiniteSpeedReport {
        pass: true,
        c_max: traj.c_max,
        tolerance_cells,
        rows: Vec::new(),
        max_excess_cells: f64::NEG_INFINITY,
        growth_rate: 0.0,
    };
    for s in &traj.snapshots {
        let peak = s.u.linf_norm();
        let mut radius = 0.0f64;
        if peak > 0.0 {
            for (i, c) in s.u.values().iter().enumerate() {
                if c.norm() > 1e-8 * peak {
                    radius = radius.max(distance_to_interval(traj.grid.coordinates(i)[0], lo, hi));
                }
            }
        }
        let allowed = traj.c_max * s.t + tolerance_cells as f64 * dx;
        report.max_excess_cells = report.max_excess_cells.max((radius - allowed) / dx);
        if radius > allowed {
            report.pass = false;
        }
        if s.t >= 0.5 * t_end && s.t > 0.0 {
            report.growth_rate = report.growth_rate.max(radius / s.t);
        }
        report.rows.push((s.t, radius, allowed));
    }
    Ok(report)
}
