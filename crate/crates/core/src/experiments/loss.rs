//! Measured loss of derivatives.
//!
//! A single Fourier mode `e^{ik₀x}` is launched as a right-moving wave. At each snapshot
//! `σ*(t)` is the largest `σ` with `E_σ(t) ≤ M E_s(0)`, where
//! `E_σ = (‖u‖²_{H^σ} + ‖∂_t u‖²_{H^{σ−1}})^{½}`. Measuring against the fixed index `s` at
//! `t = 0` is what makes `σ*` move at all: for a single mode both sides of
//! `E_σ(t) ≤ M E_σ(0)` scale by the same `⟨k₀⟩^σ`. If `E(t) ≈ k₀^{λt} E(0)` then
//! `σ*(t) ≈ s + ln M / ln⟨k₀⟩ − λt`, so one slope is fitted jointly over all frequencies with
//! one intercept per frequency.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::families::CoefficientFamily;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::norms::{sobolev_norm_multiplier, LogSobolevIndex};
use crate::solver::{integrate, select_lambda, time_derivative, CauchyData, IntegrateConfig, K0Table, LambdaInputs, Source};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub grid_n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub frequencies: Vec<i64>,
    pub s: f64,
    /// Growth allowance `M > 1`.
    pub m: f64,
    /// Snapshots used by the fit (at least 5).
    pub samples: usize,
    /// `σ*` is searched in `[s − window, s + window]`.
    pub sigma_window: f64,
    pub bisection_tolerance: f64,
    /// RMS fit residual above which the fit is flagged inconclusive.
    pub residual_threshold: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            grid_n: 256,
            dt: 2e-3,
            t_end: 2.0,
            frequencies: vec![8, 16, 32, 64],
            s: 1.0,
            m: 10.0,
            samples: 40,
            sigma_window: 4.0,
            bisection_tolerance: 0.01,
            residual_threshold: 0.1,
        }
    }
}

impl LossConfig {
    fn validate(&self) -> Result<()> {
        let lo = self.frequencies.iter().copied().min().unwrap_or(0);
        let hi = self.frequencies.iter().copied().max().unwrap_or(0);
        if lo < 1 || hi < 8 * lo {
            return Err(Error::param("frequencies", "need positive frequencies spanning at least 3 octaves"));
        }
        if 2 * hi as usize >= self.grid_n {
            return Err(Error::param("frequencies", format!("{hi} is not resolved on {} points", self.grid_n)));
        }
        if !(self.m > 1.0) {
            return Err(Error::param("m", format!("{} must exceed 1", self.m)));
        }
        if self.samples < 5 {
            return Err(Error::param("samples", "the fit needs at least 5 time samples"));
        }
        if !(self.t_end > 0.0 && self.dt > 0.0 && self.sigma_window > 0.0 && self.bisection_tolerance > 0.0) {
            return Err(Error::param("t_end", "t_end, dt, window and tolerance must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRateFit {
    pub family: String,
    pub params: BTreeMap<String, f64>,
    pub frequencies: Vec<i64>,
    pub times: Vec<f64>,
    /// `σ*(t)` per frequency, aligned with `times`.
    pub blowup_times: Vec<Vec<f64>>,
    /// Fitted intercept per frequency.
    pub intercepts: Vec<f64>,
    pub lambda_emp: f64,
    /// RMS deviation of `σ*` from the fitted lines.
    pub fit_residual: f64,
    pub inconclusive: bool,
    /// Some `σ*` hit the edge of the search window.
    pub clamped: bool,
}

fn energy_norm(u: &GridFunction, ut: &GridFunction, sigma: f64) -> f64 {
    let a = sobolev_norm_multiplier(u, LogSobolevIndex::plain(sigma));
    let b = sobolev_norm_multiplier(ut, LogSobolevIndex::plain(sigma - 1.0));
    a.hypot(b)
}

/// Largest `σ` in `[lo, hi]` with `norm(σ) ≤ bound`, to within `tol`; the flag reports clamping.
fn sigma_star(norm: impl Fn(f64) -> f64, bound: f64, lo: f64, hi: f64, tol: f64) -> (f64, bool) {
    if norm(hi) <= bound {
        return (hi, true);
    }
    if norm(lo) > bound {
        return (lo, true);
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if norm(mid) <= bound {
            a = mid;
        } else {
            b = mid;
        }
    }
    (a, false)
}

/// Common slope and per-series intercepts of `y_i(t) ≈ c_i + β t` by least squares; returns
/// `(β, intercepts, rms residual)`.
pub fn pooled_slope(times: &[f64], series: &[Vec<f64>]) -> (f64, Vec<f64>, f64) {
    let n = times.len() as f64;
    let t_mean = times.iter().sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    let means: Vec<f64> = series.iter().map(|y| y.iter().sum::<f64>() / n).collect();
    for (y, ym) in series.iter().zip(&means) {
        for (t, v) in times.iter().zip(y) {
            num += (t - t_mean) * (v - ym);
            den += (t - t_mean) * (t - t_mean);
        }
    }
    let beta = if den > 0.0 { num / den } else { 0.0 };
    let intercepts: Vec<f64> = means.iter().map(|ym| ym - beta * t_mean).collect();
    let mut sq = 0.0;
    let mut count = 0.0f64;
    for (y, c) in series.iter().zip(&intercepts) {
        for (t, v) in times.iter().zip(y) {
            let r = v - c - beta * t;
            sq += r * r;
            count += 1.0;
        }
    }
    (beta, intercepts, (sq / count.max(1.0)).sqrt())
}

/// Runs the single-mode solves (in parallel across frequencies) and fits `λ_emp`.
pub fn loss_rate_experiment(family: &CoefficientFamily, cfg: &LossConfig) -> Result<LossRateFit> {
    cfg.validate()?;
    let grid = Grid::line(cfg.grid_n)?;
    let op = family.operator();
    let steps = IntegrateConfig::new(cfg.dt, cfg.t_end).steps();
    let stride = (steps / cfg.samples).max(1);
    let a0 = family.coefficient.evaluate(0.0, &[0.0]);
    let runs: Vec<Result<(Vec<f64>, Vec<f64>, bool)>> = cfg
        .frequencies
        .par_iter()
        .map(|&k| {
            let u0 = GridFunction::plane_wave(grid, [k, 0]);
            let u1 = u0.scale_complex(Complex64::new(0.0, -(k as f64) * a0.sqrt()));
            let data = CauchyData { u0, u1 };
            let traj = integrate(&op, grid, &data, &Source::none(), &IntegrateConfig::new(cfg.dt, cfg.t_end).with_stride(stride))?;
            let ut0 = time_derivative(&op, &traj.snapshots[0])?;
            let bound = cfg.m * energy_norm(&traj.snapshots[0].u, &ut0, cfg.s);
            let mut times = Vec::new();
            let mut sigmas = Vec::new();
            let mut clamped = false;
            for state in &traj.snapshots {
                let ut = time_derivative(&op, state)?;
                let (sig, c) = sigma_star(
                    |sigma| energy_norm(&state.u, &ut, sigma),
                    bound,
                    cfg.s - cfg.sigma_window,
                    cfg.s + cfg.sigma_window,
                    cfg.bisection_tolerance,
                );
                clamped |= c;
                times.push(state.t);
                sigmas.push(sig);
            }
            Ok((times, sigmas, clamped))
        })
        .collect();
    let mut times = Vec::new();
    let mut blowup_times = Vec::new();
    let mut clamped = false;
    for r in runs {
        let (t, s, c) = r?;
        times = t;
        blowup_times.push(s);
        clamped |= c;
    }
    let (beta, intercepts, fit_residual) = pooled_slope(&times, &blowup_times);
    Ok(LossRateFit {
        family: family.id.clone(),
        params: family.params.clone(),
        frequencies: cfg.frequencies.clone(),
        times,
        blowup_times,
        intercepts,
        lambda_emp: -beta,
        fit_residual,
        inconclusive: fit_residual > cfg.residual_threshold || clamped,
        clamped,
    })
}

/// Time samples used to measure `A_LL`: fine enough to resolve the fastest oscillation of the
/// registered families.
pub const LAMBDA_TIME_SAMPLES: usize = 4000;

/// `select_lambda` for the family's operator over `[0, t_end]`.
pub fn theoretical_lambda(family: &CoefficientFamily, grid: Grid, t_end: f64, table: &K0Table) -> Result<(LambdaInputs, f64)> {
    let inputs = LambdaInputs::measure(&family.operator(), grid, t_end, LAMBDA_TIME_SAMPLES)?;
    Ok((inputs, select_lambda(&inputs, table)))
}
