//! Randomized lower bounds for operator norms between (log-)Sobolev spaces.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::{Grid, GridFunction};
use crate::norms::{norm_with, LogSobolevIndex, NormKind};
use crate::random::band_limited;

/// A linear map on grid functions.
pub trait LinearOperator: Sync {
    fn apply(&self, u: &GridFunction) -> GridFunction;
}

impl<F> LinearOperator for F
where
    F: Fn(&GridFunction) -> GridFunction + Sync,
{
    fn apply(&self, u: &GridFunction) -> GridFunction {
        self(u)
    }
}

/// How trial functions are drawn and measured.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub trials: usize,
    pub seed: u64,
    /// Spectral envelope `max(1, |ξ|)^{−decay}`.
    pub decay: f64,
    /// Largest excited frequency; `None` means `N / 4`.
    pub bandwidth: Option<usize>,
    pub norm: NormKind,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig { trials: 100, seed: 0, decay: 1.0, bandwidth: None, norm: NormKind::Multiplier }
    }
}

impl TrialConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        TrialConfig { trials, seed, ..Default::default() }
    }

    pub fn bandwidth_for(&self, grid: Grid) -> usize {
        self.bandwidth.unwrap_or(grid.points_per_axis() / 4)
    }

    pub fn trial(&self, grid: Grid, i: usize) -> GridFunction {
        band_limited(grid, self.seed, i as u64, self.decay, self.bandwidth_for(grid))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorNormEstimate {
    pub source_index: LogSobolevIndex,
    pub target_index: LogSobolevIndex,
    pub trials: usize,
    /// Largest ratio `‖op u‖_target / majorant(u)` over the trials.
    pub measured_norm: f64,
    pub trial_seed: u64,
    /// Trial that attained the maximum.
    pub worst_trial: usize,
}

/// `max ‖op u‖_target / ‖u‖_source` over seeded random band-limited `u`.
pub fn estimate_operator_norm(
    op: &dyn LinearOperator,
    grid: Grid,
    source: LogSobolevIndex,
    target: LogSobolevIndex,
    trials: usize,
    seed: u64,
) -> OperatorNormEstimate {
    estimate_with_majorant(op, grid, target, &[(1.0, source)], &TrialConfig::new(trials, seed))
}

/// `max ‖op u‖_target / Σ_i w_i ‖u‖_{source_i}`. Trials whose majorant vanishes are skipped.
///
/// Each trial draws from its own random stream and the maximum is reduced in trial order, so the
/// result does not depend on thread scheduling and can only grow with `cfg.trials`.
pub fn estimate_with_majorant(
    op: &dyn LinearOperator,
    grid: Grid,
    target: LogSobolevIndex,
    majorant: &[(f64, LogSobolevIndex)],
    cfg: &TrialConfig,
) -> OperatorNormEstimate {
    assert!(!majorant.is_empty(), "majorant needs at least one term");
    let ratios: Vec<f64> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let u = cfg.trial(grid, i);
            let den: f64 = majorant.iter().map(|&(w, idx)| w * norm_with(cfg.norm, &u, idx)).sum();
            let num = norm_with(cfg.norm, &op.apply(&u), target);
            if den > 0.0 {
                num / den
            } else {
                0.0
            }
        })
        .collect();
    let (worst_trial, measured_norm) =
        ratios.iter().copied().enumerate().fold((0, 0.0), |(bi, bv), (i, v)| if v > bv { (i, v) } else { (bi, bv) });
    OperatorNormEstimate {
        source_index: majorant[0].1,
        target_index: target,
        trials: cfg.trials,
        measured_norm,
        trial_seed: cfg.seed,
        worst_trial,
    }
}
