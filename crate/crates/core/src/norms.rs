//! Sobolev and log-corrected Sobolev norms, and pair-sweep seminorms of sampled coefficients.
//!
//! Two Sobolev norms are provided. The dyadic one is the ℓ² norm of
//! `(k+1)^{shift} 2^{ks} ‖Δ_k u‖`; the multiplier one is
//! `‖(1+|ξ|²)^{s/2} Log(2+|ξ|)^{shift} û‖`. They are equivalent with constants that depend on
//! `s` only (see `tests/norm_equivalence.rs` for the measured values).
//!
//! Seminorms are lower bounds obtained by sweeping every pair of grid points whose distance
//! is at least `min_separation`.

use serde::{Deserialize, Serialize};

use crate::dyadic::{block_norms, dyadic_block, low_pass};
use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// Order `s` plus a half-logarithmic shift in `{−½, 0, +½}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogSobolevIndex {
    s: f64,
    log_shift: f64,
}

impl LogSobolevIndex {
    pub fn new(s: f64, log_shift: f64) -> Result<Self> {
        if ![-0.5, 0.0, 0.5].contains(&log_shift) {
            return Err(Error::param("log_shift", format!("{log_shift} not in {{-0.5, 0, 0.5}}")));
        }
        if !s.is_finite() {
            return Err(Error::param("s", "must be finite"));
        }
        Ok(LogSobolevIndex { s, log_shift })
    }

    /// `H^s`.
    pub fn plain(s: f64) -> Self {
        LogSobolevIndex { s, log_shift: 0.0 }
    }

    /// `H^{s+½log}`.
    pub fn plus_half_log(s: f64) -> Self {
        LogSobolevIndex { s, log_shift: 0.5 }
    }

    /// `H^{s−½log}`.
    pub fn minus_half_log(s: f64) -> Self {
        LogSobolevIndex { s, log_shift: -0.5 }
    }

    pub fn l2() -> Self {
        Self::plain(0.0)
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn log_shift(&self) -> f64 {
        self.log_shift
    }

    /// Weight of the multiplier-side norm at frequency magnitude `r`.
    pub fn multiplier_weight(&self, r: f64) -> f64 {
        let w = (1.0 + r * r).powf(0.5 * self.s);
        if self.log_shift == 0.0 {
            w
        } else {
            w * (2.0 + r).ln().powf(self.log_shift)
        }
    }

    /// Weight of block `k` in the dyadic norm.
    pub fn dyadic_weight(&self, k: usize) -> f64 {
        ((k + 1) as f64).powf(self.log_shift) * 2f64.powf(k as f64 * self.s)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Dyadic,
    #[default]
    Multiplier,
}

/// Dyadic-sequence norm.
pub fn sobolev_norm(u: &GridFunction, idx: LogSobolevIndex) -> f64 {
    block_norms(u)
        .iter()
        .enumerate()
        .map(|(k, n)| (idx.dyadic_weight(k) * n).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Multiplier-side norm `‖(1+|D|²)^{s/2} Λ^{shift} u‖_{L²}` with `Λ = Log(2+|D|)`.
pub fn sobolev_norm_multiplier(u: &GridFunction, idx: LogSobolevIndex) -> f64 {
    let grid = u.grid();
    u.spectrum()
        .iter()
        .enumerate()
        .map(|(i, c)| (idx.multiplier_weight(grid.frequency_magnitude(i)) * c.norm()).powi(2))
        .sum::<f64>()
        .sqrt()
}

pub fn norm_with(kind: NormKind, u: &GridFunction, idx: LogSobolevIndex) -> f64 {
    match kind {
        NormKind::Dyadic => sobolev_norm(u, idx),
        NormKind::Multiplier => sobolev_norm_multiplier(u, idx),
    }
}

/// `sup` over stored time samples.
pub fn time_sup(values: &[f64]) -> f64 {
    values.iter().copied().fold(0.0, f64::max)
}

/// Trapezoidal rule over (possibly nonuniform) sample times.
pub fn time_integral(times: &[f64], values: &[f64]) -> f64 {
    assert_eq!(times.len(), values.len());
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Real samples with the metric used by the pair sweeps.
#[derive(Clone, Copy, Debug)]
pub struct Samples<'a> {
    values: &'a [f64],
    spacing: f64,
    periodic: bool,
}

impl<'a> Samples<'a> {
    /// Samples on the periodic grid of `[0, 2π)`; distances are periodic.
    pub fn periodic(values: &'a [f64]) -> Self {
        Samples { values, spacing: 2.0 * std::f64::consts::PI / values.len() as f64, periodic: true }
    }

    /// Samples of a function on an interval with uniform `spacing`.
    pub fn interval(values: &'a [f64], spacing: f64) -> Self {
        Samples { values, spacing, periodic: false }
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn values(&self) -> &[f64] {
        self.values
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn max_offset(&self) -> usize {
        let n = self.values.len();
        if self.periodic {
            n / 2
        } else {
            n.saturating_sub(1)
        }
    }

    /// `max |a(y) − a(y')| / weight(|y − y'|)` over pairs at distance ≥ `min_separation`.
    fn max_pair_ratio(&self, min_separation: f64, weight: impl Fn(f64) -> f64) -> f64 {
        let a = self.values;
        let n = a.len();
        let mut best = 0.0f64;
        for m in 1..=self.max_offset() {
            let d = m as f64 * self.spacing;
            if d < min_separation * (1.0 - 1e-12) {
                continue;
            }
            let pairs = if self.periodic { n } else { n - m };
            let mut diff = 0.0f64;
            for i in 0..pairs {
                let j = if self.periodic { (i + m) % n } else { i + m };
                diff = diff.max((a[i] - a[j]).abs());
            }
            best = best.max(diff / weight(d));
        }
        best
    }

    fn check_separation(&self, min_separation: f64) -> Result<()> {
        if !(min_separation >= self.spacing * (1.0 - 1e-12)) {
            return Err(Error::param(
                "min_separation",
                format!("{min_separation} is below the grid spacing {}", self.spacing),
            ));
        }
        Ok(())
    }
}

/// Log-Lipschitz modulus `r (1 + |ln r|)`.
pub fn ll_modulus(r: f64) -> f64 {
    r * (1.0 + r.ln().abs())
}

/// Best Log-Lipschitz constant over sample pairs at distance ≥ `min_separation`.
pub fn ll_seminorm(a: Samples<'_>, min_separation: f64) -> Result<f64> {
    a.check_separation(min_separation)?;
    Ok(a.max_pair_ratio(min_separation, ll_modulus))
}

/// Hölder seminorm `sup |a(y) − a(y')| / |y − y'|^α` over all sample pairs.
pub fn holder_seminorm(a: Samples<'_>, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::param("alpha", format!("{alpha} not in (0, 1]")));
    }
    Ok(a.max_pair_ratio(a.spacing, |d| d.powf(alpha)))
}

/// `‖a‖_{C^α} = ‖a‖_{L∞} + sup ratio`. `alpha = 1` gives the Lipschitz norm.
pub fn holder_norm(a: Samples<'_>, alpha: f64) -> Result<f64> {
    Ok(a.sup() + holder_seminorm(a, alpha)?)
}

pub fn lipschitz_norm(a: Samples<'_>) -> f64 {
    holder_norm(a, 1.0).expect("alpha = 1 is valid")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeminormReport {
    pub l_infinity: f64,
    pub ll_seminorm: f64,
    pub holder_alpha: f64,
    pub holder_norm: f64,
    pub lipschitz_norm: f64,
}

pub fn seminorm_report(a: Samples<'_>, alpha: f64) -> Result<SeminormReport> {
    Ok(SeminormReport {
        l_infinity: a.sup(),
        ll_seminorm: ll_seminorm(a, a.spacing)?,
        holder_alpha: alpha,
        holder_norm: holder_norm(a, alpha)?,
        lipschitz_norm: lipschitz_norm(a),
    })
}

/// Measured ratios of the dyadic coefficient bounds at one block index.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicBoundRow {
    pub k: usize,
    /// `‖Δ_k a‖∞ / (k 2^{−k} ‖a‖_LL)`.
    pub block_ll: f64,
    /// `‖a − S_k a‖∞ / ((k+1) 2^{−k} ‖a‖_LL)`.
    pub tail_ll: f64,
    /// `‖a − S_k a‖∞ / ((k+1) ‖a‖_LL)`, the weaker form without the `2^{−k}` factor.
    pub tail_ll_without_decay: f64,
    /// `‖∇S_k a‖∞ / ((k+1) ‖a‖_LL)`.
    pub gradient_ll: f64,
    /// `‖S_k a‖_Lip / (‖a‖∞ + (k+1) ‖a‖_LL)`.
    pub lipschitz_ll: f64,
    /// `‖Δ_k a‖∞ / (2^{−αk} ‖a‖_{C^α})`.
    pub block_holder: f64,
}

impl DyadicBoundRow {
    pub fn max_ratio(&self) -> f64 {
        [self.block_ll, self.tail_ll, self.gradient_ll, self.lipschitz_ll, self.block_holder]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if num <= 1e-13 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// Ratios of `‖Δ_k a‖∞`, `‖a − S_k a‖∞`, `‖∇S_k a‖∞` and `‖S_k a‖_Lip` to their Log-Lipschitz
/// and Hölder majorants, for `k = 1..=K`. Periodic samples on `[0, 2π)`.
pub fn verify_dyadic_coefficient_bounds(a: &[f64], alpha: f64) -> Result<Vec<DyadicBoundRow>> {
    let samples = Samples::periodic(a);
    let ll = ll_seminorm(samples, samples.spacing())?;
    let hol = holder_norm(samples, alpha)?;
    let sup = samples.sup();
    let grid = crate::grid::Grid::line(a.len())?;
    let u = GridFunction::from_real(grid, a);
    let rows = (1..=grid.max_block())
        .map(|k| {
            let kf = k as f64;
            let decay = 2f64.powi(-(k as i32));
            let block = dyadic_block(&u, k).linf_norm();
            let sk = low_pass(&u, k);
            let tail = (&u - &sk).linf_norm();
            let grad = sk.derivative(0).linf_norm();
            DyadicBoundRow {
                k,
                block_ll: ratio(block, kf * decay * ll),
                tail_ll: ratio(tail, (kf + 1.0) * decay * ll),
                tail_ll_without_decay: ratio(tail, (kf + 1.0) * ll),
                gradient_ll: ratio(grad, (kf + 1.0) * ll),
                lipschitz_ll: ratio(sk.linf_norm() + grad, sup + (kf + 1.0) * ll),
                block_holder: ratio(block, 2f64.powf(-alpha * kf) * hol),
            }
        })
        .collect();
    Ok(rows)
}
