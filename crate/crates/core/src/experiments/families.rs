//! Registry of time-dependent principal coefficients `a(t)` for the one-dimensional operator
//! `∂_t² − ∂_x a(t) ∂_x`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{time_samples, CoefficientField};
use crate::norms::{lipschitz_norm, ll_modulus, ll_seminorm, Samples};
use crate::solver::HyperbolicOperator;

pub const FAMILY_IDS: [&str; 6] = ["constant", "smooth_sine", "tent_t", "ll_cusp", "cgs_oscillatory", "sub_ll"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "class")]
pub enum DeclaredClass {
    Lipschitz,
    Holder { alpha: f64 },
    LogLipschitz,
    /// Modulus `ε (1 + |ln ε|)^β`, `β < 1`.
    SubLl { beta: f64 },
}

impl DeclaredClass {
    pub fn is_log_lipschitz(&self) -> bool {
        matches!(self, DeclaredClass::LogLipschitz)
    }
}

#[derive(Clone, Debug)]
pub struct CoefficientFamily {
    pub id: String,
    /// Effective parameters, defaults included.
    pub params: BTreeMap<String, f64>,
    pub class: DeclaredClass,
    pub coefficient: CoefficientField,
    /// Finitely many frequencies: Lipschitz at fine scales, so refinement cannot show the
    /// Lipschitz norm diverging.
    pub band_limited: bool,
    /// Name of the parameter scaling the non-Lipschitz part, if any.
    pub amplitude_key: Option<&'static str>,
}

impl CoefficientFamily {
    /// `a₀ = 1`, `a₁₁ = a(t)`, no lower-order terms.
    pub fn operator(&self) -> HyperbolicOperator {
        HyperbolicOperator::wave(1).with_a_jk(0, 0, self.coefficient.clone())
    }

    pub fn amplitude(&self) -> Option<f64> {
        self.amplitude_key.map(|k| self.params[k])
    }

    /// Same family with the amplitude parameter replaced.
    pub fn with_amplitude(&self, amplitude: f64) -> Result<Self> {
        let key = self.amplitude_key.ok_or_else(|| Error::param("amplitude", format!("{} has none", self.id)))?;
        let mut p = self.params.clone();
        p.insert(key.to_string(), amplitude);
        build_family(&self.id, &p)
    }
}

fn defaults(id: &str) -> Option<&'static [(&'static str, f64)]> {
    Some(match id {
        "constant" => &[("c", 1.0)],
        "smooth_sine" => &[("A", 0.25), ("omega", 2.0 * PI)],
        "tent_t" => &[("A", 0.5), ("t_star", 0.5)],
        "ll_cusp" => &[("A", 1.0), ("t_star", 0.5)],
        "cgs_oscillatory" => &[("A", 0.5), ("k_min", 8.0), ("octaves", 4.0)],
        "sub_ll" => &[("A", 1.0), ("beta", 0.5), ("t_star", 0.5)],
        _ => return None,
    })
}

/// Parameters shared by every family: positivity floor and the horizon it is checked on.
const COMMON: [(&str, f64); 2] = [("delta0", 0.25), ("t_max", 2.0)];

/// `r (1 + |ln r|)^β` for `r < 1`, continued by 1.
fn modulus(r: f64, beta: f64) -> f64 {
    if r <= 0.0 {
        0.0
    } else if r >= 1.0 {
        1.0
    } else {
        r * (1.0 - r.ln()).powf(beta)
    }
}

fn modulus_dr(r: f64, beta: f64) -> f64 {
    if r <= 0.0 || r >= 1.0 {
        // the cusp has no derivative at 0; one-sided limits are infinite, report 0
        0.0
    } else {
        let l = 1.0 - r.ln();
        l.powf(beta) - beta * l.powf(beta - 1.0)
    }
}

fn cusp(label: String, amp: f64, t_star: f64, beta: f64) -> CoefficientField {
    CoefficientField::temporal(label, move |t| 1.0 + amp * modulus((t - t_star).abs(), beta)).with_time_derivative(
        move |t, _| {
            let r = t - t_star;
            amp * r.signum() * modulus_dr(r.abs(), beta)
        },
    )
}

/// Builds a registered family. Unknown parameter names are rejected, and so is any coefficient
/// dipping below `delta0` on `[0, t_max]`.
pub fn build_family(id: &str, params: &BTreeMap<String, f64>) -> Result<CoefficientFamily> {
    let defs = defaults(id).ok_or_else(|| Error::UnknownFamily(id.to_string()))?;
    let mut p: BTreeMap<String, f64> =
        defs.iter().chain(COMMON.iter()).map(|&(k, v)| (k.to_string(), v)).collect();
    for (k, &v) in params {
        match p.get_mut(k) {
            Some(slot) => *slot = v,
            None => return Err(Error::param("params", format!("`{k}` is not a parameter of {id}"))),
        }
        if !v.is_finite() {
            return Err(Error::param("params", format!("`{k}` = {v} is not finite")));
        }
    }
    let label = format!("{id}{p:?}");
    let (class, coefficient, band_limited, amplitude_key) = match id {
        "constant" => (DeclaredClass::Lipschitz, CoefficientField::constant(p["c"]), true, None),
        "smooth_sine" => {
            let (amp, w) = (p["A"], p["omega"]);
            let f = CoefficientField::temporal(label, move |t| 1.0 + amp * (w * t).sin())
                .with_time_derivative(move |t, _| amp * w * (w * t).cos());
            (DeclaredClass::Lipschitz, f, true, Some("A"))
        }
        "tent_t" => {
            let (amp, ts) = (p["A"], p["t_star"]);
            let f = CoefficientField::temporal(label, move |t| 1.0 + amp * (t - ts).abs())
                .with_time_derivative(move |t, _| amp * (t - ts).signum());
            (DeclaredClass::Lipschitz, f, false, Some("A"))
        }
        "ll_cusp" => (DeclaredClass::LogLipschitz, cusp(label, p["A"], p["t_star"], 1.0), false, Some("A")),
        "sub_ll" => {
            let beta = p["beta"];
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::param("beta", format!("{beta} not in [0, 1)")));
            }
            (DeclaredClass::SubLl { beta }, cusp(label, p["A"], p["t_star"], beta), false, Some("A"))
        }
        "cgs_oscillatory" => {
            let (k_min, octaves) = (p["k_min"], p["octaves"]);
            if !(k_min >= 2.0 && k_min.fract() == 0.0 && octaves >= 1.0 && octaves.fract() == 0.0) {
                return Err(Error::param("k_min", "k_min >= 2 and octaves >= 1 must be integers"));
            }
            let ks: Vec<f64> = (0..octaves as u32).map(|m| k_min * 2f64.powi(m as i32)).collect();
            let amp = p["A"];
            let ks2 = ks.clone();
            let f = CoefficientField::temporal(label, move |t| {
                1.0 + amp * ks.iter().map(|&k| k.ln() / k * (2.0 * k * t).cos()).sum::<f64>()
            })
            .with_time_derivative(move |t, _| -amp * ks2.iter().map(|&k| 2.0 * k.ln() * (2.0 * k * t).sin()).sum::<f64>());
            (DeclaredClass::LogLipschitz, f, true, Some("A"))
        }
        _ => unreachable!("defaults cover the registry"),
    };
    let (delta0, t_max) = (p["delta0"], p["t_max"]);
    let low = time_samples(t_max, 4000).into_iter().map(|t| coefficient.evaluate(t, &[0.0])).fold(f64::INFINITY, f64::min);
    if !(low >= delta0) {
        return Err(Error::param("A", format!("{id}: coefficient reaches {low} < delta0 = {delta0} on [0, {t_max}]")));
    }
    Ok(CoefficientFamily { id: id.to_string(), params: p, class, coefficient, band_limited, amplitude_key })
}

/// Temporal regularity of a family at one sampling resolution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityRow {
    pub spacing: f64,
    pub lipschitz: f64,
    pub ll_seminorm: f64,
    /// `max |a(t + Δ) − a(t)| / (Δ (1 + |ln Δ|))` at the sample spacing `Δ`.
    pub sub_ll_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub family: String,
    pub class: DeclaredClass,
    pub rows: Vec<RegularityRow>,
    pub consistent: bool,
}

/// Samples `a` on `[0, t_max]` at each resolution in `steps` (coarse to fine) and checks the
/// behavior the declared class predicts:
/// Lipschitz norm bounded for Lipschitz families; LL seminorm bounded, with the Lipschitz norm
/// growing unless the family is band limited, for LogLipschitz; the LL ratio at the sample
/// spacing decreasing for SubLl.
pub fn class_consistency(family: &CoefficientFamily, steps: &[usize]) -> Result<ClassReport> {
    if steps.len() < 2 {
        return Err(Error::param("steps", "need at least two resolutions"));
    }
    let t_max = family.params["t_max"];
    let mut rows = Vec::new();
    for &n in steps {
        let values: Vec<f64> = time_samples(t_max, n).into_iter().map(|t| family.coefficient.evaluate(t, &[0.0])).collect();
        let h = t_max / n as f64;
        let s = Samples::interval(&values, h);
        let step = values.windows(2).fold(0.0f64, |m, w| m.max((w[1] - w[0]).abs()));
        rows.push(RegularityRow {
            spacing: h,
            lipschitz: lipschitz_norm(s),
            ll_seminorm: ll_seminorm(s, h)?,
            sub_ll_ratio: step / ll_modulus(h),
        });
    }
    let (first, last) = (rows[0], rows[rows.len() - 1]);
    let bounded = |a: f64, b: f64| b <= 1.25 * a + 1e-12;
    let consistent = match family.class {
        DeclaredClass::Lipschitz | DeclaredClass::Holder { .. } => bounded(first.lipschitz, last.lipschitz),
        DeclaredClass::LogLipschitz => {
            bounded(first.ll_seminorm, last.ll_seminorm)
                && last.ll_seminorm > 0.0
                && (family.band_limited || last.lipschitz > 1.1 * first.lipschitz)
        }
        DeclaredClass::SubLl { .. } => rows.windows(2).all(|w| w[1].sub_ll_ratio < w[0].sub_ll_ratio),
    };
    Ok(ClassReport { family: family.id.clone(), class: family.class, rows, consistent })
}
