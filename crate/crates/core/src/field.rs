//! Closed-form space-time coefficients.
//!
//! Coefficients are evaluated directly at grid points and at every Runge–Kutta stage time, so
//! no interpolation error is mixed into their regularity.

use std::fmt;
use std::sync::Arc;

use crate::error::Result;
use crate::grid::Grid;
use crate::norms::{ll_seminorm, seminorm_report, Samples, SeminormReport};

type Eval = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// A real coefficient `a(t, x)` on `[0, T₀] × [0, 2π)^d`.
#[derive(Clone)]
pub struct CoefficientField {
    label: String,
    value: Eval,
    time_derivative: Option<Eval>,
    constant: Option<f64>,
    time_independent: bool,
    space_independent: bool,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField")
            .field("label", &self.label)
            .field("constant", &self.constant)
            .field("time_independent", &self.time_independent)
            .field("analytic_dt", &self.time_derivative.is_some())
            .finish()
    }
}

impl CoefficientField {
    pub fn new(label: impl Into<String>, f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        CoefficientField {
            label: label.into(),
            value: Arc::new(f),
            time_derivative: None,
            constant: None,
            time_independent: false,
            space_independent: false,
        }
    }

    pub fn constant(c: f64) -> Self {
        CoefficientField {
            label: format!("{c}"),
            value: Arc::new(move |_, _| c),
            time_derivative: Some(Arc::new(|_, _| 0.0)),
            constant: Some(c),
            time_independent: true,
            space_independent: true,
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// A coefficient that depends on `x` only.
    pub fn spatial(label: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        CoefficientField {
            label: label.into(),
            value: Arc::new(move |_, x| f(x)),
            time_derivative: Some(Arc::new(|_, _| 0.0)),
            constant: None,
            time_independent: true,
            space_independent: false,
        }
    }

    /// A coefficient that depends on `t` only.
    pub fn temporal(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let mut field = Self::new(label, move |t, _| f(t));
        field.space_independent = true;
        field
    }

    /// Attaches the exact `∂_t a`; without it time derivatives use finite differences.
    pub fn with_time_derivative(mut self, df: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.time_derivative = Some(Arc::new(df));
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_constant(&self) -> bool {
        self.constant.is_some()
    }

    pub fn constant_value(&self) -> Option<f64> {
        self.constant
    }

    pub fn is_time_independent(&self) -> bool {
        self.time_independent
    }

    pub fn is_space_independent(&self) -> bool {
        self.space_independent
    }

    pub fn is_zero(&self) -> bool {
        self.constant == Some(0.0)
    }

    pub fn evaluate(&self, t: f64, x: &[f64]) -> f64 {
        (self.value)(t, x)
    }

    /// `∂_t a(t, x)`: exact when provided, else a fourth-order centered difference.
    pub fn evaluate_dt(&self, t: f64, x: &[f64]) -> f64 {
        if let Some(df) = &self.time_derivative {
            return df(t, x);
        }
        let h = 1e-3;
        let f = |s: f64| (self.value)(s, x);
        (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h)
    }

    /// `∂_t² a(t, x)` by a fourth-order centered difference of `∂_t a`.
    pub fn evaluate_dtt(&self, t: f64, x: &[f64]) -> f64 {
        if self.time_independent {
            return 0.0;
        }
        let h = 1e-3;
        let f = |s: f64| self.evaluate_dt(s, x);
        (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h)
    }

    pub fn sample(&self, grid: Grid, t: f64) -> Vec<f64> {
        if let Some(c) = self.constant {
            return vec![c; grid.len()];
        }
        grid.sample(|x| (self.value)(t, x))
    }

    pub fn sample_dt(&self, grid: Grid, t: f64) -> Vec<f64> {
        if self.time_independent {
            return vec![0.0; grid.len()];
        }
        grid.sample(|x| self.evaluate_dt(t, x))
    }

    pub fn sample_dtt(&self, grid: Grid, t: f64) -> Vec<f64> {
        if self.time_independent {
            return vec![0.0; grid.len()];
        }
        grid.sample(|x| self.evaluate_dtt(t, x))
    }

    /// Samples at `times.len()` instants, one row per instant.
    pub fn sample_times(&self, grid: Grid, times: &[f64]) -> Vec<Vec<f64>> {
        times.iter().map(|&t| self.sample(grid, t)).collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        let f = self.value.clone();
        let df = self.time_derivative.clone();
        CoefficientField {
            label: format!("{c}*({})", self.label),
            value: Arc::new(move |t, x| c * f(t, x)),
            time_derivative: df.map(|d| Arc::new(move |t: f64, x: &[f64]| c * d(t, x)) as Eval),
            constant: self.constant.map(|v| c * v),
            time_independent: self.time_independent,
            space_independent: self.space_independent,
        }
    }

    /// Space-time seminorms on `[0, t_max] × grid`, measured on `nt + 1` uniform time samples.
    pub fn space_time_report(&self, grid: Grid, t_max: f64, nt: usize, alpha: f64) -> Result<SpaceTimeReport> {
        let times = time_samples(t_max, nt);
        let rows = self.sample_times(grid, &times);
        let mut spatial_ll = 0.0f64;
        let mut spatial = None::<SeminormReport>;
        // rows constant in x only differ in their sup, so one representative suffices
        let peak = rows.iter().max_by(|a, b| a[0].abs().total_cmp(&b[0].abs()));
        let swept: Vec<&Vec<f64>> = match (self.space_independent, peak) {
            (true, Some(row)) => vec![row],
            _ => rows.iter().collect(),
        };
        for row in swept {
            let r = spatial_report(grid, row, alpha)?;
            spatial_ll = spatial_ll.max(r.ll_seminorm);
            spatial = Some(match spatial {
                None => r,
                Some(acc) => SeminormReport {
                    l_infinity: acc.l_infinity.max(r.l_infinity),
                    ll_seminorm: acc.ll_seminorm.max(r.ll_seminorm),
                    holder_alpha: alpha,
                    holder_norm: acc.holder_norm.max(r.holder_norm),
                    lipschitz_norm: acc.lipschitz_norm.max(r.lipschitz_norm),
                },
            });
        }
        let mut temporal_ll = 0.0f64;
        if !self.time_independent && nt > 0 {
            let dt = t_max / nt as f64;
            let mut column = vec![0.0; times.len()];
            let points = if self.space_independent { 1 } else { grid.len() };
            for i in 0..points {
                for (c, row) in column.iter_mut().zip(&rows) {
                    *c = row[i];
                }
                temporal_ll = temporal_ll.max(ll_seminorm(Samples::interval(&column, dt), dt)?);
            }
        }
        let spatial = spatial.expect("at least one time sample");
        Ok(SpaceTimeReport {
            l_infinity: spatial.l_infinity,
            spatial_ll,
            temporal_ll,
            ll_seminorm: spatial_ll.max(temporal_ll),
            spatial,
            minimum: rows.iter().flatten().fold(f64::INFINITY, |m, &v| m.min(v)),
        })
    }
}

/// Uniform time samples `0, t_max/nt, …, t_max`.
pub fn time_samples(t_max: f64, nt: usize) -> Vec<f64> {
    if nt == 0 {
        return vec![0.0];
    }
    (0..=nt).map(|i| t_max * i as f64 / nt as f64).collect()
}

/// Seminorm report of periodic samples in one space dimension; in two dimensions the pair
/// sweep runs along every grid line of both axes.
pub fn spatial_report(grid: Grid, values: &[f64], alpha: f64) -> Result<SeminormReport> {
    if grid.dim() == 1 {
        return seminorm_report(Samples::periodic(values), alpha);
    }
    let n = grid.points_per_axis();
    let mut acc: Option<SeminormReport> = None;
    let mut line = vec![0.0; n];
    for axis in 0..2 {
        for fixed in 0..n {
            for (m, l) in line.iter_mut().enumerate() {
                let idx = if axis == 0 { fixed * n + m } else { m * n + fixed };
                *l = values[idx];
            }
            let r = seminorm_report(Samples::periodic(&line), alpha)?;
            acc = Some(match acc {
                None => r,
                Some(a) => SeminormReport {
                    l_infinity: a.l_infinity.max(r.l_infinity),
                    ll_seminorm: a.ll_seminorm.max(r.ll_seminorm),
                    holder_alpha: alpha,
                    holder_norm: a.holder_norm.max(r.holder_norm),
                    lipschitz_norm: a.lipschitz_norm.max(r.lipschitz_norm),
                },
            });
        }
    }
    Ok(acc.expect("grid has lines"))
}

/// Measured norms of a space-time coefficient.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpaceTimeReport {
    pub l_infinity: f64,
    /// Largest spatial LL seminorm over the time samples.
    pub spatial_ll: f64,
    /// Largest LL seminorm in `t` over the grid points.
    pub temporal_ll: f64,
    /// `max(spatial_ll, temporal_ll)`.
    pub ll_seminorm: f64,
    /// Spatial report maximized over time samples.
    pub spatial: SeminormReport,
    pub minimum: f64,
}

/// The tent map: distance from `y` to the nearest multiple of `2π`.
pub fn tent(y: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let r = y.rem_euclid(two_pi);
    r.min(two_pi - r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field() {
        let g = Grid::line(16).unwrap();
        let c = CoefficientField::constant(2.5);
        assert!(c.is_constant());
        assert_eq!(c.sample(g, 0.3), vec![2.5; 16]);
        assert_eq!(c.sample_dt(g, 0.3), vec![0.0; 16]);
        let r = c.space_time_report(g, 1.0, 4, 0.5).unwrap();
        assert_eq!(r.ll_seminorm, 0.0);
        assert_eq!(r.l_infinity, 2.5);
    }

    #[test]
    fn finite_difference_matches_analytic_derivative() {
        let g = Grid::line(32).unwrap();
        let a = CoefficientField::new("sin", |t, x| (t * 2.0).sin() * x[0].cos());
        let exact = g.sample(|x| 2.0 * (0.4f64 * 2.0).cos() * x[0].cos());
        for (fd, ex) in a.sample_dt(g, 0.4).iter().zip(&exact) {
            assert!((fd - ex).abs() < 1e-10);
        }
        let exact2 = g.sample(|x| -4.0 * (0.4f64 * 2.0).sin() * x[0].cos());
        for (fd, ex) in a.sample_dtt(g, 0.4).iter().zip(&exact2) {
            assert!((fd - ex).abs() < 1e-7);
        }
    }

    #[test]
    fn temporal_ll_of_tent_in_time() {
        let g = Grid::line(8).unwrap();
        let a = CoefficientField::temporal("tent_t", |t| 1.0 + (t - 0.5).abs());
        let r = a.space_time_report(g, 2.0, 400, 0.5).unwrap();
        assert_eq!(r.spatial_ll, 0.0);
        assert!(r.temporal_ll > 0.9 && r.temporal_ll <= 1.0 + 1e-12, "{}", r.temporal_ll);
        assert!((r.minimum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tent_values() {
        assert_eq!(tent(0.0), 0.0);
        assert!((tent(std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-15);
        assert!((tent(-0.5) - 0.5).abs() < 1e-15);
    }
}
