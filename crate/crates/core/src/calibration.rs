//! Measured-constant regression: a calibrated run records `C*` per check id, later runs pass
//! when the measured value stays within `1.25 · C*`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::K0Table;

pub const CALIBRATION_VERSION: u32 = 1;

/// Allowed growth of a calibrated constant.
pub const TOLERANCE_FACTOR: f64 = 1.25;

/// Seed of the calibration run; `verify` defaults to a different one.
pub const CALIBRATION_SEED: u64 = 1;

/// The calibration file committed with the crate.
pub const EMBEDDED: &str = include_str!("../calibration.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub version: u32,
    pub seed: u64,
    pub grid: usize,
    /// Constant in `ν 2^{−ν} ≤ c₀ δ / ‖a‖_LL`.
    pub c0: f64,
    /// Weight exponent of the energy estimate.
    pub gamma0: f64,
    /// `(A_{L∞}/δ₀, K₀)` pairs.
    pub k0_table: Vec<(f64, f64)>,
    /// `C*` per check id.
    pub constants: BTreeMap<String, f64>,
}

/// One line of a verification report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    /// `measured ≤ threshold`.
    pub fn at_most(id: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Check { id: id.into(), measured, threshold, pass: measured <= threshold }
    }

    /// `measured ≥ threshold`.
    pub fn at_least(id: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Check { id: id.into(), measured, threshold, pass: measured >= threshold }
    }

    pub fn flag(id: impl Into<String>, ok: bool) -> Self {
        let v = if ok { 1.0 } else { 0.0 };
        Check { id: id.into(), measured: v, threshold: 1.0, pass: ok }
    }
}

impl Calibration {
    pub fn new(grid: usize) -> Self {
        Calibration {
            version: CALIBRATION_VERSION,
            seed: CALIBRATION_SEED,
            grid,
            c0: 0.0,
            gamma0: 0.0,
            k0_table: Vec::new(),
            constants: BTreeMap::new(),
        }
    }

    pub fn embedded() -> Result<Self> {
        Self::parse(EMBEDDED, Path::new("calibration.toml"))
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let c: Calibration = toml::from_str(text).map_err(|e| Error::format(origin, e))?;
        if c.version != CALIBRATION_VERSION {
            return Err(Error::format(origin, format!("unsupported calibration version {}", c.version)));
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::format(path, e))?;
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn constant(&self, id: &str) -> Result<f64> {
        self.constants.get(id).copied().ok_or_else(|| Error::MissingCalibration(id.to_string()))
    }

    pub fn record(&mut self, id: impl Into<String>, value: f64) {
        self.constants.insert(id.into(), value);
    }

    /// `measured ≤ 1.25 · C*`.
    pub fn check(&self, id: &str, measured: f64) -> Result<Check> {
        let c = self.constant(id)?;
        Ok(Check::at_most(id, measured, TOLERANCE_FACTOR * c))
    }

    pub fn k0(&self) -> Result<K0Table> {
        if self.k0_table.is_empty() {
            return Err(Error::MissingCalibration("k0_table".into()));
        }
        K0Table::from_points(self.k0_table.clone())
    }

    /// Every constant multiplied by `factor` (harness self-test).
    pub fn scaled(&self, factor: f64) -> Self {
        let mut c = self.clone();
        for v in c.constants.values_mut() {
            *v *= factor;
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let mut c = Calibration::new(256);
        c.c0 = 0.25;
        c.gamma0 = 2.0;
        c.k0_table = vec![(1.0, 0.1), (4.0, 0.3)];
        c.record("defect.adjoint_defect.left", 1.5);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cal.toml");
        c.save(&p).unwrap();
        assert_eq!(Calibration::load(&p).unwrap(), c);
    }

    #[test]
    fn checks_use_the_tolerance_factor() {
        let mut c = Calibration::new(64);
        c.record("x", 2.0);
        assert!(c.check("x", 2.5).unwrap().pass);
        assert!(!c.check("x", 2.51).unwrap().pass);
        assert!(!c.scaled(0.5).check("x", 2.0).unwrap().pass);
        assert!(matches!(c.check("y", 1.0), Err(Error::MissingCalibration(_))));
    }

    #[test]
    fn embedded_file_parses() {
        let c = Calibration::embedded().unwrap();
        assert_eq!(c.seed, CALIBRATION_SEED);
    }
}
