//! Trajectory persistence: `meta.json` plus little-endian `f64` pairs `(re, im)` in `u.bin` and
//! `v.bin`, one snapshot after another.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::system::{StateUV, Trajectory};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub version: u32,
    pub dim: usize,
    pub points_per_axis: usize,
    pub dt: f64,
    pub stride: usize,
    pub c_max: f64,
    pub family: String,
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
    pub times: Vec<f64>,
}

impl TrajectoryMeta {
    pub fn describe(traj: &Trajectory, family: impl Into<String>, params: BTreeMap<String, f64>, seed: u64) -> Self {
        TrajectoryMeta {
            version: FORMAT_VERSION,
            dim: traj.grid.dim(),
            points_per_axis: traj.grid.points_per_axis(),
            dt: traj.dt,
            stride: traj.stride,
            c_max: traj.c_max,
            family: family.into(),
            params,
            seed,
            times: traj.times(),
        }
    }
}

fn encode(fs: impl Iterator<Item = Complex64>) -> Vec<u8> {
    let mut out = Vec::new();
    for c in fs {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

fn decode(path: &Path, bytes: &[u8], expected: usize) -> Result<Vec<Complex64>> {
    if bytes.len() != expected * 16 {
        return Err(Error::format(path, format!("expected {} bytes, found {}", expected * 16, bytes.len())));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect())
}

pub fn save_trajectory(dir: &Path, traj: &Trajectory, meta: &TrajectoryMeta) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, bytes: &[u8]| {
        let p = dir.join(name);
        fs::write(&p, bytes).map_err(|e| Error::io(p, e))
    };
    let json = serde_json::to_string_pretty(meta).map_err(|e| Error::format(dir.join("meta.json"), e))?;
    write("meta.json", json.as_bytes())?;
    write("u.bin", &encode(traj.snapshots.iter().flat_map(|s| s.u.values().iter().copied())))?;
    write("v.bin", &encode(traj.snapshots.iter().flat_map(|s| s.v.values().iter().copied())))?;
    Ok(())
}

pub fn load_trajectory(dir: &Path) -> Result<(Trajectory, TrajectoryMeta)> {
    let read = |name: &str| {
        let p = dir.join(name);
        fs::read(&p).map_err(|e| Error::io(p, e))
    };
    let meta_path = dir.join("meta.json");
    let meta: TrajectoryMeta =
        serde_json::from_slice(&read("meta.json")?).map_err(|e| Error::format(&meta_path, e))?;
    if meta.version != FORMAT_VERSION {
        return Err(Error::format(&meta_path, format!("unsupported version {}", meta.version)));
    }
    let grid = Grid::new(meta.dim, meta.points_per_axis)?;
    let total = grid.len() * meta.times.len();
    let u = decode(&dir.join("u.bin"), &read("u.bin")?, total)?;
    let v = decode(&dir.join("v.bin"), &read("v.bin")?, total)?;
    let snapshots = meta
        .times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let span = k * grid.len()..(k + 1) * grid.len();
            StateUV {
                t,
                u: GridFunction::from_values(grid, u[span.clone()].to_vec()),
                v: GridFunction::from_values(grid, v[span].to_vec()),
            }
        })
        .collect();
    Ok((Trajectory { grid, dt: meta.dt, stride: meta.stride, c_max: meta.c_max, snapshots }, meta))
}
