//! Seeded random trial functions.
//!
//! Every trial draws from its own ChaCha stream `(seed, trial)`, so results never depend on
//! how trials are scheduled across threads.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::grid::{Grid, GridFunction};

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Complex Gaussian spectrum with envelope `max(1, |ξ|)^{-decay}`, supported on `|ξ| <= bandwidth`.
pub fn band_limited(grid: Grid, seed: u64, trial: u64, decay: f64, bandwidth: usize) -> GridFunction {
    let mut rng = trial_rng(seed, trial);
    let spectrum = (0..grid.len())
        .map(|i| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let r = grid.frequency_magnitude(i);
            if r > bandwidth as f64 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(re, im) * r.max(1.0).powf(-decay)
            }
        })
        .collect();
    GridFunction::from_spectrum(grid, spectrum)
}

/// Real part of [`band_limited`].
pub fn band_limited_real(grid: Grid, seed: u64, trial: u64, decay: f64, bandwidth: usize) -> GridFunction {
    let u = band_limited(grid, seed, trial, decay, bandwidth);
    GridFunction::from_real(grid, &u.real_values())
}

/// White noise: independent standard normal point values.
pub fn white_noise(grid: Grid, seed: u64, trial: u64) -> GridFunction {
    let mut rng = trial_rng(seed, trial);
    let values = (0..grid.len())
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    GridFunction::from_values(grid, values)
}
