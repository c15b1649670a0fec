//! Uniform periodic grids on `[0, 2π)^d` and the sampled functions that live on them.
//!
//! A [`GridFunction`] keeps both its point values and its Fourier coefficients. The
//! coefficients are normalized so that `values[x] = Σ_ξ spectrum[ξ] e^{iξ·x}`, which makes
//! the discrete L² norm (mean square over the grid) equal to the ℓ² norm of the spectrum.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
}

impl Grid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) || n < 4 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid { dim, n });
        }
        Ok(Grid { dim, n })
    }

    /// One-dimensional grid with `n` points.
    pub fn line(n: usize) -> Result<Self> {
        Grid::new(1, n)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Largest dyadic block index that can be nonzero on this grid, `log2(n) + 1`.
    pub fn max_block(&self) -> usize {
        self.n.trailing_zeros() as usize + 1
    }

    /// Signed integer frequency of FFT bin `i` along one axis. The Nyquist bin maps to `-n/2`.
    pub fn axis_frequency(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    fn axis_indices(&self, idx: usize) -> [usize; 2] {
        match self.dim {
            1 => [idx, 0],
            _ => [idx / self.n, idx % self.n],
        }
    }

    /// Integer frequency vector of flat spectral index `idx` (second entry is 0 in 1D).
    pub fn frequency(&self, idx: usize) -> [i64; 2] {
        let [i, j] = self.axis_indices(idx);
        match self.dim {
            1 => [self.axis_frequency(i), 0],
            _ => [self.axis_frequency(i), self.axis_frequency(j)],
        }
    }

    pub fn frequency_magnitude(&self, idx: usize) -> f64 {
        let [a, b] = self.frequency(idx);
        ((a * a + b * b) as f64).sqrt()
    }

    /// Physical coordinates of flat point index `idx` (second entry is 0 in 1D).
    pub fn coordinates(&self, idx: usize) -> [f64; 2] {
        let h = self.spacing();
        let [i, j] = self.axis_indices(idx);
        match self.dim {
            1 => [i as f64 * h, 0.0],
            _ => [i as f64 * h, j as f64 * h],
        }
    }

    /// Whether the spectral index lies on a Nyquist line of `axis`.
    pub fn is_nyquist(&self, idx: usize, axis: usize) -> bool {
        let ax = self.axis_indices(idx)[axis];
        ax == self.n / 2
    }

    /// Samples `f(x)` at every grid point; `x` has `dim` entries.
    pub fn sample(&self, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
        (0..self.len())
            .map(|idx| {
                let c = self.coordinates(idx);
                f(&c[..self.dim])
            })
            .collect()
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch { left: self.to_string(), right: other.to_string() });
        }
        Ok(())
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dim == 1 {
            write!(f, "{}", self.n)
        } else {
            write!(f, "{}x{}", self.n, self.n)
        }
    }
}

fn fft_in_place(grid: &Grid, data: &mut [Complex64], direction: FftDirection) {
    let n = grid.n;
    PLANNER.with(|planner| {
        let fft = planner.borrow_mut().plan_fft(n, direction);
        // rows (or the whole line in 1D)
        fft.process(data);
        if grid.dim == 2 {
            transpose(data, n);
            fft.process(data);
            transpose(data, n);
        }
    });
}

fn transpose(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

pub(crate) fn forward(grid: &Grid, values: &[Complex64]) -> Vec<Complex64> {
    let mut buf = values.to_vec();
    fft_in_place(grid, &mut buf, FftDirection::Forward);
    let scale = 1.0 / grid.len() as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

pub(crate) fn inverse(grid: &Grid, spectrum: &[Complex64]) -> Vec<Complex64> {
    let mut buf = spectrum.to_vec();
    fft_in_place(grid, &mut buf, FftDirection::Inverse);
    buf
}

/// Complex samples on a periodic grid together with their Fourier coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<Complex64>,
    spectrum: Vec<Complex64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid) -> Self {
        let zero = vec![Complex64::new(0.0, 0.0); grid.len()];
        GridFunction { grid, values: zero.clone(), spectrum: zero }
    }

    /// # Panics
    /// If `values.len()` differs from the number of grid points.
    pub fn from_values(grid: Grid, values: Vec<Complex64>) -> Self {
        assert_eq!(values.len(), grid.len(), "sample count does not match grid {grid}");
        let spectrum = forward(&grid, &values);
        GridFunction { grid, values, spectrum }
    }

    pub fn from_real(grid: Grid, values: &[f64]) -> Self {
        Self::from_values(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// # Panics
    /// If `spectrum.len()` differs from the number of grid points.
    pub fn from_spectrum(grid: Grid, spectrum: Vec<Complex64>) -> Self {
        assert_eq!(spectrum.len(), grid.len(), "coefficient count does not match grid {grid}");
        let values = inverse(&grid, &spectrum);
        GridFunction { grid, values, spectrum }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                let c = grid.coordinates(idx);
                f(&c[..grid.dim])
            })
            .collect();
        Self::from_values(grid, values)
    }

    pub fn from_real_fn(grid: Grid, f: impl FnMut(&[f64]) -> f64) -> Self {
        Self::from_real(grid, &grid.sample(f))
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        let mut spectrum = vec![Complex64::new(0.0, 0.0); grid.len()];
        spectrum[0] = Complex64::new(c, 0.0);
        GridFunction { grid, values: vec![Complex64::new(c, 0.0); grid.len()], spectrum }
    }

    /// The plane wave `e^{i k·x}`.
    pub fn plane_wave(grid: Grid, k: [i64; 2]) -> Self {
        Self::from_fn(grid, |x| {
            let phase = k[0] as f64 * x[0] + if x.len() > 1 { k[1] as f64 * x[1] } else { 0.0 };
            Complex64::from_polar(1.0, phase)
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn spectrum(&self) -> &[Complex64] {
        &self.spectrum
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.re).collect()
    }

    /// Applies a Fourier multiplier given as a function of the spectral index.
    pub fn apply_multiplier(&self, mut m: impl FnMut(usize) -> Complex64) -> Self {
        let spectrum = self.spectrum.iter().enumerate().map(|(i, c)| c * m(i)).collect();
        Self::from_spectrum(self.grid, spectrum)
    }

    /// Applies a real radial multiplier `m(|ξ|)`.
    pub fn apply_radial(&self, mut m: impl FnMut(f64) -> f64) -> Self {
        let grid = self.grid;
        self.apply_multiplier(|i| Complex64::new(m(grid.frequency_magnitude(i)), 0.0))
    }

    /// Spectral derivative along `axis`; the Nyquist mode is dropped so real stays real.
    pub fn derivative(&self, axis: usize) -> Self {
        assert!(axis < self.grid.dim, "axis {axis} out of range for {}-d grid", self.grid.dim);
        let grid = self.grid;
        self.apply_multiplier(|i| {
            if grid.is_nyquist(i, axis) {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, grid.frequency(i)[axis] as f64)
            }
        })
    }

    /// Pointwise product on the grid.
    pub fn mul(&self, other: &GridFunction) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(Self::from_values(self.grid, values))
    }

    /// Pointwise product with real samples.
    pub fn mul_real(&self, weights: &[f64]) -> Self {
        assert_eq!(weights.len(), self.grid.len());
        let values = self.values.iter().zip(weights).map(|(a, &w)| a * w).collect();
        Self::from_values(self.grid, values)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.scale_complex(Complex64::new(c, 0.0))
    }

    pub fn scale_complex(&self, c: Complex64) -> Self {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
            spectrum: self.spectrum.iter().map(|v| v * c).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        Self::from_values(self.grid, self.values.iter().map(|v| v.conj()).collect())
    }

    fn zip_linear(&self, other: &GridFunction, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch in linear combination");
        GridFunction {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect(),
            spectrum: self.spectrum.iter().zip(&other.spectrum).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &GridFunction) -> Self {
        self.zip_linear(other, |a, b| a + b * c)
    }

    /// Normalized L² norm, `(mean |u|²)^{1/2}`, computed on the spectral side.
    pub fn l2_norm(&self) -> f64 {
        self.spectrum.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `⟨u, v⟩ = mean(u · conj(v))`.
    pub fn inner(&self, other: &GridFunction) -> Complex64 {
        assert_eq!(self.grid, other.grid, "grid mismatch in inner product");
        let s: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum();
        s / self.grid.len() as f64
    }

    /// Largest imaginary part relative to the sup norm.
    pub fn imaginary_ratio(&self) -> f64 {
        let sup = self.linf_norm();
        if sup == 0.0 {
            return 0.0;
        }
        self.values.iter().map(|c| c.im.abs()).fold(0.0, f64::max) / sup
    }
}

impl Add<&GridFunction> for &GridFunction {
    type Output = GridFunction;
    fn add(self, rhs: &GridFunction) -> GridFunction {
        self.zip_linear(rhs, |a, b| a + b)
    }
}

impl Sub<&GridFunction> for &GridFunction {
    type Output = GridFunction;
    fn sub(self, rhs: &GridFunction) -> GridFunction {
        self.zip_linear(rhs, |a, b| a - b)
    }
}

impl Neg for &GridFunction {
    type Output = GridFunction;
    fn neg(self) -> GridFunction {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &GridFunction {
    type Output = GridFunction;
    fn mul(self, rhs: f64) -> GridFunction {
        self.scale(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(3, 16).is_err());
        assert!(Grid::new(1, 12).is_err());
        assert!(Grid::new(1, 2).is_err());
        assert!(Grid::new(2, 8).is_ok());
    }

    #[test]
    fn frequencies_wrap_at_nyquist() {
        let g = Grid::line(8).unwrap();
        let f: Vec<i64> = (0..8).map(|i| g.axis_frequency(i)).collect();
        assert_eq!(f, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert_eq!(g.max_block(), 4);
    }

    #[test]
    fn plane_wave_has_single_coefficient() {
        let g = Grid::line(32).unwrap();
        let u = GridFunction::plane_wave(g, [5, 0]);
        for (i, c) in u.spectrum().iter().enumerate() {
            let expect = if g.axis_frequency(i) == 5 { 1.0 } else { 0.0 };
            assert!((c.re - expect).abs() < 1e-13 && c.im.abs() < 1e-13);
        }
        assert!((u.l2_norm() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn two_dimensional_round_trip() {
        let g = Grid::new(2, 16).unwrap();
        let u = GridFunction::from_real_fn(g, |x| (x[0] + 2.0 * x[1]).sin() + (3.0 * x[1]).cos());
        let back = GridFunction::from_spectrum(g, u.spectrum().to_vec());
        let err = (&back - &u).linf_norm();
        assert!(err < 1e-13, "{err}");
        let idx = (0..g.len()).find(|&i| g.frequency(i) == [1, 2]).unwrap();
        assert!((u.spectrum()[idx] - Complex64::new(0.0, -0.5)).norm() < 1e-13);
    }

    #[test]
    fn derivative_of_sine() {
        let g = Grid::line(64).unwrap();
        let u = GridFunction::from_real_fn(g, |x| (3.0 * x[0]).sin());
        let du = u.derivative(0);
        let exact = GridFunction::from_real_fn(g, |x| 3.0 * (3.0 * x[0]).cos());
        assert!((&du - &exact).linf_norm() < 1e-12);
        assert!(du.imaginary_ratio() < 1e-14);
    }

    #[test]
    fn mismatched_product_is_an_error() {
        let a = GridFunction::zeros(Grid::line(8).unwrap());
        let b = GridFunction::zeros(Grid::line(16).unwrap());
        assert!(matches!(a.mul(&b), Err(Error::GridMismatch { .. })));
    }
}
