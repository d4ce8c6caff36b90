//! Periodic sampling grids, discrete Fourier transforms and multipliers.
//!
//! A grid of `N` points per axis on a torus of side `L` samples
//! `x_i = (i - N/2) L/N`. Frequencies live on `xi_j = 2 pi j / L` with
//! `j` in `[-N/2, N/2)`, stored in FFT order (non-negative indices first).
//!
//! Transforms follow `F f(xi) = int e^{-i x xi} f(x) dx` with the inverse
//! carrying `(2 pi)^{-n}`. Discretely the forward sum is weighted by
//! `(L/N)^n` and the inverse by `L^{-n}`, so a pure tone `e^{i xi_j x}` has
//! coefficient `L^n` at `j`.

mod inequality;
pub mod io;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use inequality::{
    check_bandlimited_convolution, check_peetre_maximal, peetre_maximal, Ball, ConvolutionCase,
    InequalityPoint, InequalityReport, BALL_TOLERANCE, SLOPE_TOLERANCE,
};

/// Chunk size for deterministic blocked summation.
const SUM_CHUNK: usize = 1 << 13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
    length: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::param("N", format!("{n} is not a power of two >= 2")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::param("L", format!("{length} is not a positive length")));
        }
        Ok(Self { dim, n, length })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Samples per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Period per axis.
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Total number of samples, `N^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Largest representable frequency per axis, `pi N / L`.
    pub fn nyquist(&self) -> f64 {
        PI * self.n as f64 / self.length
    }

    /// Euclidean radius of the frequency box corner.
    pub fn nyquist_radius(&self) -> f64 {
        self.nyquist() * (self.dim as f64).sqrt()
    }

    /// Volume of one grid cell, `(L/N)^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    /// Coordinate of sample `i` along one axis.
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.dx()
    }

    /// Signed frequency index of FFT-order position `j` along one axis.
    pub fn freq_index(&self, j: usize) -> i64 {
        if j < self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    /// FFT-order position of the signed frequency index `k`, if representable.
    pub fn freq_position(&self, k: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if k < -half || k >= half {
            None
        } else if k >= 0 {
            Some(k as usize)
        } else {
            Some((k + self.n as i64) as usize)
        }
    }

    /// Frequency of FFT-order position `j` along one axis.
    pub fn xi(&self, j: usize) -> f64 {
        self.freq_index(j) as f64 * self.dxi()
    }

    /// Axis positions of a flat (row-major) index.
    pub fn unflatten(&self, flat: usize) -> [usize; 2] {
        if self.dim == 1 {
            [flat, 0]
        } else {
            [flat / self.n, flat % self.n]
        }
    }

    pub fn flatten(&self, pos: [usize; 2]) -> usize {
        if self.dim == 1 {
            pos[0]
        } else {
            pos[0] * self.n + pos[1]
        }
    }

    /// Spatial point of a flat index (unused coordinates are zero).
    pub fn point(&self, flat: usize) -> [f64; 2] {
        let [a, b] = self.unflatten(flat);
        if self.dim == 1 {
            [self.x(a), 0.0]
        } else {
            [self.x(a), self.x(b)]
        }
    }

    /// Frequency of a flat FFT-order index (unused coordinates are zero).
    pub fn freq(&self, flat: usize) -> [f64; 2] {
        let [a, b] = self.unflatten(flat);
        if self.dim == 1 {
            [self.xi(a), 0.0]
        } else {
            [self.xi(a), self.xi(b)]
        }
    }

    /// Spatial coordinates of all samples, row-major.
    pub fn points(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Frequencies of all lattice points, FFT order.
    pub fn freqs(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|j| self.freq(j)).collect()
    }

    fn same_as(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }

    /// Parity sign `(-1)^(j_1 + ... + j_n)` that converts between the
    /// centered sample convention and the FFT's zero-based one.
    fn parity(&self, flat: usize) -> f64 {
        let [a, b] = self.unflatten(flat);
        if (a + b) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Sampled function on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSignal {
    grid: Grid,
    samples: Vec<Complex64>,
}

impl GridSignal {
    pub fn new(grid: Grid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid of {}",
                samples.len(),
                grid.len()
            )));
        }
        if let Some(i) = samples.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, samples })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            samples: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> Complex64 + Sync) -> Result<Self> {
        let samples = (0..grid.len())
            .into_par_iter()
            .map(|i| f(grid.point(i)))
            .collect();
        Self::new(grid, samples)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid,
            samples: self.samples.iter().map(|z| z * c).collect(),
        }
    }

    /// `a f + b g`.
    pub fn combine(&self, a: Complex64, other: &GridSignal, b: Complex64) -> Result<Self> {
        self.grid.same_as(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(f, g)| a * f + b * g)
                .collect(),
        })
    }

    /// Pointwise multiplication by a function of `x`.
    pub fn modulate(&self, f: impl Fn([f64; 2]) -> Complex64 + Sync) -> Self {
        let grid = self.grid;
        Self {
            grid,
            samples: self
                .samples
                .par_iter()
                .enumerate()
                .map(|(i, z)| z * f(grid.point(i)))
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_norm(self, p)
    }

    /// `||f - g||_2 / ||g||_2`; `||f||_2` when `g` vanishes.
    pub fn relative_l2_distance(&self, reference: &GridSignal) -> Result<f64> {
        self.grid.same_as(&reference.grid)?;
        let diff = self.combine(Complex64::new(1.0, 0.0), reference, Complex64::new(-1.0, 0.0))?;
        let denom = reference.lp_norm(2.0);
        let num = diff.lp_norm(2.0);
        Ok(if denom > 0.0 { num / denom } else { num })
    }
}

/// Discrete Fourier coefficients on the grid's frequency lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} coefficients for a grid of {}",
                coeffs.len(),
                grid.len()
            )));
        }
        if let Some(i) = coeffs.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Samples a continuous transform `F f(xi)` on the lattice.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> Complex64 + Sync) -> Result<Self> {
        let coeffs = (0..grid.len())
            .into_par_iter()
            .map(|j| f(grid.freq(j)))
            .collect();
        Self::new(grid, coeffs)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Pointwise product with a multiplier sampled on the lattice.
    pub fn multiply(&self, m: impl Fn([f64; 2]) -> Complex64 + Sync) -> Self {
        let grid = self.grid;
        Self {
            grid,
            coeffs: self
                .coeffs
                .par_iter()
                .enumerate()
                .map(|(j, z)| z * m(grid.freq(j)))
                .collect(),
        }
    }

    /// `||f||_2` through Plancherel, `(L^{-n} sum |F_j|^2)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        let sum = blocked_sum(&self.coeffs, |z| z.norm_sqr());
        (sum / self.grid.length.powi(self.grid.dim as i32)).sqrt()
    }

    /// `sum |F_j|^2` over the lattice.
    pub fn energy(&self) -> f64 {
        blocked_sum(&self.coeffs, |z| z.norm_sqr())
    }
}

fn plan(n: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    type Cache = Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>;
    static PLANS: OnceLock<Cache> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry((n, direction == FftDirection::Forward))
        .or_insert_with(|| FftPlanner::new().plan_fft(n, direction))
        .clone()
}

/// In-place unnormalized transform along every axis of a row-major array.
pub(crate) fn fft_in_place(data: &mut [Complex64], grid: &Grid, direction: FftDirection) {
    let n = grid.n;
    let fft = plan(n, direction);
    if grid.dim == 1 {
        fft.process(data);
        return;
    }
    data.par_chunks_mut(n).for_each(|row| fft.process(row));
    let mut column = vec![Complex64::new(0.0, 0.0); n];
    for c in 0..n {
        for r in 0..n {
            column[r] = data[r * n + c];
        }
        fft.process(&mut column);
        for r in 0..n {
            data[r * n + c] = column[r];
        }
    }
}

pub fn fft(f: &GridSignal) -> Spectrum {
    let grid = f.grid;
    let mut data = f.samples.clone();
    fft_in_place(&mut data, &grid, FftDirection::Forward);
    let w = grid.cell_volume();
    for (j, z) in data.iter_mut().enumerate() {
        *z *= w * grid.parity(j);
    }
    Spectrum { grid, coeffs: data }
}

pub fn ifft(spectrum: &Spectrum) -> GridSignal {
    GridSignal {
        grid: spectrum.grid,
        samples: ifft_coeffs(&spectrum.grid, spectrum.coeffs.clone()),
    }
}

/// Inverse transform of raw FFT-order coefficients, returning samples.
pub(crate) fn ifft_coeffs(grid: &Grid, mut data: Vec<Complex64>) -> Vec<Complex64> {
    let w = 1.0 / grid.length.powi(grid.dim as i32);
    for (j, z) in data.iter_mut().enumerate() {
        *z *= w * grid.parity(j);
    }
    fft_in_place(&mut data, grid, FftDirection::Inverse);
    data
}

/// `m(D) f` for a multiplier given as a function of the frequency.
pub fn multiplier_apply(m: impl Fn([f64; 2]) -> Complex64 + Sync, f: &GridSignal) -> GridSignal {
    ifft(&fft(f).multiply(m))
}

/// `m(D) f` for a multiplier already sampled on the lattice (FFT order).
pub fn multiplier_apply_sampled(m: &[Complex64], f: &GridSignal) -> Result<GridSignal> {
    if m.len() != f.grid.len() {
        return Err(Error::GridMismatch(format!(
            "{} multiplier values for a grid of {}",
            m.len(),
            f.grid.len()
        )));
    }
    let mut spec = fft(f);
    for (z, w) in spec.coeffs.iter_mut().zip(m) {
        *z *= w;
    }
    Ok(ifft(&spec))
}

/// Riemann-sum `L^p` quasi-norm; `p = inf` is the sample maximum.
pub fn lp_norm(f: &GridSignal, p: f64) -> f64 {
    lp_norm_samples(&f.samples, f.grid.cell_volume(), p)
}

pub(crate) fn lp_norm_samples(samples: &[Complex64], cell: f64, p: f64) -> f64 {
    let max = samples.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if max == 0.0 {
        return 0.0;
    }
    if p.is_infinite() {
        return max;
    }
    let sum = if p == 2.0 {
        blocked_sum(samples, |z| (z / max).norm_sqr())
    } else if p == 1.0 {
        blocked_sum(samples, |z| z.norm() / max)
    } else {
        blocked_sum(samples, |z| (z.norm() / max).powf(p))
    };
    max * (cell * sum).powf(1.0 / p)
}

/// Sum of `f` over `data` in fixed-size blocks; the block layout does not
/// depend on the thread count, so results are reproducible.
pub(crate) fn blocked_sum<T: Sync>(data: &[T], f: impl Fn(&T) -> f64 + Sync) -> f64 {
    let partial: Vec<f64> = data
        .par_chunks(SUM_CHUNK)
        .map(|chunk| chunk.iter().map(&f).sum::<f64>())
        .collect();
    partial.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(Grid::new(1, 100, 1.0).is_err());
        assert!(Grid::new(3, 64, 1.0).is_err());
        assert!(Grid::new(1, 64, -1.0).is_err());
        assert!(Grid::new(2, 64, 1.0).is_ok());
    }

    #[test]
    fn frequency_positions_round_trip() {
        let g = Grid::new(1, 16, 3.0).unwrap();
        for j in 0..16 {
            assert_eq!(g.freq_position(g.freq_index(j)), Some(j));
        }
        assert_eq!(g.freq_position(8), None);
        assert_eq!(g.freq_index(8), -8);
    }

    #[test]
    fn pure_tone_has_coefficient_l() {
        let g = Grid::new(1, 64, 10.0).unwrap();
        let j = 5usize;
        let xi = g.xi(j);
        let f = GridSignal::from_fn(g, |x| Complex64::from_polar(1.0, xi * x[0])).unwrap();
        let s = fft(&f);
        for (i, z) in s.coeffs().iter().enumerate() {
            let expected = if i == j { 10.0 } else { 0.0 };
            assert!((z - c(expected)).norm() < 1e-12, "{i}: {z}");
        }
    }

    #[test]
    fn pure_tone_in_two_dimensions() {
        let g = Grid::new(2, 16, 4.0).unwrap();
        let target = g.flatten([3, 14]);
        let [a, b] = g.freq(target);
        let f = GridSignal::from_fn(g, |x| Complex64::from_polar(1.0, a * x[0] + b * x[1])).unwrap();
        let s = fft(&f);
        for (i, z) in s.coeffs().iter().enumerate() {
            let expected = if i == target { 16.0 } else { 0.0 };
            assert!((z - c(expected)).norm() < 1e-11);
        }
    }

    #[test]
    fn gaussian_transform_matches_closed_form() {
        // F[exp(-x^2/2)](xi) = sqrt(2 pi) exp(-xi^2/2)
        let g = Grid::new(1, 256, 40.0).unwrap();
        let f = GridSignal::from_fn(g, |x| c((-x[0] * x[0] / 2.0).exp())).unwrap();
        let s = fft(&f);
        for j in 0..g.n() {
            let xi = g.xi(j);
            let exact = (2.0 * PI).sqrt() * (-xi * xi / 2.0).exp();
            assert!((s.coeffs()[j] - c(exact)).norm() < 1e-8);
        }
    }

    #[test]
    fn round_trip_and_plancherel() {
        let g = Grid::new(2, 32, 7.0).unwrap();
        let f = GridSignal::from_fn(g, |x| {
            Complex64::new((x[0] * 0.7).sin() + x[1].cos(), (-x[0] * x[0] - x[1] * x[1]).exp())
        })
        .unwrap();
        let s = fft(&f);
        let back = ifft(&s);
        assert!(back.relative_l2_distance(&f).unwrap() < 1e-12);
        let direct = f.lp_norm(2.0);
        assert!((s.l2_norm() - direct).abs() <= 1e-10 * direct);
    }

    #[test]
    fn lp_norms_of_constant() {
        let g = Grid::new(1, 64, 2.0).unwrap();
        let f = GridSignal::from_fn(g, |_| c(3.0)).unwrap();
        assert!((f.lp_norm(1.0) - 6.0).abs() < 1e-12);
        assert!((f.lp_norm(0.5) - 3.0 * 4.0).abs() < 1e-10);
        assert_eq!(f.lp_norm(f64::INFINITY), 3.0);
        assert_eq!(GridSignal::zeros(g).lp_norm(0.5), 0.0);
    }

    #[test]
    fn non_finite_samples_rejected() {
        let g = Grid::new(1, 4, 1.0).unwrap();
        let err = GridSignal::new(g, vec![c(0.0), c(f64::NAN), c(0.0), c(0.0)]).unwrap_err();
        assert!(matches!(err, Error::NonFinite(1)));
    }
}
