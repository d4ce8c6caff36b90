//! Pieces `sigma_{l,m}(x, xi) = (phi_l(D_x / <m>^A) sigma)(x, xi) eta_m(xi)` and
//! their plateau versions with `kappa_m` in place of `eta_m`.
//!
//! `phi_l` is the alpha = 0 partition. The x-filter is applied column by
//! column: for each lattice frequency `xi_j` in the support of the
//! frequency cutoff, `x -> sigma(x, xi_j)` is transformed, multiplied by
//! `phi_l(nu / <m>^A)` and transformed back. One dimension only.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftDirection;

use super::{phase_index, twiddles};
use crate::cover::AlphaCover;
use crate::error::{Error, Result};
use crate::grid::{fft, fft_in_place, Grid, GridSignal, Spectrum};
use crate::symbols::Symbol;

pub struct PieceBuilder<'a> {
    sigma: &'a dyn Symbol,
    cover: &'a AlphaCover,
    grid: Grid,
    uniform: AlphaCover,
}

/// Transformed symbol columns over the support of `eta_m` or `kappa_m`,
/// shared by every `l`.
#[derive(Debug, Clone)]
pub struct PieceColumns {
    pub m: i64,
    pub plateau: bool,
    pub scale: f64,
    /// Signed lattice indices of the retained frequencies, ascending.
    pub indices: Vec<i64>,
    /// Their FFT-order positions.
    pub positions: Vec<usize>,
    /// `eta_m(xi_j)` or `kappa_m(xi_j)`.
    pub weights: Vec<f64>,
    /// Unnormalized transforms in `x` of `sigma(., xi_j)`.
    spectra: Vec<Vec<Complex64>>,
}

impl<'a> PieceBuilder<'a> {
    pub fn new(sigma: &'a dyn Symbol, cover: &'a AlphaCover, grid: Grid) -> Result<Self> {
        for d in [sigma.dim(), cover.dim(), grid.dim()] {
            if d != 1 {
                return Err(Error::UnsupportedDimension(d));
            }
        }
        let k_max = grid.nyquist().ceil() as i64 + 2;
        let uniform = AlphaCover::uniform(1, k_max)?;
        Ok(Self {
            sigma,
            cover,
            grid,
            uniform,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn cover(&self) -> &AlphaCover {
        self.cover
    }

    /// `<m>^A`.
    pub fn scale(&self, m: i64) -> f64 {
        self.cover.scale(&[m])
    }

    /// Every `l` whose filter `phi_l(. / <m>^A)` meets the grid's frequencies.
    pub fn ell_range(&self, m: i64) -> std::ops::RangeInclusive<i64> {
        let reach = (self.grid.nyquist() / self.scale(m)).ceil() as i64 + 1;
        let reach = reach.min(self.uniform.params().k_max);
        -reach..=reach
    }

    /// `phi_l(nu / s)` on the x-frequency lattice (FFT order).
    fn filter(&self, ell: i64, s: f64) -> Vec<f64> {
        (0..self.grid.n())
            .map(|j| self.uniform.eval_eta(&[ell], &[self.grid.xi(j) / s]))
            .collect()
    }

    pub fn columns(&self, m: i64, plateau: bool) -> PieceColumns {
        let g = self.grid;
        let n = g.n();
        let half = (n / 2) as i64;
        let mut indices = Vec::new();
        let mut positions = Vec::new();
        let mut weights = Vec::new();
        for k in -half..half {
            let pos = g.freq_position(k).unwrap();
            let xi = g.xi(pos);
            let w = if plateau {
                self.cover.eval_kappa(&[m], &[xi])
            } else {
                self.cover.eval_eta(&[m], &[xi])
            };
            if w != 0.0 {
                indices.push(k);
                positions.push(pos);
                weights.push(w);
            }
        }
        let spectra = positions
            .par_iter()
            .map(|&pos| {
                let xi = [g.xi(pos), 0.0];
                let mut col: Vec<Complex64> = (0..n).map(|i| self.sigma.eval([g.x(i), 0.0], xi)).collect();
                fft_in_place(&mut col, &g, FftDirection::Forward);
                col
            })
            .collect();
        PieceColumns {
            m,
            plateau,
            scale: self.scale(m),
            indices,
            positions,
            weights,
            spectra,
        }
    }

    pub fn piece(&self, cols: &PieceColumns, ell: i64) -> SymbolPiece {
        let g = self.grid;
        let n = g.n();
        let filter = self.filter(ell, cols.scale);
        let table = cols
            .spectra
            .par_iter()
            .zip(&cols.weights)
            .map(|(spec, &w)| {
                let mut col: Vec<Complex64> = spec.iter().zip(&filter).map(|(z, f)| z * *f).collect();
                if col.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
                    return col;
                }
                fft_in_place(&mut col, &g, FftDirection::Inverse);
                let scale = w / n as f64;
                for z in &mut col {
                    *z *= scale;
                }
                col
            })
            .collect();
        SymbolPiece {
            m: cols.m,
            ell,
            plateau: cols.plateau,
            scale: cols.scale,
            grid: g,
            indices: cols.indices.clone(),
            positions: cols.positions.clone(),
            table,
        }
    }

    pub fn pieces(&self, m: i64, ells: impl IntoIterator<Item = i64>, plateau: bool) -> Vec<SymbolPiece> {
        let cols = self.columns(m, plateau);
        ells.into_iter().map(|l| self.piece(&cols, l)).collect()
    }
}

/// A realized piece on the `x`-grid times its frequency window.
#[derive(Debug, Clone)]
pub struct SymbolPiece {
    pub m: i64,
    pub ell: i64,
    pub plateau: bool,
    /// `<m>^A`.
    pub scale: f64,
    grid: Grid,
    indices: Vec<i64>,
    positions: Vec<usize>,
    /// `table[w][i]` is the piece at `(x_i, xi_{indices[w]})`.
    table: Vec<Vec<Complex64>>,
}

impl SymbolPiece {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn indices(&self) -> &[i64] {
        &self.indices
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    /// Values at frequency column `w` over the `x`-grid.
    pub fn column(&self, w: usize) -> &[Complex64] {
        &self.table[w]
    }

    pub fn max_abs(&self) -> f64 {
        self.table
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m, z| m.max(z.norm()))
    }

    /// `sigma_{l,m}(X, D)` applied to a function given by its spectrum.
    pub fn apply_spectrum(&self, spectrum: &Spectrum) -> Result<GridSignal> {
        if spectrum.grid() != &self.grid {
            return Err(Error::GridMismatch("piece and signal grids differ".into()));
        }
        let g = self.grid;
        let n = g.n();
        let tw = twiddles(n);
        let coeffs = spectrum.coeffs();
        let active: Vec<usize> = (0..self.positions.len())
            .filter(|&w| coeffs[self.positions[w]] != Complex64::new(0.0, 0.0))
            .collect();
        let norm = 1.0 / g.length();
        let samples = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut acc = Complex64::new(0.0, 0.0);
                for &w in &active {
                    let e = tw[phase_index(i, self.indices[w], n)];
                    acc += e * self.table[w][i] * coeffs[self.positions[w]];
                }
                acc * norm
            })
            .collect();
        GridSignal::new(g, samples)
    }

    pub fn apply(&self, f: &GridSignal) -> Result<GridSignal> {
        self.apply_spectrum(&fft(f))
    }

    /// Relative `l^2` mass of the x-transforms of all columns lying outside
    /// `supp phi_l(. / <m>^A)`, i.e. `|nu / <m>^A - l| > 1`.
    pub fn x_band_leakage(&self) -> f64 {
        let g = self.grid;
        let (mut inside, mut outside) = (0.0, 0.0);
        for col in &self.table {
            let mut data = col.clone();
            fft_in_place(&mut data, &g, FftDirection::Forward);
            for (j, z) in data.iter().enumerate() {
                let u = g.xi(j) / self.scale - self.ell as f64;
                if u.abs() > 1.0 + 1e-12 {
                    outside += z.norm_sqr();
                } else {
                    inside += z.norm_sqr();
                }
            }
        }
        let total = inside + outside;
        if total == 0.0 {
            0.0
        } else {
            (outside / total).sqrt()
        }
    }

    /// `k(x_i, y) = sum_j e^{i y xi_j} piece(x_i, xi_j) dxi` on the
    /// periodic `y`-grid (same spacing as `x`, centered).
    pub fn kernel(&self, i: usize) -> Vec<Complex64> {
        let g = self.grid;
        let mut data = vec![Complex64::new(0.0, 0.0); g.n()];
        for (w, &pos) in self.positions.iter().enumerate() {
            data[pos] = self.table[w][i];
        }
        // ifft gives L^{-1} sum_j e^{i y xi_j} v_j; dxi = 2 pi / L
        let samples = crate::grid::ifft_coeffs(&g, data);
        samples.into_iter().map(|z| z * std::f64::consts::TAU).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::CoverParams;
    use crate::profile::BumpProfile;
    use crate::symbols::{Bessel, RandomTrig};

    fn setup() -> (Grid, AlphaCover) {
        let grid = Grid::new(1, 256, 2.0 * std::f64::consts::PI * 4.0).unwrap();
        let cover = AlphaCover::for_grid(0.5, &grid).unwrap();
        (grid, cover)
    }

    #[test]
    fn x_independent_only_ell_zero() {
        let (grid, cover) = setup();
        let s = Bessel::new(1, -1.0).unwrap();
        let b = PieceBuilder::new(&s, &cover, grid).unwrap();
        for m in [0, 3, -2] {
            let pieces = b.pieces(m, b.ell_range(m), false);
            for p in pieces {
                if p.ell != 0 {
                    assert!(p.max_abs() <= 1e-12, "m {m} l {} {}", p.ell, p.max_abs());
                } else {
                    assert!(p.max_abs() > 0.0);
                }
            }
        }
    }

    #[test]
    fn pieces_respect_x_band() {
        let (grid, cover) = setup();
        let s = RandomTrig::seeded(1, 6, grid.dxi(), 40, 0.5, 3).unwrap();
        let b = PieceBuilder::new(&s, &cover, grid).unwrap();
        for p in b.pieces(2, -3..=3, false) {
            assert!(p.x_band_leakage() <= 1e-10);
        }
    }

    #[test]
    fn builder_rejects_two_dimensions() {
        let grid = Grid::new(2, 16, 10.0).unwrap();
        let cover = AlphaCover::new(CoverParams::new(0.5, 2, 8), BumpProfile::default()).unwrap();
        let s = Bessel::new(2, 1.0).unwrap();
        assert!(PieceBuilder::new(&s, &cover, grid).is_err());
    }
}
