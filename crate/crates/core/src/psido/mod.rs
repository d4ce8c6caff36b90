//! Discrete Kohn-Nirenberg quantization
//!
//! ```text
//! sigma(X, D) f (x_i) = L^{-n} sum_j e^{i x_i . xi_j} sigma(x_i, xi_j) F f(xi_j)
//! ```
//!
//! and the `(l, m)` decomposition of symbols used by the boundedness proof.

mod pieces;
mod verify;

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{fft, ifft, Grid, GridSignal, Spectrum};
use crate::symbols::Symbol;

pub use pieces::{PieceBuilder, PieceColumns, SymbolPiece};
pub use verify::{
    oscillatory_sup, piece_convolution_point, verify_ell_decay, verify_oscillatory_decay, verify_piece_convolution,
    verify_plateau_identity, verify_reconstruction, verify_region, DecayRecord, DecayReport, OrderVerdict,
    ReconstructionReport, RegionReport, BAND_MASS_THRESHOLD,
};

fn check_symbol_grid(sigma: &dyn Symbol, grid: &Grid) -> Result<()> {
    if sigma.dim() != grid.dim() {
        return Err(Error::GridMismatch(format!(
            "symbol is {}-dimensional, grid {}-dimensional",
            sigma.dim(),
            grid.dim()
        )));
    }
    Ok(())
}

/// `e^{2 pi i t / N}` for `t = 0..N`.
pub(crate) fn twiddles(n: usize) -> Vec<Complex64> {
    (0..n).map(|t| Complex64::from_polar(1.0, TAU * t as f64 / n as f64)).collect()
}

/// Index into [`twiddles`] for `e^{i x_i xi_k}` with signed frequency index `k`.
pub(crate) fn phase_index(i: usize, k: i64, n: usize) -> usize {
    let centered = i as i64 - (n / 2) as i64;
    (centered * k).rem_euclid(n as i64) as usize
}

/// Applies `sigma(X, D)`, choosing the cheapest exact route: constants
/// scale, x-independent symbols use the FFT multiplier, symbols with a
/// spectral fast path use it, and anything else falls back to
/// [`quantize_direct`].
pub fn quantize_apply(sigma: &dyn Symbol, f: &GridSignal) -> Result<GridSignal> {
    check_symbol_grid(sigma, f.grid())?;
    if let Some(c) = sigma.constant_value() {
        return Ok(f.scale(c));
    }
    let spectrum = fft(f);
    if sigma.is_x_independent() {
        return Ok(ifft(&spectrum.multiply(|xi| sigma.eval([0.0, 0.0], xi))));
    }
    if let Some(s) = sigma.apply_spectrum(&spectrum) {
        return Ok(ifft(&s));
    }
    quantize_direct(sigma, f)
}

/// Spectrum of `sigma(X, D) f` from the spectrum of `f`.
pub fn quantize_spectrum(sigma: &dyn Symbol, spectrum: &Spectrum) -> Result<Spectrum> {
    check_symbol_grid(sigma, spectrum.grid())?;
    if let Some(c) = sigma.constant_value() {
        let coeffs = spectrum.coeffs().iter().map(|z| z * c).collect();
        return Spectrum::new(*spectrum.grid(), coeffs);
    }
    if sigma.is_x_independent() {
        return Ok(spectrum.multiply(|xi| sigma.eval([0.0, 0.0], xi)));
    }
    if let Some(s) = sigma.apply_spectrum(spectrum) {
        return Ok(s);
    }
    Ok(fft(&quantize_direct(sigma, &ifft(spectrum))?))
}

/// The quantization sum evaluated term by term, `O(N^{2n})`. Serves as the
/// reference for every faster route.
pub fn quantize_direct(sigma: &dyn Symbol, f: &GridSignal) -> Result<GridSignal> {
    let grid = *f.grid();
    check_symbol_grid(sigma, &grid)?;
    let spectrum = fft(f);
    let n = grid.n();
    let dim = grid.dim();
    let tw = twiddles(n);
    // (frequency, signed indices, coefficient) for nonzero coefficients
    let terms: Vec<([f64; 2], [i64; 2], Complex64)> = spectrum
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != Complex64::new(0.0, 0.0))
        .map(|(flat, &c)| {
            let p = grid.unflatten(flat);
            let k = [grid.freq_index(p[0]), if dim == 2 { grid.freq_index(p[1]) } else { 0 }];
            (grid.freq(flat), k, c)
        })
        .collect();
    let fixed: Option<Vec<Complex64>> = sigma
        .is_x_independent()
        .then(|| terms.iter().map(|(xi, _, _)| sigma.eval([0.0, 0.0], *xi)).collect());
    let norm = 1.0 / grid.length().powi(dim as i32);
    let samples: Vec<Complex64> = (0..grid.len())
        .into_par_iter()
        .map(|flat| {
            let p = grid.unflatten(flat);
            let x = grid.point(flat);
            let mut acc = Complex64::new(0.0, 0.0);
            for (t, (xi, k, c)) in terms.iter().enumerate() {
                let mut idx = phase_index(p[0], k[0], n);
                if dim == 2 {
                    idx = (idx + phase_index(p[1], k[1], n)) % n;
                }
                let s = match &fixed {
                    Some(v) => v[t],
                    None => sigma.eval(x, *xi),
                };
                acc += tw[idx] * s * c;
            }
            acc * norm
        })
        .collect();
    GridSignal::new(grid, samples)
}
