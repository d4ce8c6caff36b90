//! `M^{s,alpha}_{p,q}` quasi-norms on periodic grids.
//!
//! ```text
//! ||f|| = || <k>^{s/(1-alpha)} ||eta_k(D) f||_{L^p} ||_{l^q(k)}
//! ```
//!
//! Band norms `||eta_k(D) f||_p` depend only on `p`, so they are computed once
//! ([`band_norms`]) and recombined for any `(q, s)` ([`BandNorms::combine`]).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cover::{AlphaCover, BandKind, Bands, Index};
use crate::error::{Error, Result};
use crate::grid::{self, fft, InequalityPoint, InequalityReport, Grid, GridSignal, Spectrum};

/// Bands whose spectral energy is below this fraction of the total are
/// treated as empty (their `L^p` norm is reported as zero). This only ever
/// drops rounding residue at the `1e-15` amplitude level.
pub const EMPTY_BAND_ENERGY: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiNormParams {
    pub p: f64,
    pub q: f64,
    pub s: f64,
    pub alpha: f64,
}

impl QuasiNormParams {
    pub fn new(p: f64, q: f64, s: f64, alpha: f64) -> Result<Self> {
        if !(p > 0.0) || p.is_nan() {
            return Err(Error::param("p", format!("{p} is outside (0, inf]")));
        }
        if !(q > 0.0) || q.is_nan() {
            return Err(Error::param("q", format!("{q} is outside (0, inf]")));
        }
        if !s.is_finite() {
            return Err(Error::param("s", format!("{s} is not finite")));
        }
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::param("alpha", format!("{alpha} is outside [0, 1)")));
        }
        Ok(Self { p, q, s, alpha })
    }

    /// Exponent `s / (1 - alpha)` of the band weight.
    pub fn weight_exponent(&self) -> f64 {
        self.s / (1.0 - self.alpha)
    }

    pub fn with_s(mut self, s: f64) -> Self {
        self.s = s;
        self
    }

    /// `min(1, p, q)`, the exponent for which the quasi-norm is subadditive.
    pub fn triangle_power(&self) -> f64 {
        1f64.min(self.p).min(self.q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandNorm {
    pub k: Index,
    pub bracket: f64,
    pub norm: f64,
}

/// `||eta_k(D) f||_p` for every band meeting the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandNorms {
    pub alpha: f64,
    pub p: f64,
    pub entries: Vec<BandNorm>,
}

impl BandNorms {
    /// `l^q` combination with weights `<k>^{s/(1-alpha)}`.
    pub fn combine(&self, q: f64, s: f64) -> f64 {
        let e = s / (1.0 - self.alpha);
        let terms: Vec<f64> = self
            .entries
            .iter()
            .map(|b| if b.norm == 0.0 { 0.0 } else { b.bracket.powf(e) * b.norm })
            .collect();
        lq(&terms, q)
    }

    /// Combines after checking that `alpha` and `p` match.
    pub fn norm(&self, params: &QuasiNormParams) -> Result<f64> {
        if params.alpha != self.alpha {
            return Err(Error::AlphaMismatch {
                cover: self.alpha,
                params: params.alpha,
            });
        }
        if params.p != self.p {
            return Err(Error::param("p", format!("band norms were computed for p = {}", self.p)));
        }
        Ok(self.combine(params.q, params.s))
    }

    pub fn nonzero(&self) -> usize {
        self.entries.iter().filter(|b| b.norm > 0.0).count()
    }
}

/// `(sum t^q)^{1/q}` with max-scaling; `q = inf` is the maximum.
pub fn lq(terms: &[f64], q: f64) -> f64 {
    let max = terms.iter().fold(0.0f64, |m, &t| m.max(t));
    if max == 0.0 {
        return 0.0;
    }
    if q.is_infinite() {
        return max;
    }
    let sum: f64 = terms.iter().map(|t| (t / max).powf(q)).sum();
    max * sum.powf(1.0 / q)
}

/// Band norms of a signal.
pub fn band_norms(f: &GridSignal, bands: &Bands, p: f64) -> Result<BandNorms> {
    band_norms_spectrum(&fft(f), bands, p)
}

/// Band norms from a spectrum; avoids a forward transform when the spectrum
/// is already known.
pub fn band_norms_spectrum(spectrum: &Spectrum, bands: &Bands, p: f64) -> Result<BandNorms> {
    let grid: Grid = *spectrum.grid();
    if grid != bands.grid {
        return Err(Error::GridMismatch("signal and band grids differ".into()));
    }
    if !(p > 0.0) {
        return Err(Error::param("p", format!("{p} is outside (0, inf]")));
    }
    let coeffs = spectrum.coeffs();
    let total = spectrum.energy();
    let volume = grid.length().powi(grid.dim() as i32);
    let entries = bands
        .bands
        .par_iter()
        .map(|band| {
            let energy: f64 = band
                .positions
                .iter()
                .zip(&band.weights)
                .map(|(&j, &w)| (coeffs[j] * w).norm_sqr())
                .sum();
            let norm = if total == 0.0 || energy <= EMPTY_BAND_ENERGY * total {
                0.0
            } else if p == 2.0 {
                (energy / volume).sqrt()
            } else {
                let mut data = vec![Complex64::new(0.0, 0.0); grid.len()];
                for (&j, &w) in band.positions.iter().zip(&band.weights) {
                    data[j] = coeffs[j] * w;
                }
                let samples = grid::ifft_coeffs(&grid, data);
                grid::lp_norm_samples(&samples, grid.cell_volume(), p)
            };
            BandNorm {
                k: band.k,
                bracket: band.bracket,
                norm,
            }
        })
        .collect();
    Ok(BandNorms {
        alpha: bands.alpha,
        p,
        entries,
    })
}

fn check_alpha(cover: &AlphaCover, params: &QuasiNormParams) -> Result<()> {
    if cover.alpha() != params.alpha {
        Err(Error::AlphaMismatch {
            cover: cover.alpha(),
            params: params.alpha,
        })
    } else {
        Ok(())
    }
}

/// The defining quasi-norm through the partition `eta_k`.
pub fn alpha_norm(f: &GridSignal, cover: &AlphaCover, params: &QuasiNormParams) -> Result<f64> {
    check_alpha(cover, params)?;
    let bands = cover.bands(f.grid(), BandKind::Eta)?;
    alpha_norm_with(f, &bands, params)
}

/// The equivalent quasi-norm through the enlarged bumps `rho_k`.
pub fn alpha_norm_equiv(f: &GridSignal, cover: &AlphaCover, params: &QuasiNormParams) -> Result<f64> {
    check_alpha(cover, params)?;
    let bands = cover.bands(f.grid(), BandKind::Rho)?;
    alpha_norm_with(f, &bands, params)
}

/// Quasi-norm with precomputed bands (either family).
pub fn alpha_norm_with(f: &GridSignal, bands: &Bands, params: &QuasiNormParams) -> Result<f64> {
    band_norms(f, bands, params.p)?.norm(params)
}

/// Bessel potential `(I - Delta)^{t/2} f`.
pub fn bessel_lift(f: &GridSignal, t: f64) -> GridSignal {
    if t == 0.0 {
        return f.clone();
    }
    grid::multiplier_apply(
        |xi| Complex64::new((1.0 + xi[0] * xi[0] + xi[1] * xi[1]).powf(0.5 * t), 0.0),
        f,
    )
}

/// `(s1, s2) = (n alpha max(0, 1/q - 1/2), n alpha min(0, 1/q - 1/2))`.
pub fn embedding_exponents(q: f64, alpha: f64, dim: usize) -> (f64, f64) {
    let d = 1.0 / q - 0.5;
    let n = dim as f64;
    (n * alpha * d.max(0.0), n * alpha * d.min(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub q: f64,
    pub alpha: f64,
    pub s1: f64,
    pub s2: f64,
    /// `||f||_{M^0_{2,q}} / ||f||_{M^{s1,alpha}_{2,q}}`.
    pub upper: InequalityReport,
    /// `||f||_{M^{s2,alpha}_{2,q}} / ||f||_{M^0_{2,q}}`.
    pub lower: InequalityReport,
    pub passed: bool,
}

/// Both embedding ratios over a family `(scale, f)` sharing one grid. Passes
/// when neither ratio grows with the scale parameter.
pub fn embedding_check(q: f64, alpha: f64, family: &[(f64, GridSignal)]) -> Result<EmbeddingReport> {
    let grid = *family
        .first()
        .ok_or_else(|| Error::param("family", "empty family"))?
        .1
        .grid();
    let cover_a = AlphaCover::for_grid(alpha, &grid)?;
    let cover_0 = AlphaCover::for_grid(0.0, &grid)?;
    let bands_a = cover_a.bands(&grid, BandKind::Eta)?;
    let bands_0 = cover_0.bands(&grid, BandKind::Eta)?;
    embedding_check_with(q, &bands_a, &bands_0, family)
}

/// [`embedding_check`] with precomputed bands for `alpha` and for `0`.
pub fn embedding_check_with(
    q: f64,
    bands_alpha: &Bands,
    bands_zero: &Bands,
    family: &[(f64, GridSignal)],
) -> Result<EmbeddingReport> {
    let alpha = bands_alpha.alpha;
    if bands_zero.alpha != 0.0 {
        return Err(Error::AlphaMismatch {
            cover: bands_zero.alpha,
            params: 0.0,
        });
    }
    let (s1, s2) = embedding_exponents(q, alpha, bands_alpha.grid.dim());
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for (scale, f) in family {
        let spec = fft(f);
        let na = band_norms_spectrum(&spec, bands_alpha, 2.0)?;
        let n0 = band_norms_spectrum(&spec, bands_zero, 2.0)?.combine(q, 0.0);
        let a1 = na.combine(q, s1);
        let a2 = na.combine(q, s2);
        upper.push(InequalityPoint {
            param: *scale,
            lhs: n0,
            rhs: a1,
            ratio: n0 / a1,
        });
        lower.push(InequalityPoint {
            param: *scale,
            lhs: a2,
            rhs: n0,
            ratio: a2 / n0,
        });
    }
    let upper = InequalityReport::from_points("embedding_upper", upper, grid::SLOPE_TOLERANCE);
    let lower = InequalityReport::from_points("embedding_lower", lower, grid::SLOPE_TOLERANCE);
    let passed = upper.passed && lower.passed;
    Ok(EmbeddingReport {
        q,
        alpha,
        s1,
        s2,
        upper,
        lower,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn exponents() {
        assert_eq!(embedding_exponents(2.0, 0.5, 1), (0.0, 0.0));
        assert_eq!(embedding_exponents(1.0, 0.5, 1), (0.25, 0.0));
        assert_eq!(embedding_exponents(f64::INFINITY, 0.5, 1), (0.0, -0.25));
    }

    #[test]
    fn parameter_validation() {
        assert!(QuasiNormParams::new(0.0, 1.0, 0.0, 0.5).is_err());
        assert!(QuasiNormParams::new(1.0, -1.0, 0.0, 0.5).is_err());
        assert!(QuasiNormParams::new(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(QuasiNormParams::new(f64::INFINITY, f64::INFINITY, -3.0, 0.0).is_ok());
        let p = QuasiNormParams::new(1.0, 1.0, 1.0, 0.5).unwrap();
        assert_eq!(p.weight_exponent(), 2.0);
    }

    #[test]
    fn lq_combination() {
        assert_eq!(lq(&[3.0, 4.0], 2.0), 5.0);
        assert_eq!(lq(&[3.0, 4.0], f64::INFINITY), 4.0);
        assert_eq!(lq(&[0.0, 0.0], 0.5), 0.0);
        assert!((lq(&[1.0, 1.0], 0.5) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn zero_signal_and_mismatch() {
        let g = Grid::new(1, 256, 16.0 * PI).unwrap();
        let cover = AlphaCover::for_grid(0.5, &g).unwrap();
        let p = QuasiNormParams::new(0.5, 1.0, 0.0, 0.5).unwrap();
        assert_eq!(alpha_norm(&GridSignal::zeros(g), &cover, &p).unwrap(), 0.0);
        let wrong = QuasiNormParams::new(0.5, 1.0, 0.0, 0.3).unwrap();
        assert!(matches!(
            alpha_norm(&GridSignal::zeros(g), &cover, &wrong),
            Err(Error::AlphaMismatch { .. })
        ));
    }

    #[test]
    fn lift_round_trip() {
        let g = Grid::new(1, 512, 20.0).unwrap();
        let f = GridSignal::from_fn(g, |x| Complex64::new((-x[0] * x[0]).exp(), 0.0)).unwrap();
        assert_eq!(bessel_lift(&f, 0.0), f);
        let back = bessel_lift(&bessel_lift(&f, 1.5), -1.5);
        assert!(back.relative_l2_distance(&f).unwrap() < 1e-10);
    }
}
