//! Numerical checks of the band-limited convolution inequality in `L^p`,
//! `0 < p <= 1`, and of the Peetre maximal function bound.
//!
//! Constants are never asserted; a report fails only when the measured ratio
//! grows with the band radius (fitted log-log slope above the tolerance).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fft, ifft, Grid, GridSignal, Spectrum};
use crate::error::{Error, Result};
use crate::fit::{fit_loglog, SlopeFit};

/// Relative spectral mass allowed outside a declared ball.
pub const BALL_TOLERANCE: f64 = 1e-10;
/// Default growth tolerance on fitted slopes.
pub const SLOPE_TOLERANCE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Ball {
    pub fn new(center: &[f64], radius: f64) -> Self {
        let mut c = [0.0; 2];
        c[..center.len()].copy_from_slice(center);
        Self { center: c, radius }
    }

    pub fn contains(&self, xi: [f64; 2]) -> bool {
        (xi[0] - self.center[0]).hypot(xi[1] - self.center[1]) <= self.radius
    }

    /// Relative `l^2` mass of the spectrum outside the ball.
    pub fn outside_fraction(&self, spectrum: &Spectrum) -> f64 {
        let grid = spectrum.grid();
        let mut inside = 0.0;
        let mut outside = 0.0;
        for (j, z) in spectrum.coeffs().iter().enumerate() {
            if self.contains(grid.freq(j)) {
                inside += z.norm_sqr();
            } else {
                outside += z.norm_sqr();
            }
        }
        let total = inside + outside;
        if total == 0.0 {
            0.0
        } else {
            (outside / total).sqrt()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityPoint {
    /// Sweep parameter (ball radius, band index, ...).
    pub param: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub points: Vec<InequalityPoint>,
    pub max_ratio: f64,
    pub min_ratio: f64,
    pub fit: Option<SlopeFit>,
    pub slope_tolerance: f64,
    pub passed: bool,
}

impl InequalityReport {
    /// Builds a report whose verdict is "no growth in the swept parameter".
    /// Points sharing a parameter value enter the fit through their largest
    /// ratio.
    pub fn from_points(name: impl Into<String>, points: Vec<InequalityPoint>, tolerance: f64) -> Self {
        let mut envelope: Vec<(f64, f64)> = Vec::new();
        for p in &points {
            match envelope.iter_mut().find(|e| e.0 == p.param) {
                Some(e) => e.1 = e.1.max(p.ratio),
                None => envelope.push((p.param, p.ratio)),
            }
        }
        let fit = fit_loglog(&envelope);
        let max_ratio = points.iter().fold(f64::NEG_INFINITY, |m, p| m.max(p.ratio));
        let min_ratio = points.iter().fold(f64::INFINITY, |m, p| m.min(p.ratio));
        let finite = points.iter().all(|p| p.ratio.is_finite());
        let passed = finite && fit.map_or(true, |f| f.slope <= tolerance);
        Self {
            name: name.into(),
            points,
            max_ratio,
            min_ratio,
            fit,
            slope_tolerance: tolerance,
            passed,
        }
    }
}

pub struct ConvolutionCase {
    pub f: GridSignal,
    pub g: GridSignal,
    pub ball: Ball,
}

/// `||f * g||_p / (R^{n(1/p - 1)} ||f||_p ||g||_p)` over a family of pairs
/// whose spectra lie in balls of radius `R`.
pub fn check_bandlimited_convolution(cases: &[ConvolutionCase], p: f64) -> Result<InequalityReport> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::param("p", format!("{p} is outside (0, 1]")));
    }
    let points = cases
        .iter()
        .map(|case| {
            let grid = *case.f.grid();
            if case.g.grid() != &grid {
                return Err(Error::GridMismatch("convolution factors differ in grid".into()));
            }
            let sf = fft(&case.f);
            let sg = fft(&case.g);
            for (label, s) in [("f", &sf), ("g", &sg)] {
                let out = case.ball.outside_fraction(s);
                if out > BALL_TOLERANCE {
                    return Err(Error::Precondition(format!(
                        "spectrum of {label} has relative mass {out:.3e} outside the ball"
                    )));
                }
            }
            let prod: Vec<Complex64> = sf.coeffs().iter().zip(sg.coeffs()).map(|(a, b)| a * b).collect();
            let conv = ifft(&Spectrum::new(grid, prod)?);
            let lhs = conv.lp_norm(p);
            let power = grid.dim() as f64 * (1.0 / p - 1.0);
            let rhs = case.ball.radius.powf(power) * case.f.lp_norm(p) * case.g.lp_norm(p);
            Ok(InequalityPoint {
                param: case.ball.radius,
                lhs,
                rhs,
                ratio: lhs / rhs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = InequalityReport::from_points("bandlimited_convolution", points, SLOPE_TOLERANCE);
    if p == 1.0 {
        report.passed &= report.max_ratio <= 1.0 + 1e-6;
    }
    Ok(report)
}

/// Discrete Peetre maximal function `sup_y |f(x - y)| / (1 + R|y|)^{n/r}`
/// by exhaustive scan over periodic shifts. One dimension only.
pub fn peetre_maximal(f: &GridSignal, radius: f64, r: f64) -> Result<GridSignal> {
    let grid: Grid = *f.grid();
    if grid.dim() != 1 {
        return Err(Error::UnsupportedDimension(grid.dim()));
    }
    let n = grid.n();
    let dx = grid.dx();
    let weights: Vec<f64> = (0..n)
        .map(|d| {
            let shift = if d <= n / 2 { d as f64 } else { d as f64 - n as f64 };
            (1.0 + radius * (shift * dx).abs()).powf(-1.0 / r)
        })
        .collect();
    let mags: Vec<f64> = f.samples().iter().map(|z| z.norm()).collect();
    let out = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = 0.0f64;
            for (d, w) in weights.iter().enumerate() {
                best = best.max(mags[(i + n - d) % n] * w);
            }
            Complex64::new(best, 0.0)
        })
        .collect();
    GridSignal::new(grid, out)
}

/// `||M_r f||_p / ||f||_p` over a family of signals band-limited to balls.
pub fn check_peetre_maximal(cases: &[(GridSignal, Ball)], r: f64, p: f64) -> Result<InequalityReport> {
    if !(r > 0.0 && r < p) {
        return Err(Error::param("r", format!("{r} must lie in (0, p) with p = {p}")));
    }
    let points = cases
        .iter()
        .map(|(f, ball)| {
            let out = ball.outside_fraction(&fft(f));
            if out > BALL_TOLERANCE {
                return Err(Error::Precondition(format!(
                    "spectrum has relative mass {out:.3e} outside the ball"
                )));
            }
            let lhs = peetre_maximal(f, ball.radius, r)?.lp_norm(p);
            let rhs = f.lp_norm(p);
            Ok(InequalityPoint {
                param: ball.radius,
                lhs,
                rhs,
                ratio: lhs / rhs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InequalityReport::from_points("peetre_maximal", points, SLOPE_TOLERANCE))
}
