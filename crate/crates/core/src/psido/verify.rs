//! Numerical checks on the `(l, m)` pieces: reconstruction, the plateau
//! identity, output localization, decay in `l` and the band-limited
//! convolution bound.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pieces::{PieceBuilder, SymbolPiece};
use super::quantize_direct;
use crate::cover::{bracket, AlphaCover, BandKind, Bands, Index};
use crate::error::{Error, Result};
use crate::fit::{fit_loglog, SlopeFit, FLOOR};
use crate::grid::{fft, ifft, Ball, GridSignal, InequalityPoint, InequalityReport, Spectrum, SLOPE_TOLERANCE};
use crate::symbols::Symbol;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub m_min: i64,
    pub m_max: i64,
    pub pieces: usize,
    /// `max |sum_{l,m} sigma_{l,m} - sigma| / max |sigma|` over the sampled window.
    pub symbol_error: f64,
    /// `||sum_{l,m} sigma_{l,m}(X, D) f - sigma(X, D) f||_2 / ||sigma(X, D) f||_2`.
    pub operator_error: f64,
    /// `max |sigma_{l,m}|` over `l != 0`, relative to `max |sigma|`.
    pub off_zero_max: f64,
}

/// Sums every piece meeting the grid and compares with the symbol and with
/// the directly quantized operator.
pub fn verify_reconstruction(sigma: &dyn Symbol, cover: &AlphaCover, f: &GridSignal) -> Result<ReconstructionReport> {
    let grid = *f.grid();
    let builder = PieceBuilder::new(sigma, cover, grid)?;
    cover.ensure_covers(grid.nyquist_radius())?;
    let nyq = grid.nyquist();
    let ms: Vec<i64> = cover
        .lattice()
        .iter()
        .map(|k| k[0])
        .filter(|&m| cover.center(&[m])[0].abs() - cover.eta_radius(&[m]) < nyq)
        .collect();
    let n = grid.n();
    let spectrum = fft(f);
    let mut table = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    let mut output = vec![Complex64::new(0.0, 0.0); n];
    let mut count = 0;
    let mut off_zero = 0.0f64;
    for &m in &ms {
        let cols = builder.columns(m, false);
        for ell in builder.ell_range(m) {
            let piece = builder.piece(&cols, ell);
            count += 1;
            if ell != 0 {
                off_zero = off_zero.max(piece.max_abs());
            }
            for (w, &pos) in piece.positions().iter().enumerate() {
                for (acc, z) in table[pos].iter_mut().zip(piece.column(w)) {
                    *acc += z;
                }
            }
            let g = piece.apply_spectrum(&spectrum)?;
            for (acc, z) in output.iter_mut().zip(g.samples()) {
                *acc += z;
            }
        }
    }
    let (err, scale) = (0..n)
        .into_par_iter()
        .map(|pos| {
            let xi = [grid.xi(pos), 0.0];
            let mut e = 0.0f64;
            let mut s = 0.0f64;
            for i in 0..n {
                let v = sigma.eval([grid.x(i), 0.0], xi);
                e = e.max((table[pos][i] - v).norm());
                s = s.max(v.norm());
            }
            (e, s)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    let direct = quantize_direct(sigma, f)?;
    let summed = GridSignal::new(grid, output)?;
    let scale = if scale == 0.0 { 1.0 } else { scale };
    Ok(ReconstructionReport {
        m_min: ms.iter().copied().min().unwrap_or(0),
        m_max: ms.iter().copied().max().unwrap_or(0),
        pieces: count,
        symbol_error: err / scale,
        operator_error: summed.relative_l2_distance(&direct)?,
        off_zero_max: off_zero / scale,
    })
}

/// `eta_m(D) f` as a spectrum.
fn eta_band(cover: &AlphaCover, spectrum: &Spectrum, m: i64) -> Spectrum {
    let mut out = spectrum.clone();
    for (j, z) in out.coeffs_mut().iter_mut().enumerate() {
        let w = cover.eval_eta(&[m], &[spectrum.grid().xi(j)]);
        *z *= w;
    }
    out
}

/// Relative `L^2` distance between `sigma_{l,m}(X, D) f` and
/// `sigma~_{l,m}(X, D) eta_m(D) f`.
pub fn verify_plateau_identity(builder: &PieceBuilder<'_>, m: i64, ell: i64, f: &GridSignal) -> Result<f64> {
    let spectrum = fft(f);
    let plain = builder.pieces(m, [ell], false).remove(0);
    let plateau = builder.pieces(m, [ell], true).remove(0);
    let a = plain.apply_spectrum(&spectrum)?;
    let b = plateau.apply_spectrum(&eta_band(builder.cover(), &spectrum, m))?;
    let norm = a.lp_norm(2.0);
    let diff = b.combine(Complex64::new(1.0, 0.0), &a, Complex64::new(-1.0, 0.0))?.lp_norm(2.0);
    Ok(if norm == 0.0 { diff } else { diff / norm })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub m: i64,
    pub ell: i64,
    pub center: f64,
    pub radius: f64,
    /// Relative `l^2` spectral mass of the output outside the ball.
    pub outside_fraction: f64,
    pub output_norm: f64,
    /// `(k, |k - m| / <l>)` for every `rho_k` band carrying output mass.
    pub k_ratios: Vec<(i64, f64)>,
    pub max_k_ratio: f64,
    pub passed: bool,
}

/// Relative band mass above which a `rho_k` band counts as occupied.
pub const BAND_MASS_THRESHOLD: f64 = 1e-10;

/// Spectral mass outside `|zeta - <m>^A (l + m)| <= radius_scale (C + sqrt n) <m>^A`.
/// `radius_scale = 1` is the actual check; smaller values serve as negative
/// controls.
pub fn verify_region(
    piece: &SymbolPiece,
    cover: &AlphaCover,
    f: &GridSignal,
    rho_bands: &Bands,
    radius_scale: f64,
) -> Result<RegionReport> {
    if rho_bands.kind != BandKind::Rho || rho_bands.grid != *f.grid() {
        return Err(Error::GridMismatch("region check needs rho bands on the signal grid".into()));
    }
    let s = piece.scale;
    let center = s * (piece.ell + piece.m) as f64;
    let radius = radius_scale * (cover.params().c + 1.0) * s;
    let out = fft(&piece.apply(f)?);
    let total = out.energy();
    let outside_fraction = Ball::new(&[center], radius).outside_fraction(&out);
    let mut k_ratios = Vec::new();
    if total > 0.0 {
        for band in &rho_bands.bands {
            let e: f64 = band
                .positions
                .iter()
                .zip(&band.weights)
                .map(|(&p, &w)| (w * out.coeffs()[p].norm()).powi(2))
                .sum();
            if (e / total).sqrt() > BAND_MASS_THRESHOLD {
                k_ratios.push((band.k[0], (band.k[0] - piece.m).abs() as f64 / bracket(piece.ell as f64)));
            }
        }
    }
    let max_k_ratio = k_ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(RegionReport {
        m: piece.m,
        ell: piece.ell,
        center,
        radius,
        outside_fraction,
        output_norm: out.l2_norm(),
        k_ratios,
        max_k_ratio,
        passed: outside_fraction <= 1e-8,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRecord {
    pub ell: i64,
    /// `<l>`.
    pub bracket: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderVerdict {
    pub order: usize,
    /// Fitted slope must not exceed `-order + 0.5`.
    pub required_slope: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub name: String,
    pub m: i64,
    pub records: Vec<DecayRecord>,
    pub fit: Option<SlopeFit>,
    pub above_floor: usize,
    /// Fewer than three values above the floor and the tail below it: the
    /// decay is faster than any power the range can resolve.
    pub infinite_order: bool,
    pub orders: Vec<OrderVerdict>,
    pub passed: bool,
}

impl DecayReport {
    pub fn from_records(name: impl Into<String>, m: i64, records: Vec<DecayRecord>, orders: &[usize]) -> Self {
        let pts: Vec<(f64, f64)> = records.iter().map(|r| (r.bracket, r.value)).collect();
        let above_floor = records.iter().filter(|r| r.value > FLOOR).count();
        let tail_below = records.last().map_or(true, |r| r.value <= FLOOR);
        let infinite_order = above_floor < 3 && tail_below;
        let fit = if above_floor >= 3 { fit_loglog(&pts) } else { None };
        let orders: Vec<OrderVerdict> = orders
            .iter()
            .map(|&n| {
                let required_slope = -(n as f64) + 0.5;
                let passed = infinite_order || fit.is_some_and(|f| f.slope <= required_slope);
                OrderVerdict {
                    order: n,
                    required_slope,
                    passed,
                }
            })
            .collect();
        let passed = !orders.is_empty() && orders.iter().all(|o| o.passed);
        Self {
            name: name.into(),
            m,
            records,
            fit,
            above_floor,
            infinite_order,
            orders,
            passed,
        }
    }
}

/// `r(l) = ||sigma~_{l,m}(X, D) eta_m(D) f||_p / ||eta_m(D) f||_p` for each
/// `l` in `ells` (the larger of `+l` and `-l`), with slope verdicts for
/// each order in `orders`.
pub fn verify_ell_decay(
    sigma: &dyn Symbol,
    cover: &AlphaCover,
    f: &GridSignal,
    p: f64,
    m: i64,
    ells: &[i64],
    orders: &[usize],
) -> Result<DecayReport> {
    let grid = *f.grid();
    let builder = PieceBuilder::new(sigma, cover, grid)?;
    let band = eta_band(cover, &fft(f), m);
    let denominator = ifft(&band).lp_norm(p);
    if denominator == 0.0 {
        return Err(Error::EmptyBand(vec![m]));
    }
    let cols = builder.columns(m, true);
    let records = ells
        .par_iter()
        .map(|&ell| {
            let mut best = 0.0f64;
            let signs: &[i64] = if ell == 0 { &[1] } else { &[1, -1] };
            for &sign in signs {
                let piece = builder.piece(&cols, sign * ell);
                best = best.max(piece.apply_spectrum(&band)?.lp_norm(p));
            }
            Ok(DecayRecord {
                ell,
                bracket: bracket(ell as f64),
                value: best / denominator,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DecayReport::from_records(format!("ell_decay(p={p})"), m, records, orders))
}

/// `(sup_{x,y} |k(x,y)| (1 + <m>^A |y|)^M / <m>^A, sup_x |k(x,0)| / <m>^A)`
/// for a plateau piece, sampling at most 64 rows in `x`.
pub fn oscillatory_sup(piece: &SymbolPiece, big_m: u32) -> Result<(f64, f64)> {
    if !piece.plateau {
        return Err(Error::Precondition("kernel bounds are stated for plateau pieces".into()));
    }
    let g = *piece.grid();
    let n = g.n();
    let stride = (n / 64).max(1);
    let s = piece.scale;
    let rows: Vec<usize> = (0..n).step_by(stride).collect();
    let (weighted, at_zero) = rows
        .par_iter()
        .map(|&i| {
            let k = piece.kernel(i);
            let mut w = 0.0f64;
            for (l, z) in k.iter().enumerate() {
                let y = g.x(l);
                w = w.max(z.norm() * (1.0 + s * y.abs()).powi(big_m as i32));
            }
            (w, k[n / 2].norm())
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    Ok((weighted / s, at_zero / s))
}

/// Oscillatory kernel bound across a set of plateau pieces sharing `m`,
/// as a decay report in `l`.
pub fn verify_oscillatory_decay(pieces: &[SymbolPiece], big_m: u32, orders: &[usize]) -> Result<DecayReport> {
    let m = pieces.first().map_or(0, |p| p.m);
    let mut records = Vec::with_capacity(pieces.len());
    for piece in pieces {
        if piece.m != m {
            return Err(Error::Precondition("pieces must share m".into()));
        }
        let (value, _) = oscillatory_sup(piece, big_m)?;
        records.push(DecayRecord {
            ell: piece.ell,
            bracket: bracket(piece.ell as f64),
            value,
        });
    }
    Ok(DecayReport::from_records(format!("oscillatory(M={big_m})"), m, records, orders))
}

/// `||rho_k(D) g||_p / (<l>^{A n (1/p - 1)} ||g||_p)` for a piece output `g`;
/// the power is dropped for `p >= 1`.
pub fn piece_convolution_point(output: &GridSignal, rho_bands: &Bands, k: Index, ell: i64, p: f64) -> Result<InequalityPoint> {
    if rho_bands.kind != BandKind::Rho || rho_bands.grid != *output.grid() {
        return Err(Error::GridMismatch("convolution check needs rho bands on the output grid".into()));
    }
    let spectrum = fft(output);
    let mut banded = Spectrum::zeros(*output.grid());
    if let Some(band) = rho_bands.bands.iter().find(|b| b.k == k) {
        for (&pos, &w) in band.positions.iter().zip(&band.weights) {
            banded.coeffs_mut()[pos] = spectrum.coeffs()[pos] * w;
        }
    }
    let lhs = ifft(&banded).lp_norm(p);
    let a = crate::cover::exponent(rho_bands.alpha);
    let n = output.grid().dim() as f64;
    let power = if p < 1.0 { a * n * (1.0 / p - 1.0) } else { 0.0 };
    let rhs = bracket(ell as f64).powf(power) * output.lp_norm(p);
    Ok(InequalityPoint {
        param: bracket(ell as f64),
        lhs,
        rhs,
        ratio: if rhs == 0.0 { 0.0 } else { lhs / rhs },
    })
}

/// Trend check of [`piece_convolution_point`] over `(output, k, l)` cases.
/// For `p > 1` this is the Young-inequality form without the `l` power.
pub fn verify_piece_convolution(cases: &[(GridSignal, Index, i64)], rho_bands: &Bands, p: f64) -> Result<InequalityReport> {
    if !(p > 0.0) {
        return Err(Error::param("p", format!("{p} is not positive")));
    }
    let points = cases
        .iter()
        .map(|(g, k, ell)| piece_convolution_point(g, rho_bands, *k, *ell, p))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<InequalityPoint> = points.into_iter().filter(|pt| pt.lhs > 0.0).collect();
    let name = if p > 1.0 { "piece_young" } else { "piece_convolution" };
    Ok(InequalityReport::from_points(name, points, SLOPE_TOLERANCE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::random_bandlimited;
    use crate::grid::Grid;
    use crate::symbols::{ModulatedFamily, RandomTrig, XProfile};
    use std::f64::consts::TAU;
    use std::sync::Arc;

    fn setup() -> (Grid, AlphaCover, GridSignal) {
        let grid = Grid::new(1, 256, TAU * 4.0).unwrap();
        let cover = AlphaCover::for_grid(0.5, &grid).unwrap();
        let f = random_bandlimited(&grid, 24.0, 1.0, 12, 5).unwrap();
        (grid, cover, f)
    }

    #[test]
    fn pieces_reconstruct_symbol_and_operator() {
        let (grid, cover, f) = setup();
        let s = RandomTrig::seeded(1, 5, grid.dxi(), 20, 0.5, 11).unwrap();
        let r = verify_reconstruction(&s, &cover, &f).unwrap();
        assert!(r.symbol_error < 1e-10, "{r:?}");
        assert!(r.operator_error < 1e-10, "{r:?}");
        assert!(r.off_zero_max > 0.0);
    }

    #[test]
    fn plateau_identity_holds() {
        let (grid, cover, f) = setup();
        let s = RandomTrig::seeded(1, 5, grid.dxi(), 20, 0.5, 2).unwrap();
        let b = PieceBuilder::new(&s, &cover, grid).unwrap();
        for (m, ell) in [(0, 0), (2, 1), (-3, -2), (4, 3)] {
            assert!(verify_plateau_identity(&b, m, ell, &f).unwrap() < 1e-12);
        }
    }

    #[test]
    fn region_holds_and_shrunk_ball_fails() {
        let (grid, cover, f) = setup();
        let s = RandomTrig::seeded(1, 5, grid.dxi(), 12, 0.5, 4).unwrap();
        let b = PieceBuilder::new(&s, &cover, grid).unwrap();
        let rho = cover.bands(&grid, BandKind::Rho).unwrap();
        let piece = b.pieces(2, [1], false).remove(0);
        let ok = verify_region(&piece, &cover, &f, &rho, 1.0).unwrap();
        assert!(ok.passed, "{ok:?}");
        let bad = verify_region(&piece, &cover, &f, &rho, 0.1).unwrap();
        assert!(!bad.passed);
    }

    #[test]
    fn modulated_pieces_decay_fast() {
        let grid = Grid::new(1, 512, TAU * 8.0).unwrap();
        let cover = Arc::new(AlphaCover::for_grid(0.5, &grid).unwrap());
        let sigma = ModulatedFamily::uniform(cover.clone(), 1.0, &[1.0], XProfile::Cosine).unwrap();
        let f = random_bandlimited(&grid, 24.0, 1.0, 16, 9).unwrap();
        let ells: Vec<i64> = (1..=8).collect();
        let r = verify_ell_decay(&sigma, &cover, &f, 1.0, 3, &ells, &[2, 4]).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn decay_report_rules() {
        let rec = |v: &[f64]| {
            v.iter()
                .enumerate()
                .map(|(i, &value)| DecayRecord {
                    ell: i as i64 + 1,
                    bracket: i as f64 + 2.0,
                    value,
                })
                .collect::<Vec<_>>()
        };
        let fast = DecayReport::from_records("x", 0, rec(&[1e-2, 1e-9, 0.0, 0.0]), &[6]);
        assert!(fast.infinite_order && fast.passed);
        let slow: Vec<f64> = (0..6).map(|i| (i as f64 + 2.0).powi(-1)).collect();
        let r = DecayReport::from_records("x", 0, rec(&slow), &[1, 2]);
        assert!(r.orders[0].passed && !r.orders[1].passed && !r.passed);
    }
}
