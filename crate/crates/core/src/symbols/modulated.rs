//! Genuinely x-dependent `S^0_{alpha,alpha}` test symbols
//! `sigma(x, xi) = sum_m a_m X(<m>^A theta . x) eta_m(xi)`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{order_of, Symbol, SymbolClass};
use crate::cover::{to_index, AlphaCover, BandKind, Bands, Index};
use crate::error::{Error, Result};
use crate::grid::Spectrum;
use crate::jet::ORDER;

/// Periodic x-profile `X(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum XProfile {
    /// `cos t`.
    Cosine,
    /// `sum_{j < terms} (1 - ratio) ratio^j cos((j + 1) t)`; bounded by one.
    Harmonics { ratio: f64, terms: usize },
}

impl XProfile {
    fn validate(&self) -> Result<()> {
        if let XProfile::Harmonics { ratio, terms } = *self {
            if !(ratio > 0.0 && ratio < 1.0) {
                return Err(Error::param("ratio", format!("{ratio} is outside (0, 1)")));
            }
            if terms == 0 {
                return Err(Error::param("terms", "need at least one harmonic"));
            }
        }
        Ok(())
    }

    /// `(multiple, weight)` pairs.
    pub fn harmonics(&self) -> Vec<(f64, f64)> {
        match *self {
            XProfile::Cosine => vec![(1.0, 1.0)],
            XProfile::Harmonics { ratio, terms } => (0..terms)
                .map(|j| ((j + 1) as f64, (1.0 - ratio) * ratio.powi(j as i32)))
                .collect(),
        }
    }
}

fn profile_derivative(harmonics: &[(f64, f64)], t: f64, order: usize) -> f64 {
    let shift = order as f64 * FRAC_PI_2;
    harmonics
        .iter()
        .map(|&(h, w)| w * h.powi(order as i32) * (h * t + shift).cos())
        .sum()
}

pub struct ModulatedFamily {
    cover: Arc<AlphaCover>,
    amplitudes: BTreeMap<Index, f64>,
    direction: [f64; 2],
    profile: XProfile,
    harmonics: Vec<(f64, f64)>,
    bands: Mutex<Option<Arc<Bands>>>,
}

impl std::fmt::Debug for ModulatedFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModulatedFamily")
            .field("alpha", &self.cover.alpha())
            .field("active", &self.amplitudes.len())
            .field("direction", &self.direction)
            .field("profile", &self.profile)
            .finish()
    }
}

impl ModulatedFamily {
    /// Amplitudes must satisfy `|a_m| <= 1`; indices outside the cover's
    /// lattice are rejected.
    pub fn new(
        cover: Arc<AlphaCover>,
        amplitudes: impl IntoIterator<Item = (Vec<i64>, f64)>,
        direction: &[f64],
        profile: XProfile,
    ) -> Result<Self> {
        let dim = cover.dim();
        if direction.len() != dim {
            return Err(Error::param("direction", format!("expected {dim} components")));
        }
        let len = crate::profile::norm(direction);
        if (len - 1.0).abs() > 1e-12 {
            return Err(Error::param("direction", format!("|theta| = {len}, expected a unit vector")));
        }
        profile.validate()?;
        let mut map = BTreeMap::new();
        for (m, a) in amplitudes {
            if !(a.is_finite() && a.abs() <= 1.0) {
                return Err(Error::param("amplitude", format!("a_{m:?} = {a} is not bounded by 1")));
            }
            if m.len() != dim || !cover.contains(&m) {
                return Err(Error::param("amplitude", format!("index {m:?} is not in the lattice")));
            }
            if a != 0.0 {
                map.insert(to_index(&m), a);
            }
        }
        let mut theta = [0.0; 2];
        theta[..dim].copy_from_slice(direction);
        Ok(Self {
            harmonics: profile.harmonics(),
            cover,
            amplitudes: map,
            direction: theta,
            profile,
            bands: Mutex::new(None),
        })
    }

    /// `a_m = amplitude` on the whole retained lattice.
    pub fn uniform(cover: Arc<AlphaCover>, amplitude: f64, direction: &[f64], profile: XProfile) -> Result<Self> {
        let dim = cover.dim();
        let amps: Vec<(Vec<i64>, f64)> = cover.lattice().iter().map(|k| (k[..dim].to_vec(), amplitude)).collect();
        Self::new(cover, amps, direction, profile)
    }

    /// A single active band.
    pub fn single(cover: Arc<AlphaCover>, m: &[i64], amplitude: f64, direction: &[f64], profile: XProfile) -> Result<Self> {
        Self::new(cover, [(m.to_vec(), amplitude)], direction, profile)
    }

    pub fn cover(&self) -> &AlphaCover {
        &self.cover
    }

    pub fn profile(&self) -> XProfile {
        self.profile
    }

    pub fn amplitude(&self, m: &[i64]) -> f64 {
        self.amplitudes.get(&to_index(m)).copied().unwrap_or(0.0)
    }

    fn phase(&self, x: [f64; 2]) -> f64 {
        self.direction[0] * x[0] + self.direction[1] * x[1]
    }

    fn grid_bands(&self, spectrum: &Spectrum) -> Option<Arc<Bands>> {
        let mut slot = self.bands.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(b) = slot.as_ref() {
            if b.grid == *spectrum.grid() {
                return Some(b.clone());
            }
        }
        let b = Arc::new(self.cover.bands(spectrum.grid(), BandKind::Eta).ok()?);
        *slot = Some(b.clone());
        Some(b)
    }
}

impl Symbol for ModulatedFamily {
    fn dim(&self) -> usize {
        self.cover.dim()
    }

    fn eval(&self, x: [f64; 2], xi: [f64; 2]) -> Complex64 {
        let dim = self.dim();
        let t = self.phase(x);
        let mut acc = 0.0;
        for (m, eta) in self.cover.eta_all(&xi[..dim]) {
            let Some(a) = self.amplitudes.get(&to_index(&m)) else {
                continue;
            };
            let w = self.cover.scale(&m);
            acc += a * profile_derivative(&self.harmonics, w * t, 0) * eta;
        }
        Complex64::new(acc, 0.0)
    }

    fn derivative(&self, beta: [usize; 2], gamma: [usize; 2], x: [f64; 2], xi: [f64; 2]) -> Option<Complex64> {
        let order = order_of(beta, gamma);
        if order == 0 {
            return Some(self.eval(x, xi));
        }
        if self.dim() != 1 || order > ORDER {
            return None;
        }
        let t = x[0];
        let theta = self.direction[0];
        let mut acc = 0.0;
        for (k, jet) in self.cover.eta_jets_1d(xi[0]) {
            let Some(a) = self.amplitudes.get(&[k, 0]) else {
                continue;
            };
            let d_eta = jet.derivative(gamma[0]);
            if d_eta == 0.0 {
                continue;
            }
            let w = self.cover.scale(&[k]) * theta;
            acc += a * w.powi(beta[0] as i32) * profile_derivative(&self.harmonics, w * t, beta[0]) * d_eta;
        }
        Some(Complex64::new(acc, 0.0))
    }

    fn derivative_order(&self) -> usize {
        if self.dim() == 1 {
            ORDER
        } else {
            0
        }
    }

    fn class(&self) -> SymbolClass {
        SymbolClass::exotic(self.cover.alpha())
    }

    fn constant_value(&self) -> Option<Complex64> {
        self.amplitudes.is_empty().then(|| Complex64::new(0.0, 0.0))
    }

    /// Exact spectral shifts: band `m` of the input moves by
    /// `+-h <m>^A theta` for each harmonic `h`. Only available when every
    /// shift is a whole number of lattice steps and the grid lies inside the
    /// cover's interior.
    fn apply_spectrum(&self, f: &Spectrum) -> Option<Spectrum> {
        let grid = *f.grid();
        if grid.dim() != self.dim() {
            return None;
        }
        let n = grid.n() as i64;
        let steps_per_unit = grid.length() / (2.0 * PI);
        let mut shifts: BTreeMap<Index, Vec<([i64; 2], f64)>> = BTreeMap::new();
        for &m in self.amplitudes.keys() {
            let w = self.cover.scale(&m[..self.dim()]);
            let mut list = Vec::with_capacity(self.harmonics.len());
            for &(h, weight) in &self.harmonics {
                let mut d = [0i64; 2];
                for axis in 0..self.dim() {
                    let exact = h * w * self.direction[axis] * steps_per_unit;
                    let r = exact.round();
                    if (exact - r).abs() > 1e-9 * exact.abs().max(1.0) {
                        return None;
                    }
                    d[axis] = r as i64;
                }
                list.push((d, weight));
            }
            shifts.insert(m, list);
        }
        let bands = self.grid_bands(f)?;
        let wrap = |k: i64| (k + n / 2).rem_euclid(n) - n / 2;
        let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
        let coeffs = f.coeffs();
        for band in &bands.bands {
            let (Some(a), Some(list)) = (self.amplitudes.get(&band.k), shifts.get(&band.k)) else {
                continue;
            };
            for (&pos, &eta) in band.positions.iter().zip(&band.weights) {
                let v = coeffs[pos] * (a * eta);
                if v == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let p = grid.unflatten(pos);
                let k0 = grid.freq_index(p[0]);
                let k1 = if grid.dim() == 2 { grid.freq_index(p[1]) } else { 0 };
                for &(d, weight) in list {
                    let half = v * (0.5 * weight);
                    for sign in [1i64, -1] {
                        let t0 = grid.freq_position(wrap(k0 + sign * d[0])).unwrap();
                        let target = if grid.dim() == 2 {
                            let t1 = grid.freq_position(wrap(k1 + sign * d[1])).unwrap();
                            grid.flatten([t0, t1])
                        } else {
                            t0
                        };
                        out[target] += half;
                    }
                }
            }
        }
        Spectrum::new(grid, out).ok()
    }

    fn xi_hints(&self, window: f64) -> Vec<[f64; 2]> {
        let dim = self.dim();
        let fractions = [0.0, 0.25, 0.5, 0.6, 0.7, 0.8, 0.9];
        let mut out = Vec::new();
        for &m in self.amplitudes.keys() {
            let c = self.cover.center(&m[..dim]);
            let r = self.cover.eta_radius(&m[..dim]);
            let dirs: &[[f64; 2]] = if dim == 1 {
                &[[1.0, 0.0], [-1.0, 0.0]]
            } else {
                &[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]
            };
            for d in dirs {
                for f in fractions {
                    let p = [c[0] + f * r * d[0], if dim == 2 { c[1] + f * r * d[1] } else { 0.0 }];
                    if p[0].hypot(p[1]) <= window {
                        out.push(p);
                    }
                }
            }
        }
        out
    }

    fn name(&self) -> String {
        format!("modulated(alpha={}, active={}, profile={:?})", self.cover.alpha(), self.amplitudes.len(), self.profile)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::CoverParams;
    use crate::profile::BumpProfile;

    fn family(profile: XProfile) -> ModulatedFamily {
        let cover = Arc::new(AlphaCover::new(CoverParams::new(0.5, 1, 24), BumpProfile::default()).unwrap());
        ModulatedFamily::uniform(cover, 1.0, &[1.0], profile).unwrap()
    }

    #[test]
    fn rejects_unbounded_amplitude() {
        let cover = Arc::new(AlphaCover::new(CoverParams::new(0.5, 1, 8), BumpProfile::default()).unwrap());
        assert!(ModulatedFamily::single(cover, &[2], 1.5, &[1.0], XProfile::Cosine).is_err());
    }

    #[test]
    fn at_x_zero_is_partition_sum() {
        let s = family(XProfile::Cosine);
        for xi in [-30.0, -3.2, 0.0, 1.7, 44.0] {
            assert!((s.eval([0.0, 0.0], [xi, 0.0]).re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn derivatives_match_differences() {
        let s = family(XProfile::Harmonics { ratio: 0.5, terms: 6 });
        let (x, xi) = (0.37, 11.3);
        let h = 1e-4;
        let e = |dx: f64, dxi: f64| s.eval([x + dx, 0.0], [xi + dxi, 0.0]).re;
        let fd_xi = (e(0.0, h) - e(0.0, -h)) / (2.0 * h);
        let fd_x = (e(h, 0.0) - e(-h, 0.0)) / (2.0 * h);
        let d_xi = s.derivative([0, 0], [1, 0], [x, 0.0], [xi, 0.0]).unwrap().re;
        let d_x = s.derivative([1, 0], [0, 0], [x, 0.0], [xi, 0.0]).unwrap().re;
        assert!((fd_xi - d_xi).abs() < 1e-6 * d_xi.abs().max(1.0), "{fd_xi} {d_xi}");
        assert!((fd_x - d_x).abs() < 1e-6 * d_x.abs().max(1.0), "{fd_x} {d_x}");
    }
}
