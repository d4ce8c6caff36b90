//! Test signal families defined on the frequency side.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cover::{exponent, to_index};
use crate::error::{Error, Result};
use crate::grid::{ifft, Grid, GridSignal, Spectrum};
use crate::profile::BumpProfile;

/// `f_l^(xi) = phi_0((xi - <l>^A l) / (width <l>^A))`: equal to one on the
/// ball of radius `width <l>^A` around the band center, zero beyond twice it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauFamily {
    pub alpha: f64,
    pub width: f64,
    pub dim: usize,
    #[serde(default)]
    pub profile: BumpProfile,
}

impl PlateauFamily {
    pub fn new(alpha: f64, width: f64, dim: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::param("alpha", format!("{alpha} is outside [0, 1)")));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::param("width", format!("{width} is not positive")));
        }
        if dim != 1 && dim != 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        Ok(Self {
            alpha,
            width,
            dim,
            profile: BumpProfile::default(),
        })
    }

    /// `<l>^A`.
    pub fn scale(&self, ell: &[i64]) -> f64 {
        let k = to_index(ell);
        (1.0 + (k[0] as f64).hypot(k[1] as f64)).powf(exponent(self.alpha))
    }

    pub fn center(&self, ell: &[i64]) -> [f64; 2] {
        let k = to_index(ell);
        let s = self.scale(ell);
        [s * k[0] as f64, s * k[1] as f64]
    }

    /// Radius of the plateau, `width <l>^A`.
    pub fn plateau_radius(&self, ell: &[i64]) -> f64 {
        self.width * self.scale(ell)
    }

    /// Radius of the support, `2 width <l>^A`.
    pub fn support_radius(&self, ell: &[i64]) -> f64 {
        2.0 * self.plateau_radius(ell)
    }

    /// Largest frequency magnitude in the support.
    pub fn reach(&self, ell: &[i64]) -> f64 {
        let c = self.center(ell);
        c[0].hypot(c[1]) + self.support_radius(ell)
    }

    pub fn spectrum(&self, grid: &Grid, ell: &[i64]) -> Result<Spectrum> {
        if grid.dim() != self.dim || ell.len() != self.dim {
            return Err(Error::GridMismatch(format!(
                "family is {}-dimensional, grid {} and index {:?}",
                self.dim,
                grid.dim(),
                ell
            )));
        }
        let reach = self.reach(ell);
        if reach >= grid.nyquist() {
            return Err(Error::Precondition(format!(
                "band {ell:?} reaches {reach}, beyond the grid's Nyquist frequency {}",
                grid.nyquist()
            )));
        }
        let c = self.center(ell);
        let r = self.plateau_radius(ell);
        let profile = self.profile;
        Spectrum::from_fn(*grid, |xi| {
            let u = (xi[0] - c[0]).hypot(xi[1] - c[1]) / r;
            Complex64::new(profile.radial(u), 0.0)
        })
    }

    pub fn signal(&self, grid: &Grid, ell: &[i64]) -> Result<GridSignal> {
        Ok(ifft(&self.spectrum(grid, ell)?))
    }
}

/// A random band-limited signal: `bumps` smooth compactly supported bumps
/// with random centers in `|xi| <= window`, random widths in
/// `[min_width, 2 min_width]` and random complex amplitudes. The spectrum
/// vanishes outside `|xi| <= window + 4 min_width`.
pub fn random_bandlimited(grid: &Grid, window: f64, min_width: f64, bumps: usize, seed: u64) -> Result<GridSignal> {
    if !(window >= 0.0 && min_width > 0.0) {
        return Err(Error::param("window", "window must be non-negative and widths positive"));
    }
    if window + 4.0 * min_width >= grid.nyquist() {
        return Err(Error::Precondition(format!(
            "band-limit {} exceeds the Nyquist frequency {}",
            window + 4.0 * min_width,
            grid.nyquist()
        )));
    }
    let dim = grid.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts = Vec::with_capacity(bumps);
    for _ in 0..bumps {
        let mut c = [0.0; 2];
        loop {
            for v in c.iter_mut().take(dim) {
                *v = rng.gen_range(-window..=window);
            }
            if c[0].hypot(c[1]) <= window {
                break;
            }
        }
        let w = min_width * rng.gen_range(1.0..2.0);
        let amp = Complex64::from_polar(rng.gen_range(0.2..1.0), rng.gen_range(0.0..std::f64::consts::TAU));
        parts.push((c, w, amp));
    }
    let profile = BumpProfile::default();
    let spectrum = Spectrum::from_fn(*grid, |xi| {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(c, w, amp) in &parts {
            let u = (xi[0] - c[0]).hypot(xi[1] - c[1]) / w;
            if u < 2.0 {
                acc += amp * profile.radial(u);
            }
        }
        acc
    })?;
    Ok(ifft(&spectrum))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_family_shape() {
        let grid = Grid::new(1, 1024, 2.0 * std::f64::consts::PI * 8.0).unwrap();
        let fam = PlateauFamily::new(0.5, 0.25, 1).unwrap();
        let s = fam.spectrum(&grid, &[3]).unwrap();
        // center 12, plateau radius 1, support radius 2
        for (j, c) in s.coeffs().iter().enumerate() {
            let xi = grid.xi(j);
            if (xi - 12.0).abs() <= 1.0 {
                assert_eq!(c.re, 1.0);
            }
            if (xi - 12.0).abs() >= 2.0 {
                assert_eq!(c.re, 0.0);
            }
        }
    }

    #[test]
    fn random_signal_is_seeded() {
        let grid = Grid::new(1, 256, 40.0).unwrap();
        let a = random_bandlimited(&grid, 5.0, 0.5, 4, 9).unwrap();
        let b = random_bandlimited(&grid, 5.0, 0.5, 4, 9).unwrap();
        assert_eq!(a.samples(), b.samples());
    }
}
