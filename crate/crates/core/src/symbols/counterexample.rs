//! The x-independent symbol `sigma(xi) = sum_m psi((xi - <m>^A m) / <m>^{A_eps})`
//! and its plateau test family.
//!
//! `psi = phi_0(2 | . | / c)` lives on `|u| <= c` and the test functions use
//! `psi~ = phi_0(| . | / c)`, which is one on `|u| <= c`. The bumps of `sigma`
//! are narrower than the cover bands by `<m>^{A - A_eps}`, which is what lets
//! the operator gain in `M^{s,alpha}_{p,q}` for `p < 1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{check_dim, order_of, separation::separation_constant, Symbol, SymbolClass};
use crate::cover::{exponent, invert_center_radius, Index};
use crate::error::{Error, Result};
use crate::families::PlateauFamily;
use crate::jet::{Jet, ORDER};
use crate::profile::BumpProfile;

/// Default support constant; `2 c K < 1` for every `K <= 7`.
pub const DEFAULT_C: f64 = 1.0 / 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleParams {
    pub alpha: f64,
    pub eps: f64,
    pub c: f64,
}

impl CounterexampleParams {
    pub fn new(alpha: f64, eps: f64, c: f64) -> Result<Self> {
        let p = Self { alpha, eps, c };
        p.validate()?;
        Ok(p)
    }

    pub fn with_default_c(alpha: f64, eps: f64) -> Result<Self> {
        Self::new(alpha, eps, DEFAULT_C)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::param("alpha", format!("{} is outside (0, 1)", self.alpha)));
        }
        if !(self.eps > 0.0 && self.eps < self.alpha) {
            return Err(Error::param("eps", format!("{} is outside (0, alpha)", self.eps)));
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::param("c", format!("{} is not positive", self.c)));
        }
        let k = self.k_const();
        if 2.0 * self.c * k >= 1.0 {
            return Err(Error::param("c", format!("2 c K = {} must be below 1 (K = {k})", 2.0 * self.c * k)));
        }
        Ok(())
    }

    /// `A = alpha / (1 - alpha)`.
    pub fn a(&self) -> f64 {
        exponent(self.alpha)
    }

    /// `A_eps = (alpha - eps) / (1 - alpha)`.
    pub fn a_eps(&self) -> f64 {
        (self.alpha - self.eps) / (1.0 - self.alpha)
    }

    /// `K = max(6, 1 + 2^A)`.
    pub fn k_const(&self) -> f64 {
        separation_constant(self.alpha)
    }
}

#[derive(Debug, Clone)]
pub struct Counterexample {
    params: CounterexampleParams,
    dim: usize,
    m_max: i64,
    profile: BumpProfile,
}

impl Counterexample {
    /// Retains `|m|_inf <= m_max` and verifies that the balls
    /// `B_m = {|xi - <m>^A m| <= 2 c <m>^A}` are pairwise disjoint.
    pub fn new(params: CounterexampleParams, dim: usize, m_max: i64) -> Result<Self> {
        params.validate()?;
        check_dim(dim)?;
        if m_max < 1 {
            return Err(Error::param("m_max", "must be positive"));
        }
        let s = Self {
            params,
            dim,
            m_max,
            profile: BumpProfile::default(),
        };
        s.verify_disjoint()?;
        Ok(s)
    }

    pub fn params(&self) -> &CounterexampleParams {
        &self.params
    }

    pub fn m_max(&self) -> i64 {
        self.m_max
    }

    fn bracket(m: Index) -> f64 {
        1.0 + (m[0] as f64).hypot(m[1] as f64)
    }

    fn center(&self, m: Index) -> [f64; 2] {
        let s = Self::bracket(m).powf(self.params.a());
        [s * m[0] as f64, s * m[1] as f64]
    }

    /// `<m>^{A_eps}`.
    fn narrow(&self, m: Index) -> f64 {
        Self::bracket(m).powf(self.params.a_eps())
    }

    /// Radius `2 c <m>^A` of `B_m`.
    pub fn ball_radius(&self, m: &[i64]) -> f64 {
        let m = crate::cover::to_index(m);
        2.0 * self.params.c * Self::bracket(m).powf(self.params.a())
    }

    fn lattice(&self) -> Vec<Index> {
        let second = if self.dim == 2 { self.m_max } else { 0 };
        let mut out = Vec::new();
        for a in -self.m_max..=self.m_max {
            for b in -second..=second {
                out.push([a, b]);
            }
        }
        out
    }

    /// Pairwise disjointness of the balls `B_m` by a sweep over their
    /// projections on the first axis; reports the first colliding pair.
    pub fn verify_disjoint(&self) -> Result<()> {
        let mut balls: Vec<(f64, f64, [f64; 2], Index)> = self
            .lattice()
            .into_iter()
            .map(|m| {
                let c = self.center(m);
                let r = self.ball_radius(&m[..self.dim]);
                (c[0] - r, r, c, m)
            })
            .collect();
        balls.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.3.cmp(&b.3)));
        for i in 0..balls.len() {
            let (lo, r, c, m) = balls[i];
            let hi = lo + 2.0 * r;
            for &(lo2, r2, c2, m2) in &balls[i + 1..] {
                if lo2 > hi {
                    break;
                }
                if (c[0] - c2[0]).hypot(c[1] - c2[1]) <= r + r2 {
                    let (a, b) = if m < m2 { (m, m2) } else { (m2, m) };
                    return Err(Error::Overlap {
                        first: a[..self.dim].to_vec(),
                        second: b[..self.dim].to_vec(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Indices whose bump may be nonzero at `xi`.
    fn nearby(&self, xi: [f64; 2]) -> Vec<Index> {
        let a = self.params.a();
        let mut out = Vec::new();
        if self.dim == 1 {
            let t = invert_center_radius(a, xi[0].abs());
            let m0 = (xi[0].signum() * t).floor() as i64;
            for m in m0 - 1..=m0 + 2 {
                if m.abs() <= self.m_max {
                    out.push([m, 0]);
                }
            }
        } else {
            let r = xi[0].hypot(xi[1]);
            let scale = if r == 0.0 { 0.0 } else { invert_center_radius(a, r) / r };
            let a0 = (xi[0] * scale).round() as i64;
            let a1 = (xi[1] * scale).round() as i64;
            for m0 in a0 - 2..=a0 + 2 {
                for m1 in a1 - 2..=a1 + 2 {
                    if m0.abs() <= self.m_max && m1.abs() <= self.m_max {
                        out.push([m0, m1]);
                    }
                }
            }
        }
        out
    }

    fn psi(&self, u: f64) -> f64 {
        self.profile.radial(2.0 * u / self.params.c)
    }

    /// `psi~(u) = phi_0(|u| / c)`.
    pub fn psi_tilde(&self, u: &[f64]) -> f64 {
        self.profile.radial(crate::profile::norm(u) / self.params.c)
    }

    /// The test family `f_l^(xi) = psi~((xi - <l>^A l) / <l>^A)`.
    pub fn family(&self) -> PlateauFamily {
        PlateauFamily {
            alpha: self.params.alpha,
            width: self.params.c,
            dim: self.dim,
            profile: self.profile,
        }
    }
}

impl Symbol for Counterexample {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, _x: [f64; 2], xi: [f64; 2]) -> Complex64 {
        let mut acc = 0.0;
        for m in self.nearby(xi) {
            let c = self.center(m);
            let u = (xi[0] - c[0]).hypot(xi[1] - c[1]) / self.narrow(m);
            if u < self.params.c {
                acc += self.psi(u);
            }
        }
        Complex64::new(acc, 0.0)
    }

    fn derivative(&self, beta: [usize; 2], gamma: [usize; 2], x: [f64; 2], xi: [f64; 2]) -> Option<Complex64> {
        if beta != [0, 0] {
            return Some(Complex64::new(0.0, 0.0));
        }
        if order_of(beta, gamma) == 0 {
            return Some(self.eval(x, xi));
        }
        if self.dim != 1 || gamma[0] > ORDER {
            return None;
        }
        let mut acc = 0.0;
        for m in self.nearby(xi) {
            let c = self.center(m)[0];
            let w = self.narrow(m) * self.params.c / 2.0;
            let jet = self.profile.eval_jet_1d(Jet::affine((xi[0] - c) / w, 1.0 / w));
            acc += jet.derivative(gamma[0]);
        }
        Some(Complex64::new(acc, 0.0))
    }

    fn derivative_order(&self) -> usize {
        if self.dim == 1 {
            ORDER
        } else {
            0
        }
    }

    /// Nominal class `S^0_{alpha - eps, alpha - eps}`; being x-independent,
    /// it lies in `S^0_{alpha - eps, delta}` for every `delta`.
    fn class(&self) -> SymbolClass {
        let r = self.params.alpha - self.params.eps;
        SymbolClass::new(0.0, r, r)
    }

    fn is_x_independent(&self) -> bool {
        true
    }

    fn xi_hints(&self, window: f64) -> Vec<[f64; 2]> {
        let c = self.params.c;
        let offsets = [0.0, 0.5, 0.55, 0.6, 0.7, 0.8, 0.9, 0.95];
        let mut out = Vec::new();
        for m in self.lattice() {
            let center = self.center(m);
            if center[0].hypot(center[1]) > window + 1.0 {
                continue;
            }
            let w = self.narrow(m);
            for o in offsets {
                for sign in [1.0, -1.0] {
                    let p = [center[0] + sign * o * c * w, center[1]];
                    if p[0].hypot(p[1]) <= window {
                        out.push(p);
                    }
                }
            }
        }
        out
    }

    fn name(&self) -> String {
        format!(
            "counterexample(alpha={}, eps={}, c={})",
            self.params.alpha, self.params.eps, self.params.c
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn default_constant_fits() {
        let p = CounterexampleParams::with_default_c(0.5, 0.25).unwrap();
        assert_eq!(p.k_const(), 6.0);
        assert_eq!(p.a(), 1.0);
        assert!((p.a_eps() - 0.5).abs() < 1e-15);
        assert!(CounterexampleParams::new(0.5, 0.25, 1.0 / 12.0).is_err());
    }

    #[test]
    fn overlapping_balls_are_named() {
        let p = CounterexampleParams { alpha: 0.5, eps: 0.25, c: 0.5 };
        let s = Counterexample {
            params: p,
            dim: 1,
            m_max: 4,
            profile: BumpProfile::default(),
        };
        match s.verify_disjoint() {
            Err(Error::Overlap { first, second }) => assert_eq!(second[0] - first[0], 1),
            other => panic!("expected an overlap, got {other:?}"),
        }
    }

    #[test]
    fn product_with_family_keeps_one_band() {
        let p = CounterexampleParams::with_default_c(0.5, 0.25).unwrap();
        let s = Counterexample::new(p, 1, 200).unwrap();
        let grid = Grid::new(1, 4096, 2.0 * std::f64::consts::PI * 16.0).unwrap();
        let ell = 9;
        let f = s.family().spectrum(&grid, &[ell]).unwrap();
        let c = 10.0 * 9.0;
        let w = 10f64.powf(0.5);
        for (j, v) in f.coeffs().iter().enumerate() {
            let xi = grid.xi(j);
            let prod = s.eval([0.0; 2], [xi, 0.0]).re * v.re;
            let expect = s.psi((xi - c).abs() / w);
            assert!((prod - expect).abs() < 1e-15, "xi {xi}: {prod} vs {expect}");
        }
    }
}
