//! Smooth radial bump profiles `phi_0` with `phi_0 = 1` on `|u| <= 1` and
//! `phi_0 = 0` on `|u| >= 2`.

use serde::{Deserialize, Serialize};

use crate::jet::Jet;

/// Below this argument `exp(-1/t)` underflows, so the flat factor is zero.
const FLAT_CUTOFF: f64 = 1.0 / 700.0;

/// Flat-at-zero factor used to glue the plateau to the tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Transition {
    /// `h(t) = exp(-1/t)`
    #[default]
    Exp,
    /// `h(t) = exp(-1/t^2)`, a steeper variant used to compare covers.
    ExpSquared,
}

impl Transition {
    fn h(self, t: f64) -> f64 {
        if t <= FLAT_CUTOFF {
            return 0.0;
        }
        match self {
            Transition::Exp => (-1.0 / t).exp(),
            Transition::ExpSquared => (-1.0 / (t * t)).exp(),
        }
    }

    fn h_jet(self, t: Jet) -> Jet {
        if t.value() <= FLAT_CUTOFF {
            return Jet::constant(0.0);
        }
        match self {
            Transition::Exp => (-t.recip()).exp(),
            Transition::ExpSquared => (-(t * t).recip()).exp(),
        }
    }
}

/// Radial bump `phi_0(u) = step(|u|)` where `step` falls from 1 at radius 1
/// to 0 at radius 2 through `h(2 - r) / (h(r - 1) + h(2 - r))`.
///
/// The quotient form keeps every derivative continuous at both radii, so the
/// profile is genuinely `C^infinity`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub struct BumpProfile {
    pub transition: Transition,
}

impl BumpProfile {
    pub const fn new(transition: Transition) -> Self {
        Self { transition }
    }

    /// Highest derivative order with an analytic oracle.
    pub const fn max_order(&self) -> usize {
        crate::jet::ORDER
    }

    /// Profile value at radius `r >= 0`.
    pub fn radial(&self, r: f64) -> f64 {
        if r <= 1.0 {
            1.0
        } else if r >= 2.0 {
            0.0
        } else {
            let a = self.transition.h(2.0 - r);
            let b = self.transition.h(r - 1.0);
            a / (a + b)
        }
    }

    /// Profile composed with a scalar jet whose value is a radius `r >= 0`.
    pub fn radial_jet(&self, r: Jet) -> Jet {
        let v = r.value();
        if v <= 1.0 {
            Jet::constant(1.0)
        } else if v >= 2.0 {
            Jet::constant(0.0)
        } else {
            let a = self.transition.h_jet(-r + 2.0);
            let b = self.transition.h_jet(r - 1.0);
            a / (a + b)
        }
    }

    /// Value at a point of `R^n`.
    pub fn eval(&self, u: &[f64]) -> f64 {
        self.radial(norm(u))
    }

    /// Value and derivatives of `t -> phi_0(t)` in one dimension, where the
    /// jet carries `u(t)`. Handles the sign of `u` so that `|u|` stays smooth.
    pub fn eval_jet_1d(&self, u: Jet) -> Jet {
        if u.value() < 0.0 {
            self.radial_jet(-u)
        } else {
            self.radial_jet(u)
        }
    }
}

pub(crate) fn norm(u: &[f64]) -> f64 {
    match u {
        [x] => x.abs(),
        [x, y] => x.hypot(*y),
        _ => u.iter().map(|v| v * v).sum::<f64>().sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_and_tail() {
        for p in [BumpProfile::new(Transition::Exp), BumpProfile::new(Transition::ExpSquared)] {
            assert_eq!(p.radial(0.0), 1.0);
            assert_eq!(p.radial(1.0), 1.0);
            assert_eq!(p.radial(2.0), 0.0);
            assert_eq!(p.radial(7.0), 0.0);
            assert!((p.radial(1.5) - 0.5).abs() < 1e-15);
            let mut prev = 1.0;
            for i in 0..=1000 {
                let v = p.radial(1.0 + i as f64 / 1000.0);
                assert!((0.0..=1.0).contains(&v));
                assert!(v <= prev);
                prev = v;
            }
        }
    }

    #[test]
    fn symmetric_about_midpoint() {
        let p = BumpProfile::default();
        for i in 1..50 {
            let d = i as f64 / 100.0;
            let s = p.radial(1.5 - d) + p.radial(1.5 + d);
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn jet_matches_finite_differences() {
        let p = BumpProfile::default();
        let h = 1e-4;
        for &r in &[1.1, 1.3, 1.5, 1.77, 1.95] {
            let j = p.radial_jet(Jet::variable(r));
            let fd1 = (p.radial(r + h) - p.radial(r - h)) / (2.0 * h);
            let fd2 = (p.radial(r + h) - 2.0 * p.radial(r) + p.radial(r - h)) / (h * h);
            assert!((j.value() - p.radial(r)).abs() < 1e-15);
            assert!((j.derivative(1) - fd1).abs() < 1e-6 * (1.0 + fd1.abs()));
            assert!((j.derivative(2) - fd2).abs() < 1e-4 * (1.0 + fd2.abs()));
        }
    }

    #[test]
    fn derivatives_vanish_at_the_seams() {
        let p = BumpProfile::default();
        for r in [1.0 + 1e-3, 2.0 - 1e-3] {
            let j = p.radial_jet(Jet::variable(r));
            for k in 1..=4 {
                assert!(j.derivative(k).abs() < 1e-200);
            }
        }
    }

    #[test]
    fn one_dimensional_jet_is_even() {
        let p = BumpProfile::default();
        let a = p.eval_jet_1d(Jet::variable(1.4));
        let b = p.eval_jet_1d(Jet::variable(-1.4));
        for k in 0..=4 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!((a.derivative(k) - sign * b.derivative(k)).abs() < 1e-12);
        }
    }
}
