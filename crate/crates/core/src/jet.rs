//! Truncated Taylor arithmetic in one variable.
//!
//! A [`Jet`] stores the normalized Taylor coefficients `f^(i)(t0) / i!` for
//! `i = 0..=ORDER`. Arithmetic on jets propagates derivatives exactly (up to
//! rounding), which is how the bump profiles and the cover expose analytic
//! derivatives without finite differences.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Highest derivative order carried by a [`Jet`].
pub const ORDER: usize = 4;

const FACTORIAL: [f64; ORDER + 1] = [1.0, 1.0, 2.0, 6.0, 24.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    coeffs: [f64; ORDER + 1],
}

impl Jet {
    pub const fn constant(value: f64) -> Self {
        let mut coeffs = [0.0; ORDER + 1];
        coeffs[0] = value;
        Self { coeffs }
    }

    /// The independent variable evaluated at `t0`.
    pub const fn variable(t0: f64) -> Self {
        let mut coeffs = [0.0; ORDER + 1];
        coeffs[0] = t0;
        coeffs[1] = 1.0;
        Self { coeffs }
    }

    /// Affine map `a + b t` of the independent variable.
    pub fn affine(value: f64, slope: f64) -> Self {
        let mut coeffs = [0.0; ORDER + 1];
        coeffs[0] = value;
        coeffs[1] = slope;
        Self { coeffs }
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// The `order`-th derivative at the expansion point.
    pub fn derivative(&self, order: usize) -> f64 {
        assert!(order <= ORDER, "jet carries derivatives up to order {ORDER}");
        self.coeffs[order] * FACTORIAL[order]
    }

    pub fn coeffs(&self) -> &[f64; ORDER + 1] {
        &self.coeffs
    }

    pub fn scale(mut self, factor: f64) -> Self {
        for c in &mut self.coeffs {
            *c *= factor;
        }
        self
    }

    pub fn exp(self) -> Self {
        let mut out = [0.0; ORDER + 1];
        out[0] = self.coeffs[0].exp();
        for k in 1..=ORDER {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += j as f64 * self.coeffs[j] * out[k - j];
            }
            out[k] = acc / k as f64;
        }
        Self { coeffs: out }
    }

    /// Natural logarithm; the value must be positive.
    pub fn ln(self) -> Self {
        let a0 = self.coeffs[0];
        let mut out = [0.0; ORDER + 1];
        out[0] = a0.ln();
        for k in 1..=ORDER {
            let mut acc = self.coeffs[k];
            for j in 1..k {
                acc -= j as f64 * out[j] * self.coeffs[k - j] / k as f64;
            }
            out[k] = acc / a0;
        }
        Self { coeffs: out }
    }

    /// Real power of a jet with positive value.
    pub fn powf(self, exponent: f64) -> Self {
        (self.ln() * exponent).exp()
    }

    pub fn recip(self) -> Self {
        Jet::constant(1.0) / self
    }

    /// Composition `g(self)` given the derivatives `g^(i)` at `self.value()`.
    pub fn compose(self, outer: &[f64; ORDER + 1]) -> Self {
        // Horner evaluation of sum_i outer[i]/i! * (self - self.value())^i.
        let mut shifted = self;
        shifted.coeffs[0] = 0.0;
        let mut acc = Jet::constant(outer[ORDER] / FACTORIAL[ORDER]);
        for i in (0..ORDER).rev() {
            acc = acc * shifted + Jet::constant(outer[i] / FACTORIAL[i]);
        }
        acc
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Jet) -> Jet {
        for (a, b) in self.coeffs.iter_mut().zip(rhs.coeffs) {
            *a += b;
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: Jet) -> Jet {
        for (a, b) in self.coeffs.iter_mut().zip(rhs.coeffs) {
            *a -= b;
        }
        self
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let mut out = [0.0; ORDER + 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate().take(ORDER + 1 - i) {
                out[i + j] += a * b;
            }
        }
        Jet { coeffs: out }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        let b0 = rhs.coeffs[0];
        let mut out = [0.0; ORDER + 1];
        for k in 0..=ORDER {
            let mut acc = self.coeffs[k];
            for j in 1..=k {
                acc -= rhs.coeffs[j] * out[k - j];
            }
            out[k] = acc / b0;
        }
        Jet { coeffs: out }
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.coeffs[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.coeffs[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}
