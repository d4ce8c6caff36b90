//! Symbols `sigma(x, xi)`, Hörmander seminorm estimates and the test-symbol
//! library.
//!
//! Points are passed as `[f64; 2]`; in one dimension the second coordinate is
//! ignored (and should be zero).

mod counterexample;
mod library;
mod modulated;
mod seminorm;
mod separation;

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::grid::Spectrum;

pub use counterexample::{Counterexample, CounterexampleParams, DEFAULT_C};
pub use library::{Bessel, Constant, FnSymbol, Modulation, Product, RandomTrig, Scaled, TrigTerm};
pub use modulated::{ModulatedFamily, XProfile};
pub use seminorm::{
    check_derivative_oracles, seminorm, DerivativeCheck, SeminormDomain, SeminormReport, SeminormTerm,
};
pub use separation::{lattice_separation, separation_constant, SeparationReport, SeparationViolation};

/// Claimed Hörmander class `S^b_{rho,delta}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolClass {
    pub b: f64,
    pub rho: f64,
    pub delta: f64,
}

impl SymbolClass {
    pub const fn new(b: f64, rho: f64, delta: f64) -> Self {
        Self { b, rho, delta }
    }

    /// `S^0_{alpha,alpha}`.
    pub const fn exotic(alpha: f64) -> Self {
        Self::new(0.0, alpha, alpha)
    }

    /// Exponent of `<xi>` bounding `d_x^beta d_xi^gamma sigma`.
    pub fn order(&self, beta: usize, gamma: usize) -> f64 {
        self.b + self.delta * beta as f64 - self.rho * gamma as f64
    }
}

impl fmt::Display for SymbolClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S^{}_{{{},{}}}", self.b, self.rho, self.delta)
    }
}

/// An evaluation oracle for `sigma(x, xi)`.
pub trait Symbol: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: [f64; 2], xi: [f64; 2]) -> Complex64;

    /// `d_x^beta d_xi^gamma sigma(x, xi)` when an analytic oracle exists.
    fn derivative(&self, _beta: [usize; 2], _gamma: [usize; 2], _x: [f64; 2], _xi: [f64; 2]) -> Option<Complex64> {
        None
    }

    /// Total order up to which [`Symbol::derivative`] answers.
    fn derivative_order(&self) -> usize {
        0
    }

    fn class(&self) -> SymbolClass;

    fn is_x_independent(&self) -> bool {
        false
    }

    /// The value if the symbol is constant.
    fn constant_value(&self) -> Option<Complex64> {
        None
    }

    /// Spectrum of `sigma(X, D) f` computed without the quadratic sum, when
    /// the symbol's structure allows it. Must agree with direct quantization.
    fn apply_spectrum(&self, _f: &Spectrum) -> Option<Spectrum> {
        None
    }

    /// Frequencies where weighted derivatives are likely to peak, within
    /// `|xi| <= window`. Added to the seminorm sampling.
    fn xi_hints(&self, _window: f64) -> Vec<[f64; 2]> {
        Vec::new()
    }

    fn name(&self) -> String;
}

impl<T: Symbol + ?Sized> Symbol for std::sync::Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: [f64; 2], xi: [f64; 2]) -> Complex64 {
        (**self).eval(x, xi)
    }
    fn derivative(&self, beta: [usize; 2], gamma: [usize; 2], x: [f64; 2], xi: [f64; 2]) -> Option<Complex64> {
        (**self).derivative(beta, gamma, x, xi)
    }
    fn derivative_order(&self) -> usize {
        (**self).derivative_order()
    }
    fn class(&self) -> SymbolClass {
        (**self).class()
    }
    fn is_x_independent(&self) -> bool {
        (**self).is_x_independent()
    }
    fn constant_value(&self) -> Option<Complex64> {
        (**self).constant_value()
    }
    fn apply_spectrum(&self, f: &Spectrum) -> Option<Spectrum> {
        (**self).apply_spectrum(f)
    }
    fn xi_hints(&self, window: f64) -> Vec<[f64; 2]> {
        (**self).xi_hints(window)
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

pub(crate) fn order_of(beta: [usize; 2], gamma: [usize; 2]) -> usize {
    beta[0] + beta[1] + gamma[0] + gamma[1]
}

pub(crate) fn check_dim(dim: usize) -> crate::Result<()> {
    if dim == 1 || dim == 2 {
        Ok(())
    } else {
        Err(crate::Error::UnsupportedDimension(dim))
    }
}
