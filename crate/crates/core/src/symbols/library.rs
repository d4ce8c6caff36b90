//! Elementary symbols.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_dim, order_of, Symbol, SymbolClass};
use crate::error::{Error, Result};
use crate::jet::{Jet, ORDER};

/// `sigma = value` everywhere.
#[derive(Debug, Clone, Copy)]
pub struct Constant {
    dim: usize,
    value: Complex64,
}

impl Constant {
    pub fn new(dim: usize, value: Complex64) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, value })
    }

    pub fn one(dim: usize) -> Result<Self> {
        Self::new(dim, Complex64::new(1.0, 0.0))
    }
}

impl Symbol for Constant {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, _x: [f64; 2], _xi: [f64; 2]) -> Complex64 {
        self.value
    }
    fn derivative(&self, beta: [usize; 2], gamma: [usize; 2], _x: [f64; 2], _xi: [f64; 2]) -> Option<Complex64> {
        Some(if order_of(beta, gamma) == 0 { self.value } else { Complex64::new(0.0, 0.0) })
    }
    fn derivative_order(&self) -> usize {
        usize::MAX
    }
    fn class(&self) -> SymbolClass {
        SymbolClass::new(0.0, 1.0, 0.0)
    }
    fn is_x_independent(&self) -> bool {
        true
    }
    fn constant_value(&self) -> Option<Complex64> {
        Some(self.value)
    }
    fn name(&self) -> String {
        format!("constant({})", self.value)
    }
}

/// Bessel multiplier `(1 + |xi|^2)^{t/2}`, class `S^t_{1,0}`.
#[derive(Debug, Clone, Copy)]
pub struct Bessel {
    dim: usize,
    t: f64,
}

impl Bessel {
    pub fn new(dim: usize, t: f64) -> Result<Self> {
        check_dim(dim)?;
        if !t.is_finite() {
            return Err(Error::param("t", "must be finite"));
        }
        Ok(Self { dim, t })
    }
}

impl Symbol for Bessel {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, _x: [f64; 2], xi: [f64; 2]) -> Complex64 {
        let r2 = if self.dim == 1 { xi[0] * xi[0] } else { xi[0] * xi[0] + xi[1] * xi[1] };
        Complex64::new((1.0 + r2).powf(self.t / 2.0), 0.0)
    }
    fn derivative(&self, beta: [usize; 2], gamma: [usize; 2], x: [f64; 2], xi: [f64; 2]) -> Option<Complex64> {
        if beta != [0, 0] {
            return Some(Complex64::new(0.0, 0.0));
        }
        if gamma == [0, 0] {
            return Some(self.eval(x, xi));
        }
        if self.dim != 1 || gamma[1] != 0 || gamma[0] > ORDER {
            return None;
        }
        let v = Jet::variable(xi[0]);
        let j = (v * v + 1.0).powf(self.t / 2.0);
        Some(Complex64::new(j.derivative(gamma[0]), 0.0))
    }
    fn derivative_order(&self) -> usize {
        if self.dim == 1 {
            ORDER
        } else {
            0
        }
    }
    fn class(&self) -> SymbolClass {
        SymbolClass::new(self.t, 1.0, 0.0)
    }
    fn is_x_independent(&self) -> bool {
        true
    }
    fn name(&self) -> String {
        format!("bessel(t={})", self.t)
    }
}

/// `sigma(x, xi) = e^{i a . x}`; its operator shifts spectra by `a`.
#[derive(Debug, Clone, Copy)]
pub struct Modulation {
    dim: usize,
    a: [f64; 2],
}

impl Modulation {
    pub fn new(a: &[f64]) -> Result<Self> {
        check_dim(a.len())?;
        let mut v = [0.0; 2];
        v[..a.len()].copy_from_slice(a);
        Ok(Self { dim: a.len(), a: v })
    }
}

impl Symbol for Modulation {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: [f64; 2], _xi: [f64; 2]) -> Complex64 {
        Complex64::from_polar(1.0, self.a[0] * x[0] + self.a[1] * x[1])
    }
    fn derivative(&self, beta: [usize; 2], gamma: [usize; 2], x: [f64; 2], xi: [f64; 2]) -> Option<Complex64> {
        if gamma != [0, 0] {
            return Some(Complex64::new(0.0, 0.0));
        }
        let ia0 = Complex64::new(0.0, self.a[0]);
        let ia1 = Complex64::new(0.0, self.a[1]);
        Some(ia0.powu(beta[0] as u32) * ia1.powu(beta[1] as u32) * self.eval(x, xi))
    }
    fn derivative_order(&self) -> usize {
        usize::MAX
    }
    fn class(&self) -> SymbolClass {
        SymbolClass::new(0.0, 1.0, 0.0)
    }
    fn name(&self) -> String {
        format!("modulation(a={:?})", &self.a[..self.dim])
    }
}

type SymbolFn = dyn Fn([f64; 2], [f64; 2]) -> Complex64 + Send + Sync;

/// A symbol given by a closure, with a declared class. Derivatives fall back
/// to finite differences.
pub struct FnSymbol {
    dim: usize,
    class: SymbolClass,
    x_independent: bool,
    name: String,
    f: Box<SymbolFn>,
}

impl FnSymbol {
    pub fn new(
        dim: usize,
        class: SymbolClass,
        name: impl Into<String>,
        f: impl Fn([f64; 2], [f64; 2]) -> Complex64 + Send + Sync + 'static,
    ) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            class,
            x_independent: false,
            name: name.into(),
            f: Box::new(f),
        })
    }

    /// A Fourier multiplier `m(xi)`.
    pub fn multiplier(
        dim: usize,
        class: SymbolClass,
        name: impl Into<String>,
        m: impl Fn([f64; 2]) -> Complex64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let mut s = Self::new(dim, class, name, move |_, xi| m(xi))?;
        s.x_independent = true;
        Ok(s)
    }
}

impl Symbol for FnSymbol {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: [f64; 2], xi: [f64; 2]) -> Complex64 {
        (self.f)(x, xi)
    }
    fn class(&self) -> SymbolClass {
        self.class
    }
    fn is_x_independent(&self) -> bool {
        self.x_independent
    }
    fn name(&self) -> String {
        self.name.clone()
    }
}

/// `factor * sigma`.
#[derive(Clone)]
pub struct Scaled<S> {
    inner: S,
    factor: Complex64,
}

impl<S: Symbol> Scaled<S> {
    pub fn new(inner: S, factor: Complex64) -> Self {
        Self { inner, factor }
    }
}

impl<S: Symbol> Symbol for Scaled<S> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&self, x: [f64; 2], xi: [f64; 2]) -> Complex64 {
        self.factor * self.inner.eval(x, xi)
    }
    fn derivative(&self, beta: [usize; 2], gamma: [usize; 2], x: [f64; 2], xi: [f64; 2]) -> Option<Complex64> {
        self.inner.derivative(beta, gamma, x, xi).map(|d| self.factor * d)
    }
    fn derivative_order(&self) -> usize {
        self.inner.derivative_order()
    }
    fn class(&self) -> SymbolClass {
        self.inner.class()
    }
    fn is_x_independent(&self) -> bool {
        self.inner.is_x_independent()
    }
    fn constant_value(&self) -> Option<Complex64> {
        self.inner.constant_value().map(|v| self.factor * v)
    }
    fn apply_spectrum(&self, f: &crate::grid::Spectrum) -> Option<crate::grid::Spectrum> {
        self.inner.apply_spectrum(f).map(|mut s| {
            for c in s.coeffs_mut() {
                *c *= self.factor;
            }
            s
        })
    }
    fn xi_hints(&self, window: f64) -> Vec<[f64; 2]> {
        self.inner.xi_hints(window)
    }
    fn name(&self) -> String {
        format!("{} * {}", self.factor, self.inner.name())
    }
}

/// Pointwise product `left(x, xi) right(x, xi)`. With an x-independent
/// `right`, its quantization is `left(X, D) right(D)`.
#[derive(Clone)]
pub struct Product {
    left: Arc<dyn Symbol>,
    right: Arc<dyn Symbol>,
}

impl Product {
    pub fn new(left: Arc<dyn Symbol>, right: Arc<dyn Symbol>) -> Result<Self> {
        if left.dim() != right.dim() {
            return Err(Error::param("symbol", "factors have different dimensions"));
        }
        Ok(Self { left, right })
    }
}

impl Symbol for Product {
    fn dim(&self) -> usize {
        self.left.dim()
    }
    fn eval(&self, x: [f64; 2], xi: [f64; 2]) -> Complex64 {
        self.left.eval(x, xi) * self.right.eval(x, xi)
    }
    fn class(&self) -> SymbolClass {
        let (l, r) = (self.left.class(), self.right.class());
        SymbolClass::new(l.b + r.b, l.rho.min(r.rho), l.delta.max(r.delta))
    }
    fn is_x_independent(&self) -> bool {
        self.left.is_x_independent() && self.right.is_x_independent()
    }
    fn name(&self) -> String {
        format!("({}) * ({})", self.left.name(), self.right.name())
    }
}

/// One term `amp e^{i nu . x} cos(omega . xi + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub nu: [f64; 2],
    pub omega: [f64; 2],
    pub phase: f64,
    pub amp: Complex64,
}

/// Finite random trigonometric symbol, smooth in both variables with bounded
/// derivatives (class `S^0_{0,0}`).
#[derive(Debug, Clone)]
pub struct RandomTrig {
    dim: usize,
    terms: Vec<TrigTerm>,
}

impl RandomTrig {
    pub fn new(dim: usize, terms: Vec<TrigTerm>) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, terms })
    }

    /// `count` terms with x-frequencies drawn from `dnu * {-nu_max..=nu_max}`
    /// per axis (lattice frequencies when `dnu = 2 pi / L`), xi-frequencies
    /// in `[-omega_max, omega_max]` and complex amplitudes of modulus at most
    /// `1 / count`.
    pub fn seeded(dim: usize, count: usize, dnu: f64, nu_max: i64, omega_max: f64, seed: u64) -> Result<Self> {
        check_dim(dim)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut terms = Vec::with_capacity(count);
        for _ in 0..count {
            let mut nu = [0.0; 2];
            let mut omega = [0.0; 2];
            for d in 0..dim {
                nu[d] = dnu * rng.gen_range(-nu_max..=nu_max) as f64;
                omega[d] = rng.gen_range(-omega_max..=omega_max);
            }
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            let amp = Complex64::from_polar(rng.gen_range(0.0..1.0) / count as f64, rng.gen_range(0.0..std::f64::consts::TAU));
            terms.push(TrigTerm { nu, omega, phase, amp });
        }
        Self::new(dim, terms)
    }

    pub fn terms(&self) -> &[TrigTerm] {
        &self.terms
    }
}

impl Symbol for RandomTrig {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: [f64; 2], xi: [f64; 2]) -> Complex64 {
        self.derivative([0, 0], [0, 0], x, xi).unwrap()
    }
    fn derivative(&self, beta: [usize; 2], gamma: [usize; 2], x: [f64; 2], xi: [f64; 2]) -> Option<Complex64> {
        let g = (gamma[0] + gamma[1]) as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let xpart = Complex64::new(0.0, t.nu[0]).powu(beta[0] as u32)
                * Complex64::new(0.0, t.nu[1]).powu(beta[1] as u32)
                * Complex64::from_polar(1.0, t.nu[0] * x[0] + t.nu[1] * x[1]);
            let arg = t.omega[0] * xi[0] + t.omega[1] * xi[1] + t.phase + g * FRAC_PI_2;
            let xipart = t.omega[0].powi(gamma[0] as i32) * t.omega[1].powi(gamma[1] as i32) * arg.cos();
            acc += t.amp * xpart * xipart;
        }
        Some(acc)
    }
    fn derivative_order(&self) -> usize {
        usize::MAX
    }
    fn class(&self) -> SymbolClass {
        SymbolClass::new(0.0, 0.0, 0.0)
    }
    fn name(&self) -> String {
        format!("random_trig(terms={})", self.terms.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_jet_matches_closed_form() {
        let b = Bessel::new(1, 1.5).unwrap();
        let xi = 2.3;
        let d1 = b.derivative([0, 0], [1, 0], [0.0; 2], [xi, 0.0]).unwrap().re;
        let exact = 1.5 * xi * (1.0 + xi * xi).powf(0.75 - 1.0);
        assert!((d1 - exact).abs() < 1e-12);
    }

    #[test]
    fn trig_derivative_matches_difference() {
        let s = RandomTrig::seeded(1, 4, 0.5, 3, 2.0, 7).unwrap();
        let (x, xi, h) = (0.3, -1.1, 1e-5);
        let fd = (s.eval([x, 0.0], [xi + h, 0.0]) - s.eval([x, 0.0], [xi - h, 0.0])) / (2.0 * h);
        let d = s.derivative([0, 0], [1, 0], [x, 0.0], [xi, 0.0]).unwrap();
        assert!((fd - d).norm() < 1e-8);
        let fd = (s.eval([x + h, 0.0], [xi, 0.0]) - s.eval([x - h, 0.0], [xi, 0.0])) / (2.0 * h);
        let d = s.derivative([1, 0], [0, 0], [x, 0.0], [xi, 0.0]).unwrap();
        assert!((fd - d).norm() < 1e-8);
    }

    #[test]
    fn modulation_derivatives() {
        let s = Modulation::new(&[2.0]).unwrap();
        let d = s.derivative([2, 0], [0, 0], [0.0; 2], [0.0; 2]).unwrap();
        assert!((d - Complex64::new(-4.0, 0.0)).norm() < 1e-14);
    }
}
