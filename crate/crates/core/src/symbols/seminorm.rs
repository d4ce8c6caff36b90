//! Sampled Hörmander seminorms
//!
//! ```text
//! ||sigma; S^b_{rho,delta}||_N = max_{|beta|+|gamma| <= N} sup <xi>^{-(b + delta|beta| - rho|gamma|)} |d_x^beta d_xi^gamma sigma|
//! ```
//!
//! The sup is taken over a deterministic sample set. Frequencies follow the
//! nested sequence `t_{j+1} = t_j + step <t_j>^rho`, so the resolution tracks
//! the class and a larger window always contains the samples of a smaller
//! one. Each cell also gets one jittered probe drawn from a generator seeded
//! by `(seed, cell)`, which keeps the nesting intact.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Symbol, SymbolClass};
use crate::cover::{bracket_vec, stencil};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::jet::ORDER;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeminormDomain {
    /// Samples `x` in `[-x_half_width, x_half_width]^n`.
    pub x_half_width: f64,
    pub x_step: f64,
    /// Samples `xi` with `|xi| <= xi_window`.
    pub xi_window: f64,
    /// Base step of the nested frequency sequence.
    pub xi_step: f64,
    pub seed: u64,
    /// Finite-difference step in `x`.
    pub h_x: f64,
    /// Use finite differences where no analytic derivative exists.
    pub allow_fd: bool,
}

impl SeminormDomain {
    pub fn new(x_half_width: f64, xi_window: f64) -> Self {
        Self {
            x_half_width,
            x_step: x_half_width / 8.0,
            xi_window,
            xi_step: 0.05,
            seed: 0x5eed,
            h_x: x_half_width / 512.0,
            allow_fd: true,
        }
    }

    /// Whole grid in `x` with `h_x = 4 L / N`, frequencies up to `xi_window`.
    pub fn for_grid(grid: &Grid, xi_window: f64) -> Self {
        let mut d = Self::new(grid.length() / 2.0, xi_window);
        d.h_x = 4.0 * grid.dx();
        if grid.dim() == 2 {
            d.xi_step = 0.25;
        }
        d
    }

    pub fn with_window(mut self, xi_window: f64) -> Self {
        self.xi_window = xi_window;
        self
    }

    pub fn with_xi_step(mut self, step: f64) -> Self {
        self.xi_step = step;
        self
    }

    pub fn with_x_step(mut self, step: f64) -> Self {
        self.x_step = step;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("x_half_width", self.x_half_width),
            ("x_step", self.x_step),
            ("xi_window", self.xi_window),
            ("xi_step", self.xi_step),
            ("h_x", self.h_x),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("{v} is not positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormTerm {
    pub beta: Vec<usize>,
    pub gamma: Vec<usize>,
    pub sup: f64,
    pub at_x: Vec<f64>,
    pub at_xi: Vec<f64>,
    pub finite_difference: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormReport {
    pub symbol: String,
    pub class: SymbolClass,
    pub order: usize,
    pub value: f64,
    pub terms: Vec<SeminormTerm>,
    pub x_samples: usize,
    pub xi_samples: usize,
    pub domain: SeminormDomain,
}

fn cell_rng(seed: u64, axis: u64, j: u64) -> ChaCha8Rng {
    let mix = seed ^ axis.wrapping_mul(0xD1B5_4A32_D192_ED03) ^ j.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    ChaCha8Rng::seed_from_u64(mix)
}

/// Nested symmetric samples of `[-window, window]` with local step
/// `step <t>^rho`, plus one jittered probe per cell.
fn axis_samples(window: f64, step: f64, rho: f64, seed: u64, axis: u64) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut t = 0.0f64;
    let mut j = 0u64;
    loop {
        let next = t + step * (1.0 + t).powf(rho);
        if next > window {
            break;
        }
        let u: f64 = cell_rng(seed, axis, j).gen();
        let v: f64 = cell_rng(seed, axis + 1000, j).gen();
        let probe_pos = t + u * (next - t);
        let probe_neg = t + v * (next - t);
        out.extend([next, -next, probe_pos, -probe_neg]);
        t = next;
        j += 1;
    }
    out
}

fn multi_indices(dim: usize, order: usize) -> Vec<([usize; 2], [usize; 2])> {
    let mut out = Vec::new();
    let r = |active: bool| if active { 0..=order } else { 0..=0 };
    for b0 in 0..=order {
        for b1 in r(dim == 2) {
            for g0 in 0..=order {
                for g1 in r(dim == 2) {
                    if b0 + b1 + g0 + g1 <= order {
                        out.push(([b0, b1], [g0, g1]));
                    }
                }
            }
        }
    }
    out
}

/// Central-difference derivative; variables are `(x0, x1, xi0, xi1)`.
fn finite_difference(
    sigma: &dyn Symbol,
    beta: [usize; 2],
    gamma: [usize; 2],
    x: [f64; 2],
    xi: [f64; 2],
    h_x: f64,
    h_xi: f64,
) -> Complex64 {
    if sigma.is_x_independent() && beta != [0, 0] {
        return Complex64::new(0.0, 0.0);
    }
    let orders = [beta[0], beta[1], gamma[0], gamma[1]];
    let steps = [h_x, h_x, h_xi, h_xi];
    let active: Vec<usize> = (0..4).filter(|&v| orders[v] > 0).collect();
    let weights: Vec<[f64; 5]> = active.iter().map(|&v| stencil(orders[v])).collect();
    let total = 5usize.pow(active.len() as u32);
    let mut acc = Complex64::new(0.0, 0.0);
    for code in 0..total {
        let mut c = code;
        let mut w = 1.0;
        let mut p = [x[0], x[1], xi[0], xi[1]];
        for (a, &v) in active.iter().enumerate() {
            let o = c % 5;
            c /= 5;
            w *= weights[a][o];
            p[v] += (o as f64 - 2.0) * steps[v];
        }
        if w != 0.0 {
            acc += sigma.eval([p[0], p[1]], [p[2], p[3]]) * w;
        }
    }
    let mut scale = 1.0;
    for &v in &active {
        scale *= steps[v].powi(orders[v] as i32);
    }
    acc / scale
}

fn derivative_at(
    sigma: &dyn Symbol,
    beta: [usize; 2],
    gamma: [usize; 2],
    x: [f64; 2],
    xi: [f64; 2],
    domain: &SeminormDomain,
    rho: f64,
) -> (Complex64, bool) {
    if let Some(v) = sigma.derivative(beta, gamma, x, xi) {
        return (v, false);
    }
    let h_xi = bracket_vec(&xi[..sigma.dim()]).powf(rho) * 1e-3;
    (finite_difference(sigma, beta, gamma, x, xi, domain.h_x, h_xi), true)
}

struct Samples {
    xs: Vec<[f64; 2]>,
    xis: Vec<[f64; 2]>,
}

fn samples(sigma: &dyn Symbol, class: &SymbolClass, domain: &SeminormDomain) -> Samples {
    let dim = sigma.dim();
    let xs = if sigma.is_x_independent() {
        vec![[0.0, 0.0]]
    } else {
        let axis = axis_samples(domain.x_half_width, domain.x_step, 0.0, domain.seed, 10);
        if dim == 1 {
            axis.iter().map(|&x| [x, 0.0]).collect()
        } else {
            let axis1 = axis_samples(domain.x_half_width, domain.x_step, 0.0, domain.seed, 12);
            axis.iter().flat_map(|&a| axis1.iter().map(move |&b| [a, b])).collect()
        }
    };
    let rho = class.rho.clamp(0.0, 1.0);
    let axis = axis_samples(domain.xi_window, domain.xi_step, rho, domain.seed, 0);
    let mut xis: Vec<[f64; 2]> = if dim == 1 {
        axis.iter().map(|&t| [t, 0.0]).collect()
    } else {
        let axis1 = axis_samples(domain.xi_window, domain.xi_step, rho, domain.seed, 2);
        axis.iter()
            .flat_map(|&a| axis1.iter().map(move |&b| [a, b]))
            .filter(|p| p[0].hypot(p[1]) <= domain.xi_window)
            .collect()
    };
    xis.extend(sigma.xi_hints(domain.xi_window));
    Samples { xs, xis }
}

/// Estimates `||sigma; S^b_{rho,delta}||_order` on the sampled domain.
pub fn seminorm(sigma: &dyn Symbol, order: usize, class: SymbolClass, domain: &SeminormDomain) -> Result<SeminormReport> {
    domain.validate()?;
    let available = sigma.derivative_order();
    if order > available && !domain.allow_fd {
        return Err(Error::DerivativeOrder { requested: order, available });
    }
    if order > available && order > ORDER {
        return Err(Error::DerivativeOrder {
            requested: order,
            available: available.max(ORDER),
        });
    }
    let dim = sigma.dim();
    let s = samples(sigma, &class, domain);
    let mut terms = Vec::new();
    for (beta, gamma) in multi_indices(dim, order) {
        let nb = beta[0] + beta[1];
        let ng = gamma[0] + gamma[1];
        if nb > 0 && sigma.is_x_independent() {
            terms.push(SeminormTerm {
                beta: beta[..dim].to_vec(),
                gamma: gamma[..dim].to_vec(),
                sup: 0.0,
                at_x: vec![0.0; dim],
                at_xi: vec![0.0; dim],
                finite_difference: false,
            });
            continue;
        }
        let exponent = class.order(nb, ng);
        // (sup, sample index, used fd); ties resolve to the smaller index
        let best = s
            .xis
            .par_iter()
            .enumerate()
            .map(|(i, &xi)| {
                let w = bracket_vec(&xi[..dim]).powf(-exponent);
                let mut local = (0.0f64, usize::MAX, false);
                for (ix, &x) in s.xs.iter().enumerate() {
                    let (d, fd) = derivative_at(sigma, beta, gamma, x, xi, domain, class.rho);
                    let v = w * d.norm();
                    if v > local.0 || local.1 == usize::MAX {
                        local = (v, i * s.xs.len() + ix, fd);
                    }
                }
                local
            })
            .reduce(
                || (0.0, usize::MAX, false),
                |a, b| {
                    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                        b
                    } else {
                        a
                    }
                },
            );
        if !best.0.is_finite() {
            return Err(Error::param("symbol", format!("non-finite derivative {beta:?}/{gamma:?}")));
        }
        let (ix, ixi) = if best.1 == usize::MAX { (0, 0) } else { (best.1 % s.xs.len(), best.1 / s.xs.len()) };
        terms.push(SeminormTerm {
            beta: beta[..dim].to_vec(),
            gamma: gamma[..dim].to_vec(),
            sup: best.0,
            at_x: s.xs[ix][..dim].to_vec(),
            at_xi: s.xis.get(ixi).map(|p| p[..dim].to_vec()).unwrap_or_else(|| vec![0.0; dim]),
            finite_difference: best.2,
        });
    }
    let value = terms.iter().map(|t| t.sup).fold(0.0, f64::max);
    Ok(SeminormReport {
        symbol: sigma.name(),
        class,
        order,
        value,
        terms,
        x_samples: s.xs.len(),
        xi_samples: s.xis.len(),
        domain: *domain,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCheck {
    /// Worst `max |analytic - fd| / max |analytic|` over the tested orders;
    /// the denominator is floored at `1e-6 max |sigma|`.
    pub max_relative_error: f64,
    pub probes: usize,
    pub checked_terms: usize,
}

/// Compares analytic derivative oracles against central differences at
/// `probes` seeded random points of the domain. Steps are multiples of
/// `h_x` and `1e-3 <xi>^rho`.
pub fn check_derivative_oracles(
    sigma: &dyn Symbol,
    order: usize,
    domain: &SeminormDomain,
    probes: usize,
) -> Result<DerivativeCheck> {
    domain.validate()?;
    let dim = sigma.dim();
    let rho = sigma.class().rho;
    let mut rng = ChaCha8Rng::seed_from_u64(domain.seed);
    let points: Vec<([f64; 2], [f64; 2])> = (0..probes)
        .map(|_| {
            let mut x = [0.0; 2];
            let mut xi = [0.0; 2];
            for d in 0..dim {
                x[d] = rng.gen_range(-domain.x_half_width..=domain.x_half_width);
                xi[d] = rng.gen_range(-domain.xi_window..=domain.xi_window);
            }
            (x, xi)
        })
        .collect();
    let value_scale = points
        .iter()
        .map(|&(x, xi)| sigma.eval(x, xi).norm())
        .fold(0.0, f64::max);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (beta, gamma) in multi_indices(dim, order.min(ORDER)) {
        if beta[0] + beta[1] + gamma[0] + gamma[1] == 0 {
            continue;
        }
        // Richardson-extrapolated differences over a ladder of step sizes;
        // a term passes on the best rung, so neither truncation nor rounding
        // of one fixed step decides the comparison
        const LADDER: [f64; 6] = [16.0, 4.0, 1.0, 0.25, 1.0 / 16.0, 1.0 / 64.0];
        let rows: Vec<Option<(Complex64, [Complex64; 6])>> = points
            .par_iter()
            .map(|&(x, xi)| {
                let a = sigma.derivative(beta, gamma, x, xi)?;
                let base_xi = bracket_vec(&xi[..dim]).powf(rho) * 1e-3;
                let mut fds = [Complex64::new(0.0, 0.0); 6];
                for (slot, f) in fds.iter_mut().zip(LADDER) {
                    let (hx, hxi) = (domain.h_x * f, base_xi * f);
                    let coarse = finite_difference(sigma, beta, gamma, x, xi, hx, hxi);
                    let fine = finite_difference(sigma, beta, gamma, x, xi, hx / 2.0, hxi / 2.0);
                    *slot = (fine * 4.0 - coarse) / 3.0;
                }
                Some((a, fds))
            })
            .collect();
        if rows.iter().any(Option::is_none) {
            continue;
        }
        // derivatives that vanish identically are compared against a small
        // fraction of the symbol's own size instead of zero
        let scale = rows
            .iter()
            .flatten()
            .map(|(a, _)| a.norm())
            .fold(1e-6 * value_scale, f64::max);
        if scale == 0.0 {
            continue;
        }
        let err = (0..LADDER.len())
            .map(|r| rows.iter().flatten().map(|(a, f)| (a - f[r]).norm()).fold(0.0, f64::max))
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(err / scale);
        checked += 1;
    }
    Ok(DerivativeCheck {
        max_relative_error: worst,
        probes,
        checked_terms: checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::{Bessel, Constant};

    #[test]
    fn axis_samples_are_nested() {
        let small = axis_samples(10.0, 0.1, 0.5, 3, 0);
        let large = axis_samples(20.0, 0.1, 0.5, 3, 0);
        for v in &small {
            assert!(large.contains(v));
        }
    }

    #[test]
    fn constant_one_has_unit_seminorm() {
        let s = Constant::one(1).unwrap();
        let r = seminorm(&s, 3, SymbolClass::new(0.0, 0.5, 0.5), &SeminormDomain::new(4.0, 50.0)).unwrap();
        assert_eq!(r.value, 1.0);
    }

    #[test]
    fn bessel_fd_agrees_with_jets() {
        let s = Bessel::new(1, 2.0).unwrap();
        let c = check_derivative_oracles(&s, 4, &SeminormDomain::new(1.0, 30.0), 64).unwrap();
        assert!(c.max_relative_error < 1e-4, "{c:?}");
        assert!(c.checked_terms >= 4);
    }
}
