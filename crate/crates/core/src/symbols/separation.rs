//! Brute-force check of the lattice inequality
//! `(<k>^A + <m>^A) |k - m| <= K |<k>^A k - <m>^A m|`, `K = max(6, 1 + 2^A)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cover::{exponent, Index};
use crate::error::{Error, Result};

/// `K = max(6, 1 + 2^A)`.
pub fn separation_constant(alpha: f64) -> f64 {
    6f64.max(1.0 + 2f64.powf(exponent(alpha)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationViolation {
    pub k: Index,
    pub m: Index,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub alpha: f64,
    pub dim: usize,
    /// Indices satisfy `|k|_inf <= range`.
    pub range: i64,
    pub constant: f64,
    pub pairs: u64,
    pub violations: Vec<SeparationViolation>,
    /// Largest `lhs / rhs` over distinct pairs; at most one when the
    /// inequality holds.
    pub max_ratio: f64,
    pub argmax: (Index, Index),
}

impl SeparationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every ordered pair of distinct indices with `|k|_inf, |m|_inf <= range`.
pub fn lattice_separation(alpha: f64, dim: usize, range: i64) -> Result<SeparationReport> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::param("alpha", format!("{alpha} is outside [0, 1)")));
    }
    if dim != 1 && dim != 2 {
        return Err(Error::UnsupportedDimension(dim));
    }
    if range < 0 {
        return Err(Error::param("range", "must be non-negative"));
    }
    let a = exponent(alpha);
    let big_k = separation_constant(alpha);
    let mut points: Vec<(Index, f64, [f64; 2])> = Vec::new();
    let second = if dim == 2 { range } else { 0 };
    for k0 in -range..=range {
        for k1 in -second..=second {
            let norm = (k0 as f64).hypot(k1 as f64);
            let s = (1.0 + norm).powf(a);
            points.push(([k0, k1], s, [s * k0 as f64, s * k1 as f64]));
        }
    }
    let per_k: Vec<(u64, Vec<SeparationViolation>, f64, (Index, Index))> = points
        .par_iter()
        .map(|&(k, sk, ck)| {
            let mut count = 0u64;
            let mut bad = Vec::new();
            let mut best = (0.0f64, (k, k));
            for &(m, sm, cm) in &points {
                if m == k {
                    continue;
                }
                count += 1;
                let dk = ((k[0] - m[0]) as f64).hypot((k[1] - m[1]) as f64);
                let lhs = (sk + sm) * dk;
                let rhs = big_k * (ck[0] - cm[0]).hypot(ck[1] - cm[1]);
                if lhs > rhs {
                    bad.push(SeparationViolation { k, m, lhs, rhs });
                }
                let ratio = lhs / rhs;
                if ratio > best.0 {
                    best = (ratio, (k, m));
                }
            }
            (count, bad, best.0, best.1)
        })
        .collect();
    let mut pairs = 0;
    let mut violations = Vec::new();
    let mut max_ratio = 0.0;
    let mut argmax = ([0, 0], [0, 0]);
    for (count, bad, ratio, arg) in per_k {
        pairs += count;
        violations.extend(bad);
        if ratio > max_ratio {
            max_ratio = ratio;
            argmax = arg;
        }
    }
    Ok(SeparationReport {
        alpha,
        dim,
        range,
        constant: big_k,
        pairs,
        violations,
        max_ratio,
        argmax,
    })
}
