//! alpha-coverings of frequency space.
//!
//! For `A = alpha / (1 - alpha)` and `<k> = 1 + |k|`, index `k` in `Z^n`
//! owns a ball centered at `<k>^A k` whose radius scales like `<k>^A`. The
//! partition `eta_k` is built by sum-normalizing dilated copies of a bump:
//!
//! ```text
//! g_k(xi)   = phi_0((xi - <k>^A k) / (c1 <k>^A)),   c1 = (1 + A) sqrt(n) / 2
//! eta_k(xi) = g_k(xi) / sum_j g_j(xi)
//! ```
//!
//! `c1` is the smallest plateau radius for which neighbouring plateaus touch,
//! so the denominator is at least one everywhere in the covered region and
//! `supp eta_k` has radius `(1 + A) sqrt(n) <k>^A`. The outer constant `C`
//! must be at least that factor; the default `1.25 (1 + A) sqrt(n)` leaves a
//! margin between `supp eta_k` and the ball of radius `C <k>^A`.
//!
//! The bump family `rho_k` (also used as the plateau family `kappa_k`) is
//! `phi_0((xi - <k>^A k) / (C <k>^A))`, which equals one on `supp eta_k`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::jet::Jet;
use crate::profile::BumpProfile;

/// Lattice index; the second coordinate is zero in one dimension.
pub type Index = [i64; 2];

/// Partition-of-unity tolerance used by verification reports.
pub const PARTITION_TOLERANCE: f64 = 1e-10;

/// `<t> = 1 + |t|`.
pub fn bracket(t: f64) -> f64 {
    1.0 + t.abs()
}

/// `<v> = 1 + |v|` for a vector.
pub fn bracket_vec(v: &[f64]) -> f64 {
    1.0 + crate::profile::norm(v)
}

pub(crate) fn to_index(k: &[i64]) -> Index {
    match k {
        [a] => [*a, 0],
        [a, b] => [*a, *b],
        _ => panic!("lattice indices have one or two coordinates"),
    }
}

pub(crate) fn index_norm(k: Index) -> f64 {
    (k[0] as f64).hypot(k[1] as f64)
}

pub(crate) fn index_vec(k: Index, dim: usize) -> Vec<i64> {
    k[..dim].to_vec()
}

/// Solves `t (1 + t)^A = r` for `t >= 0`: the index radius whose center
/// sits at distance `r` from the origin.
pub fn invert_center_radius(a: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    if a == 0.0 {
        return r;
    }
    // Newton from the right of the root; t (1 + t)^A is increasing and convex.
    let mut t = r.powf(1.0 / (1.0 + a));
    for _ in 0..60 {
        let p = (1.0 + t).powf(a);
        let f = t * p - r;
        let df = p + a * t * p / (1.0 + t);
        let next = (t - f / df).max(0.0);
        let done = (next - t).abs() <= 1e-13 * (1.0 + t);
        t = next;
        if done {
            break;
        }
    }
    t
}

/// Exponent `A = alpha / (1 - alpha)`.
pub fn exponent(alpha: f64) -> f64 {
    alpha / (1.0 - alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverParams {
    pub alpha: f64,
    pub dim: usize,
    /// Outer radius constant `C`.
    pub c: f64,
    /// Per-coordinate truncation `|k|_inf <= k_max`.
    pub k_max: i64,
}

impl CoverParams {
    /// Parameters with the default outer constant.
    pub fn new(alpha: f64, dim: usize, k_max: i64) -> Self {
        Self {
            alpha,
            dim,
            c: Self::default_c(alpha, dim),
            k_max,
        }
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    /// `1.25 (1 + A) sqrt(n)`.
    pub fn default_c(alpha: f64, dim: usize) -> f64 {
        1.25 * Self::support_factor(alpha, dim)
    }

    /// Radius factor of `supp eta_k`, `(1 + A) sqrt(n)`.
    pub fn support_factor(alpha: f64, dim: usize) -> f64 {
        (1.0 + exponent(alpha)) * (dim as f64).sqrt()
    }

    pub fn exponent(&self) -> f64 {
        exponent(self.alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha < 1.0) {
            return Err(Error::param("alpha", format!("{} is outside [0, 1)", self.alpha)));
        }
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        let need = Self::support_factor(self.alpha, self.dim);
        if !(self.c > 1.0 && self.c >= need) {
            return Err(Error::param(
                "C",
                format!("{} must exceed 1 and be at least (1 + A) sqrt(n) = {need}", self.c),
            ));
        }
        if self.k_max < 1 {
            return Err(Error::param("k_max", format!("{} is not positive", self.k_max)));
        }
        if (self.k_max + 1) as f64 <= need {
            return Err(Error::param(
                "k_max",
                format!("{} leaves no uncontaminated interior (need > {})", self.k_max, need - 1.0),
            ));
        }
        Ok(())
    }

    /// Radius of the region where the truncated partition agrees with the
    /// infinite one. Zero when `k_max` is too small.
    pub fn interior_radius(&self) -> f64 {
        let a = self.exponent();
        let s = Self::support_factor(self.alpha, self.dim);
        let t = (self.k_max + 1) as f64;
        if t <= s {
            return 0.0;
        }
        let excluded = bracket(t).powf(a) * (t - s);
        let axis = bracket(self.k_max as f64).powf(a) * self.k_max as f64;
        excluded.min(axis)
    }

    /// Smallest `k_max` whose interior radius reaches `window`.
    pub fn k_max_for_window(alpha: f64, dim: usize, window: f64) -> i64 {
        let mut p = Self::new(alpha, dim, 1);
        while p.interior_radius() < window {
            p.k_max += 1;
        }
        p.k_max
    }
}

/// Serializable description from which a cover can be rebuilt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverSpec {
    #[serde(flatten)]
    pub params: CoverParams,
    #[serde(default)]
    pub profile: BumpProfile,
}

#[derive(Debug, Clone)]
pub struct AlphaCover {
    params: CoverParams,
    profile: BumpProfile,
    a: f64,
    plateau: f64,
    lattice: Vec<Index>,
    reach: i64,
    interior: f64,
    overlap: usize,
}

/// Which family a set of grid bands samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandKind {
    /// The partition `eta_k`.
    Eta,
    /// The enlarged bumps `rho_k` (equal to one on `supp eta_k`).
    Rho,
}

/// One band sampled on a grid's frequency lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub k: Index,
    /// `<k>` with the Euclidean norm.
    pub bracket: f64,
    /// Flat FFT-order lattice positions with nonzero weight.
    pub positions: Vec<usize>,
    pub weights: Vec<f64>,
}

/// All bands of a cover that meet a grid's frequency box, sorted by index.
#[derive(Debug, Clone)]
pub struct Bands {
    pub grid: Grid,
    pub kind: BandKind,
    pub alpha: f64,
    pub bands: Vec<Band>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeConstant {
    pub beta: Vec<usize>,
    #[serde(rename = "C_prime")]
    pub c_prime: f64,
    /// Index attaining the maximum.
    pub k: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportViolation {
    pub k: Vec<i64>,
    pub xi: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub alpha: f64,
    pub dim: usize,
    pub k_max: i64,
    pub c: f64,
    pub window: f64,
    pub interior_radius: f64,
    pub samples: usize,
    pub partition_defect: f64,
    pub min_denominator: f64,
    pub overlap: usize,
    pub derivative_constants: Vec<DerivativeConstant>,
    pub support_violations: Vec<SupportViolation>,
    pub plateau_violations: usize,
    pub passed: bool,
}

impl AlphaCover {
    pub fn new(params: CoverParams, profile: BumpProfile) -> Result<Self> {
        params.validate()?;
        let a = params.exponent();
        let n = params.dim as f64;
        let plateau = 0.5 * (1.0 + a) * n.sqrt();
        let km = params.k_max;
        let mut lattice = Vec::new();
        if params.dim == 1 {
            for k in -km..=km {
                lattice.push([k, 0]);
            }
        } else {
            for k0 in -km..=km {
                for k1 in -km..=km {
                    lattice.push([k0, k1]);
                }
            }
        }
        let mut cover = Self {
            params,
            profile,
            a,
            plateau,
            lattice,
            reach: 0,
            interior: params.interior_radius(),
            overlap: 0,
        };
        cover.reach = cover.compute_reach();
        cover.check_plateau_coverage()?;
        cover.overlap = cover.compute_overlap();
        Ok(cover)
    }

    /// Uniform cover (`alpha = 0`) with the default constant.
    pub fn uniform(dim: usize, k_max: i64) -> Result<Self> {
        Self::new(CoverParams::new(0.0, dim, k_max), BumpProfile::default())
    }

    /// Default-constant cover whose interior contains the grid's frequency box.
    pub fn for_grid(alpha: f64, grid: &Grid) -> Result<Self> {
        let k_max = CoverParams::k_max_for_window(alpha, grid.dim(), grid.nyquist_radius());
        Self::new(CoverParams::new(alpha, grid.dim(), k_max), BumpProfile::default())
    }

    pub fn from_spec(spec: &CoverSpec) -> Result<Self> {
        Self::new(spec.params, spec.profile)
    }

    pub fn spec(&self) -> CoverSpec {
        CoverSpec {
            params: self.params,
            profile: self.profile,
        }
    }

    /// SHA-256 of the canonical JSON spec, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.spec()).expect("cover spec serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn params(&self) -> &CoverParams {
        &self.params
    }

    pub fn profile(&self) -> &BumpProfile {
        &self.profile
    }

    pub fn alpha(&self) -> f64 {
        self.params.alpha
    }

    pub fn dim(&self) -> usize {
        self.params.dim
    }

    /// `A = alpha / (1 - alpha)`.
    pub fn exponent(&self) -> f64 {
        self.a
    }

    /// Plateau constant `c1` of the unnormalized bumps.
    pub fn plateau_constant(&self) -> f64 {
        self.plateau
    }

    pub fn lattice(&self) -> &[Index] {
        &self.lattice
    }

    pub fn interior_radius(&self) -> f64 {
        self.interior
    }

    /// Maximum number of `eta_k` supports containing a common point.
    pub fn overlap(&self) -> usize {
        self.overlap
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        let k = to_index(k);
        k[0].abs() <= self.params.k_max && k[1].abs() <= self.params.k_max && (self.params.dim == 2 || k[1] == 0)
    }

    /// `<k>^A`.
    pub fn scale(&self, k: &[i64]) -> f64 {
        self.scale_of(to_index(k))
    }

    fn scale_of(&self, k: Index) -> f64 {
        if self.a == 0.0 {
            1.0
        } else {
            (1.0 + index_norm(k)).powf(self.a)
        }
    }

    /// `<k>^A k`.
    pub fn center(&self, k: &[i64]) -> Vec<f64> {
        let c = self.center_of(to_index(k));
        c[..self.params.dim].to_vec()
    }

    fn center_of(&self, k: Index) -> [f64; 2] {
        let s = self.scale_of(k);
        [s * k[0] as f64, s * k[1] as f64]
    }

    /// Outer radius `C <k>^A`.
    pub fn radius(&self, k: &[i64]) -> f64 {
        self.params.c * self.scale(k)
    }

    /// Radius of `supp eta_k`, `2 c1 <k>^A`.
    pub fn eta_radius(&self, k: &[i64]) -> f64 {
        2.0 * self.plateau * self.scale(k)
    }

    fn dist(&self, k: Index, xi: [f64; 2]) -> f64 {
        let c = self.center_of(k);
        (xi[0] - c[0]).hypot(xi[1] - c[1])
    }

    fn g(&self, k: Index, xi: [f64; 2]) -> f64 {
        let s = self.scale_of(k);
        self.profile.radial(self.dist(k, xi) / (self.plateau * s))
    }

    fn invert_radius(&self, r: f64) -> f64 {
        invert_center_radius(self.a, r)
    }

    /// Lattice point whose center is nearest (up to rounding) to `xi`.
    fn anchor(&self, xi: [f64; 2]) -> Index {
        if self.params.dim == 1 {
            let t = self.invert_radius(xi[0].abs());
            [(xi[0].signum() * t).floor() as i64, 0]
        } else {
            let r = xi[0].hypot(xi[1]);
            if r == 0.0 {
                return [0, 0];
            }
            let t = self.invert_radius(r) / r;
            [(xi[0] * t).round() as i64, (xi[1] * t).round() as i64]
        }
    }

    /// Retained indices that may carry `xi` in their `eta` support.
    pub(crate) fn candidates(&self, xi: [f64; 2]) -> Vec<Index> {
        let k0 = self.anchor(xi);
        let km = self.params.k_max;
        let w = self.reach;
        let clamp = |lo: i64, hi: i64| (lo.max(-km), hi.min(km));
        let mut out = Vec::new();
        if self.params.dim == 1 {
            // the anchor brackets xi between centers k0 and k0 + 1
            let (a0, a1) = clamp(k0[0] - w, k0[0] + w + 1);
            for j in a0..=a1 {
                out.push([j, 0]);
            }
        } else {
            let (a0, a1) = clamp(k0[0] - w, k0[0] + w);
            let (b0, b1) = clamp(k0[1] - w, k0[1] + w);
            for j0 in a0..=a1 {
                for j1 in b0..=b1 {
                    out.push([j0, j1]);
                }
            }
        }
        out
    }

    /// Denominator `sum_j g_j(xi)` over retained indices.
    fn denominator(&self, xi: [f64; 2]) -> f64 {
        self.candidates(xi).into_iter().map(|j| self.g(j, xi)).sum()
    }

    fn point(&self, xi: &[f64]) -> [f64; 2] {
        assert_eq!(xi.len(), self.params.dim, "frequency dimension mismatch");
        let mut p = [0.0; 2];
        p[..xi.len()].copy_from_slice(xi);
        p
    }

    /// `eta_k(xi)`; exactly zero outside the support and for unretained `k`.
    pub fn eval_eta(&self, k: &[i64], xi: &[f64]) -> f64 {
        if !self.contains(k) {
            return 0.0;
        }
        self.eta_at(to_index(k), self.point(xi))
    }

    fn eta_at(&self, k: Index, xi: [f64; 2]) -> f64 {
        let s = self.scale_of(k);
        let d = self.dist(k, xi);
        if d >= 2.0 * self.plateau * s {
            return 0.0;
        }
        let num = self.profile.radial(d / (self.plateau * s));
        if num == 0.0 {
            return 0.0;
        }
        num / self.denominator(xi)
    }

    /// All nonzero `(k, eta_k(xi))`, sorted by index.
    pub fn eta_all(&self, xi: &[f64]) -> Vec<(Vec<i64>, f64)> {
        let p = self.point(xi);
        let gs: Vec<(Index, f64)> = self
            .candidates(p)
            .into_iter()
            .map(|j| (j, self.g(j, p)))
            .filter(|(_, v)| *v > 0.0)
            .collect();
        let den: f64 = gs.iter().map(|(_, v)| v).sum();
        gs.into_iter()
            .map(|(j, v)| (index_vec(j, self.params.dim), v / den))
            .collect()
    }

    /// `rho_k(xi) = phi_0((xi - <k>^A k) / (C <k>^A))`.
    pub fn eval_rho(&self, k: &[i64], xi: &[f64]) -> f64 {
        let k = to_index(k);
        let s = self.scale_of(k);
        self.profile.radial(self.dist(k, self.point(xi)) / (self.params.c * s))
    }

    /// Plateau family `kappa_m`; same profile and radii as `rho_m`.
    pub fn eval_kappa(&self, m: &[i64], xi: &[f64]) -> f64 {
        self.eval_rho(m, xi)
    }

    /// `eta_k` near `xi` as a Taylor jet in one dimension.
    pub fn eta_jet_1d(&self, k: i64, xi: f64) -> Jet {
        assert_eq!(self.params.dim, 1, "eta_jet_1d is one-dimensional");
        let kk = [k, 0];
        if !self.contains(&[k]) || self.dist(kk, [xi, 0.0]) >= 2.0 * self.plateau * self.scale_of(kk) {
            return Jet::constant(0.0);
        }
        let g = |j: Index| {
            let s = self.plateau * self.scale_of(j);
            let c = self.center_of(j)[0];
            self.profile.eval_jet_1d(Jet::affine((xi - c) / s, 1.0 / s))
        };
        let mut den = Jet::constant(0.0);
        for j in self.candidates([xi, 0.0]) {
            den = den + g(j);
        }
        g(kk) / den
    }

    /// Jets of every nonzero `eta_k` near `xi` in one dimension, sharing one
    /// denominator.
    pub fn eta_jets_1d(&self, xi: f64) -> Vec<(i64, Jet)> {
        assert_eq!(self.params.dim, 1, "eta_jets_1d is one-dimensional");
        let gs: Vec<(i64, Jet)> = self
            .candidates([xi, 0.0])
            .into_iter()
            .filter(|&j| self.dist(j, [xi, 0.0]) < 2.0 * self.plateau * self.scale_of(j))
            .map(|j| {
                let s = self.plateau * self.scale_of(j);
                let c = self.center_of(j)[0];
                (j[0], self.profile.eval_jet_1d(Jet::affine((xi - c) / s, 1.0 / s)))
            })
            .collect();
        let mut den = Jet::constant(0.0);
        for (_, g) in &gs {
            den = den + *g;
        }
        let inv = den.recip();
        gs.into_iter().map(|(k, g)| (k, g * inv)).collect()
    }

    /// Errors when `window` reaches beyond the uncontaminated interior.
    pub fn ensure_covers(&self, window: f64) -> Result<()> {
        if window <= self.interior {
            Ok(())
        } else {
            Err(Error::Uncovered {
                xi: vec![window],
                interior: self.interior,
            })
        }
    }

    /// Largest index distance between retained indices with intersecting
    /// supports, plus slack for the anchor rounding.
    fn compute_reach(&self) -> i64 {
        let r = |k: Index| 2.0 * self.plateau * self.scale_of(k);
        let km = self.params.k_max;
        let mut reach = 1;
        if self.params.dim == 1 {
            for k in -km..=km {
                for j in k + 1..=km {
                    let (a, b) = ([k, 0], [j, 0]);
                    let gap = self.center_of(b)[0] - self.center_of(a)[0];
                    if gap < r(a) + r(b) {
                        reach = reach.max(j - k);
                    }
                }
            }
            reach
        } else {
            let local = (4.0 * (1.0 + self.a) * 2f64.sqrt()).ceil() as i64 + 2;
            for &k in &self.lattice {
                for d0 in -local..=local {
                    for d1 in -local..=local {
                        let j = [k[0] + d0, k[1] + d1];
                        if j[0].abs() > km || j[1].abs() > km {
                            continue;
                        }
                        let ck = self.center_of(k);
                        let cj = self.center_of(j);
                        if (ck[0] - cj[0]).hypot(ck[1] - cj[1]) < r(k) + r(j) {
                            reach = reach.max(d0.abs()).max(d1.abs());
                        }
                    }
                }
            }
            reach + 1
        }
    }

    fn check_plateau_coverage(&self) -> Result<()> {
        let km = self.params.k_max;
        let covered = |xi: [f64; 2]| {
            self.candidates(xi)
                .into_iter()
                .any(|j| self.dist(j, xi) <= self.plateau * self.scale_of(j) * (1.0 + 1e-12))
        };
        if self.params.dim == 1 {
            for k in -km..km {
                let (a, b) = ([k, 0], [k + 1, 0]);
                let gap = self.center_of(b)[0] - self.center_of(a)[0];
                let reach = self.plateau * (self.scale_of(a) + self.scale_of(b));
                if gap > reach * (1.0 + 1e-12) {
                    return Err(Error::Precondition(format!(
                        "plateaus of k = {k} and k = {} leave a gap",
                        k + 1
                    )));
                }
            }
            return Ok(());
        }
        let steps = 5;
        for k0 in -km..km {
            for k1 in -km..km {
                let c00 = self.center_of([k0, k1]);
                let c10 = self.center_of([k0 + 1, k1]);
                let c01 = self.center_of([k0, k1 + 1]);
                let c11 = self.center_of([k0 + 1, k1 + 1]);
                for i in 0..=steps {
                    for j in 0..=steps {
                        let (u, v) = (i as f64 / steps as f64, j as f64 / steps as f64);
                        let mut xi = [0.0; 2];
                        for d in 0..2 {
                            xi[d] = (1.0 - u) * (1.0 - v) * c00[d]
                                + u * (1.0 - v) * c10[d]
                                + (1.0 - u) * v * c01[d]
                                + u * v * c11[d];
                        }
                        if !covered(xi) {
                            return Err(Error::Uncovered {
                                xi: xi.to_vec(),
                                interior: self.interior,
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn compute_overlap(&self) -> usize {
        let r = |k: Index| 2.0 * self.plateau * self.scale_of(k);
        if self.params.dim == 1 {
            // Open intervals: at equal coordinates, ends are processed first.
            let mut events: Vec<(f64, i32)> = Vec::new();
            for &k in &self.lattice {
                let c = self.center_of(k)[0];
                events.push((c - r(k), 1));
                events.push((c + r(k), -1));
            }
            events.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            let mut cur = 0i32;
            let mut best = 0i32;
            for (_, e) in events {
                cur += e;
                best = best.max(cur);
            }
            return best as usize;
        }
        let window = self.interior;
        let m = 200;
        let mut best = 0;
        for i in 0..=m {
            for j in 0..=m {
                let xi = [
                    -window + 2.0 * window * i as f64 / m as f64,
                    -window + 2.0 * window * j as f64 / m as f64,
                ];
                if xi[0].hypot(xi[1]) > window {
                    continue;
                }
                let count = self
                    .candidates(xi)
                    .into_iter()
                    .filter(|&k| self.dist(k, xi) < r(k))
                    .count();
                best = best.max(count);
            }
        }
        best
    }

    /// Samples the chosen family on a grid's frequency lattice.
    ///
    /// The grid's frequency box must lie inside the interior radius, so every
    /// lattice point sees the untruncated partition.
    pub fn bands(&self, grid: &Grid, kind: BandKind) -> Result<Bands> {
        if grid.dim() != self.params.dim {
            return Err(Error::GridMismatch(format!(
                "grid dimension {} vs cover dimension {}",
                grid.dim(),
                self.params.dim
            )));
        }
        self.ensure_covers(grid.nyquist_radius())?;
        let radius_factor = match kind {
            BandKind::Eta => 2.0 * self.plateau,
            BandKind::Rho => 2.0 * self.params.c,
        };
        let bandwidth = match kind {
            BandKind::Eta => self.plateau,
            BandKind::Rho => self.params.c,
        };
        let nyq = grid.nyquist();
        let dxi = grid.dxi();
        let half = (grid.n() / 2) as i64;
        let raw: Vec<(Index, Vec<usize>, Vec<f64>)> = self
            .lattice
            .par_iter()
            .filter_map(|&k| {
                let s = self.scale_of(k);
                let r = radius_factor * s;
                let c = self.center_of(k);
                let axes = self.params.dim;
                let mut ranges = [(0i64, -1i64); 2];
                for d in 0..axes {
                    if c[d] - r > nyq || c[d] + r < -nyq {
                        return None;
                    }
                    let lo = ((c[d] - r) / dxi).ceil() as i64;
                    let hi = ((c[d] + r) / dxi).floor() as i64;
                    ranges[d] = (lo.max(-half), hi.min(half - 1));
                }
                if axes == 1 {
                    ranges[1] = (0, 0);
                }
                let mut pos = Vec::new();
                let mut val = Vec::new();
                for j0 in ranges[0].0..=ranges[0].1 {
                    for j1 in ranges[1].0..=ranges[1].1 {
                        let xi = [j0 as f64 * dxi, j1 as f64 * dxi];
                        let d = (xi[0] - c[0]).hypot(xi[1] - c[1]);
                        if d >= r {
                            continue;
                        }
                        let v = self.profile.radial(d / (bandwidth * s));
                        if v == 0.0 {
                            continue;
                        }
                        let p0 = grid.freq_position(j0).expect("clipped to the lattice");
                        let flat = if axes == 1 {
                            p0
                        } else {
                            grid.flatten([p0, grid.freq_position(j1).expect("clipped")])
                        };
                        pos.push(flat);
                        val.push(v);
                    }
                }
                (!pos.is_empty()).then_some((k, pos, val))
            })
            .collect();
        let mut bands: Vec<Band> = raw
            .into_iter()
            .map(|(k, positions, weights)| Band {
                k,
                bracket: 1.0 + index_norm(k),
                positions,
                weights,
            })
            .collect();
        if kind == BandKind::Eta {
            let mut den = vec![0.0f64; grid.len()];
            for band in &bands {
                for (&p, &v) in band.positions.iter().zip(&band.weights) {
                    den[p] += v;
                }
            }
            if let Some(j) = den.iter().position(|&d| d < 1.0 - 1e-12) {
                return Err(Error::Uncovered {
                    xi: grid.freq(j)[..grid.dim()].to_vec(),
                    interior: self.interior,
                });
            }
            for band in &mut bands {
                for (&p, v) in band.positions.iter().zip(band.weights.iter_mut()) {
                    *v /= den[p];
                }
            }
        }
        Ok(Bands {
            grid: *grid,
            kind,
            alpha: self.params.alpha,
            bands,
        })
    }

    /// Samples the partition, support, plateau and derivative invariants on a
    /// frequency ball of radius `window`, with finite-difference derivative
    /// constants up to order `max_order` (at most 3).
    pub fn verify(&self, window: f64, max_order: usize) -> Result<CoverReport> {
        self.ensure_covers(window)?;
        if max_order > 3 {
            return Err(Error::DerivativeOrder {
                requested: max_order,
                available: 3,
            });
        }
        let dim = self.params.dim;
        let samples = self.partition_samples(window);
        let sums: Vec<(f64, f64)> = samples
            .par_iter()
            .map(|&xi| {
                let mut total = 0.0;
                let mut den = 0.0;
                for &k in &self.lattice {
                    total += self.eta_at(k, xi);
                    den += self.g(k, xi);
                }
                (total, den)
            })
            .collect();
        let partition_defect = sums.iter().fold(0.0f64, |m, (t, _)| m.max((t - 1.0).abs()));
        let min_denominator = sums.iter().fold(f64::INFINITY, |m, (_, d)| m.min(*d));

        let support_violations = self.support_probe();
        let plateau_violations = self.plateau_probe();
        let derivative_constants = self.derivative_constants(max_order);
        let passed = partition_defect <= PARTITION_TOLERANCE
            && min_denominator >= 1.0 - 1e-12
            && support_violations.is_empty()
            && plateau_violations == 0
            && derivative_constants.iter().all(|d| d.c_prime.is_finite());
        Ok(CoverReport {
            alpha: self.params.alpha,
            dim,
            k_max: self.params.k_max,
            c: self.params.c,
            window,
            interior_radius: self.interior,
            samples: samples.len(),
            partition_defect,
            min_denominator,
            overlap: self.overlap,
            derivative_constants,
            support_violations,
            plateau_violations,
            passed,
        })
    }

    fn partition_samples(&self, window: f64) -> Vec<[f64; 2]> {
        let mut pts = Vec::new();
        if self.params.dim == 1 {
            let m = 20_000;
            for i in 0..=m {
                pts.push([-window + 2.0 * window * i as f64 / m as f64, 0.0]);
            }
            for &k in &self.lattice {
                let c = self.center_of(k)[0];
                let r = 2.0 * self.plateau * self.scale_of(k);
                for x in [c, c - r * (1.0 - 1e-9), c + r * (1.0 - 1e-9), c + 0.5 * r, c - 0.5 * r] {
                    if x.abs() <= window {
                        pts.push([x, 0.0]);
                    }
                }
            }
        } else {
            let m = 150;
            for i in 0..=m {
                for j in 0..=m {
                    let xi = [
                        -window + 2.0 * window * i as f64 / m as f64,
                        -window + 2.0 * window * j as f64 / m as f64,
                    ];
                    if xi[0].hypot(xi[1]) <= window {
                        pts.push(xi);
                    }
                }
            }
        }
        pts
    }

    fn directions(&self) -> Vec<[f64; 2]> {
        if self.params.dim == 1 {
            vec![[1.0, 0.0], [-1.0, 0.0]]
        } else {
            (0..8)
                .map(|i| {
                    let t = i as f64 * std::f64::consts::FRAC_PI_4 + 0.1;
                    [t.cos(), t.sin()]
                })
                .collect()
        }
    }

    fn support_probe(&self) -> Vec<SupportViolation> {
        let dirs = self.directions();
        let mut out = Vec::new();
        for &k in &self.lattice {
            let s = self.scale_of(k);
            let c = self.center_of(k);
            let radii = [
                2.0 * self.plateau * s,
                (2.0 * self.plateau * s) * (1.0 + 1e-12),
                0.5 * (2.0 * self.plateau + self.params.c) * s,
                self.params.c * s * (1.0 + 1e-12),
                self.params.c * s * 1.01,
                self.params.c * s * 1.5,
                2.0 * self.params.c * s,
            ];
            for d in &dirs {
                for &r in &radii {
                    let xi = [c[0] + r * d[0], c[1] + r * d[1]];
                    let v = self.eta_at(k, xi);
                    if v != 0.0 {
                        out.push(SupportViolation {
                            k: index_vec(k, self.params.dim),
                            xi: xi[..self.params.dim].to_vec(),
                            value: v,
                        });
                    }
                }
            }
        }
        out
    }

    fn plateau_probe(&self) -> usize {
        let dirs = self.directions();
        let mut bad = 0;
        for &k in &self.lattice {
            let s = self.scale_of(k);
            let c = self.center_of(k);
            let kv = index_vec(k, self.params.dim);
            for d in &dirs {
                for i in 0..16 {
                    let r = 2.0 * self.plateau * s * i as f64 / 16.0;
                    let xi = [c[0] + r * d[0], c[1] + r * d[1]];
                    let eta = self.eta_at(k, xi);
                    let rho = self.eval_rho(&kv, &xi[..self.params.dim]);
                    if rho * eta != eta {
                        bad += 1;
                    }
                }
            }
        }
        bad
    }

    fn derivative_constants(&self, max_order: usize) -> Vec<DerivativeConstant> {
        let dim = self.params.dim;
        let betas: Vec<[usize; 2]> = (1..=max_order)
            .flat_map(|order| (0..=order).rev().map(move |b0| [b0, order - b0]))
            .filter(|b| dim == 2 || b[1] == 0)
            .collect();
        // Only indices whose support sits inside the uncontaminated interior.
        let ks: Vec<Index> = self
            .lattice
            .iter()
            .copied()
            .filter(|&k| {
                let c = self.center_of(k);
                c[0].hypot(c[1]) + 2.0 * self.plateau * self.scale_of(k) <= self.interior
            })
            .collect();
        let per_k: Vec<Vec<f64>> = ks
            .par_iter()
            .map(|&k| self.derivative_sup(k, &betas))
            .collect();
        betas
            .iter()
            .enumerate()
            .map(|(b, beta)| {
                let (mut best, mut arg) = (0.0f64, [0i64; 2]);
                for (k, row) in ks.iter().zip(&per_k) {
                    if row[b] > best {
                        best = row[b];
                        arg = *k;
                    }
                }
                DerivativeConstant {
                    beta: beta[..dim].to_vec(),
                    c_prime: best,
                    k: index_vec(arg, dim),
                }
            })
            .collect()
    }

    /// `sup |d^beta eta_k| <k>^{|beta| A}` on samples of `supp eta_k`, via
    /// central differences with step `<k>^A 1e-3`.
    fn derivative_sup(&self, k: Index, betas: &[[usize; 2]]) -> Vec<f64> {
        let dim = self.params.dim;
        let s = self.scale_of(k);
        let h = s * 1e-3;
        let c = self.center_of(k);
        let r = 2.0 * self.plateau * s;
        let per_axis = if dim == 1 { 64 } else { 8 };
        let mut best = vec![0.0f64; betas.len()];
        let offsets: &[i64] = &[-2, -1, 0, 1, 2];
        let axis_points = |i: usize| c[0] - r + 2.0 * r * (i as f64 + 0.5) / per_axis as f64;
        let axis_points_1 = |i: usize| c[1] - r + 2.0 * r * (i as f64 + 0.5) / per_axis as f64;
        for i in 0..per_axis {
            for j in 0..(if dim == 1 { 1 } else { per_axis }) {
                let base = [axis_points(i), if dim == 1 { 0.0 } else { axis_points_1(j) }];
                let mut block = [[0.0f64; 5]; 5];
                for (a, &da) in offsets.iter().enumerate() {
                    for (b, &db) in offsets.iter().enumerate() {
                        if dim == 1 && db != 0 {
                            continue;
                        }
                        let xi = [base[0] + da as f64 * h, base[1] + db as f64 * h];
                        block[a][b] = self.eta_at(k, xi);
                    }
                }
                for (bi, beta) in betas.iter().enumerate() {
                    let w0 = stencil(beta[0]);
                    let w1 = stencil(beta[1]);
                    let mut acc = 0.0;
                    for a in 0..5 {
                        for b in 0..5 {
                            let w = w0[a] * w1[b];
                            if w != 0.0 {
                                acc += w * block[a][b];
                            }
                        }
                    }
                    let order = (beta[0] + beta[1]) as i32;
                    let d = acc / h.powi(order);
                    best[bi] = best[bi].max(d.abs() * s.powi(order));
                }
            }
        }
        best
    }
}

/// Central-difference weights on offsets `-2..=2` for orders 0 to 4.
pub(crate) fn stencil(order: usize) -> [f64; 5] {
    match order {
        0 => [0.0, 0.0, 1.0, 0.0, 0.0],
        1 => [0.0, -0.5, 0.0, 0.5, 0.0],
        2 => [0.0, 1.0, -2.0, 1.0, 0.0],
        3 => [-0.5, 1.0, 0.0, -1.0, 0.5],
        4 => [1.0, -4.0, 6.0, -4.0, 1.0],
        _ => panic!("stencils are tabulated up to order 4"),
    }
}

impl Bands {
    /// Bands keyed by index, for lookups in tests and reports.
    pub fn by_index(&self) -> BTreeMap<Index, &Band> {
        self.bands.iter().map(|b| (b.k, b)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cover(alpha: f64, dim: usize, k_max: i64) -> AlphaCover {
        AlphaCover::new(CoverParams::new(alpha, dim, k_max), BumpProfile::default()).unwrap()
    }

    #[test]
    fn centers_and_radii() {
        let c = cover(0.5, 1, 8);
        assert_eq!(c.center(&[2]), vec![6.0]);
        assert_eq!(c.scale(&[2]), 3.0);
        assert!((c.radius(&[2]) - 3.0 * c.params().c).abs() < 1e-15);
        let u = cover(0.0, 1, 8);
        assert_eq!(u.center(&[3]), vec![3.0]);
        assert_eq!(u.radius(&[3]), u.params().c);
    }

    #[test]
    fn rejects_bad_parameters() {
        let p = BumpProfile::default();
        assert!(AlphaCover::new(CoverParams::new(1.0, 1, 8), p).is_err());
        assert!(AlphaCover::new(CoverParams::new(-0.1, 1, 8), p).is_err());
        assert!(AlphaCover::new(CoverParams::new(0.5, 3, 8), p).is_err());
        assert!(AlphaCover::new(CoverParams::new(0.5, 1, 8).with_c(1.5), p).is_err());
        assert!(AlphaCover::new(CoverParams::new(0.5, 1, 1), p).is_err());
    }

    #[test]
    fn candidate_search_matches_brute_force() {
        for (alpha, dim, km) in [(0.0, 1, 12), (0.3, 1, 12), (0.7, 1, 10), (0.5, 2, 6), (0.0, 2, 6)] {
            let c = cover(alpha, dim, km);
            let w = c.interior_radius();
            for i in 0..400 {
                let t = -w + 2.0 * w * (i as f64 + 0.37) / 400.0;
                let xi: Vec<f64> = if dim == 1 { vec![t] } else { vec![t, 0.61 * t - 0.3 * w * (i as f64 / 400.0)] };
                let p = c.point(&xi);
                let brute: f64 = c.lattice().iter().map(|&k| c.g(k, p)).sum();
                let fast = c.denominator(p);
                assert!((brute - fast).abs() <= 1e-14 * brute, "alpha {alpha} dim {dim} xi {xi:?}");
            }
        }
    }

    #[test]
    fn uniform_cover_is_translation_invariant() {
        let c = cover(0.0, 1, 16);
        for i in 0..200 {
            let t = -1.5 + 3.0 * i as f64 / 200.0;
            let base = c.eval_eta(&[0], &[t]);
            for k in [-5i64, 2, 7] {
                let v = c.eval_eta(&[k], &[t + k as f64]);
                assert!((v - base).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn midpoint_values_sum_to_one() {
        let c = cover(0.5, 1, 16);
        for k in 0..10i64 {
            let mid = 0.5 * (c.center(&[k])[0] + c.center(&[k + 1])[0]);
            let s = c.eval_eta(&[k], &[mid]) + c.eval_eta(&[k + 1], &[mid]);
            let all: f64 = c.eta_all(&[mid]).iter().map(|(_, v)| v).sum();
            assert!((all - 1.0).abs() < 1e-14);
            assert!(s <= 1.0 + 1e-14 && s > 0.0);
        }
    }

    #[test]
    fn values_outside_support_are_exactly_zero() {
        let c = cover(0.5, 1, 16);
        let k = [3i64];
        let center = c.center(&k)[0];
        assert_eq!(c.eval_eta(&k, &[center + 2.0 * c.radius(&k)]), 0.0);
        assert_eq!(c.eval_eta(&k, &[center - c.radius(&k) * 1.0001]), 0.0);
        assert_eq!(c.eval_eta(&[99], &[center]), 0.0);
        assert_eq!(c.eval_rho(&[0], &[0.0]), 1.0);
        assert_eq!(c.eval_rho(&k, &[center + 2.0 * c.radius(&k)]), 0.0);
    }

    #[test]
    fn overlap_counts() {
        assert_eq!(cover(0.0, 1, 16).overlap(), 2);
        // k = -1, 0, 1, 2 all contain (0, 2) when alpha = 1/2
        assert_eq!(cover(0.5, 1, 16).overlap(), 4);
    }

    #[test]
    fn interior_radius_formula() {
        // alpha = 1/2: (k_max + 2)(k_max + 1 - 2), capped by the last center
        let p = CoverParams::new(0.5, 1, 32);
        assert!((p.interior_radius() - 34.0 * 31.0).abs() < 1e-9);
        assert_eq!(CoverParams::k_max_for_window(0.5, 1, 34.0 * 31.0), 32);
        let c = cover(0.5, 1, 32);
        assert!(c.ensure_covers(200.0).is_ok());
        assert!(matches!(c.ensure_covers(5000.0), Err(Error::Uncovered { .. })));
    }

    #[test]
    fn jet_derivative_matches_differences() {
        let c = cover(0.5, 1, 16);
        let k = 4i64;
        let center = c.center(&[k])[0];
        let s = c.scale(&[k]);
        let h = s * 1e-4;
        for frac in [-1.7, -1.1, -0.4, 0.3, 1.2, 1.8] {
            let xi = center + frac * c.plateau_constant() * s;
            let j = c.eta_jet_1d(k, xi);
            let fd = (c.eval_eta(&[k], &[xi + h]) - c.eval_eta(&[k], &[xi - h])) / (2.0 * h);
            assert!((j.value() - c.eval_eta(&[k], &[xi])).abs() < 1e-14);
            assert!((j.derivative(1) - fd).abs() < 1e-6 * (1.0 + fd.abs()) / s, "{frac}");
        }
    }

    #[test]
    fn bands_partition_the_lattice() {
        let c = cover(0.5, 1, 24);
        let g = Grid::new(1, 256, 8.0 * std::f64::consts::PI).unwrap();
        let bands = c.bands(&g, BandKind::Eta).unwrap();
        let mut total = vec![0.0; g.len()];
        for b in &bands.bands {
            for (&p, &v) in b.positions.iter().zip(&b.weights) {
                total[p] += v;
                let pointwise = c.eval_eta(&[b.k[0]], &[g.xi(p)]);
                assert!((v - pointwise).abs() < 1e-14);
            }
        }
        assert!(total.iter().all(|t| (t - 1.0).abs() < 1e-14));
        let rho = c.bands(&g, BandKind::Rho).unwrap();
        assert!(rho.bands.len() >= bands.bands.len());
    }

    #[test]
    fn bands_refuse_grids_beyond_the_interior() {
        let c = cover(0.5, 1, 4);
        let g = Grid::new(1, 1024, 2.0 * std::f64::consts::PI).unwrap();
        assert!(matches!(c.bands(&g, BandKind::Eta), Err(Error::Uncovered { .. })));
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = cover(0.5, 1, 16);
        let b = cover(0.5, 1, 16);
        let c = cover(0.5, 1, 17);
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn two_dimensional_verification_passes() {
        let c = cover(0.5, 2, 8);
        let report = c.verify(0.8 * c.interior_radius(), 2).unwrap();
        assert!(report.passed, "{report:?}");
        assert_eq!(report.derivative_constants.len(), 5);
    }
}
