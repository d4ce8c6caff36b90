//! Flat `key=value` experiment configuration and the symbol spec mini-language
//! `name:key=value,key=value`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    exp_boundedness_sweep, exp_counterexample_sweep, exp_embedding, exp_lift, plan_grid, BoundednessOptions,
    CounterexampleOptions, EmbeddingOptions, ExperimentReport, LiftOptions, Tolerances,
};
use crate::cover::{bracket, exponent, invert_center_radius, AlphaCover, CoverParams};
use crate::error::{Error, Result};
use crate::families::PlateauFamily;
use crate::grid::Grid;
use crate::spaces::QuasiNormParams;
use crate::symbols::{
    Bessel, Constant, Counterexample, CounterexampleParams, ModulatedFamily, Symbol, XProfile, DEFAULT_C,
};

/// One key per line, `#` starts a comment line, later keys override earlier ones.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value, got `{line}`", no + 1)))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Parse(format!("line {}: empty key", no + 1)));
            }
            entries.insert(k.to_string(), v.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.entries.insert(key.into(), value.into());
    }

    /// Keys of `other` win.
    pub fn merge(&mut self, other: &Config) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => parse_value(key, v),
        }
    }

    /// Comma-separated list.
    pub fn list_or<T: FromStr + Clone>(&self, key: &str, default: &[T]) -> Result<Vec<T>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v.split(',').map(|s| parse_value(key, s.trim())).collect(),
        }
    }

    /// `lmin..=lmax`, with `lmin`/`lmax` defaulting to the given bounds.
    pub fn ell_range(&self, lmin: i64, lmax: i64) -> Result<Vec<i64>> {
        let a = self.parse_or("lmin", lmin)?;
        let b = self.parse_or("lmax", lmax)?;
        if a > b {
            return Err(Error::param("lmin", format!("{a} exceeds lmax {b}")));
        }
        Ok((a..=b).collect())
    }

    pub fn tolerances(&self) -> Result<Tolerances> {
        let d = Tolerances::default();
        Ok(Tolerances {
            slope: self.parse_or("tol_slope", d.slope)?,
            exponent: self.parse_or("tol_exponent", d.exponent)?,
            factor: self.parse_or("tol_factor", d.factor)?,
        })
    }

    /// Every combination of the `p`, `q` and `s` lists.
    pub fn quasi_params(&self, alpha: f64, p: &[f64], q: &[f64], s: &[f64]) -> Result<Vec<QuasiNormParams>> {
        let ps = self.list_or("p", p)?;
        let qs = self.list_or("q", q)?;
        let ss = self.list_or("s", s)?;
        let mut out = Vec::new();
        for &p in &ps {
            for &q in &qs {
                for &s in &ss {
                    out.push(QuasiNormParams::new(p, q, s, alpha)?);
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Parse(format!("`{key}`: cannot parse `{v}`")))
}

/// Amplitudes of a modulated symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Amplitudes {
    Uniform(f64),
    /// Uniform in `[-1, 1]` from a seeded generator.
    Random(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SymbolSpec {
    One,
    Bessel { t: f64 },
    Modulated {
        alpha: f64,
        direction: f64,
        amplitudes: Amplitudes,
        profile: XProfile,
    },
    Counterexample(CounterexampleParams),
}

impl SymbolSpec {
    pub fn alpha(&self) -> Option<f64> {
        match self {
            SymbolSpec::Modulated { alpha, .. } => Some(*alpha),
            SymbolSpec::Counterexample(p) => Some(p.alpha),
            _ => None,
        }
    }

    /// Narrowest frequency transition of the symbol near bands `ells` of a
    /// plateau family.
    pub fn narrowest(&self, ells: &[i64]) -> f64 {
        match self {
            SymbolSpec::Counterexample(p) => ells
                .iter()
                .map(|&l| 0.5 * p.c * bracket(l as f64).powf(p.a_eps()))
                .fold(f64::INFINITY, f64::min),
            _ => f64::INFINITY,
        }
    }

    /// Largest frequency shift the operator applies to input supported
    /// within `reach`.
    pub fn extra_reach(&self, reach: f64) -> f64 {
        match self {
            SymbolSpec::Modulated { alpha, profile, .. } => {
                let a = exponent(*alpha);
                let k = invert_center_radius(a, reach) + 2.0;
                let top = profile.harmonics().iter().map(|h| h.0).fold(0.0, f64::max);
                top * bracket(k).powf(a)
            }
            _ => 0.0,
        }
    }

    pub fn build(&self, grid: &Grid) -> Result<Arc<dyn Symbol>> {
        let dim = grid.dim();
        Ok(match *self {
            SymbolSpec::One => Arc::new(Constant::one(dim)?),
            SymbolSpec::Bessel { t } => Arc::new(Bessel::new(dim, t)?),
            SymbolSpec::Modulated {
                alpha,
                direction,
                amplitudes,
                profile,
            } => {
                if dim != 1 {
                    return Err(Error::UnsupportedDimension(dim));
                }
                let cover = Arc::new(AlphaCover::for_grid(alpha, grid)?);
                let sigma = match amplitudes {
                    Amplitudes::Uniform(a) => ModulatedFamily::uniform(cover, a, &[direction], profile)?,
                    Amplitudes::Random(seed) => {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        let amps: Vec<(Vec<i64>, f64)> = cover
                            .lattice()
                            .iter()
                            .map(|k| (vec![k[0]], rng.gen_range(-1.0..=1.0)))
                            .collect();
                        ModulatedFamily::new(cover, amps, &[direction], profile)?
                    }
                };
                Arc::new(sigma)
            }
            SymbolSpec::Counterexample(p) => {
                let m_max = invert_center_radius(p.a(), grid.nyquist()).ceil() as i64 + 2;
                Arc::new(Counterexample::new(p, dim, m_max)?)
            }
        })
    }
}

fn spec_args(body: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for part in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("symbol argument `{part}` is not key=value")))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn take<T: FromStr>(args: &mut BTreeMap<String, String>, key: &str, default: Option<T>) -> Result<T> {
    match args.remove(key) {
        Some(v) => parse_value(key, &v),
        None => default.ok_or_else(|| Error::Parse(format!("symbol argument `{key}` is required"))),
    }
}

impl FromStr for SymbolSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, body) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        let mut args = spec_args(body)?;
        let spec = match name {
            "one" | "identity" => SymbolSpec::One,
            "bessel" => SymbolSpec::Bessel {
                t: take(&mut args, "t", None)?,
            },
            "modulated" => {
                let alpha = take(&mut args, "alpha", Some(0.5))?;
                let direction = take(&mut args, "direction", Some(1.0))?;
                let amplitudes = match args.remove("amp").as_deref() {
                    None => Amplitudes::Uniform(1.0),
                    Some("random") => Amplitudes::Random(take(&mut args, "seed", Some(0))?),
                    Some(v) => Amplitudes::Uniform(parse_value("amp", v)?),
                };
                let profile = match args.remove("profile").as_deref() {
                    None | Some("cosine") => XProfile::Cosine,
                    Some("harmonics") => XProfile::Harmonics {
                        ratio: take(&mut args, "ratio", Some(0.5))?,
                        terms: take(&mut args, "terms", Some(4))?,
                    },
                    Some(other) => return Err(Error::Parse(format!("unknown x-profile `{other}`"))),
                };
                SymbolSpec::Modulated {
                    alpha,
                    direction,
                    amplitudes,
                    profile,
                }
            }
            "counterexample" => SymbolSpec::Counterexample(CounterexampleParams::new(
                take(&mut args, "alpha", Some(0.5))?,
                take(&mut args, "eps", Some(0.25))?,
                take(&mut args, "c", Some(DEFAULT_C))?,
            )?),
            other => return Err(Error::Parse(format!("unknown symbol `{other}`"))),
        };
        if let Some(k) = args.keys().next() {
            return Err(Error::Parse(format!("unknown argument `{k}` for symbol `{name}`")));
        }
        Ok(spec)
    }
}

impl Config {
    /// Runs the named experiment (`boundedness`, `counterexample`, `lift`,
    /// `embedding`) with this configuration.
    pub fn run(&self, experiment: &str) -> Result<Vec<ExperimentReport>> {
        let seed: u64 = self.parse_or("seed", 0x5eed)?;
        let tolerances = self.tolerances()?;
        match experiment {
            "boundedness" => {
                let spec: SymbolSpec = self.parse_or("symbol", SymbolSpec::Modulated {
                    alpha: 0.5,
                    direction: 1.0,
                    amplitudes: Amplitudes::Uniform(1.0),
                    profile: XProfile::Cosine,
                })?;
                let alpha = self.parse_or("alpha", spec.alpha().unwrap_or(0.5))?;
                let default_width = match &spec {
                    SymbolSpec::Counterexample(p) => p.c,
                    _ => CoverParams::support_factor(alpha, 1) / 2.0,
                };
                let family = PlateauFamily::new(alpha, self.parse_or("width", default_width)?, 1)?;
                let ells = self.ell_range(0, 24)?;
                let reach = ells.iter().map(|&l| family.reach(&[l])).fold(0.0, f64::max);
                let grid = plan_grid(&family, &ells, alpha, spec.extra_reach(reach), spec.narrowest(&ells))?;
                let sigma = spec.build(&grid)?;
                let params = self.quasi_params(alpha, &[1.0], &[1.0], &[0.0])?;
                let opts = BoundednessOptions {
                    ells,
                    order: self.parse_or("order", 2)?,
                    seed,
                    seminorm_window: self.get("window").map(|v| parse_value("window", v)).transpose()?,
                    tolerances,
                };
                exp_boundedness_sweep(&grid, &[sigma.as_ref()], &family, &params, &opts)
            }
            "counterexample" => {
                let cp = CounterexampleParams::new(
                    self.parse_or("alpha", 0.5)?,
                    self.parse_or("eps", 0.25)?,
                    self.parse_or("c", DEFAULT_C)?,
                )?;
                let params = self.quasi_params(cp.alpha, &[0.5], &[1.0], &[0.0])?;
                let opts = CounterexampleOptions {
                    ells: self.ell_range(2, 24)?,
                    seed,
                    tolerances,
                };
                exp_counterexample_sweep(cp, &params, &opts)
            }
            "lift" => {
                let alpha = self.parse_or("alpha", 0.5)?;
                let family = PlateauFamily::new(alpha, self.parse_or("width", 0.5)?, 1)?;
                let t = self.list_or("t", &[-1.0, 1.0])?;
                let opts = LiftOptions {
                    ells: self.ell_range(2, 128)?,
                    seed,
                    tolerances,
                };
                self.quasi_params(alpha, &[1.0], &[1.0], &[0.0])?
                    .iter()
                    .map(|q| exp_lift(q, &t, &family, &opts))
                    .collect()
            }
            "embedding" => {
                let alpha = self.parse_or("alpha", 0.5)?;
                let family = PlateauFamily::new(alpha, self.parse_or("width", 0.5)?, 1)?;
                let q = self.list_or("q", &[1.0, 2.0, f64::INFINITY])?;
                let opts = EmbeddingOptions {
                    ells: self.ell_range(0, 64)?,
                    seed,
                    tolerances,
                };
                Ok(vec![exp_embedding(&q, alpha, &family, &opts)?])
            }
            other => Err(Error::Parse(format!("unknown experiment `{other}`"))),
        }
    }
}
