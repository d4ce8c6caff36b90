//! End-to-end experiments over plateau families: boundedness sweeps, the
//! unboundedness growth of the narrow-bump symbol, the Bessel lift and the
//! embedding checks, with report emission.

mod config;
mod experiments;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cover::CoverParams;
use crate::error::{Error, Result};
use crate::families::PlateauFamily;
use crate::fit::{fit_loglog, SlopeFit};
use crate::grid::Grid;

pub use config::{Amplitudes, Config, SymbolSpec};
pub use experiments::{
    counterexample_setup, exp_boundedness, exp_boundedness_sweep, exp_counterexample, exp_counterexample_sweep, exp_embedding, exp_lift,
    BoundednessOptions, CounterexampleOptions, EmbeddingOptions, LiftOptions,
};

/// Largest grid the harness will build on its own.
pub const MAX_GRID_POINTS: usize = 1 << 22;

/// Samples per narrowest transition when sizing the frequency lattice.
pub const SAMPLES_PER_TRANSITION: f64 = 12.7;

/// Pass thresholds shared by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Allowed growth slope for ratios that should stay bounded.
    pub slope: f64,
    /// Allowed deviation of fitted norm exponents from their predictions.
    pub exponent: f64,
    /// Fraction of the predicted growth slope that must be observed.
    pub factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            slope: 0.1,
            exponent: 0.15,
            factor: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub series: String,
    pub index: i64,
    /// `<index>`.
    pub bracket: f64,
    /// Numerator quasi-norm.
    pub value: f64,
    /// Denominator (quasi-norm, possibly times a seminorm).
    pub reference: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub series: String,
    /// `value`, `reference` or `ratio`.
    pub quantity: String,
    pub fit: Option<SlopeFit>,
    pub predicted: Option<f64>,
    /// Accepted slope interval; `None` is unbounded on that side.
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub passed: bool,
}

impl FitRecord {
    pub(crate) fn new(
        series: &str,
        quantity: &str,
        fit: Option<SlopeFit>,
        predicted: Option<f64>,
        lower: Option<f64>,
        upper: Option<f64>,
    ) -> Self {
        let passed = fit.is_some_and(|f| {
            lower.map_or(true, |l| f.slope >= l) && upper.map_or(true, |u| f.slope <= u)
        });
        Self {
            series: series.to_string(),
            quantity: quantity.to_string(),
            fit,
            predicted,
            lower,
            upper,
            passed,
        }
    }

    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub passed: bool,
    /// Short conclusion, e.g. `bounded` or `unbounded`.
    pub conclusion: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub dim: usize,
    pub n: usize,
    pub length: f64,
    pub nyquist: f64,
}

impl From<&Grid> for GridInfo {
    fn from(g: &Grid) -> Self {
        Self {
            dim: g.dim(),
            n: g.n(),
            length: g.length(),
            nyquist: g.nyquist(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub grid: GridInfo,
    pub cover_hash: String,
    pub version: String,
}

impl Provenance {
    pub fn new(seed: u64, grid: &Grid, cover_hash: String) -> Self {
        Self {
            seed,
            grid: grid.into(),
            cover_hash,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub params: BTreeMap<String, Value>,
    pub records: Vec<ExperimentRecord>,
    pub fits: Vec<FitRecord>,
    pub verdict: Verdict,
    pub notices: Vec<String>,
    pub provenance: Provenance,
}

impl ExperimentReport {
    pub fn fit(&self, series: &str, quantity: &str) -> Option<&FitRecord> {
        self.fits.iter().find(|f| f.series == series && f.quantity == quantity)
    }

    pub fn series(&self, series: &str) -> impl Iterator<Item = &ExperimentRecord> {
        let s = series.to_string();
        self.records.iter().filter(move |r| r.series == s)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["index", "value", "ratio", "series"])?;
        for r in &self.records {
            w.write_record([r.index.to_string(), r.value.to_string(), r.ratio.to_string(), r.series.clone()])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    /// `.csv` selects CSV, anything else JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Self::Csv,
            _ => Self::Json,
        }
    }
}

pub fn emit_report(report: &ExperimentReport, format: ReportFormat, path: &Path) -> Result<()> {
    let text = match format {
        ReportFormat::Json => report.to_json()?,
        ReportFormat::Csv => report.to_csv()?,
    };
    let mut file = fs::File::create(path)?;
    file.write_all(text.as_bytes())?;
    Ok(())
}

/// Grid for a plateau family sweep: `L = 2 pi M` with `M` a power of two
/// giving [`SAMPLES_PER_TRANSITION`] lattice points across the narrowest
/// transition of the family, of the `alpha` cover and `narrowest` (the
/// symbol's own, `f64::INFINITY` when irrelevant), and `N` a power of two
/// putting every band center at or below half the Nyquist frequency and every
/// support, widened by `extra`, below it.
pub fn plan_grid(family: &PlateauFamily, ells: &[i64], cover_alpha: f64, extra: f64, narrowest: f64) -> Result<Grid> {
    if family.dim != 1 {
        return Err(Error::UnsupportedDimension(family.dim));
    }
    if ells.is_empty() {
        return Err(Error::param("ells", "empty index range"));
    }
    let min_scale = ells.iter().map(|&l| family.scale(&[l])).fold(f64::INFINITY, f64::min);
    let cover_transition = CoverParams::support_factor(cover_alpha, 1) / 2.0;
    let w_min = (family.width * min_scale).min(cover_transition).min(narrowest);
    let m = ((SAMPLES_PER_TRANSITION / w_min).ceil() as usize).next_power_of_two();
    let max_center = ells.iter().map(|&l| family.center(&[l])[0].abs()).fold(0.0, f64::max);
    let max_reach = ells.iter().map(|&l| family.reach(&[l])).fold(0.0, f64::max);
    let needed = (2.0 * max_center).max(1.05 * (max_reach + extra));
    let n = ((2.0 * m as f64 * needed).ceil() as usize).next_power_of_two().max(64);
    if n > MAX_GRID_POINTS {
        return Err(Error::Precondition(format!(
            "sweep needs {n} grid points, above the limit {MAX_GRID_POINTS}"
        )));
    }
    Grid::new(1, n, std::f64::consts::TAU * m as f64)
}

/// `<l>^{A n (1 - 1/p)}`-type exponents used in predictions.
pub(crate) fn norm_exponent(alpha_like_a: f64, dim: usize, p: f64) -> f64 {
    alpha_like_a * dim as f64 * (1.0 - 1.0 / p)
}

/// `s / (1 - alpha)`.
pub(crate) fn weight_exponent(s: f64, alpha: f64) -> f64 {
    s / (1.0 - alpha)
}

/// Log-log fit of one quantity of a series over records with `|index| >= 2`.
pub(crate) fn fit_series(records: &[ExperimentRecord], series: &str, pick: impl Fn(&ExperimentRecord) -> f64) -> Option<SlopeFit> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.series == series && r.index.abs() >= 2)
        .map(|r| (r.bracket, pick(r)))
        .collect();
    fit_loglog(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_matches_hand_sizing() {
        let fam = PlateauFamily::new(0.5, 1.0 / 16.0, 1).unwrap();
        let ells: Vec<i64> = (2..=24).collect();
        let narrow = 1.0 / 32.0 * 3f64.sqrt();
        let g = plan_grid(&fam, &ells, 0.5, 0.0, narrow).unwrap();
        assert_eq!(g.length(), std::f64::consts::TAU * 256.0);
        assert_eq!(g.n(), 1 << 20);
        assert!(fam.center(&[24])[0] <= g.nyquist() / 2.0);
    }

    #[test]
    fn csv_has_fixed_columns() {
        let g = Grid::new(1, 64, 10.0).unwrap();
        let r = ExperimentReport {
            experiment: "x".into(),
            params: BTreeMap::new(),
            records: vec![ExperimentRecord {
                series: "s".into(),
                index: 3,
                bracket: 4.0,
                value: 2.0,
                reference: 1.0,
                ratio: 2.0,
            }],
            fits: vec![],
            verdict: Verdict {
                passed: true,
                conclusion: "ok".into(),
            },
            notices: vec![],
            provenance: Provenance::new(1, &g, "h".into()),
        };
        assert_eq!(r.to_csv().unwrap(), "index,value,ratio,series\n3,2,2,s\n");
        let back: ExperimentReport = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
