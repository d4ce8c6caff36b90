use std::collections::BTreeMap;

use rayon::prelude::*;
use serde_json::{json, Value};

use super::{
    fit_series, norm_exponent, plan_grid, weight_exponent, ExperimentRecord, ExperimentReport, FitRecord,
    Provenance, Tolerances, Verdict,
};
use crate::cover::{bracket, invert_center_radius, AlphaCover, BandKind, Bands};
use crate::error::{Error, Result};
use crate::families::PlateauFamily;
use crate::grid::{Grid, Spectrum};
use crate::spaces::{band_norms_spectrum, embedding_check_with, BandNorms, QuasiNormParams};
use crate::symbols::{seminorm, Counterexample, CounterexampleParams, SeminormDomain, Symbol, SymbolClass};

/// Above this many grid points the brute-force quantization is refused.
const DIRECT_LIMIT: usize = 4096;

const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundednessOptions {
    pub ells: Vec<i64>,
    /// Seminorm order.
    pub order: usize,
    pub seed: u64,
    /// Frequency window of the seminorm estimate; defaults to the largest
    /// support reach of the family.
    pub seminorm_window: Option<f64>,
    pub tolerances: Tolerances,
}

impl Default for BoundednessOptions {
    fn default() -> Self {
        Self {
            ells: (0..=24).collect(),
            order: 2,
            seed: DEFAULT_SEED,
            seminorm_window: None,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleOptions {
    pub ells: Vec<i64>,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl Default for CounterexampleOptions {
    fn default() -> Self {
        Self {
            ells: (2..=24).collect(),
            seed: DEFAULT_SEED,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftOptions {
    pub ells: Vec<i64>,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl Default for LiftOptions {
    fn default() -> Self {
        Self {
            ells: (2..=128).collect(),
            seed: DEFAULT_SEED,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingOptions {
    pub ells: Vec<i64>,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl Default for EmbeddingOptions {
    fn default() -> Self {
        Self {
            ells: (0..=64).collect(),
            seed: DEFAULT_SEED,
            tolerances: Tolerances::default(),
        }
    }
}

/// Minimum number of fitted points (indices with `|l| >= 2`).
const MIN_FIT_POINTS: usize = 6;

fn check_fit_range(ells: &[i64]) -> Result<()> {
    let n = ells.iter().filter(|l| l.abs() >= 2).count();
    if n < MIN_FIT_POINTS {
        return Err(Error::param(
            "ells",
            format!("{n} indices with |l| >= 2; a stable fit needs at least {MIN_FIT_POINTS}"),
        ));
    }
    Ok(())
}

/// Spectrum of `sigma(X, D) f` through an exact fast route.
fn operator_spectrum(sigma: &dyn Symbol, spectrum: &Spectrum) -> Result<Spectrum> {
    if let Some(c) = sigma.constant_value() {
        let coeffs = spectrum.coeffs().iter().map(|z| z * c).collect();
        return Spectrum::new(*spectrum.grid(), coeffs);
    }
    if sigma.is_x_independent() {
        return Ok(spectrum.multiply(|xi| sigma.eval([0.0, 0.0], xi)));
    }
    if let Some(s) = sigma.apply_spectrum(spectrum) {
        return Ok(s);
    }
    if spectrum.grid().len() > DIRECT_LIMIT {
        return Err(Error::Precondition(format!(
            "{} has no fast quantization route and the grid has {} points",
            sigma.name(),
            spectrum.grid().len()
        )));
    }
    crate::psido::quantize_spectrum(sigma, spectrum)
}

fn distinct_p(params: &[QuasiNormParams]) -> Vec<f64> {
    let mut ps: Vec<f64> = Vec::new();
    for q in params {
        if !ps.iter().any(|p| p.to_bits() == q.p.to_bits()) {
            ps.push(q.p);
        }
    }
    ps
}

fn norms_for(ps: &[f64], spectrum: &Spectrum, bands: &Bands) -> Result<Vec<BandNorms>> {
    ps.iter().map(|&p| band_norms_spectrum(spectrum, bands, p)).collect()
}

fn pick<'a>(ps: &[f64], norms: &'a [BandNorms], p: f64) -> &'a BandNorms {
    let i = ps.iter().position(|q| q.to_bits() == p.to_bits()).expect("p was collected");
    &norms[i]
}

fn check_alpha(family: &PlateauFamily, params: &[QuasiNormParams]) -> Result<f64> {
    let alpha = family.alpha;
    for q in params {
        if q.alpha != alpha {
            return Err(Error::AlphaMismatch {
                cover: alpha,
                params: q.alpha,
            });
        }
    }
    Ok(alpha)
}

fn quasi_params(q: &QuasiNormParams) -> [(String, Value); 4] {
    [
        ("p".into(), json!(q.p)),
        ("q".into(), json!(q.q)),
        ("s".into(), json!(q.s)),
        ("alpha".into(), json!(q.alpha)),
    ]
}

fn ells_value(ells: &[i64]) -> Value {
    json!(ells)
}

/// `R(sigma, f_l) = ||sigma(X, D) f_l|| / (||sigma; S^0_{alpha,alpha}||_N ||f_l||)`
/// over the plateau family for one set of quasi-norm parameters.
pub fn exp_boundedness(
    grid: &Grid,
    symbols: &[&dyn Symbol],
    family: &PlateauFamily,
    params: &QuasiNormParams,
    opts: &BoundednessOptions,
) -> Result<ExperimentReport> {
    Ok(exp_boundedness_sweep(grid, symbols, family, std::slice::from_ref(params), opts)?.remove(0))
}

/// [`exp_boundedness`] for several parameter sets; operator outputs,
/// seminorms and band norms are shared.
pub fn exp_boundedness_sweep(
    grid: &Grid,
    symbols: &[&dyn Symbol],
    family: &PlateauFamily,
    params: &[QuasiNormParams],
    opts: &BoundednessOptions,
) -> Result<Vec<ExperimentReport>> {
    if symbols.is_empty() || params.is_empty() {
        return Err(Error::param("symbols", "nothing to sweep"));
    }
    let alpha = check_alpha(family, params)?;
    let cover = AlphaCover::for_grid(alpha, grid)?;
    let bands = cover.bands(grid, BandKind::Eta)?;
    let ps = distinct_p(params);
    let class = SymbolClass::exotic(alpha);
    let window = opts
        .seminorm_window
        .unwrap_or_else(|| opts.ells.iter().map(|&l| family.reach(&[l])).fold(1.0, f64::max));
    let domain = SeminormDomain::for_grid(grid, window).with_seed(opts.seed);

    // f_l band norms, shared by every symbol
    let f_norms: Vec<(i64, Spectrum, Vec<BandNorms>)> = opts
        .ells
        .par_iter()
        .map(|&l| {
            let spec = family.spectrum(grid, &[l])?;
            let norms = norms_for(&ps, &spec, &bands)?;
            Ok((l, spec, norms))
        })
        .collect::<Result<_>>()?;

    struct SymbolRun {
        name: String,
        seminorm: f64,
        outputs: Vec<Vec<BandNorms>>,
    }
    let mut runs = Vec::with_capacity(symbols.len());
    for sigma in symbols {
        let semi = seminorm(*sigma, opts.order, class, &domain)?.value;
        let outputs = f_norms
            .par_iter()
            .map(|(_, spec, _)| norms_for(&ps, &operator_spectrum(*sigma, spec)?, &bands))
            .collect::<Result<Vec<_>>>()?;
        runs.push(SymbolRun {
            name: sigma.name(),
            seminorm: semi,
            outputs,
        });
    }

    let mut reports = Vec::with_capacity(params.len());
    for qp in params {
        let mut records = Vec::new();
        let mut notices = Vec::new();
        for run in &runs {
            for ((l, _, fn_), out) in f_norms.iter().zip(&run.outputs) {
                let f_norm = pick(&ps, fn_, qp.p).norm(qp)?;
                if f_norm == 0.0 {
                    notices.push(format!("f_{l} has zero norm and was excluded"));
                    continue;
                }
                let value = pick(&ps, out, qp.p).norm(qp)?;
                let reference = run.seminorm * f_norm;
                records.push(ExperimentRecord {
                    series: run.name.clone(),
                    index: *l,
                    bracket: bracket(*l as f64),
                    value,
                    reference,
                    ratio: if reference == 0.0 { 0.0 } else { value / reference },
                });
            }
        }
        let mut fits = Vec::new();
        for run in &runs {
            let fit = fit_series(&records, &run.name, |r| r.ratio);
            fits.push(FitRecord::new(&run.name, "ratio", fit, None, None, Some(opts.tolerances.slope)));
        }
        let passed = fits.iter().all(|f| f.passed);
        let mut map: BTreeMap<String, Value> = quasi_params(qp).into_iter().collect();
        map.insert("order".into(), json!(opts.order));
        map.insert("class".into(), json!(class));
        map.insert("ells".into(), ells_value(&opts.ells));
        map.insert("family_width".into(), json!(family.width));
        map.insert("seminorm_window".into(), json!(window));
        map.insert(
            "seminorms".into(),
            Value::Object(runs.iter().map(|r| (r.name.clone(), json!(r.seminorm))).collect()),
        );
        map.insert(
            "sup_ratio".into(),
            json!(records.iter().map(|r| r.ratio).fold(0.0, f64::max)),
        );
        reports.push(ExperimentReport {
            experiment: "boundedness".into(),
            params: map,
            records,
            fits,
            verdict: Verdict {
                passed,
                conclusion: if passed { "bounded" } else { "growth detected" }.into(),
            },
            notices,
            provenance: Provenance::new(opts.seed, grid, cover.hash()),
        });
    }
    Ok(reports)
}

/// Growth of `||sigma(X, D) f_l|| / ||f_l||` for the narrow-bump symbol.
pub fn exp_counterexample(
    cp: CounterexampleParams,
    params: &QuasiNormParams,
    opts: &CounterexampleOptions,
) -> Result<ExperimentReport> {
    Ok(exp_counterexample_sweep(cp, std::slice::from_ref(params), opts)?.remove(0))
}

/// The grid and the counterexample symbol for a sweep over `ells`.
pub fn counterexample_setup(cp: CounterexampleParams, ells: &[i64]) -> Result<(Grid, Counterexample)> {
    let family = PlateauFamily::new(cp.alpha, cp.c, 1)?;
    let narrowest = ells
        .iter()
        .map(|&l| 0.5 * cp.c * bracket(l as f64).powf(cp.a_eps()))
        .fold(f64::INFINITY, f64::min);
    let grid = plan_grid(&family, ells, cp.alpha, 0.0, narrowest)?;
    let m_max = invert_center_radius(cp.a(), grid.nyquist()).ceil() as i64 + 2;
    let sigma = Counterexample::new(cp, 1, m_max)?;
    Ok((grid, sigma))
}

/// [`exp_counterexample`] for several parameter sets sharing `alpha`.
pub fn exp_counterexample_sweep(
    cp: CounterexampleParams,
    params: &[QuasiNormParams],
    opts: &CounterexampleOptions,
) -> Result<Vec<ExperimentReport>> {
    cp.validate()?;
    check_fit_range(&opts.ells)?;
    let (grid, sigma) = counterexample_setup(cp, &opts.ells)?;
    let family = sigma.family();
    check_alpha(&family, params)?;
    let cover = AlphaCover::for_grid(cp.alpha, &grid)?;
    let bands = cover.bands(&grid, BandKind::Eta)?;
    let ps = distinct_p(params);
    let rows: Vec<(i64, Vec<BandNorms>, Vec<BandNorms>)> = opts
        .ells
        .par_iter()
        .map(|&l| {
            let spec = family.spectrum(&grid, &[l])?;
            let out = operator_spectrum(&sigma, &spec)?;
            Ok((l, norms_for(&ps, &out, &bands)?, norms_for(&ps, &spec, &bands)?))
        })
        .collect::<Result<_>>()?;
    let series = "counterexample";
    let tol = opts.tolerances;
    let mut reports = Vec::with_capacity(params.len());
    for qp in params {
        let mut records = Vec::new();
        let mut notices = Vec::new();
        for (l, out, inp) in &rows {
            let reference = pick(&ps, inp, qp.p).norm(qp)?;
            if reference == 0.0 {
                notices.push(format!("f_{l} has zero norm and was excluded"));
                continue;
            }
            let value = pick(&ps, out, qp.p).norm(qp)?;
            records.push(ExperimentRecord {
                series: series.into(),
                index: *l,
                bracket: bracket(*l as f64),
                value,
                reference,
                ratio: value / reference,
            });
        }
        let w = weight_exponent(qp.s, cp.alpha);
        let growth = (cp.a() - cp.a_eps()) * (1.0 / qp.p - 1.0);
        let ratio_fit = fit_series(&records, series, |r| r.ratio);
        // at p >= 1 the mechanism vanishes and the slope must be flat
        let ratio = if qp.p < 1.0 {
            FitRecord::new(series, "ratio", ratio_fit, Some(growth), Some(tol.factor * growth), None)
        } else {
            FitRecord::new(series, "ratio", ratio_fit, Some(0.0), Some(-tol.slope), Some(tol.slope))
        };
        let band = |e: f64| (Some(e - tol.exponent), Some(e + tol.exponent));
        let pv = w + norm_exponent(cp.a_eps(), 1, qp.p);
        let pr = w + norm_exponent(cp.a(), 1, qp.p);
        let (lv, uv) = band(pv);
        let (lr, ur) = band(pr);
        let value = FitRecord::new(series, "value", fit_series(&records, series, |r| r.value), Some(pv), lv, uv);
        let reference =
            FitRecord::new(series, "reference", fit_series(&records, series, |r| r.reference), Some(pr), lr, ur);
        let unbounded = ratio_fit.is_some_and(|f| f.slope > tol.slope);
        let fits = vec![ratio, value, reference];
        let passed = fits.iter().all(|f| f.passed);
        let mut map: BTreeMap<String, Value> = quasi_params(qp).into_iter().collect();
        map.insert("eps".into(), json!(cp.eps));
        map.insert("c".into(), json!(cp.c));
        map.insert("A".into(), json!(cp.a()));
        map.insert("A_eps".into(), json!(cp.a_eps()));
        map.insert("K".into(), json!(cp.k_const()));
        map.insert("m_max".into(), json!(sigma.m_max()));
        map.insert("ells".into(), ells_value(&opts.ells));
        reports.push(ExperimentReport {
            experiment: "counterexample".into(),
            params: map,
            records,
            fits,
            verdict: Verdict {
                passed,
                conclusion: if unbounded { "unbounded" } else { "bounded" }.into(),
            },
            notices,
            provenance: Provenance::new(opts.seed, &grid, cover.hash()),
        });
    }
    Ok(reports)
}

/// `||J^t f_l||_{M^{s-t}} / ||f_l||_{M^s}` over the plateau family for each
/// `t`; both sides of the isomorphism show up as the min and max ratio.
pub fn exp_lift(
    params: &QuasiNormParams,
    t_values: &[f64],
    family: &PlateauFamily,
    opts: &LiftOptions,
) -> Result<ExperimentReport> {
    check_alpha(family, std::slice::from_ref(params))?;
    check_fit_range(&opts.ells)?;
    if t_values.is_empty() {
        return Err(Error::param("t", "no lift orders"));
    }
    let grid = plan_grid(family, &opts.ells, params.alpha, 0.0, f64::INFINITY)?;
    let cover = AlphaCover::for_grid(params.alpha, &grid)?;
    let bands = cover.bands(&grid, BandKind::Eta)?;
    let spectra: Vec<(i64, Spectrum, BandNorms)> = opts
        .ells
        .par_iter()
        .map(|&l| {
            let spec = family.spectrum(&grid, &[l])?;
            let norms = band_norms_spectrum(&spec, &bands, params.p)?;
            Ok((l, spec, norms))
        })
        .collect::<Result<_>>()?;
    let mut records = Vec::new();
    let mut fits = Vec::new();
    let mut constants = serde_json::Map::new();
    for &t in t_values {
        let series = format!("t={t}");
        let lifted = params.with_s(params.s - t);
        let rows = spectra
            .par_iter()
            .map(|(l, spec, norms)| {
                let js = spec.multiply(|xi| num_complex::Complex64::new((1.0 + xi[0] * xi[0] + xi[1] * xi[1]).powf(0.5 * t), 0.0));
                let value = band_norms_spectrum(&js, &bands, params.p)?.norm(&lifted)?;
                let reference = norms.norm(params)?;
                Ok(ExperimentRecord {
                    series: series.clone(),
                    index: *l,
                    bracket: bracket(*l as f64),
                    value,
                    reference,
                    ratio: value / reference,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let lo = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
        constants.insert(series.clone(), json!([lo, hi]));
        records.extend(rows);
        let fit = fit_series(&records, &series, |r| r.ratio);
        let tol = opts.tolerances.slope;
        fits.push(FitRecord::new(&series, "ratio", fit, Some(0.0), Some(-tol), Some(tol)));
    }
    let passed = fits.iter().all(|f| f.passed);
    let mut map: BTreeMap<String, Value> = quasi_params(params).into_iter().collect();
    map.insert("t".into(), json!(t_values));
    map.insert("ells".into(), ells_value(&opts.ells));
    map.insert("family_width".into(), json!(family.width));
    map.insert("constants".into(), Value::Object(constants));
    Ok(ExperimentReport {
        experiment: "lift".into(),
        params: map,
        records,
        fits,
        verdict: Verdict {
            passed,
            conclusion: if passed { "isomorphic" } else { "trend detected" }.into(),
        },
        notices: Vec::new(),
        provenance: Provenance::new(opts.seed, &grid, cover.hash()),
    })
}

/// Both embedding ratios between `M^{s,alpha}_{2,q}` and `M^0_{2,q}` over the
/// plateau family, one verdict per `q`.
pub fn exp_embedding(q_values: &[f64], alpha: f64, family: &PlateauFamily, opts: &EmbeddingOptions) -> Result<ExperimentReport> {
    if family.alpha != alpha {
        return Err(Error::AlphaMismatch {
            cover: family.alpha,
            params: alpha,
        });
    }
    check_fit_range(&opts.ells)?;
    if q_values.is_empty() {
        return Err(Error::param("q", "no exponents"));
    }
    // the alpha = 0 cover has the narrower transitions
    let grid = plan_grid(family, &opts.ells, 0.0, 0.0, f64::INFINITY)?;
    let cover_a = AlphaCover::for_grid(alpha, &grid)?;
    let cover_0 = AlphaCover::for_grid(0.0, &grid)?;
    let bands_a = cover_a.bands(&grid, BandKind::Eta)?;
    let bands_0 = cover_0.bands(&grid, BandKind::Eta)?;
    let signals = opts
        .ells
        .iter()
        .map(|&l| Ok((bracket(l as f64), family.signal(&grid, &[l])?)))
        .collect::<Result<Vec<_>>>()?;
    let mut records = Vec::new();
    let mut fits = Vec::new();
    let mut verdicts = serde_json::Map::new();
    let tol = opts.tolerances.slope;
    for &q in q_values {
        let rep = embedding_check_with(q, &bands_a, &bands_0, &signals)?;
        for (side, ineq) in [("upper", &rep.upper), ("lower", &rep.lower)] {
            let series = format!("q={q}/{side}");
            for (pt, &l) in ineq.points.iter().zip(&opts.ells) {
                records.push(ExperimentRecord {
                    series: series.clone(),
                    index: l,
                    bracket: pt.param,
                    value: pt.lhs,
                    reference: pt.rhs,
                    ratio: pt.ratio,
                });
            }
            let fit = fit_series(&records, &series, |r| r.ratio);
            fits.push(FitRecord::new(&series, "ratio", fit, None, None, Some(tol)));
        }
        verdicts.insert(format!("q={q}"), json!({"s1": rep.s1, "s2": rep.s2, "passed": rep.passed}));
    }
    let passed = fits.iter().all(|f| f.passed);
    let mut map = BTreeMap::new();
    map.insert("alpha".into(), json!(alpha));
    map.insert("q".into(), json!(q_values));
    map.insert("ells".into(), ells_value(&opts.ells));
    map.insert("family_width".into(), json!(family.width));
    map.insert("per_q".into(), Value::Object(verdicts));
    Ok(ExperimentReport {
        experiment: "embedding".into(),
        params: map,
        records,
        fits,
        verdict: Verdict {
            passed,
            conclusion: if passed { "embedded" } else { "growth detected" }.into(),
        },
        notices: Vec::new(),
        provenance: Provenance::new(opts.seed, &grid, cover_a.hash()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::Constant;

    #[test]
    fn identity_ratio_is_one() {
        let fam = PlateauFamily::new(0.5, 0.5, 1).unwrap();
        let ells: Vec<i64> = (0..=8).collect();
        let grid = plan_grid(&fam, &ells, 0.5, 0.0, f64::INFINITY).unwrap();
        let one = Constant::one(1).unwrap();
        let opts = BoundednessOptions {
            ells,
            ..Default::default()
        };
        let params = [
            QuasiNormParams::new(0.5, 1.0, 0.0, 0.5).unwrap(),
            QuasiNormParams::new(2.0, 0.5, 2.0, 0.5).unwrap(),
        ];
        for r in exp_boundedness_sweep(&grid, &[&one], &fam, &params, &opts).unwrap() {
            assert!(r.records.iter().all(|x| x.ratio == 1.0));
            assert!(r.verdict.passed);
        }
    }

    #[test]
    fn short_range_rejected() {
        let cp = CounterexampleParams::with_default_c(0.5, 0.25).unwrap();
        let q = QuasiNormParams::new(0.5, 1.0, 0.0, 0.5).unwrap();
        let opts = CounterexampleOptions {
            ells: (0..6).collect(),
            ..Default::default()
        };
        assert!(exp_counterexample(cp, &q, &opts).is_err());
    }

    #[test]
    fn lift_zero_is_identity() {
        let fam = PlateauFamily::new(0.5, 0.5, 1).unwrap();
        let q = QuasiNormParams::new(1.0, 1.0, 0.0, 0.5).unwrap();
        let opts = LiftOptions {
            ells: (0..=8).collect(),
            ..Default::default()
        };
        let r = exp_lift(&q, &[0.0], &fam, &opts).unwrap();
        assert!(r.records.iter().all(|x| x.ratio == 1.0));
        assert!(r.verdict.passed);
    }
}
