use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use alphamod::families::random_bandlimited;
use alphamod::grid::io::{read_signal, write_signal};
use alphamod::spaces::alpha_norm;
use alphamod::{
    emit_report, quantize_apply, AlphaCover, BumpProfile, Config, CoverParams, CoverSpec, ExperimentReport, Grid,
    PlateauFamily, QuasiNormParams, ReportFormat, SymbolSpec,
};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "alphamod", version, about = "alpha-modulation decompositions and operator experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or check an alpha-covering.
    #[command(subcommand)]
    Cover(CoverCmd),
    /// Norms of a signal file.
    #[command(subcommand)]
    Norm(NormCmd),
    /// Apply an operator to a signal file.
    #[command(subcommand)]
    Op(OpCmd),
    /// Write a test signal.
    #[command(subcommand)]
    Signal(SignalCmd),
    /// Run an experiment and write its report.
    Exp(ExpArgs),
}

#[derive(Args)]
struct CoverArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 32)]
    kmax: i64,
    /// Overlap constant; defaults to 1.25 (1 + A) sqrt(n).
    #[arg(long)]
    c: Option<f64>,
}

impl CoverArgs {
    fn cover(&self) -> Result<AlphaCover> {
        let mut params = CoverParams::new(self.alpha, self.dim, self.kmax);
        if let Some(c) = self.c {
            params = params.with_c(c);
        }
        Ok(AlphaCover::new(params, BumpProfile::default())?)
    }
}

#[derive(Subcommand)]
enum CoverCmd {
    /// Partition, support and derivative checks.
    Verify {
        #[command(flatten)]
        cover: CoverArgs,
        /// Sampled frequency window; defaults to the interior radius.
        #[arg(long)]
        window: Option<f64>,
        /// Highest derivative order for the C' constants (at most 3).
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a cover description for later `--cover` use.
    Make {
        #[command(flatten)]
        cover: CoverArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum NormCmd {
    /// Discrete L^p quasi-norm.
    Lp {
        #[arg(long)]
        p: f64,
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// M^{s,alpha}_{p,q} quasi-norm.
    Alpha {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 0.0)]
        s: f64,
        #[arg(long = "in")]
        input: PathBuf,
        /// Cover file from `cover make`; defaults to a cover sized to the grid.
        #[arg(long)]
        cover: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum OpCmd {
    Apply {
        /// e.g. `bessel:t=1` or `counterexample:alpha=0.5,eps=0.25,c=0.0625`.
        #[arg(long)]
        symbol: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum SignalCmd {
    /// Random band-limited signal.
    Random {
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long, default_value_t = std::f64::consts::TAU * 4.0)]
        length: f64,
        #[arg(long, default_value_t = 16.0)]
        window: f64,
        #[arg(long, default_value_t = 8)]
        bumps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Member `f_l` of the plateau family.
    Plateau {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0.5)]
        width: f64,
        #[arg(long)]
        ell: i64,
        #[arg(long, default_value_t = 4096)]
        n: usize,
        #[arg(long, default_value_t = std::f64::consts::TAU * 16.0)]
        length: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ExpArgs {
    /// boundedness, counterexample, lift or embedding.
    experiment: String,
    /// key=value file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    c: Option<String>,
    /// Comma-separated lists are swept.
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    s: Option<String>,
    #[arg(long)]
    t: Option<String>,
    #[arg(long)]
    lmin: Option<String>,
    #[arg(long)]
    lmax: Option<String>,
    #[arg(long)]
    width: Option<String>,
    #[arg(long)]
    symbol: Option<String>,
    #[arg(long)]
    order: Option<String>,
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Any other key, as key=value.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// `.csv` writes CSV, anything else JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ExpArgs {
    fn config(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(path) => Config::from_file(path).with_context(|| format!("reading {}", path.display()))?,
            None => Config::new(),
        };
        let flags = [
            ("alpha", &self.alpha),
            ("eps", &self.eps),
            ("c", &self.c),
            ("p", &self.p),
            ("q", &self.q),
            ("s", &self.s),
            ("t", &self.t),
            ("lmin", &self.lmin),
            ("lmax", &self.lmax),
            ("width", &self.width),
            ("symbol", &self.symbol),
            ("order", &self.order),
            ("window", &self.window),
            ("seed", &self.seed),
        ];
        let mut over = Config::new();
        for (key, value) in flags {
            if let Some(v) = value {
                over.set(key, v.clone());
            }
        }
        for kv in &self.set {
            let Some((k, v)) = kv.split_once('=') else {
                bail!("--set expects key=value, got `{kv}`");
            };
            over.set(k.trim(), v.trim());
        }
        cfg.merge(&over);
        Ok(cfg)
    }
}

fn write_json(path: Option<&Path>, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

/// One report goes out as is; a sweep as a JSON array, or as one CSV with
/// the parameter set prefixed to each series name.
fn write_reports(reports: &[ExperimentReport], path: &Path) -> Result<()> {
    if let [single] = reports {
        emit_report(single, ReportFormat::from_path(path), path)?;
        return Ok(());
    }
    match ReportFormat::from_path(path) {
        ReportFormat::Json => write_json(Some(path), &reports),
        ReportFormat::Csv => {
            let mut text = String::from("index,value,ratio,series\n");
            for r in reports {
                let tag = ["p", "q", "s"]
                    .iter()
                    .filter_map(|k| r.params.get(*k).map(|v| format!("{k}={v}")))
                    .collect::<Vec<_>>()
                    .join(" ");
                let mut one = r.clone();
                for rec in &mut one.records {
                    rec.series = format!("{tag} {}", rec.series);
                }
                text.extend(one.to_csv()?.lines().skip(1).map(|l| format!("{l}\n")));
            }
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Cover(CoverCmd::Verify {
            cover,
            window,
            order,
            out,
        }) => {
            let c = cover.cover()?;
            let report = c.verify(window.unwrap_or_else(|| c.interior_radius()), order)?;
            write_json(out.as_deref(), &report)?;
            if out.is_some() {
                println!(
                    "partition defect {:.2e}, overlap {}, support violations {}: {}",
                    report.partition_defect,
                    report.overlap,
                    report.support_violations.len(),
                    if report.passed { "pass" } else { "FAIL" }
                );
            }
            Ok(report.passed)
        }
        Command::Cover(CoverCmd::Make { cover, out }) => {
            let c = cover.cover()?;
            write_json(Some(&out), &c.spec())?;
            println!("{}", c.hash());
            Ok(true)
        }
        Command::Norm(NormCmd::Lp { p, input }) => {
            let f = read_signal(&input)?;
            println!("{}", f.lp_norm(p));
            Ok(true)
        }
        Command::Norm(NormCmd::Alpha {
            alpha,
            p,
            q,
            s,
            input,
            cover,
        }) => {
            let f = read_signal(&input)?;
            let cover = match cover {
                Some(path) => {
                    let spec: CoverSpec = serde_json::from_str(&fs::read_to_string(&path)?)
                        .with_context(|| format!("parsing {}", path.display()))?;
                    AlphaCover::from_spec(&spec)?
                }
                None => AlphaCover::for_grid(alpha.unwrap_or(0.5), f.grid())?,
            };
            if let Some(a) = alpha {
                if a != cover.alpha() {
                    bail!("--alpha {a} disagrees with the cover's alpha {}", cover.alpha());
                }
            }
            let params = QuasiNormParams::new(p, q, s, cover.alpha())?;
            println!("{}", alpha_norm(&f, &cover, &params)?);
            Ok(true)
        }
        Command::Op(OpCmd::Apply { symbol, input, out }) => {
            let spec: SymbolSpec = symbol.parse()?;
            let f = read_signal(&input)?;
            let sigma = spec.build(f.grid())?;
            write_signal(&out, &quantize_apply(sigma.as_ref(), &f)?)?;
            Ok(true)
        }
        Command::Signal(SignalCmd::Random {
            n,
            length,
            window,
            bumps,
            seed,
            out,
        }) => {
            let grid = Grid::new(1, n, length)?;
            write_signal(&out, &random_bandlimited(&grid, window, 1.0, bumps, seed)?)?;
            Ok(true)
        }
        Command::Signal(SignalCmd::Plateau {
            alpha,
            width,
            ell,
            n,
            length,
            out,
        }) => {
            let grid = Grid::new(1, n, length)?;
            let family = PlateauFamily::new(alpha, width, 1)?;
            write_signal(&out, &family.signal(&grid, &[ell])?)?;
            Ok(true)
        }
        Command::Exp(args) => {
            let cfg = args.config()?;
            let reports = cfg.run(&args.experiment)?;
            for r in &reports {
                let tag = ["p", "q", "s"]
                    .iter()
                    .filter_map(|k| r.params.get(*k).map(|v| format!("{k}={v}")))
                    .collect::<Vec<_>>()
                    .join(" ");
                let slopes = r
                    .fits
                    .iter()
                    .map(|f| match f.slope() {
                        Some(s) => format!("{}/{} {s:.3}", f.series, f.quantity),
                        None => format!("{}/{} n/a", f.series, f.quantity),
                    })
                    .collect::<Vec<_>>()
                    .join(", ");
                println!(
                    "{} [{tag}] {}: {} ({slopes})",
                    r.experiment,
                    r.verdict.conclusion,
                    if r.verdict.passed { "pass" } else { "FAIL" }
                );
            }
            if let Some(path) = &args.out {
                write_reports(&reports, path)?;
            }
            Ok(reports.iter().all(|r| r.verdict.passed))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
