use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mqubit::indicators::chi2_distance;
use mqubit::special::{self, DEFAULT_TOL};
use mqubit::sweep::{run_point, thread_pool, to_json_line, Mode, SweepConfig};
use mqubit::{DiscretizedDistribution, Error, SetupParams};

const EXIT_INVALID: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(name = "mqubit", version, about = "Stationary angle distributions of a monitored qubit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline at one (M, T) point.
    Point(PointArgs),
    /// Points along T at fixed M, as JSON lines.
    CrossSection(CrossSectionArgs),
    /// Resumable (M, T) grid written as JSON lines plus an overlay sidecar.
    Grid(GridArgs),
    /// Special-case classification.
    Special {
        #[command(subcommand)]
        command: SpecialCommand,
    },
    /// χ² distance between master-equation and Monte-Carlo distributions.
    CompareMcMe(PointArgs),
    /// Dump one stationary distribution.
    Adf(AdfArgs),
}

#[derive(Subcommand)]
enum SpecialCommand {
    Classify(ParamArgs),
}

#[derive(Args, Clone)]
struct ParamArgs {
    #[arg(long = "M")]
    m: f64,
    #[arg(long = "T")]
    t: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliMode {
    Me,
    Mc,
    Both,
}

impl From<CliMode> for Mode {
    fn from(m: CliMode) -> Self {
        match m {
            CliMode::Me => Mode::Me,
            CliMode::Mc => Mode::Mc,
            CliMode::Both => Mode::Both,
        }
    }
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Number of GC cells.
    #[arg(long, default_value_t = 10_000)]
    cells: usize,
    /// Monte-Carlo steps.
    #[arg(long, default_value_t = 1_000_000)]
    steps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = CliMode::Me)]
    mode: CliMode,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    /// Distance in (M, T) below which points are tagged near-special.
    #[arg(long, default_value_t = mqubit::sweep::DEFAULT_MARGIN)]
    margin: f64,
    #[arg(long, default_value_t = 0.3)]
    theta0: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> SweepConfig {
        SweepConfig {
            gamma: self.gamma,
            cells: self.cells,
            mc_steps: self.steps,
            me_max_iters: self.max_iters,
            seed: self.seed,
            output: self.out.clone(),
            mode: self.mode.into(),
            margin: self.margin,
            theta0: self.theta0,
            ..SweepConfig::default()
        }
    }
}

#[derive(Args)]
struct PointArgs {
    #[arg(long = "M")]
    m: f64,
    #[arg(long = "T")]
    t: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CrossSectionArgs {
    #[arg(long = "M")]
    m: f64,
    #[arg(long = "t-min", default_value_t = 0.125)]
    t_min: f64,
    #[arg(long = "t-max", default_value_t = 5.0)]
    t_max: f64,
    #[arg(long = "t-count", default_value_t = 40)]
    t_count: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long = "m-min", default_value_t = 0.125)]
    m_min: f64,
    #[arg(long = "m-max", default_value_t = 5.0)]
    m_max: f64,
    #[arg(long = "m-count", default_value_t = 40)]
    m_count: usize,
    #[arg(long = "t-min", default_value_t = 0.125)]
    t_min: f64,
    #[arg(long = "t-max", default_value_t = 5.0)]
    t_max: f64,
    #[arg(long = "t-count", default_value_t = 40)]
    t_count: usize,
    /// Write each point's distribution as CSV into this directory.
    #[arg(long)]
    dist_dir: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Me,
    Mc,
    Analytic,
}

#[derive(Args)]
struct AdfArgs {
    #[arg(long = "M")]
    m: f64,
    #[arg(long = "T")]
    t: f64,
    #[arg(long, value_enum, default_value_t = Method::Me)]
    method: Method,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    common: Common,
}

enum Failure {
    Invalid(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Format(_) => Failure::Runtime(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type Outcome = Result<bool, Failure>;

fn sink(out: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_distribution(d: &DiscretizedDistribution, format: Format, w: &mut dyn Write) -> Result<(), Failure> {
    match format {
        Format::Csv => d.write_csv(&mut *w)?,
        Format::Json => {
            let pts: Vec<_> = d
                .pr
                .iter()
                .enumerate()
                .map(|(i, &weight)| serde_json::json!({"theta": DiscretizedDistribution::center(i, d.n()), "weight": weight}))
                .collect();
            writeln!(w, "{}", to_json_line(&pts)?)?;
        }
    }
    Ok(())
}

fn validate_point(m: f64, t: f64, cfg: &SweepConfig) -> Result<(), Failure> {
    SetupParams::new(m, t, cfg.gamma)?;
    SweepConfig { m_range: [m, m], t_range: [t, t], ..cfg.clone() }.validate()?;
    Ok(())
}

fn point(a: &PointArgs) -> Outcome {
    let cfg = a.common.config();
    validate_point(a.m, a.t, &cfg)?;
    let out = run_point(a.m, a.t, 0, &cfg);
    let mut w = sink(&a.common.out)?;
    match a.format {
        Format::Json => writeln!(w, "{}", to_json_line(&out.result)?)?,
        Format::Csv => {
            if let Some(d) = out.distribution.as_ref().or(out.mc_distribution.as_ref()) {
                write_distribution(d, Format::Csv, &mut *w)?;
            }
        }
    }
    w.flush()?;
    Ok(out.result.error.is_none())
}

fn cross_section(a: &CrossSectionArgs) -> Outcome {
    let cfg = SweepConfig { t_range: [a.t_min, a.t_max], t_count: a.t_count, ..a.common.config() };
    validate_point(a.m, a.t_min, &cfg)?;
    let pool = thread_pool()?;
    let rows = pool.install(|| mqubit::run_cross_section(a.m, &cfg.t_values(), &cfg));
    let mut w = sink(&a.common.out)?;
    for r in &rows {
        writeln!(w, "{}", to_json_line(r)?)?;
    }
    w.flush()?;
    Ok(rows.iter().all(|r| r.error.is_none()))
}

fn grid(a: &GridArgs) -> Outcome {
    if a.common.out.is_none() {
        return Err(Failure::Invalid("grid needs --out".into()));
    }
    let cfg = SweepConfig {
        m_range: [a.m_min, a.m_max],
        m_count: a.m_count,
        t_range: [a.t_min, a.t_max],
        t_count: a.t_count,
        distribution_dir: a.dist_dir.clone(),
        ..a.common.config()
    };
    let summary = mqubit::run_grid(&cfg)?;
    eprintln!(
        "{} points: {} evaluated, {} already present, {} failed",
        summary.total, summary.evaluated, summary.skipped, summary.failures
    );
    Ok(summary.failures == 0)
}

fn classify(a: &ParamArgs) -> Outcome {
    let p = SetupParams::new(a.m, a.t, a.gamma)?;
    println!("{}", to_json_line(&special::classify(&p, DEFAULT_TOL))?);
    Ok(true)
}

fn compare(a: &PointArgs) -> Outcome {
    let cfg = SweepConfig { mode: Mode::Both, ..a.common.config() };
    validate_point(a.m, a.t, &cfg)?;
    let out = run_point(a.m, a.t, 0, &cfg);
    if let Some(e) = &out.result.error {
        return Err(Failure::Runtime(e.clone()));
    }
    let (Some(me), Some(mc)) = (&out.distribution, &out.mc_distribution) else {
        return Err(Failure::Runtime("missing distribution".into()));
    };
    let report = serde_json::json!({
        "M": a.m,
        "T": a.t,
        "cells": cfg.cells,
        "mc_steps": cfg.mc_steps,
        "chi2": chi2_distance(me, mc)?,
        "solve": out.result.solve,
    });
    let mut w = sink(&a.common.out)?;
    writeln!(w, "{}", to_json_line(&report)?)?;
    w.flush()?;
    Ok(true)
}

fn adf(a: &AdfArgs) -> Outcome {
    let mut cfg = a.common.config();
    validate_point(a.m, a.t, &cfg)?;
    let d = match a.method {
        Method::Analytic => {
            let p = SetupParams::new(a.m, a.t, cfg.gamma)?;
            let peaks = match special::classify(&p, DEFAULT_TOL).kind {
                special::SpecialKind::GammaZero => special::gamma_zero_adf(cfg.theta0, a.m * a.t),
                special::SpecialKind::Period2 { .. } => special::period2_adf(),
                special::SpecialKind::DoubleProjective => special::double_projective_adf(&p)?.adf,
                special::SpecialKind::ProjectiveMinus | special::SpecialKind::ProjectivePlus => {
                    let s = special::projective_series(&p, special::DEFAULT_SERIES_TERMS)?;
                    mqubit::AnalyticADF { peaks: s.peaks, initial_condition_preserving: false }
                }
                other => return Err(Failure::Invalid(format!("no closed form for {other:?}"))),
            };
            if let Format::Json = a.format {
                let mut w = sink(&a.common.out)?;
                writeln!(w, "{}", to_json_line(&peaks)?)?;
                w.flush()?;
                return Ok(true);
            }
            peaks.discretize(cfg.cells)
        }
        Method::Me | Method::Mc => {
            cfg.mode = if let Method::Me = a.method { Mode::Me } else { Mode::Mc };
            let out = run_point(a.m, a.t, 0, &cfg);
            if let Some(e) = out.result.error {
                return Err(Failure::Runtime(e));
            }
            out.distribution.or(out.mc_distribution).expect("one solver ran")
        }
    };
    let mut w = sink(&a.common.out)?;
    write_distribution(&d, a.format, &mut *w)?;
    w.flush()?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Point(a) => point(a),
        Command::CrossSection(a) => cross_section(a),
        Command::Grid(a) => grid(a),
        Command::Special { command: SpecialCommand::Classify(a) } => classify(a),
        Command::CompareMcMe(a) => compare(a),
        Command::Adf(a) => adf(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_PARTIAL),
        Err(Failure::Invalid(msg)) => {
            eprintln!("invalid configuration: {msg}");
            ExitCode::from(EXIT_INVALID)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
