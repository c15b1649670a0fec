use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use paradiff::calibration::Calibration;
use paradiff::experiments::{
    build_family, calibrate, emit_report, loss_rate_experiment, theoretical_lambda, LossConfig, ReportInputs, Suite,
    SuiteConfig, VerifyReport,
};
use paradiff::random::band_limited_real;
use paradiff::solver::{integrate, save_trajectory, CauchyData, IntegrateConfig, Source, TrajectoryMeta};
use paradiff::{Grid, GridFunction};

/// Environment variable naming the default output directory.
const OUT_ENV: &str = "PARADIFF_OUT";
const DEFAULT_OUT: &str = "paradiff-out";

#[derive(Parser, Debug)]
#[command(name = "paradiff", version, about = "Paraproduct estimates and loss-of-derivatives experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Grid points (power of two).
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Final time.
    #[arg(long = "T", global = true)]
    t_end: Option<f64>,
    /// Coefficient family id.
    #[arg(long, global = true)]
    family: Option<String>,
    /// Family parameter as key=value; repeatable or comma separated.
    #[arg(long = "params", global = true, value_delimiter = ',')]
    params: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory [env: PARADIFF_OUT, default: paradiff-out].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// TOML file with defaults for the flags above.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run verification suites against a calibration; exit 0 iff every check passes.
    Verify(VerifyArgs),
    /// Measure calibrated constants and write a calibration file.
    Calibrate(SuiteArgs),
    /// Measure the loss of derivatives for one family.
    LossRate(LossArgs),
    /// Integrate one Cauchy problem and save the trajectory.
    Solve(SolveArgs),
    /// Run suites and write CSV, JSON and gnuplot files.
    Report(VerifyArgs),
}

#[derive(Args, Debug)]
struct SuiteArgs {
    /// Suite to run (repeatable); all suites when omitted.
    #[arg(long = "suite")]
    suites: Vec<String>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    suites: SuiteArgs,
    /// Calibration file; the built-in calibration when omitted.
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Multiply every calibrated constant by this factor before checking.
    #[arg(long, default_value_t = 1.0)]
    scale_calibration: f64,
}

#[derive(Args, Debug)]
struct LossArgs {
    /// Launch frequencies (comma separated).
    #[arg(long, value_delimiter = ',')]
    k0: Vec<i64>,
    /// Growth allowance M.
    #[arg(long)]
    m: Option<f64>,
    /// Reference Sobolev index.
    #[arg(long)]
    s: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Part {
    F1,
    F2,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Launch a single right-moving mode e^{ikx} instead of seeded random data.
    #[arg(long)]
    k0: Option<i64>,
    /// Amplitude of the source A cos(t) sin(x).
    #[arg(long, default_value_t = 0.0)]
    source: f64,
    /// Which part of the source split receives it.
    #[arg(long, value_enum, default_value = "f2")]
    source_part: Part,
    /// Keep every n-th step.
    #[arg(long, default_value_t = 10)]
    stride: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    grid: Option<usize>,
    dt: Option<f64>,
    #[serde(rename = "T")]
    t_end: Option<f64>,
    family: Option<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    #[serde(default)]
    params: BTreeMap<String, f64>,
}

/// Flags merged over the config file.
struct Settings {
    grid: Option<usize>,
    dt: Option<f64>,
    t_end: Option<f64>,
    family: Option<String>,
    params: BTreeMap<String, f64>,
    seed: Option<u64>,
    out: PathBuf,
}

fn parse_params(items: &[String]) -> anyhow::Result<BTreeMap<String, f64>> {
    let mut map = BTreeMap::new();
    for item in items.iter().filter(|s| !s.trim().is_empty()) {
        let (k, v) = item.split_once('=').with_context(|| format!("parameter `{item}` is not key=value"))?;
        let value: f64 = v.trim().parse().with_context(|| format!("parameter `{k}` has non-numeric value `{v}`"))?;
        map.insert(k.trim().to_string(), value);
    }
    Ok(map)
}

fn settings(common: &Common) -> anyhow::Result<Settings> {
    let file = match &common.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str::<FileConfig>(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => FileConfig::default(),
    };
    let mut params = file.params;
    params.extend(parse_params(&common.params)?);
    let out = common
        .out
        .clone()
        .or(file.out)
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    Ok(Settings {
        grid: common.grid.or(file.grid),
        dt: common.dt.or(file.dt),
        t_end: common.t_end.or(file.t_end),
        family: common.family.clone().or(file.family),
        params,
        seed: common.seed.or(file.seed),
        out,
    })
}

fn suites(args: &SuiteArgs) -> anyhow::Result<Vec<Suite>> {
    if args.suites.is_empty() {
        return Ok(Suite::ALL.to_vec());
    }
    Ok(args.suites.iter().map(|s| s.parse()).collect::<paradiff::Result<_>>()?)
}

fn suite_config(s: &Settings) -> SuiteConfig {
    let mut cfg = SuiteConfig::default();
    if let Some(n) = s.grid {
        cfg.grid_n = n;
    }
    if let Some(t) = s.t_end {
        cfg.t_end = t;
    }
    if let Some(seed) = s.seed {
        cfg.seed = seed;
    }
    cfg
}

fn write_json(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, format!("{text}\n")).with_context(|| format!("writing {}", path.display()))
}

fn summarize(report: &VerifyReport) {
    let failed: Vec<_> = report.failures().collect();
    eprintln!("{} checks, {} failed", report.checks.len(), failed.len());
    for c in failed {
        eprintln!("FAIL {} measured={:e} threshold={:e}", c.id, c.measured, c.threshold);
    }
}

fn load_calibration(args: &VerifyArgs) -> anyhow::Result<Calibration> {
    let cal = match &args.calibration {
        Some(p) => Calibration::load(p)?,
        None => Calibration::embedded()?,
    };
    Ok(cal.scaled(args.scale_calibration))
}

fn run_verify(s: &Settings, args: &VerifyArgs, emit: bool) -> anyhow::Result<bool> {
    let cal = load_calibration(args)?;
    let cfg = suite_config(s);
    let (report, artifacts) = paradiff::experiments::verify_suite(&suites(&args.suites)?, &cfg, &cal)?;
    let json = report.to_json();
    println!("{json}");
    if emit {
        let inputs = ReportInputs { verify: Some(&report), loss: &artifacts.loss, energy: &artifacts.energy };
        for p in emit_report(&inputs, &s.out)? {
            eprintln!("wrote {}", p.display());
        }
    } else {
        write_json(&s.out.join("verify.json"), &json)?;
    }
    summarize(&report);
    Ok(report.pass)
}

fn run_calibrate(s: &Settings, args: &SuiteArgs) -> anyhow::Result<bool> {
    let cfg = suite_config(s);
    let (cal, report, _) = calibrate(&suites(args)?, &cfg)?;
    let path = s.out.join("calibration.toml");
    cal.save(&path)?;
    eprintln!("wrote {}", path.display());
    println!("{}", report.to_json());
    summarize(&report);
    Ok(report.pass)
}

fn family(s: &Settings) -> anyhow::Result<paradiff::experiments::CoefficientFamily> {
    let Some(id) = &s.family else { bail!("--family is required") };
    Ok(build_family(id, &s.params)?)
}

fn run_loss(s: &Settings, args: &LossArgs) -> anyhow::Result<bool> {
    let fam = family(s)?;
    let mut cfg = LossConfig::default();
    if let Some(n) = s.grid {
        cfg.grid_n = n;
    }
    if let Some(dt) = s.dt {
        cfg.dt = dt;
    }
    if let Some(t) = s.t_end {
        cfg.t_end = t;
    }
    if !args.k0.is_empty() {
        cfg.frequencies = args.k0.clone();
    }
    if let Some(m) = args.m {
        cfg.m = m;
    }
    if let Some(sv) = args.s {
        cfg.s = sv;
    }
    let fit = loss_rate_experiment(&fam, &cfg)?;
    let cal = Calibration::embedded()?;
    let (_, lambda) = theoretical_lambda(&fam, Grid::line(cfg.grid_n)?, cfg.t_end, &cal.k0()?)?;
    let summary = serde_json::json!({
        "family": fit.family,
        "params": fit.params,
        "frequencies": fit.frequencies,
        "lambda_emp": fit.lambda_emp,
        "lambda_theory": lambda,
        "fit_residual": fit.fit_residual,
        "inconclusive": fit.inconclusive,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    let fits = [fit];
    for p in emit_report(&ReportInputs { verify: None, loss: &fits, energy: &[] }, &s.out)? {
        eprintln!("wrote {}", p.display());
    }
    if fits[0].inconclusive {
        eprintln!("fit inconclusive (residual {:.3}, clamped {})", fits[0].fit_residual, fits[0].clamped);
    }
    Ok(!fits[0].inconclusive)
}

fn run_solve(s: &Settings, args: &SolveArgs) -> anyhow::Result<bool> {
    let fam = family(s)?;
    let op = fam.operator();
    let seed = s.seed.unwrap_or(0);
    let grid = Grid::line(s.grid.unwrap_or(256))?;
    let data = match args.k0 {
        Some(k) => {
            let u0 = GridFunction::plane_wave(grid, [k, 0]);
            let c = fam.coefficient.evaluate(0.0, &[0.0]).sqrt();
            let u1 = u0.derivative(0).scale(-c);
            CauchyData { u0, u1 }
        }
        None => {
            let band = grid.points_per_axis() / 8;
            CauchyData { u0: band_limited_real(grid, seed, 0, 2.0, band), u1: band_limited_real(grid, seed, 1, 1.0, band) }
        }
    };
    let amp = args.source;
    let f = move |t: f64| GridFunction::from_real_fn(grid, |x| amp * t.cos() * x[0].sin());
    let source = if amp == 0.0 {
        Source::none()
    } else {
        match args.source_part {
            Part::F1 => Source { f1: Some(std::sync::Arc::new(f)), f2: None },
            Part::F2 => Source::single(f),
        }
    };
    let cfg = IntegrateConfig::new(s.dt.unwrap_or(1e-3), s.t_end.unwrap_or(1.0)).with_stride(args.stride);
    let traj = integrate(&op, grid, &data, &source, &cfg)?;
    let meta = TrajectoryMeta::describe(&traj, fam.id.clone(), fam.params.clone(), seed);
    let dir = s.out.join("trajectory");
    save_trajectory(&dir, &traj, &meta)?;
    let last = traj.last();
    let summary = serde_json::json!({
        "family": fam.id,
        "snapshots": traj.snapshots.len(),
        "dt": traj.dt,
        "c_max": traj.c_max,
        "t_end": last.t,
        "u_l2_final": last.u.l2_norm(),
        "trajectory": dir,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = settings(&cli.common).and_then(|s| match &cli.command {
        Command::Verify(a) => run_verify(&s, a, false),
        Command::Report(a) => run_verify(&s, a, true),
        Command::Calibrate(a) => run_calibrate(&s, a),
        Command::LossRate(a) => run_loss(&s, a),
        Command::Solve(a) => run_solve(&s, a),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_parse_and_reject_garbage() {
        let m = parse_params(&["A=1.5".into(), " beta = 0.25 ".into(), "".into()]).unwrap();
        assert_eq!(m.get("A"), Some(&1.5));
        assert_eq!(m.get("beta"), Some(&0.25));
        assert!(parse_params(&["A".into()]).is_err());
        assert!(parse_params(&["A=x".into()]).is_err());
    }

    #[test]
    fn flags_override_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        fs::write(&p, "grid = 64\nseed = 9\n[params]\nA = 2.0\n").unwrap();
        let common = Common { grid: Some(128), params: vec!["A=3".into()], config: Some(p), out: Some("x".into()), ..Default::default() };
        let s = settings(&common).unwrap();
        assert_eq!((s.grid, s.seed, s.params["A"]), (Some(128), Some(9), 3.0));
        assert_eq!(s.out, PathBuf::from("x"));
    }
}
