mod input;
mod theory_check;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use probit_kde::harness::{overlay_svg, run_benchmark, Overlay};
use probit_kde::{
    run_estimator, unit_grid, BandwidthKind, BenchConfig, BoundaryPolicy, EstimatorLabel, Method,
    PipelineOutput, ReportFormat, Selector, UnitSample, WeightConvention, WeightScheme,
};
use serde_json::json;

/// Density estimation on the unit interval through the probit transformation.
#[derive(Debug, Parser)]
#[command(name = "probit-kde", version)]
struct Cli {
    /// Worker threads for selection and benchmarking [default: available parallelism]
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate a density from a file of observations and write it as CSV and JSON.
    Estimate(EstimateArgs),
    /// Select the smoothing parameter only and print it as JSON.
    SelectBandwidth(SelectArgs),
    /// Run a Monte-Carlo benchmark described by a JSON config.
    Bench(BenchArgs),
    /// Print leading-order bias and variance for known densities.
    TheoryCheck(theory_check::TheoryArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Conventional,
    Dai,
    Naive,
    Amended,
    T1,
    T2,
    Raw1,
    Raw2,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Conventional => Method::Conventional,
            MethodArg::Dai => Method::Dai,
            MethodArg::Naive => Method::Naive,
            MethodArg::Amended => Method::Amended,
            MethodArg::T1 => Method::T1,
            MethodArg::T2 => Method::T2,
            MethodArg::Raw1 => Method::Raw1,
            MethodArg::Raw2 => Method::Raw2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BandwidthArg {
    Fixed,
    Knn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SelectArg {
    /// Use --h or --alpha as given
    None,
    /// Unweighted least-squares cross-validation
    Lscv,
    /// Weighted cross-validation with the square-root weight
    Wlscv1,
    /// Weighted cross-validation with the full weight
    Wlscv2,
    /// Direct plug-in rule (fixed bandwidth)
    Dpi,
    /// Normal reference rule (fixed bandwidth)
    Nrr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConventionArg {
    /// Weights φ/f̂ and their square root; emphasizes the tails
    Sec4,
    /// The reciprocal ratios
    Sec5,
}

impl From<ConventionArg> for WeightConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Sec4 => WeightConvention::Sec4,
            ConventionArg::Sec5 => WeightConvention::Sec5,
        }
    }
}

/// Estimator choice shared by `estimate` and `select-bandwidth`.
#[derive(Debug, Args)]
struct EstimatorArgs {
    /// Input file with one value in (0,1) per line
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,

    /// Estimator
    #[arg(long, value_enum, default_value = "t2")]
    method: MethodArg,

    /// Bandwidth kind [default: knn for t1/t2/raw1/raw2, fixed otherwise]
    #[arg(long, value_enum)]
    bandwidth: Option<BandwidthArg>,

    /// Fixed bandwidth h; implies --bandwidth fixed
    #[arg(long, value_name = "H", conflicts_with = "alpha")]
    h: Option<f64>,

    /// Nearest-neighbour fraction α in (0,1]; implies --bandwidth knn
    #[arg(long, value_name = "ALPHA")]
    alpha: Option<f64>,

    /// Bandwidth selector [default: wlscv1 for t1/t2, lscv for raw1/raw2, dpi
    /// for the kernel estimators]. Prefer wlscv2 for samples smaller than 100.
    #[arg(long, value_enum)]
    select: Option<SelectArg>,

    /// Direction of the cross-validation weight
    #[arg(long, value_enum, default_value = "sec4")]
    weight_convention: ConventionArg,

    /// Number of equally spaced evaluation points i/(N+1)
    #[arg(long, value_name = "N", default_value_t = 999)]
    grid: usize,

    /// Admit values at exactly 0 or 1 by clamping them into [EPS, 1-EPS]
    #[arg(long, value_name = "EPS")]
    clamp: Option<f64>,

    /// Seed recorded in the output metadata; the estimators are deterministic
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    estimator: EstimatorArgs,

    /// Output directory for estimate.csv and estimate.json
    #[arg(long, value_name = "DIR")]
    out: PathBuf,

    /// Also write estimate.svg
    #[arg(long)]
    svg: bool,
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[command(flatten)]
    estimator: EstimatorArgs,

    /// Write the JSON to this file instead of standard output
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Benchmark configuration (JSON)
    #[arg(long, value_name = "FILE")]
    config: PathBuf,

    /// Output directory for bench.csv and bench.json
    #[arg(long, value_name = "DIR")]
    out: PathBuf,

    /// Override the config's masterSeed
    #[arg(long)]
    seed: Option<u64>,

    /// Also write one overlay SVG per density and sample size
    #[arg(long)]
    svg: bool,
}

/// Why a command failed; decides the exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<probit_kde::Error> for Failure {
    fn from(e: probit_kde::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

impl From<input::InputError> for Failure {
    fn from(e: input::InputError) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Usage(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("cannot configure threads: {e}")))?;
    }
    match cli.command {
        Command::Estimate(a) => cmd_estimate(&a),
        Command::SelectBandwidth(a) => cmd_select(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::TheoryCheck(a) => theory_check::run(&a),
    }
}

impl EstimatorArgs {
    fn label(&self) -> Result<EstimatorLabel, Failure> {
        let method = Method::from(self.method);
        let bandwidth = match (self.bandwidth, self.h, self.alpha) {
            (Some(BandwidthArg::Fixed), _, Some(_)) => {
                return Err(Failure::Usage("--alpha needs --bandwidth knn".into()))
            }
            (Some(BandwidthArg::Knn), Some(_), _) => {
                return Err(Failure::Usage("--h needs --bandwidth fixed".into()))
            }
            (Some(BandwidthArg::Fixed), _, _) | (None, Some(_), _) => BandwidthKind::Fixed,
            (Some(BandwidthArg::Knn), _, _) | (None, _, Some(_)) => BandwidthKind::Knn,
            (None, None, None) => method.default_bandwidth(),
        };
        let given = self.h.map(Selector::H).or(self.alpha.map(Selector::Alpha));
        let selector = match (self.select, given) {
            (None | Some(SelectArg::None), Some(s)) => s,
            (Some(SelectArg::None), None) => {
                return Err(Failure::Usage("--select none needs --h or --alpha".into()))
            }
            (Some(_), Some(_)) => {
                return Err(Failure::Usage(
                    "--h/--alpha fix the parameter; drop them or use --select none".into(),
                ))
            }
            (Some(SelectArg::Lscv), None) => Selector::Cv(WeightScheme::Lscv),
            (Some(SelectArg::Wlscv1), None) => Selector::Cv(WeightScheme::Wlscv1),
            (Some(SelectArg::Wlscv2), None) => Selector::Cv(WeightScheme::Wlscv2),
            (Some(SelectArg::Dpi), None) => Selector::Dpi,
            (Some(SelectArg::Nrr), None) => Selector::Nrr,
            (None, None) => format!("{method}:{bandwidth}")
                .parse::<EstimatorLabel>()
                .map_err(Failure::from)?
                .selector,
        };
        Ok(EstimatorLabel::new(method, bandwidth, selector)?)
    }

    fn policy(&self) -> Result<BoundaryPolicy, Failure> {
        let policy = match self.clamp {
            Some(epsilon) => BoundaryPolicy::Clamp { epsilon },
            None => BoundaryPolicy::Reject,
        };
        policy.validate()?;
        Ok(policy)
    }

    /// Validates every flag, reads the data and runs the estimator.
    fn run(&self, grid_points: usize) -> Result<(PipelineOutput, usize), Failure> {
        let label = self.label()?;
        let policy = self.policy()?;
        if grid_points == 0 {
            return Err(Failure::Usage("--grid must be at least 1".into()));
        }
        let values = input::read_values(&self.input, self.clamp.is_some())?;
        let n = values.len();
        let xs = UnitSample::new(values)?;
        let out = run_estimator(
            &label,
            &xs,
            &unit_grid(grid_points),
            policy,
            self.weight_convention.into(),
        )?;
        Ok((out, n))
    }
}

fn selection_json(out: &PipelineOutput) -> serde_json::Value {
    match &out.selection {
        Some(s) => json!({
            "scheme": s.scheme,
            "convention": s.convention,
            "criterionValue": s.criterion_value,
            "trace": s.trace,
        }),
        None => json!({ "rule": out.label.selector.to_string() }),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| io_failure(path, e))
}

fn cmd_estimate(a: &EstimateArgs) -> Result<(), Failure> {
    let (out, n) = a.estimator.run(a.estimator.grid)?;
    fs::create_dir_all(&a.out).map_err(|e| io_failure(&a.out, e))?;
    let est = &out.estimate;

    let mut csv = String::from("x,fhat\n");
    for (x, f) in est.grid.iter().zip(&est.values) {
        csv.push_str(&format!("{x},{f}\n"));
    }
    write_file(&a.out.join("estimate.csv"), &csv)?;

    let meta = json!({
        "estimator": out.label,
        "method": est.metadata.estimator,
        "bandwidth": est.metadata.bandwidth,
        "parameter": out.parameter,
        "selection": selection_json(&out),
        "seed": a.estimator.seed,
        "n": n,
        "gridPoints": est.grid.len(),
        "normalized": est.normalized,
        "mass": est.mass()?,
        "massBeforeRenormalization": est.metadata.mass_before_renormalization,
        "clampEpsilon": est.metadata.clamp_epsilon,
    });
    let mut text = serde_json::to_string_pretty(&meta).map_err(|e| Failure::Usage(e.to_string()))?;
    text.push('\n');
    write_file(&a.out.join("estimate.json"), &text)?;

    if a.svg {
        let overlay = Overlay {
            density: a.estimator.input.display().to_string(),
            n,
            grid: est.grid.clone(),
            truth: Vec::new(),
            curves: vec![(out.label.to_string(), est.values.clone())],
        };
        write_file(&a.out.join("estimate.svg"), &overlay_svg(&overlay))?;
    }
    eprintln!(
        "{}: parameter {} written to {}",
        out.label,
        out.parameter,
        a.out.display()
    );
    Ok(())
}

fn cmd_select(a: &SelectArgs) -> Result<(), Failure> {
    let (out, n) = a.estimator.run(a.estimator.grid)?;
    let result = json!({
        "estimator": out.label,
        "bandwidth": out.estimate.metadata.bandwidth,
        "parameter": out.parameter,
        "selection": selection_json(&out),
        "seed": a.estimator.seed,
        "n": n,
    });
    let mut text = serde_json::to_string_pretty(&result).map_err(|e| Failure::Usage(e.to_string()))?;
    text.push('\n');
    match &a.out {
        Some(path) => write_file(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_bench(a: &BenchArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&a.config).map_err(|e| io_failure(&a.config, e))?;
    let mut cfg: BenchConfig = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("{}: invalid config: {e}", a.config.display())))?;
    if let Some(seed) = a.seed {
        cfg.master_seed = seed;
    }
    cfg.validate()?;
    let res = run_benchmark(&cfg)?;
    let mut formats = vec![ReportFormat::Csv, ReportFormat::Json];
    if a.svg {
        formats.push(ReportFormat::Svg);
    }
    probit_kde::harness::emit_report(&res, &formats, &a.out)?;
    let failures = res.failure_count();
    if failures > 0 {
        eprintln!("warning: {failures} cell(s) failed; see the status column of bench.csv");
    }
    eprintln!("{} cells written to {}", res.cells.len(), a.out.display());
    Ok(())
}
