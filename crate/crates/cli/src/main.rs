use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use uem::analysis::checks::property_suite;
use uem::analysis::sweep::SweepSpec;
use uem::analysis::{error_sweep, landscape_scan};
use uem::empirical::{Estimate, EstimatorConfig, EstimatorRegistry, InitKind};
use uem::fixed_point::{find_fixed_points_1d, DEFAULT_SCAN_POINTS};
use uem::io::{fmt_f64, load_dataset, save_dataset, write_json, SCHEMA_VERSION};
use uem::model::{sample, Dataset, MixtureParams};
use uem::population::{PopMeanMap1D, PopWeightMap, SignalOrthogonalMap};
use uem::quadrature::QuadratureGrid;

#[derive(Parser)]
#[command(name = "uem", version, about = "EM for unbalanced symmetric two-component Gaussian mixtures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a dataset and write it as CSV with a JSON sidecar.
    Sample(SampleArgs),
    /// Run one estimator on a dataset file or on freshly sampled data.
    Estimate(Box<EstimateArgs>),
    /// Evaluate population maps and their fixed points.
    #[command(subcommand)]
    Population(PopulationCommand),
    /// Run a Monte Carlo error sweep described by a JSON spec.
    Sweep(SweepArgs),
    /// Run the deterministic property checks and print PASS/FAIL lines.
    Check(CheckArgs),
}

#[derive(Args, Clone)]
#[command(allow_negative_numbers = true)]
struct ModelArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    n: usize,
    /// Signal strength; θ* = eta·e₁.
    #[arg(long)]
    eta: f64,
    /// Weight imbalance ρ* = P[S=1] − P[S=−1].
    #[arg(long)]
    rho: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ModelArgs {
    fn dataset(&self) -> Result<Dataset> {
        let params = MixtureParams::along_first_axis(self.d, self.eta, self.rho)?;
        Ok(sample(&params, self.n, self.seed)?)
    }
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// CSV path; the sidecar goes next to it with a `.json` extension.
    #[arg(long, default_value = "dataset.csv")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Zero,
    ScaledMean,
    RandomSphere,
}

impl From<InitArg> for InitKind {
    fn from(v: InitArg) -> Self {
        match v {
            InitArg::Zero => InitKind::Zero,
            InitArg::ScaledMean => InitKind::ScaledMean,
            InitArg::RandomSphere => InitKind::RandomSphere,
        }
    }
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct EstimateArgs {
    /// Registered estimator name (see `--list`).
    #[arg(long, required_unless_present = "list")]
    estimator: Option<String>,
    /// List estimator names and exit.
    #[arg(long)]
    list: bool,
    /// Dataset CSV written by `sample`.
    #[arg(long, conflicts_with_all = ["d", "n", "eta", "rho"])]
    data: Option<PathBuf>,
    #[arg(long, requires_all = ["n", "eta", "rho"])]
    d: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    /// Seed of the sampled data.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Estimator config as JSON; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    init: Option<InitArg>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Run exactly `max_iter` steps.
    #[arg(long)]
    fixed_steps: bool,
    /// Truncation level C_ρ of the weight iteration.
    #[arg(long)]
    truncation: Option<f64>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    phases: Option<usize>,
    /// Frozen mean for weight estimators, comma separated.
    #[arg(long, value_delimiter = ',')]
    theta: Option<Vec<f64>>,
    /// Seed of the estimator's random start.
    #[arg(long)]
    estimator_seed: Option<u64>,
    /// Estimate JSON path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the iterate trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

impl EstimateArgs {
    fn config(&self) -> Result<EstimatorConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).map_err(|e| uem::Error::InvalidArgument(format!("config: {e}")))?
            }
            None => EstimatorConfig::default(),
        };
        if let Some(v) = self.init {
            cfg.init_kind = v.into();
        }
        if let Some(v) = self.max_iter {
            cfg.max_iter = v;
        }
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        cfg.fixed_steps |= self.fixed_steps;
        if self.truncation.is_some() {
            cfg.truncation = self.truncation;
        }
        if let Some(v) = self.c0 {
            cfg.c0 = v;
        }
        if let Some(v) = self.kappa {
            cfg.kappa = v;
        }
        if let Some(v) = self.phases {
            cfg.phases = v;
        }
        if self.theta.is_some() {
            cfg.theta = self.theta.clone();
        }
        if let Some(v) = self.estimator_seed {
            cfg.seed = v;
        }
        Ok(cfg)
    }

    fn dataset(&self) -> Result<Dataset> {
        if let Some(path) = &self.data {
            return Ok(load_dataset(path)?);
        }
        match (self.d, self.n, self.eta, self.rho) {
            (Some(d), Some(n), Some(eta), Some(rho)) => ModelArgs { d, n, eta, rho, seed: self.seed }.dataset(),
            _ => Err(uem::Error::InvalidArgument("pass --data or all of --d --n --eta --rho".into()).into()),
        }
    }
}

#[derive(Subcommand)]
enum PopulationCommand {
    /// Fixed points of the one-dimensional mean map.
    FixedPoints(FixedPointArgs),
    /// Fixed point ρ_# of the weight map with the mean frozen at a multiple of θ*.
    WeightFixedPoint(WeightFixedPointArgs),
    /// Count negative fixed points over a (δ, η) grid; writes CSV.
    Landscape(LandscapeArgs),
    /// Evaluate f, its derivatives, and F, G at one point.
    Eval(EvalArgs),
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct FixedPointArgs {
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    eta: f64,
    /// Scan interval; defaults to [−(η+2), η+2].
    #[arg(long)]
    lo: Option<f64>,
    #[arg(long)]
    hi: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SCAN_POINTS)]
    scan_points: usize,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct WeightFixedPointArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long)]
    eta: f64,
    #[arg(long)]
    rho: f64,
    /// θ = theta_scale·θ*.
    #[arg(long, default_value_t = 1.0)]
    theta_scale: f64,
}

#[derive(Args)]
struct LandscapeArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    delta_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    eta_grid: Vec<f64>,
    /// CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct EvalArgs {
    #[arg(long)]
    eta: f64,
    /// True weight parameter δ* = (1−ρ*)/2.
    #[arg(long)]
    delta: f64,
    /// Weight used inside the iteration; δ* when absent.
    #[arg(long)]
    delta_iter: Option<f64>,
    /// Signal coordinate a (and the one-dimensional θ).
    #[arg(long)]
    theta: f64,
    /// Orthogonal coordinate b.
    #[arg(long, default_value_t = 0.0)]
    b: f64,
}

#[derive(Args)]
struct SweepArgs {
    /// SweepSpec JSON.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    /// Directory for `sweep.csv` and `summary.json`.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => write_json(value, path)?,
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

#[derive(Serialize)]
struct EstimateReport<'a> {
    schema_version: u32,
    n: usize,
    d: usize,
    #[serde(flatten)]
    estimate: &'a Estimate,
    notes: &'a [String],
}

fn cmd_sample(args: &SampleArgs) -> Result<()> {
    let data = args.model.dataset()?;
    save_dataset(&data, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}

fn cmd_estimate(args: &EstimateArgs) -> Result<()> {
    let registry = EstimatorRegistry::with_defaults();
    if args.list {
        for name in registry.names() {
            println!("{name}\t{}", registry.get(name)?.describe());
        }
        return Ok(());
    }
    let name = args.estimator.as_deref().expect("required by clap");
    registry.get(name)?;
    let cfg = args.config()?;
    let data = args.dataset()?;
    let est = registry.run(name, &data, &cfg)?;
    let report = EstimateReport {
        schema_version: SCHEMA_VERSION,
        n: data.n(),
        d: data.d(),
        estimate: &est,
        notes: &est.trace.notes,
    };
    if let Some(path) = &args.trace {
        let w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        est.trace.write_csv(w)?;
    }
    emit_json(&report, args.out.as_deref())
}

fn cmd_population(cmd: &PopulationCommand) -> Result<()> {
    match cmd {
        PopulationCommand::FixedPoints(a) => {
            let map = PopMeanMap1D::matched(a.eta, a.delta)?;
            let lo = a.lo.unwrap_or(-(a.eta + 2.0));
            let hi = a.hi.unwrap_or(a.eta + 2.0);
            let mut roots = find_fixed_points_1d(|t| map.eval(t), lo, hi, a.scan_points)?;
            roots.reverse();
            emit_json(
                &json!({
                    "schema_version": SCHEMA_VERSION,
                    "delta": a.delta,
                    "eta": a.eta,
                    "interval": [lo, hi],
                    "roots": roots,
                }),
                None,
            )
        }
        PopulationCommand::WeightFixedPoint(a) => {
            let params = MixtureParams::along_first_axis(a.d, a.eta, a.rho)?;
            let theta: Vec<f64> = params.theta_star.iter().map(|v| a.theta_scale * v).collect();
            let map = PopWeightMap::with_standard_grid(&theta, &params.theta_star, a.rho)?;
            let rho_sharp = map.find_fixed_point()?;
            emit_json(
                &json!({
                    "schema_version": SCHEMA_VERSION,
                    "eta": a.eta,
                    "rho_star": a.rho,
                    "theta_scale": a.theta_scale,
                    "theta": theta,
                    "deriv_at_one": map.deriv_at_one(),
                    "rho_sharp": rho_sharp,
                    "below_rho_star": rho_sharp.map(|r| r < a.rho),
                }),
                None,
            )
        }
        PopulationCommand::Landscape(a) => {
            let rows = landscape_scan(&a.delta_grid, &a.eta_grid, QuadratureGrid::standard())?;
            let mut w = output(a.out.as_deref())?;
            writeln!(w, "delta,eta,count,roots")?;
            for r in rows {
                let roots: Vec<String> = r.roots.iter().map(|v| fmt_f64(*v)).collect();
                writeln!(w, "{},{},{},{}", fmt_f64(r.delta), fmt_f64(r.eta), r.count, roots.join(";"))?;
            }
            w.flush()?;
            Ok(())
        }
        PopulationCommand::Eval(a) => {
            let delta_iter = a.delta_iter.unwrap_or(a.delta);
            let grid = QuadratureGrid::standard();
            let map = PopMeanMap1D::new(a.eta, a.delta, delta_iter, grid.clone())?;
            let (f, g) = SignalOrthogonalMap::new(a.eta, a.delta, delta_iter, grid)?.step(a.theta, a.b);
            emit_json(
                &json!({
                    "schema_version": SCHEMA_VERSION,
                    "eta": a.eta,
                    "delta_star": a.delta,
                    "delta_iter": delta_iter,
                    "theta": a.theta,
                    "b": a.b,
                    "f": map.eval(a.theta),
                    "f_prime": map.deriv(a.theta, 1)?,
                    "f_second": map.deriv(a.theta, 2)?,
                    "signal_F": f,
                    "orthogonal_G": g,
                }),
                None,
            )
        }
    }
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let text = fs::read_to_string(&args.spec).with_context(|| format!("reading {}", args.spec.display()))?;
    let mut spec: SweepSpec =
        serde_json::from_str(&text).map_err(|e| uem::Error::InvalidArgument(format!("sweep spec: {e}")))?;
    if let Some(t) = args.trials {
        spec.trials = t;
    }
    if let Some(s) = args.base_seed {
        spec.base_seed = s;
    }
    let result = error_sweep(&spec, &EstimatorRegistry::with_defaults())?;
    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let csv_path = args.out_dir.join("sweep.csv");
    let w = BufWriter::new(File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?);
    result.write_csv(w)?;
    write_json(&result.summary(), &args.out_dir.join("summary.json"))?;
    let failed = result.rows.iter().filter(|r| r.error.is_some()).count();
    eprintln!("{} rows ({failed} with estimator errors) -> {}", result.rows.len(), args.out_dir.display());
    Ok(())
}

/// Returns whether every check passed.
fn cmd_check(args: &CheckArgs) -> Result<bool> {
    let outcomes = property_suite();
    let all = outcomes.iter().all(|o| o.passed);
    match args.format {
        Format::Text => {
            for o in &outcomes {
                println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
            }
        }
        Format::Json => {
            emit_json(&json!({ "schema_version": SCHEMA_VERSION, "passed": all, "checks": outcomes }), None)?
        }
    }
    Ok(all)
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("UEM_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|t| *t > 0)
        .ok_or_else(|| uem::Error::InvalidArgument(format!("UEM_THREADS={value} must be a positive integer")))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    configure_threads()?;
    match &cli.command {
        Command::Sample(a) => cmd_sample(a)?,
        Command::Estimate(a) => cmd_estimate(a)?,
        Command::Population(c) => cmd_population(c)?,
        Command::Sweep(a) => cmd_sweep(a)?,
        Command::Check(a) => return cmd_check(a),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            let usage = err.chain().any(|e| e.downcast_ref::<uem::Error>().is_some_and(uem::Error::is_usage));
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
