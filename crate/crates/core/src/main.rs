use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use infsample::data::{self, Dataset, Noise, SplitSpec, SynthSpec};
use infsample::design::{allocate, floor_alpha, poisson_draw};
use infsample::fit::{fit_weighted, FitOptions};
use infsample::harness::{emit, run_experiment, ExperimentConfig, Format};
use infsample::influence::{importance_scores, ImportanceScheme, SchemeKind, SchemeOptions, SigmaSource};
use infsample::{Error, Family, Result};

#[derive(Parser)]
#[command(name = "infsample", version, about = "Influence-based importance subsampling for regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic linear regression dataset.
    Synth(SynthArgs),
    /// Split a CSV into pilot and remainder files.
    Split(SplitArgs),
    /// Fit a model, optionally with per-row weights.
    Fit(FitArgs),
    /// Draw an importance subsample.
    Sample(SampleArgs),
    /// Run a scheme and size sweep from a JSON config.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value = "gaussian")]
    noise: Noise,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    noise_scale: f64,
    /// Output CSV; the true coefficients go to `<stem>.theta.json` beside it.
    #[arg(short, long)]
    output: PathBuf,
}

/// How to turn a CSV into a dataset.
#[derive(Args, Clone)]
struct DataArgs {
    #[arg(long, default_value = "y")]
    response: String,
    /// Columns to ignore (repeatable).
    #[arg(long)]
    drop: Vec<String>,
    #[arg(long)]
    add_intercept: bool,
}

#[derive(Args)]
struct SplitArgs {
    input: PathBuf,
    #[arg(long, default_value = "y")]
    response: String,
    #[arg(long, default_value_t = 0.05)]
    pilot_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    pilot_out: PathBuf,
    #[arg(long)]
    rest_out: PathBuf,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    tau: Option<f64>,
}

impl ModelArgs {
    fn family(&self) -> Result<Family> {
        Family::parse(&self.model, self.tau)
    }
}

#[derive(Args)]
struct FitArgs {
    input: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    data: DataArgs,
    /// Weight column; used when present, uniform weights otherwise.
    #[arg(long, default_value = "__weight")]
    weight_col: String,
    /// Solve least squares with a ridge instead of the pseudo-inverse.
    #[arg(long)]
    ridge: bool,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    input: PathBuf,
    #[arg(long)]
    scheme: SchemeKind,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    data: DataArgs,
    /// Expected sample size.
    #[arg(long)]
    size: f64,
    #[arg(long, default_value_t = 0.1)]
    floor_frac: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pilot fit (as written by `fit`).
    #[arg(long)]
    pilot: PathBuf,
    /// Pilot rows; their second moment replaces the full-data one.
    #[arg(long)]
    pilot_data: Option<PathBuf>,
    #[arg(long)]
    diagonal_only: bool,
    #[arg(long)]
    exact: bool,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// `.json` writes JSON with a summary; anything else writes CSV.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct FitFile {
    theta: Vec<f64>,
    family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tau: Option<f64>,
    converged: bool,
    iterations: usize,
    objective: f64,
    #[serde(default)]
    columns: Vec<String>,
}

#[derive(Serialize)]
struct SampleSummary {
    m: f64,
    sum_pi: f64,
    alpha: f64,
    scale: f64,
    realized_size: usize,
    n: usize,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn load(path: &Path, args: &DataArgs, extra_drop: &[String]) -> Result<Dataset> {
    let mut drop = args.drop.clone();
    drop.extend_from_slice(extra_drop);
    let ds = data::load_csv(path, &args.response, &drop)?;
    Ok(if args.add_intercept { ds.with_intercept() } else { ds })
}

fn synth(args: SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        noise_scale: args.noise_scale,
        ..SynthSpec::new(args.n, args.d, args.noise, args.seed)
    };
    let (ds, theta) = data::synth_regression_with(&spec)?;
    data::write_csv(&ds, &args.output)?;
    let sidecar = args.output.with_extension("theta.json");
    write_json(
        &sidecar,
        &serde_json::json!({
            "theta": theta.as_slice(),
            "noise": args.noise,
            "noise_scale": args.noise_scale,
            "seed": args.seed,
        }),
    )
}

fn split(args: SplitArgs) -> Result<()> {
    let ds = data::load_csv(&args.input, &args.response, &[])?;
    let (pilot, rest) = data::split_pilot(
        &ds,
        SplitSpec {
            pilot_fraction: args.pilot_fraction,
            seed: args.seed,
        },
    )?;
    data::write_csv(&pilot, &args.pilot_out)?;
    data::write_csv(&rest, &args.rest_out)
}

fn weight_column(path: &Path, name: &str) -> Result<Option<Vec<f64>>> {
    let table = data::read_table(File::open(path)?)?;
    let Ok(j) = table.column(name) else {
        return Ok(None);
    };
    Ok(Some(table.rows.iter().map(|r| r[j]).collect()))
}

fn fit(args: FitArgs) -> Result<()> {
    let family = args.model.family()?;
    let weights = weight_column(&args.input, &args.weight_col)?;
    let extra = if weights.is_some() { vec![args.weight_col.clone()] } else { Vec::new() };
    let ds = load(&args.input, &args.data, &extra)?;
    let w = weights.unwrap_or_else(|| vec![1.0; ds.n()]);
    let opts = FitOptions {
        exact: !args.ridge,
        ..FitOptions::default()
    };
    let result = fit_weighted(ds.x(), ds.y(), &w, family, &opts)?;
    write_json(
        &args.output,
        &FitFile {
            theta: result.theta.as_slice().to_vec(),
            family: family.name().to_string(),
            tau: family.tau(),
            converged: result.converged,
            iterations: result.iterations,
            objective: result.objective,
            columns: ds.column_names().to_vec(),
        },
    )
}

fn sample(args: SampleArgs) -> Result<()> {
    let family = args.model.family()?;
    let ds = load(&args.input, &args.data, &[])?;
    let pilot: FitFile = serde_json::from_reader(File::open(&args.pilot)?)?;
    if pilot.theta.len() != ds.d() {
        return Err(Error::DimensionMismatch(format!(
            "pilot has {} coefficients, data has {} columns",
            pilot.theta.len(),
            ds.d()
        )));
    }
    let pilot_ds = args
        .pilot_data
        .as_deref()
        .map(|p| load(p, &args.data, &[]))
        .transpose()?;
    let scheme = ImportanceScheme {
        kind: args.scheme,
        options: SchemeOptions {
            diagonal_only: args.diagonal_only,
            exact: args.exact,
            sigma_source: if pilot_ds.is_some() {
                SigmaSource::Pilot
            } else {
                SigmaSource::Full
            },
        },
    };
    let theta = DVector::from_vec(pilot.theta);
    let sizes = importance_scores(&ds, &scheme, family, &theta, pilot_ds.as_ref())?;
    let design = allocate(&sizes, args.size, floor_alpha(args.floor_frac, args.size, ds.n()))?;
    let draw = poisson_draw(&design, args.seed);
    let sampled = ds.select_rows(&draw.indices)?;
    let file = BufWriter::new(File::create(&args.output)?);
    data::write_csv_with(&sampled, &[("__weight", &draw.weights)], file)?;
    let summary = SampleSummary {
        m: args.size,
        sum_pi: design.expected_size(),
        alpha: design.alpha,
        scale: design.scale,
        realized_size: draw.realized_size,
        n: ds.n(),
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let cfg = ExperimentConfig::from_json_file(&args.config)?;
    let base = args.config.parent().filter(|p| !p.as_os_str().is_empty());
    let report = run_experiment(&cfg, base)?;
    emit(&report, &args.output, Format::from_path(&args.output))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Split(a) => split(a),
        Command::Fit(a) => fit(a),
        Command::Sample(a) => sample(a),
        Command::Experiment(a) => experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
