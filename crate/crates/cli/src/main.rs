//! `castell`: randomize categorical data and estimate joint distributions.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use castell_core::bounds;
use castell_core::estimator::{select_hybrid, TruncationOptions};
use castell_core::experiment::{
    fit_avd_vs_omega, run_sweep, run_timing, ExperimentSpec, TimingSpec, DEFAULT_AVD_STAR,
};
use castell_core::ingest::{self, IngestConfig};
use castell_core::metrics;
use castell_core::synth::{self, MarginalReading, SynthSpec};
use castell_core::{
    estimate, randomize_dataset, AttributeSubset, Dataset, Error, EstimateOptions,
    EstimationRequest, Method, ProbTensor, RandomizationPlan, Result, Source,
};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

/// Directory searched for relative input paths that do not exist as given.
const DATA_DIR_VAR: &str = "CASTELL_DATA_DIR";

#[derive(Parser)]
#[command(name = "castell", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Perturb every attribute of every record with randomized response.
    Randomize(RandomizeArgs),
    /// Estimate the joint distribution of an attribute subset.
    Estimate(EstimateArgs),
    /// Compare estimated tensors with true ones, or measure Cramér's V.
    Metrics(MetricsArgs),
    /// Evaluate error bounds and crossover thresholds.
    Bounds(BoundsArgs),
    /// Generate a correlated two-attribute dataset.
    Synth(SynthArgs),
    /// Load a dataset and report its schema.
    Ingest(IngestArgs),
    /// Run an evaluation sweep described by a JSON spec.
    Sweep(SweepArgs),
    /// Time the three inversion paths.
    Timing(TimingArgs),
    /// Fit AVD against domain size and solve for the tolerable domain size.
    Fit(FitArgs),
}

#[derive(Args)]
struct InputArgs {
    /// CSV file to read.
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// Ingest profile (JSON). Without one every column is an inferred categorical.
    #[arg(long)]
    profile: Option<PathBuf>,
}

#[derive(Args)]
struct BudgetArgs {
    /// Total budget, split evenly over all attributes of the dataset.
    #[arg(long, conflicts_with = "eps_per_attr")]
    eps: Option<f64>,
    /// Budget for each attribute.
    #[arg(long)]
    eps_per_attr: Option<f64>,
}

#[derive(Args)]
struct RandomizeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    budget: BudgetArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the randomized CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a profile declaring the schema, for reading the output back.
    #[arg(long)]
    schema_out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    budget: BudgetArgs,
    /// Comma-separated attribute names.
    #[arg(long, value_delimiter = ',', required = true)]
    subset: Vec<String>,
    #[arg(long, default_value = "castell")]
    method: String,
    /// Treat the input as true data and randomize it with this seed first.
    #[arg(long)]
    randomize_seed: Option<u64>,
    /// Cap truncation with truncated rather than raw lower-order estimates.
    #[arg(long)]
    recursive: bool,
    /// Largest domain the naïve, reduced and RR-Joint paths may materialise.
    #[arg(long, default_value_t = castell_core::DEFAULT_DOMAIN_CAP)]
    cap: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    /// Tensor JSON (one tensor or an array) holding true distributions.
    #[arg(long, requires = "est")]
    truth: Option<PathBuf>,
    /// Tensor JSON holding the estimates, paired with `--truth` in order.
    #[arg(long, requires = "truth")]
    est: Option<PathBuf>,
    /// Dataset for Cramér's V.
    #[arg(
        long = "in",
        value_name = "PATH",
        requires = "pair",
        conflicts_with = "truth"
    )]
    input: Option<PathBuf>,
    #[arg(long, requires = "input")]
    profile: Option<PathBuf>,
    /// Two attribute names, comma-separated.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pair: Vec<String>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    n: usize,
    /// Largest domain size in the subset.
    #[arg(long)]
    d: usize,
    #[arg(long)]
    w: usize,
    /// Total budget over the `w` attributes.
    #[arg(long)]
    eps: f64,
    /// Cramér's V of the pair, for the RR-Independent MSE bound.
    #[arg(long)]
    v: Option<f64>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    /// Target Cramér's V.
    #[arg(long)]
    v: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use categories 1..d instead of 2..d.
    #[arg(long)]
    full_reading: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Write the loaded data back out as label CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a profile declaring the loaded schema.
    #[arg(long)]
    schema_out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Overrides the spec's output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TimingArgs {
    #[arg(long, default_value_t = 3)]
    d: usize,
    /// Subset widths, comma-separated.
    #[arg(long, value_delimiter = ',', default_values_t = [2, 3, 4, 5, 6])]
    w: Vec<usize>,
    /// Probability of keeping the true category.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = castell_core::DEFAULT_DOMAIN_CAP)]
    cap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct FitArgs {
    /// JSON array of `[omega, avd]` pairs.
    #[arg(long)]
    points: PathBuf,
    #[arg(long, default_value_t = DEFAULT_AVD_STAR)]
    avd_star: f64,
}

/// Tensor interchange format.
#[derive(Serialize, Deserialize)]
struct TensorJson {
    subset: Vec<String>,
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl TensorJson {
    fn from_tensor(t: &ProbTensor, names: Vec<String>) -> Self {
        Self {
            subset: names,
            shape: t.shape().to_vec(),
            values: t.values().to_vec(),
        }
    }

    fn into_tensor(self) -> Result<ProbTensor> {
        ProbTensor::new(self.shape, self.values)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(TensorJson),
    Many(Vec<TensorJson>),
}

fn resolve(path: &Path) -> PathBuf {
    if path.is_relative() && !path.exists() {
        if let Some(dir) = std::env::var_os(DATA_DIR_VAR) {
            let candidate = Path::new(&dir).join(path);
            if candidate.exists() {
                return candidate;
            }
        }
    }
    path.to_path_buf()
}

fn load(input: &InputArgs) -> Result<ingest::Loaded> {
    let config = match &input.profile {
        Some(p) => IngestConfig::from_path(resolve(p))?,
        None => IngestConfig::default(),
    };
    ingest::load_csv(resolve(&input.input), &config)
}

fn plan_for(data: &Dataset, budget: &BudgetArgs) -> Result<RandomizationPlan> {
    match (budget.eps, budget.eps_per_attr) {
        (Some(total), None) => RandomizationPlan::uniform(data.schema(), total),
        (None, Some(each)) => {
            RandomizationPlan::per_attribute(data.schema(), &vec![each; data.m()])
        }
        _ => Err(Error::Config("give one of --eps or --eps-per-attr".into())),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
}

fn emit(value: &serde_json::Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => {
            let mut w = create(path)?;
            writeln!(w, "{text}").map_err(|e| io_error(path, e))?;
            w.flush().map_err(|e| io_error(path, e))
        }
        None => match writeln!(io::stdout().lock(), "{text}") {
            Err(e) if e.kind() != io::ErrorKind::BrokenPipe => {
                Err(io_error(Path::new("<stdout>"), e))
            }
            _ => Ok(()),
        },
    }
}

fn io_error(path: &Path, source: io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_dataset(data: &Dataset, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => ingest::write_csv_path(data, path),
        None => ingest::write_csv(data, io::stdout().lock()),
    }
}

fn write_profile(data: &Dataset, path: &Path) -> Result<()> {
    let config = IngestConfig::from_schema(data.schema());
    emit(&serde_json::to_value(config)?, Some(path))
}

fn cmd_randomize(args: RandomizeArgs) -> Result<()> {
    let loaded = load(&args.input)?;
    let plan = plan_for(&loaded.dataset, &args.budget)?;
    let y = randomize_dataset(&loaded.dataset, &plan, args.seed)?;
    if let Some(path) = &args.schema_out {
        write_profile(&y, path)?;
    }
    write_dataset(&y, args.out.as_deref())?;
    if args.out.is_some() {
        emit(
            &json!({
                "records": y.n(),
                "rows_dropped": loaded.report.rows_dropped,
                "budget": plan.budget(),
                "seed": args.seed,
            }),
            None,
        )?;
    }
    Ok(())
}

fn cmd_estimate(args: EstimateArgs) -> Result<()> {
    let loaded = load(&args.input)?;
    let plan = plan_for(&loaded.dataset, &args.budget)?;
    let method: Method = args.method.parse()?;
    let subset = AttributeSubset::from_names(loaded.dataset.schema(), &args.subset)?;
    let data = match args.randomize_seed {
        Some(seed) => randomize_dataset(&loaded.dataset, &plan, seed)?,
        None => loaded.dataset,
    };
    let request = EstimationRequest {
        source: Source::Records(&data),
        subset: subset.clone(),
        plan: &plan,
        method,
        options: EstimateOptions {
            domain_cap: args.cap,
            truncation: TruncationOptions {
                recursive: args.recursive,
            },
            joint_matrix: None,
        },
    };
    let result = estimate(&request)?;
    let names = subset
        .names(data.schema())
        .into_iter()
        .map(String::from)
        .collect();
    let tensor = TensorJson::from_tensor(&result.estimate, names);
    emit(
        &json!({
            "subset": tensor.subset,
            "shape": tensor.shape,
            "values": tensor.values,
            "method": result.method,
            "requested_method": method,
            "n": data.n(),
            "diagnostics": result.diagnostics,
        }),
        args.out.as_deref(),
    )
}

fn read_tensors(path: &Path) -> Result<Vec<ProbTensor>> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let parsed: OneOrMany = serde_json::from_str(&text)?;
    match parsed {
        OneOrMany::One(t) => Ok(vec![t.into_tensor()?]),
        OneOrMany::Many(ts) => ts.into_iter().map(TensorJson::into_tensor).collect(),
    }
}

fn cmd_metrics(args: MetricsArgs) -> Result<()> {
    if let (Some(truth), Some(est)) = (&args.truth, &args.est) {
        let truths = read_tensors(truth)?;
        let ests = read_tensors(est)?;
        let report = metrics::metric_report(&truths, &ests)?;
        return emit(&serde_json::to_value(report)?, None);
    }
    if let Some(input) = args.input {
        let [a, b] = args.pair.as_slice() else {
            return Err(Error::Config(
                "--pair needs exactly two attribute names".into(),
            ));
        };
        let loaded = load(&InputArgs {
            input,
            profile: args.profile,
        })?;
        let subset = AttributeSubset::from_names(loaded.dataset.schema(), &[a, b])?;
        let idx = subset.indices();
        let v = metrics::cramers_v(&loaded.dataset, idx[0], idx[1])?;
        return emit(
            &json!({ "pair": [a, b], "cramers_v": v, "n": loaded.dataset.n() }),
            None,
        );
    }
    Err(Error::Config(
        "give --truth and --est, or --in and --pair".into(),
    ))
}

fn cmd_bounds(args: BoundsArgs) -> Result<()> {
    let report = bounds::bound_report(args.n, args.w, args.d, args.eps, args.v)?;
    let thresholds = bounds::compute_thresholds(args.n, args.d, args.w as f64, args.eps)?;
    let choice = select_hybrid(args.n, args.w, args.d, args.eps / args.w as f64)?;
    emit(
        &json!({
            "bounds": report,
            "thresholds": thresholds,
            "hybrid_choice": choice.method,
        }),
        None,
    )
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        n: args.n,
        d: args.d,
        v_target: args.v,
        seed: args.seed,
        reading: if args.full_reading {
            MarginalReading::Full
        } else {
            MarginalReading::Literal
        },
    };
    let data = synth::sample_dataset(&spec)?;
    write_dataset(&data, args.out.as_deref())
}

fn cmd_ingest(args: IngestArgs) -> Result<()> {
    let loaded = load(&args.input)?;
    if let Some(path) = &args.out {
        ingest::write_csv_path(&loaded.dataset, path)?;
    }
    if let Some(path) = &args.schema_out {
        write_profile(&loaded.dataset, path)?;
    }
    let report = ingest::schema_report(&loaded.dataset)?;
    emit(
        &json!({
            "schema": report,
            "rows_read": loaded.report.rows_read,
            "rows_dropped": loaded.report.rows_dropped,
        }),
        None,
    )
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let mut spec = ExperimentSpec::from_path(&args.spec)?;
    if let Some(out) = args.out {
        spec.output = Some(out);
    }
    if let castell_core::experiment::DatasetSource::Csv { path, profile } = &mut spec.dataset {
        *path = resolve(path);
        if let Some(p) = profile {
            *p = resolve(p);
        }
    }
    let result = run_sweep(&spec)?;
    emit(
        &json!({
            "seed": result.seed,
            "summary": result.summary,
            "records": result.records.len(),
            "output": spec.output,
            "environment": result.environment,
        }),
        None,
    )
}

fn cmd_timing(args: TimingArgs) -> Result<()> {
    let table = run_timing(&TimingSpec {
        d: args.d,
        w_grid: args.w,
        keep_probability: args.p,
        repetitions: args.reps,
        cap: args.cap,
        seed: args.seed,
    })?;
    emit(&serde_json::to_value(table)?, None)
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.points).map_err(|e| io_error(&args.points, e))?;
    let points: Vec<(f64, f64)> = serde_json::from_str(&text)?;
    let fit = fit_avd_vs_omega(&points, args.avd_star)?;
    emit(&serde_json::to_value(fit)?, None)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Randomize(a) => cmd_randomize(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Ingest(a) => cmd_ingest(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Timing(a) => cmd_timing(a),
        Command::Fit(a) => cmd_fit(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{body}");
            ExitCode::from(1)
        }
    }
}
