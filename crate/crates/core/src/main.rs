use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use clustersync::harness::{self, ConfigError, Manifest, Mode, Overrides, SweepSpec};
use clustersync::io::{load_instance, save_instance, Instance, IoError};
use clustersync::metrics::{exact_recovery, log_scale, sync_error};
use clustersync::model::{
    add_gaussian_noise, generate_ground_truth, generate_observation, ModelParams,
};
use clustersync::pipeline::{solve, PipelineConfig, RefineMode};
use clustersync::SolverConfig;

#[derive(Parser)]
#[command(name = "clustersync", version, about = "Joint clustering and orthogonal synchronization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a parameter sweep and write one CSV row per trial plus cell means.
    Sweep(SweepArgs),
    /// Time each pipeline phase over `n_values` and fit log-log slopes.
    Bench(SweepArgs),
    /// Sweep in `snr` mode (minimum R block ratio per trial).
    Snr(SweepArgs),
    /// Sample an instance and save it in the binary instance format.
    Generate(GenerateArgs),
    /// Run the pipeline on a saved instance.
    Solve(SolveArgs),
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
    /// CSV destination; a `.manifest.json` is written alongside. Stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    refine: Option<RefineMode>,
    #[arg(long)]
    workers: Option<usize>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            trials: self.trials,
            refine: self.refine,
            workers: self.workers,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long = "K", alias = "k", default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Within-cluster probability; alternatively give --alpha.
    #[arg(long, conflicts_with = "alpha")]
    p: Option<f64>,
    /// Cross-cluster probability; alternatively give --beta.
    #[arg(long, conflicts_with = "beta")]
    q: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Leave the ground truth out of the file.
    #[arg(long)]
    no_truth: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    input: PathBuf,
    /// Overrides the cluster count stored in the file.
    #[arg(long = "K", alias = "k")]
    k: Option<usize>,
    #[arg(long, default_value = "none")]
    refine: RefineMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-node CSV destination (node, label, confidence, transform entries). Stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Invalid(_) => 1,
            Self::Io(_) => 2,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Self::Io(e.to_string()),
            other => Self::Invalid(other.to_string()),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Io(_) => Self::Io(e.to_string()),
            other => Self::Invalid(other.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Io(e.to_string())
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_manifest<T: serde::Serialize>(out: Option<&Path>, value: &T) -> Result<(), CliError> {
    if let Some(p) = out {
        let path = p.with_extension("manifest.json");
        let f = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::to_writer_pretty(BufWriter::new(f), value).map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(())
}

fn load(args: &SweepArgs) -> Result<SweepSpec, CliError> {
    Ok(harness::load_config(&args.config, &args.common.overrides())?)
}

fn run_sweep_command(args: &SweepArgs, require: Option<Mode>) -> Result<(), CliError> {
    let spec = load(args)?;
    if let Some(m) = require {
        if spec.mode != m {
            return Err(CliError::Invalid(format!("expected mode = {m}, got {}", spec.mode)));
        }
    }
    if spec.mode == Mode::Runtime {
        return run_bench_command(args);
    }
    let result = harness::run_sweep(&spec)?;
    harness::write_csv(open_output(args.out.as_deref())?, &result, spec.timings)?;
    write_manifest(args.out.as_deref(), &Manifest::new(&spec))?;
    Ok(())
}

fn run_bench_command(args: &SweepArgs) -> Result<(), CliError> {
    let spec = load(args)?;
    let report = harness::run_runtime_bench(&spec)?;
    report.write_csv(open_output(args.out.as_deref())?)?;
    eprintln!("slope excluding eigensolve: {:.3}", report.slope_excluding_eigen);
    eprintln!("slope full pipeline:        {:.3}", report.slope_full);
    eprintln!("slope all-pairs control:    {:.3}", report.slope_control);
    #[derive(serde::Serialize)]
    struct BenchManifest<'a> {
        #[serde(flatten)]
        base: Manifest<'a>,
        slope_excluding_eigen: f64,
        slope_full: f64,
        slope_control: f64,
    }
    write_manifest(
        args.out.as_deref(),
        &BenchManifest {
            base: Manifest::new(&spec),
            slope_excluding_eigen: report.slope_excluding_eigen,
            slope_full: report.slope_full,
            slope_control: report.slope_control,
        },
    )
}

fn run_generate(args: &GenerateArgs) -> Result<(), CliError> {
    let s = log_scale(args.n.max(2));
    let p = args.p.or(args.alpha.map(|a| a * s));
    let q = args.q.or(args.beta.map(|b| b * s));
    let (Some(p), Some(q)) = (p, q) else {
        return Err(CliError::Invalid("give --p/--alpha and --q/--beta".into()));
    };
    let params = ModelParams::equal_sizes(args.n, args.k, args.d, p, q, args.seed).with_sigma(args.sigma);
    params.validate().map_err(|e| CliError::Invalid(e.to_string()))?;
    let gt = generate_ground_truth(&params).map_err(|e| CliError::Invalid(e.to_string()))?;
    let mut a = generate_observation(&gt, p, q, args.seed);
    if args.sigma > 0.0 {
        a = add_gaussian_noise(&a, args.sigma, args.seed);
    }
    let inst = Instance {
        k: args.k,
        a,
        truth: (!args.no_truth).then_some(gt),
    };
    save_instance(&args.out, &inst)?;
    Ok(())
}

fn run_solve(args: &SolveArgs) -> Result<(), CliError> {
    let inst = load_instance(&args.input)?;
    let k = args.k.unwrap_or(inst.k);
    let cfg = PipelineConfig {
        solver: SolverConfig::default().with_seed(args.seed),
        refine: args.refine,
        ..Default::default()
    };
    let out = solve(&inst.a, k, &cfg).map_err(|e| CliError::Invalid(e.to_string()))?;
    let res = &out.result;
    let mut w = csv::Writer::from_writer(open_output(args.out.as_deref())?);
    let d = inst.a.d();
    let mut header = vec!["node".to_string(), "label".into(), "confidence".into()];
    for r in 0..d {
        for c in 0..d {
            header.push(format!("o_{r}_{c}"));
        }
    }
    w.write_record(&header)?;
    for i in 0..inst.a.n() {
        let mut row = vec![(i + 1).to_string(), (res.labels[i] + 1).to_string(), res.confidence[i].to_string()];
        let m = res.transforms[i].as_matrix();
        for r in 0..d {
            for c in 0..d {
                row.push(m[(r, c)].to_string());
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    for warning in &res.warnings {
        eprintln!("warning: {}", warning.tag());
    }
    if let Some(gt) = &inst.truth {
        eprintln!("exact recovery: {}", exact_recovery(&res.labels, &gt.labels));
        eprintln!("sync error (ln): {:.6}", sync_error(&res.transforms, gt));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Sweep(a) => run_sweep_command(a, None),
        Command::Snr(a) => run_sweep_command(a, Some(Mode::Snr)),
        Command::Bench(a) => run_bench_command(a),
        Command::Generate(a) => run_generate(a),
        Command::Solve(a) => run_solve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
