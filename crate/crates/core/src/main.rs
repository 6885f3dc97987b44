use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use devdan::prequential::{run_suite, write_batch_csv, RunRecord, SuiteReport};
use devdan::streams::{write_csv, SelectionMode, SourceKind};
use devdan::{DevdanModel, Error, ExperimentConfig, ResetMode};

const SEED_ENV: &str = "DEVDAN_SEED";

#[derive(Parser)]
#[command(
    name = "devdan",
    version,
    about = "Evolving denoising autoencoder on drifting streams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test-then-train evaluation over one or more seeds.
    Run(RunArgs),
    /// Write a generated or loaded dataset as CSV.
    Gen(GenArgs),
    /// Print a checkpoint summary as JSON.
    Inspect { checkpoint: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Source {
    Sea,
    Hyperplane,
    Csv,
    Idx,
}

impl From<Source> for SourceKind {
    fn from(s: Source) -> Self {
        match s {
            Source::Sea => SourceKind::Sea,
            Source::Hyperplane => SourceKind::Hyperplane,
            Source::Csv => SourceKind::Csv,
            Source::Idx => SourceKind::Idx,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectionArg {
    Random,
    Confidence,
}

#[derive(Args, Default)]
struct DataArgs {
    #[arg(long, value_enum)]
    dataset: Option<Source>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long = "batch")]
    batch_size: Option<usize>,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Zero-based label column of the CSV (default: last).
    #[arg(long)]
    label_column: Option<usize>,
    #[arg(long)]
    idx_images: Option<PathBuf>,
    #[arg(long)]
    idx_labels: Option<PathBuf>,
    /// Recurring pixel permutations for IDX data.
    #[arg(long)]
    permutations: Option<usize>,
    #[arg(long)]
    hyperplane_dim: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment JSON; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    /// Base seed (falls back to $DEVDAN_SEED, then the config file).
    #[arg(long)]
    seed: Option<u64>,
    /// Number of consecutive seeds starting at the base seed.
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    label_fraction: Option<f64>,
    #[arg(long, value_enum)]
    selection: Option<SelectionArg>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    no_generative: bool,
    #[arg(long)]
    no_grow: bool,
    #[arg(long)]
    no_prune: bool,
    /// Clear the running statistics as well as the minima on a structural change.
    #[arg(long)]
    reset_all: bool,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    checkpoint_dir: Option<PathBuf>,
    /// Write zero timing columns so identical runs give identical files.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Json(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Gen(args) => gen(args),
        Command::Inspect { checkpoint } => inspect(&checkpoint),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn env_seed() -> Result<Option<u64>, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => {
            v.trim().parse().map(Some).map_err(|_| {
                Failure::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))
            })
        }
        Err(_) => Ok(None),
    }
}

fn apply_data_args(cfg: &mut ExperimentConfig, d: &DataArgs) {
    let ds = &mut cfg.dataset;
    if let Some(s) = d.dataset {
        ds.source = s.into();
    }
    if d.samples.is_some() {
        ds.samples = d.samples;
    }
    if let Some(b) = d.batch_size {
        ds.batch_size = b;
    }
    if d.csv.is_some() {
        ds.csv_path = d.csv.clone();
    }
    if d.label_column.is_some() {
        ds.label_column = d.label_column;
    }
    if d.idx_images.is_some() {
        ds.idx_images = d.idx_images.clone();
    }
    if d.idx_labels.is_some() {
        ds.idx_labels = d.idx_labels.clone();
    }
    if let Some(p) = d.permutations {
        ds.permutations = p;
    }
    if let Some(h) = d.hyperplane_dim {
        ds.hyperplane_dim = h;
    }
}

fn effective_config(args: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    apply_data_args(&mut cfg, &args.data);
    if let Some(f) = args.label_fraction {
        cfg.dataset.label_fraction = f;
    }
    if let Some(s) = args.selection {
        cfg.dataset.selection = match s {
            SelectionArg::Random => SelectionMode::Random,
            SelectionArg::Confidence => SelectionMode::Confidence,
        };
    }
    if let Some(d) = args.delta {
        cfg.dataset.delta = d;
    }
    let models =
        std::iter::once(&mut cfg.model).chain(cfg.variants.iter_mut().map(|v| &mut v.model));
    for m in models {
        if args.no_generative {
            m.enable_generative = false;
        }
        if args.no_grow {
            m.enable_grow = false;
        }
        if args.no_prune {
            m.enable_prune = false;
        }
        if args.reset_all {
            m.reset_mode = ResetMode::ResetAll;
        }
    }
    let base = match args.seed {
        Some(s) => Some(s),
        None => env_seed()?,
    };
    match (base, args.seeds) {
        (b, Some(count)) => {
            let b = b.unwrap_or_else(|| cfg.seeds.first().copied().unwrap_or(0));
            cfg.seeds = (b..b + count).collect();
        }
        (Some(b), None) => cfg.seeds = vec![b],
        (None, None) => {}
    }
    if let Some(j) = args.jobs {
        cfg.jobs = j;
    }
    if args.out_dir.is_some() {
        cfg.out_dir = args.out_dir.clone();
    }
    if args.checkpoint_dir.is_some() {
        cfg.checkpoint_dir = args.checkpoint_dir.clone();
    }
    if args.no_timing {
        cfg.timing = false;
    }
    cfg.model.seed = cfg.seeds.first().copied().unwrap_or(0);
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: RunArgs) -> Result<ExitCode, Failure> {
    let cfg = effective_config(&args)?;
    let suite = run_suite(&cfg.entries(), &cfg.seeds, cfg.jobs)?;
    write_outputs(&cfg, &suite)?;
    print_summary(&suite);
    let failed = suite.runs.iter().filter(|r| r.outcome.is_err()).count();
    if failed > 0 {
        eprintln!("{failed} of {} runs failed", suite.runs.len());
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn run_file_stem(r: &RunRecord) -> String {
    format!("{}_seed{}", r.name, r.seed)
}

fn write_outputs(cfg: &ExperimentConfig, suite: &SuiteReport) -> Result<(), Failure> {
    if let Some(dir) = &cfg.checkpoint_dir {
        fs::create_dir_all(dir)?;
        for r in &suite.runs {
            if let Ok(out) = &r.outcome {
                out.model
                    .save(&dir.join(format!("{}.json", run_file_stem(r))))?;
            }
        }
    }
    let Some(dir) = &cfg.out_dir else {
        return Ok(());
    };
    fs::create_dir_all(dir)?;
    for r in &suite.runs {
        if let Ok(out) = &r.outcome {
            let file = File::create(dir.join(format!("{}.csv", run_file_stem(r))))?;
            write_batch_csv(&out.report, BufWriter::new(file), cfg.timing)?;
        }
    }
    let runs: Vec<_> = suite
        .runs
        .iter()
        .map(|r| match &r.outcome {
            Ok(o) => json!({
                "name": r.name,
                "seed": r.seed,
                "mean_cr": o.report.mean_cr,
                "std_cr": o.report.std_cr,
                "final_R": o.report.final_width,
                "parameter_count": o.report.parameter_count,
                "state_digest": o.model.state_digest(),
            }),
            Err(e) => json!({ "name": r.name, "seed": r.seed, "error": e }),
        })
        .collect();
    let doc = json!({ "config": cfg, "summary": suite.summary, "runs": runs });
    let file = File::create(dir.join("summary.json"))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &doc).map_err(Error::from)?;
    Ok(())
}

fn print_summary(suite: &SuiteReport) {
    println!(
        "{:<20} {:>5} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "config", "runs", "mean_cr", "std_cr", "min_cr", "final_R", "params"
    );
    for s in &suite.summary {
        println!(
            "{:<20} {:>5} {:>9.4} {:>9.4} {:>9.4} {:>9.2} {:>9.1}",
            s.name,
            s.runs - s.failures,
            s.mean_cr,
            s.std_cr,
            s.min_cr,
            s.mean_final_width,
            s.mean_parameter_count
        );
    }
    for r in &suite.runs {
        if let Err(e) = &r.outcome {
            eprintln!("{} seed {}: {e}", r.name, r.seed);
        }
    }
}

fn gen(args: GenArgs) -> Result<ExitCode, Failure> {
    let mut cfg = ExperimentConfig::default();
    apply_data_args(&mut cfg, &args.data);
    let data = cfg.dataset.dataset(args.seed)?;
    match &args.out {
        Some(path) => write_csv(&data, BufWriter::new(File::create(path)?))?,
        None => write_csv(&data, io::stdout().lock())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn inspect(path: &Path) -> Result<ExitCode, Failure> {
    let model = DevdanModel::load(path)?;
    let doc = json!({ "summary": model.summary(), "state_digest": model.state_digest() });
    println!(
        "{}",
        serde_json::to_string_pretty(&doc).map_err(Error::from)?
    );
    Ok(ExitCode::SUCCESS)
}
