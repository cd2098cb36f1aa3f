//! `mms` — generate spaces, compute sampling invariants, and compare
//! sequences, with reproducible seeds and replayable run manifests.
//!
//! Exit codes: 0 success, 2 usage or bad input, 3 infeasible request,
//! 4 search budget exceeded, 5 internal error.

mod commands;
mod manifest;

use std::fmt;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use mmspace::convergence::ConvergenceError;
use mmspace::core::CoreError;
use mmspace::distances::DistanceError;
use mmspace::formats::FormatError;
use mmspace::invariants::InvariantError;
use mmspace::sampling::SamplingError;

/// Seed used when `--seed` is omitted; fixed so runs are reproducible
/// without wall-clock contamination.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Infeasible(String),
    Budget(String),
    Internal(String),
}

impl CliError {
    fn usage(e: impl fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }

    fn internal(e: impl fmt::Display) -> Self {
        CliError::Internal(e.to_string())
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Infeasible(_) => "infeasible",
            CliError::Budget(_) => "budget",
            CliError::Internal(_) => "internal",
        }
    }

    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Budget(_) => 4,
            CliError::Internal(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m)
            | CliError::Infeasible(m)
            | CliError::Budget(m)
            | CliError::Internal(m) => m,
        }
    }

    fn to_json(&self) -> String {
        serde_json::json!({ "error": { "kind": self.kind(), "message": self.message() } })
            .to_string()
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<SamplingError> for CliError {
    fn from(e: SamplingError) -> Self {
        match e {
            SamplingError::TooLarge { .. } => CliError::Budget(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<InvariantError> for CliError {
    fn from(e: InvariantError) -> Self {
        match e {
            InvariantError::InfeasibleKappas | InvariantError::NotLipschitz(_) => {
                CliError::Infeasible(e.to_string())
            }
            InvariantError::ExactBudgetExceeded { .. } | InvariantError::TooLarge { .. } => {
                CliError::Budget(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<DistanceError> for CliError {
    fn from(e: DistanceError) -> Self {
        match e {
            DistanceError::RefinementTooLarge { .. } | DistanceError::AlignmentTooLarge { .. } => {
                CliError::Budget(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<ConvergenceError> for CliError {
    fn from(e: ConvergenceError) -> Self {
        match e {
            ConvergenceError::NotConverged { .. } => CliError::Infeasible(e.to_string()),
            ConvergenceError::Space(inner) => inner.into(),
            ConvergenceError::Sampling(inner) => inner.into(),
            ConvergenceError::Format(inner) => inner.into(),
            ConvergenceError::BadSequence(_) => CliError::Usage(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "mms",
    version,
    about = "Sampling invariants of finite metric measure spaces",
    after_help = "Every run honors --seed (default 42) and is deterministic for a fixed seed.\n\
                  File outputs get a replayable <name>.manifest.json next to them."
)]
struct Cli {
    /// Worker threads for Monte-Carlo chunks; results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a space file.
    Generate(GenerateArgs),
    /// Compute an invariant of a space.
    #[command(subcommand)]
    Invariant(InvariantCmd),
    /// Draw one sample matrix from a space.
    Sample(SampleArgs),
    /// Compute the moment signature of a space.
    Moments(MomentsArgs),
    /// Box distance between two spaces or kernels via alignment search.
    Box1(Box1Args),
    /// Track moment trajectories across a sequence of spaces.
    Converge(ConvergeArgs),
    /// Compare the tail signatures of two sequences.
    Compare(CompareArgs),
    /// Re-execute the argv recorded in a run manifest.
    Replay(ReplayArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum FamilyArg {
    /// Complete graphs (index = vertex count).
    Complete,
    /// Empirical spheres (index = dimension).
    Sphere,
    /// Erdős–Rényi graphs (index = vertex count).
    RandomGraph,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Vertex count (graph families).
    #[arg(long)]
    n: Option<usize>,
    /// Sphere dimension.
    #[arg(long)]
    dim: Option<usize>,
    /// Sphere point count.
    #[arg(long, default_value_t = 400)]
    count: usize,
    /// Edge probability in (0, 1] (random graphs).
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output space file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum InvariantCmd {
    /// Separation distance: largest δ with disjoint classes of the given
    /// masses pairwise δ-apart.
    Sep(SepArgs),
    /// Observable diameter: best certified partial diameter of a Lipschitz
    /// pushforward.
    Obsdiam(ObsDiamArgs),
    /// Partial diameter of a measure file.
    Pdiam(PdiamArgs),
}

#[derive(Args, Debug)]
struct SepArgs {
    #[arg(long)]
    space: PathBuf,
    /// Class masses, comma separated (e.g. 0.3,0.3).
    #[arg(long, value_delimiter = ',', required = true)]
    kappas: Vec<f64>,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    mode: ModeArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum ModeArg {
    Exact,
    Heuristic,
}

#[derive(Args, Debug)]
struct ObsDiamArgs {
    #[arg(long)]
    space: PathBuf,
    /// `interval` or a path to a space file whose metric is the target.
    #[arg(long, default_value = "interval")]
    target: String,
    #[arg(long)]
    kappa: f64,
    #[arg(long, default_value_t = 4)]
    restarts: usize,
    #[arg(long, default_value_t = 1500)]
    iterations: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PdiamArgs {
    /// Measure file (`interval-measure` or `finite-measure`).
    #[arg(long)]
    measure: PathBuf,
    #[arg(long)]
    kappa: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long)]
    space: PathBuf,
    /// Sample order (number of drawn points).
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MomentsArgs {
    #[arg(long)]
    space: PathBuf,
    /// Largest tuple order.
    #[arg(long, default_value_t = 3)]
    r: usize,
    /// Largest monomial power per pair.
    #[arg(long, default_value_t = 2)]
    k: u32,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long)]
    seed: Option<u64>,
    /// Force exact enumeration for every entry.
    #[arg(long, conflicts_with = "mc")]
    exact: bool,
    /// Force Monte-Carlo estimation for every entry.
    #[arg(long)]
    mc: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Box1Args {
    /// First space or kernel file.
    #[arg(long)]
    a: PathBuf,
    /// Second space or kernel file.
    #[arg(long)]
    b: PathBuf,
    #[arg(long, value_enum, default_value_t = AlignModeArg::Exact)]
    mode: AlignModeArg,
    /// Skip the alignment search; requires identical grids.
    #[arg(long)]
    direct: bool,
    #[arg(long, default_value_t = 64)]
    max_cells: usize,
    #[arg(long, default_value_t = 2000)]
    iterations: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum AlignModeArg {
    Exact,
    Anneal,
}

#[derive(Args, Debug, Clone)]
struct SequenceArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Comma-separated strictly increasing indices.
    #[arg(long, value_delimiter = ',', required = true)]
    indices: Vec<u64>,
    /// Edge probability for random graphs.
    #[arg(long)]
    p: Option<f64>,
    /// Point count for sphere families.
    #[arg(long, default_value_t = 400)]
    sphere_count: usize,
}

#[derive(Args, Debug)]
struct ConvergeArgs {
    #[command(flatten)]
    sequence: SequenceArgs,
    #[arg(long, default_value_t = 3)]
    r: usize,
    #[arg(long, default_value_t = 2)]
    k: u32,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 0.02)]
    tol: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the trajectory table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long, value_enum)]
    family_a: FamilyArg,
    #[arg(long, value_delimiter = ',', required = true)]
    indices_a: Vec<u64>,
    #[arg(long)]
    p_a: Option<f64>,
    #[arg(long, value_enum)]
    family_b: FamilyArg,
    #[arg(long, value_delimiter = ',', required = true)]
    indices_b: Vec<u64>,
    #[arg(long)]
    p_b: Option<f64>,
    #[arg(long, default_value_t = 400)]
    sphere_count: usize,
    #[arg(long, default_value_t = 3)]
    r: usize,
    #[arg(long, default_value_t = 2)]
    k: u32,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 0.05)]
    tol: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    /// Manifest written by a previous run.
    manifest: PathBuf,
}

fn main() {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match run(&argv) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("{}", e.to_json());
            std::process::exit(e.exit_code());
        }
    }
}

fn run(argv: &[String]) -> Result<(), CliError> {
    let cli =
        match Cli::try_parse_from(std::iter::once("mms").chain(argv.iter().map(|s| s.as_str()))) {
            Ok(cli) => cli,
            Err(e) => match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    return Ok(());
                }
                _ => return Err(CliError::Usage(e.to_string())),
            },
        };
    if let Some(workers) = cli.workers {
        // Ignore the error if a pool already exists (e.g. replay-in-replay).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
    match cli.command {
        Command::Generate(args) => commands::generate(args, argv),
        Command::Invariant(InvariantCmd::Sep(args)) => commands::invariant_sep(args, argv),
        Command::Invariant(InvariantCmd::Obsdiam(args)) => commands::invariant_obsdiam(args, argv),
        Command::Invariant(InvariantCmd::Pdiam(args)) => commands::invariant_pdiam(args, argv),
        Command::Sample(args) => commands::sample(args, argv),
        Command::Moments(args) => commands::moments(args, argv),
        Command::Box1(args) => commands::box1(args, argv),
        Command::Converge(args) => commands::converge(args, argv),
        Command::Compare(args) => commands::compare(args, argv),
        Command::Replay(args) => {
            let manifest = manifest::RunManifest::load(&args.manifest)?;
            run(&manifest.argv)
        }
    }
}
