//! `liestat`: bi-invariant two-sample statistics on Lie groups from the
//! command line. Reports are JSON; see the repository README for schemas.

mod commands;
mod dataset;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use liestat::Statistic;

use crate::failure::Failure;

#[derive(Parser, Debug)]
#[command(name = "liestat", version, about = "Bi-invariant two-sample statistics on Lie groups")]
struct Cli {
    /// Worker threads; results do not depend on this
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Group mean of a dataset
    Mean {
        input: PathBuf,
        #[command(flatten)]
        mean: MeanArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Two-sample permutation test
    Test {
        #[command(flatten)]
        perm: PermArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Per-component permutation tests with FDR control, plus the global test
    Localtest {
        #[command(flatten)]
        perm: PermArgs,
        /// Per-component weights (JSON list) for the global test
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Also write one p-value per component, one per line
        #[arg(long)]
        face_values: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Global permutation test across all components of a product group
    Globaltest {
        #[command(flatten)]
        perm: PermArgs,
        /// Per-component weights (JSON list)
        #[arg(long)]
        weights: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Draw a wrapped Gaussian dataset
    Synth {
        /// Group tag such as se3, glplus:3 or power:glplus:3:20
        #[arg(long)]
        group: String,
        /// Mean element payload (JSON); the identity if omitted
        #[arg(long)]
        mean: Option<PathBuf>,
        /// Covariance at the identity: a number s for s·I, or a matrix (JSON)
        #[arg(long)]
        cov: PathBuf,
        /// Number of samples
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: DatasetOutputArgs,
    },
    /// SE(3) poses between PCA frames of mesh pairs: A1 B1 [A2 B2 ...]
    Pose {
        #[arg(required = true, num_args = 2..)]
        meshes: Vec<PathBuf>,
        #[command(flatten)]
        out: DatasetOutputArgs,
    },
    /// Per-face deformation gradients of targets relative to a reference mesh
    Diffcoords {
        reference: PathBuf,
        #[arg(required = true)]
        targets: Vec<PathBuf>,
        /// Rigidly align every target to the reference first
        #[arg(long)]
        align: bool,
        /// Write the reference face areas (JSON list), usable as --weights
        #[arg(long)]
        areas_out: Option<PathBuf>,
        #[command(flatten)]
        out: DatasetOutputArgs,
    },
}

#[derive(Args, Debug, Clone)]
struct MeanArgs {
    /// Convergence tolerance of the group mean iteration
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Iteration cap of the group mean iteration
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
}

#[derive(Args, Debug, Clone)]
struct PermArgs {
    a: PathBuf,
    b: PathBuf,
    #[arg(long, value_enum, default_value_t = StatArg::T2)]
    statistic: StatArg,
    /// Number of random permutations
    #[arg(long, default_value_t = 10_000)]
    permutations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Significance level
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[command(flatten)]
    mean: MeanArgs,
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    /// Write the report here instead of standard output
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct DatasetOutputArgs {
    /// Write the dataset here instead of standard output
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Line-delimited output: a header line, then one sample per line
    #[arg(long)]
    jsonl: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum StatArg {
    T2,
    Bhattacharyya,
    Hellinger,
}

impl From<StatArg> for Statistic {
    fn from(s: StatArg) -> Self {
        match s {
            StatArg::T2 => Statistic::HotellingT2,
            StatArg::Bhattacharyya => Statistic::Bhattacharyya,
            StatArg::Hellinger => Statistic::Hellinger,
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::input("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::input(format!("cannot start thread pool: {e}")))?;
    }
    match cli.command {
        Command::Mean { input, mean, out } => commands::mean(&input, &mean, out.output.as_deref()),
        Command::Test { perm, out } => commands::test(&perm, out.output.as_deref()),
        Command::Localtest { perm, weights, face_values, out } => {
            commands::localtest(&perm, weights.as_deref(), face_values.as_deref(), out.output.as_deref())
        }
        Command::Globaltest { perm, weights, out } => {
            commands::globaltest(&perm, weights.as_deref(), out.output.as_deref())
        }
        Command::Synth { group, mean, cov, n, seed, out } => {
            commands::synth(&group, mean.as_deref(), &cov, n, seed, &out)
        }
        Command::Pose { meshes, out } => commands::pose(&meshes, &out),
        Command::Diffcoords { reference, targets, align, areas_out, out } => {
            commands::diffcoords(&reference, &targets, align, areas_out.as_deref(), &out)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { Failure::INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code as u8)
        }
    }
}
