mod bench;
mod commands;
mod data;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::{usage, CliResult};

#[derive(Debug, Parser)]
#[command(name = "blackout-co", version, about = "Blackout diffusion for the travelling salesman problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate uniform random instances in the unit square.
    Gen(GenArgs),
    /// Solve one instance with a reverse diffusion run and heatmap decoding.
    Solve(SolveArgs),
    /// Run every variant × pipeline over an instance directory.
    Bench(BenchArgs),
    /// Dump forward-corruption frames of a tour as PGM images.
    Frames(FramesArgs),
    /// Train the linear edge model on (instance, optimal tour) pairs.
    Train(TrainArgs),
    /// Solve instances exactly (Held–Karp, n ≤ 18).
    Exact(ExactArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, default_value = "blackout_improved")]
    pub variant: String,
    /// `oracle`, `heuristic` or `linear:<model path>`.
    #[arg(long, default_value = "heuristic")]
    pub denoiser: String,
    /// Ground-truth tour; required by the oracle, otherwise used as gap reference.
    #[arg(long)]
    pub opt_tour: Option<PathBuf>,
    /// Reverse steps; defaults to 50 for one chain and 10 when sampling.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub samples: usize,
    #[arg(long)]
    pub two_opt: bool,
    /// With several samples, refine only the selected tour.
    #[arg(long)]
    pub two_opt_after_selection: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub dir: PathBuf,
    /// Comma-separated variant names.
    #[arg(long, value_delimiter = ',', default_value = "blackout_original,blackout_improved,blackout_more_improved,categorical")]
    pub variants: Vec<String>,
    /// Comma-separated pipelines.
    #[arg(long, value_delimiter = ',', default_value = "GREEDY,GREEDY+2OPT,SAMPLE,SAMPLE+2OPT")]
    pub pipelines: Vec<String>,
    #[arg(long, default_value = "heuristic")]
    pub denoiser: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-instance record CSV; the aggregate CSV and text table are written beside it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FramesArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub opt_tour: PathBuf,
    #[arg(long, default_value = "blackout_improved")]
    pub variant: String,
    #[arg(long, default_value_t = 50)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory with a manifest, instances and `opt_*.tour` files.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 300)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lr: f64,
    #[arg(long, default_value = "blackout_improved")]
    pub variant: String,
    #[arg(long, default_value_t = 50)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Loss trace CSV; defaults to `<out>.loss.csv`.
    #[arg(long)]
    pub loss_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "source")]
pub struct ExactSource {
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Instance directory with a manifest.
    #[arg(long)]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[command(flatten)]
    pub source: ExactSource,
    /// Output directory; defaults to the instance directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("BLACKOUT_CO_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| usage(format!("BLACKOUT_CO_THREADS must be a nonnegative integer, got {raw:?}")))?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| usage(format!("cannot size thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Gen(a) => data::cmd_gen(&a),
        Command::Exact(a) => data::cmd_exact(&a),
        Command::Solve(a) => commands::cmd_solve(&a),
        Command::Frames(a) => commands::cmd_frames(&a),
        Command::Train(a) => commands::cmd_train(&a),
        Command::Bench(a) => bench::cmd_bench(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
