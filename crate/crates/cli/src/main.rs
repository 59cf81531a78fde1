use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Parser, Debug)]
#[command(name = "uecsp", version, about = "Random k-XORSAT and (k,d)-UE-CSP experiments")]
struct Cli {
    /// Worker threads for parallel sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a random formula and write it in the text format.
    Generate(GenerateArgs),
    /// Decide satisfiability of a formula file by Gaussian elimination.
    Solve(SolveArgs),
    /// Success probability of a search heuristic over an alpha range.
    Search(SearchArgs),
    /// Leaf removal down to the 2-core.
    Leafremove(LeafremoveArgs),
    /// Mean-field trajectory, potential snapshots and crossing times.
    Trajectory(TrajectoryArgs),
    /// Sections of the static phase surfaces, or dynamic transition lines.
    Phase(PhaseArgs),
    /// Static and algorithmic thresholds for one k.
    Thresholds(ThresholdsArgs),
    /// Large-k GUC thresholds, epoch schedules and the scaling collapse.
    Scaling(ScalingArgs),
}

#[derive(Args, Debug, Clone)]
pub struct InstanceArgs {
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..))]
    pub d: u32,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Output file (stdout when omitted).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    pub input: PathBuf,
    /// Include the satisfying assignment in the output.
    #[arg(long)]
    pub witness: bool,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..))]
    pub d: u32,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// `lo:hi:step`, endpoints included.
    #[arg(long, conflicts_with = "alpha")]
    pub alpha_range: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value = "uc")]
    pub policy: String,
    /// Runs per alpha.
    #[arg(long, default_value_t = 100)]
    pub seeds: usize,
    /// Master seed; run i uses seeds derived from it.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "csv")]
    pub format: String,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LeafremoveArgs {
    /// Formula file; a random instance is drawn when omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..))]
    pub d: u32,
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.85)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct NumericArgs {
    /// Euler step of the mean-field integrator.
    #[arg(long, default_value_t = 1e-5)]
    pub dt: f64,
    /// Bisection tolerance on alpha.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Args, Debug)]
pub struct TrajectoryArgs {
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value = "uc")]
    pub policy: String,
    #[command(flatten)]
    pub numeric: NumericArgs,
    /// Keep every n-th integration step in the trajectory CSV.
    #[arg(long, default_value_t = 100)]
    pub record_every: usize,
    /// Directory for trajectory.csv, potential.csv and tstar.csv.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PhaseArgs {
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Fixed densities, e.g. `c4=0` or `c4=0.1,c5=0`.
    #[arg(long)]
    pub section: Option<String>,
    #[arg(long, default_value = "c2")]
    pub sweep: String,
    #[arg(long, default_value = "c3")]
    pub solve: String,
    /// Sweep values `lo:hi:step` (sections) or alpha values (lines).
    #[arg(long)]
    pub range: Option<String>,
    /// Transition lines t_d, t_s, t_q over `--range` instead of a section.
    #[arg(long)]
    pub lines: bool,
    #[arg(long, default_value = "uc")]
    pub policy: String,
    #[command(flatten)]
    pub numeric: NumericArgs,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ThresholdsArgs {
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[command(flatten)]
    pub numeric: NumericArgs,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ScalingArgs {
    /// Smallest k (power of two); defaults to min(256, kmax/8).
    #[arg(long)]
    pub kmin: Option<usize>,
    #[arg(long, default_value_t = 4096)]
    pub kmax: usize,
    /// Allow k above 4096 (long runs).
    #[arg(long)]
    pub large: bool,
    #[arg(long, default_value_t = 1e-5)]
    pub dt: f64,
    /// Bisection tolerance on k * alpha.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Directory for sweep.csv and collapse.csv.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Solve(a) => commands::solve(a),
        Command::Search(a) => commands::search(a),
        Command::Leafremove(a) => commands::leafremove(a),
        Command::Trajectory(a) => commands::trajectory(a),
        Command::Phase(a) => commands::phase(a),
        Command::Thresholds(a) => commands::thresholds(a),
        Command::Scaling(a) => commands::scaling(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
