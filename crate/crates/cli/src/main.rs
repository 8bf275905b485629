mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::CliError;

#[derive(Parser)]
#[command(name = "dcpl", version, about = "Fit activity models, learn cluster-based intervention policies and evaluate them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the five activity processes to an event log.
    Fit(FitArgs),
    /// Simulate events from a fitted model.
    Simulate(SimulateArgs),
    /// Score candidate cluster counts on the empirical reward features.
    Cluster(ClusterArgs),
    /// Train one method and write a run directory.
    Train(TrainArgs),
    /// Evaluate a trained run directory.
    Evaluate(EvaluateArgs),
    /// Train and evaluate several methods over several seeds.
    Compare(CompareArgs),
}

#[derive(Args)]
pub struct FitArgs {
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Rank of the retweet kernel.
    #[arg(long)]
    pub rank: Option<usize>,
    /// Comma-separated decay candidates, chosen by held-out likelihood.
    #[arg(long, value_delimiter = ',')]
    pub omega_grid: Option<Vec<f64>>,
    /// Fit window in hours; defaults to the span of the log.
    #[arg(long, num_args = 2, value_names = ["T0", "T1"])]
    pub window: Option<Vec<f64>>,
    #[arg(long)]
    pub n_users: Option<usize>,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, num_args = 2, value_names = ["T0", "T1"], required = true)]
    pub window: Vec<f64>,
    /// JSON array of per-stage plans.
    #[arg(long)]
    pub interventions: Option<PathBuf>,
    #[arg(long, env = "DCPL_SEED")]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Follower network used for likes and retweet attribution.
    #[arg(long)]
    pub network: Option<PathBuf>,
    /// Events before the window that seed the excitation.
    #[arg(long)]
    pub history: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub dt: f64,
}

#[derive(Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub events: PathBuf,
    /// Follower network; defaults to `network.csv` beside the events file.
    #[arg(long)]
    pub network: Option<PathBuf>,
    /// Candidate counts as a range `2..15` or a list `2,4,8`.
    #[arg(long, default_value = "2..15")]
    pub candidates: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, num_args = 2, value_names = ["T0", "T1"])]
    pub window: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.0)]
    pub dt: f64,
    #[arg(long, env = "DCPL_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub method: String,
    #[arg(long, env = "DCPL_SEED")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub run: PathBuf,
}

#[derive(Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Comma-separated method names; defaults to the config's list.
    #[arg(long)]
    pub methods: Option<String>,
    /// Seeds as a range `1..10` or a list `1,2,3`; defaults to the config's list.
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    pub jobs: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Simulate(a) => commands::simulate_cmd(a),
        Command::Cluster(a) => commands::cluster(a),
        Command::Train(a) => commands::train(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Compare(a) => commands::compare(a),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Validation(_) => 1,
                CliError::Runtime(_) => 2,
            })
        }
    }
}
