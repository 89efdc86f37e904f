//! The `cgwish` command-line tool.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

mod commands;
mod ordering;

pub use commands::{check_graph, fit, oracle, simulate};
pub use ordering::OrderPolicy;

/// Exit status for bad input.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit status for a numerical breakdown.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "cgwish", version, about = "Bayesian covariance graph models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Classify a graph and print its cliques, ordering and Hasse diagram.
    CheckGraph(CheckGraphArgs),
    /// Fit the posterior mean of the covariance by block Gibbs sampling.
    Fit(FitArgs),
    /// Draw Gaussian observations from a covariance in P_G.
    Simulate(SimulateArgs),
    /// Closed-form normalizing constant and prior mean on a homogeneous graph.
    Oracle(OracleArgs),
}

#[derive(Args, Debug)]
pub struct CheckGraphArgs {
    pub graph: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Observations as CSV, one row each.
    #[arg(long, conflicts_with = "cov", required_unless_present = "cov")]
    pub data: Option<PathBuf>,
    /// The CSV starts with a header row.
    #[arg(long, requires = "data")]
    pub header: bool,
    /// Sample covariance matrix file (needs --n).
    #[arg(long, requires = "n")]
    pub cov: Option<PathBuf>,
    /// Number of observations behind --cov.
    #[arg(long, requires = "cov")]
    pub n: Option<usize>,
    /// Prior and sampler config (`key = value` lines).
    #[arg(long)]
    pub prior: PathBuf,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub chains: Option<usize>,
    /// Centered updating (the default).
    #[arg(long, conflicts_with = "no_center")]
    pub center: bool,
    /// Uncentered updating: the data have known mean zero.
    #[arg(long)]
    pub no_center: bool,
    /// given | auto | hasse | yeast-primary | yeast-alternate | <file>.
    #[arg(long, default_value = "auto")]
    pub order: String,
    /// Comma-separated vertex names for the report.
    #[arg(long)]
    pub names: Option<String>,
    /// Write every kept (L, D) to this CSV file.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, required_unless_present = "paper_sim50")]
    pub graph: Option<PathBuf>,
    /// True covariance matrix file.
    #[arg(long, conflicts_with = "paper_sim50", required_unless_present = "paper_sim50")]
    pub sigma: Option<PathBuf>,
    /// The built-in 50-vertex homogeneous graph with diagonal 50 and edge entries 1.
    #[arg(long, conflicts_with = "graph")]
    pub paper_sim50: bool,
    /// Also write the graph used.
    #[arg(long)]
    pub graph_out: Option<PathBuf>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write a header row `v1,...,vm`.
    #[arg(long)]
    pub header: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub prior: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Result of a command: report text and exit status.
#[derive(Debug)]
pub struct Outcome {
    pub report: String,
    pub code: i32,
}

impl Outcome {
    fn ok(report: String) -> Self {
        Outcome { report, code: 0 }
    }
}

/// Exit status for an error chain: numerical failures get
/// [`EXIT_NUMERICAL`], everything else [`EXIT_VALIDATION`].
pub fn exit_code(err: &anyhow::Error) -> i32 {
    let numerical = err
        .chain()
        .find_map(|e| e.downcast_ref::<cgwish_core::Error>())
        .is_some_and(|e| e.is_numerical());
    if numerical {
        EXIT_NUMERICAL
    } else {
        EXIT_VALIDATION
    }
}

pub fn run(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::CheckGraph(a) => check_graph(&a),
        Command::Fit(a) => fit(&a),
        Command::Simulate(a) => simulate(&a),
        Command::Oracle(a) => oracle(&a),
    }
}
