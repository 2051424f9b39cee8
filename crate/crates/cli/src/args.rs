use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use seqsearch::Distribution;

use crate::CliError;

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (interface 1.0)");

#[derive(Debug, Parser)]
#[command(name = "seqsearch", version = VERSION, about = "Equilibria, welfare and simulation for sequential-search contests")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Seed for every simulation.
    #[arg(long, global = true, env = "SEQSEARCH_SEED", default_value_t = 42)]
    pub seed: u64,
    /// Write the result here instead of stdout; a manifest is written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Run simulations and sweeps on the current thread only.
    #[arg(long, global = true)]
    pub sequential: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one equilibrium or planner problem.
    #[command(subcommand)]
    Solve(SolveCmd),
    /// Produce a CSV table.
    #[command(subcommand)]
    Table(TableCmd),
    /// Run a simulation or numerical check; exits 3 on failure.
    #[command(subcommand)]
    Verify(VerifyCmd),
}

#[derive(Debug, Clone, Args)]
pub struct DistArgs {
    /// Distribution as `family:params`, e.g. `uniform:0,1`, `exponential:1`, `pareto:2,1`.
    #[arg(long, default_value = "uniform:0,1", conflicts_with = "dist_file")]
    pub dist: String,
    /// JSON distribution spec.
    #[arg(long)]
    pub dist_file: Option<PathBuf>,
}

impl DistArgs {
    pub fn load(&self) -> Result<Distribution, CliError> {
        match &self.dist_file {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Io {
                    path: p.display().to_string(),
                    source: e,
                })?;
                Distribution::from_json(&text).map_err(|e| CliError::Usage(e.to_string()))
            }
            None => self.dist.parse().map_err(|e: seqsearch::Error| CliError::Usage(e.to_string())),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ContestArgs {
    /// Number of players.
    #[arg(long)]
    pub n: usize,
    /// Cost per draw.
    #[arg(long)]
    pub cost: f64,
    #[arg(long, default_value_t = 1.0)]
    pub prize: f64,
    #[command(flatten)]
    pub dist: DistArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DesignerArgs {
    /// Number of designers.
    #[arg(long)]
    pub m: usize,
    /// Workers per designer.
    #[arg(long)]
    pub team: usize,
    #[arg(long)]
    pub cost: f64,
    #[arg(long, default_value_t = 1.0)]
    pub meta_prize: f64,
    #[command(flatten)]
    pub dist: DistArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    #[arg(long, default_value_t = 200_000)]
    pub reps: u64,
    /// Draw cap for threshold strategies (default: 40 / acceptance probability).
    #[arg(long)]
    pub max_draws: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum SolveCmd {
    /// Symmetric winner-take-all equilibrium.
    Symmetric(ContestArgs),
    /// Symmetric equilibrium under rank-order prizes.
    Multiprize {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        cost: f64,
        /// Comma-separated prizes, best rank first.
        #[arg(long, conflicts_with = "linear", required_unless_present = "linear")]
        prizes: Option<String>,
        /// Linear schedule W_k = a (N + 1 - k).
        #[arg(long)]
        linear: Option<f64>,
        #[command(flatten)]
        dist: DistArgs,
    },
    /// Two-threshold equilibrium with one high-threshold player.
    Asymmetric(ContestArgs),
    /// Finite-horizon equilibrium with at most `draws` draws.
    Finite {
        #[arg(long)]
        n: usize,
        /// Cost over prize, c/W.
        #[arg(long)]
        cost_ratio: f64,
        #[arg(long, default_value_t = 2)]
        draws: usize,
        #[command(flatten)]
        dist: DistArgs,
    },
    /// Symmetric designer equilibrium.
    Designer(DesignerArgs),
    /// Welfare-maximizing threshold and efficient prize.
    Planner {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        cost: f64,
        #[command(flatten)]
        dist: DistArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum TableCmd {
    /// Round-1 thresholds with two draws, N = 2..9.
    #[command(name = "finite_k2")]
    FiniteK2,
    /// Round-1 thresholds with three draws, N = 2..9.
    #[command(name = "finite_k3")]
    FiniteK3,
    /// Efficient prize for the three reference families.
    #[command(name = "welfare_examples")]
    WelfareExamples {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        cost: f64,
    },
    /// All round thresholds over a range of N.
    Profile {
        #[arg(long, default_value_t = 2)]
        draws: usize,
        #[arg(long)]
        cost_ratio: f64,
        #[arg(long, default_value_t = 2)]
        n_min: usize,
        #[arg(long, default_value_t = 20)]
        n_max: usize,
    },
    /// Designer acceptance probability as the number of designers grows.
    #[command(name = "large_market")]
    LargeMarket {
        #[arg(long, default_value_t = 2)]
        team: usize,
        #[arg(long)]
        cost: f64,
        /// Meta-prize per designer, Omega / M.
        #[arg(long, default_value_t = 1.0)]
        per_designer_prize: f64,
        #[arg(long, default_value_t = 100)]
        m_max: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Three players, c = 0.1, uniform values, two-threshold equilibrium.
    #[value(name = "asymmetric-n3")]
    AsymmetricN3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Symmetric,
    Asymmetric,
    Finite,
}

#[derive(Debug, Subcommand)]
pub enum VerifyCmd {
    /// Simulated dissipation and payoffs at the symmetric equilibrium.
    Dissipation {
        #[command(flatten)]
        contest: ContestArgs,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Acceptance rate, draws, cost and dissipation compared across distributions.
    #[command(name = "distribution_free")]
    DistributionFree {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        cost: f64,
        #[arg(long, default_value_t = 1.0)]
        prize: f64,
        /// Distributions to compare (repeatable); defaults to uniform, exponential and Pareto.
        #[arg(long = "dist")]
        dists: Vec<String>,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Brute-force deviation scan against a solved equilibrium.
    #[command(name = "best_response")]
    BestResponse {
        #[arg(long)]
        preset: Option<Preset>,
        #[arg(long, value_enum, default_value_t = Family::Symmetric)]
        family: Family,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        cost: f64,
        #[arg(long, default_value_t = 1.0)]
        prize: f64,
        /// Draws per player for `--family finite`.
        #[arg(long, default_value_t = 2)]
        draws: usize,
        /// Deviation grid size.
        #[arg(long, default_value_t = 99)]
        grid: usize,
        #[command(flatten)]
        dist: DistArgs,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Finite-difference check of the designer first-order condition.
    #[command(name = "designer_foc")]
    DesignerFoc {
        #[command(flatten)]
        designer: DesignerArgs,
        /// Step in quantile units.
        #[arg(long, default_value_t = 1e-5)]
        step: f64,
    },
    /// With-recall versus no-recall final values.
    Recall {
        #[command(flatten)]
        contest: ContestArgs,
        #[arg(long, default_value_t = 100_000)]
        reps: u64,
    },
}
