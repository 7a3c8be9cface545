//! `gprank`: generalized PageRank experiments from the command line.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::EXIT_CONFIG;

#[derive(Debug, Parser)]
#[command(name = "gprank", version, about = "Generalized PageRank diffusion and seed-expansion experiments")]
pub struct Cli {
    /// TOML file with defaults for any flag (keys are long flag names).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads.
    #[arg(long, global = true, env = "GPRANK_THREADS")]
    pub threads: Option<usize>,

    /// Master seed of the random streams.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a two-block SBM and write its edge list and communities.
    GenSbm(GenSbmArgs),
    /// Write landing probabilities `k,vertex,x,z`.
    Lp(LpArgs),
    /// Run seed-expansion detection for one scheme; per-trial recalls.
    Detect(DetectArgs),
    /// Paired sweep over schemes, step counts and budgets.
    Sweep(SweepArgs),
    /// Variance decay of LPs and DNLPs around the SBM mean field.
    Variance(VarianceArgs),
    /// Estimate max(|lambda_2|, |lambda_n|) of the walk matrix.
    Lambda2(Lambda2Args),
    /// Largest connected component, community size filter, BFS sub-networks.
    Prep(PrepArgs),
    /// Evaluate the concentration bound expressions.
    Bound(BoundArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenSbm(_) => "gen-sbm",
            Command::Lp(_) => "lp",
            Command::Detect(_) => "detect",
            Command::Sweep(_) => "sweep",
            Command::Variance(_) => "variance",
            Command::Lambda2(_) => "lambda2",
            Command::Prep(_) => "prep",
            Command::Bound(_) => "bound",
        }
    }
}

#[derive(Debug, Args, Clone)]
pub struct GraphSource {
    /// Edge list (`u v` per line, `#` comments).
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Community file (one community per line).
    #[arg(long)]
    pub communities: Option<PathBuf>,
    /// Two-block SBM `n1,p1,n0,p0,q`.
    #[arg(long)]
    pub sbm: Option<String>,
    /// Which SBM draw to use.
    #[arg(long)]
    pub trial: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GenSbmArgs {
    /// Two-block SBM `n1,p1,n0,p0,q`.
    #[arg(long)]
    pub sbm: Option<String>,
    #[arg(long)]
    pub trial: Option<u64>,
}

#[derive(Debug, Args)]
pub struct LpArgs {
    #[command(flatten)]
    pub source: GraphSource,
    /// Seed vertex ids (original ids); repeat or comma-separate.
    #[arg(long = "from", value_delimiter = ',')]
    pub from: Vec<u64>,
    /// Steps K.
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Debug, Args, Clone)]
pub struct DetectionArgs {
    #[command(flatten)]
    pub source: GraphSource,
    /// Community index in the community file (default 0).
    #[arg(long)]
    pub community: Option<usize>,
    #[arg(long)]
    pub seed_count: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Score raw LPs instead of DNLPs.
    #[arg(long)]
    pub raw: bool,
    /// Do not force the seeds into the prediction.
    #[arg(long)]
    pub exclude_seeds: bool,
    /// Work on the BFS sub-network this many hops around the seeds.
    #[arg(long)]
    pub hops: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub common: DetectionArgs,
    /// Weight scheme: ppr:A | hpr:H | ipr-d:T | ipr-u:T:auto | ipr-u:T:PHI | custom:PATH
    #[arg(long)]
    pub scheme: Option<String>,
    /// Steps K (default 50 on SBMs, 4x the seed eccentricity otherwise).
    #[arg(long)]
    pub steps: Option<usize>,
    /// Budget Q (default |C|).
    #[arg(long)]
    pub budget: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: DetectionArgs,
    /// Weight schemes; repeat for several.
    #[arg(long)]
    pub scheme: Vec<String>,
    /// Step counts; repeat or comma-separate.
    #[arg(long, value_delimiter = ',')]
    pub steps: Vec<usize>,
    /// Budgets; repeat or comma-separate.
    #[arg(long, value_delimiter = ',')]
    pub budget: Vec<usize>,
    /// Average over every community (after any size filter).
    #[arg(long)]
    pub all_communities: bool,
    /// Keep the N communities nearest in size to m^(3/4).
    #[arg(long)]
    pub nearest: Option<usize>,
    /// Keep communities with sizes in `MIN,MAX`.
    #[arg(long)]
    pub window: Option<String>,
    /// Also write an SVG of recall against K.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Debug, Args)]
pub struct VarianceArgs {
    /// Two-block SBM `n1,p1,n0,p0,q`.
    #[arg(long)]
    pub sbm: Option<String>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// k-window `LO,HI` of the reported log-slope fit.
    #[arg(long)]
    pub slope_window: Option<String>,
    /// Skip the SVG plot.
    #[arg(long)]
    pub no_plot: bool,
}

#[derive(Debug, Args)]
pub struct Lambda2Args {
    #[command(flatten)]
    pub source: GraphSource,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PrepArgs {
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub communities: Option<PathBuf>,
    #[arg(long)]
    pub nearest: Option<usize>,
    #[arg(long)]
    pub window: Option<String>,
    /// Also extract one BFS sub-network per selected community.
    #[arg(long)]
    pub hops: Option<usize>,
    #[arg(long)]
    pub seed_count: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    /// Take n, degrees and lambda from an SBM `n1,p1,n0,p0,q`.
    #[arg(long)]
    pub sbm: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub dbar_min: Option<f64>,
    #[arg(long)]
    pub dbar_max: Option<f64>,
    #[arg(long)]
    pub lambda_bar: Option<f64>,
    #[arg(long)]
    pub x0_norm: Option<f64>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    #[arg(long)]
    pub c3: Option<f64>,
    /// Step for the LP and DNLP bounds.
    #[arg(long)]
    pub k: Option<usize>,
    /// Scheme for the g series.
    #[arg(long)]
    pub scheme: Option<String>,
    /// Truncate the scheme at K steps instead of summing the full series.
    #[arg(long)]
    pub steps: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
