//! Command-line parsing.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Command, ExperimentConfig, OneOrMany, Overrides};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "logsum",
    version,
    about = "Sparse recovery experiments with log-sum and l1 penalties"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Run one solver at one (alpha, rho, sigma2, lambda) point over several trials.
    #[command(
        after_help = "CSV columns: record,trial,seed,solver,penalty,n,alpha,rho,sigma2,lambda_pen,mse,mse_se,iters,termination,diverged\n\
        One `trial` row per trial and a final `mean` row; state evolution emits a single `fixed_point` row."
    )]
    Solve(CommonArgs),
    /// State-evolution fixed points over alpha x rho x lambda x penalty.
    #[command(after_help = "CSV columns: alpha,rho,sigma2,lambda_pen,penalty,E_fixed,chi_fixed,iters,status")]
    SeFixedPoint(CommonArgs),
    /// Noiseless recovery grid over (alpha, rho) with the state-evolution boundary.
    #[command(
        after_help = "CSV columns: alpha,rho,solver,penalty,n,trials,mse_mean,mse_se,success,diverged,iters_mean,termination\n\
        Boundary series (written next to --out as <stem>_boundary.csv, or to --boundary-out): rho,penalty,alpha_c,status"
    )]
    PhaseDiagram(CommonArgs),
    /// Final MSE against lambda for each solver and penalty.
    #[command(
        after_help = "CSV columns: lambda_pen,solver,penalty,alpha,rho,sigma2,n,trials,mse_mean,mse_se,diverged,iters_mean,termination"
    )]
    MseSweep(CommonArgs),
    /// State-evolution best MSE over lambda on an (alpha, rho) grid.
    #[command(
        after_help = "CSV columns: alpha,rho,sigma2,lambda_logsum,mse_logsum,lambda_l1,mse_l1,d,status\n\
        d = mse_logsum - mse_l1"
    )]
    BestMseGrid(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML file with the same keys as the flags (underscores instead of dashes).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Signal dimension N.
    #[arg(long)]
    pub n: Option<usize>,
    /// Measurement rate(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// Signal density(ies), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub rho: Option<Vec<f64>>,
    /// Noise variance.
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Regularization value(s), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
    /// Number of log-spaced lambda values in [1e-4, 1e2] when --lambda is not given.
    #[arg(long)]
    pub lambda_points: Option<usize>,
    /// Side length of the default (alpha, rho) grids.
    #[arg(long)]
    pub grid: Option<usize>,
    /// logsum or l1, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub penalty: Option<Vec<String>>,
    /// amp, admm (alias admmn) or se, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub solver: Option<Vec<String>>,
    /// Independent instances per grid point.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Master seed; per-trial seeds are derived from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Damping for AMP and state evolution.
    #[arg(long)]
    pub damping: Option<f64>,
    /// Iteration cap for AMP, ADMM and state evolution.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the rows as JSON lines to this path.
    #[arg(long)]
    pub jsonl: Option<PathBuf>,
    /// Boundary series path for phase-diagram.
    #[arg(long)]
    pub boundary_out: Option<PathBuf>,
    /// Use the full-size grids, N and trial counts.
    #[arg(long)]
    pub paper_scale: bool,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            n: self.n,
            alpha: self.alpha.clone().map(OneOrMany::Many),
            rho: self.rho.clone().map(OneOrMany::Many),
            sigma2: self.sigma2,
            lambda: self.lambda.clone().map(OneOrMany::Many),
            lambda_points: self.lambda_points,
            grid: self.grid,
            penalty: self.penalty.clone().map(OneOrMany::Many),
            solver: self.solver.clone().map(OneOrMany::Many),
            trials: self.trials,
            seed: self.seed,
            jobs: self.jobs,
            damping: self.damping,
            max_iter: self.max_iter,
            out: self.out.clone(),
            jsonl: self.jsonl.clone(),
            boundary_out: self.boundary_out.clone(),
            paper_scale: self.paper_scale.then_some(true),
        }
    }
}

impl Cmd {
    fn parts(&self) -> (Command, &CommonArgs) {
        match self {
            Cmd::Solve(a) => (Command::Solve, a),
            Cmd::SeFixedPoint(a) => (Command::SeFixedPoint, a),
            Cmd::PhaseDiagram(a) => (Command::PhaseDiagram, a),
            Cmd::MseSweep(a) => (Command::MseSweep, a),
            Cmd::BestMseGrid(a) => (Command::BestMseGrid, a),
        }
    }

    /// Layers defaults, the config file and the flags.
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let (command, args) = self.parts();
        let file = match &args.config {
            Some(path) => Overrides::from_file(path)?,
            None => Overrides::default(),
        };
        ExperimentConfig::resolve(command, file.layer(args.overrides()))
    }
}
