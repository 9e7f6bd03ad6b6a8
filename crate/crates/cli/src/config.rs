//! Experiment configuration: built-in defaults, then an optional TOML file,
//! then command-line flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use logsum_recovery::penalty::PenaltyKind;
use logsum_recovery::state_evolution::log_grid;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Amp,
    #[serde(alias = "admmn")]
    Admm,
    Se,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Amp => "amp",
            Solver::Admm => "admm",
            Solver::Se => "se",
        }
    }
}

impl std::fmt::Display for Solver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Solver {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "amp" => Ok(Solver::Amp),
            "admm" | "admmn" => Ok(Solver::Admm),
            "se" => Ok(Solver::Se),
            other => Err(format!("unknown solver '{other}' (expected amp, admm or se)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    SeFixedPoint,
    PhaseDiagram,
    MseSweep,
    BestMseGrid,
}

/// Accepts either a scalar or an array in the config file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

/// Every setting is optional so that files and flags can be layered.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub n: Option<usize>,
    pub alpha: Option<OneOrMany<f64>>,
    pub rho: Option<OneOrMany<f64>>,
    pub sigma2: Option<f64>,
    pub lambda: Option<OneOrMany<f64>>,
    /// Number of log-spaced `lambda` values in `[1e-4, 1e2]`, used when
    /// `lambda` is not given explicitly.
    pub lambda_points: Option<usize>,
    /// Side length of the default `(alpha, rho)` grids.
    pub grid: Option<usize>,
    pub penalty: Option<OneOrMany<String>>,
    pub solver: Option<OneOrMany<String>>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub damping: Option<f64>,
    pub max_iter: Option<usize>,
    pub out: Option<PathBuf>,
    pub jsonl: Option<PathBuf>,
    pub boundary_out: Option<PathBuf>,
    pub paper_scale: Option<bool>,
}

impl Overrides {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid config file: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Fields set in `other` replace those in `self`.
    pub fn layer(self, other: Overrides) -> Overrides {
        Overrides {
            n: other.n.or(self.n),
            alpha: other.alpha.or(self.alpha),
            rho: other.rho.or(self.rho),
            sigma2: other.sigma2.or(self.sigma2),
            lambda: other.lambda.or(self.lambda),
            lambda_points: other.lambda_points.or(self.lambda_points),
            grid: other.grid.or(self.grid),
            penalty: other.penalty.or(self.penalty),
            solver: other.solver.or(self.solver),
            trials: other.trials.or(self.trials),
            seed: other.seed.or(self.seed),
            jobs: other.jobs.or(self.jobs),
            damping: other.damping.or(self.damping),
            max_iter: other.max_iter.or(self.max_iter),
            out: other.out.or(self.out),
            jsonl: other.jsonl.or(self.jsonl),
            boundary_out: other.boundary_out.or(self.boundary_out),
            paper_scale: other.paper_scale.or(self.paper_scale),
        }
    }
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub n: usize,
    pub alphas: Vec<f64>,
    pub rhos: Vec<f64>,
    pub sigma2: f64,
    pub lambdas: Vec<f64>,
    /// Size of the log-spaced search grid used by `best-mse-grid`.
    pub lambda_points: usize,
    pub penalties: Vec<PenaltyKind>,
    pub solvers: Vec<Solver>,
    pub trials: usize,
    pub seed: u64,
    pub jobs: usize,
    /// Damping for AMP and state evolution.
    pub damping: f64,
    pub max_iter: usize,
    pub out: Option<PathBuf>,
    pub jsonl: Option<PathBuf>,
    pub boundary_out: Option<PathBuf>,
    pub paper_scale: bool,
}

pub const LAMBDA_MIN: f64 = 1e-4;
pub const LAMBDA_MAX: f64 = 1e2;
pub const DEFAULT_SEED: u64 = 1;
/// Upper bound on generated grid sizes.
pub const MAX_GRID_POINTS: usize = 100_000;

/// `count` evenly spaced points in `(0, hi]`.
pub fn open_grid(hi: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|i| hi * i as f64 / count as f64).collect()
}

fn parse_penalties(names: Vec<String>) -> Result<Vec<PenaltyKind>, CliError> {
    names
        .iter()
        .map(|s| PenaltyKind::from_str(s).map_err(|e| CliError::Usage(e.to_string())))
        .collect()
}

fn parse_solvers(names: Vec<String>) -> Result<Vec<Solver>, CliError> {
    names
        .iter()
        .map(|s| Solver::from_str(s).map_err(CliError::Usage))
        .collect()
}

impl ExperimentConfig {
    pub fn resolve(command: Command, o: Overrides) -> Result<Self, CliError> {
        let full_scale = o.paper_scale.unwrap_or(false);
        let grid = o.grid.unwrap_or(if full_scale { 50 } else { 15 });
        let default_n = if full_scale { 1000 } else { 500 };
        let lambda_points = o
            .lambda_points
            .unwrap_or(if command == Command::BestMseGrid { 60 } else { 40 });
        if grid == 0 || grid > MAX_GRID_POINTS || lambda_points > MAX_GRID_POINTS {
            return Err(CliError::Usage(format!(
                "grid and lambda_points must lie in [1, {MAX_GRID_POINTS}]"
            )));
        }

        let (alphas, rhos, sigma2, lambdas, penalties, solvers, trials) = match command {
            Command::Solve => (
                vec![0.9],
                vec![0.4],
                1e-2,
                vec![0.1],
                vec![PenaltyKind::LogSum],
                vec![Solver::Amp],
                1,
            ),
            Command::SeFixedPoint => (
                vec![0.9],
                vec![0.4],
                1e-2,
                vec![0.1],
                vec![PenaltyKind::LogSum, PenaltyKind::L1],
                vec![Solver::Se],
                1,
            ),
            Command::PhaseDiagram => (
                open_grid(1.0, grid),
                open_grid(1.0, grid),
                0.0,
                vec![0.0],
                vec![PenaltyKind::LogSum],
                vec![Solver::Admm],
                5,
            ),
            Command::MseSweep => (
                vec![0.9],
                vec![0.4],
                1e-2,
                log_grid(LAMBDA_MIN, LAMBDA_MAX, lambda_points.max(1)),
                vec![PenaltyKind::LogSum, PenaltyKind::L1],
                vec![Solver::Se, Solver::Amp, Solver::Admm],
                10,
            ),
            Command::BestMseGrid => (
                open_grid(1.5, grid),
                open_grid(1.0, grid),
                1e-2,
                vec![],
                vec![PenaltyKind::LogSum, PenaltyKind::L1],
                vec![Solver::Se],
                1,
            ),
        };

        let cfg = ExperimentConfig {
            command,
            n: o.n.unwrap_or(default_n),
            alphas: o.alpha.map(OneOrMany::into_vec).unwrap_or(alphas),
            rhos: o.rho.map(OneOrMany::into_vec).unwrap_or(rhos),
            sigma2: o.sigma2.unwrap_or(sigma2),
            lambdas: o.lambda.map(OneOrMany::into_vec).unwrap_or(lambdas),
            lambda_points,
            penalties: match o.penalty {
                Some(p) => parse_penalties(p.into_vec())?,
                None => penalties,
            },
            solvers: match o.solver {
                Some(s) => parse_solvers(s.into_vec())?,
                None => solvers,
            },
            trials: o.trials.unwrap_or(trials),
            seed: o.seed.unwrap_or(DEFAULT_SEED),
            jobs: o
                .jobs
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
            damping: o.damping.unwrap_or(0.2),
            max_iter: o.max_iter.unwrap_or(1000),
            out: o.out,
            jsonl: o.jsonl,
            boundary_out: o.boundary_out,
            paper_scale: full_scale,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |msg: String| Err(CliError::Usage(msg));
        let sorted_nonempty = |name: &str, v: &[f64], allow_empty: bool| -> Result<(), CliError> {
            if v.is_empty() && !allow_empty {
                return usage(format!("{name} grid is empty"));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return usage(format!("{name} grid has non-finite values"));
            }
            if v.windows(2).any(|w| w[0] > w[1]) {
                return usage(format!("{name} grid must be sorted in ascending order"));
            }
            Ok(())
        };
        sorted_nonempty("alpha", &self.alphas, false)?;
        sorted_nonempty("rho", &self.rhos, false)?;
        sorted_nonempty("lambda", &self.lambdas, self.command == Command::BestMseGrid)?;
        if self.n == 0 {
            return usage("n must be at least 1".into());
        }
        if self.trials == 0 {
            return usage("trials must be at least 1".into());
        }
        if self.lambda_points == 0 {
            return usage("lambda_points must be at least 1".into());
        }
        if self.jobs == 0 {
            return usage("jobs must be at least 1".into());
        }
        if self.max_iter == 0 {
            return usage("max_iter must be at least 1".into());
        }
        if self.penalties.is_empty() || self.solvers.is_empty() {
            return usage("at least one penalty and one solver are required".into());
        }
        if !(0.0..1.0).contains(&self.damping) {
            return usage(format!("damping must lie in [0, 1), got {}", self.damping));
        }
        if self.alphas.iter().any(|&a| a <= 0.0) {
            return usage("alpha values must be positive".into());
        }
        if self.rhos.iter().any(|&r| !(0.0..=1.0).contains(&r)) {
            return usage("rho values must lie in [0, 1]".into());
        }
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return usage(format!("sigma2 must be non-negative, got {}", self.sigma2));
        }
        if self.lambdas.iter().any(|&l| l < 0.0) {
            return usage("lambda values must be non-negative".into());
        }

        match self.command {
            Command::Solve => {
                if self.alphas.len() != 1
                    || self.rhos.len() != 1
                    || self.lambdas.len() != 1
                    || self.penalties.len() != 1
                    || self.solvers.len() != 1
                {
                    return usage("solve takes a single alpha, rho, lambda, penalty and solver".into());
                }
            }
            Command::SeFixedPoint => {}
            Command::PhaseDiagram => {
                if self.sigma2 != 0.0 {
                    return usage("phase-diagram needs sigma2 = 0".into());
                }
                if self.rhos.contains(&0.0) {
                    return usage("phase-diagram needs rho > 0".into());
                }
            }
            Command::MseSweep => {
                if self.sigma2 <= 0.0 {
                    return usage("mse-sweep needs sigma2 > 0".into());
                }
                if self.lambdas.iter().any(|&l| !(LAMBDA_MIN..=LAMBDA_MAX).contains(&l)) {
                    return usage(format!(
                        "mse-sweep lambda values must lie in [{LAMBDA_MIN}, {LAMBDA_MAX}]"
                    ));
                }
            }
            Command::BestMseGrid => {
                if self.sigma2 <= 0.0 {
                    return usage("best-mse-grid needs sigma2 > 0".into());
                }
                if !self.lambdas.is_empty() {
                    return usage("best-mse-grid searches [1e-4, 1e2]; set lambda_points instead of lambda".into());
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let file = Overrides::from_toml_str("n = 200\nalpha = [0.5, 0.7]\ntrials = 3\n").unwrap();
        let flags = Overrides {
            n: Some(100),
            ..Overrides::default()
        };
        let cfg = ExperimentConfig::resolve(Command::SeFixedPoint, file.layer(flags)).unwrap();
        assert_eq!(cfg.n, 100);
        assert_eq!(cfg.alphas, vec![0.5, 0.7]);
        assert_eq!(cfg.trials, 3);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Overrides::from_toml_str("bogus = 1").is_err());
    }

    #[test]
    fn scalar_or_array_grids() {
        let o = Overrides::from_toml_str("rho = 0.3\nsolver = \"admmn\"\n").unwrap();
        let cfg = ExperimentConfig::resolve(Command::Solve, o).unwrap();
        assert_eq!(cfg.rhos, vec![0.3]);
        assert_eq!(cfg.solvers, vec![Solver::Admm]);
    }

    #[test]
    fn desk_and_full_scale_defaults() {
        let desk = ExperimentConfig::resolve(Command::PhaseDiagram, Overrides::default()).unwrap();
        assert_eq!((desk.alphas.len(), desk.rhos.len(), desk.n), (15, 15, 500));
        let scaled = Overrides {
            paper_scale: Some(true),
            ..Overrides::default()
        };
        let full = ExperimentConfig::resolve(Command::PhaseDiagram, scaled).unwrap();
        assert_eq!((full.alphas.len(), full.rhos.len(), full.n), (50, 50, 1000));
        assert_eq!(*full.alphas.last().unwrap(), 1.0);
        let sweep = ExperimentConfig::resolve(Command::MseSweep, Overrides::default()).unwrap();
        assert_eq!(sweep.lambdas.len(), 40);
        assert_eq!(sweep.lambdas[0], LAMBDA_MIN);
        assert_eq!(*sweep.lambdas.last().unwrap(), LAMBDA_MAX);
    }

    #[test]
    fn invalid_configs_are_usage_errors() {
        let cases = [
            (Command::Solve, "alpha = [0.5, 0.6]"),
            (Command::SeFixedPoint, "alpha = [0.7, 0.5]"),
            (Command::SeFixedPoint, "alpha = []"),
            (Command::SeFixedPoint, "trials = 0"),
            (Command::PhaseDiagram, "sigma2 = 0.1"),
            (Command::MseSweep, "sigma2 = 0.0"),
            (Command::MseSweep, "lambda = [1e-6]"),
            (Command::BestMseGrid, "sigma2 = 0.0"),
            (Command::Solve, "penalty = \"l2\""),
            (Command::Solve, "solver = \"ista\""),
            (Command::Solve, "rho = 1.5"),
        ];
        for (cmd, text) in cases {
            let o = Overrides::from_toml_str(text).unwrap();
            let err = ExperimentConfig::resolve(cmd, o).unwrap_err();
            assert!(matches!(err, CliError::Usage(_)), "{text}: {err:?}");
        }
    }
}
