//! Experiment commands. Each returns its rows in grid order; [`run`] writes them.

use std::path::PathBuf;

use logsum_recovery::admm::{
    build_cache, run_admm_with_cache, AdmmConfig, AdmmMode, AdmmTermination, LinearSolveCache,
};
use logsum_recovery::amp::{run_amp, AmpConfig, AmpTermination};
use logsum_recovery::penalty::{PenaltyKind, PenaltySpec};
use logsum_recovery::problem::{derive_trial_seed, generate_instance, ProblemConfig, ProblemInstance};
use logsum_recovery::state_evolution::{
    best_mse_over_lambda, phase_boundary, run_se, BoundarySearch, LambdaSearch, SeConfig, SeTrace,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Command, ExperimentConfig, Solver, LAMBDA_MAX, LAMBDA_MIN};
use crate::error::CliError;
use crate::output::{sibling_path, write_rows};

/// Noiseless runs count as recovered below this MSE.
pub const SUCCESS_MSE: f64 = 1e-4;

/// Result of one solver run on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    /// `None` when the run diverged or failed.
    pub mse: Option<f64>,
    pub iters: usize,
    pub termination: String,
}

/// Mean and standard error over non-diverged trials.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub mean: Option<f64>,
    /// Sample standard deviation over `sqrt(count)`; needs two trials.
    pub std_err: Option<f64>,
    pub count: usize,
    pub diverged: usize,
    pub iters_mean: Option<f64>,
    pub termination: String,
}

impl Aggregate {
    pub fn from_outcomes(outcomes: &[TrialOutcome]) -> Self {
        let ok: Vec<&TrialOutcome> = outcomes.iter().filter(|o| o.mse.is_some()).collect();
        let values: Vec<f64> = ok.iter().filter_map(|o| o.mse).collect();
        let count = values.len();
        let mean = (count > 0).then(|| values.iter().sum::<f64>() / count as f64);
        let std_err = match (mean, count) {
            (Some(m), c) if c >= 2 => {
                let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (c - 1) as f64;
                Some((var / c as f64).sqrt())
            }
            _ => None,
        };
        let iters_mean = (count > 0).then(|| ok.iter().map(|o| o.iters as f64).sum::<f64>() / count as f64);
        let termination = match outcomes.first() {
            Some(first) if outcomes.iter().all(|o| o.termination == first.termination) => first.termination.clone(),
            Some(_) => "mixed".to_string(),
            None => String::new(),
        };
        Aggregate {
            mean,
            std_err,
            count,
            diverged: outcomes.len() - count,
            iters_mean,
            termination,
        }
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))
}

fn failed(reason: impl Into<String>) -> TrialOutcome {
    TrialOutcome {
        mse: None,
        iters: 0,
        termination: reason.into(),
    }
}

fn amp_outcome(
    instance: &ProblemInstance,
    lambda: f64,
    penalty: PenaltyKind,
    cfg: &ExperimentConfig,
    mse_stop: f64,
) -> TrialOutcome {
    let amp_cfg = AmpConfig {
        damping: cfg.damping,
        max_iter: cfg.max_iter,
        mse_stop,
        ..AmpConfig::new(lambda, PenaltySpec::from_kind(penalty))
    };
    match run_amp(instance, &amp_cfg) {
        Ok(trace) => TrialOutcome {
            mse: trace
                .final_mse()
                .filter(|_| trace.termination != AmpTermination::Diverged),
            iters: trace.records.len(),
            termination: trace.termination.label().to_string(),
        },
        Err(e) => failed(format!("error: {e}")),
    }
}

fn admm_config(lambda: f64, penalty: PenaltyKind, mode: AdmmMode, max_iter: usize) -> AdmmConfig {
    let spec = PenaltySpec::from_kind(penalty);
    let base = match mode {
        AdmmMode::Noisy => AdmmConfig::noisy(lambda, spec),
        AdmmMode::Noiseless => AdmmConfig::noiseless(spec),
    };
    AdmmConfig { max_iter, ..base }
}

fn admm_outcome(instance: &ProblemInstance, cache: &LinearSolveCache, config: &AdmmConfig) -> TrialOutcome {
    match run_admm_with_cache(instance, cache, config) {
        Ok(trace) => TrialOutcome {
            mse: trace
                .final_mse()
                .filter(|_| trace.termination != AdmmTermination::Diverged),
            iters: trace.records.len(),
            termination: trace.termination.label().to_string(),
        },
        Err(e) => failed(format!("error: {e}")),
    }
}

fn se_config(cfg: &ExperimentConfig, alpha: f64, rho: f64, lambda: f64, penalty: PenaltyKind) -> SeConfig {
    SeConfig {
        damping: cfg.damping,
        max_iter: cfg.max_iter,
        ..SeConfig::noisy(alpha, rho, cfg.sigma2, lambda, PenaltySpec::from_kind(penalty))
    }
}

/// Noiseless state evolution with the success rule used for the phase diagram.
fn noiseless_se_config(cfg: &ExperimentConfig, alpha: f64, rho: f64, penalty: PenaltyKind) -> SeConfig {
    SeConfig {
        max_iter: cfg.max_iter,
        ..SeConfig::noiseless(alpha, rho, PenaltySpec::from_kind(penalty))
    }
}

fn se_outcome(config: &SeConfig) -> Result<(TrialOutcome, SeTrace), CliError> {
    let trace = run_se(config)?;
    let outcome = TrialOutcome {
        mse: (!trace.status.is_failure()).then_some(trace.final_state.e),
        iters: trace.final_state.iter,
        termination: trace.status.label().to_string(),
    };
    Ok((outcome, trace))
}

fn instance(cfg: &ExperimentConfig, alpha: f64, rho: f64, trial: usize) -> Result<ProblemInstance, CliError> {
    let seed = derive_trial_seed(cfg.seed, trial as u64);
    let problem =
        ProblemConfig::new(cfg.n, alpha, rho, cfg.sigma2, seed).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(generate_instance(&problem)?)
}

fn admm_mode(sigma2: f64) -> AdmmMode {
    if sigma2 == 0.0 {
        AdmmMode::Noiseless
    } else {
        AdmmMode::Noisy
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveRow {
    /// `trial`, `mean`, or `fixed_point` for state evolution.
    pub record: String,
    pub trial: Option<usize>,
    pub seed: Option<u64>,
    pub solver: Solver,
    pub penalty: PenaltyKind,
    pub n: Option<usize>,
    pub alpha: f64,
    pub rho: f64,
    pub sigma2: f64,
    pub lambda_pen: f64,
    pub mse: Option<f64>,
    pub mse_se: Option<f64>,
    pub iters: Option<f64>,
    pub termination: String,
    pub diverged: usize,
}

pub fn cmd_solve(cfg: &ExperimentConfig) -> Result<Vec<SolveRow>, CliError> {
    let (alpha, rho, lambda) = (cfg.alphas[0], cfg.rhos[0], cfg.lambdas[0]);
    let (solver, penalty) = (cfg.solvers[0], cfg.penalties[0]);
    let row = |record: &str, trial: Option<usize>, o: &TrialOutcome| SolveRow {
        record: record.to_string(),
        trial,
        seed: trial.map(|t| derive_trial_seed(cfg.seed, t as u64)),
        solver,
        penalty,
        n: (solver != Solver::Se).then_some(cfg.n),
        alpha,
        rho,
        sigma2: cfg.sigma2,
        lambda_pen: lambda,
        mse: o.mse,
        mse_se: None,
        iters: Some(o.iters as f64),
        termination: o.termination.clone(),
        diverged: usize::from(o.mse.is_none()),
    };

    if solver == Solver::Se {
        let (outcome, _) = se_outcome(&se_config(cfg, alpha, rho, lambda, penalty))?;
        return Ok(vec![row("fixed_point", None, &outcome)]);
    }

    let outcomes = pool(cfg.jobs)?.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| -> Result<TrialOutcome, CliError> {
                let inst = instance(cfg, alpha, rho, t)?;
                Ok(match solver {
                    Solver::Amp => amp_outcome(&inst, lambda, penalty, cfg, 1e-10),
                    _ => {
                        let mode = admm_mode(cfg.sigma2);
                        let admm = admm_config(lambda, penalty, mode, cfg.max_iter);
                        match build_cache(&inst, admm.rho_admm0, mode) {
                            Ok(cache) => admm_outcome(&inst, &cache, &admm),
                            Err(e) => failed(format!("error: {e}")),
                        }
                    }
                })
            })
            .collect::<Result<Vec<_>, _>>()
    })?;

    let mut rows: Vec<SolveRow> = outcomes
        .iter()
        .enumerate()
        .map(|(t, o)| row("trial", Some(t), o))
        .collect();
    let agg = Aggregate::from_outcomes(&outcomes);
    rows.push(SolveRow {
        record: "mean".into(),
        trial: None,
        seed: None,
        mse: agg.mean,
        mse_se: agg.std_err,
        iters: agg.iters_mean,
        termination: agg.termination,
        diverged: agg.diverged,
        ..row("mean", None, &outcomes[0])
    });
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointRow {
    pub alpha: f64,
    pub rho: f64,
    pub sigma2: f64,
    pub lambda_pen: f64,
    pub penalty: PenaltyKind,
    #[serde(rename = "E_fixed")]
    pub e_fixed: f64,
    pub chi_fixed: f64,
    pub iters: usize,
    pub status: String,
}

pub fn cmd_se_fixed_point(cfg: &ExperimentConfig) -> Result<Vec<FixedPointRow>, CliError> {
    let mut points = Vec::new();
    for &alpha in &cfg.alphas {
        for &rho in &cfg.rhos {
            for &lambda in &cfg.lambdas {
                for &penalty in &cfg.penalties {
                    points.push((alpha, rho, lambda, penalty));
                }
            }
        }
    }
    pool(cfg.jobs)?.install(|| {
        points
            .par_iter()
            .map(|&(alpha, rho, lambda, penalty)| {
                let se = se_config(cfg, alpha, rho, lambda, penalty);
                let trace = run_se(&se)?;
                Ok(FixedPointRow {
                    alpha,
                    rho,
                    sigma2: cfg.sigma2,
                    lambda_pen: lambda,
                    penalty,
                    e_fixed: trace.final_state.e,
                    chi_fixed: trace.final_state.chi,
                    iters: trace.final_state.iter,
                    status: trace.status.label().to_string(),
                })
            })
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseRow {
    pub alpha: f64,
    pub rho: f64,
    pub solver: Solver,
    pub penalty: PenaltyKind,
    pub n: Option<usize>,
    pub trials: usize,
    pub mse_mean: Option<f64>,
    pub mse_se: Option<f64>,
    pub success: bool,
    pub diverged: usize,
    pub iters_mean: Option<f64>,
    pub termination: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryRow {
    pub rho: f64,
    pub penalty: PenaltyKind,
    pub alpha_c: Option<f64>,
    pub status: String,
}

/// State-evolution boundary `alpha_c(rho)` for both penalties.
pub fn boundary_series(cfg: &ExperimentConfig) -> Result<Vec<BoundaryRow>, CliError> {
    let points: Vec<(f64, PenaltyKind)> = cfg
        .rhos
        .iter()
        .flat_map(|&rho| [PenaltyKind::LogSum, PenaltyKind::L1].map(|p| (rho, p)))
        .collect();
    let search = BoundarySearch::default();
    pool(cfg.jobs)?.install(|| {
        Ok(points
            .par_iter()
            .map(|&(rho, penalty)| {
                let template = noiseless_se_config(cfg, 1.0, rho, penalty);
                match phase_boundary(rho, &template, &search) {
                    Ok(a) => BoundaryRow {
                        rho,
                        penalty,
                        alpha_c: Some(a),
                        status: "ok".into(),
                    },
                    Err(e) => BoundaryRow {
                        rho,
                        penalty,
                        alpha_c: None,
                        status: e.to_string(),
                    },
                }
            })
            .collect())
    })
}

pub fn cmd_phase_diagram(cfg: &ExperimentConfig) -> Result<Vec<PhaseRow>, CliError> {
    // One task per (grid point, solver, penalty, trial); SE has a single "trial".
    let mut points = Vec::new();
    for &alpha in &cfg.alphas {
        for &rho in &cfg.rhos {
            for &solver in &cfg.solvers {
                for &penalty in &cfg.penalties {
                    points.push((alpha, rho, solver, penalty));
                }
            }
        }
    }
    let tasks: Vec<(usize, usize)> = points
        .iter()
        .enumerate()
        .flat_map(|(i, p)| {
            let trials = if p.2 == Solver::Se { 1 } else { cfg.trials };
            (0..trials).map(move |t| (i, t))
        })
        .collect();

    let outcomes: Vec<TrialOutcome> = pool(cfg.jobs)?.install(|| {
        tasks
            .par_iter()
            .map(|&(i, t)| -> Result<TrialOutcome, CliError> {
                let (alpha, rho, solver, penalty) = points[i];
                if solver == Solver::Se {
                    return Ok(se_outcome(&noiseless_se_config(cfg, alpha, rho, penalty))?.0);
                }
                let inst = instance(cfg, alpha, rho, t)?;
                Ok(match solver {
                    Solver::Amp => amp_outcome(&inst, 0.0, penalty, cfg, SUCCESS_MSE),
                    _ => {
                        let admm = admm_config(0.0, penalty, AdmmMode::Noiseless, cfg.max_iter);
                        match build_cache(&inst, admm.rho_admm0, AdmmMode::Noiseless) {
                            Ok(cache) => admm_outcome(&inst, &cache, &admm),
                            Err(e) => failed(format!("error: {e}")),
                        }
                    }
                })
            })
            .collect::<Result<Vec<_>, _>>()
    })?;

    let mut rows = Vec::with_capacity(points.len());
    let mut cursor = 0;
    for &(alpha, rho, solver, penalty) in &points {
        let trials = if solver == Solver::Se { 1 } else { cfg.trials };
        let agg = Aggregate::from_outcomes(&outcomes[cursor..cursor + trials]);
        cursor += trials;
        rows.push(PhaseRow {
            alpha,
            rho,
            solver,
            penalty,
            n: (solver != Solver::Se).then_some(cfg.n),
            trials,
            success: agg.mean.is_some_and(|m| m < SUCCESS_MSE),
            mse_mean: agg.mean,
            mse_se: agg.std_err,
            diverged: agg.diverged,
            iters_mean: agg.iters_mean,
            termination: agg.termination,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda_pen: f64,
    pub solver: Solver,
    pub penalty: PenaltyKind,
    pub alpha: f64,
    pub rho: f64,
    pub sigma2: f64,
    pub n: Option<usize>,
    pub trials: usize,
    pub mse_mean: Option<f64>,
    pub mse_se: Option<f64>,
    pub diverged: usize,
    pub iters_mean: Option<f64>,
    pub termination: String,
}

/// Per-trial outcomes of a lambda sweep, indexed `[penalty][lambda]`.
fn sweep_trial(
    cfg: &ExperimentConfig,
    solver: Solver,
    alpha: f64,
    rho: f64,
    trial: usize,
) -> Result<Vec<Vec<TrialOutcome>>, CliError> {
    let inst = instance(cfg, alpha, rho, trial)?;
    let cache = match solver {
        Solver::Admm => Some(build_cache(&inst, 1.0, AdmmMode::Noisy)),
        _ => None,
    };
    Ok(cfg
        .penalties
        .iter()
        .map(|&penalty| {
            cfg.lambdas
                .iter()
                .map(|&lambda| match &cache {
                    Some(Ok(cache)) => admm_outcome(
                        &inst,
                        cache,
                        &admm_config(lambda, penalty, AdmmMode::Noisy, cfg.max_iter),
                    ),
                    Some(Err(e)) => failed(format!("error: {e}")),
                    None => amp_outcome(&inst, lambda, penalty, cfg, 1e-10),
                })
                .collect()
        })
        .collect())
}

pub fn cmd_mse_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>, CliError> {
    let (alpha, rho) = (cfg.alphas[0], cfg.rhos[0]);
    if cfg.alphas.len() != 1 || cfg.rhos.len() != 1 {
        return Err(CliError::Usage("mse-sweep takes a single alpha and rho".into()));
    }
    let pool = pool(cfg.jobs)?;

    let mut by_solver = Vec::new();
    for &solver in &cfg.solvers {
        // Aggregates indexed [penalty][lambda].
        let aggregates: Vec<Vec<(Aggregate, usize)>> = if solver == Solver::Se {
            let points: Vec<(PenaltyKind, f64)> = cfg
                .penalties
                .iter()
                .flat_map(|&p| cfg.lambdas.iter().map(move |&l| (p, l)))
                .collect();
            let outcomes = pool.install(|| {
                points
                    .par_iter()
                    .map(|&(p, l)| se_outcome(&se_config(cfg, alpha, rho, l, p)).map(|x| x.0))
                    .collect::<Result<Vec<_>, _>>()
            })?;
            outcomes
                .chunks(cfg.lambdas.len())
                .map(|c| {
                    c.iter()
                        .map(|o| (Aggregate::from_outcomes(std::slice::from_ref(o)), 0))
                        .collect()
                })
                .collect()
        } else {
            let trials = pool.install(|| {
                (0..cfg.trials)
                    .into_par_iter()
                    .map(|t| sweep_trial(cfg, solver, alpha, rho, t))
                    .collect::<Result<Vec<_>, _>>()
            })?;
            (0..cfg.penalties.len())
                .map(|p| {
                    (0..cfg.lambdas.len())
                        .map(|l| {
                            let outcomes: Vec<TrialOutcome> = trials.iter().map(|t| t[p][l].clone()).collect();
                            (Aggregate::from_outcomes(&outcomes), cfg.trials)
                        })
                        .collect()
                })
                .collect()
        };
        by_solver.push((solver, aggregates));
    }

    let mut rows = Vec::new();
    for (l, &lambda) in cfg.lambdas.iter().enumerate() {
        for (solver, aggregates) in &by_solver {
            for (p, &penalty) in cfg.penalties.iter().enumerate() {
                let (agg, trials) = &aggregates[p][l];
                rows.push(SweepRow {
                    lambda_pen: lambda,
                    solver: *solver,
                    penalty,
                    alpha,
                    rho,
                    sigma2: cfg.sigma2,
                    n: (*solver != Solver::Se).then_some(cfg.n),
                    trials: *trials,
                    mse_mean: agg.mean,
                    mse_se: agg.std_err,
                    diverged: agg.diverged,
                    iters_mean: agg.iters_mean,
                    termination: agg.termination.clone(),
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestMseRow {
    pub alpha: f64,
    pub rho: f64,
    pub sigma2: f64,
    pub lambda_logsum: Option<f64>,
    pub mse_logsum: Option<f64>,
    pub lambda_l1: Option<f64>,
    pub mse_l1: Option<f64>,
    /// `mse_logsum - mse_l1`
    pub d: Option<f64>,
    pub status: String,
}

pub fn cmd_best_mse_grid(cfg: &ExperimentConfig) -> Result<Vec<BestMseRow>, CliError> {
    let points: Vec<(f64, f64)> = cfg
        .alphas
        .iter()
        .flat_map(|&a| cfg.rhos.iter().map(move |&r| (a, r)))
        .collect();
    let search = LambdaSearch {
        lo: LAMBDA_MIN,
        hi: LAMBDA_MAX,
        grid_points: cfg.lambda_points,
        ..LambdaSearch::default()
    };
    pool(cfg.jobs)?.install(|| {
        Ok(points
            .par_iter()
            .map(|&(alpha, rho)| {
                let mut row = BestMseRow {
                    alpha,
                    rho,
                    sigma2: cfg.sigma2,
                    lambda_logsum: None,
                    mse_logsum: None,
                    lambda_l1: None,
                    mse_l1: None,
                    d: None,
                    status: String::new(),
                };
                let mut problems = Vec::new();
                for &penalty in &cfg.penalties {
                    let template = se_config(cfg, alpha, rho, 0.0, penalty);
                    match best_mse_over_lambda(&template, &search) {
                        Ok(best) => match penalty {
                            PenaltyKind::LogSum => {
                                row.lambda_logsum = Some(best.lambda);
                                row.mse_logsum = Some(best.mse);
                            }
                            PenaltyKind::L1 => {
                                row.lambda_l1 = Some(best.lambda);
                                row.mse_l1 = Some(best.mse);
                            }
                        },
                        Err(e) => problems.push(format!("{penalty}: {e}")),
                    }
                }
                row.d = row.mse_logsum.zip(row.mse_l1).map(|(a, b)| a - b);
                row.status = if problems.is_empty() {
                    "ok".into()
                } else {
                    problems.join("; ")
                };
                row
            })
            .collect())
    })
}

/// Runs the configured command and writes its output files.
pub fn run(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let out = cfg.out.as_deref();
    let jsonl = cfg.jsonl.as_deref();
    match cfg.command {
        Command::Solve => write_rows(&cmd_solve(cfg)?, out, jsonl),
        Command::SeFixedPoint => write_rows(&cmd_se_fixed_point(cfg)?, out, jsonl),
        Command::MseSweep => write_rows(&cmd_mse_sweep(cfg)?, out, jsonl),
        Command::BestMseGrid => write_rows(&cmd_best_mse_grid(cfg)?, out, jsonl),
        Command::PhaseDiagram => {
            write_rows(&cmd_phase_diagram(cfg)?, out, jsonl)?;
            let boundary_path: Option<PathBuf> = cfg
                .boundary_out
                .clone()
                .or_else(|| cfg.out.as_deref().map(|p| sibling_path(p, "boundary")));
            match boundary_path {
                Some(path) => {
                    let boundary_jsonl = cfg.jsonl.as_deref().map(|p| sibling_path(p, "boundary"));
                    write_rows(&boundary_series(cfg)?, Some(&path), boundary_jsonl.as_deref())
                }
                None => {
                    eprintln!("note: boundary series skipped; pass --out or --boundary-out to write it");
                    Ok(())
                }
            }
        }
    }
}
