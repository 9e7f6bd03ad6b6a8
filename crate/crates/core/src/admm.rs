//! ADMM reconstruction in scaled form.
//!
//! The noisy variant minimizes `1/2 ||A x - y||^2 + lambda_pen sum R(x_i)`
//! with an over-relaxation step and a constant `rho_admm`. The noiseless
//! variant replaces the ridge solve by projection onto `{x : A x = y}` and
//! grows `rho_admm` geometrically. Both return the sparse `z` iterate as
//! the reconstruction.

use std::io::Write;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::penalty::{PenaltySpec, ScalarProx};
use crate::problem::{mse_unchecked, ProblemInstance};

pub const DIVERGENCE_MSE: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdmmMode {
    Noisy,
    Noiseless,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmmConfig {
    pub lambda_pen: f64,
    pub rho_admm0: f64,
    /// Relaxation weight, noisy mode only.
    pub alpha_relax: f64,
    /// Per-iteration factor applied to `rho_admm`, noiseless mode only.
    pub rho_growth: f64,
    pub max_iter: usize,
    pub tol_primal: f64,
    pub tol_dual: f64,
    /// Also stop once the ground-truth MSE drops below this.
    pub mse_stop: Option<f64>,
    pub penalty: PenaltySpec,
    pub mode: AdmmMode,
}

impl AdmmConfig {
    pub fn noisy(lambda_pen: f64, penalty: PenaltySpec) -> Self {
        AdmmConfig {
            lambda_pen,
            rho_admm0: 1.0,
            alpha_relax: 0.5,
            rho_growth: 1.0,
            max_iter: 1000,
            tol_primal: 1e-10,
            tol_dual: 1e-10,
            mse_stop: None,
            penalty,
            mode: AdmmMode::Noisy,
        }
    }

    /// `rho_admm` starts at 1 and grows by 1% per iteration; runs stop once
    /// the MSE falls below `1e-4`.
    pub fn noiseless(penalty: PenaltySpec) -> Self {
        AdmmConfig {
            lambda_pen: 0.0,
            rho_growth: 1.01,
            mse_stop: Some(1e-4),
            mode: AdmmMode::Noiseless,
            ..Self::noisy(0.0, penalty)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Domain(msg));
        if !(self.lambda_pen >= 0.0 && self.lambda_pen.is_finite()) {
            return fail(format!("invalid lambda_pen {}", self.lambda_pen));
        }
        if !(self.rho_admm0 > 0.0 && self.rho_admm0.is_finite()) {
            return fail(format!("rho_admm0 must be positive, got {}", self.rho_admm0));
        }
        if !(self.alpha_relax > 0.0 && self.alpha_relax < 2.0) {
            return fail(format!("alpha_relax must lie in (0, 2), got {}", self.alpha_relax));
        }
        if !(self.rho_growth >= 1.0 && self.rho_growth.is_finite()) {
            return fail(format!("rho_growth must be >= 1, got {}", self.rho_growth));
        }
        if self.mode == AdmmMode::Noisy && self.rho_growth != 1.0 {
            return fail("noisy ADMM keeps rho_admm fixed (rho_growth = 1)".into());
        }
        if self.max_iter == 0 {
            return fail("max_iter must be at least 1".into());
        }
        if !(self.tol_primal > 0.0 && self.tol_dual > 0.0) {
            return fail("residual tolerances must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub x: DVector<f64>,
    pub z: DVector<f64>,
    /// Scaled dual variable.
    pub u: DVector<f64>,
    pub rho_admm: f64,
    pub iter: usize,
}

impl AdmmState {
    pub fn initial(n: usize, rho_admm: f64) -> Self {
        AdmmState {
            x: DVector::zeros(n),
            z: DVector::zeros(n),
            u: DVector::zeros(n),
            rho_admm,
            iter: 0,
        }
    }
}

/// Factorizations reused across iterations.
#[derive(Debug, Clone)]
pub enum LinearSolveCache {
    /// Cholesky factor of `A^T A + rho I` and `A^T y`.
    Noisy {
        factor: Cholesky<f64, Dyn>,
        rho_admm: f64,
        aty: DVector<f64>,
    },
    /// Cholesky factor of `A A^T` and the least-norm solution `A^T (A A^T)^{-1} y`.
    Noiseless {
        factor: Cholesky<f64, Dyn>,
        least_norm: DVector<f64>,
    },
}

pub fn build_cache(instance: &ProblemInstance, rho_admm: f64, mode: AdmmMode) -> Result<LinearSolveCache> {
    let a = &instance.a_matrix;
    match mode {
        AdmmMode::Noisy => {
            if !(rho_admm > 0.0 && rho_admm.is_finite()) {
                return Err(Error::Domain(format!("rho_admm must be positive, got {rho_admm}")));
            }
            let mut gram = a.tr_mul(a);
            for i in 0..gram.nrows() {
                gram[(i, i)] += rho_admm;
            }
            let factor = Cholesky::new(gram)
                .ok_or_else(|| Error::Factorization("A^T A + rho I is not positive definite".into()))?;
            Ok(LinearSolveCache::Noisy {
                factor,
                rho_admm,
                aty: a.tr_mul(&instance.y),
            })
        }
        AdmmMode::Noiseless => {
            let gram = a * a.transpose();
            let scale = gram.diagonal().amax().max(f64::MIN_POSITIVE);
            let factor = Cholesky::new(gram).ok_or_else(|| Error::Factorization("A A^T is singular".into()))?;
            let l = factor.l_dirty();
            let min_pivot = (0..l.nrows()).map(|i| l[(i, i)]).fold(f64::INFINITY, f64::min);
            if min_pivot * min_pivot < 1e-13 * scale {
                return Err(Error::Factorization(format!(
                    "A A^T is numerically singular (smallest pivot {min_pivot:e})"
                )));
            }
            let least_norm = a.tr_mul(&factor.solve(&instance.y));
            Ok(LinearSolveCache::Noiseless { factor, least_norm })
        }
    }
}

impl LinearSolveCache {
    /// Solves `(A^T A + rho I) x = b`.
    pub fn solve_ridge(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        match self {
            LinearSolveCache::Noisy { factor, .. } => Ok(factor.solve(b)),
            LinearSolveCache::Noiseless { .. } => Err(Error::Domain("ridge solve needs a noisy-mode cache".into())),
        }
    }

    /// Applies `I - A^T (A A^T)^{-1} A` to `v` without forming it.
    pub fn project_null(&self, a: &DMatrix<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        match self {
            LinearSolveCache::Noiseless { factor, .. } => {
                let w = factor.solve(&(a * v));
                Ok(v - a.tr_mul(&w))
            }
            LinearSolveCache::Noisy { .. } => Err(Error::Domain("projection needs a noiseless-mode cache".into())),
        }
    }

    pub fn mode(&self) -> AdmmMode {
        match self {
            LinearSolveCache::Noisy { .. } => AdmmMode::Noisy,
            LinearSolveCache::Noiseless { .. } => AdmmMode::Noiseless,
        }
    }
}

fn check_finite(state: &AdmmState) -> Result<()> {
    let ok = state
        .x
        .iter()
        .chain(state.z.iter())
        .chain(state.u.iter())
        .all(|v| v.is_finite());
    if ok {
        Ok(())
    } else {
        Err(Error::Diverged {
            iter: state.iter,
            reason: "non-finite iterate".into(),
        })
    }
}

fn noisy_prox(config: &AdmmConfig, rho_admm: f64) -> Result<ScalarProx> {
    ScalarProx::adaptive(&config.penalty, config.lambda_pen / rho_admm)
}

fn noisy_step_with(
    state: &AdmmState,
    cache: &LinearSolveCache,
    config: &AdmmConfig,
    prox: &ScalarProx,
) -> Result<AdmmState> {
    let LinearSolveCache::Noisy { factor, rho_admm, aty } = cache else {
        return Err(Error::Domain("noisy step needs a noisy-mode cache".into()));
    };
    if *rho_admm != state.rho_admm {
        return Err(Error::Domain(format!(
            "cache built for rho_admm {rho_admm}, state has {}",
            state.rho_admm
        )));
    }
    let rho = state.rho_admm;
    let mut rhs = &state.z - &state.u;
    rhs.scale_mut(rho);
    rhs += aty;
    let x_tilde = factor.solve(&rhs);
    let ar = config.alpha_relax;
    let x = x_tilde * ar + &state.z * (1.0 - ar);
    let z = (&x + &state.u).map(|v| prox.apply(v));
    let u = &state.u + &x - &z;
    let next = AdmmState {
        x,
        z,
        u,
        rho_admm: rho,
        iter: state.iter + 1,
    };
    check_finite(&next)?;
    Ok(next)
}

/// One over-relaxed ADMM iteration with `lambda_prox = lambda_pen / rho_admm`.
pub fn admm_noisy_step(
    state: &AdmmState,
    instance: &ProblemInstance,
    cache: &LinearSolveCache,
    config: &AdmmConfig,
) -> Result<AdmmState> {
    check_dims(state, instance)?;
    let prox = noisy_prox(config, state.rho_admm)?;
    noisy_step_with(state, cache, config, &prox)
}

/// One projection-based ADMM iteration with `lambda_prox = 1 / rho_admm`,
/// followed by `rho_admm *= rho_growth`.
pub fn admm_noiseless_step(
    state: &AdmmState,
    instance: &ProblemInstance,
    cache: &LinearSolveCache,
    config: &AdmmConfig,
) -> Result<AdmmState> {
    check_dims(state, instance)?;
    let LinearSolveCache::Noiseless { least_norm, .. } = cache else {
        return Err(Error::Domain("noiseless step needs a noiseless-mode cache".into()));
    };
    let x = cache.project_null(&instance.a_matrix, &(&state.z - &state.u))? + least_norm;
    let prox = ScalarProx::adaptive(&config.penalty, 1.0 / state.rho_admm)?;
    let z = (&x + &state.u).map(|v| prox.apply(v));
    let u = &state.u + &x - &z;
    let next = AdmmState {
        x,
        z,
        u,
        rho_admm: state.rho_admm * config.rho_growth,
        iter: state.iter + 1,
    };
    check_finite(&next)?;
    Ok(next)
}

fn check_dims(state: &AdmmState, instance: &ProblemInstance) -> Result<()> {
    let n = instance.n();
    for v in [&state.x, &state.z, &state.u] {
        if v.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: v.len(),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdmmTermination {
    /// Both the primal and the dual residual criteria hold.
    Converged,
    MseStop,
    /// Iteration cap reached; records which residual criterion held at the end.
    MaxIter {
        primal_met: bool,
        dual_met: bool,
    },
    Diverged,
}

impl AdmmTermination {
    pub fn label(&self) -> &'static str {
        match self {
            AdmmTermination::Converged => "converged",
            AdmmTermination::MseStop => "mse_stop",
            AdmmTermination::MaxIter {
                primal_met: true,
                dual_met: false,
            } => "max_iter_primal_met",
            AdmmTermination::MaxIter {
                primal_met: false,
                dual_met: true,
            } => "max_iter_dual_met",
            AdmmTermination::MaxIter { .. } => "max_iter",
            AdmmTermination::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmmRecord {
    pub iter: usize,
    pub mse: f64,
    /// `||z - x||`
    pub primal_residual: f64,
    /// `rho_admm ||z - z_prev||`, with the `rho_admm` used in the step.
    pub dual_residual: f64,
    /// `rho_admm` after the step.
    pub rho_admm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmTrace {
    pub records: Vec<AdmmRecord>,
    pub final_state: AdmmState,
    pub termination: AdmmTermination,
    /// Number of matrix factorizations performed during the run.
    pub factorizations: usize,
}

impl AdmmTrace {
    /// The reconstruction: the sparse `z` iterate.
    pub fn estimate(&self) -> &DVector<f64> {
        &self.final_state.z
    }

    pub fn final_mse(&self) -> Option<f64> {
        self.records.last().map(|r| r.mse)
    }

    /// Writes `iter,mse,primal_residual,dual_residual,rho_admm`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iter", "mse", "primal_residual", "dual_residual", "rho_admm"])?;
        for r in &self.records {
            w.write_record([
                r.iter.to_string(),
                r.mse.to_string(),
                r.primal_residual.to_string(),
                r.dual_residual.to_string(),
                r.rho_admm.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn run_admm(instance: &ProblemInstance, config: &AdmmConfig) -> Result<AdmmTrace> {
    let cache = build_cache(instance, config.rho_admm0, config.mode)?;
    run_admm_with_cache(instance, &cache, config).map(|mut t| {
        t.factorizations = 1;
        t
    })
}

/// Runs ADMM from `z = u = 0` with a prebuilt cache, which may be shared
/// between runs on the same instance (e.g. across a `lambda_pen` sweep).
pub fn run_admm_with_cache(
    instance: &ProblemInstance,
    cache: &LinearSolveCache,
    config: &AdmmConfig,
) -> Result<AdmmTrace> {
    config.validate()?;
    if cache.mode() != config.mode {
        return Err(Error::Domain("cache mode does not match the configuration".into()));
    }
    if config.mode == AdmmMode::Noiseless && instance.config.sigma2 != 0.0 {
        return Err(Error::Domain("noiseless ADMM needs a noiseless instance".into()));
    }

    let mut state = AdmmState::initial(instance.n(), config.rho_admm0);
    let noisy_prox = match config.mode {
        AdmmMode::Noisy => Some(noisy_prox(config, config.rho_admm0)?),
        AdmmMode::Noiseless => None,
    };
    let mut records = Vec::new();
    let termination = loop {
        let step = match &noisy_prox {
            Some(prox) => noisy_step_with(&state, cache, config, prox),
            None => admm_noiseless_step(&state, instance, cache, config),
        };
        let next = match step {
            Ok(s) => s,
            Err(Error::Diverged { .. }) => break AdmmTermination::Diverged,
            Err(e) => return Err(e),
        };
        let mse = mse_unchecked(&next.z, &instance.x_true);
        let primal = (&next.z - &next.x).norm();
        let dual = state.rho_admm * (&next.z - &state.z).norm();
        records.push(AdmmRecord {
            iter: next.iter,
            mse,
            primal_residual: primal,
            dual_residual: dual,
            rho_admm: next.rho_admm,
        });
        state = next;
        let primal_met = primal < config.tol_primal;
        let dual_met = dual < config.tol_dual;
        if !mse.is_finite() || mse > DIVERGENCE_MSE {
            break AdmmTermination::Diverged;
        }
        if config.mse_stop.is_some_and(|stop| mse < stop) {
            break AdmmTermination::MseStop;
        }
        if primal_met && dual_met {
            break AdmmTermination::Converged;
        }
        if state.iter >= config.max_iter {
            break AdmmTermination::MaxIter { primal_met, dual_met };
        }
    };
    Ok(AdmmTrace {
        records,
        final_state: state,
        termination,
        factorizations: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{generate_instance, ProblemConfig};

    fn identity_instance(y: Vec<f64>) -> ProblemInstance {
        let n = y.len();
        let cfg = ProblemConfig::new(n, 1.0, 0.5, 0.0, 0).unwrap();
        ProblemInstance::from_parts(DMatrix::identity(n, n), DVector::from_vec(y), DVector::zeros(n), cfg).unwrap()
    }

    #[test]
    fn identity_ridge_solve_halves() {
        let inst = identity_instance(vec![1.0, 2.0, 3.0]);
        let cache = build_cache(&inst, 1.0, AdmmMode::Noisy).unwrap();
        let b = DVector::from_vec(vec![2.0, -4.0, 1.0]);
        let x = cache.solve_ridge(&b).unwrap();
        assert!((x - DVector::from_vec(vec![1.0, -2.0, 0.5])).norm() < 1e-15);
    }

    #[test]
    fn ridge_solve_residual_is_small() {
        let inst = generate_instance(&ProblemConfig::new(100, 0.5, 0.3, 0.01, 21).unwrap()).unwrap();
        let cache = build_cache(&inst, 1.0, AdmmMode::Noisy).unwrap();
        let b = DVector::from_fn(100, |i, _| (i as f64 * 0.37).sin());
        let x = cache.solve_ridge(&b).unwrap();
        let a = &inst.a_matrix;
        let residual = a.tr_mul(&(a * &x)) + &x - &b;
        assert!(residual.norm() <= 1e-10 * b.norm());
    }

    #[test]
    fn projector_annihilates_the_row_space() {
        let inst = generate_instance(&ProblemConfig::new(80, 0.5, 0.3, 0.0, 22).unwrap()).unwrap();
        let cache = build_cache(&inst, 1.0, AdmmMode::Noiseless).unwrap();
        let coeffs = DVector::from_fn(40, |i, _| (i as f64).cos());
        let v = inst.a_matrix.tr_mul(&coeffs);
        let p = cache.project_null(&inst.a_matrix, &v).unwrap();
        assert!(p.norm() < 1e-10 * v.norm().max(1.0));
    }

    #[test]
    fn rank_deficient_gram_is_rejected() {
        let mut a = DMatrix::from_fn(3, 6, |i, j| ((i + 1) * (j + 2)) as f64 * 0.1);
        let row = a.row(0).clone_owned();
        a.set_row(2, &(row * 2.0));
        let cfg = ProblemConfig::new(6, 0.5, 0.5, 0.0, 0).unwrap();
        let inst = ProblemInstance::from_parts(a, DVector::zeros(6), DVector::zeros(3), cfg).unwrap();
        assert!(matches!(
            build_cache(&inst, 1.0, AdmmMode::Noiseless),
            Err(Error::Factorization(_))
        ));
    }

    #[test]
    fn zero_penalty_makes_z_track_x_plus_u() {
        let inst = generate_instance(&ProblemConfig::new(30, 0.6, 0.3, 0.01, 5).unwrap()).unwrap();
        let cfg = AdmmConfig::noisy(0.0, PenaltySpec::log_sum());
        let cache = build_cache(&inst, 1.0, AdmmMode::Noisy).unwrap();
        let mut s = AdmmState::initial(30, 1.0);
        for _ in 0..3 {
            let next = admm_noisy_step(&s, &inst, &cache, &cfg).unwrap();
            assert_eq!(next.z, &next.x + &s.u);
            assert!(next.u.iter().all(|&v| v == 0.0));
            s = next;
        }
    }

    #[test]
    fn identity_problem_first_step_and_limit() {
        let inst = identity_instance(vec![1.0, 0.0]);
        let mut cfg = AdmmConfig::noisy(0.0, PenaltySpec::l1());
        cfg.alpha_relax = 1.0;
        let cache = build_cache(&inst, 1.0, AdmmMode::Noisy).unwrap();
        let s1 = admm_noisy_step(&AdmmState::initial(2, 1.0), &inst, &cache, &cfg).unwrap();
        assert!((s1.x[0] - 0.5).abs() < 1e-15 && s1.x[1] == 0.0);
        let trace = run_admm(&inst, &cfg).unwrap();
        assert!((trace.estimate()[0] - 1.0).abs() < 1e-9);
        assert_eq!(trace.termination, AdmmTermination::Converged);
    }

    #[test]
    fn huge_penalty_shrinks_everything() {
        let inst = generate_instance(&ProblemConfig::new(40, 0.5, 0.5, 0.01, 6).unwrap()).unwrap();
        for pen in [PenaltySpec::log_sum(), PenaltySpec::l1()] {
            let cfg = AdmmConfig::noisy(1e8, pen);
            let cache = build_cache(&inst, 1.0, AdmmMode::Noisy).unwrap();
            let s1 = admm_noisy_step(&AdmmState::initial(40, 1.0), &inst, &cache, &cfg).unwrap();
            assert!(s1.z.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn stationary_point_is_a_fixed_point() {
        // Run to convergence, then set x = z and check one more step is a no-op.
        let inst = generate_instance(&ProblemConfig::new(30, 0.8, 0.2, 0.01, 9).unwrap()).unwrap();
        let mut cfg = AdmmConfig::noisy(0.05, PenaltySpec::l1());
        cfg.max_iter = 20_000;
        let trace = run_admm(&inst, &cfg).unwrap();
        assert_eq!(trace.termination, AdmmTermination::Converged);
        let mut s = trace.final_state.clone();
        s.x = s.z.clone();
        let cache = build_cache(&inst, 1.0, AdmmMode::Noisy).unwrap();
        let next = admm_noisy_step(&s, &inst, &cache, &cfg).unwrap();
        assert!((&next.z - &s.z).amax() < 1e-9);
        assert!((&next.u - &s.u).amax() < 1e-9);
    }

    #[test]
    fn noiseless_step_is_feasible_and_grows_rho() {
        let inst = generate_instance(&ProblemConfig::new(100, 0.6, 0.2, 0.0, 10).unwrap()).unwrap();
        let cfg = AdmmConfig::noiseless(PenaltySpec::log_sum());
        let cache = build_cache(&inst, 1.0, AdmmMode::Noiseless).unwrap();
        let mut s = AdmmState::initial(100, 1.0);
        let ynorm = inst.y.norm();
        for t in 1..=25 {
            s = admm_noiseless_step(&s, &inst, &cache, &cfg).unwrap();
            let r = (&inst.a_matrix * &s.x - &inst.y).norm();
            assert!(r <= 1e-8 * ynorm, "iteration {t}: residual {r}");
            assert_eq!(s.rho_admm, (0..t).fold(1.0, |r, _| r * 1.01));
        }
    }

    #[test]
    fn projection_of_a_feasible_point_is_itself() {
        let inst = generate_instance(&ProblemConfig::new(60, 0.5, 0.2, 0.0, 12).unwrap()).unwrap();
        let cfg = AdmmConfig::noiseless(PenaltySpec::log_sum());
        let cache = build_cache(&inst, 1.0, AdmmMode::Noiseless).unwrap();
        let mut s = AdmmState::initial(60, 1.0);
        s.z = inst.x_true.clone();
        let next = admm_noiseless_step(&s, &inst, &cache, &cfg).unwrap();
        assert!((&next.x - &inst.x_true).amax() < 1e-10);
    }

    #[test]
    fn scaled_dual_identity_holds_exactly() {
        let inst = generate_instance(&ProblemConfig::new(50, 0.7, 0.3, 0.01, 13).unwrap()).unwrap();
        let cfg = AdmmConfig::noisy(0.1, PenaltySpec::log_sum());
        let cache = build_cache(&inst, 1.0, AdmmMode::Noisy).unwrap();
        let mut s = AdmmState::initial(50, 1.0);
        for _ in 0..20 {
            let next = admm_noisy_step(&s, &inst, &cache, &cfg).unwrap();
            let lhs = &next.u - &s.u;
            let rhs = &next.x - &next.z;
            assert!((lhs - rhs).amax() <= 1e-14 * (1.0 + s.u.amax()));
            s = next;
        }
    }

    #[test]
    fn mode_mismatches_are_rejected() {
        let noisy = generate_instance(&ProblemConfig::new(20, 0.5, 0.3, 0.01, 14).unwrap()).unwrap();
        assert!(run_admm(&noisy, &AdmmConfig::noiseless(PenaltySpec::l1())).is_err());
        let mut cfg = AdmmConfig::noisy(0.1, PenaltySpec::l1());
        cfg.rho_growth = 1.01;
        assert!(run_admm(&noisy, &cfg).is_err());
        let cache = build_cache(&noisy, 1.0, AdmmMode::Noisy).unwrap();
        assert!(cache.project_null(&noisy.a_matrix, &DVector::zeros(20)).is_err());
    }

    #[test]
    fn zero_signal_noiseless_recovers_exactly() {
        let inst = generate_instance(&ProblemConfig::new(50, 0.5, 0.0, 0.0, 15).unwrap()).unwrap();
        let trace = run_admm(&inst, &AdmmConfig::noiseless(PenaltySpec::log_sum())).unwrap();
        assert_eq!(trace.final_mse(), Some(0.0));
    }
}
