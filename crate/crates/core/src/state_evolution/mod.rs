//! State evolution: the scalar recursion on `(E, chi)` that predicts the
//! large-system behaviour of AMP.
//!
//! Every Gaussian expectation is reduced to a one-dimensional integral. For
//! a zero signal component `h = s z`. For a nonzero one, `(x0, h)` is jointly
//! Gaussian with `h ~ N(0, 1 + s^2)`, `E[x0 | h] = h / (1 + s^2)` and
//! `Var[x0 | h] = s^2 / (1 + s^2)`, so
//! `E[(S(h) - x0)^2] = E[(S(h) - h / (1 + s^2))^2] + s^2 / (1 + s^2)`.

mod l1;
pub mod quadrature;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::penalty::{PenaltyKind, PenaltySpec, ScalarProx};

pub use quadrature::{gaussian_expectation, gaussian_expectation_many, QuadEstimate, QuadratureConfig};

/// Values of `E` above this are treated as divergence.
pub const DIVERGENCE_MSE: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeConfig {
    pub alpha: f64,
    pub rho: f64,
    pub sigma2: f64,
    pub lambda_pen: f64,
    /// Fraction of the previous `(E, chi)` retained at each step.
    pub damping: f64,
    pub max_iter: usize,
    /// Stop once `E` drops below this value.
    pub mse_stop: f64,
    /// Stop once successive `E` and `chi` differ by less than this.
    pub fixed_point_tol: f64,
    pub penalty: PenaltySpec,
    pub quad: QuadratureConfig,
}

impl SeConfig {
    /// Settings used for the noisy experiments: damping 0.2, at most 1000
    /// iterations, stop below `E = 1e-10`.
    pub fn noisy(alpha: f64, rho: f64, sigma2: f64, lambda_pen: f64, penalty: PenaltySpec) -> Self {
        SeConfig {
            alpha,
            rho,
            sigma2,
            lambda_pen,
            damping: 0.2,
            max_iter: 1000,
            mse_stop: 1e-10,
            fixed_point_tol: 1e-12,
            penalty,
            quad: QuadratureConfig::default(),
        }
    }

    /// Noiseless limit `sigma2 = 0`, `lambda_pen -> 0+`, declared successful
    /// once `E < 1e-4`.
    pub fn noiseless(alpha: f64, rho: f64, penalty: PenaltySpec) -> Self {
        SeConfig {
            sigma2: 0.0,
            lambda_pen: 0.0,
            damping: 0.0,
            mse_stop: 1e-4,
            ..Self::noisy(alpha, rho, 0.0, 0.0, penalty)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::Domain(format!("invalid {what}: {v}")));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha", self.alpha);
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return bad("rho", self.rho);
        }
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return bad("sigma2", self.sigma2);
        }
        if !(self.lambda_pen >= 0.0 && self.lambda_pen.is_finite()) {
            return bad("lambda_pen", self.lambda_pen);
        }
        if !(0.0..1.0).contains(&self.damping) {
            return bad("damping", self.damping);
        }
        if self.max_iter == 0 {
            return Err(Error::Domain("max_iter must be at least 1".into()));
        }
        if !(self.mse_stop >= 0.0) {
            return bad("mse_stop", self.mse_stop);
        }
        if !(self.fixed_point_tol > 0.0) {
            return bad("fixed_point_tol", self.fixed_point_tol);
        }
        self.quad.validate()
    }

    /// Prox scale `(chi + lambda_pen) / alpha`.
    pub fn lambda_prox(&self, chi: f64) -> f64 {
        (chi + self.lambda_pen) / self.alpha
    }

    /// Variance of the effective Gaussian noise on `h` for a given `E`.
    pub fn effective_variance(&self, e: f64) -> f64 {
        (self.sigma2 + e) / self.alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeState {
    pub e: f64,
    pub chi: f64,
    pub iter: usize,
}

impl SeState {
    /// `E = E[(x0)^2] = rho`, `chi = 1`.
    pub fn initial(config: &SeConfig) -> Self {
        SeState {
            e: config.rho,
            chi: 1.0,
            iter: 0,
        }
    }
}

/// Undamped outputs of one SE step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeMoments {
    /// `E[(S(h) - x0)^2]`
    pub e_next: f64,
    /// `E[S'(h)] / alpha`
    pub k: f64,
    /// `(chi + lambda_pen) k`
    pub chi_next: f64,
    pub lambda_prox: f64,
}

fn check_state(state: &SeState) -> Result<()> {
    if state.e >= 0.0 && state.e.is_finite() && state.chi >= 0.0 && state.chi.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("invalid SE state {state:?}")))
    }
}

/// One SE step evaluated by adaptive quadrature, without damping.
pub fn se_moments(state: &SeState, config: &SeConfig) -> Result<SeMoments> {
    check_state(state)?;
    let lambda_prox = config.lambda_prox(state.chi);
    let prox = ScalarProx::adaptive(&config.penalty, lambda_prox)?;
    let s2 = config.effective_variance(state.e);
    let s = s2.sqrt();
    let theta = prox.threshold();
    let rho = config.rho;

    let (zero_sq, zero_slope) = if rho >= 1.0 {
        (0.0, 0.0)
    } else if s == 0.0 {
        (prox.apply(0.0).powi(2), prox.derivative(0.0))
    } else {
        let kinks = if prox.is_identity() {
            vec![]
        } else {
            vec![-theta / s, theta / s]
        };
        let [sq, slope] = gaussian_expectation_many(
            |t| {
                let h = s * t;
                let v = prox.apply(h);
                [v * v, prox.derivative(h)]
            },
            &kinks,
            &config.quad,
        )?;
        (sq.value, slope.value)
    };

    let (signal_err, signal_slope) = if rho <= 0.0 {
        (0.0, 0.0)
    } else {
        let v2 = 1.0 + s2;
        let v = v2.sqrt();
        let kinks = if prox.is_identity() {
            vec![]
        } else {
            vec![-theta / v, theta / v]
        };
        let [dev, slope] = gaussian_expectation_many(
            |t| {
                let h = v * t;
                let d = prox.apply(h) - t / v;
                [d * d, prox.derivative(h)]
            },
            &kinks,
            &config.quad,
        )?;
        (dev.value + s2 / v2, slope.value)
    };

    Ok(finish(
        config,
        state,
        lambda_prox,
        zero_sq,
        zero_slope,
        signal_err,
        signal_slope,
    ))
}

fn finish(
    config: &SeConfig,
    state: &SeState,
    lambda_prox: f64,
    zero_sq: f64,
    zero_slope: f64,
    signal_err: f64,
    signal_slope: f64,
) -> SeMoments {
    let rho = config.rho;
    let e_next = (1.0 - rho) * zero_sq + rho * signal_err;
    let k = ((1.0 - rho) * zero_slope + rho * signal_slope) / config.alpha;
    SeMoments {
        e_next,
        k,
        chi_next: (state.chi + config.lambda_pen) * k,
        lambda_prox,
    }
}

/// One SE step for the `l1` penalty using closed-form expressions in terms
/// of `erfc`, without damping.
pub fn se_moments_l1_closed_form(state: &SeState, config: &SeConfig) -> Result<SeMoments> {
    if config.penalty.kind != PenaltyKind::L1 {
        return Err(Error::Domain(
            "closed-form state evolution requires the l1 penalty".into(),
        ));
    }
    check_state(state)?;
    let lambda_prox = config.lambda_prox(state.chi);
    let s2 = config.effective_variance(state.e);
    let zero = l1::soft_threshold_moments(s2, lambda_prox);
    let v2 = 1.0 + s2;
    let signal = l1::soft_threshold_moments(v2, lambda_prox);
    // E[(S - h/v2)^2] + s2/v2 = E[S^2] - 2 slope + 1/v2 + s2/v2
    let signal_err = (signal.second - 2.0 * signal.slope + 1.0).max(0.0);
    Ok(finish(
        config,
        state,
        lambda_prox,
        zero.second,
        zero.slope,
        signal_err,
        signal.slope,
    ))
}

fn damped(state: &SeState, m: &SeMoments, damping: f64) -> SeState {
    SeState {
        e: (1.0 - damping) * m.e_next + damping * state.e,
        chi: (1.0 - damping) * m.chi_next + damping * state.chi,
        iter: state.iter + 1,
    }
}

pub fn se_step(state: &SeState, config: &SeConfig) -> Result<SeState> {
    let m = se_moments(state, config)?;
    Ok(damped(state, &m, config.damping))
}

pub fn se_step_l1_closed_form(state: &SeState, config: &SeConfig) -> Result<SeState> {
    let m = se_moments_l1_closed_form(state, config)?;
    Ok(damped(state, &m, config.damping))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeRecord {
    pub iter: usize,
    pub e: f64,
    pub chi: f64,
    pub k: f64,
    pub lambda_prox: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeStatus {
    FixedPoint,
    MseStop,
    MaxIter,
    Diverged,
    /// Quadrature failed while computing step `iter`.
    QuadratureFailure {
        iter: usize,
    },
}

impl SeStatus {
    pub fn label(&self) -> &'static str {
        match self {
            SeStatus::FixedPoint => "fixed_point",
            SeStatus::MseStop => "mse_stop",
            SeStatus::MaxIter => "max_iter",
            SeStatus::Diverged => "diverged",
            SeStatus::QuadratureFailure { .. } => "quadrature_failure",
        }
    }

    pub fn is_failure(&self) -> bool {
        matches!(self, SeStatus::Diverged | SeStatus::QuadratureFailure { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeTrace {
    /// One record per completed step; record `t` holds the state after `t + 1` steps.
    pub records: Vec<SeRecord>,
    pub final_state: SeState,
    pub status: SeStatus,
}

/// Iterates the SE recursion from `E = rho`, `chi = 1`.
///
/// Uses the closed form for `l1` and quadrature for log-sum.
pub fn run_se(config: &SeConfig) -> Result<SeTrace> {
    config.validate()?;
    let mut state = SeState::initial(config);
    let mut records = Vec::new();
    let status = loop {
        let moments = match config.penalty.kind {
            PenaltyKind::L1 => se_moments_l1_closed_form(&state, config),
            PenaltyKind::LogSum => se_moments(&state, config),
        };
        let moments = match moments {
            Ok(m) => m,
            Err(Error::QuadratureFailure { .. }) => break SeStatus::QuadratureFailure { iter: state.iter + 1 },
            Err(e) => return Err(e),
        };
        let next = damped(&state, &moments, config.damping);
        records.push(SeRecord {
            iter: next.iter,
            e: next.e,
            chi: next.chi,
            k: moments.k,
            lambda_prox: moments.lambda_prox,
        });
        let settled =
            (next.e - state.e).abs() < config.fixed_point_tol && (next.chi - state.chi).abs() < config.fixed_point_tol;
        let diverged = !(next.e.is_finite() && next.chi.is_finite()) || next.e > DIVERGENCE_MSE;
        state = next;
        if diverged {
            break SeStatus::Diverged;
        }
        if state.e < config.mse_stop {
            break SeStatus::MseStop;
        }
        if settled {
            break SeStatus::FixedPoint;
        }
        if state.iter >= config.max_iter {
            break SeStatus::MaxIter;
        }
    };
    Ok(SeTrace {
        records,
        final_state: state,
        status,
    })
}

/// Bracket and resolution for [`phase_boundary`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySearch {
    pub lo: f64,
    pub hi: f64,
    pub resolution: f64,
    /// Evenly spaced rates checked for a monotone failure/success pattern
    /// before bisection.
    pub scan_points: usize,
}

impl Default for BoundarySearch {
    fn default() -> Self {
        BoundarySearch {
            lo: 1e-3,
            hi: 1.5,
            resolution: 1e-3,
            scan_points: 16,
        }
    }
}

/// Smallest measurement rate at which noiseless SE reaches `E < template.mse_stop`.
pub fn phase_boundary(rho: f64, template: &SeConfig, search: &BoundarySearch) -> Result<f64> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::Domain(format!("density must lie in (0, 1], got {rho}")));
    }
    if template.sigma2 != 0.0 || template.lambda_pen != 0.0 {
        return Err(Error::Domain(
            "phase boundary search needs sigma2 = 0 and lambda_pen = 0".into(),
        ));
    }
    if !(search.lo > 0.0 && search.hi > search.lo && search.resolution > 0.0 && search.scan_points >= 2) {
        return Err(Error::Domain(format!("invalid boundary search {search:?}")));
    }
    let succeeds = |alpha: f64| -> Result<bool> {
        let cfg = SeConfig {
            alpha,
            rho,
            ..*template
        };
        let trace = run_se(&cfg)?;
        Ok(!trace.status.is_failure() && trace.final_state.e < template.mse_stop)
    };

    let step = (search.hi - search.lo) / (search.scan_points - 1) as f64;
    let alphas: Vec<f64> = (0..search.scan_points)
        .map(|i| {
            if i + 1 == search.scan_points {
                search.hi
            } else {
                search.lo + step * i as f64
            }
        })
        .collect();
    let outcomes = alphas.iter().map(|&a| succeeds(a)).collect::<Result<Vec<bool>>>()?;

    let Some(first) = outcomes.iter().position(|&ok| ok) else {
        return Err(Error::Domain(format!(
            "no recovery up to alpha = {} at rho = {rho}",
            search.hi
        )));
    };
    if let Some(j) = outcomes[first..].iter().position(|&ok| !ok) {
        return Err(Error::NonMonotone {
            alpha_success: alphas[first],
            alpha_failure: alphas[first + j],
        });
    }
    if first == 0 {
        return Ok(search.lo);
    }
    let (mut fail, mut ok) = (alphas[first - 1], alphas[first]);
    while ok - fail > search.resolution {
        let mid = 0.5 * (fail + ok);
        if succeeds(mid)? {
            ok = mid;
        } else {
            fail = mid;
        }
    }
    Ok(ok)
}

/// Range and grid for [`best_mse_over_lambda`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaSearch {
    pub lo: f64,
    pub hi: f64,
    pub grid_points: usize,
    /// Golden-section refinement stops when the bracket in `log10(lambda)`
    /// is narrower than this.
    pub refine_tol: f64,
}

impl Default for LambdaSearch {
    fn default() -> Self {
        LambdaSearch {
            lo: 1e-4,
            hi: 1e2,
            grid_points: 60,
            refine_tol: 1e-3,
        }
    }
}

impl LambdaSearch {
    pub fn grid(&self) -> Vec<f64> {
        log_grid(self.lo, self.hi, self.grid_points)
    }
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaPoint {
    pub lambda: f64,
    pub mse: f64,
    pub status: SeStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestLambda {
    pub lambda: f64,
    pub mse: f64,
    /// Every evaluation, grid first, then refinement.
    pub evaluations: Vec<LambdaPoint>,
}

/// Minimizes the SE fixed-point `E` over `lambda_pen`: a log-spaced grid
/// followed by golden-section refinement around the best grid point.
pub fn best_mse_over_lambda(template: &SeConfig, search: &LambdaSearch) -> Result<BestLambda> {
    if !(template.sigma2 > 0.0) {
        return Err(Error::Domain("lambda search needs sigma2 > 0".into()));
    }
    if !(search.lo > 0.0 && search.hi >= search.lo && search.grid_points >= 1 && search.refine_tol > 0.0) {
        return Err(Error::Domain(format!("invalid lambda search {search:?}")));
    }
    let mut evaluations = Vec::new();
    let mut eval = |lambda: f64| -> Result<f64> {
        let cfg = SeConfig {
            lambda_pen: lambda,
            ..*template
        };
        let trace = run_se(&cfg)?;
        let mse = if trace.status.is_failure() {
            f64::INFINITY
        } else {
            trace.final_state.e
        };
        evaluations.push(LambdaPoint {
            lambda,
            mse,
            status: trace.status,
        });
        Ok(mse)
    };

    let grid = search.grid();
    let values = grid.iter().map(|&l| eval(l)).collect::<Result<Vec<f64>>>()?;
    let (best_idx, &best_val) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty grid");
    if !best_val.is_finite() {
        return Err(Error::AllDiverged);
    }
    let mut best = (grid[best_idx], best_val);

    if grid.len() >= 3 {
        let mut a = grid[best_idx.saturating_sub(1)].log10();
        let mut b = grid[(best_idx + 1).min(grid.len() - 1)].log10();
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = b - inv_phi * (b - a);
        let mut x2 = a + inv_phi * (b - a);
        let mut f1 = eval(10f64.powf(x1))?;
        let mut f2 = eval(10f64.powf(x2))?;
        while b - a > search.refine_tol {
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - inv_phi * (b - a);
                f1 = eval(10f64.powf(x1))?;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + inv_phi * (b - a);
                f2 = eval(10f64.powf(x2))?;
            }
        }
        for (x, f) in [(x1, f1), (x2, f2)] {
            if f < best.1 {
                best = (10f64.powf(x), f);
            }
        }
    }
    Ok(BestLambda {
        lambda: best.0,
        mse: best.1,
        evaluations,
    })
}

/// Writes `alpha,rho,sigma2,lambda_pen,penalty,E_fixed,chi_fixed,iters,status` rows.
pub fn write_fixed_point_csv<W: Write>(out: W, rows: &[(SeConfig, SeTrace)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "alpha",
        "rho",
        "sigma2",
        "lambda_pen",
        "penalty",
        "E_fixed",
        "chi_fixed",
        "iters",
        "status",
    ])?;
    for (cfg, trace) in rows {
        w.write_record([
            cfg.alpha.to_string(),
            cfg.rho.to_string(),
            cfg.sigma2.to_string(),
            cfg.lambda_pen.to_string(),
            cfg.penalty.kind.to_string(),
            trace.final_state.e.to_string(),
            trace.final_state.chi.to_string(),
            trace.final_state.iter.to_string(),
            trace.status.label().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
