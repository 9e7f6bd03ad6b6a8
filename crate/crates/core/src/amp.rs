//! Approximate message passing with the adaptive-smoothing prox.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::penalty::{PenaltySpec, ScalarProx};
use crate::problem::{mse_unchecked, ProblemInstance};

/// Runs whose MSE exceeds this are reported as diverged.
pub const DIVERGENCE_MSE: f64 = 1e6;

/// Relative iterate change that ends a run when no ground truth is available.
pub const ITERATE_CHANGE_STOP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmpConfig {
    pub lambda_pen: f64,
    /// Fraction of the previous `x_hat` and `chi` kept at each step.
    pub damping: f64,
    pub max_iter: usize,
    /// Stop once the MSE against the ground truth falls below this.
    pub mse_stop: f64,
    pub penalty: PenaltySpec,
}

impl AmpConfig {
    /// Damping 0.2, at most 1000 iterations, stop below MSE 1e-10.
    pub fn new(lambda_pen: f64, penalty: PenaltySpec) -> Self {
        AmpConfig {
            lambda_pen,
            damping: 0.2,
            max_iter: 1000,
            mse_stop: 1e-10,
            penalty,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_pen >= 0.0 && self.lambda_pen.is_finite()) {
            return Err(Error::Domain(format!("invalid lambda_pen {}", self.lambda_pen)));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::Domain(format!(
                "damping must lie in [0, 1), got {}",
                self.damping
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Domain("max_iter must be at least 1".into()));
        }
        if !(self.mse_stop >= 0.0) {
            return Err(Error::Domain(format!("invalid mse_stop {}", self.mse_stop)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmpState {
    pub x_hat: DVector<f64>,
    /// Onsager-corrected residual.
    pub z: DVector<f64>,
    /// Effective-noise variance.
    pub chi: f64,
    pub iter: usize,
}

impl AmpState {
    /// `x_hat = 0`, `z = y`, `chi = 1`.
    pub fn initial(y: &DVector<f64>, n: usize) -> Self {
        AmpState {
            x_hat: DVector::zeros(n),
            z: y.clone(),
            chi: 1.0,
            iter: 0,
        }
    }
}

/// Scalars computed during a step, reported in the trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub lambda_prox: f64,
    pub k: f64,
}

fn step_on(state: &AmpState, a: &DMatrix<f64>, y: &DVector<f64>, config: &AmpConfig) -> Result<(AmpState, StepInfo)> {
    let (m, n) = a.shape();
    if state.x_hat.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: state.x_hat.len(),
        });
    }
    if state.z.len() != m || y.len() != m {
        return Err(Error::LengthMismatch {
            expected: m,
            got: state.z.len().min(y.len()),
        });
    }
    if !(state.chi.is_finite() && state.chi >= 0.0) {
        return Err(Error::Diverged {
            iter: state.iter,
            reason: format!("chi = {}", state.chi),
        });
    }
    let alpha = m as f64 / n as f64;

    // h = x_hat + (N / M) A^T z
    let mut h = a.tr_mul(&state.z);
    h.scale_mut(1.0 / alpha);
    h += &state.x_hat;

    let lambda_prox = (state.chi + config.lambda_pen) / alpha;
    let prox = ScalarProx::adaptive(&config.penalty, lambda_prox)?;
    let slope_sum: f64 = h.iter().map(|&v| prox.derivative(v)).sum();
    let k = slope_sum / n as f64 / alpha;
    let x_raw = h.map(|v| prox.apply(v));
    let chi_raw = (state.chi + config.lambda_pen) * k;

    let d = config.damping;
    let x_hat = if d == 0.0 {
        x_raw
    } else {
        x_raw * (1.0 - d) + &state.x_hat * d
    };
    let chi = (1.0 - d) * chi_raw + d * state.chi;

    // z = y - A x_hat + k z
    let mut z = y - a * &x_hat;
    z.axpy(k, &state.z, 1.0);

    if !(chi.is_finite() && k.is_finite()) || x_hat.iter().any(|v| !v.is_finite()) || z.iter().any(|v| !v.is_finite()) {
        return Err(Error::Diverged {
            iter: state.iter + 1,
            reason: "non-finite iterate".into(),
        });
    }
    Ok((
        AmpState {
            x_hat,
            z,
            chi,
            iter: state.iter + 1,
        },
        StepInfo { lambda_prox, k },
    ))
}

/// One AMP iteration. Non-finite results are reported as [`Error::Diverged`].
pub fn amp_step(state: &AmpState, instance: &ProblemInstance, config: &AmpConfig) -> Result<AmpState> {
    step_on(state, &instance.a_matrix, &instance.y, config).map(|(s, _)| s)
}

/// Like [`amp_step`], also returning the prox scale and Onsager coefficient.
pub fn amp_step_with_info(
    state: &AmpState,
    instance: &ProblemInstance,
    config: &AmpConfig,
) -> Result<(AmpState, StepInfo)> {
    step_on(state, &instance.a_matrix, &instance.y, config)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AmpTermination {
    MseStop,
    /// Relative iterate change fell below [`ITERATE_CHANGE_STOP`] (runs without ground truth).
    Converged,
    MaxIter,
    Diverged,
}

impl AmpTermination {
    pub fn label(&self) -> &'static str {
        match self {
            AmpTermination::MseStop => "mse_stop",
            AmpTermination::Converged => "converged",
            AmpTermination::MaxIter => "max_iter",
            AmpTermination::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmpRecord {
    pub iter: usize,
    /// `None` when the run has no ground truth.
    pub mse: Option<f64>,
    pub chi: f64,
    pub lambda_prox: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmpTrace {
    pub records: Vec<AmpRecord>,
    pub final_state: AmpState,
    pub termination: AmpTermination,
}

impl AmpTrace {
    pub fn final_mse(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.mse)
    }

    /// Writes `iter,mse,chi,lambda_prox,termination`; the termination label
    /// only appears on the last row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iter", "mse", "chi", "lambda_prox", "termination"])?;
        let last = self.records.len().saturating_sub(1);
        for (i, r) in self.records.iter().enumerate() {
            w.write_record([
                r.iter.to_string(),
                r.mse.map(|v| v.to_string()).unwrap_or_default(),
                r.chi.to_string(),
                r.lambda_prox.to_string(),
                if i == last {
                    self.termination.label().to_string()
                } else {
                    String::new()
                },
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs AMP from `x_hat = 0`, `z = y`, `chi = 1` and stops on the ground-truth
/// MSE, the iteration cap, or divergence.
pub fn run_amp(instance: &ProblemInstance, config: &AmpConfig) -> Result<AmpTrace> {
    run_amp_on(&instance.a_matrix, &instance.y, Some(&instance.x_true), config)
}

/// Runs AMP on raw measurements. Without `truth`, the run stops when the
/// relative iterate change drops below [`ITERATE_CHANGE_STOP`].
pub fn run_amp_on(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    truth: Option<&DVector<f64>>,
    config: &AmpConfig,
) -> Result<AmpTrace> {
    config.validate()?;
    let (m, n) = a.shape();
    if y.len() != m {
        return Err(Error::LengthMismatch {
            expected: m,
            got: y.len(),
        });
    }
    if let Some(t) = truth {
        if t.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: t.len(),
            });
        }
    }

    let mut state = AmpState::initial(y, n);
    let mut records = Vec::new();
    let termination = loop {
        let (next, info) = match step_on(&state, a, y, config) {
            Ok(r) => r,
            Err(Error::Diverged { .. }) => break AmpTermination::Diverged,
            Err(e) => return Err(e),
        };
        let mse = truth.map(|t| mse_unchecked(&next.x_hat, t));
        let change = (&next.x_hat - &state.x_hat).norm() / next.x_hat.norm().max(1.0);
        records.push(AmpRecord {
            iter: next.iter,
            mse,
            chi: next.chi,
            lambda_prox: info.lambda_prox,
        });
        state = next;
        match mse {
            Some(e) if !e.is_finite() || e > DIVERGENCE_MSE => break AmpTermination::Diverged,
            Some(e) if e < config.mse_stop => break AmpTermination::MseStop,
            None if change < ITERATE_CHANGE_STOP => break AmpTermination::Converged,
            _ => {}
        }
        if state.iter >= config.max_iter {
            break AmpTermination::MaxIter;
        }
    };
    Ok(AmpTrace {
        records,
        final_state: state,
        termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{generate_instance, ProblemConfig};

    fn identity_instance(y: [f64; 2]) -> ProblemInstance {
        let a = DMatrix::identity(2, 2);
        let x = DVector::from_vec(y.to_vec());
        let cfg = ProblemConfig::new(2, 1.0, 0.5, 0.0, 0).unwrap();
        ProblemInstance::from_parts(a, x, DVector::zeros(2), cfg).unwrap()
    }

    /// Scalar transcription of the five update equations for the 2x2
    /// identity instance, using the closed-form log-sum prox directly.
    fn hand_step(y: [f64; 2], x: [f64; 2], z: [f64; 2], chi: f64, lambda_pen: f64) -> ([f64; 2], [f64; 2], f64) {
        let alpha = 1.0;
        let h = [x[0] + z[0] / alpha, x[1] + z[1] / alpha];
        let lam = (chi + lambda_pen) / alpha;
        let eps = lam.sqrt() + 1e-10;
        let s = |v: f64| {
            if v.abs() <= lam / eps {
                0.0
            } else {
                v.signum() * (v.abs() - eps + ((v.abs() + eps).powi(2) - 4.0 * lam).sqrt()) / 2.0
            }
        };
        let ds = |v: f64| {
            if v.abs() <= lam / eps {
                0.0
            } else {
                0.5 * (1.0 + (v.abs() + eps) / ((v.abs() + eps).powi(2) - 4.0 * lam).sqrt())
            }
        };
        let k = (ds(h[0]) + ds(h[1])) / 2.0 / alpha;
        let xn = [s(h[0]), s(h[1])];
        let zn = [y[0] - xn[0] + z[0] * k, y[1] - xn[1] + z[1] * k];
        (xn, zn, (chi + lambda_pen) * k)
    }

    #[test]
    fn step_matches_hand_evaluation() {
        let inst = identity_instance([1.0, 0.0]);
        let mut cfg = AmpConfig::new(0.1, PenaltySpec::log_sum());
        cfg.damping = 0.0;
        let s0 = AmpState {
            x_hat: DVector::zeros(2),
            z: DVector::zeros(2),
            chi: 1.0,
            iter: 0,
        };
        let s1 = amp_step(&s0, &inst, &cfg).unwrap();
        let (x, z, chi) = hand_step([1.0, 0.0], [0.0, 0.0], [0.0, 0.0], 1.0, 0.1);
        // z = 0 so h = x_hat = 0: everything is in the dead zone
        assert_eq!(s1.x_hat.as_slice(), &x);
        assert_eq!(chi, 0.0);
        assert!((s1.z[0] - z[0]).abs() < 1e-15 && (s1.z[1] - z[1]).abs() < 1e-15);
        assert_eq!(s1.chi, chi);

        // a second step from a non-trivial state
        let s0 = AmpState {
            x_hat: DVector::from_vec(vec![0.3, -0.1]),
            z: DVector::from_vec(vec![1.0, 0.2]),
            chi: 1.0,
            iter: 0,
        };
        let s1 = amp_step(&s0, &inst, &cfg).unwrap();
        let (x, z, chi) = hand_step([1.0, 0.0], [0.3, -0.1], [1.0, 0.2], 1.0, 0.1);
        for i in 0..2 {
            assert!((s1.x_hat[i] - x[i]).abs() < 1e-12, "{} vs {}", s1.x_hat[i], x[i]);
            assert!((s1.z[i] - z[i]).abs() < 1e-12);
        }
        assert!((s1.chi - chi).abs() < 1e-12);
        assert!(x[0] > 0.0, "hand step should leave the dead zone");
    }

    #[test]
    fn zero_residual_gives_h_equal_x_hat() {
        let inst = identity_instance([0.0, 0.0]);
        let mut cfg = AmpConfig::new(0.0, PenaltySpec::l1());
        cfg.damping = 0.0;
        // chi = 0 and lambda_pen = 0: identity prox, so x_hat^+ = h = x_hat
        let s0 = AmpState {
            x_hat: DVector::from_vec(vec![0.7, -2.0]),
            z: DVector::zeros(2),
            chi: 0.0,
            iter: 0,
        };
        let s1 = amp_step(&s0, &inst, &cfg).unwrap();
        assert_eq!(s1.x_hat, s0.x_hat);
    }

    #[test]
    fn dead_zone_zeroes_everything() {
        let inst = generate_instance(&ProblemConfig::new(50, 0.6, 0.3, 0.01, 1).unwrap()).unwrap();
        let mut cfg = AmpConfig::new(1e6, PenaltySpec::log_sum());
        cfg.damping = 0.0;
        let s0 = AmpState::initial(&inst.y, inst.n());
        let (s1, info) = amp_step_with_info(&s0, &inst, &cfg).unwrap();
        assert!(s1.x_hat.iter().all(|&v| v == 0.0));
        assert_eq!(info.k, 0.0);
        assert_eq!(s1.chi, 0.0);
    }

    #[test]
    fn l1_onsager_coefficient_is_active_fraction_over_alpha() {
        let inst = generate_instance(&ProblemConfig::new(200, 0.5, 0.2, 0.01, 4).unwrap()).unwrap();
        let mut cfg = AmpConfig::new(0.05, PenaltySpec::l1());
        cfg.damping = 0.0;
        let s0 = AmpState::initial(&inst.y, inst.n());
        let (s1, info) = amp_step_with_info(&s0, &inst, &cfg).unwrap();
        let active = s1.x_hat.iter().filter(|&&v| v != 0.0).count() as f64;
        assert!((info.k - active / 200.0 / inst.alpha()).abs() < 1e-15);
    }

    #[test]
    fn zero_signal_is_recovered() {
        let inst = generate_instance(&ProblemConfig::new(100, 0.5, 0.0, 0.0, 2).unwrap()).unwrap();
        let trace = run_amp(&inst, &AmpConfig::new(0.1, PenaltySpec::log_sum())).unwrap();
        assert!(trace.records.len() <= 3);
        assert_eq!(trace.termination, AmpTermination::MseStop);
        assert_eq!(trace.final_mse(), Some(0.0));
    }

    #[test]
    fn one_iteration_cap_records_one_step() {
        let inst = generate_instance(&ProblemConfig::new(60, 0.5, 0.3, 0.01, 2).unwrap()).unwrap();
        let mut cfg = AmpConfig::new(0.1, PenaltySpec::log_sum());
        cfg.max_iter = 1;
        let trace = run_amp(&inst, &cfg).unwrap();
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.termination, AmpTermination::MaxIter);
        cfg.max_iter = 0;
        assert!(run_amp(&inst, &cfg).is_err());
    }

    #[test]
    fn undamped_runs_are_bit_stable_and_chi_stays_non_negative() {
        let inst = generate_instance(&ProblemConfig::new(120, 0.7, 0.2, 0.01, 8).unwrap()).unwrap();
        let mut cfg = AmpConfig::new(0.05, PenaltySpec::log_sum());
        cfg.damping = 0.0;
        cfg.max_iter = 50;
        let a = run_amp(&inst, &cfg).unwrap();
        let b = run_amp(&inst, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.records.iter().all(|r| r.chi >= 0.0));
    }

    #[test]
    fn blind_run_stops_on_iterate_change() {
        let inst = generate_instance(&ProblemConfig::new(100, 0.8, 0.1, 0.001, 5).unwrap()).unwrap();
        let cfg = AmpConfig::new(0.01, PenaltySpec::l1());
        let trace = run_amp_on(&inst.a_matrix, &inst.y, None, &cfg).unwrap();
        assert!(trace.records.iter().all(|r| r.mse.is_none()));
        assert_eq!(trace.termination, AmpTermination::Converged);
    }

    #[test]
    fn trace_csv_flags_only_the_last_row() {
        let inst = generate_instance(&ProblemConfig::new(40, 0.5, 0.2, 0.01, 3).unwrap()).unwrap();
        let mut cfg = AmpConfig::new(0.1, PenaltySpec::l1());
        cfg.max_iter = 3;
        let trace = run_amp(&inst, &cfg).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "iter,mse,chi,lambda_prox,termination");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].ends_with(','));
        assert!(lines[3].ends_with(",max_iter"));
    }
}
