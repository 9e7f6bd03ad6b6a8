//! Scalar penalties and their proximal operators.
//!
//! Two penalties are supported: the log-sum penalty `log(|x|/eps + 1)` and
//! the `l1` norm. The log-sum prox is only evaluated in its continuous
//! regime `eps > sqrt(lambda_prox)`; [`adaptive_epsilon`] picks the smoothing
//! parameter just inside that regime.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default margin between the smoothing parameter and `sqrt(lambda_prox)`.
pub const DEFAULT_DELTA_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    LogSum,
    L1,
}

impl PenaltyKind {
    pub fn name(self) -> &'static str {
        match self {
            PenaltyKind::LogSum => "logsum",
            PenaltyKind::L1 => "l1",
        }
    }
}

impl std::fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "logsum" | "log-sum" | "log_sum" => Ok(PenaltyKind::LogSum),
            "l1" => Ok(PenaltyKind::L1),
            other => Err(Error::Domain(format!("unknown penalty '{other}'"))),
        }
    }
}

/// Which penalty is used and how its prox is parameterized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    /// Smoothing margin, only read for [`PenaltyKind::LogSum`].
    pub delta_eps: f64,
}

impl PenaltySpec {
    pub fn log_sum() -> Self {
        PenaltySpec {
            kind: PenaltyKind::LogSum,
            delta_eps: DEFAULT_DELTA_EPS,
        }
    }

    pub fn log_sum_with_delta(delta_eps: f64) -> Result<Self> {
        if !(delta_eps > 0.0 && delta_eps.is_finite()) {
            return Err(Error::Domain(format!(
                "delta_eps must be positive and finite, got {delta_eps}"
            )));
        }
        Ok(PenaltySpec {
            kind: PenaltyKind::LogSum,
            delta_eps,
        })
    }

    pub fn l1() -> Self {
        PenaltySpec {
            kind: PenaltyKind::L1,
            delta_eps: DEFAULT_DELTA_EPS,
        }
    }

    pub fn from_kind(kind: PenaltyKind) -> Self {
        match kind {
            PenaltyKind::LogSum => Self::log_sum(),
            PenaltyKind::L1 => Self::l1(),
        }
    }
}

/// Prox scale and smoothing parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxParams {
    pub lambda_prox: f64,
    pub epsilon: f64,
}

impl ProxParams {
    pub fn new(lambda_prox: f64, epsilon: f64) -> Result<Self> {
        if !(lambda_prox > 0.0 && lambda_prox.is_finite()) {
            return Err(Error::Domain(format!(
                "lambda_prox must be positive and finite, got {lambda_prox}"
            )));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Domain(format!(
                "epsilon must be positive and finite, got {epsilon}"
            )));
        }
        Ok(ProxParams { lambda_prox, epsilon })
    }

    /// Parameters with `epsilon` chosen by [`adaptive_epsilon`].
    pub fn adaptive(lambda_prox: f64, delta_eps: f64) -> Result<Self> {
        let epsilon = adaptive_epsilon(lambda_prox, delta_eps)?;
        Self::new(lambda_prox, epsilon)
    }
}

/// Penalty value `R(x)`. `epsilon` is ignored for `l1`.
pub fn penalty_value(x: f64, spec: &PenaltySpec, epsilon: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("penalty argument must be finite, got {x}")));
    }
    match spec.kind {
        PenaltyKind::LogSum => {
            if !(epsilon > 0.0 && epsilon.is_finite()) {
                return Err(Error::Domain(format!(
                    "epsilon must be positive and finite, got {epsilon}"
                )));
            }
            Ok((x.abs() / epsilon).ln_1p())
        }
        PenaltyKind::L1 => Ok(x.abs()),
    }
}

/// Smoothing parameter `sqrt(lambda_prox) + delta_eps`, the smallest
/// value (up to `delta_eps`) that keeps the log-sum prox continuous.
pub fn adaptive_epsilon(lambda_prox: f64, delta_eps: f64) -> Result<f64> {
    if !(lambda_prox > 0.0 && lambda_prox.is_finite()) {
        return Err(Error::Domain(format!(
            "lambda_prox must be positive and finite, got {lambda_prox}"
        )));
    }
    if !(delta_eps > 0.0 && delta_eps.is_finite()) {
        return Err(Error::Domain(format!(
            "delta_eps must be positive and finite, got {delta_eps}"
        )));
    }
    Ok(lambda_prox.sqrt() + delta_eps)
}

/// `argmin_x 1/2 (x - h)^2 + lambda_prox R(x)`.
pub fn prox(h: f64, params: &ProxParams, spec: &PenaltySpec) -> Result<f64> {
    Ok(ScalarProx::with_params(spec, params)?.apply(h))
}

/// Derivative of [`prox`] with respect to `h`. Returns 0 at the threshold.
pub fn prox_derivative(h: f64, params: &ProxParams, spec: &PenaltySpec) -> Result<f64> {
    Ok(ScalarProx::with_params(spec, params)?.derivative(h))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    Identity,
    SoftThreshold {
        lambda: f64,
    },
    LogSum {
        lambda: f64,
        epsilon: f64,
        threshold: f64,
        sqrt_lambda: f64,
        // (eps - sqrt(lambda))^2 / eps, the value of |h| + eps - 2 sqrt(lambda) at the threshold
        gap: f64,
    },
}

/// A validated scalar prox, ready to be applied componentwise.
///
/// A zero prox scale is the identity map for both penalties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarProx {
    shape: Shape,
}

impl ScalarProx {
    /// Prox with scale `lambda_prox >= 0` and, for log-sum, the adaptive
    /// smoothing parameter.
    pub fn adaptive(spec: &PenaltySpec, lambda_prox: f64) -> Result<Self> {
        if !(lambda_prox >= 0.0 && lambda_prox.is_finite()) {
            return Err(Error::Domain(format!(
                "prox scale must be non-negative and finite, got {lambda_prox}"
            )));
        }
        if lambda_prox == 0.0 {
            return Ok(ScalarProx { shape: Shape::Identity });
        }
        match spec.kind {
            PenaltyKind::L1 => Ok(Self::soft_threshold(lambda_prox)),
            PenaltyKind::LogSum => {
                let params = ProxParams::adaptive(lambda_prox, spec.delta_eps)?;
                Self::log_sum(&params)
            }
        }
    }

    pub fn with_params(spec: &PenaltySpec, params: &ProxParams) -> Result<Self> {
        match spec.kind {
            PenaltyKind::L1 => Ok(Self::soft_threshold(params.lambda_prox)),
            PenaltyKind::LogSum => Self::log_sum(params),
        }
    }

    fn soft_threshold(lambda: f64) -> Self {
        ScalarProx {
            shape: Shape::SoftThreshold { lambda },
        }
    }

    fn log_sum(params: &ProxParams) -> Result<Self> {
        let lambda = params.lambda_prox;
        let epsilon = params.epsilon;
        let sqrt_lambda = lambda.sqrt();
        if !(epsilon > sqrt_lambda) {
            return Err(Error::RegimeViolation {
                lambda_prox: lambda,
                epsilon,
            });
        }
        let margin = epsilon - sqrt_lambda;
        Ok(ScalarProx {
            shape: Shape::LogSum {
                lambda,
                epsilon,
                threshold: lambda / epsilon,
                sqrt_lambda,
                gap: margin * margin / epsilon,
            },
        })
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.shape, Shape::Identity)
    }

    /// `|h|` at or below this value maps to zero.
    pub fn threshold(&self) -> f64 {
        match self.shape {
            Shape::Identity => 0.0,
            Shape::SoftThreshold { lambda } => lambda,
            Shape::LogSum { threshold, .. } => threshold,
        }
    }

    pub fn lambda_prox(&self) -> f64 {
        match self.shape {
            Shape::Identity => 0.0,
            Shape::SoftThreshold { lambda } | Shape::LogSum { lambda, .. } => lambda,
        }
    }

    /// Smoothing parameter, if this is a log-sum prox.
    pub fn epsilon(&self) -> Option<f64> {
        match self.shape {
            Shape::LogSum { epsilon, .. } => Some(epsilon),
            _ => None,
        }
    }

    #[inline]
    pub fn apply(&self, h: f64) -> f64 {
        match self.shape {
            Shape::Identity => h,
            Shape::SoftThreshold { lambda } => {
                let a = h.abs();
                if a > lambda {
                    (a - lambda).copysign(h)
                } else {
                    0.0
                }
            }
            Shape::LogSum {
                lambda,
                epsilon,
                threshold,
                sqrt_lambda,
                gap,
            } => {
                let a = h.abs();
                if a <= threshold {
                    return 0.0;
                }
                let root = discriminant(a, epsilon, threshold, sqrt_lambda, gap).sqrt();
                // larger root of r^2 + (eps - a) r + (lambda - a eps) = 0
                let r = if a >= epsilon {
                    0.5 * (a - epsilon + root)
                } else {
                    2.0 * epsilon * (a - threshold) / (epsilon - a + root)
                };
                debug_assert!(r >= 0.0, "negative magnitude {r} for lambda {lambda}");
                r.copysign(h)
            }
        }
    }

    #[inline]
    pub fn derivative(&self, h: f64) -> f64 {
        match self.shape {
            Shape::Identity => 1.0,
            Shape::SoftThreshold { lambda } => {
                if h.abs() > lambda {
                    1.0
                } else {
                    0.0
                }
            }
            Shape::LogSum {
                epsilon,
                threshold,
                sqrt_lambda,
                gap,
                ..
            } => {
                let a = h.abs();
                if a <= threshold {
                    return 0.0;
                }
                let root = discriminant(a, epsilon, threshold, sqrt_lambda, gap).sqrt();
                0.5 * (1.0 + (a + epsilon) / root)
            }
        }
    }
}

/// `(a + eps)^2 - 4 lambda`, factored as
/// `(a - threshold + gap)(a + eps + 2 sqrt(lambda))` to avoid cancellation
/// near the threshold, and clamped at zero.
#[inline]
fn discriminant(a: f64, epsilon: f64, threshold: f64, sqrt_lambda: f64, gap: f64) -> f64 {
    ((a - threshold + gap) * (a + epsilon + 2.0 * sqrt_lambda)).max(0.0)
}
