//! Closed-form Gaussian moments of the soft-threshold function.

use super::quadrature::std_normal_pdf;

/// Upper tail `P(Z > c)` of the standard normal.
#[inline]
pub(crate) fn normal_tail(c: f64) -> f64 {
    0.5 * libm::erfc(c / std::f64::consts::SQRT_2)
}

/// Moments of the soft threshold `S` at level `threshold` for `h ~ N(0, var)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SoftMoments {
    /// `E[S(h)^2]`
    pub second: f64,
    /// `E[S'(h)] = P(|h| > threshold)`, which also equals `E[S(h) h] / var`
    pub slope: f64,
}

pub(crate) fn soft_threshold_moments(var: f64, threshold: f64) -> SoftMoments {
    if threshold == 0.0 {
        return SoftMoments {
            second: var,
            slope: 1.0,
        };
    }
    if var == 0.0 {
        return SoftMoments {
            second: 0.0,
            slope: 0.0,
        };
    }
    let sd = var.sqrt();
    let c = threshold / sd;
    let q = normal_tail(c);
    // 2 var ∫_c^∞ (t - c)^2 φ(t) dt
    let second = 2.0 * var * ((1.0 + c * c) * q - c * std_normal_pdf(c));
    SoftMoments {
        second: second.max(0.0),
        slope: 2.0 * q,
    }
}
