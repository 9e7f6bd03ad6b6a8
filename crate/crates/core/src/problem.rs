//! Synthetic compressed-sensing instances and reconstruction metrics.
//!
//! `A` has i.i.d. `N(0, 1/N)` entries, each signal component is zero with
//! probability `1 - rho` and standard normal otherwise, and the noise is
//! i.i.d. `N(0, sigma2)`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    /// Signal dimension `N`.
    pub n: usize,
    /// Measurement rate `M / N`.
    pub alpha: f64,
    /// Signal density.
    pub rho: f64,
    /// Noise variance.
    pub sigma2: f64,
    pub seed: u64,
}

impl ProblemConfig {
    pub fn new(n: usize, alpha: f64, rho: f64, sigma2: f64, seed: u64) -> Result<Self> {
        let config = ProblemConfig {
            n,
            alpha,
            rho,
            sigma2,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    /// Number of measurements, `round(alpha * n)` but at least one.
    pub fn m(&self) -> usize {
        ((self.alpha * self.n as f64).round() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Domain("signal dimension must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Domain(format!(
                "measurement rate must be positive and finite, got {}",
                self.alpha
            )));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::Domain(format!("density must lie in [0, 1], got {}", self.rho)));
        }
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return Err(Error::Domain(format!(
                "noise variance must be non-negative and finite, got {}",
                self.sigma2
            )));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Seed for trial `trial` of an experiment with master seed `master`.
///
/// Each trial draws from its own ChaCha stream, so the result does not depend
/// on the order in which trials are scheduled.
pub fn derive_trial_seed(master: u64, trial: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(trial);
    rng.next_u64()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub a_matrix: DMatrix<f64>,
    pub x_true: DVector<f64>,
    pub noise: DVector<f64>,
    pub y: DVector<f64>,
    pub config: ProblemConfig,
}

impl ProblemInstance {
    pub fn n(&self) -> usize {
        self.a_matrix.ncols()
    }

    pub fn m(&self) -> usize {
        self.a_matrix.nrows()
    }

    /// Realized measurement rate `M / N`.
    pub fn alpha(&self) -> f64 {
        self.m() as f64 / self.n() as f64
    }

    /// Builds an instance from explicit parts, computing `y = A x + w`.
    pub fn from_parts(
        a_matrix: DMatrix<f64>,
        x_true: DVector<f64>,
        noise: DVector<f64>,
        config: ProblemConfig,
    ) -> Result<Self> {
        if x_true.len() != a_matrix.ncols() {
            return Err(Error::LengthMismatch {
                expected: a_matrix.ncols(),
                got: x_true.len(),
            });
        }
        if noise.len() != a_matrix.nrows() {
            return Err(Error::LengthMismatch {
                expected: a_matrix.nrows(),
                got: noise.len(),
            });
        }
        let y = &a_matrix * &x_true + &noise;
        Ok(ProblemInstance {
            a_matrix,
            x_true,
            noise,
            y,
            config,
        })
    }
}

pub fn generate_instance(config: &ProblemConfig) -> Result<ProblemInstance> {
    config.validate()?;
    let n = config.n;
    let m = config.m();
    n.checked_mul(m)
        .filter(|&len| len <= isize::MAX as usize / std::mem::size_of::<f64>())
        .ok_or_else(|| Error::Domain(format!("instance of size {m}x{n} is too large")))?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let scale = 1.0 / (n as f64).sqrt();
    let a_matrix = DMatrix::from_fn(m, n, |_, _| {
        let g: f64 = rng.sample(StandardNormal);
        g * scale
    });
    let x_true = DVector::from_fn(n, |_, _| {
        let u: f64 = rng.gen();
        let g: f64 = rng.sample(StandardNormal);
        if u < config.rho {
            g
        } else {
            0.0
        }
    });
    let sigma = config.sigma2.sqrt();
    let noise = DVector::from_fn(m, |_, _| {
        let g: f64 = rng.sample(StandardNormal);
        g * sigma
    });
    ProblemInstance::from_parts(a_matrix, x_true, noise, *config)
}

/// Per-component mean squared error `||x_hat - x_true||^2 / N`.
pub fn mse(x_hat: &DVector<f64>, x_true: &DVector<f64>) -> Result<f64> {
    if x_hat.len() != x_true.len() {
        return Err(Error::LengthMismatch {
            expected: x_true.len(),
            got: x_hat.len(),
        });
    }
    if x_true.is_empty() {
        return Err(Error::Domain("mse of empty vectors".into()));
    }
    Ok(mse_unchecked(x_hat, x_true))
}

pub(crate) fn mse_unchecked(x_hat: &DVector<f64>, x_true: &DVector<f64>) -> f64 {
    let sum: f64 = x_hat.iter().zip(x_true.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    sum / x_true.len() as f64
}
