//! Parametric densities, their first two moments, and the moment-matching
//! inversions used to build Gaussian and Beta approximants.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;

use crate::distance::Density;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(alpha) && ok(beta) {
            Ok(Self { alpha, beta })
        } else {
            Err(Error::OutOfRange(format!(
                "Beta shapes must be finite and positive, got ({alpha}, {beta})"
            )))
        }
    }

    pub fn uniform() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
        }
    }

    /// Density at `z`, evaluated in log space.
    ///
    /// Returns `+∞` at a pole (`alpha < 1` at 0, `beta < 1` at 1) and 0
    /// outside `[0, 1]`.
    pub fn density(&self, z: f64) -> f64 {
        let (a, b) = (self.alpha, self.beta);
        if !(0.0..=1.0).contains(&z) {
            return 0.0;
        }
        let ln_norm = ln_beta(a, b);
        let edge = |shape: f64, other_log: f64| {
            if shape < 1.0 {
                f64::INFINITY
            } else if shape == 1.0 {
                (other_log - ln_norm).exp()
            } else {
                0.0
            }
        };
        // At an endpoint the other factor is 1, so its log is 0.
        if z == 0.0 {
            return edge(a, 0.0);
        }
        if z == 1.0 {
            return edge(b, 0.0);
        }
        ((a - 1.0) * z.ln() + (b - 1.0) * (-z).ln_1p() - ln_norm).exp()
    }

    pub fn moments(&self) -> MomentPair {
        let s = self.alpha + self.beta;
        MomentPair {
            mu: self.alpha / s,
            sigma2: self.alpha * self.beta / (s * s * (s + 1.0)),
        }
    }

    /// Beta sharing mean and variance with `m`.
    pub fn from_moments(m: MomentPair) -> Result<Self> {
        let MomentPair { mu, sigma2 } = m;
        if !m.is_beta_feasible() {
            return Err(Error::InfeasibleMoments { mu, sigma2 });
        }
        let common = sigma2 + mu * mu - mu;
        let alpha = -mu * common / sigma2;
        let beta = (mu - 1.0) * common / sigma2;
        Self::new(alpha, beta).map_err(|_| Error::InfeasibleMoments { mu, sigma2 })
    }
}

impl Density for BetaParams {
    fn density(&self, z: f64) -> f64 {
        BetaParams::density(self, z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub mu: f64,
    pub sigma2: f64,
}

impl GaussianParams {
    pub fn new(mu: f64, sigma2: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::OutOfRange(format!("Gaussian mean {mu} is not finite")));
        }
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(Error::NonPositiveVariance(sigma2));
        }
        Ok(Self { mu, sigma2 })
    }

    pub fn density(&self, z: f64) -> f64 {
        let d = z - self.mu;
        (-0.5 * d * d / self.sigma2).exp() / (2.0 * PI * self.sigma2).sqrt()
    }

    pub fn from_moments(m: MomentPair) -> Result<Self> {
        Self::new(m.mu, m.sigma2)
    }
}

impl Density for GaussianParams {
    fn density(&self, z: f64) -> f64 {
        GaussianParams::density(self, z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletParams {
    pub alpha: Vec<f64>,
}

impl DirichletParams {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() < 2 {
            return Err(Error::OutOfRange(format!(
                "Dirichlet needs at least 2 shapes, got {}",
                alpha.len()
            )));
        }
        if let Some(bad) = alpha.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::OutOfRange(format!("Dirichlet shape {bad} is not positive")));
        }
        Ok(Self { alpha })
    }
}

/// Mean and variance of a distribution.
///
/// Arbitrary values are representable (a point mass at 1 is `(1, 0)`); the
/// Beta and Gaussian constructors check feasibility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPair {
    pub mu: f64,
    pub sigma2: f64,
}

impl MomentPair {
    pub const fn new(mu: f64, sigma2: f64) -> Self {
        Self { mu, sigma2 }
    }

    /// `0 < mu < 1` and `0 < sigma2 < mu(1 − mu)`.
    pub fn is_beta_feasible(&self) -> bool {
        let MomentPair { mu, sigma2 } = *self;
        mu > 0.0 && mu < 1.0 && sigma2 > 0.0 && sigma2 < mu * (1.0 - mu)
    }

    /// Moments of `X·Y` for independent `X`, `Y`.
    pub fn product(&self, other: &Self) -> Self {
        product_moments_analytic(*self, *other)
    }
}

/// Exact mean and variance of the product of two independent variables.
pub fn product_moments_analytic(x: MomentPair, y: MomentPair) -> MomentPair {
    MomentPair {
        mu: x.mu * y.mu,
        sigma2: x.mu * x.mu * y.sigma2 + y.mu * y.mu * x.sigma2 + x.sigma2 * y.sigma2,
    }
}

/// `−ln z`: the density of the product of two independent uniforms.
pub fn limit_case_density(z: f64) -> Result<f64> {
    if z > 0.0 && z <= 1.0 {
        Ok(-z.ln())
    } else {
        Err(Error::Domain(z))
    }
}

/// [`limit_case_density`] as a [`Density`]; zero outside `(0, 1]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformProductDensity;

impl Density for UniformProductDensity {
    fn density(&self, z: f64) -> f64 {
        limit_case_density(z).unwrap_or(0.0)
    }
}
