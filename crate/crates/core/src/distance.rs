//! Integral (L1) and total-variation distances between densities on
//! `[0, 1]`, estimated by Monte Carlo integration.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kde::DEFAULT_EPS_CLAMP;
use crate::mc::EstimatorResult;
use crate::rng::{RngSeed, SimRng};

/// Default number of integration points.
pub const DEFAULT_INTEGRATION_POINTS: usize = 1_000;

/// Anything that can be evaluated as a density on `(0, 1)`.
pub trait Density: Sync {
    fn density(&self, z: f64) -> f64;

    fn density_many(&self, zs: &[f64]) -> Vec<f64> {
        zs.iter().map(|&z| self.density(z)).collect()
    }
}

impl<D: Density + ?Sized> Density for &D {
    fn density(&self, z: f64) -> f64 {
        (**self).density(z)
    }

    fn density_many(&self, zs: &[f64]) -> Vec<f64> {
        (**self).density_many(zs)
    }
}

/// Adapts a closure.
pub struct FnDensity<F>(pub F);

impl<F: Fn(f64) -> f64 + Sync> Density for FnDensity<F> {
    fn density(&self, z: f64) -> f64 {
        (self.0)(z)
    }
}

/// A density with a reporting label such as `"sl"` or `"beta_an"`.
pub struct DensityEvaluator<'a> {
    pub label: String,
    pub density: Box<dyn Density + 'a>,
}

impl<'a> DensityEvaluator<'a> {
    pub fn new(label: impl Into<String>, density: impl Density + 'a) -> Self {
        Self {
            label: label.into(),
            density: Box::new(density),
        }
    }
}

impl Density for DensityEvaluator<'_> {
    fn density(&self, z: f64) -> f64 {
        self.density.density(z)
    }

    fn density_many(&self, zs: &[f64]) -> Vec<f64> {
        self.density.density_many(zs)
    }
}

/// How integration points are placed on `[eps, 1 − eps]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointPlacement {
    /// i.i.d. uniform draws.
    #[default]
    Sampled,
    /// Cell midpoints of an even grid; a deterministic diagnostic.
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationSpec {
    pub points: usize,
    pub eps_clamp: f64,
    pub placement: PointPlacement,
}

impl Default for IntegrationSpec {
    fn default() -> Self {
        Self {
            points: DEFAULT_INTEGRATION_POINTS,
            eps_clamp: DEFAULT_EPS_CLAMP,
            placement: PointPlacement::Sampled,
        }
    }
}

impl IntegrationSpec {
    pub fn with_points(points: usize) -> Self {
        Self {
            points,
            ..Self::default()
        }
    }

    fn width(&self) -> f64 {
        1.0 - 2.0 * self.eps_clamp
    }

    pub fn draw_points(&self, rng: &mut SimRng) -> Result<Vec<f64>> {
        if self.points < 2 {
            return Err(Error::TooFewSamples {
                need: 2,
                got: self.points,
            });
        }
        let (lo, width) = (self.eps_clamp, self.width());
        Ok(match self.placement {
            PointPlacement::Sampled => (0..self.points)
                .map(|_| lo + width * rng.random::<f64>())
                .collect(),
            PointPlacement::Grid => {
                let step = width / self.points as f64;
                (0..self.points).map(|i| lo + step * (i as f64 + 0.5)).collect()
            }
        })
    }

    /// L1 estimate from densities already evaluated at the same points.
    pub fn l1_from_values(&self, p: &[f64], q: &[f64]) -> Result<EstimatorResult> {
        if p.len() != q.len() {
            return Err(Error::LengthMismatch(p.len(), q.len()));
        }
        let gaps: Vec<f64> = p.iter().zip(q).map(|(a, b)| (a - b).abs()).collect();
        Ok(EstimatorResult::from_values(&gaps)?.scaled(self.width()))
    }

    pub fn integral_distance(
        &self,
        p: &dyn Density,
        q: &dyn Density,
        rng: &mut SimRng,
    ) -> Result<EstimatorResult> {
        let pts = self.draw_points(rng)?;
        self.l1_from_values(&p.density_many(&pts), &q.density_many(&pts))
    }
}

/// `∫|p − q|` over `[0, 1]` from `m` uniformly sampled points.
pub fn integral_distance(
    p: &dyn Density,
    q: &dyn Density,
    m: usize,
    seed: RngSeed,
) -> Result<EstimatorResult> {
    IntegrationSpec::with_points(m).integral_distance(p, q, &mut seed.rng())
}

/// Half the integral distance.
pub fn total_variation(
    p: &dyn Density,
    q: &dyn Density,
    m: usize,
    seed: RngSeed,
) -> Result<EstimatorResult> {
    Ok(integral_distance(p, q, m, seed)?.scaled(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::BetaParams;

    fn left_half() -> FnDensity<impl Fn(f64) -> f64 + Sync> {
        FnDensity(|z: f64| if z < 0.5 { 2.0 } else { 0.0 })
    }

    fn right_half() -> FnDensity<impl Fn(f64) -> f64 + Sync> {
        FnDensity(|z: f64| if z >= 0.5 { 2.0 } else { 0.0 })
    }

    #[test]
    fn identical_densities() {
        let b = BetaParams::new(2.0, 5.0).unwrap();
        let r = integral_distance(&b, &b, 1000, RngSeed::new(1)).unwrap();
        assert_eq!((r.value, r.stderr), (0.0, 0.0));
        let r = total_variation(&b, &b, 1000, RngSeed::new(1)).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn disjoint_halves() {
        let r = integral_distance(&left_half(), &right_half(), 10_000, RngSeed::new(2)).unwrap();
        // Exact up to the excluded end strips of width eps.
        assert!((r.value - 2.0).abs() <= 4.0 * r.stderr + 1e-8, "{r:?}");
        let tv = total_variation(&left_half(), &right_half(), 10_000, RngSeed::new(2)).unwrap();
        assert!((tv.value - 1.0).abs() <= 4.0 * tv.stderr + 1e-8);
    }

    #[test]
    fn total_variation_is_half() {
        let p = BetaParams::new(2.0, 3.0).unwrap();
        let q = BetaParams::new(0.7, 1.4).unwrap();
        let d = integral_distance(&p, &q, 500, RngSeed::new(3)).unwrap();
        let tv = total_variation(&p, &q, 500, RngSeed::new(3)).unwrap();
        assert_eq!(tv.value, d.value / 2.0);
        assert_eq!(tv.stderr, d.stderr / 2.0);
    }

    #[test]
    fn symmetric_in_arguments() {
        let p = BetaParams::new(2.0, 3.0).unwrap();
        let q = BetaParams::new(0.7, 1.4).unwrap();
        let a = integral_distance(&p, &q, 777, RngSeed::new(4)).unwrap();
        let b = integral_distance(&q, &p, 777, RngSeed::new(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn grid_points_are_midpoints() {
        let spec = IntegrationSpec {
            points: 4,
            eps_clamp: 0.0,
            placement: PointPlacement::Grid,
        };
        let pts = spec.draw_points(&mut RngSeed::new(0).rng()).unwrap();
        assert_eq!(pts, vec![0.125, 0.375, 0.625, 0.875]);
        assert!(IntegrationSpec::with_points(1).draw_points(&mut RngSeed::new(0).rng()).is_err());
    }

    #[test]
    fn sampled_points_avoid_endpoints() {
        let spec = IntegrationSpec {
            points: 10_000,
            eps_clamp: 1e-3,
            placement: PointPlacement::Sampled,
        };
        let pts = spec.draw_points(&mut RngSeed::new(5).rng()).unwrap();
        assert!(pts.iter().all(|&u| (1e-3..1.0 - 1e-3).contains(&u)));
    }
}
