//! Gaussian kernel density estimation in logit space.
//!
//! Samples on `[0, 1]` are clamped away from the endpoints, mapped through
//! `logit`, smoothed with a Silverman-width Gaussian kernel and mapped back
//! with the Jacobian `1/(z(1 − z))`, so no mass leaks outside the support.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::distance::Density;
use crate::error::{Error, Result};
use crate::mc::{mean_and_variance, SampleBatch};

pub const DEFAULT_EPS_CLAMP: f64 = 1e-9;

/// Kernel terms further than this many bandwidths from the query are below
/// `exp(-40.5) ≈ 2.6e-18` of the peak and are not summed.
const KERNEL_REACH: f64 = 9.0;

/// Queries per parallel work unit in [`KdeModel::density_many`].
const QUERY_BLOCK: usize = 64;

#[inline]
pub fn logit(x: f64) -> f64 {
    (x / (1.0 - x)).ln()
}

/// Standard deviation with divisor `n − 1`.
pub fn empirical_std(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::TooFewSamples {
            need: 2,
            got: values.len(),
        });
    }
    Ok(mean_and_variance(values).1.sqrt())
}

/// Silverman's rule of thumb, `1.06 σ̂ n^{-1/5}`.
pub fn silverman_bandwidth(sigma_hat: f64, n: usize) -> f64 {
    1.06 * sigma_hat * (n as f64).powf(-0.2)
}

/// Order of magnitude of the KDE bias for `n` samples on `[0, 1]`:
/// `(0.1 · n^{-1/5})²`, using `σ̂ ≤ 0.1` as the raw-space spread bound.
pub fn kde_bias_bound(n: usize) -> f64 {
    let w = 0.1 * (n as f64).powf(-0.2);
    w * w
}

#[derive(Debug, Clone)]
pub struct KdeModel {
    /// Sorted ascending.
    logit_samples: Vec<f64>,
    bandwidth: f64,
    eps_clamp: f64,
}

impl KdeModel {
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn n(&self) -> usize {
        self.logit_samples.len()
    }

    pub fn eps_clamp(&self) -> f64 {
        self.eps_clamp
    }

    pub fn logit_samples(&self) -> &[f64] {
        &self.logit_samples
    }

    /// Density at `z`, after clamping `z` into `[eps, 1 − eps]`.
    pub fn density(&self, z: f64) -> f64 {
        let z = z.clamp(self.eps_clamp, 1.0 - self.eps_clamp);
        let t = logit(z);
        let inv_w = 1.0 / self.bandwidth;
        let reach = KERNEL_REACH * self.bandwidth;
        let lo = self.logit_samples.partition_point(|&s| s < t - reach);
        let hi = self.logit_samples.partition_point(|&s| s <= t + reach);
        let sum: f64 = self.logit_samples[lo..hi]
            .iter()
            .map(|&s| {
                let d = (t - s) * inv_w;
                (-0.5 * d * d).exp()
            })
            .sum();
        let in_logit_space = sum * inv_w / (self.n() as f64 * (2.0 * PI).sqrt());
        in_logit_space / (z * (1.0 - z))
    }

    /// Evaluates many points in independent parallel blocks; output order
    /// matches `zs`.
    pub fn density_many(&self, zs: &[f64]) -> Vec<f64> {
        zs.par_chunks(QUERY_BLOCK)
            .flat_map_iter(|block| block.iter().map(|&z| self.density(z)))
            .collect()
    }
}

impl Density for KdeModel {
    fn density(&self, z: f64) -> f64 {
        KdeModel::density(self, z)
    }

    fn density_many(&self, zs: &[f64]) -> Vec<f64> {
        KdeModel::density_many(self, zs)
    }
}

/// Clamp, logit-transform, and pick the Silverman bandwidth from the
/// transformed samples.
pub fn fit_logit_kde(batch: &SampleBatch, eps_clamp: f64) -> Result<KdeModel> {
    fit_logit_kde_values(batch.values(), eps_clamp)
}

pub fn fit_logit_kde_values(values: &[f64], eps_clamp: f64) -> Result<KdeModel> {
    if !(eps_clamp > 0.0 && eps_clamp < 0.5) {
        return Err(Error::Config(format!("eps_clamp {eps_clamp} outside (0, 0.5)")));
    }
    let mut logit_samples: Vec<f64> = values
        .iter()
        .map(|&x| logit(x.clamp(eps_clamp, 1.0 - eps_clamp)))
        .collect();
    let sigma = empirical_std(&logit_samples)?;
    if !(sigma > 0.0) {
        return Err(Error::DegenerateVariance);
    }
    let bandwidth = silverman_bandwidth(sigma, logit_samples.len());
    logit_samples.sort_unstable_by(f64::total_cmp);
    Ok(KdeModel {
        logit_samples,
        bandwidth,
        eps_clamp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn empirical_std_examples() {
        assert_eq!(empirical_std(&[0.5, 0.5, 0.5]).unwrap(), 0.0);
        assert_abs_diff_eq!(empirical_std(&[0.0, 1.0]).unwrap(), 0.5f64.sqrt(), epsilon = 1e-15);
        assert!(empirical_std(&[0.3]).is_err());
    }

    #[test]
    fn silverman_examples() {
        assert_abs_diff_eq!(silverman_bandwidth(0.1, 100_000), 0.0106, epsilon = 1e-15);
        assert_eq!(silverman_bandwidth(1.0, 1), 1.06);
        assert_abs_diff_eq!(silverman_bandwidth(0.1, 10_000_000_000), 1.06e-3, epsilon = 1e-15);
    }

    #[test]
    fn bias_bound_examples() {
        assert_abs_diff_eq!(kde_bias_bound(100_000), 1e-4, epsilon = 1e-18);
        assert_abs_diff_eq!(kde_bias_bound(1), 1e-2, epsilon = 1e-16);
        assert_abs_diff_eq!(kde_bias_bound(10_000_000_000), 1e-6, epsilon = 1e-19);
        let mut prev = f64::INFINITY;
        for n in [1, 2, 10, 1000, 1 << 20, usize::MAX] {
            let b = kde_bias_bound(n);
            assert!(b < prev);
            prev = b;
        }
    }

    #[test]
    fn constant_batch_is_degenerate() {
        let b = SampleBatch::new(vec![0.5; 100], "const").unwrap();
        assert!(matches!(fit_logit_kde(&b, DEFAULT_EPS_CLAMP), Err(Error::DegenerateVariance)));
    }

    #[test]
    fn endpoint_samples_are_clamped() {
        let b = SampleBatch::new(vec![0.0, 0.3, 0.7, 1.0], "edges").unwrap();
        let m = fit_logit_kde(&b, 1e-6).unwrap();
        assert!(m.logit_samples().iter().all(|s| s.is_finite()));
        assert_abs_diff_eq!(m.logit_samples()[0], logit(1e-6), epsilon = 1e-12);
        assert!(m.density(0.0).is_finite());
        assert!(fit_logit_kde(&b, 0.5).is_err());
        assert!(fit_logit_kde(&b, 0.0).is_err());
    }

    #[test]
    fn bandwidth_recomputed_independently() {
        let vals = [0.12, 0.5, 0.33, 0.9, 0.71, 0.05];
        let m = fit_logit_kde_values(&vals, DEFAULT_EPS_CLAMP).unwrap();
        let l: Vec<f64> = vals.iter().map(|x| (x / (1.0 - x)).ln()).collect();
        let mean = l.iter().sum::<f64>() / 6.0;
        let sd = (l.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 5.0).sqrt();
        assert_abs_diff_eq!(m.bandwidth(), 1.06 * sd * 6f64.powf(-0.2), epsilon = 1e-14);
    }

    #[test]
    fn windowed_sum_matches_full_sum() {
        let vals: Vec<f64> = (1..500).map(|i| (i as f64 / 500.0).powi(2)).collect();
        let m = fit_logit_kde_values(&vals, DEFAULT_EPS_CLAMP).unwrap();
        let w = m.bandwidth();
        for z in [1e-6, 0.01, 0.2, 0.5, 0.93, 0.999999] {
            let t = logit(z);
            let full: f64 = m
                .logit_samples()
                .iter()
                .map(|s| (-0.5 * ((t - s) / w).powi(2)).exp())
                .sum::<f64>()
                / (m.n() as f64 * w * (2.0 * PI).sqrt())
                / (z * (1.0 - z));
            assert_abs_diff_eq!(m.density(z), full, epsilon = 1e-12 * full.max(1.0));
        }
    }

    #[test]
    fn symmetric_samples_give_symmetric_density() {
        let half = [0.05, 0.1, 0.22, 0.3, 0.41, 0.47];
        let vals: Vec<f64> = half.iter().flat_map(|&x| [x, 1.0 - x]).collect();
        let m = fit_logit_kde_values(&vals, DEFAULT_EPS_CLAMP).unwrap();
        for z in [0.01, 0.1, 0.25, 0.4, 0.5] {
            assert_abs_diff_eq!(m.density(z), m.density(1.0 - z), epsilon = 1e-12);
        }
    }

    #[test]
    fn density_many_preserves_order() {
        let vals: Vec<f64> = (1..200).map(|i| i as f64 / 200.0).collect();
        let m = fit_logit_kde_values(&vals, DEFAULT_EPS_CLAMP).unwrap();
        let zs: Vec<f64> = (0..300).map(|i| (i as f64 + 0.5) / 300.0).collect();
        let many = m.density_many(&zs);
        for (z, v) in zs.iter().zip(&many) {
            assert_eq!(m.density(*z).to_bits(), v.to_bits());
        }
    }
}
