//! Seeded sampling, the product and fusion sample maps, and plain Monte
//! Carlo estimators.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};

use crate::dist::{BetaParams, MomentPair};
use crate::error::{Error, Result};
use crate::opinion::BinomialOpinion;
use crate::rng::{RngSeed, SimRng};

/// Upper end of the uniform range Beta shapes are drawn from.
pub const MAX_RANDOM_SHAPE: f64 = 10.0;

/// Fusion pairs whose map denominator falls below this are redrawn.
pub const FUSION_DENOM_GUARD: f64 = 1e-300;

const MAX_FUSION_REDRAWS: usize = 1_000;

/// Draws pushed through a pipeline, all in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    values: Vec<f64>,
    pub provenance: String,
    /// Samples replaced by fresh draws (degenerate fusion pairs).
    pub resampled: usize,
}

impl SampleBatch {
    pub fn new(values: Vec<f64>, provenance: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::TooFewSamples { need: 1, got: 0 });
        }
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(*bad));
        }
        Ok(Self {
            values,
            provenance: provenance.into(),
            resampled: 0,
        })
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Mean of some function of the samples with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResult {
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
}

impl EstimatorResult {
    /// Sample mean and `std/√n` (std with divisor `n − 1`).
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::TooFewSamples { need: 2, got: n });
        }
        let (mean, var) = mean_and_variance(values);
        Ok(Self {
            value: mean,
            stderr: (var / n as f64).sqrt(),
            n,
        })
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            stderr: self.stderr * factor.abs(),
            n: self.n,
        }
    }
}

/// Two-pass mean and unbiased variance. `values` must hold at least 2 items.
pub(crate) fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, ss / (n - 1.0))
}

/// One Beta variate as a ratio of Gamma variates.
pub(crate) fn draw_beta(rng: &mut SimRng, num: &Gamma<f64>, den: &Gamma<f64>) -> f64 {
    loop {
        let x = num.sample(rng);
        let y = den.sample(rng);
        let s = x + y;
        // Both gammas can underflow to 0 for shapes near 0.
        if s > 0.0 {
            return x / s;
        }
    }
}

fn gammas(p: BetaParams) -> (Gamma<f64>, Gamma<f64>) {
    let g = |shape| Gamma::new(shape, 1.0).expect("BetaParams guarantees a positive finite shape");
    (g(p.alpha), g(p.beta))
}

/// `n` Beta draws continuing an existing generator.
pub fn sample_beta_with(p: BetaParams, n: usize, rng: &mut SimRng) -> Vec<f64> {
    let (ga, gb) = gammas(p);
    (0..n).map(|_| draw_beta(rng, &ga, &gb)).collect()
}

/// `n` i.i.d. draws from `Beta(alpha, beta)`.
pub fn sample_beta(p: BetaParams, n: usize, seed: RngSeed) -> Result<SampleBatch> {
    if n == 0 {
        return Err(Error::TooFewSamples { need: 1, got: 0 });
    }
    let mut rng = seed.rng();
    Ok(SampleBatch {
        values: sample_beta_with(p, n, &mut rng),
        provenance: format!(
            "Beta({}, {}) seed={} stream={}",
            p.alpha, p.beta, seed.seed, seed.stream
        ),
        resampled: 0,
    })
}

/// `(b, d, u)` uniform on the simplex (Dirichlet(1, 1, 1)), `a` uniform.
pub fn random_opinion(rng: &mut SimRng) -> BinomialOpinion {
    let e: [f64; 3] = std::array::from_fn(|_| Exp1.sample(rng));
    let total = e[0] + e[1] + e[2];
    let b = e[0] / total;
    let d = e[1] / total;
    // u by complement keeps the mass sum at 1 to the last ulp.
    let u = (1.0 - b - d).max(0.0);
    BinomialOpinion::new(b, d, u, rng.random::<f64>())
}

pub fn sample_random_opinion(seed: RngSeed) -> BinomialOpinion {
    random_opinion(&mut seed.rng())
}

/// Shapes independently uniform on `(0, MAX_RANDOM_SHAPE]`.
pub fn random_beta_params(rng: &mut SimRng) -> BetaParams {
    let mut draw = || MAX_RANDOM_SHAPE * (1.0 - rng.random::<f64>());
    let alpha = draw();
    let beta = draw();
    BetaParams { alpha, beta }
}

pub fn sample_random_beta_params(seed: RngSeed) -> BetaParams {
    random_beta_params(&mut seed.rng())
}

fn check_lengths(x: &SampleBatch, y: &SampleBatch) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    Ok(())
}

/// Elementwise `x_i · y_i`.
pub fn push_product_samples(x: &SampleBatch, y: &SampleBatch) -> Result<SampleBatch> {
    check_lengths(x, y)?;
    Ok(SampleBatch {
        values: x.values.iter().zip(&y.values).map(|(a, b)| a * b).collect(),
        provenance: format!("product[{}; {}]", x.provenance, y.provenance),
        resampled: x.resampled + y.resampled,
    })
}

#[inline]
fn fusion_map(x: f64, y: f64) -> Option<f64> {
    let xy = x * y;
    let denom = xy + (1.0 - x) * (1.0 - y);
    (denom > FUSION_DENOM_GUARD).then(|| xy / denom)
}

/// Elementwise `xy / (xy + (1 − x)(1 − y))`.
///
/// Pairs `(0, 1)` and `(1, 0)` have no image; each one is replaced with a
/// fresh pair from `redraw` and counted in `resampled`.
pub fn push_fusion_samples<F>(x: &SampleBatch, y: &SampleBatch, mut redraw: F) -> Result<SampleBatch>
where
    F: FnMut() -> (f64, f64),
{
    check_lengths(x, y)?;
    let mut resampled = 0;
    let values = x
        .values
        .iter()
        .zip(&y.values)
        .map(|(&a, &b)| {
            if let Some(z) = fusion_map(a, b) {
                return Ok(z);
            }
            for _ in 0..MAX_FUSION_REDRAWS {
                resampled += 1;
                let (a, b) = redraw();
                if let Some(z) = fusion_map(a, b) {
                    return Ok(z);
                }
            }
            Err(Error::DegenerateMean(format!(
                "fusion sample still degenerate after {MAX_FUSION_REDRAWS} redraws"
            )))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleBatch {
        values,
        provenance: format!("fusion[{}; {}]", x.provenance, y.provenance),
        resampled: x.resampled + y.resampled + resampled,
    })
}

/// Draws two Beta batches from one generator and fuses them, redrawing
/// degenerate pairs from the same generator.
pub fn sample_fusion_with(
    px: BetaParams,
    py: BetaParams,
    n: usize,
    rng: &mut SimRng,
) -> Result<SampleBatch> {
    let x = SampleBatch::new(sample_beta_with(px, n, rng), format!("Beta({}, {})", px.alpha, px.beta))?;
    let y = SampleBatch::new(sample_beta_with(py, n, rng), format!("Beta({}, {})", py.alpha, py.beta))?;
    let (gxa, gxb) = gammas(px);
    let (gya, gyb) = gammas(py);
    push_fusion_samples(&x, &y, || {
        (draw_beta(rng, &gxa, &gxb), draw_beta(rng, &gya, &gyb))
    })
}

/// `(1/N) Σ f(z_i)` with standard error.
pub fn mc_estimate<F>(batch: &SampleBatch, f: F) -> Result<EstimatorResult>
where
    F: Fn(f64) -> f64,
{
    let mapped: Vec<f64> = batch.values.iter().map(|&z| f(z)).collect();
    EstimatorResult::from_values(&mapped)
}

/// Sample mean and unbiased sample variance.
pub fn estimate_moments(batch: &SampleBatch) -> Result<MomentPair> {
    if batch.len() < 2 {
        return Err(Error::TooFewSamples {
            need: 2,
            got: batch.len(),
        });
    }
    let (mu, sigma2) = mean_and_variance(&batch.values);
    if sigma2 <= 0.0 {
        return Err(Error::DegenerateVariance);
    }
    Ok(MomentPair { mu, sigma2 })
}
