#![allow(dead_code)]

use slmc::mc::{random_opinion, sample_beta};
use slmc::{BetaParams, BinomialOpinion, Density, MomentPair, RngSeed, SampleBatch, SimRng};

/// Sample mean and variance with standard errors; the variance error uses
/// the fourth central moment.
pub struct MomentCheck {
    pub mu: f64,
    pub mu_se: f64,
    pub sigma2: f64,
    pub sigma2_se: f64,
}

pub fn moment_check(values: &[f64]) -> MomentCheck {
    let n = values.len() as f64;
    let mu = values.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for v in values {
        let d = (v - mu) * (v - mu);
        m2 += d;
        m4 += d * d;
    }
    let sigma2 = m2 / (n - 1.0);
    let m4 = m4 / n;
    let var_of_var = (m4 - (n - 3.0) / (n - 1.0) * sigma2 * sigma2) / n;
    MomentCheck {
        mu,
        mu_se: (sigma2 / n).sqrt(),
        sigma2,
        sigma2_se: var_of_var.max(0.0).sqrt(),
    }
}

impl MomentCheck {
    /// Largest deviation from `want` in standard errors.
    pub fn z_score(&self, want: MomentPair) -> f64 {
        let zm = (self.mu - want.mu).abs() / self.mu_se;
        let zv = (self.sigma2 - want.sigma2).abs() / self.sigma2_se;
        zm.max(zv)
    }
}

pub fn product_batch(x: BetaParams, y: BetaParams, n: usize, seed: u64) -> SampleBatch {
    let bx = sample_beta(x, n, RngSeed::new(seed).with_stream(0)).unwrap();
    let by = sample_beta(y, n, RngSeed::new(seed).with_stream(1)).unwrap();
    slmc::mc::push_product_samples(&bx, &by).unwrap()
}

/// Composite trapezoid rule for `∫|p − q|` over `[lo, hi]` with `points` nodes.
pub fn trapezoid_l1(p: &dyn Density, q: &dyn Density, lo: f64, hi: f64, points: usize) -> f64 {
    let h = (hi - lo) / (points - 1) as f64;
    (0..points)
        .map(|i| {
            let z = lo + h * i as f64;
            let w = if i == 0 || i == points - 1 { 0.5 } else { 1.0 };
            w * (p.density(z) - q.density(z)).abs()
        })
        .sum::<f64>()
        * h
}

/// Random opinion pair sharing the first operand's prior.
pub fn same_prior_pair(rng: &mut SimRng) -> (BinomialOpinion, BinomialOpinion) {
    let x = random_opinion(rng);
    let mut y = random_opinion(rng);
    y.a = x.a;
    (x, y)
}
