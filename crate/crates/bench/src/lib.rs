//! Fixtures shared by the benchmarks.

use slmc::{BetaParams, BinomialOpinion, RngSeed};

/// `n` random opinion pairs from a fixed seed.
pub fn opinion_pairs(n: usize) -> Vec<(BinomialOpinion, BinomialOpinion)> {
    let mut rng = RngSeed::new(42).rng();
    (0..n)
        .map(|_| {
            let x = slmc::mc::random_opinion(&mut rng);
            let mut y = slmc::mc::random_opinion(&mut rng);
            y.a = x.a;
            (x, y)
        })
        .collect()
}

/// Samples of `Beta(2, 5) × Beta(3, 1.5)`.
pub fn product_samples(n: usize) -> slmc::SampleBatch {
    let x = slmc::mc::sample_beta(BetaParams::new(2.0, 5.0).unwrap(), n, RngSeed::new(1)).unwrap();
    let y = slmc::mc::sample_beta(BetaParams::new(3.0, 1.5).unwrap(), n, RngSeed::new(2)).unwrap();
    slmc::mc::push_product_samples(&x, &y).unwrap()
}
