mod common;

use slmc::experiments::{run_multi_product, run_qualitative, run_quantitative};
use slmc::mc::{estimate_moments, mc_estimate, random_beta_params, sample_beta};
use slmc::{
    fit_logit_kde, integral_distance, limit_case_density, product_moments_analytic, Approximant,
    BetaParams, BinomialOpinion, ExperimentConfig, FnDensity, Operator, RngSeed,
    UniformProductDensity,
};

use common::{moment_check, product_batch, trapezoid_l1};

#[test]
fn beta_density_is_normalized() {
    let mut rng = RngSeed::new(1).rng();
    for _ in 0..100 {
        let p = random_beta_params(&mut rng);
        // With z = t^k/2 and k = ⌈shape⌉/shape the endpoint factor becomes an
        // integer power of t, so the midpoint rule converges fast.
        let (ka, kb) = (p.alpha.ceil() / p.alpha, p.beta.ceil() / p.beta);
        let n = 10_000;
        let half = |k: f64, f: &dyn Fn(f64) -> f64| -> f64 {
            // ∫_0^{1/2} f(z) dz with z = (1/2) t^k, midpoint rule in t.
            let h = 1.0 / n as f64;
            (0..n)
                .map(|i| {
                    let t = (i as f64 + 0.5) * h;
                    let z = 0.5 * t.powf(k);
                    if z == 0.0 {
                        return 0.0;
                    }
                    f(z) * 0.5 * k * t.powf(k - 1.0)
                })
                .sum::<f64>()
                * h
        };
        let left = half(ka, &|z| p.density(z));
        let mirrored = BetaParams::new(p.beta, p.alpha).unwrap();
        let right = half(kb, &|z| mirrored.density(z));
        let total = left + right;
        assert!((total - 1.0).abs() <= 1e-6, "{p:?}: {total}");
    }
}

#[test]
fn limit_case_density_is_normalized() {
    // ∫_ε^1 −ln z dz = 1 − ε + ε ln ε.
    let eps: f64 = 1e-12;
    let closed = 1.0 - eps + eps * eps.ln();
    assert!((closed - 1.0).abs() <= 1e-6);
    // Numerically, with z = t² to soften the log singularity.
    let n = 100_000;
    let h = 1.0 / n as f64;
    let num: f64 = (0..=n)
        .map(|i| {
            let t = (i as f64 * h).max(eps.sqrt());
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            w * limit_case_density(t * t).unwrap() * 2.0 * t
        })
        .sum::<f64>()
        * h;
    assert!((num - 1.0).abs() <= 1e-6, "{num}");
}

#[test]
fn mc_estimate_examples() {
    let batch = sample_beta(BetaParams::uniform(), 100_000, RngSeed::new(2)).unwrap();
    let mean = mc_estimate(&batch, |z| z).unwrap();
    assert!((mean.value - 0.5).abs() <= 3.0 * mean.stderr, "{mean:?}");
    let median = mc_estimate(&batch, |z| if z <= 0.5 { 1.0 } else { 0.0 }).unwrap();
    assert!((median.value - 0.5).abs() <= 3.0 * median.stderr, "{median:?}");
    let one = mc_estimate(&batch, |_| 1.0).unwrap();
    assert_eq!((one.value, one.stderr), (1.0, 0.0));
}

#[test]
fn sampled_beta_moments() {
    let p = BetaParams::new(2.0, 5.0).unwrap();
    let batch = sample_beta(p, 100_000, RngSeed::new(3)).unwrap();
    let z = moment_check(batch.values()).z_score(p.moments());
    assert!(z <= 4.0, "{z}");
    let again = sample_beta(p, 100_000, RngSeed::new(3)).unwrap();
    assert_eq!(batch, again);
}

#[test]
fn product_moments_match_mc() {
    let mut rng = RngSeed::new(4).rng();
    for i in 0..10 {
        let (x, y) = (random_beta_params(&mut rng), random_beta_params(&mut rng));
        let batch = product_batch(x, y, 100_000, 40 + i);
        let want = product_moments_analytic(x.moments(), y.moments());
        let z = moment_check(batch.values()).z_score(want);
        assert!(z <= 4.0, "{x:?} × {y:?}: {z:.2} SE");
    }
}

#[test]
fn mean_error_converges_at_root_n() {
    let mut rng = RngSeed::new(5).rng();
    let params: Vec<BetaParams> = (0..20).map(|_| random_beta_params(&mut rng)).collect();
    let ns = [1_000usize, 10_000, 100_000];
    // Average the absolute error over params and seeds, then fit a slope.
    let errs: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let mut total = 0.0;
            let mut count = 0.0;
            for (k, p) in params.iter().enumerate() {
                for s in 0..10u64 {
                    let seed = RngSeed::new(500 + k as u64).with_stream(s);
                    let m = estimate_moments(&sample_beta(*p, n, seed).unwrap()).unwrap();
                    total += (m.mu - p.moments().mu).abs() / p.moments().sigma2.sqrt();
                    count += 1.0;
                }
            }
            total / count
        })
        .collect();
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).log10()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.log10()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((slope + 0.5).abs() <= 0.15, "slope {slope}, errors {errs:?}");
}

#[test]
fn kde_refines_towards_uniform() {
    let grid: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
    let deviation = |n: usize| -> f64 {
        (0..10u64)
            .map(|s| {
                let b = sample_beta(BetaParams::uniform(), n, RngSeed::new(6).with_stream(s)).unwrap();
                let kde = fit_logit_kde(&b, 1e-9).unwrap();
                kde.density_many(&grid).iter().map(|v| (v - 1.0).abs()).sum::<f64>() / grid.len() as f64
            })
            .sum::<f64>()
            / 10.0
    };
    let devs: Vec<f64> = [1_000, 10_000, 100_000].into_iter().map(deviation).collect();
    assert!(devs.windows(2).all(|w| w[1] < w[0]), "{devs:?}");
}

#[test]
fn kde_of_product_pipeline_is_normalized() {
    let x = BetaParams::new(2.0, 3.0).unwrap();
    let y = BetaParams::new(0.8, 1.5).unwrap();
    let kde = fit_logit_kde(&product_batch(x, y, 100_000, 7), 1e-9).unwrap();
    let nodes = 4_001;
    let (lo, hi) = (-30.0, 30.0);
    let h = (hi - lo) / (nodes - 1) as f64;
    let mass: f64 = (0..nodes)
        .map(|i| {
            let t: f64 = lo + h * i as f64;
            let z = 1.0 / (1.0 + (-t).exp());
            let v = kde.density(z);
            assert!(v >= 0.0);
            v * z * (1.0 - z)
        })
        .sum::<f64>()
        * h;
    assert!((mass - 1.0).abs() <= 0.02, "{mass}");
}

#[test]
fn distance_matches_trapezoid() {
    let p = BetaParams::new(2.0, 5.0).unwrap();
    let q = BetaParams::new(5.0, 2.0).unwrap();
    let mc = integral_distance(&p, &q, 100_000, RngSeed::new(8)).unwrap();
    let quad = trapezoid_l1(&p, &q, 1e-9, 1.0 - 1e-9, 100_000);
    assert!((mc.value - quad).abs() <= 4.0 * mc.stderr, "{mc:?} vs {quad}");
}

#[test]
fn uniform_against_minus_log() {
    // ∫|1 + ln z| dz = 2/e.
    let mc = integral_distance(&BetaParams::uniform(), &UniformProductDensity, 100_000, RngSeed::new(9)).unwrap();
    let exact = 2.0 / std::f64::consts::E;
    assert!((mc.value - exact).abs() <= 4.0 * mc.stderr, "{mc:?} vs {exact}");
}

#[test]
fn total_variation_in_range() {
    let p = BetaParams::new(0.5, 0.5).unwrap();
    let q = FnDensity(|z: f64| 2.0 * z);
    let tv = slmc::total_variation(&p, &q, 10_000, RngSeed::new(10)).unwrap();
    assert!(tv.value >= 0.0 && tv.value <= 1.0 + 4.0 * tv.stderr, "{tv:?}");
}

fn mean_abs_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

#[test]
fn qualitative_figure_pair() {
    let cfg = ExperimentConfig {
        n_samples: Some(vec![100_000]),
        operands: Some((
            BinomialOpinion::new(0.61, 0.30, 0.09, 0.79),
            BinomialOpinion::new(0.28, 0.66, 0.06, 0.46),
        )),
        ..ExperimentConfig::default()
    };
    let t = run_qualitative(&cfg).unwrap();
    assert_eq!(t.z.len(), 1000);
    let gap = mean_abs_gap(t.column(Approximant::Sl).unwrap(), t.column(Approximant::Kde).unwrap());
    assert!(gap < 0.2, "{gap}");
    for a in Approximant::ALL {
        assert!(t.column(a).is_some(), "{a}");
    }
}

#[test]
fn qualitative_vacuous_product_tracks_minus_log() {
    let vac = BinomialOpinion::vacuous(0.5);
    let gap = |n: usize| {
        let cfg = ExperimentConfig {
            n_samples: Some(vec![n]),
            operands: Some((vac, vac)),
            ..ExperimentConfig::default()
        };
        let t = run_qualitative(&cfg).unwrap();
        let exact: Vec<f64> = t.z.iter().map(|&z| -z.ln()).collect();
        mean_abs_gap(t.column(Approximant::Kde).unwrap(), &exact)
    };
    let (coarse, fine) = (gap(1_000), gap(100_000));
    assert!(fine < coarse && fine < 0.1, "{coarse} -> {fine}");
}

#[test]
fn two_factor_chain_reproduces_quantitative() {
    let base = ExperimentConfig {
        n_samples: Some(vec![10_000]),
        n_reps: 60,
        ..ExperimentConfig::default()
    };
    let q = run_quantitative(&base).unwrap();
    let m = run_multi_product(&ExperimentConfig {
        l_factors: (2, 2),
        ..base
    })
    .unwrap();
    let pick = |aggs: &[slmc::AggregateStat]| {
        aggs.iter()
            .find(|a| a.approximant == Approximant::Sl)
            .cloned()
            .unwrap()
    };
    let (a, b) = (pick(&q.aggregates), pick(&m.aggregates));
    assert!((a.mean - b.mean).abs() <= a.std.max(b.std), "{a:?} vs {b:?}");
    assert_eq!(b.operator, Operator::Product);
}
