//! The four measurement protocols: qualitative density overlays,
//! quantitative distance sweeps, the uniform×uniform limit case, and chains
//! of products.
//!
//! Every repetition draws from its own `(cell seed, rep)` stream, so
//! repetitions run in parallel and the output does not depend on
//! scheduling.

mod output;
mod records;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use output::{
    format_sig9, write_aggregates_csv, write_density_csv, write_density_json, write_distance_json,
    write_records_csv, AGGREGATES_HEADER, DENSITY_HEADER, RECORDS_HEADER,
};
pub use records::{
    aggregate_stats, bias_gate, AggregateStat, Approximant, Operator, RunRecord, Start,
    BIAS_GATE_FACTOR,
};

use crate::dist::{product_moments_analytic, BetaParams, GaussianParams, MomentPair, UniformProductDensity};
use crate::distance::{Density, DensityEvaluator, IntegrationSpec, PointPlacement};
use crate::error::{Error, Result};
use crate::kde::{fit_logit_kde, DEFAULT_EPS_CLAMP};
use crate::mc::{
    estimate_moments, push_product_samples, random_beta_params, random_opinion,
    sample_beta_with, sample_fusion_with, SampleBatch,
};
use crate::opinion::{multiply_many, BinomialOpinion, MappingConstant};
use crate::rng::{RngSeed, SimRng};

/// Default MC sample ladder for the quantitative sweep.
pub const DEFAULT_LADDER: [usize; 3] = [1_000, 10_000, 100_000];
pub const DEFAULT_QUALITATIVE_SAMPLES: usize = 100_000;
pub const DEFAULT_LIMIT_SAMPLES: usize = 1_000_000;
pub const DEFAULT_MULTI_SAMPLES: usize = 10_000;
pub const DEFAULT_REPS: usize = 100;

/// Redraws beyond this fraction of the repetitions abort a cell.
pub const MAX_REDRAW_FRACTION: f64 = 0.1;

/// Operand draws tried per repetition before giving up on the parameters.
const MAX_OPERAND_REJECTIONS: usize = 10_000;

const STD_NOTE: &str = "std is the sample standard deviation across repetitions";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub operator: Operator,
    pub start: Start,
    /// MC sample ladder; `None` picks the protocol default.
    pub n_samples: Option<Vec<usize>>,
    pub n_reps: usize,
    /// Integration points, or grid points for the qualitative table.
    pub m_integration: usize,
    pub l_factors: (usize, usize),
    pub seed: u64,
    pub eps_clamp: f64,
    pub w: MappingConstant,
    pub placement: PointPlacement,
    /// Fixed operands for the qualitative protocol.
    pub operands: Option<(BinomialOpinion, BinomialOpinion)>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            operator: Operator::Product,
            start: Start::Opinion,
            n_samples: None,
            n_reps: DEFAULT_REPS,
            m_integration: crate::distance::DEFAULT_INTEGRATION_POINTS,
            l_factors: (2, 5),
            seed: RngSeed::default().seed,
            eps_clamp: DEFAULT_EPS_CLAMP,
            w: MappingConstant::default(),
            placement: PointPlacement::Sampled,
            operands: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if let Some(ladder) = &self.n_samples {
            if ladder.is_empty() {
                return bad("empty sample ladder".into());
            }
            if let Some(n) = ladder.iter().find(|&&n| n < 10) {
                return bad(format!("n_samples must be >= 10, got {n}"));
            }
        }
        if self.n_reps < 1 {
            return bad("n_reps must be >= 1".into());
        }
        if self.m_integration < 2 {
            return bad(format!("m_integration must be >= 2, got {}", self.m_integration));
        }
        let (lo, hi) = self.l_factors;
        if lo < 2 || hi > 5 || lo > hi {
            return bad(format!("factor range {lo}..{hi} must lie within 2..5"));
        }
        if !(self.eps_clamp > 0.0 && self.eps_clamp < 0.5) {
            return bad(format!("eps {} outside (0, 0.5)", self.eps_clamp));
        }
        if let (Operator::Fusion, Some((x, y))) = (self.operator, &self.operands) {
            if (x.a - y.a).abs() > crate::opinion::SIMPLEX_TOL {
                return Err(Error::PriorMismatch(x.a, y.a));
            }
        }
        Ok(())
    }

    fn ladder(&self, default: &[usize]) -> Vec<usize> {
        self.n_samples.clone().unwrap_or_else(|| default.to_vec())
    }

    fn integration(&self) -> IntegrationSpec {
        IntegrationSpec {
            points: self.m_integration,
            eps_clamp: self.eps_clamp,
            placement: self.placement,
        }
    }

    /// Base seed of one experiment cell.
    fn cell_seed(&self, protocol: u64, n_samples: usize, l_factors: usize) -> RngSeed {
        let tag = (protocol << 56)
            ^ ((self.operator as u64) << 52)
            ^ ((self.start as u64) << 48)
            ^ ((l_factors as u64) << 40)
            ^ n_samples as u64;
        RngSeed::new(self.seed).derive(tag)
    }
}

/// Records and aggregates of one distance protocol.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentOutput {
    pub records: Vec<RunRecord>,
    pub aggregates: Vec<AggregateStat>,
    pub notes: Vec<String>,
}

/// Densities on an even grid, one column per approximant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityTable {
    pub operator: Operator,
    pub n_samples: usize,
    pub x: BinomialOpinion,
    pub y: BinomialOpinion,
    pub z: Vec<f64>,
    pub columns: BTreeMap<Approximant, Vec<f64>>,
    pub notes: Vec<String>,
}

impl DensityTable {
    pub fn column(&self, a: Approximant) -> Option<&[f64]> {
        self.columns.get(&a).map(Vec::as_slice)
    }
}

/// Operands of one repetition in both domains.
#[derive(Debug, Clone)]
struct Operands {
    opinions: Vec<BinomialOpinion>,
    betas: Vec<BetaParams>,
}

impl Operands {
    fn from_opinions(opinions: Vec<BinomialOpinion>, w: MappingConstant) -> Result<Self> {
        let betas = opinions.iter().map(|o| o.to_beta(w)).collect::<Result<_>>()?;
        Ok(Self { opinions, betas })
    }

    fn describe(&self) -> String {
        let ops: Vec<String> = self.opinions.iter().map(ToString::to_string).collect();
        ops.join(" × ")
    }
}

/// Draws `count` operands per the start domain. Fusion operands share a
/// prior. Returns the operands and the number of rejected draws.
fn draw_operands(
    cfg: &ExperimentConfig,
    count: usize,
    rng: &mut SimRng,
) -> Result<(Operands, usize)> {
    let w = cfg.w;
    for rejected in 0..MAX_OPERAND_REJECTIONS {
        let attempt = match cfg.start {
            Start::Opinion => {
                let mut ops: Vec<BinomialOpinion> = (0..count).map(|_| random_opinion(rng)).collect();
                if cfg.operator == Operator::Fusion {
                    let a = ops[0].a;
                    ops.iter_mut().for_each(|o| o.a = a);
                }
                Operands::from_opinions(ops, w)
            }
            Start::Pdf => {
                let betas: Vec<BetaParams> = (0..count).map(|_| random_beta_params(rng)).collect();
                let priors: Vec<f64> = match cfg.operator {
                    Operator::Product => betas.iter().map(|p| p.alpha / (p.alpha + p.beta)).collect(),
                    Operator::Fusion => {
                        let alpha: f64 = betas.iter().map(|p| p.alpha).sum();
                        let total: f64 = betas.iter().map(|p| p.alpha + p.beta).sum();
                        vec![alpha / total; count]
                    }
                };
                betas
                    .iter()
                    .zip(&priors)
                    .map(|(p, &a)| BinomialOpinion::from_beta(*p, a, w))
                    .collect::<Result<Vec<_>>>()
                    .map(|opinions| Operands { opinions, betas })
            }
        };
        if let Ok(ops) = attempt {
            return Ok((ops, rejected));
        }
    }
    Err(Error::Config(format!(
        "no admissible operands after {MAX_OPERAND_REJECTIONS} draws"
    )))
}

/// MC samples of the operator applied to independent draws of each factor.
fn push_samples(operator: Operator, factors: &[BetaParams], n: usize, rng: &mut SimRng) -> Result<SampleBatch> {
    match operator {
        Operator::Product => {
            let mut acc = SampleBatch::new(sample_beta_with(factors[0], n, rng), "product")?;
            for p in &factors[1..] {
                let next = SampleBatch::new(sample_beta_with(*p, n, rng), "factor")?;
                acc = push_product_samples(&acc, &next)?;
            }
            Ok(acc)
        }
        Operator::Fusion => sample_fusion_with(factors[0], factors[1], n, rng),
    }
}

/// Everything built from one set of operands and one sample batch.
struct Approximants {
    kde: crate::kde::KdeModel,
    evaluators: Vec<(Approximant, DensityEvaluator<'static>)>,
}

fn build_approximants(
    cfg: &ExperimentConfig,
    operands: &Operands,
    wanted: &[Approximant],
    n: usize,
    rng: &mut SimRng,
) -> Result<Approximants> {
    let sl = match cfg.operator {
        Operator::Product => multiply_many(&operands.opinions)?,
        Operator::Fusion => operands.opinions[0].fuse(&operands.opinions[1], cfg.w)?,
    };
    let sl = sl.to_beta(cfg.w)?;

    let batch = push_samples(cfg.operator, &operands.betas, n, rng)?;
    let kde = fit_logit_kde(&batch, cfg.eps_clamp)?;

    let needs_mc = wanted.iter().any(|a| matches!(a, Approximant::GaussMc | Approximant::BetaMc));
    let mc = if needs_mc { Some(estimate_moments(&batch)?) } else { None };
    let analytic = match cfg.operator {
        Operator::Product => Some(
            operands
                .betas
                .iter()
                .map(BetaParams::moments)
                .reduce(product_moments_analytic)
                .expect("at least one factor"),
        ),
        Operator::Fusion => None,
    };

    let gauss = |m: Option<MomentPair>| -> Result<DensityEvaluator<'static>> {
        let m = m.expect("moments computed for requested approximant");
        Ok(DensityEvaluator::new("gauss", GaussianParams::from_moments(m)?))
    };
    let beta = |m: Option<MomentPair>| -> Result<DensityEvaluator<'static>> {
        let m = m.expect("moments computed for requested approximant");
        Ok(DensityEvaluator::new("beta", BetaParams::from_moments(m)?))
    };

    let mut evaluators = Vec::with_capacity(wanted.len());
    for &a in wanted {
        let ev = match a {
            // The KDE is evaluated directly from `kde`.
            Approximant::Kde => continue,
            Approximant::Sl => DensityEvaluator::new("sl", sl),
            Approximant::GaussMc => gauss(mc)?,
            Approximant::BetaMc => beta(mc)?,
            Approximant::GaussAn | Approximant::BetaAn if analytic.is_none() => continue,
            Approximant::GaussAn => gauss(analytic)?,
            Approximant::BetaAn => beta(analytic)?,
        };
        evaluators.push((a, DensityEvaluator { label: a.to_string(), ..ev }));
    }
    Ok(Approximants { kde, evaluators })
}

/// What the approximants are measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Reference {
    Kde,
    /// `−ln z`, the exact density of a product of two uniforms.
    UniformProduct,
}

fn measure(
    cfg: &ExperimentConfig,
    approx: &Approximants,
    reference: Reference,
    wanted: &[Approximant],
    rng: &mut SimRng,
) -> Result<Vec<(Approximant, f64, f64)>> {
    let spec = cfg.integration();
    let points = spec.draw_points(rng)?;
    let kde_values = approx.kde.density_many(&points);
    let ref_values = match reference {
        Reference::Kde => {
            let self_gap = spec.l1_from_values(&kde_values, &kde_values)?;
            if self_gap.value != 0.0 {
                return Err(Error::DegenerateMean(format!(
                    "KDE self-distance is {}, expected exactly 0",
                    self_gap.value
                )));
            }
            kde_values.clone()
        }
        Reference::UniformProduct => UniformProductDensity.density_many(&points),
    };

    let mut out = Vec::with_capacity(wanted.len());
    for &a in wanted {
        let values = if a == Approximant::Kde {
            if reference == Reference::Kde {
                continue;
            }
            kde_values.clone()
        } else {
            match approx.evaluators.iter().find(|(k, _)| *k == a) {
                Some((_, ev)) => ev.density_many(&points),
                None => continue,
            }
        };
        let d = spec.l1_from_values(&values, &ref_values)?;
        out.push((a, d.value, d.stderr));
    }
    Ok(out)
}

struct RepOutcome {
    rep: usize,
    distances: Vec<(Approximant, f64, f64)>,
    rejections: usize,
    redraws: usize,
    last_failure: Option<String>,
}

/// Runs one repetition, redrawing on numeric failure up to `max_redraws`
/// times.
fn run_rep<F>(seed: RngSeed, rep: usize, max_redraws: usize, attempt: F) -> Result<RepOutcome>
where
    F: Fn(&mut SimRng, &mut usize) -> Result<Vec<(Approximant, f64, f64)>>,
{
    let mut rng = seed.with_stream(rep as u64).rng();
    let mut rejections = 0;
    let mut redraws = 0;
    let mut last_failure = None;
    loop {
        match attempt(&mut rng, &mut rejections) {
            Ok(distances) => {
                return Ok(RepOutcome {
                    rep,
                    distances,
                    rejections,
                    redraws,
                    last_failure,
                })
            }
            Err(e @ (Error::Config(_) | Error::Io(_))) => return Err(e),
            Err(e) => {
                last_failure = Some(e.to_string());
                redraws += 1;
                if redraws > max_redraws {
                    return Ok(RepOutcome {
                        rep,
                        distances: Vec::new(),
                        rejections,
                        redraws,
                        last_failure,
                    });
                }
            }
        }
    }
}

/// Runs every repetition of one cell and turns the outcomes into records.
fn run_cell<F>(
    cfg: &ExperimentConfig,
    seed: RngSeed,
    n_samples: usize,
    l_factors: usize,
    attempt: F,
) -> Result<(Vec<RunRecord>, usize)>
where
    F: Fn(&mut SimRng, &mut usize) -> Result<Vec<(Approximant, f64, f64)>> + Sync,
{
    let max_redraws = (MAX_REDRAW_FRACTION * cfg.n_reps as f64).floor() as usize;
    let outcomes: Vec<RepOutcome> = (0..cfg.n_reps)
        .into_par_iter()
        .map(|rep| run_rep(seed, rep, max_redraws, &attempt))
        .collect::<Result<_>>()?;

    let redraws: usize = outcomes.iter().map(|o| o.redraws).sum();
    if redraws > max_redraws {
        let last = outcomes
            .iter()
            .rev()
            .find_map(|o| o.last_failure.clone())
            .unwrap_or_default();
        return Err(Error::RedrawLimit {
            redraws,
            reps: cfg.n_reps,
            last,
        });
    }
    let rejections = redraws + outcomes.iter().map(|o| o.rejections).sum::<usize>();
    let records = outcomes
        .into_iter()
        .flat_map(|o| {
            let rep = o.rep;
            o.distances.into_iter().map(move |(approximant, distance, stderr)| RunRecord {
                operator: cfg.operator,
                start: cfg.start,
                n_samples,
                l_factors,
                rep,
                approximant,
                distance,
                stderr,
            })
        })
        .collect();
    Ok((records, rejections))
}

fn finish(
    mut records: Vec<RunRecord>,
    rejections: &[(usize, usize, usize)],
    notes: Vec<String>,
) -> Result<ExperimentOutput> {
    records.sort_by(|a, b| {
        (a.l_factors, a.n_samples, a.rep, a.approximant).cmp(&(b.l_factors, b.n_samples, b.rep, b.approximant))
    });
    let mut aggregates = aggregate_stats(&records)?;
    for a in &mut aggregates {
        a.rejections = rejections
            .iter()
            .find(|(n, l, _)| *n == a.n_samples && *l == a.l_factors)
            .map_or(0, |r| r.2);
    }
    aggregates.sort_by(|a, b| {
        (a.l_factors, a.n_samples, a.approximant).cmp(&(b.l_factors, b.n_samples, b.approximant))
    });
    let mut notes = notes;
    let flagged = aggregates.iter().filter(|a| !a.bias_gate_ok).count();
    if flagged > 0 {
        notes.push(format!("{flagged} aggregate rows fail the KDE bias gate"));
    }
    Ok(ExperimentOutput {
        records,
        aggregates,
        notes,
    })
}

fn quantitative_approximants(op: Operator) -> &'static [Approximant] {
    match op {
        Operator::Product => &[
            Approximant::Sl,
            Approximant::GaussMc,
            Approximant::BetaMc,
            Approximant::GaussAn,
            Approximant::BetaAn,
        ],
        Operator::Fusion => &[Approximant::Sl, Approximant::GaussMc, Approximant::BetaMc],
    }
}

/// Distances of every approximant to the KDE of the true operator's
/// samples, for random operands, over the sample ladder.
pub fn run_quantitative(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let wanted = quantitative_approximants(cfg.operator);
    let mut records = Vec::new();
    let mut rejections = Vec::new();
    for n in cfg.ladder(&DEFAULT_LADDER) {
        let seed = cfg.cell_seed(1, n, 2);
        let (r, rej) = run_cell(cfg, seed, n, 2, |rng, rejected| {
            let (ops, k) = draw_operands(cfg, 2, rng)?;
            *rejected += k;
            let approx = build_approximants(cfg, &ops, wanted, n, rng)?;
            measure(cfg, &approx, Reference::Kde, wanted, rng)
        })?;
        records.extend(r);
        rejections.push((n, 2, rej));
    }
    finish(records, &rejections, vec![STD_NOTE.into()])
}

/// Both operands `Beta(1, 1)` with `a = 1/2`; distances to the exact `−ln z`.
pub fn run_limit_case(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    if cfg.operator != Operator::Product {
        return Err(Error::Config("the limit case is defined for the product only".into()));
    }
    let wanted = [Approximant::Kde, Approximant::Sl, Approximant::BetaMc, Approximant::BetaAn];
    let vacuous = BinomialOpinion::vacuous(0.5);
    let operands = Operands::from_opinions(vec![vacuous, vacuous], cfg.w)?;
    let mut records = Vec::new();
    let mut rejections = Vec::new();
    for n in cfg.ladder(&[DEFAULT_LIMIT_SAMPLES]) {
        let seed = cfg.cell_seed(2, n, 2);
        let (r, rej) = run_cell(cfg, seed, n, 2, |rng, _| {
            let approx = build_approximants(cfg, &operands, &wanted, n, rng)?;
            measure(cfg, &approx, Reference::UniformProduct, &wanted, rng)
        })?;
        records.extend(r);
        rejections.push((n, 2, rej));
    }
    finish(
        records,
        &rejections,
        vec![
            STD_NOTE.into(),
            "reference is the exact density -ln z; std spans repetitions, not integration points".into(),
        ],
    )
}

/// Chains of `L` random opinions multiplied left to right.
pub fn run_multi_product(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    if cfg.operator != Operator::Product {
        return Err(Error::Config("multi-product requires --operator product".into()));
    }
    let wanted = [Approximant::Sl, Approximant::BetaAn];
    let (lo, hi) = cfg.l_factors;
    let mut records = Vec::new();
    let mut rejections = Vec::new();
    for l in lo..=hi {
        for n in cfg.ladder(&[DEFAULT_MULTI_SAMPLES]) {
            let seed = cfg.cell_seed(3, n, l);
            let (r, rej) = run_cell(cfg, seed, n, l, |rng, rejected| {
                let (ops, k) = draw_operands(cfg, l, rng)?;
                *rejected += k;
                let approx = build_approximants(cfg, &ops, &wanted, n, rng)?;
                measure(cfg, &approx, Reference::Kde, &wanted, rng)
            })?;
            records.extend(r);
            rejections.push((n, l, rej));
        }
    }
    finish(records, &rejections, vec![STD_NOTE.into()])
}

/// Density of every approximant on an even grid over `[eps, 1 − eps]` for
/// one pair of operands.
pub fn run_qualitative(cfg: &ExperimentConfig) -> Result<DensityTable> {
    cfg.validate()?;
    let n = match cfg.ladder(&[DEFAULT_QUALITATIVE_SAMPLES]).as_slice() {
        [n] => *n,
        _ => return Err(Error::Config("qualitative takes a single sample count".into())),
    };
    let mut rng = cfg.cell_seed(0, n, 2).rng();
    let operands = match cfg.operands {
        Some((x, y)) => Operands::from_opinions(vec![x, y], cfg.w).map_err(|e| Error::Operands {
            operands: format!("{x} × {y}"),
            source: Box::new(e),
        })?,
        None => draw_operands(cfg, 2, &mut rng)?.0,
    };
    let wanted: Vec<Approximant> = Approximant::ALL
        .into_iter()
        .filter(|a| cfg.operator == Operator::Product || !a.is_analytic())
        .collect();
    let approx = build_approximants(cfg, &operands, &wanted, n, &mut rng).map_err(|e| Error::Operands {
        operands: operands.describe(),
        source: Box::new(e),
    })?;

    let m = cfg.m_integration;
    let width = 1.0 - 2.0 * cfg.eps_clamp;
    let z: Vec<f64> = (0..m)
        .map(|i| cfg.eps_clamp + width * i as f64 / (m - 1) as f64)
        .collect();
    let mut columns = BTreeMap::new();
    columns.insert(Approximant::Kde, approx.kde.density_many(&z));
    for (a, ev) in &approx.evaluators {
        columns.insert(*a, ev.density_many(&z));
    }
    Ok(DensityTable {
        operator: cfg.operator,
        n_samples: n,
        x: operands.opinions[0],
        y: operands.opinions[1],
        z,
        columns,
        notes: vec![format!("operands: {}", operands.describe())],
    })
}
