//! Subjective-logic opinions, their pdf mappings, and the binomial
//! multiplication and fusion operators.
//!
//! Opinions are plain `Copy` values with public fields so that invalid
//! inputs can still be represented and diagnosed with
//! [`BinomialOpinion::validate`]. Every operator checks its inputs before
//! computing anything.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dist::{BetaParams, DirichletParams};
use crate::error::{Error, Result};

/// Tolerance for the simplex constraint and other equality checks.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Largest uncertainty mass still treated as dogmatic.
pub const DOGMATIC_TOL: f64 = 1e-12;

/// Smallest admissible denominator of the fused mean.
const FUSED_MEAN_DENOM_TOL: f64 = 1e-15;

/// Scale relating opinion masses to Beta/Dirichlet pseudo-counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MappingConstant(f64);

impl MappingConstant {
    pub fn new(w: f64) -> Result<Self> {
        if w.is_finite() && w > 0.0 {
            Ok(Self(w))
        } else {
            Err(Error::Config(format!("mapping constant must be positive, got {w}")))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl Default for MappingConstant {
    fn default() -> Self {
        Self(2.0)
    }
}

/// Which constraint an opinion breaks.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonFinite(&'static str),
    OutOfUnit { component: &'static str, value: f64 },
    MassSum(f64),
    PriorSum(f64),
    Length { belief: usize, prior: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFinite(c) => write!(f, "{c} is not finite"),
            Violation::OutOfUnit { component, value } => {
                write!(f, "{component} = {value} outside [0, 1]")
            }
            Violation::MassSum(s) => write!(f, "belief masses sum to {s}, not 1"),
            Violation::PriorSum(s) => write!(f, "prior vector sums to {s}, not 1"),
            Violation::Length { belief, prior } => {
                write!(f, "belief has {belief} entries but prior has {prior}")
            }
        }
    }
}

fn check_unit(component: &'static str, value: f64) -> std::result::Result<(), Violation> {
    if !value.is_finite() {
        return Err(Violation::NonFinite(component));
    }
    if !(-SIMPLEX_TOL..=1.0 + SIMPLEX_TOL).contains(&value) {
        return Err(Violation::OutOfUnit { component, value });
    }
    Ok(())
}

/// A binomial opinion `(b, d, u, a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialOpinion {
    pub b: f64,
    pub d: f64,
    pub u: f64,
    pub a: f64,
}

impl BinomialOpinion {
    /// Builds an opinion without checking it.
    pub const fn new(b: f64, d: f64, u: f64, a: f64) -> Self {
        Self { b, d, u, a }
    }

    /// Builds an opinion, rejecting anything off the simplex.
    pub fn try_new(b: f64, d: f64, u: f64, a: f64) -> Result<Self> {
        let op = Self::new(b, d, u, a);
        op.validate().map_err(Error::InvalidOpinion)?;
        Ok(op)
    }

    pub const fn vacuous(a: f64) -> Self {
        Self::new(0.0, 0.0, 1.0, a)
    }

    /// Accepts iff every mass and the prior lie in `[0, 1]` and
    /// `b + d + u = 1`, all within [`SIMPLEX_TOL`].
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        check_unit("b", self.b)?;
        check_unit("d", self.d)?;
        check_unit("u", self.u)?;
        check_unit("a", self.a)?;
        let sum = self.b + self.d + self.u;
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Violation::MassSum(sum));
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    fn checked(&self) -> Result<()> {
        self.validate().map_err(Error::InvalidOpinion)
    }

    /// `b + a·u`, the mean of the mapped Beta.
    #[inline]
    pub fn projected_probability(&self) -> f64 {
        self.b + self.a * self.u
    }

    /// Maps to `Beta(W(b/u + a), W(d/u + 1 − a))`.
    pub fn to_beta(&self, w: MappingConstant) -> Result<BetaParams> {
        self.checked()?;
        if self.u <= DOGMATIC_TOL {
            return Err(Error::ZeroUncertainty(self.u));
        }
        let w = w.get();
        let alpha = w * (self.b / self.u + self.a);
        let beta = w * (self.d / self.u + 1.0 - self.a);
        BetaParams::new(alpha, beta).map_err(|_| Error::DegenerateBeta { alpha, beta })
    }

    /// Inverse of [`to_beta`](Self::to_beta) for a chosen prior.
    ///
    /// Requires `alpha >= W·a` and `beta >= W·(1 − a)`; anything else would
    /// produce a negative belief or disbelief mass.
    pub fn from_beta(p: BetaParams, a: f64, w: MappingConstant) -> Result<Self> {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::OutOfRange(format!("prior a = {a} outside [0, 1]")));
        }
        let w = w.get();
        let strength = p.alpha + p.beta;
        let b_pseudo = excess(p.alpha, w * a).ok_or_else(|| {
            Error::OutOfRange(format!("alpha = {} < W·a = {}", p.alpha, w * a))
        })?;
        let d_pseudo = excess(p.beta, w * (1.0 - a)).ok_or_else(|| {
            Error::OutOfRange(format!("beta = {} < W·(1 − a) = {}", p.beta, w * (1.0 - a)))
        })?;
        Ok(Self::new(b_pseudo / strength, d_pseudo / strength, w / strength, a))
    }

    /// Binomial multiplication `self · other`.
    ///
    /// The disbelief is `d_x + d_y − d_x d_y`; belief and uncertainty split
    /// the cross terms in proportion to the priors, and the priors multiply.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.checked()?;
        other.checked()?;
        let (x, y) = (self, other);
        let denom = 1.0 - x.a * y.a;
        if denom <= 0.0 {
            return Err(Error::DegeneratePrior);
        }
        let b = x.b * y.b + ((1.0 - x.a) * y.a * x.b * y.u + x.a * (1.0 - y.a) * x.u * y.b) / denom;
        let d = x.d + y.d - x.d * y.d;
        let u = x.u * y.u + ((1.0 - y.a) * x.b * y.u + (1.0 - x.a) * x.u * y.b) / denom;
        Ok(Self::new(b, d, u, x.a * y.a))
    }

    /// Fusion with the same prior, using the default spread term.
    pub fn fuse(&self, other: &Self, w: MappingConstant) -> Result<Self> {
        Ok(fuse_detailed(self, other, w, SpreadTerm::default())?.opinion)
    }
}

impl fmt::Display for BinomialOpinion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(b={}, d={}, u={}, a={})", self.b, self.d, self.u, self.a)
    }
}

/// `value − floor` when non-negative up to rounding, else `None`.
fn excess(value: f64, floor: f64) -> Option<f64> {
    let diff = value - floor;
    if diff >= 0.0 {
        Some(diff)
    } else if diff >= -SIMPLEX_TOL * value.abs().max(1.0) {
        Some(0.0)
    } else {
        None
    }
}

/// A multinomial opinion over `M` mutually exclusive outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialOpinion {
    pub b: Vec<f64>,
    pub u: f64,
    pub a: Vec<f64>,
}

impl MultinomialOpinion {
    pub fn new(b: Vec<f64>, u: f64, a: Vec<f64>) -> Self {
        Self { b, u, a }
    }

    pub fn validate(&self) -> std::result::Result<(), Violation> {
        if self.b.len() != self.a.len() {
            return Err(Violation::Length {
                belief: self.b.len(),
                prior: self.a.len(),
            });
        }
        for &b in &self.b {
            check_unit("b_i", b)?;
        }
        for &a in &self.a {
            check_unit("a_i", a)?;
        }
        check_unit("u", self.u)?;
        let mass: f64 = self.b.iter().sum::<f64>() + self.u;
        if (mass - 1.0).abs() > SIMPLEX_TOL {
            return Err(Violation::MassSum(mass));
        }
        let prior: f64 = self.a.iter().sum();
        if (prior - 1.0).abs() > SIMPLEX_TOL {
            return Err(Violation::PriorSum(prior));
        }
        Ok(())
    }

    /// `α_i = W(b_i/u + a_i)`.
    pub fn to_dirichlet(&self, w: MappingConstant) -> Result<DirichletParams> {
        self.validate().map_err(Error::InvalidOpinion)?;
        if self.u <= DOGMATIC_TOL {
            return Err(Error::ZeroUncertainty(self.u));
        }
        let w = w.get();
        let alpha = self
            .b
            .iter()
            .zip(&self.a)
            .map(|(b, a)| w * (b / self.u + a))
            .collect();
        DirichletParams::new(alpha)
    }

    /// `b_i = (α_i − W a_i)/Σα`, `u = W/Σα`.
    pub fn from_dirichlet(p: &DirichletParams, a: &[f64], w: MappingConstant) -> Result<Self> {
        if a.len() != p.alpha.len() {
            return Err(Error::OutOfRange(format!(
                "prior has {} entries, Dirichlet has {}",
                a.len(),
                p.alpha.len()
            )));
        }
        let prior: f64 = a.iter().sum();
        if a.iter().any(|x| !(0.0..=1.0).contains(x)) || (prior - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::OutOfRange(format!("prior vector {a:?} is not a distribution")));
        }
        let w = w.get();
        let strength: f64 = p.alpha.iter().sum();
        let b = p
            .alpha
            .iter()
            .zip(a)
            .enumerate()
            .map(|(i, (&alpha, &a))| {
                excess(alpha, w * a).map(|e| e / strength).ok_or_else(|| {
                    Error::OutOfRange(format!("alpha[{i}] = {alpha} < W·a[{i}] = {}", w * a))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(b, w / strength, a.to_vec()))
    }
}

/// Left fold `(((ω1·ω2)·ω3)…·ωL)`.
pub fn multiply_many(ops: &[BinomialOpinion]) -> Result<BinomialOpinion> {
    let (first, rest) = ops
        .split_first()
        .ok_or_else(|| Error::Config("multiply_many needs at least one opinion".into()))?;
    first.checked().map_err(|e| Error::Fold {
        index: 0,
        source: Box::new(e),
    })?;
    rest.iter().enumerate().try_fold(*first, |acc, (i, op)| {
        acc.multiply(op).map_err(|e| Error::Fold {
            index: i + 1,
            source: Box::new(e),
        })
    })
}

/// Per-operand spread term in the third candidate of the fused strength.
///
/// The delta-method variance of `logit Z` sums `1/((W/u + 1)·V)` over the two
/// operands, where `V` should be `P(1 − P)` with `P = b + a·u`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpreadTerm {
    /// `V = P(1 − P)`.
    #[default]
    ProjectedVariance,
    /// `V = b − b² − a·u − a²u²`, the form usually quoted for this operator.
    /// Usually negative, so the boundary candidates decide `s`.
    AsPrinted,
}

impl SpreadTerm {
    fn eval(self, op: &BinomialOpinion) -> f64 {
        match self {
            SpreadTerm::ProjectedVariance => {
                let p = op.projected_probability();
                p * (1.0 - p)
            }
            SpreadTerm::AsPrinted => {
                op.b - op.b * op.b - op.a * op.u - op.a * op.a * op.u * op.u
            }
        }
    }
}

/// Fusion output together with the fused mean `m` and strength `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fusion {
    pub opinion: BinomialOpinion,
    pub mean: f64,
    pub strength: f64,
}

/// Moment-matched fusion of two same-prior opinions.
///
/// The fused mean is the fusion map applied to the two projected
/// probabilities. The strength `s` is the largest of `W a/m`,
/// `W(1 − a)/(1 − m)` and the moment-matched `m(1 − m)/σ² − 1`; the first
/// two keep belief and disbelief non-negative.
pub fn fuse_detailed(
    x: &BinomialOpinion,
    y: &BinomialOpinion,
    w: MappingConstant,
    spread: SpreadTerm,
) -> Result<Fusion> {
    x.checked()?;
    y.checked()?;
    if (x.a - y.a).abs() > SIMPLEX_TOL {
        return Err(Error::PriorMismatch(x.a, y.a));
    }
    for u in [x.u, y.u] {
        if u <= DOGMATIC_TOL {
            return Err(Error::ZeroUncertainty(u));
        }
    }
    let a = x.a;
    let w = w.get();

    let joint = x.b * y.b + y.b * a * x.u + x.b * a * y.u + a * a * x.u * y.u;
    let denom = 2.0 * joint + 1.0 - y.b - a * y.u - x.b - a * x.u;
    if denom <= FUSED_MEAN_DENOM_TOL {
        return Err(Error::DegenerateMean(format!("denominator {denom:e}")));
    }
    let m = joint / denom;

    // NaN candidates (0/0 at a ∈ {0, 1}) are dropped by f64::max.
    let lower = if a == 0.0 { 0.0 } else { w * a / m };
    let upper = if a == 1.0 { 0.0 } else { w * (1.0 - a) / (1.0 - m) };
    let cx = (w / x.u + 1.0) * spread.eval(x);
    let cy = (w / y.u + 1.0) * spread.eval(y);
    let matched = cx * cy / (m * (1.0 - m) * (cy + cx)) - 1.0;
    let s = lower.max(upper).max(matched);
    if !s.is_finite() || s <= 0.0 {
        return Err(Error::DegenerateMean(format!("m = {m}, strength = {s}")));
    }

    let b = ((m * s - w * a) / s).max(0.0);
    let d = (((1.0 - m) * s - w * (1.0 - a)) / s).max(0.0);
    Ok(Fusion {
        opinion: BinomialOpinion::new(b, d, w / s, a),
        mean: m,
        strength: s,
    })
}
