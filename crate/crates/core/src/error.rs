use thiserror::Error;

use crate::opinion::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid opinion: {0}")]
    InvalidOpinion(Violation),

    #[error("opinion has no uncertainty mass (u = {0:e}); dogmatic opinions have no pdf image")]
    ZeroUncertainty(f64),

    #[error("parameters out of range for the opinion mapping: {0}")]
    OutOfRange(String),

    #[error("mapped Beta is degenerate: alpha = {alpha}, beta = {beta}")]
    DegenerateBeta { alpha: f64, beta: f64 },

    #[error("both priors equal 1; multiplication denominator 1 - a_x a_y vanishes")]
    DegeneratePrior,

    #[error("fusion requires a shared prior, got a_x = {0} and a_y = {1}")]
    PriorMismatch(f64, f64),

    #[error("fused mean is degenerate: {0}")]
    DegenerateMean(String),

    #[error("moments (mu = {mu}, sigma2 = {sigma2}) are infeasible for a Beta on [0,1]")]
    InfeasibleMoments { mu: f64, sigma2: f64 },

    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),

    #[error("all samples are identical; variance is zero")]
    DegenerateVariance,

    #[error("point {0} outside the density's domain")]
    Domain(f64),

    #[error("batch lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("multiplication failed at factor {index}: {source}")]
    Fold {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("with operands {operands}: {source}")]
    Operands {
        operands: String,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no records to aggregate")]
    Empty,

    #[error("{redraws} redraws over {reps} repetitions exceeds the 10% limit; last failure: {last}")]
    RedrawLimit {
        redraws: usize,
        reps: usize,
        last: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable short identifier, used for the CLI's machine-readable error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidOpinion(_) => "invalid-opinion",
            Error::ZeroUncertainty(_) => "zero-uncertainty",
            Error::OutOfRange(_) => "out-of-range",
            Error::DegenerateBeta { .. } => "degenerate-beta",
            Error::DegeneratePrior => "degenerate-prior",
            Error::PriorMismatch(..) => "prior-mismatch",
            Error::DegenerateMean(_) => "degenerate-mean",
            Error::InfeasibleMoments { .. } => "infeasible-moments",
            Error::NonPositiveVariance(_) => "non-positive-variance",
            Error::DegenerateVariance => "degenerate-variance",
            Error::Domain(_) => "domain",
            Error::LengthMismatch(..) => "length-mismatch",
            Error::TooFewSamples { .. } => "too-few-samples",
            Error::Fold { source, .. } | Error::Operands { source, .. } => source.kind(),
            Error::Config(_) => "config",
            Error::Empty => "empty-input",
            Error::RedrawLimit { .. } => "redraw-limit",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
