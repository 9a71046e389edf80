//! Subjective-logic operators and Monte Carlo checks of how well they
//! approximate the densities of products and fusions of Beta variables.

pub mod dist;
pub mod distance;
pub mod error;
pub mod experiments;
pub mod kde;
pub mod mc;
pub mod opinion;
pub mod rng;

pub use dist::{
    limit_case_density, product_moments_analytic, BetaParams, DirichletParams, GaussianParams,
    MomentPair, UniformProductDensity,
};
pub use distance::{
    integral_distance, total_variation, Density, DensityEvaluator, FnDensity, IntegrationSpec,
    PointPlacement,
};
pub use error::{Error, Result};
pub use experiments::{
    AggregateStat, Approximant, DensityTable, ExperimentConfig, ExperimentOutput, Operator,
    RunRecord, Start,
};
pub use kde::{fit_logit_kde, kde_bias_bound, silverman_bandwidth, KdeModel};
pub use mc::{EstimatorResult, SampleBatch};
pub use opinion::{
    fuse_detailed, multiply_many, BinomialOpinion, MappingConstant, MultinomialOpinion,
    SpreadTerm, Violation,
};
pub use rng::{RngSeed, SimRng};
