//! Estimating joint distributions of locally randomized categorical data.
//!
//! Each attribute of each record is perturbed independently with a
//! differentially private randomized-response matrix. The estimators in
//! [`estimator`] recover the joint distribution of any attribute subset from
//! the perturbed records; [`bounds`] gives their error envelopes and
//! [`experiment`] drives the evaluation sweeps.

// `!(x > 0.0)` style checks are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod domain;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod ingest;
pub mod linalg;
pub mod metrics;
pub mod randomizer;
pub mod stats;
pub mod synth;

pub use bounds::{BoundReport, Thresholds};
pub use domain::{
    empirical_distribution, marginal_of, Attribute, AttributeSubset, Dataset, ProbTensor, Role,
    Schema,
};
pub use error::{Error, Result};
pub use estimator::{
    estimate, EstimateOptions, EstimationRequest, EstimationResult, Method, Source,
    TruncationOptions,
};
pub use linalg::Matrix;
pub use metrics::MetricReport;
pub use randomizer::{
    randomize_dataset, randomize_joint, RandomizationMatrix, RandomizationPlan, DEFAULT_DOMAIN_CAP,
};
