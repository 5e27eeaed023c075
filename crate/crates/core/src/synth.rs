//! Two-attribute synthetic data with harmonic marginals and a chosen
//! Cramér's V.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Attribute, AttributeSubset, Dataset, ProbTensor, Role, Schema};
use crate::error::{Error, Result};
use crate::metrics::cramers_v_of_joint;

/// Accepted distance between the requested and reached Cramér's V.
pub const V_TOLERANCE: f64 = 0.02;
const MAX_BISECTION_STEPS: usize = 60;

/// Which categories carry the `∝ 1/a` weights.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginalReading {
    /// `a = 2, ..., d`: `d - 1` categories.
    #[default]
    Literal,
    /// `a = 1, ..., d`: `d` categories.
    Full,
}

/// `Pr(a) = c / a` over the categories selected by `reading`, normalised.
pub fn harmonic_marginal(d: usize, reading: MarginalReading) -> Result<ProbTensor> {
    if d < 2 {
        return Err(Error::OutOfRange(format!("d must be at least 2, got {d}")));
    }
    let first = match reading {
        MarginalReading::Literal => 2,
        MarginalReading::Full => 1,
    };
    let weights: Vec<f64> = (first..=d).map(|a| 1.0 / a as f64).collect();
    let c = 1.0 / weights.iter().sum::<f64>();
    let values: Vec<f64> = weights.iter().map(|w| c * w).collect();
    ProbTensor::new(vec![values.len()], values)
}

/// `(1 - θ) π⊗π + θ diag(π)`: both marginals stay `π` for every `θ`.
pub fn mixture_joint(marginal: &ProbTensor, theta: f64) -> Result<ProbTensor> {
    if marginal.rank() != 1 {
        return Err(Error::ShapeMismatch("marginal must be one-way".into()));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::OutOfRange(format!(
            "mixing weight {theta} outside [0, 1]"
        )));
    }
    let pi = marginal.values();
    let k = pi.len();
    let mut values = vec![0.0; k * k];
    for a in 0..k {
        for b in 0..k {
            values[a * k + b] = (1.0 - theta) * pi[a] * pi[b];
        }
        values[a * k + a] += theta * pi[a];
    }
    ProbTensor::new(vec![k, k], values)
}

fn population_v(joint: &ProbTensor) -> f64 {
    // One-category marginals have no association to speak of.
    cramers_v_of_joint(joint).unwrap_or(0.0)
}

/// A joint over two copies of `marginal` whose Cramér's V is within
/// [`V_TOLERANCE`] of `v_target`, found by bisection on the mixing weight.
pub fn build_correlated_joint(marginal: &ProbTensor, v_target: f64) -> Result<ProbTensor> {
    if !(0.0..=1.0).contains(&v_target) {
        return Err(Error::OutOfRange(format!(
            "Cramér's V target {v_target} outside [0, 1]"
        )));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut best = mixture_joint(marginal, 0.0)?;
    let mut best_gap = (population_v(&best) - v_target).abs();
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let joint = mixture_joint(marginal, mid)?;
        let v = population_v(&joint);
        let gap = (v - v_target).abs();
        if gap < best_gap {
            best = joint;
            best_gap = gap;
        }
        if gap < 1e-12 {
            break;
        }
        if v < v_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    for theta in [0.0, 1.0] {
        let joint = mixture_joint(marginal, theta)?;
        let gap = (population_v(&joint) - v_target).abs();
        if gap < best_gap {
            best = joint;
            best_gap = gap;
        }
    }
    if best_gap > V_TOLERANCE {
        return Err(Error::UnattainableTarget {
            target: v_target,
            reached: population_v(&best),
        });
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub d: usize,
    pub v_target: f64,
    pub seed: u64,
    #[serde(default)]
    pub reading: MarginalReading,
}

/// `n` i.i.d. records of attributes `A`, `B` drawn from the correlated joint.
pub fn sample_dataset(spec: &SynthSpec) -> Result<Dataset> {
    if spec.n == 0 {
        return Err(Error::EmptyDataset);
    }
    let marginal = harmonic_marginal(spec.d, spec.reading)?;
    let joint = build_correlated_joint(&marginal, spec.v_target)?;
    let k = marginal.len();
    let labels: Vec<String> = match spec.reading {
        MarginalReading::Literal => (2..=spec.d).map(|a| a.to_string()).collect(),
        MarginalReading::Full => (1..=spec.d).map(|a| a.to_string()).collect(),
    };
    let schema = Schema::new(vec![
        Attribute::new("A", labels.clone()),
        Attribute::new("B", labels),
    ])?;

    let mut cumulative = Vec::with_capacity(joint.len());
    let mut acc = 0.0;
    for &p in joint.values() {
        acc += p;
        cumulative.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut records = Vec::with_capacity(spec.n * 2);
    for _ in 0..spec.n {
        let u: f64 = rng.gen::<f64>() * acc;
        let cell = cumulative.partition_point(|&c| c <= u).min(joint.len() - 1);
        records.push((cell / k) as u32);
        records.push((cell % k) as u32);
    }
    Dataset::new(schema, records, Role::TrueData)
}

/// The population joint a spec samples from, over attributes `{0, 1}`.
pub fn population_joint(spec: &SynthSpec) -> Result<ProbTensor> {
    let marginal = harmonic_marginal(spec.d, spec.reading)?;
    let joint = build_correlated_joint(&marginal, spec.v_target)?;
    let shape = joint.shape().to_vec();
    ProbTensor::with_subset(shape, joint.into_values(), AttributeSubset::first(2))
}
