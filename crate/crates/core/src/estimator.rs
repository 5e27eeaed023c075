//! Joint distribution estimators over independently randomized attributes.
//!
//! Every estimator here consumes the empirical distribution `Λ` of the
//! randomized records over a subset `S` and the per-attribute matrices
//! `P_1, ..., P_w`. The three RR-Ind-Joint paths compute the same quantity,
//! `((P_1 ⊗ ... ⊗ P_w)^T)^{-1} λ`, at very different costs:
//!
//! * naïve materialises the aggregated matrix and inverts it,
//! * reduced inverts each factor but materialises the Kronecker product of
//!   the inverses,
//! * castell applies each factor's inverse along its own axis through the
//!   i-th transposition, never holding more than one `∏ d_i` working tensor.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundReport, Thresholds};
use crate::domain::{empirical_distribution, marginal_of, AttributeSubset, Dataset, ProbTensor};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::randomizer::{RandomizationMatrix, RandomizationPlan, DEFAULT_DOMAIN_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    RrJoint,
    RrIndependent,
    Naive,
    Reduced,
    Castell,
    Truncated,
    Hybrid,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::RrJoint,
        Method::RrIndependent,
        Method::Naive,
        Method::Reduced,
        Method::Castell,
        Method::Truncated,
        Method::Hybrid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::RrJoint => "rr-joint",
            Method::RrIndependent => "rr-independent",
            Method::Naive => "naive",
            Method::Reduced => "reduced",
            Method::Castell => "castell",
            Method::Truncated => "truncated",
            Method::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

fn check_matrices(lambda: &ProbTensor, matrices: &[&RandomizationMatrix]) -> Result<()> {
    if matrices.len() != lambda.rank() {
        return Err(Error::ShapeMismatch(format!(
            "{} matrices for a {}-way tensor",
            matrices.len(),
            lambda.rank()
        )));
    }
    for (axis, (m, &d)) in matrices.iter().zip(lambda.shape()).enumerate() {
        if m.d() != d {
            return Err(Error::ShapeMismatch(format!(
                "axis {axis} has {d} categories but its matrix is {}x{}",
                m.d(),
                m.d()
            )));
        }
    }
    Ok(())
}

fn check_cap(shape: &[usize], cap: usize) -> Result<usize> {
    let size = shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .unwrap_or(usize::MAX);
    if size > cap {
        return Err(Error::DomainTooLarge { size, cap });
    }
    Ok(size)
}

/// `(outer, d, inner)` view of a row-major shape around `axis`.
fn split_at_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

fn transpose_values(values: &[f64], shape: &[usize], axis: usize) -> Matrix {
    let (outer, d, inner) = split_at_axis(shape, axis);
    let cols = outer * inner;
    let mut out = Matrix::zeros(d, cols);
    for o in 0..outer {
        for a in 0..d {
            let src = (o * d + a) * inner;
            for i in 0..inner {
                out[(a, o * inner + i)] = values[src + i];
            }
        }
    }
    out
}

fn inverse_transpose_values(matrix: &Matrix, shape: &[usize], axis: usize) -> Vec<f64> {
    let (outer, d, inner) = split_at_axis(shape, axis);
    let mut out = vec![0.0; outer * d * inner];
    for o in 0..outer {
        for a in 0..d {
            let dst = (o * d + a) * inner;
            for i in 0..inner {
                out[dst + i] = matrix[(a, o * inner + i)];
            }
        }
    }
    out
}

/// The i-th transposition `Λ^{T_i}` (`axis` is zero-based): a
/// `d_i x ∏_{j≠i} d_j` matrix whose rows follow the categories of `axis` and
/// whose columns enumerate the remaining axes row-major, in their original
/// relative order.
pub fn transpose_axis(tensor: &ProbTensor, axis: usize) -> Result<Matrix> {
    if axis >= tensor.rank() {
        return Err(Error::AxisOutOfRange {
            axis,
            rank: tensor.rank(),
        });
    }
    Ok(transpose_values(tensor.values(), tensor.shape(), axis))
}

/// Inverse of [`transpose_axis`] under the same column ordering.
pub fn inverse_transpose_axis(matrix: &Matrix, axis: usize, shape: &[usize]) -> Result<ProbTensor> {
    if axis >= shape.len() {
        return Err(Error::AxisOutOfRange {
            axis,
            rank: shape.len(),
        });
    }
    let (outer, d, inner) = split_at_axis(shape, axis);
    if matrix.rows() != d || matrix.cols() != outer * inner {
        return Err(Error::ShapeMismatch(format!(
            "a {}x{} matrix does not fold back into shape {shape:?} along axis {axis}",
            matrix.rows(),
            matrix.cols()
        )));
    }
    ProbTensor::new(
        shape.to_vec(),
        inverse_transpose_values(matrix, shape, axis),
    )
}

/// RR-Joint: `(P^T)^{-1} λ` with `P` acting on the flattened subset domain.
pub fn estimate_rr_joint(
    lambda: &ProbTensor,
    joint: &RandomizationMatrix,
    cap: usize,
) -> Result<ProbTensor> {
    let size = check_cap(lambda.shape(), cap)?;
    if joint.d() != size {
        return Err(Error::ShapeMismatch(format!(
            "joint matrix is {}x{} but λ has {size} cells",
            joint.d(),
            joint.d()
        )));
    }
    let estimate = joint.inverse_transposed()?.matvec(lambda.values())?;
    lambda.replace_values(estimate)
}

/// Naïve RR-Ind-Joint: materialise `P_1 ⊗ ... ⊗ P_w` and invert it.
pub fn estimate_naive(
    lambda: &ProbTensor,
    matrices: &[&RandomizationMatrix],
    cap: usize,
) -> Result<ProbTensor> {
    check_matrices(lambda, matrices)?;
    check_cap(lambda.shape(), cap)?;
    let joint = RandomizationMatrix::kronecker_all(matrices, cap)?;
    estimate_rr_joint(lambda, &joint, cap)
}

/// Reduced RR-Ind-Joint: `((P_1^T)^{-1} ⊗ ... ⊗ (P_w^T)^{-1}) λ`.
pub fn estimate_reduced(
    lambda: &ProbTensor,
    matrices: &[&RandomizationMatrix],
    cap: usize,
) -> Result<ProbTensor> {
    check_matrices(lambda, matrices)?;
    check_cap(lambda.shape(), cap)?;
    let mut inverse = Matrix::identity(1);
    for m in matrices {
        inverse = inverse.kron(&m.inverse_transposed()?);
    }
    let estimate = inverse.matvec(lambda.values())?;
    lambda.replace_values(estimate)
}

/// Castell RR-Ind-Joint: for `i = w, ..., 1`,
/// `Λ ← ((P_i^T)^{-1} Λ^{T_i})^{T_i^{-1}}`.
pub fn estimate_castell(
    lambda: &ProbTensor,
    matrices: &[&RandomizationMatrix],
) -> Result<ProbTensor> {
    check_matrices(lambda, matrices)?;
    let shape = lambda.shape();
    let mut work = lambda.values().to_vec();
    for axis in (0..lambda.rank()).rev() {
        let inverse = matrices[axis].inverse_transposed()?;
        let folded = inverse.matmul(&transpose_values(&work, shape, axis))?;
        work = inverse_transpose_values(&folded, shape, axis);
    }
    lambda.replace_values(work)
}

/// RR-Independent from a subset tensor: the outer product of the unbiased
/// per-attribute marginals.
pub fn estimate_rr_independent_from_lambda(
    lambda: &ProbTensor,
    matrices: &[&RandomizationMatrix],
) -> Result<ProbTensor> {
    check_matrices(lambda, matrices)?;
    let factors = lambda
        .subset()
        .indices()
        .iter()
        .zip(matrices)
        .map(|(&attr, m)| {
            let keep = AttributeSubset::new(vec![attr], usize::MAX)?;
            let observed = marginal_of(lambda, &keep)?;
            m.inverse_transposed()?.matvec(observed.values())
        })
        .collect::<Result<Vec<_>>>()?;
    ProbTensor::outer(&factors, lambda.subset().clone())
}

/// RR-Independent over `subset` of the randomized records `y`.
pub fn estimate_rr_independent(
    y: &Dataset,
    subset: &AttributeSubset,
    plan: &RandomizationPlan,
) -> Result<ProbTensor> {
    let lambda = empirical_distribution(y, subset)?;
    estimate_rr_independent_from_lambda(&lambda, &plan.for_subset(subset)?)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationOptions {
    /// Cap with truncated rather than raw castell `(w-1)`-way estimates.
    pub recursive: bool,
}

/// Truncated castell estimate: negatives are clamped to zero and every cell
/// is capped by the castell estimate of each `(w-1)`-way sub-joint at the
/// cell's projection. The result is not renormalised.
pub fn estimate_truncated_from_lambda(
    lambda: &ProbTensor,
    matrices: &[&RandomizationMatrix],
    options: TruncationOptions,
) -> Result<ProbTensor> {
    let w = lambda.rank();
    if w < 2 {
        return Err(Error::InvalidSubset(
            "truncation needs at least two attributes".into(),
        ));
    }
    let mut current = estimate_castell(lambda, matrices)?;
    for v in current.values_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    for drop in 0..w {
        let sub = lambda.subset().without_position(drop);
        let sub_lambda = marginal_of(lambda, &sub)?;
        let sub_matrices: Vec<&RandomizationMatrix> = matrices
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != drop)
            .map(|(_, m)| *m)
            .collect();
        let cap = if options.recursive && w > 2 {
            estimate_truncated_from_lambda(&sub_lambda, &sub_matrices, options)?
        } else {
            estimate_castell(&sub_lambda, &sub_matrices)?
        };
        apply_cap(&mut current, &cap, drop);
    }
    Ok(current)
}

// Caps every cell of `target` by `cap` evaluated at the cell's index with
// axis `dropped` removed. Negative caps count as zero.
fn apply_cap(target: &mut ProbTensor, cap: &ProbTensor, dropped: usize) {
    let shape = target.shape().to_vec();
    let (outer, d, inner) = split_at_axis(&shape, dropped);
    let values = target.values_mut();
    for o in 0..outer {
        for a in 0..d {
            for i in 0..inner {
                let c = cap.values()[o * inner + i].max(0.0);
                let cell = &mut values[(o * d + a) * inner + i];
                *cell = cell.min(c);
            }
        }
    }
}

pub fn estimate_truncated(
    y: &Dataset,
    subset: &AttributeSubset,
    plan: &RandomizationPlan,
    options: TruncationOptions,
) -> Result<ProbTensor> {
    let lambda = empirical_distribution(y, subset)?;
    estimate_truncated_from_lambda(&lambda, &plan.for_subset(subset)?, options)
}

#[derive(Debug, Clone, Serialize)]
pub struct HybridChoice {
    pub method: Method,
    pub bound_ind_joint: f64,
    pub bound_rr_ind: f64,
    pub thresholds: Thresholds,
}

/// Picks castell when its error bound is below RR-Independent's, otherwise
/// RR-Independent. The crossover thresholds are attached for reporting.
pub fn select_hybrid(
    n: usize,
    w: usize,
    d_max: usize,
    epsilon_per_attr: f64,
) -> Result<HybridChoice> {
    let epsilon_total = epsilon_per_attr * w as f64;
    let bound_ind_joint = bounds::bound_avd_ind_joint(d_max, w, epsilon_total, n)?;
    let bound_rr_ind = bounds::bound_avd_rr_ind(d_max, w)?;
    let thresholds = bounds::compute_thresholds(n, d_max, w as f64, epsilon_total)?;
    let method = if bound_ind_joint < bound_rr_ind {
        Method::Castell
    } else {
        Method::RrIndependent
    };
    Ok(HybridChoice {
        method,
        bound_ind_joint,
        bound_rr_ind,
        thresholds,
    })
}

#[derive(Debug, Clone)]
pub enum Source<'a> {
    /// Randomized records.
    Records(&'a Dataset),
    /// A precomputed empirical distribution of `n` randomized records.
    Empirical { lambda: ProbTensor, n: usize },
}

#[derive(Debug, Clone)]
pub struct EstimateOptions {
    pub domain_cap: usize,
    pub truncation: TruncationOptions,
    /// RR-Joint matrix over the flattened subset domain. When absent the
    /// Kronecker product of the plan's matrices is used.
    pub joint_matrix: Option<RandomizationMatrix>,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            domain_cap: DEFAULT_DOMAIN_CAP,
            truncation: TruncationOptions::default(),
            joint_matrix: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EstimationRequest<'a> {
    pub source: Source<'a>,
    pub subset: AttributeSubset,
    pub plan: &'a RandomizationPlan,
    pub method: Method,
    pub options: EstimateOptions,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub bounds: BoundReport,
    pub thresholds: Thresholds,
    pub mass: f64,
    pub mass_deficit: f64,
    pub negative_cells: usize,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimationResult {
    pub estimate: ProbTensor,
    /// The concrete method; hybrid requests resolve to castell or RR-Independent.
    pub method: Method,
    pub diagnostics: Diagnostics,
}

/// Dispatches a request to the chosen estimator.
pub fn estimate(request: &EstimationRequest<'_>) -> Result<EstimationResult> {
    let started = Instant::now();
    let subset = &request.subset;
    let (lambda, n) = match &request.source {
        Source::Records(y) => {
            if let Some(&bad) = subset.indices().iter().find(|&&i| i >= y.m()) {
                return Err(Error::SubsetMismatch(format!(
                    "attribute index {bad} out of range for {} attributes",
                    y.m()
                )));
            }
            request.plan.check(y.schema())?;
            (empirical_distribution(y, subset)?, y.n())
        }
        Source::Empirical { lambda, n } => {
            let lambda = if lambda.subset() == subset {
                lambda.clone()
            } else {
                marginal_of(lambda, subset)?
            };
            (lambda, *n)
        }
    };
    let matrices = request.plan.for_subset(subset)?;
    let w = subset.w();
    let d_max = lambda.shape().iter().copied().max().unwrap_or(1);
    // The weakest per-attribute budget drives the bound.
    let eps_per_attr = matrices
        .iter()
        .map(|m| m.epsilon())
        .fold(f64::INFINITY, f64::min);

    let mut method = request.method;
    if method == Method::Hybrid {
        method = select_hybrid(n, w, d_max, eps_per_attr)?.method;
    }
    let cap = request.options.domain_cap;
    let estimate = match method {
        Method::RrJoint => match &request.options.joint_matrix {
            Some(joint) => estimate_rr_joint(&lambda, joint, cap)?,
            None => estimate_rr_joint(
                &lambda,
                &RandomizationMatrix::kronecker_all(&matrices, cap)?,
                cap,
            )?,
        },
        Method::RrIndependent => estimate_rr_independent_from_lambda(&lambda, &matrices)?,
        Method::Naive => estimate_naive(&lambda, &matrices, cap)?,
        Method::Reduced => estimate_reduced(&lambda, &matrices, cap)?,
        Method::Castell => estimate_castell(&lambda, &matrices)?,
        Method::Truncated => {
            estimate_truncated_from_lambda(&lambda, &matrices, request.options.truncation)?
        }
        Method::Hybrid => unreachable!("hybrid resolved above"),
    };

    let eps_total = eps_per_attr * w as f64;
    let bound_report = bounds::bound_report(n, w, d_max, eps_total, None)?;
    let thresholds = bounds::compute_thresholds(n, d_max, w as f64, eps_total)?;
    let mass = estimate.sum();
    Ok(EstimationResult {
        diagnostics: Diagnostics {
            bounds: bound_report,
            thresholds,
            mass,
            mass_deficit: 1.0 - mass,
            negative_cells: estimate.values().iter().filter(|&&v| v < 0.0).count(),
            elapsed_seconds: started.elapsed().as_secs_f64(),
        },
        estimate,
        method,
    })
}
