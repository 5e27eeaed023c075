//! Randomization matrices, per-attribute randomized response and Kronecker
//! aggregation of independently applied matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{strides, AttributeSubset, Dataset, ProbTensor, Role, Schema};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Largest aggregated domain the naïve and joint paths will materialise.
pub const DEFAULT_DOMAIN_CAP: usize = 4096;

const STOCHASTIC_TOL: f64 = 1e-9;
const SINGULAR_GAP: f64 = 1e-12;

/// Row-stochastic `d x d` matrix with `entries[u][v] = Pr(Y = v | X = u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomizationMatrix {
    entries: Matrix,
    /// `(p, q)` when the matrix keeps with `p` and moves to each other value with `q`.
    uniform: Option<(f64, f64)>,
    epsilon: f64,
}

impl RandomizationMatrix {
    /// The ε-LDP matrix with `p = e^ε/(e^ε+d-1)` and `q = 1/(e^ε+d-1)`.
    pub fn dp(d: usize, epsilon: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::DegenerateDomain(d));
        }
        if epsilon.is_nan() || epsilon <= 0.0 {
            return Err(Error::NonpositiveEpsilon(epsilon));
        }
        let e = epsilon.exp();
        if e.is_infinite() {
            let mut m = Self::identity(d);
            m.epsilon = epsilon;
            return Ok(m);
        }
        let q = 1.0 / (e + (d - 1) as f64);
        let p = e * q;
        Ok(Self::from_uniform(d, p, q, epsilon))
    }

    /// Keeps with probability `p`, otherwise moves uniformly to one of the
    /// other `d - 1` values.
    pub fn keep_probability(d: usize, p: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::DegenerateDomain(d));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange(format!("retain probability {p}")));
        }
        let q = (1.0 - p) / (d - 1) as f64;
        if (p - q).abs() < SINGULAR_GAP {
            return Err(Error::SingularMatrix);
        }
        let epsilon = if q == 0.0 {
            f64::INFINITY
        } else {
            (p / q).ln().abs()
        };
        Ok(Self::from_uniform(d, p, q, epsilon))
    }

    /// No randomization at all.
    pub fn identity(d: usize) -> Self {
        Self {
            entries: Matrix::identity(d),
            uniform: Some((1.0, 0.0)),
            epsilon: f64::INFINITY,
        }
    }

    /// Arbitrary row-stochastic matrix.
    pub fn from_matrix(entries: Matrix) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "randomization matrix must be square, got {}x{}",
                entries.rows(),
                entries.cols()
            )));
        }
        if entries.rows() < 2 {
            return Err(Error::DegenerateDomain(entries.rows()));
        }
        for r in 0..entries.rows() {
            let row = entries.row(r);
            if row.iter().any(|&v| !(v >= 0.0)) {
                return Err(Error::OutOfRange(format!(
                    "row {r} has a negative or NaN entry"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::NotStochastic { row: r, sum });
            }
        }
        let mut m = Self {
            entries,
            uniform: None,
            epsilon: 0.0,
        };
        m.epsilon = m.ldp_ratio().ln();
        Ok(m)
    }

    fn from_uniform(d: usize, p: f64, q: f64, epsilon: f64) -> Self {
        let mut entries = Matrix::zeros(d, d);
        for u in 0..d {
            for v in 0..d {
                entries[(u, v)] = if u == v { p } else { q };
            }
        }
        Self {
            entries,
            uniform: Some((p, q)),
            epsilon,
        }
    }

    pub fn d(&self) -> usize {
        self.entries.rows()
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    /// Privacy budget in nats; infinite for deterministic matrices.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn uniform_params(&self) -> Option<(f64, f64)> {
        self.uniform
    }

    /// Retain probability: `p` for uniform matrices, the smallest diagonal
    /// entry otherwise.
    pub fn retain_probability(&self) -> f64 {
        match self.uniform {
            Some((p, _)) => p,
            None => (0..self.d())
                .map(|i| self.entries[(i, i)])
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// `(P^T)^{-1}`, the matrix that maps observed frequencies back to true
    /// ones. Uniform matrices use `(I - qJ)/(p - q)`; anything else goes
    /// through Gauss–Jordan.
    pub fn inverse_transposed(&self) -> Result<Matrix> {
        match self.uniform {
            Some((p, q)) => {
                let gap = p - q;
                if gap.abs() < SINGULAR_GAP {
                    return Err(Error::SingularMatrix);
                }
                let d = self.d();
                let mut inv = Matrix::zeros(d, d);
                for u in 0..d {
                    for v in 0..d {
                        let delta = if u == v { 1.0 } else { 0.0 };
                        inv[(u, v)] = (delta - q) / gap;
                    }
                }
                Ok(inv)
            }
            None => self.entries.transpose().inverse(),
        }
    }

    /// `max over x, x', y of Pr(y | x) / Pr(y | x')`.
    pub fn ldp_ratio(&self) -> f64 {
        let d = self.d();
        let mut worst = 1.0_f64;
        for y in 0..d {
            let (lo, hi) = (0..d).fold((f64::INFINITY, 0.0_f64), |(lo, hi), x| {
                let v = self.entries[(x, y)];
                (lo.min(v), hi.max(v))
            });
            if hi > 0.0 {
                worst = worst.max(hi / lo);
            }
        }
        worst
    }

    /// `self ⊗ other`, the randomization matrix of the attribute pair.
    pub fn kronecker(
        &self,
        other: &RandomizationMatrix,
        cap: usize,
    ) -> Result<RandomizationMatrix> {
        let size = self.d() * other.d();
        if size > cap {
            return Err(Error::DomainTooLarge { size, cap });
        }
        Ok(RandomizationMatrix {
            entries: self.entries.kron(&other.entries),
            uniform: None,
            epsilon: self.epsilon + other.epsilon,
        })
    }

    /// `P_1 ⊗ ... ⊗ P_w`.
    pub fn kronecker_all(
        matrices: &[&RandomizationMatrix],
        cap: usize,
    ) -> Result<RandomizationMatrix> {
        let size = matrices
            .iter()
            .try_fold(1usize, |acc, m| acc.checked_mul(m.d()));
        match size {
            Some(size) if size <= cap => {}
            Some(size) => return Err(Error::DomainTooLarge { size, cap }),
            None => {
                return Err(Error::DomainTooLarge {
                    size: usize::MAX,
                    cap,
                })
            }
        }
        let (first, rest) = matrices.split_first().ok_or(Error::EmptyCollection)?;
        rest.iter()
            .try_fold((*first).clone(), |acc, m| acc.kronecker(m, cap))
    }

    /// Draws the randomized response for true value `x`.
    fn sample<R: Rng>(&self, x: usize, rng: &mut R) -> usize {
        let d = self.d();
        let u: f64 = rng.gen();
        match self.uniform {
            Some((p, _)) => {
                if u < p {
                    x
                } else {
                    let k = rng.gen_range(0..d - 1);
                    if k >= x {
                        k + 1
                    } else {
                        k
                    }
                }
            }
            None => {
                let mut acc = 0.0;
                for (v, &pv) in self.entries.row(x).iter().enumerate() {
                    acc += pv;
                    if u < acc {
                        return v;
                    }
                }
                // Rounding left `acc` just below one.
                (0..d)
                    .rev()
                    .find(|&v| self.entries[(x, v)] > 0.0)
                    .unwrap_or(x)
            }
        }
    }
}

/// One randomization matrix per schema attribute.
#[derive(Debug, Clone)]
pub struct RandomizationPlan {
    matrices: Vec<RandomizationMatrix>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BudgetSummary {
    pub total: f64,
    pub per_attribute: Vec<f64>,
}

impl RandomizationPlan {
    pub fn new(matrices: Vec<RandomizationMatrix>) -> Self {
        Self { matrices }
    }

    /// Splits `epsilon_total` evenly across every attribute of the schema.
    pub fn uniform(schema: &Schema, epsilon_total: f64) -> Result<Self> {
        if schema.is_empty() {
            return Err(Error::EmptyCollection);
        }
        let per = epsilon_total / schema.len() as f64;
        Self::per_attribute(schema, &vec![per; schema.len()])
    }

    pub fn per_attribute(schema: &Schema, epsilons: &[f64]) -> Result<Self> {
        if epsilons.len() != schema.len() {
            return Err(Error::PlanSchemaMismatch {
                plan: epsilons.len(),
                schema: schema.len(),
            });
        }
        let matrices = schema
            .attributes()
            .iter()
            .zip(epsilons)
            .map(|(a, &e)| RandomizationMatrix::dp(a.size(), e))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { matrices })
    }

    pub fn identity(schema: &Schema) -> Self {
        Self {
            matrices: schema
                .attributes()
                .iter()
                .map(|a| RandomizationMatrix::identity(a.size()))
                .collect(),
        }
    }

    pub fn matrices(&self) -> &[RandomizationMatrix] {
        &self.matrices
    }

    pub fn matrix(&self, attr: usize) -> &RandomizationMatrix {
        &self.matrices[attr]
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn epsilons(&self) -> Vec<f64> {
        self.matrices
            .iter()
            .map(RandomizationMatrix::epsilon)
            .collect()
    }

    /// Sequential composition of the per-attribute budgets.
    pub fn total_epsilon(&self) -> f64 {
        self.epsilons().iter().sum()
    }

    pub fn budget(&self) -> BudgetSummary {
        BudgetSummary {
            total: self.total_epsilon(),
            per_attribute: self.epsilons(),
        }
    }

    pub fn for_subset(&self, subset: &AttributeSubset) -> Result<Vec<&RandomizationMatrix>> {
        subset
            .indices()
            .iter()
            .map(|&i| {
                self.matrices.get(i).ok_or_else(|| {
                    Error::SubsetMismatch(format!(
                        "attribute {i} has no randomization matrix in a plan of {}",
                        self.matrices.len()
                    ))
                })
            })
            .collect()
    }

    pub fn check(&self, schema: &Schema) -> Result<()> {
        if self.matrices.len() != schema.len() {
            return Err(Error::PlanSchemaMismatch {
                plan: self.matrices.len(),
                schema: schema.len(),
            });
        }
        for (m, a) in self.matrices.iter().zip(schema.attributes()) {
            if m.d() != a.size() {
                return Err(Error::ShapeMismatch(format!(
                    "attribute `{}` has {} categories, its matrix is {}x{}",
                    a.name,
                    a.size(),
                    m.d(),
                    m.d()
                )));
            }
        }
        Ok(())
    }
}

/// Generator for record `record`: every record owns an independent ChaCha
/// stream under the same key, so results do not depend on scheduling.
fn record_rng(seed: u64, record: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(record as u64);
    rng
}

/// Applies each attribute's matrix independently to every cell.
pub fn randomize_dataset(data: &Dataset, plan: &RandomizationPlan, seed: u64) -> Result<Dataset> {
    plan.check(data.schema())?;
    let m = data.m();
    let mut out = vec![0u32; data.raw().len()];
    out.par_chunks_mut(m)
        .zip(data.raw().par_chunks(m))
        .enumerate()
        .for_each(|(i, (dst, src))| {
            let mut rng = record_rng(seed, i);
            for (j, (d, &x)) in dst.iter_mut().zip(src).enumerate() {
                *d = plan.matrices[j].sample(x as usize, &mut rng) as u32;
            }
        });
    data.with_records(out, Role::Randomized)
}

/// Randomizes the subset projection of every record as one attribute over
/// the product domain and returns the empirical distribution of the responses.
pub fn randomize_joint(
    data: &Dataset,
    subset: &AttributeSubset,
    matrix: &RandomizationMatrix,
    seed: u64,
) -> Result<ProbTensor> {
    let shape = subset.shape(data.schema());
    let cells: usize = shape.iter().product();
    if matrix.d() != cells {
        return Err(Error::ShapeMismatch(format!(
            "joint matrix is {}x{} but the subset domain has {cells} cells",
            matrix.d(),
            matrix.d()
        )));
    }
    let st = strides(&shape);
    let responses: Vec<usize> = (0..data.n())
        .into_par_iter()
        .map(|i| {
            let rec = data.record(i);
            let x: usize = subset
                .indices()
                .iter()
                .zip(&st)
                .map(|(&a, &s)| rec[a] as usize * s)
                .sum();
            matrix.sample(x, &mut record_rng(seed, i))
        })
        .collect();
    let mut counts = vec![0u64; cells];
    for y in responses {
        counts[y] += 1;
    }
    let n = data.n() as f64;
    ProbTensor::with_subset(
        shape,
        counts.into_iter().map(|c| c as f64 / n).collect(),
        subset.clone(),
    )
}
