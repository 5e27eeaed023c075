//! Distances between distributions and association between attributes.

use std::collections::HashSet;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::domain::{AttributeSubset, Dataset, ProbTensor};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Default number of subsets an AVD is averaged over.
pub const DEFAULT_SUBSET_COUNT: usize = 50;

fn paired<'a>(
    truth: &'a ProbTensor,
    est: &'a ProbTensor,
) -> Result<impl Iterator<Item = f64> + 'a> {
    if truth.shape() != est.shape() {
        return Err(Error::ShapeMismatch(format!(
            "shapes {:?} and {:?} differ",
            truth.shape(),
            est.shape()
        )));
    }
    Ok(truth.values().iter().zip(est.values()).map(|(a, b)| a - b))
}

/// Mean absolute cell difference.
pub fn mae(truth: &ProbTensor, est: &ProbTensor) -> Result<f64> {
    Ok(paired(truth, est)?.map(f64::abs).sum::<f64>() / truth.len() as f64)
}

/// Mean squared cell difference.
pub fn mse(truth: &ProbTensor, est: &ProbTensor) -> Result<f64> {
    Ok(paired(truth, est)?.map(|x| x * x).sum::<f64>() / truth.len() as f64)
}

/// Largest absolute cell difference.
pub fn sup_distance(truth: &ProbTensor, est: &ProbTensor) -> Result<f64> {
    Ok(paired(truth, est)?.fold(0.0, |m, x| m.max(x.abs())))
}

/// Average over subsets of the largest absolute cell difference.
pub fn avd(truths: &[ProbTensor], ests: &[ProbTensor]) -> Result<f64> {
    Ok(metric_report(truths, ests)?.avd)
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    /// MAE averaged over subsets.
    pub mae: f64,
    /// MSE averaged over subsets.
    pub mse: f64,
    pub avd: f64,
    pub per_subset: Vec<f64>,
}

pub fn metric_report(truths: &[ProbTensor], ests: &[ProbTensor]) -> Result<MetricReport> {
    if truths.len() != ests.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} truths paired with {} estimates",
            truths.len(),
            ests.len()
        )));
    }
    if truths.is_empty() {
        return Err(Error::EmptyCollection);
    }
    let k = truths.len() as f64;
    let mut report = MetricReport {
        mae: 0.0,
        mse: 0.0,
        avd: 0.0,
        per_subset: Vec::with_capacity(truths.len()),
    };
    for (t, e) in truths.iter().zip(ests) {
        let sup = sup_distance(t, e)?;
        report.mae += mae(t, e)? / k;
        report.mse += mse(t, e)? / k;
        report.avd += sup / k;
        report.per_subset.push(sup);
    }
    Ok(report)
}

/// Counts of `(i, j)` value pairs as a `d_i x d_j` table.
pub fn contingency_table(data: &Dataset, i: usize, j: usize) -> Result<Matrix> {
    let m = data.m();
    let subset = AttributeSubset::new(vec![i, j], m)?;
    let shape = subset.shape(data.schema());
    let mut table = Matrix::zeros(shape[0], shape[1]);
    for r in data.records() {
        table[(r[i] as usize, r[j] as usize)] += 1.0;
    }
    Ok(table)
}

/// Cramér's V of a table of counts or probabilities. Cells with zero
/// expected frequency are left out of the chi-squared sum.
pub fn cramers_v_from_table(table: &Matrix) -> Result<f64> {
    let (rows, cols) = (table.rows(), table.cols());
    if rows < 2 || cols < 2 {
        return Err(Error::ShapeMismatch(format!(
            "Cramér's V needs at least a 2x2 table, got {rows}x{cols}"
        )));
    }
    let total: f64 = table.as_slice().iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptyDataset);
    }
    let row_sums: Vec<f64> = (0..rows).map(|r| table.row(r).iter().sum()).collect();
    let col_sums: Vec<f64> = (0..cols)
        .map(|c| (0..rows).map(|r| table[(r, c)]).sum())
        .collect();
    let mut chi2 = 0.0;
    for (r, rs) in row_sums.iter().enumerate() {
        for (c, cs) in col_sums.iter().enumerate() {
            let expected = rs * cs / total;
            if expected > 0.0 {
                chi2 += (table[(r, c)] - expected).powi(2) / expected;
            }
        }
    }
    let k = (rows.min(cols) - 1) as f64;
    let v = (chi2 / total / k).sqrt();
    Ok(v.clamp(0.0, 1.0))
}

/// Empirical Cramér's V between attributes `i` and `j`.
pub fn cramers_v(data: &Dataset, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Err(Error::InvalidSubset(
            "Cramér's V needs two distinct attributes".into(),
        ));
    }
    cramers_v_from_table(&contingency_table(data, i, j)?)
}

/// Population Cramér's V of a two-way probability tensor.
pub fn cramers_v_of_joint(joint: &ProbTensor) -> Result<f64> {
    if joint.rank() != 2 {
        return Err(Error::ShapeMismatch(format!(
            "Cramér's V needs a two-way tensor, got rank {}",
            joint.rank()
        )));
    }
    let table = Matrix::from_vec(joint.shape()[0], joint.shape()[1], joint.values().to_vec())?;
    cramers_v_from_table(&table)
}

fn binomial(m: usize, w: usize) -> u128 {
    if w > m {
        return 0;
    }
    let w = w.min(m - w);
    let mut acc: u128 = 1;
    for k in 0..w {
        acc = acc.saturating_mul((m - k) as u128) / (k as u128 + 1);
    }
    acc
}

/// Subsets of size `w` over `m` attributes for averaging: all `C(m, w)` of
/// them in lexicographic order when there are at most `max_count`,
/// otherwise `max_count` distinct subsets drawn uniformly with `seed`.
pub fn subset_collection(
    m: usize,
    w: usize,
    max_count: usize,
    seed: u64,
) -> Result<Vec<AttributeSubset>> {
    if w == 0 || w > m {
        return Err(Error::InvalidSubset(format!(
            "cannot choose {w} of {m} attributes"
        )));
    }
    if max_count == 0 {
        return Err(Error::EmptyCollection);
    }
    if binomial(m, w) <= max_count as u128 {
        let mut out = Vec::new();
        let mut combo: Vec<usize> = (0..w).collect();
        loop {
            out.push(AttributeSubset::new(combo.clone(), m)?);
            let Some(pos) = (0..w).rev().find(|&p| combo[p] < m - w + p) else {
                break;
            };
            combo[pos] += 1;
            for q in pos + 1..w {
                combo[q] = combo[q - 1] + 1;
            }
        }
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(max_count);
    while out.len() < max_count {
        let mut combo = index::sample(&mut rng, m, w).into_vec();
        combo.sort_unstable();
        if seen.insert(combo.clone()) {
            out.push(AttributeSubset::new(combo, m)?);
        }
    }
    Ok(out)
}
