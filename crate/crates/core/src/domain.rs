//! Schemas, categorical datasets and dense probability tensors.

use std::collections::HashSet;
use std::sync::Arc;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One categorical attribute with an ordered domain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub categories: Vec<String>,
}

impl Attribute {
    pub fn new(name: impl Into<String>, categories: Vec<String>) -> Self {
        Self {
            name: name.into(),
            categories,
        }
    }

    /// Attribute whose categories are labelled `0..size`.
    pub fn with_size(name: impl Into<String>, size: usize) -> Self {
        Self::new(name, (0..size).map(|i| i.to_string()).collect())
    }

    pub fn size(&self) -> usize {
        self.categories.len()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == label)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    attributes: Vec<Attribute>,
}

impl Schema {
    /// Checks name and label uniqueness. Domain sizes are checked later by
    /// [`Dataset::validate`] so that degenerate columns can still be reported.
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        let mut names = HashSet::new();
        for attr in &attributes {
            if !names.insert(attr.name.as_str()) {
                return Err(Error::DuplicateAttribute(attr.name.clone()));
            }
            let mut labels = HashSet::new();
            for label in &attr.categories {
                if !labels.insert(label.as_str()) {
                    return Err(Error::DuplicateCategory {
                        attribute: attr.name.clone(),
                        label: label.clone(),
                    });
                }
            }
        }
        Ok(Self { attributes })
    }

    /// Schema of anonymous attributes `A0, A1, ...` with the given sizes.
    pub fn from_sizes(sizes: &[usize]) -> Self {
        Self {
            attributes: sizes
                .iter()
                .enumerate()
                .map(|(i, &d)| Attribute::with_size(format!("A{i}"), d))
                .collect(),
        }
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn attribute(&self, i: usize) -> &Attribute {
        &self.attributes[i]
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.attributes.iter().map(Attribute::size).collect()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    /// Exact size of the full domain, the product of all attribute sizes.
    pub fn full_domain_size(&self) -> BigUint {
        self.attributes
            .iter()
            .fold(BigUint::from(1u32), |acc, a| acc * BigUint::from(a.size()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    TrueData,
    Randomized,
}

/// `n` records of `m` category indices, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Arc<Schema>,
    records: Vec<u32>,
    role: Role,
}

impl Dataset {
    pub fn new(schema: impl Into<Arc<Schema>>, records: Vec<u32>, role: Role) -> Result<Self> {
        let schema = schema.into();
        let m = schema.len();
        if m == 0 {
            return Err(Error::InvalidSubset("schema has no attributes".into()));
        }
        if !records.len().is_multiple_of(m) {
            return Err(Error::RecordWidth {
                record: records.len() / m,
                found: records.len() % m,
                expected: m,
            });
        }
        let data = Self {
            schema,
            records,
            role,
        };
        data.validate()?;
        Ok(data)
    }

    pub fn from_rows<R: AsRef<[u32]>>(
        schema: impl Into<Arc<Schema>>,
        rows: &[R],
        role: Role,
    ) -> Result<Self> {
        let schema = schema.into();
        let m = schema.len();
        let mut records = Vec::with_capacity(rows.len() * m);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != m {
                return Err(Error::RecordWidth {
                    record: i,
                    found: row.len(),
                    expected: m,
                });
            }
            records.extend_from_slice(row);
        }
        Self::new(schema, records, role)
    }

    /// Checks every invariant and reports the first violation found.
    pub fn validate(&self) -> Result<()> {
        for attr in self.schema.attributes() {
            if attr.size() < 2 {
                return Err(Error::DegenerateAttribute {
                    name: attr.name.clone(),
                    size: attr.size(),
                });
            }
        }
        if self.records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let sizes = self.schema.sizes();
        for (i, rec) in self.records.chunks_exact(sizes.len()).enumerate() {
            for (j, (&v, &d)) in rec.iter().zip(&sizes).enumerate() {
                if v as usize >= d {
                    return Err(Error::IndexOutOfDomain {
                        record: i,
                        column: j,
                        value: v,
                        size: d,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn schema_arc(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn n(&self) -> usize {
        self.records.len() / self.schema.len()
    }

    pub fn m(&self) -> usize {
        self.schema.len()
    }

    pub fn record(&self, i: usize) -> &[u32] {
        let m = self.m();
        &self.records[i * m..(i + 1) * m]
    }

    pub fn records(&self) -> impl ExactSizeIterator<Item = &[u32]> {
        self.records.chunks_exact(self.m())
    }

    pub fn raw(&self) -> &[u32] {
        &self.records
    }

    /// Same schema, new records. The records are validated.
    pub fn with_records(&self, records: Vec<u32>, role: Role) -> Result<Self> {
        Self::new(self.schema.clone(), records, role)
    }

    /// Keeps only the given record positions, in order.
    pub fn select_records(&self, rows: &[usize]) -> Result<Self> {
        let m = self.m();
        let mut records = Vec::with_capacity(rows.len() * m);
        for &r in rows {
            records.extend_from_slice(self.record(r));
        }
        Self::new(self.schema.clone(), records, self.role)
    }
}

/// Ordered set of distinct attribute positions `S`, `|S| = w`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttributeSubset(Vec<usize>);

impl AttributeSubset {
    pub fn new(indices: Vec<usize>, m: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidSubset("subset is empty".into()));
        }
        if indices.len() > m {
            return Err(Error::InvalidSubset(format!(
                "{} attributes requested from a schema of {m}",
                indices.len()
            )));
        }
        let mut seen = HashSet::new();
        for &i in &indices {
            if i >= m {
                return Err(Error::SubsetMismatch(format!(
                    "attribute index {i} out of range for {m} attributes"
                )));
            }
            if !seen.insert(i) {
                return Err(Error::InvalidSubset(format!("attribute {i} repeated")));
            }
        }
        Ok(Self(indices))
    }

    /// `{0, 1, ..., w-1}`.
    pub fn first(w: usize) -> Self {
        Self((0..w).collect())
    }

    pub fn from_names<S: AsRef<str>>(schema: &Schema, names: &[S]) -> Result<Self> {
        let indices = names
            .iter()
            .map(|n| {
                schema.position(n.as_ref()).ok_or_else(|| {
                    Error::SubsetMismatch(format!("unknown attribute `{}`", n.as_ref()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(indices, schema.len())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn w(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, attr: usize) -> bool {
        self.0.contains(&attr)
    }

    /// Position of `attr` within this subset.
    pub fn position(&self, attr: usize) -> Option<usize> {
        self.0.iter().position(|&a| a == attr)
    }

    /// The subset with the attribute at `pos` removed.
    pub fn without_position(&self, pos: usize) -> Self {
        let mut v = self.0.clone();
        v.remove(pos);
        Self(v)
    }

    pub fn shape(&self, schema: &Schema) -> Vec<usize> {
        self.0.iter().map(|&i| schema.attribute(i).size()).collect()
    }

    pub fn names<'a>(&self, schema: &'a Schema) -> Vec<&'a str> {
        self.0
            .iter()
            .map(|&i| schema.attribute(i).name.as_str())
            .collect()
    }
}

/// Row-major strides for a shape.
pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

/// Odometer over all multi-indices of a shape in row-major order.
pub(crate) struct MultiIndex {
    shape: Vec<usize>,
    current: Vec<usize>,
    done: bool,
}

impl MultiIndex {
    pub(crate) fn new(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            current: vec![0; shape.len()],
            done: shape.contains(&0),
        }
    }

    /// Current index, or `None` once every index has been visited.
    pub(crate) fn current(&self) -> Option<&[usize]> {
        (!self.done).then_some(&self.current[..])
    }

    pub(crate) fn advance(&mut self) {
        for axis in (0..self.shape.len()).rev() {
            self.current[axis] += 1;
            if self.current[axis] < self.shape[axis] {
                return;
            }
            self.current[axis] = 0;
        }
        self.done = true;
    }
}

/// Dense `d_{i1} x ... x d_{iw}` tensor over an attribute subset, row-major.
///
/// Empirical tensors are nonnegative and sum to one. Estimated tensors sum to
/// one but may hold negative cells or cells above one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbTensor {
    shape: Vec<usize>,
    values: Vec<f64>,
    subset: AttributeSubset,
}

impl ProbTensor {
    /// Tensor over the subset `{0, ..., w-1}`.
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let subset = AttributeSubset::first(shape.len());
        Self::with_subset(shape, values, subset)
    }

    pub fn with_subset(
        shape: Vec<usize>,
        values: Vec<f64>,
        subset: AttributeSubset,
    ) -> Result<Self> {
        if shape.is_empty() {
            return Err(Error::ShapeMismatch(
                "tensor needs at least one axis".into(),
            ));
        }
        if shape.len() != subset.w() {
            return Err(Error::ShapeMismatch(format!(
                "{} axes but subset has {} attributes",
                shape.len(),
                subset.w()
            )));
        }
        let cells: usize = shape.iter().product();
        if cells != values.len() {
            return Err(Error::ShapeMismatch(format!(
                "shape {shape:?} needs {cells} values, got {}",
                values.len()
            )));
        }
        Ok(Self {
            shape,
            values,
            subset,
        })
    }

    /// Outer product of one-dimensional factors.
    pub fn outer(factors: &[Vec<f64>], subset: AttributeSubset) -> Result<Self> {
        let shape: Vec<usize> = factors.iter().map(Vec::len).collect();
        let mut values = vec![1.0];
        for f in factors {
            values = values
                .iter()
                .flat_map(|&acc| f.iter().map(move |&x| acc * x))
                .collect();
        }
        Self::with_subset(shape, values, subset)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn subset(&self) -> &AttributeSubset {
        &self.subset
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn flat_index(&self, index: &[usize]) -> usize {
        index
            .iter()
            .zip(strides(&self.shape))
            .map(|(i, s)| i * s)
            .sum()
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.values[self.flat_index(index)]
    }

    pub fn replace_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::with_subset(self.shape.clone(), values, self.subset.clone())
    }

    /// Largest absolute cell difference.
    pub fn max_abs_diff(&self, other: &ProbTensor) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }
}

/// Relative frequencies of the subset-projected records.
pub fn empirical_distribution(data: &Dataset, subset: &AttributeSubset) -> Result<ProbTensor> {
    let schema = data.schema();
    if let Some(&bad) = subset.indices().iter().find(|&&i| i >= schema.len()) {
        return Err(Error::SubsetMismatch(format!(
            "attribute index {bad} out of range for {} attributes",
            schema.len()
        )));
    }
    let shape = subset.shape(schema);
    let st = strides(&shape);
    let cells: usize = shape.iter().product();
    let mut counts = vec![0u64; cells];
    for rec in data.records() {
        let flat: usize = subset
            .indices()
            .iter()
            .zip(&st)
            .map(|(&a, &s)| rec[a] as usize * s)
            .sum();
        counts[flat] += 1;
    }
    let n = data.n() as f64;
    let values = counts.into_iter().map(|c| c as f64 / n).collect();
    ProbTensor::with_subset(shape, values, subset.clone())
}

/// Sums out every axis whose attribute is not in `keep`. Output axes follow
/// the order of `keep`.
pub fn marginal_of(tensor: &ProbTensor, keep: &AttributeSubset) -> Result<ProbTensor> {
    let positions = keep
        .indices()
        .iter()
        .map(|&a| {
            tensor.subset().position(a).ok_or_else(|| {
                Error::SubsetMismatch(format!(
                    "attribute {a} is not one of the tensor's attributes {:?}",
                    tensor.subset().indices()
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let out_shape: Vec<usize> = positions.iter().map(|&p| tensor.shape()[p]).collect();
    let out_strides = strides(&out_shape);
    let mut out = vec![0.0; out_shape.iter().product()];
    let mut it = MultiIndex::new(tensor.shape());
    for &v in tensor.values() {
        let idx = it.current().expect("odometer shorter than tensor");
        let flat: usize = positions
            .iter()
            .zip(&out_strides)
            .map(|(&p, &s)| idx[p] * s)
            .sum();
        out[flat] += v;
        it.advance();
    }
    ProbTensor::with_subset(out_shape, out, keep.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::appendix_x;

    #[test]
    fn appendix_dataset_validates() {
        let x = appendix_x();
        assert_eq!(x.n(), 10);
        assert!(x.validate().is_ok());
    }

    #[test]
    fn index_outside_domain() {
        let schema = Schema::from_sizes(&[5, 2]);
        let err = Dataset::from_rows(schema, &[[0u32, 1], [5, 0]], Role::TrueData).unwrap_err();
        assert!(matches!(
            err,
            Error::IndexOutOfDomain {
                record: 1,
                column: 0,
                value: 5,
                size: 5
            }
        ));
    }

    #[test]
    fn degenerate_attribute() {
        let schema = Schema::from_sizes(&[3, 1]);
        let err = Dataset::from_rows(schema, &[[0u32, 0]], Role::TrueData).unwrap_err();
        assert!(matches!(err, Error::DegenerateAttribute { size: 1, .. }));
    }

    #[test]
    fn empty_dataset() {
        let schema = Schema::from_sizes(&[3, 2]);
        let err = Dataset::new(schema, vec![], Role::TrueData).unwrap_err();
        assert!(matches!(err, Error::EmptyDataset));
    }

    #[test]
    fn duplicate_names_and_labels() {
        let dup = Schema::new(vec![
            Attribute::with_size("a", 2),
            Attribute::with_size("a", 3),
        ]);
        assert!(matches!(dup, Err(Error::DuplicateAttribute(_))));
        let dup = Schema::new(vec![Attribute::new("a", vec!["x".into(), "x".into()])]);
        assert!(matches!(dup, Err(Error::DuplicateCategory { .. })));
    }

    #[test]
    fn empirical_of_appendix_x() {
        let x = appendix_x();
        let t = empirical_distribution(&x, &AttributeSubset::first(2)).unwrap();
        assert_eq!(t.shape(), &[2, 2]);
        let expected = [0.4, 0.0, 0.2, 0.4];
        for (a, b) in t.values().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_attribute_gives_point_mass() {
        let schema = Schema::from_sizes(&[3, 4]);
        let data =
            Dataset::from_rows(schema, &[[0u32, 2], [1, 2], [2, 2]], Role::TrueData).unwrap();
        let t = empirical_distribution(&data, &AttributeSubset::new(vec![1], 2).unwrap()).unwrap();
        assert_eq!(t.values(), &[0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn marginal_keeps_mass() {
        let t = ProbTensor::new(vec![2, 2], vec![0.4, 0.0, 0.2, 0.4]).unwrap();
        let a = marginal_of(&t, &AttributeSubset::new(vec![0], 2).unwrap()).unwrap();
        assert!((a.values()[0] - 0.4).abs() < 1e-15);
        assert!((a.values()[1] - 0.6).abs() < 1e-15);
        let b = marginal_of(&t, &AttributeSubset::new(vec![1], 2).unwrap()).unwrap();
        assert!((b.values()[0] - 0.6).abs() < 1e-15);
        let same = marginal_of(&t, t.subset()).unwrap();
        assert_eq!(same, t);
    }

    #[test]
    fn marginal_of_foreign_attribute_fails() {
        let t = ProbTensor::new(vec![2, 2], vec![0.25; 4]).unwrap();
        let keep = AttributeSubset::new(vec![3], 5).unwrap();
        assert!(matches!(
            marginal_of(&t, &keep),
            Err(Error::SubsetMismatch(_))
        ));
    }

    #[test]
    fn marginal_matches_loop_oracle() {
        // 3x2x2 tensor with distinct entries, normalised.
        let raw: Vec<f64> = (1..=12).map(f64::from).collect();
        let total: f64 = raw.iter().sum();
        let vals: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let t = ProbTensor::new(vec![3, 2, 2], vals.clone()).unwrap();
        let m = marginal_of(&t, &AttributeSubset::new(vec![0], 3).unwrap()).unwrap();
        for a in 0..3 {
            let mut s = 0.0;
            for b in 0..2 {
                for c in 0..2 {
                    s += vals[a * 4 + b * 2 + c];
                }
            }
            assert!((m.values()[a] - s).abs() < 1e-15);
        }
        // Reordered keep transposes the result.
        let ca = marginal_of(&t, &AttributeSubset::new(vec![2, 0], 3).unwrap()).unwrap();
        assert_eq!(ca.shape(), &[2, 3]);
        for c in 0..2 {
            for a in 0..3 {
                let s: f64 = (0..2).map(|b| vals[a * 4 + b * 2 + c]).sum();
                assert!((ca.get(&[c, a]) - s).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn full_domain_is_exact() {
        let schema = Schema::from_sizes(&[9, 16, 7, 15, 6, 5, 2, 2]);
        assert_eq!(schema.full_domain_size(), BigUint::from(1_814_400u32));
        let big = Schema::from_sizes(&[18; 40]);
        assert_eq!(big.full_domain_size(), BigUint::from(18u32).pow(40));
    }

    #[test]
    fn outer_product_layout() {
        let t = ProbTensor::outer(&[vec![0.3, 0.7], vec![0.7, 0.3]], AttributeSubset::first(2))
            .unwrap();
        let expected = [0.21, 0.09, 0.49, 0.21];
        for (a, b) in t.values().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
