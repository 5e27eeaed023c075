//! Loading categorical datasets from delimited text.
//!
//! Columns are either categorical (labels mapped to dense indices in order
//! of first appearance, or a declared category list) or numeric values
//! binned into half-open intervals. Profiles are JSON documents that
//! deserialize into [`IngestConfig`].

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::domain::{Attribute, Dataset, Role, Schema};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    /// Drop any record with a missing value in a kept column.
    #[default]
    DropRow,
    /// Keep the missing token as a category of its own.
    AsCategory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum ColumnRole {
    Categorical {
        /// Declared labels in index order; unseen labels are then an error.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        categories: Option<Vec<String>>,
    },
    Binned {
        /// Strictly increasing edges; bin `k` is `[edges[k], edges[k+1])`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        edges: Option<Vec<f64>>,
        /// Alternative to `edges`: equal-width bins covering `[min, max)`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        width: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    #[serde(flatten)]
    pub role: ColumnRole,
}

fn yes() -> bool {
    true
}

fn comma() -> char {
    ','
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Data file name, resolved against the data directory by callers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(default = "yes")]
    pub has_header: bool,
    /// Column names for headerless files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column_names: Option<Vec<String>>,
    #[serde(default = "comma")]
    pub delimiter: char,
    /// Treat runs of the delimiter as one separator (space-aligned files).
    #[serde(default)]
    pub collapse_delimiters: bool,
    #[serde(default = "yes")]
    pub trim: bool,
    #[serde(default)]
    pub missing_tokens: Vec<String>,
    #[serde(default)]
    pub missing_policy: MissingPolicy,
    /// Kept columns in output order. Empty keeps every column not in `drop`
    /// as an inferred categorical.
    #[serde(default)]
    pub columns: Vec<ColumnSpec>,
    #[serde(default)]
    pub drop: Vec<String>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            name: None,
            file: None,
            has_header: true,
            column_names: None,
            delimiter: ',',
            collapse_delimiters: false,
            trim: true,
            missing_tokens: Vec::new(),
            missing_policy: MissingPolicy::DropRow,
            columns: Vec::new(),
            drop: Vec::new(),
        }
    }
}

impl IngestConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// A config that reads back what [`write_csv`] wrote for `schema`, with
    /// every category declared so indices are reproduced exactly.
    pub fn from_schema(schema: &Schema) -> Self {
        Self {
            columns: schema
                .attributes()
                .iter()
                .map(|a| ColumnSpec {
                    name: a.name.clone(),
                    role: ColumnRole::Categorical {
                        categories: Some(a.categories.clone()),
                    },
                })
                .collect(),
            trim: false,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LoadReport {
    pub rows_read: usize,
    pub rows_dropped: usize,
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub dataset: Dataset,
    pub report: LoadReport,
}

enum Encoder {
    Inferred {
        labels: Vec<String>,
        index: HashMap<String, u32>,
    },
    Declared {
        labels: Vec<String>,
        index: HashMap<String, u32>,
    },
    Binned {
        edges: Vec<f64>,
    },
}

fn bin_label(lo: f64, hi: f64) -> String {
    format!("[{lo},{hi})")
}

impl Encoder {
    fn new(spec: &ColumnSpec) -> Result<Self> {
        match &spec.role {
            ColumnRole::Categorical { categories: None } => Ok(Encoder::Inferred {
                labels: Vec::new(),
                index: HashMap::new(),
            }),
            ColumnRole::Categorical {
                categories: Some(labels),
            } => {
                let mut index = HashMap::new();
                for (i, l) in labels.iter().enumerate() {
                    if index.insert(l.clone(), i as u32).is_some() {
                        return Err(Error::DuplicateCategory {
                            attribute: spec.name.clone(),
                            label: l.clone(),
                        });
                    }
                }
                Ok(Encoder::Declared {
                    labels: labels.clone(),
                    index,
                })
            }
            ColumnRole::Binned {
                edges,
                width,
                min,
                max,
            } => {
                let edges = match (edges, width, min, max) {
                    (Some(e), None, None, None) => e.clone(),
                    (None, Some(w), Some(lo), Some(hi)) => {
                        if !(*w > 0.0) || !(hi > lo) {
                            return Err(Error::Config(format!(
                                "column `{}`: need width > 0 and max > min",
                                spec.name
                            )));
                        }
                        let count = ((hi - lo) / w).ceil() as usize;
                        (0..=count).map(|k| (lo + k as f64 * w).min(*hi)).collect()
                    }
                    _ => {
                        return Err(Error::Config(format!(
                            "column `{}`: give either `edges` or `width`, `min` and `max`",
                            spec.name
                        )))
                    }
                };
                if edges.len() < 2 || edges.windows(2).any(|p| !(p[1] > p[0])) {
                    return Err(Error::Config(format!(
                        "column `{}`: bin edges must be strictly increasing",
                        spec.name
                    )));
                }
                Ok(Encoder::Binned { edges })
            }
        }
    }

    fn encode(&mut self, value: &str) -> std::result::Result<u32, String> {
        match self {
            Encoder::Inferred { labels, index } => {
                if let Some(&i) = index.get(value) {
                    return Ok(i);
                }
                let i = labels.len() as u32;
                labels.push(value.to_string());
                index.insert(value.to_string(), i);
                Ok(i)
            }
            Encoder::Declared { index, .. } => index
                .get(value)
                .copied()
                .ok_or_else(|| format!("undeclared category `{value}`")),
            Encoder::Binned { edges } => {
                let x: f64 = value
                    .parse()
                    .map_err(|_| format!("`{value}` is not a number"))?;
                if !(x >= edges[0] && x < edges[edges.len() - 1]) {
                    return Err(format!(
                        "{x} outside binned range [{}, {})",
                        edges[0],
                        edges[edges.len() - 1]
                    ));
                }
                Ok((edges.partition_point(|&e| e <= x) - 1) as u32)
            }
        }
    }

    fn labels(self) -> Vec<String> {
        match self {
            Encoder::Inferred { labels, .. } | Encoder::Declared { labels, .. } => labels,
            Encoder::Binned { edges } => edges.windows(2).map(|p| bin_label(p[0], p[1])).collect(),
        }
    }
}

fn split_line<'a>(line: &'a str, config: &IngestConfig) -> Vec<&'a str> {
    let parts = line.split(config.delimiter);
    if config.collapse_delimiters {
        parts.filter(|p| !p.is_empty()).collect()
    } else {
        parts.collect()
    }
}

fn read_rows(source: &str, config: &IngestConfig) -> Result<Vec<Vec<String>>> {
    if config.collapse_delimiters {
        return Ok(source
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                split_line(l, config)
                    .into_iter()
                    .map(str::to_string)
                    .collect()
            })
            .collect());
    }
    let mut delimiter = [0u8; 4];
    let encoded = config.delimiter.encode_utf8(&mut delimiter);
    if encoded.len() != 1 {
        return Err(Error::Config(
            "delimiter must be a single-byte character".into(),
        ));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(encoded.as_bytes()[0])
        .flexible(true)
        .from_reader(source.as_bytes());
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(rows)
}

/// Loads from any reader. See [`load_csv`].
pub fn load_reader(mut reader: impl Read, config: &IngestConfig) -> Result<Loaded> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| Error::io("<input>", e))?;
    let mut rows = read_rows(&text, config)?.into_iter();

    let header: Vec<String> = if config.has_header {
        rows.next()
            .ok_or(Error::EmptyAfterFiltering { dropped: 0 })?
    } else {
        config
            .column_names
            .clone()
            .ok_or_else(|| Error::Config("headerless input needs `column_names`".into()))?
    };
    let header: Vec<String> = header
        .into_iter()
        .map(|h| if config.trim { h.trim().to_string() } else { h })
        .collect();
    let position = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    };
    for d in &config.drop {
        position(d)?;
    }

    let specs: Vec<ColumnSpec> = if config.columns.is_empty() {
        header
            .iter()
            .filter(|h| !config.drop.contains(h))
            .map(|h| ColumnSpec {
                name: h.clone(),
                role: ColumnRole::Categorical { categories: None },
            })
            .collect()
    } else {
        config.columns.clone()
    };
    if specs.is_empty() {
        return Err(Error::Config("no columns kept".into()));
    }
    let positions = specs
        .iter()
        .map(|s| position(&s.name))
        .collect::<Result<Vec<_>>>()?;
    let mut encoders = specs.iter().map(Encoder::new).collect::<Result<Vec<_>>>()?;

    let mut records = Vec::new();
    let mut rows_read = 0;
    let mut rows_dropped = 0;
    for (r, row) in rows.enumerate() {
        rows_read += 1;
        // Report 1-based line numbers counting the header.
        let line = r + 1 + usize::from(config.has_header);
        let mut fields = Vec::with_capacity(specs.len());
        let mut missing = false;
        for (spec, &p) in specs.iter().zip(&positions) {
            let raw = row.get(p).ok_or_else(|| Error::Parse {
                row: line,
                column: spec.name.clone(),
                message: format!("row has {} fields", row.len()),
            })?;
            let value = if config.trim {
                raw.trim()
            } else {
                raw.as_str()
            };
            if config.missing_tokens.iter().any(|t| t == value) {
                missing = true;
            }
            fields.push(value);
        }
        if missing && config.missing_policy == MissingPolicy::DropRow {
            rows_dropped += 1;
            continue;
        }
        for ((enc, spec), value) in encoders.iter_mut().zip(&specs).zip(&fields) {
            let idx = enc.encode(value).map_err(|message| Error::Parse {
                row: line,
                column: spec.name.clone(),
                message,
            })?;
            records.push(idx);
        }
    }
    if records.is_empty() {
        return Err(Error::EmptyAfterFiltering {
            dropped: rows_dropped,
        });
    }
    let attributes = specs
        .iter()
        .zip(encoders)
        .map(|(s, e)| Attribute::new(s.name.clone(), e.labels()))
        .collect();
    let dataset = Dataset::new(Schema::new(attributes)?, records, Role::TrueData)?;
    Ok(Loaded {
        dataset,
        report: LoadReport {
            rows_read,
            rows_dropped,
        },
    })
}

pub fn load_csv(path: impl AsRef<Path>, config: &IngestConfig) -> Result<Loaded> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_reader(file, config).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Writes category labels with a header row.
pub fn write_csv(data: &Dataset, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let schema = data.schema();
    w.write_record(schema.attributes().iter().map(|a| a.name.as_str()))?;
    for rec in data.records() {
        w.write_record(
            rec.iter()
                .enumerate()
                .map(|(j, &v)| schema.attribute(j).categories[v as usize].as_str()),
        )?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

pub fn write_csv_path(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(data, std::io::BufWriter::new(file))
}

#[derive(Debug, Clone, Serialize)]
pub struct AttributeReport {
    pub name: String,
    pub d: usize,
    pub categories: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SchemaReport {
    pub n: usize,
    pub m: usize,
    pub attributes: Vec<AttributeReport>,
    /// `|Ω|` as an exact decimal integer.
    pub domain_size: String,
    pub domain_size_scientific: String,
    pub d_min: usize,
    pub d_max: usize,
    pub d_median: f64,
}

/// `1.711505e+44`-style rendering with seven significant digits.
pub fn scientific(value: &BigUint) -> String {
    let digits = value.to_string();
    let exponent = digits.len() - 1;
    if digits.len() <= 7 {
        let padded = format!("{digits:0<7}");
        return format!("{}.{}e+{exponent:02}", &padded[..1], &padded[1..]);
    }
    let head: u64 = digits[..7].parse().expect("decimal digits");
    let round_up = digits.as_bytes()[7] >= b'5';
    let mut mantissa = head + u64::from(round_up);
    let mut exponent = exponent;
    if mantissa >= 10_000_000 {
        mantissa /= 10;
        exponent += 1;
    }
    let m = mantissa.to_string();
    format!("{}.{}e+{exponent:02}", &m[..1], &m[1..])
}

pub fn schema_report(data: &Dataset) -> Result<SchemaReport> {
    if data.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    let schema = data.schema();
    let mut sizes = schema.sizes();
    let total = schema.full_domain_size();
    sizes.sort_unstable();
    let mid = sizes.len() / 2;
    let d_median = if sizes.len().is_multiple_of(2) {
        (sizes[mid - 1] + sizes[mid]) as f64 / 2.0
    } else {
        sizes[mid] as f64
    };
    Ok(SchemaReport {
        n: data.n(),
        m: data.m(),
        attributes: schema
            .attributes()
            .iter()
            .map(|a| AttributeReport {
                name: a.name.clone(),
                d: a.size(),
                categories: a.categories.clone(),
            })
            .collect(),
        domain_size: total.to_string(),
        domain_size_scientific: scientific(&total),
        d_min: sizes[0],
        d_max: sizes[sizes.len() - 1],
        d_median,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
age,color,size,note
23,red,S,x
47, blue ,M,y
35,red,?,z
81,green,L,x
";

    fn keep(names: &[&str]) -> Vec<ColumnSpec> {
        names
            .iter()
            .map(|n| ColumnSpec {
                name: n.to_string(),
                role: ColumnRole::Categorical { categories: None },
            })
            .collect()
    }

    #[test]
    fn first_appearance_order_and_drop_row() {
        let config = IngestConfig {
            columns: keep(&["color", "size"]),
            missing_tokens: vec!["?".into()],
            ..Default::default()
        };
        let loaded = load_reader(SAMPLE.as_bytes(), &config).unwrap();
        let ds = loaded.dataset;
        assert_eq!(loaded.report.rows_dropped, 1);
        assert_eq!(loaded.report.rows_read, 4);
        assert_eq!(ds.n(), 3);
        assert_eq!(
            ds.schema().attribute(0).categories,
            vec!["red", "blue", "green"]
        );
        assert_eq!(ds.raw(), &[0, 0, 1, 1, 2, 2]);
    }

    #[test]
    fn missing_as_category() {
        let config = IngestConfig {
            columns: keep(&["size"]),
            missing_tokens: vec!["?".into()],
            missing_policy: MissingPolicy::AsCategory,
            ..Default::default()
        };
        let ds = load_reader(SAMPLE.as_bytes(), &config).unwrap().dataset;
        assert_eq!(ds.n(), 4);
        assert_eq!(
            ds.schema().attribute(0).categories,
            vec!["S", "M", "?", "L"]
        );
    }

    #[test]
    fn binning_by_width() {
        let config: IngestConfig = serde_json::from_str(
            r#"{"columns": [
                {"name": "age", "role": "binned", "width": 20, "min": 0, "max": 100},
                {"name": "note", "role": "categorical"}
            ]}"#,
        )
        .unwrap();
        let ds = load_reader(SAMPLE.as_bytes(), &config).unwrap().dataset;
        let age = ds.schema().attribute(0);
        assert_eq!(age.size(), 5);
        assert_eq!(age.categories[0], "[0,20)");
        let ages: Vec<u32> = ds.records().map(|r| r[0]).collect();
        assert_eq!(ages, vec![1, 2, 1, 4]);
    }

    #[test]
    fn infer_all_minus_drop() {
        let config = IngestConfig {
            drop: vec!["age".into(), "note".into()],
            ..Default::default()
        };
        let ds = load_reader(SAMPLE.as_bytes(), &config).unwrap().dataset;
        assert_eq!(ds.schema().len(), 2);
        assert_eq!(ds.schema().attribute(1).size(), 4);
    }

    #[test]
    fn parse_errors_are_located() {
        let config: IngestConfig = serde_json::from_str(
            r#"{"columns": [{"name": "note", "role": "binned", "edges": [0, 1]}]}"#,
        )
        .unwrap();
        match load_reader(SAMPLE.as_bytes(), &config) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "note");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_column_and_empty() {
        let config = IngestConfig {
            columns: keep(&["weight"]),
            ..Default::default()
        };
        assert!(matches!(
            load_reader(SAMPLE.as_bytes(), &config),
            Err(Error::UnknownColumn(c)) if c == "weight"
        ));
        let config = IngestConfig {
            columns: keep(&["color"]),
            missing_tokens: vec!["red".into(), "blue".into(), "green".into()],
            ..Default::default()
        };
        assert!(matches!(
            load_reader(SAMPLE.as_bytes(), &config),
            Err(Error::EmptyAfterFiltering { dropped: 4 })
        ));
    }

    #[test]
    fn bad_edges_rejected() {
        let config: IngestConfig = serde_json::from_str(
            r#"{"columns": [{"name": "age", "role": "binned", "edges": [0, 50, 50, 100]}]}"#,
        )
        .unwrap();
        assert!(matches!(
            load_reader(SAMPLE.as_bytes(), &config),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn headerless_space_separated() {
        let text = "A11  6 A34\nA12 48  A32\n\nA11 12 A34\n";
        let config = IngestConfig {
            has_header: false,
            column_names: Some(vec!["status".into(), "months".into(), "history".into()]),
            delimiter: ' ',
            collapse_delimiters: true,
            drop: vec!["months".into()],
            ..Default::default()
        };
        let ds = load_reader(text.as_bytes(), &config).unwrap().dataset;
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.raw(), &[0, 0, 1, 1, 0, 0]);
    }

    #[test]
    fn round_trip_through_csv() {
        let config = IngestConfig {
            columns: keep(&["color", "size", "note"]),
            ..Default::default()
        };
        let ds = load_reader(SAMPLE.as_bytes(), &config).unwrap().dataset;
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        let again = load_reader(buf.as_slice(), &IngestConfig::from_schema(ds.schema()))
            .unwrap()
            .dataset;
        assert_eq!(again.raw(), ds.raw());
        assert_eq!(again.schema(), ds.schema());
    }

    #[test]
    fn scientific_rendering() {
        assert_eq!(scientific(&BigUint::from(1_814_400u32)), "1.814400e+06");
        assert_eq!(scientific(&BigUint::from(64_800u32)), "6.480000e+04");
        assert_eq!(scientific(&BigUint::from(99_999_996u32)), "1.000000e+08");
        let big: BigUint = "171150512345678901234567890123456789012345"
            .parse()
            .unwrap();
        assert_eq!(scientific(&(big * 10u32 + 7u32)), "1.711505e+42");
    }

    #[test]
    fn report_median() {
        let schema = Schema::from_sizes(&[9, 16, 7, 15, 6, 5, 2, 2]);
        let mut rec = vec![0u32; 8];
        rec.extend([1u32; 8]);
        let ds = Dataset::new(schema, rec, Role::TrueData).unwrap();
        let r = schema_report(&ds).unwrap();
        assert_eq!(r.domain_size, "1814400");
        assert_eq!((r.d_min, r.d_max, r.d_median), (2, 16, 6.5));
    }
}
