use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset has no records")]
    EmptyDataset,

    #[error("record {record}, column {column}: index {value} outside domain of size {size}")]
    IndexOutOfDomain {
        record: usize,
        column: usize,
        value: u32,
        size: usize,
    },

    #[error("attribute `{name}` has {size} categories; at least 2 are required")]
    DegenerateAttribute { name: String, size: usize },

    #[error("duplicate attribute name `{0}`")]
    DuplicateAttribute(String),

    #[error("attribute `{attribute}` lists category `{label}` more than once")]
    DuplicateCategory { attribute: String, label: String },

    #[error("record {record} has {found} values, schema has {expected} attributes")]
    RecordWidth {
        record: usize,
        found: usize,
        expected: usize,
    },

    #[error("invalid attribute subset: {0}")]
    InvalidSubset(String),

    #[error("subset mismatch: {0}")]
    SubsetMismatch(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("axis {axis} out of range for a {rank}-way tensor")]
    AxisOutOfRange { axis: usize, rank: usize },

    #[error("domain size must be at least 2, got {0}")]
    DegenerateDomain(usize),

    #[error("privacy budget must be positive and finite, got {0}")]
    NonpositiveEpsilon(f64),

    #[error("matrix is singular or numerically singular")]
    SingularMatrix,

    #[error("row {row} of randomization matrix sums to {sum}, not 1")]
    NotStochastic { row: usize, sum: f64 },

    #[error("domain of size {size} exceeds the cap of {cap}")]
    DomainTooLarge { size: usize, cap: usize },

    #[error("plan has {plan} matrices but the schema has {schema} attributes")]
    PlanSchemaMismatch { plan: usize, schema: usize },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("collection is empty")]
    EmptyCollection,

    #[error("target Cramér's V {target} unattainable (reached {reached})")]
    UnattainableTarget { target: f64, reached: f64 },

    #[error("least squares fit is degenerate: all x values are equal")]
    DegenerateFit,

    #[error("row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("no rows left after filtering ({dropped} dropped)")]
    EmptyAfterFiltering { dropped: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyDataset => "EmptyDataset",
            Error::IndexOutOfDomain { .. } => "IndexOutOfDomain",
            Error::DegenerateAttribute { .. } => "DegenerateAttribute",
            Error::DuplicateAttribute(_) => "DuplicateAttribute",
            Error::DuplicateCategory { .. } => "DuplicateCategory",
            Error::RecordWidth { .. } => "RecordWidth",
            Error::InvalidSubset(_) => "InvalidSubset",
            Error::SubsetMismatch(_) => "SubsetMismatch",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::AxisOutOfRange { .. } => "AxisOutOfRange",
            Error::DegenerateDomain(_) => "DegenerateDomain",
            Error::NonpositiveEpsilon(_) => "NonpositiveEpsilon",
            Error::SingularMatrix => "SingularMatrix",
            Error::NotStochastic { .. } => "NotStochastic",
            Error::DomainTooLarge { .. } => "DomainTooLarge",
            Error::PlanSchemaMismatch { .. } => "PlanSchemaMismatch",
            Error::OutOfRange(_) => "OutOfRange",
            Error::EmptyCollection => "EmptyCollection",
            Error::UnattainableTarget { .. } => "UnattainableTarget",
            Error::DegenerateFit => "DegenerateFit",
            Error::Parse { .. } => "ParseError",
            Error::UnknownColumn(_) => "UnknownColumn",
            Error::EmptyAfterFiltering { .. } => "EmptyAfterFiltering",
            Error::Config(_) => "Config",
            Error::Io { .. } => "Io",
            Error::Csv(_) => "Csv",
            Error::Json(_) => "Json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
