use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A single problem found while validating a tree against a dataset schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationIssue {
    UnknownFeature { feature: String, path: String },
    KindMismatch { feature: String, expected: &'static str, path: String },
    InvalidCategories { feature: String, reason: String, path: String },
    SignatureMismatch { tree_id: String, path: String },
    CyclicReference { chain: Vec<String> },
    UnresolvableTreeRef { tree_id: String, path: String },
}

impl ValidationIssue {
    pub fn code(&self) -> &'static str {
        match self {
            ValidationIssue::UnknownFeature { .. } => "UnknownFeature",
            ValidationIssue::KindMismatch { .. } => "KindMismatch",
            ValidationIssue::InvalidCategories { .. } => "InvalidCategories",
            ValidationIssue::SignatureMismatch { .. } => "SignatureMismatch",
            ValidationIssue::CyclicReference { .. } => "CyclicReference",
            ValidationIssue::UnresolvableTreeRef { .. } => "UnresolvableTreeRef",
        }
    }

    /// Location of the offending node, when the issue is tied to one.
    pub fn path(&self) -> Option<&str> {
        match self {
            ValidationIssue::UnknownFeature { path, .. }
            | ValidationIssue::KindMismatch { path, .. }
            | ValidationIssue::InvalidCategories { path, .. }
            | ValidationIssue::SignatureMismatch { path, .. }
            | ValidationIssue::UnresolvableTreeRef { path, .. } => Some(path),
            ValidationIssue::CyclicReference { .. } => None,
        }
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::UnknownFeature { feature, path } => {
                write!(f, "{path}: unknown feature `{feature}`")
            }
            ValidationIssue::KindMismatch { feature, expected, path } => {
                write!(f, "{path}: feature `{feature}` is not {expected}")
            }
            ValidationIssue::InvalidCategories { feature, reason, path } => {
                write!(f, "{path}: categories for `{feature}` {reason}")
            }
            ValidationIssue::SignatureMismatch { tree_id, path } => {
                write!(f, "{path}: tree `{tree_id}` was built for a different dataset signature")
            }
            ValidationIssue::CyclicReference { chain } => {
                write!(f, "tree reference cycle: {}", chain.join(" -> "))
            }
            ValidationIssue::UnresolvableTreeRef { tree_id, path } => {
                write!(f, "{path}: referenced tree `{tree_id}` not found")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed CSV: {0}")]
    MalformedCsv(String),
    #[error("bad class column: {0}")]
    BadClassColumn(String),
    #[error("empty dataset: {0}")]
    EmptyDataset(String),
    #[error("fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
    #[error("too few samples: {0}")]
    TooFewSamples(String),
    #[error("referenced tree `{0}` not found")]
    UnresolvableTreeRef(String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("schema violation at {path}: {message}")]
    SchemaViolation { path: String, message: String },
    #[error("tree failed validation: {}", join_issues(.0))]
    ValidationFailed(Vec<ValidationIssue>),
    #[error("dataset signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("tree reference cycle: {}", .0.join(" -> "))]
    CyclicReference(Vec<String>),
    #[error("degenerate training data: {0}")]
    DegenerateData(String),
    #[error("training loss became non-finite at epoch {epoch}; lower the learning rate")]
    NonFiniteLoss { epoch: usize },
    #[error("AUC needs at least one positive and one negative sample")]
    OneClassOnly,
    #[error("invalid learner parameters: {0}")]
    BadHyperparameters(String),
    #[error("{0} not found")]
    NotFound(String),
    #[error("caller does not own tree `{0}`")]
    NotOwner(String),
    #[error("tree `{0}` is referenced by other trees")]
    InUse(String),
    #[error("a bearer token is required for this operation")]
    Unauthorized,
    #[error("owner token must be at least 16 bytes")]
    InvalidToken,
    #[error("store I/O failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("store document is corrupt: {0}")]
    CorruptStore(String),
}

fn join_issues(issues: &[ValidationIssue]) -> String {
    issues.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

impl Error {
    /// Stable machine-readable name used by the CLI and HTTP layers.
    pub fn code(&self) -> &'static str {
        match self {
            Error::MalformedCsv(_) => "MalformedCsv",
            Error::BadClassColumn(_) => "BadClassColumn",
            Error::EmptyDataset(_) => "EmptyDataset",
            Error::BadFraction(_) => "BadFraction",
            Error::TooFewSamples(_) => "TooFewSamples",
            Error::UnresolvableTreeRef(_) => "UnresolvableTreeRef",
            Error::UnknownFeature(_) => "UnknownFeature",
            Error::SchemaViolation { .. } => "SchemaViolation",
            Error::ValidationFailed(_) => "ValidationFailed",
            Error::SignatureMismatch(_) => "SignatureMismatch",
            Error::CyclicReference(_) => "CyclicReference",
            Error::DegenerateData(_) => "DegenerateData",
            Error::NonFiniteLoss { .. } => "NonFiniteLoss",
            Error::OneClassOnly => "OneClassOnly",
            Error::BadHyperparameters(_) => "BadHyperparameters",
            Error::NotFound(_) => "NotFound",
            Error::NotOwner(_) => "NotOwner",
            Error::InUse(_) => "InUse",
            Error::Unauthorized => "Unauthorized",
            Error::InvalidToken => "InvalidToken",
            Error::Io(_) => "StoreIo",
            Error::CorruptStore(_) => "CorruptStore",
        }
    }

    /// JSON-path style location, for errors that carry one.
    pub fn location(&self) -> Option<&str> {
        match self {
            Error::SchemaViolation { path, .. } => Some(path),
            Error::ValidationFailed(issues) => issues.iter().find_map(|i| i.path()),
            _ => None,
        }
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::SchemaViolation { path: path.into(), message: message.into() }
    }

    /// Collapses a validation issue list: a reference cycle is reported on its
    /// own, everything else as `ValidationFailed`.
    pub fn from_issues(issues: Vec<ValidationIssue>) -> Self {
        if let Some(ValidationIssue::CyclicReference { chain }) =
            issues.iter().find(|i| matches!(i, ValidationIssue::CyclicReference { .. }))
        {
            return Error::CyclicReference(chain.clone());
        }
        if issues.len() == 1 {
            if let ValidationIssue::SignatureMismatch { tree_id, .. } = &issues[0] {
                return Error::SignatureMismatch(format!("tree `{tree_id}`"));
            }
        }
        Error::ValidationFailed(issues)
    }
}
