use thiserror::Error;

/// An argument outside the domain of an operation.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid {name} `{value}`: {reason}")]
pub struct DomainError {
    pub name: &'static str,
    pub value: String,
    pub reason: &'static str,
}

impl DomainError {
    pub(crate) fn new(name: &'static str, value: f64, reason: &'static str) -> Self {
        Self {
            name,
            value: value.to_string(),
            reason,
        }
    }

    pub(crate) fn text(name: &'static str, value: &str, reason: &'static str) -> Self {
        Self {
            name,
            value: value.to_string(),
            reason,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    #[error("no records to estimate from")]
    EmptyDataset,
    #[error("no records remain after excluding dropouts")]
    OnlyDropouts,
    #[error("brute-force estimator is limited to {limit} records, got {got}")]
    Oversize { limit: usize, got: usize },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// A scenario configuration that cannot be run. `field` is the CLI flag /
/// config key at fault.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid value for `--{field}`: {reason}")]
pub struct ConfigError {
    pub field: &'static str,
    pub reason: String,
}

impl ConfigError {
    pub(crate) fn new(field: &'static str, reason: impl Into<String>) -> Self {
        Self {
            field,
            reason: reason.into(),
        }
    }
}

/// Malformed CSV/config input.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: line {line}: {reason}")]
    Line {
        path: String,
        line: u64,
        reason: String,
    },
    #[error("{path}: {reason}")]
    File { path: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Format(#[from] FormatError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
