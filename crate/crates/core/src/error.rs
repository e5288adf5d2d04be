use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("row {row}, column '{column}': missing value")]
    MissingValue { row: usize, column: String },

    #[error("row {row}, column '{column}': cannot parse '{value}' as a number")]
    ParseFeature {
        row: usize,
        column: String,
        value: String,
    },

    #[error("label column has {found} distinct values ({values}); exactly two are required")]
    LabelCardinality { found: usize, values: String },

    #[error("positive label '{0}' does not occur in the label column")]
    UnknownPositiveLabel(String),

    #[error("label column '{0}' not found in header")]
    UnknownColumn(String),

    #[error("malformed CSV: {0}")]
    Csv(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("model file: {0}")]
    Model(String),

    #[error("pruning selected no classifier: {0}")]
    NoSelection(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the content of an input file or dataset.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::MissingValue { .. }
                | Error::ParseFeature { .. }
                | Error::LabelCardinality { .. }
                | Error::UnknownPositiveLabel(_)
                | Error::UnknownColumn(_)
                | Error::Csv(_)
                | Error::InvalidDataset(_)
                | Error::Model(_)
        )
    }
}
