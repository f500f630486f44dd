use thiserror::Error;

/// Errors raised while configuring or running a simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("setting `{label}` direction is not a unit vector (norm {norm})")]
    NonUnitDirection { label: String, norm: f64 },
    #[error("duplicate setting label `{0}`")]
    DuplicateSetting(String),
    #[error("unresolved setting label `{0}`")]
    UnresolvedSetting(String),
    #[error("invalid model configuration: {0}")]
    InvalidModel(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid coincidence window: {0}")]
    InvalidWindow(String),
    #[error("trial count must be at least 1")]
    NoTrials,
}

/// Errors raised while reading or writing dataset files.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("bad header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("metadata: {0}")]
    Metadata(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Errors from the statistics layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("no matched trials for this pair")]
    NoMatchedTrials,
    #[error("no matched trials for setting pair ({0}, {1})")]
    MissingPair(String, String),
    #[error("{0}")]
    Config(#[from] ConfigError),
}
