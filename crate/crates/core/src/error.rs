//! Error types shared across the toolkit.
//!
//! Every error carries a [`Category`] so the CLI can map failures to stable
//! exit codes and emit a machine-parsable `ERROR <category>: <detail>` line.

use thiserror::Error;

/// Stable error categories, one exit code each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Config,
    Schema,
    Parse,
    Validation,
    Model,
    Instability,
    Init,
    Stat,
    Evidence,
    Io,
}

impl Category {
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Config => 3,
            Category::Schema => 4,
            Category::Parse => 5,
            Category::Validation => 6,
            Category::Model => 7,
            Category::Instability => 8,
            Category::Init => 9,
            Category::Stat => 10,
            Category::Evidence => 11,
            Category::Io => 12,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Config => "config",
            Category::Schema => "schema",
            Category::Parse => "parse",
            Category::Validation => "validation",
            Category::Model => "model",
            Category::Instability => "instability",
            Category::Init => "init",
            Category::Stat => "stat",
            Category::Evidence => "evidence",
            Category::Io => "io",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("state has {got} compartments, model {model} expects {expected}")]
    ModelMismatch {
        model: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid rate schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integration unstable at day {day}: compartment {compartment} = {value}")]
    Instability {
        day: f64,
        compartment: &'static str,
        value: f64,
    },

    #[error("sampler initialization failed: {0}")]
    Init(String),

    #[error("undefined statistic: {0}")]
    UndefinedStatistic(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("grid alignment: {0}")]
    GridMismatch(String),

    #[error("evidence underflow: all {n_draws} prior draws had zero likelihood")]
    EvidenceUnderflow { n_draws: usize },

    #[error("missing column '{0}' in observations file")]
    MissingColumn(String),

    #[error("row {row}: {detail}")]
    ParseRow { row: usize, detail: String },

    #[error("validation: {0}")]
    Validation(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn category(&self) -> Category {
        match self {
            Error::ModelMismatch { .. }
            | Error::InvalidState(_)
            | Error::InvalidSchedule(_)
            | Error::InvalidParameter(_) => Category::Model,
            Error::Instability { .. } => Category::Instability,
            Error::Init(_) => Category::Init,
            Error::UndefinedStatistic(_) | Error::DegenerateSample(_) | Error::GridMismatch(_) => {
                Category::Stat
            }
            Error::EvidenceUnderflow { .. } => Category::Evidence,
            Error::MissingColumn(_) => Category::Schema,
            Error::ParseRow { .. } => Category::Parse,
            Error::Validation(_) => Category::Validation,
            Error::Config(_) => Category::Config,
            Error::Io(_) => Category::Io,
            Error::Csv(_) => Category::Io,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
