use thiserror::Error;

use crate::success::Violation;

/// Errors raised by the model, optimizer, simulation and experiment layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("belief saturated at lambda = {lambda} (u or 1-u underflows to 0)")]
    Saturation { lambda: f64 },

    #[error("model validation failed: {}", format_violations(.0))]
    Validation(Vec<Violation>),

    #[error("payoff overflow at information {information}: {detail}")]
    PayoffOverflow { information: f64, detail: String },

    #[error("feasible bracket not found: {0}")]
    Bracket(String),

    #[error("policy does not diverge toward the boundary: {0}")]
    NotDivergent(String),

    #[error("threshold not attainable: {0}")]
    Threshold(String),

    #[error("missing drift records: {0}")]
    MissingDrift(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
