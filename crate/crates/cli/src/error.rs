use std::path::PathBuf;

use serde::Serialize;
use wavestereo::adapt::AdaptError;
use wavestereo::budget::BudgetError;
use wavestereo::formats::FormatError;
use wavestereo::matcher::MatchError;
use wavestereo::metrics::MetricError;
use wavestereo::reconstruct::ReconstructError;
use wavestereo::scene::SceneError;
use wavestereo::ModelError;

pub const EXIT_COMPUTATION: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

/// Failure reported as one JSON object on stderr.
#[derive(Debug, Serialize)]
pub struct CliError {
    pub error: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub message: String,
    #[serde(skip)]
    pub code: u8,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            error: "InvalidArgument",
            path: None,
            message: message.into(),
            code: EXIT_USAGE,
        }
    }

    pub fn not_found(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        Self {
            error: "FileNotFound",
            message: format!("{} does not exist", path.display()),
            path: Some(path),
            code: EXIT_USAGE,
        }
    }

    pub fn input(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Self {
            error: "InvalidInput",
            path: Some(path.into()),
            message: message.into(),
            code: EXIT_USAGE,
        }
    }

    pub fn computation(message: impl Into<String>) -> Self {
        Self {
            error: "ComputationError",
            path: None,
            message: message.into(),
            code: EXIT_COMPUTATION,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_else(|_| format!("{{\"error\":\"{}\"}}", self.error))
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        match &e {
            FormatError::Io { path, .. } if e.is_not_found() => CliError::not_found(path.clone()),
            FormatError::Io { path, .. } => Self {
                error: "IoError",
                path: Some(path.clone()),
                message: e.to_string(),
                code: EXIT_COMPUTATION,
            },
            _ => Self {
                error: "InvalidInput",
                path: None,
                message: e.to_string(),
                code: EXIT_USAGE,
            },
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::usage(e.to_string())
    }
}

impl From<SceneError> for CliError {
    fn from(e: SceneError) -> Self {
        match e {
            SceneError::Invalid(_) | SceneError::Model(_) | SceneError::ProbeOutsideExtent { .. } => {
                CliError::usage(e.to_string())
            }
            _ => CliError::computation(e.to_string()),
        }
    }
}

impl From<MatchError> for CliError {
    fn from(e: MatchError) -> Self {
        match e {
            MatchError::Format(f) => f.into(),
            MatchError::InvalidParams(_) | MatchError::DimensionMismatch { .. } | MatchError::Model(_) => {
                CliError::usage(e.to_string())
            }
            MatchError::AllMasked => CliError::computation(e.to_string()),
        }
    }
}

impl From<ReconstructError> for CliError {
    fn from(e: ReconstructError) -> Self {
        match e {
            ReconstructError::InvalidParams(_) | ReconstructError::FrameMismatch { .. } => {
                CliError::usage(e.to_string())
            }
            _ => CliError::computation(e.to_string()),
        }
    }
}

impl From<AdaptError> for CliError {
    fn from(e: AdaptError) -> Self {
        match e {
            AdaptError::Format(f) => f.into(),
            AdaptError::DegenerateRange => CliError::computation(e.to_string()),
            _ => CliError::usage(e.to_string()),
        }
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        match e {
            MetricError::DimensionMismatch { .. } => CliError::usage(e.to_string()),
            MetricError::Adapt(a) => a.into(),
            _ => CliError::computation(e.to_string()),
        }
    }
}

impl From<BudgetError> for CliError {
    fn from(e: BudgetError) -> Self {
        match e {
            BudgetError::Csv(_) => CliError::computation(e.to_string()),
            _ => CliError::usage(e.to_string()),
        }
    }
}
