use std::path::Path;

use thiserror::Error;

use tanglemap_core::planner::PlanError;
use tanglemap_core::scenegen::SceneError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NO_GRASP: i32 = 3;
pub const EXIT_MISSING_TRUTH: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{0}")]
    NoGraspFound(String),
    #[error("missing ground truth: {0}")]
    MissingTruth(String),
    #[error(transparent)]
    Plan(PlanError),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

impl CliError {
    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            msg: err.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::NoGraspFound(_) => EXIT_NO_GRASP,
            CliError::MissingTruth(_) => EXIT_MISSING_TRUTH,
            _ => EXIT_INPUT,
        }
    }
}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> Self {
        match e {
            PlanError::NoGraspFound { .. } => CliError::NoGraspFound(e.to_string()),
            other => CliError::Plan(other),
        }
    }
}
