use thiserror::Error;

use crate::skill::SkillId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {dim} out of range for state of length {n}")]
    DimOutOfRange { dim: usize, n: usize },

    #[error("state length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("unknown skill id {0}")]
    UnknownSkill(SkillId),

    #[error("skill {0} is not a primitive skill")]
    NotPrimitive(SkillId),

    #[error("skill reference cycle through skill {0}")]
    ReferenceCycle(SkillId),

    #[error("contradictory condition on dimension {dim}")]
    ContradictoryCondition { dim: usize },

    #[error("skill registry is empty")]
    EmptyRegistry,

    #[error("plan is empty")]
    EmptyPlan,

    #[error("skill rejected: {0}")]
    Rejected(String),

    #[error("trajectory has no step producing the requested effect")]
    NoEffectNode,

    #[error("condition model is not confident")]
    NotConfident,

    #[error("dependency graph is not acyclic")]
    NotDag,

    #[error("duplicate skill id {0}")]
    DuplicateSkill(SkillId),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("curriculum stage {stage} failed after {episodes} episodes")]
    StageFailed { stage: usize, episodes: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            return Error::Io(e.into());
        }
        Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
