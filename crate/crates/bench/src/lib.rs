//! Experiment harness: runs the hierarchical planner and its baselines over
//! seeded trials and reports CSV or markdown tables.

pub mod report;
pub mod runner;
pub mod spec;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("domain: {0}")]
    Domain(hplan_core::Error),

    #[error(transparent)]
    Core(#[from] hplan_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl BenchError {
    /// Process exit code: 2 for usage errors, 3 for domain file errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Usage(_) => 2,
            BenchError::Domain(_) => 3,
            _ => 1,
        }
    }
}
