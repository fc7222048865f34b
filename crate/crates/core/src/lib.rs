//! Hierarchical goal-regression planning with learned skills and learned
//! skill conditions over binary state spaces.

pub mod agent;
pub mod baselines;
pub mod conditions;
pub mod env;
pub mod error;
pub mod graph;
pub mod planner;
pub mod skill;
pub mod skill_learn;
pub mod state;

pub use error::{Error, Result};
pub use skill::{Skill, SkillId, SkillRegistry};
pub use state::{PartialAssignment, State};
