//! JSON domain files.
//!
//! ```json
//! {"name": "crafting", "n": 22, "noise_p": 0.0,
//!  "skills": [{"id": 3, "effect": {"3": 1}, "condition": {"0": 1}}]}
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Environment;
use crate::error::Result;
use crate::state::PartialAssignment;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSpec {
    pub name: String,
    pub n: usize,
    pub noise_p: f64,
    pub skills: Vec<SkillSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkillSpec {
    pub id: usize,
    pub effect: PartialAssignment,
    pub condition: PartialAssignment,
}

impl EnvSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("spec is always serializable");
        out.push('\n');
        out
    }
}

/// Loads and validates a domain file; `seed` drives the noise stream.
pub fn load_env(path: impl AsRef<Path>, seed: u64) -> Result<Environment> {
    let text = fs::read_to_string(path)?;
    Environment::from_spec(&EnvSpec::from_json(&text)?, seed)
}

pub fn save_env(env: &Environment, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, env.to_spec().to_json())?;
    Ok(())
}
