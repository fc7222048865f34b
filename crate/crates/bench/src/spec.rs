//! Experiment selectors: which environment, which method, which goals.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use hplan_core::env::{
    auto_curriculum, crafting_curriculum, crafting_env, crafting_goal, deepest_goal, drawer_curriculum,
    drawer_env, drawer_goal, random_env, EnvSpec, Environment,
};
use hplan_core::PartialAssignment;

use crate::BenchError;

/// Baking domain shipped with the harness.
pub const BAKING_JSON: &str = include_str!("../domains/baking.json");

#[derive(Debug, Clone, PartialEq)]
pub enum EnvSelector {
    Crafting,
    Drawer,
    Baking,
    File(PathBuf),
    Random { n: usize, lambda: f64, noise_p: f64, seed: u64 },
}

impl EnvSelector {
    /// Builds the environment with its noise stream seeded by `seed`.
    pub fn build(&self, seed: u64) -> Result<Environment, BenchError> {
        let mut env = match self {
            EnvSelector::Crafting => crafting_env(),
            EnvSelector::Drawer => drawer_env(),
            EnvSelector::Baking => {
                let spec = EnvSpec::from_json(BAKING_JSON).map_err(BenchError::Domain)?;
                Environment::from_spec(&spec, seed).map_err(BenchError::Domain)?
            }
            EnvSelector::File(path) => hplan_core::env::load_env(path, seed).map_err(BenchError::Domain)?,
            EnvSelector::Random { n, lambda, noise_p, seed: graph } => random_env(*n, *lambda, *noise_p, *graph),
        };
        env.reseed(seed);
        Ok(env)
    }

    pub fn has_expert_skills(&self) -> bool {
        matches!(self, EnvSelector::Crafting)
    }

    pub fn default_goal(&self, env: &Environment) -> PartialAssignment {
        match self {
            EnvSelector::Crafting => crafting_goal(),
            EnvSelector::Drawer => drawer_goal(),
            _ => deepest_goal(env),
        }
    }

    pub fn default_curriculum(&self, env: &Environment, goal: &PartialAssignment) -> Vec<PartialAssignment> {
        match self {
            EnvSelector::Crafting => crafting_curriculum(),
            EnvSelector::Drawer => drawer_curriculum(),
            _ => auto_curriculum(env, goal),
        }
    }
}

impl FromStr for EnvSelector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "crafting" => return Ok(EnvSelector::Crafting),
            "drawer" => return Ok(EnvSelector::Drawer),
            "baking" => return Ok(EnvSelector::Baking),
            _ => {}
        }
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(EnvSelector::File(PathBuf::from(path)));
        }
        let Some(args) = s.strip_prefix("random:") else {
            return Err(format!("unknown environment `{s}` (crafting, drawer, baking, file:PATH, random:n,lambda,p,seed)"));
        };
        let parts: Vec<&str> = args.split(',').map(str::trim).collect();
        let [n, lambda, p, seed] = parts[..] else {
            return Err(format!("`{s}`: expected random:n,lambda,p,seed"));
        };
        let bad = |what: &str, v: &str| format!("`{s}`: invalid {what} `{v}`");
        let n: usize = n.parse().map_err(|_| bad("n", n))?;
        let lambda: f64 = lambda.parse().map_err(|_| bad("lambda", lambda))?;
        let noise_p: f64 = p.parse().map_err(|_| bad("noise probability", p))?;
        let seed: u64 = seed.parse().map_err(|_| bad("seed", seed))?;
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(bad("lambda", &lambda.to_string()));
        }
        if !(0.0..=1.0).contains(&noise_p) {
            return Err(bad("noise probability", &noise_p.to_string()));
        }
        Ok(EnvSelector::Random { n, lambda, noise_p, seed })
    }
}

impl fmt::Display for EnvSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvSelector::Crafting => write!(f, "crafting"),
            EnvSelector::Drawer => write!(f, "drawer"),
            EnvSelector::Baking => write!(f, "baking"),
            EnvSelector::File(p) => write!(f, "file:{}", p.display()),
            EnvSelector::Random { n, lambda, noise_p, seed } => write!(f, "random:{n},{lambda},{noise_p},{seed}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Hierarchical planner. Without skill learning it starts from the
    /// expert skill set.
    Hierarchical { learn_skills: bool, learn_conditions: bool },
    GoalRegression,
    Mcts { budget: usize },
    Rrt { steps: usize },
    QLearning,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let count = |what: &str, v: &str| -> Result<usize, String> {
            match v.parse::<usize>() {
                Ok(x) if x > 0 => Ok(x),
                _ => Err(format!("`{s}`: {what} must be a positive integer")),
            }
        };
        if let Some(b) = s.strip_prefix("mcts:") {
            return Ok(Method::Mcts { budget: count("budget", b)? });
        }
        if let Some(n) = s.strip_prefix("rrt:") {
            return Ok(Method::Rrt { steps: count("steps", n)? });
        }
        match s {
            "goal-regression" => return Ok(Method::GoalRegression),
            "qlearn" => return Ok(Method::QLearning),
            _ => {}
        }
        let mut parts = s.split('+');
        if parts.next() != Some("hierarchical") {
            return Err(format!(
                "unknown method `{s}` (hierarchical[+learn-skills][+learn-conditions], goal-regression, mcts:B, rrt:S, qlearn)"
            ));
        }
        let (mut learn_skills, mut learn_conditions) = (false, false);
        for flag in parts {
            let slot = match flag {
                "learn-skills" => &mut learn_skills,
                "learn-conditions" => &mut learn_conditions,
                _ => return Err(format!("`{s}`: unknown option `{flag}`")),
            };
            if *slot {
                return Err(format!("`{s}`: `{flag}` given twice"));
            }
            *slot = true;
        }
        Ok(Method::Hierarchical { learn_skills, learn_conditions })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Hierarchical { learn_skills, learn_conditions } => {
                write!(f, "hierarchical")?;
                if *learn_skills {
                    write!(f, "+learn-skills")?;
                }
                if *learn_conditions {
                    write!(f, "+learn-conditions")?;
                }
                Ok(())
            }
            Method::GoalRegression => write!(f, "goal-regression"),
            Method::Mcts { budget } => write!(f, "mcts:{budget}"),
            Method::Rrt { steps } => write!(f, "rrt:{steps}"),
            Method::QLearning => write!(f, "qlearn"),
        }
    }
}

/// Goal syntax: comma-separated dimensions, each optionally `=0` or `=1`
/// (default 1), e.g. `21` or `3=1,5=0`.
pub fn parse_goal(s: &str) -> Result<PartialAssignment, String> {
    let mut pairs = Vec::new();
    for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
        let (d, v) = match item.split_once('=') {
            Some((d, v)) => (d.trim(), v.trim()),
            None => (item, "1"),
        };
        let dim: usize = d.parse().map_err(|_| format!("invalid dimension `{d}` in goal `{s}`"))?;
        let value = match v {
            "1" => true,
            "0" => false,
            _ => return Err(format!("invalid value `{v}` in goal `{s}`")),
        };
        pairs.push((dim, value));
    }
    if pairs.is_empty() {
        return Err("goal is empty".to_owned());
    }
    PartialAssignment::from_pairs(pairs).map_err(|e| e.to_string())
}

/// Curriculum syntax: goals separated by `;`, e.g. `4;7;8;21`.
pub fn parse_curriculum(s: &str) -> Result<Vec<PartialAssignment>, String> {
    s.split(';').map(str::trim).filter(|g| !g.is_empty()).map(parse_goal).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub env: EnvSelector,
    pub method: Method,
    pub trials: usize,
    pub seed: u64,
    pub goal: Option<PartialAssignment>,
    pub curriculum: Option<Vec<PartialAssignment>>,
}

impl BenchSpec {
    pub fn new(env: EnvSelector, method: Method) -> Self {
        Self {
            env,
            method,
            trials: 1,
            seed: 0,
            goal: None,
            curriculum: None,
        }
    }

    /// Rejects method and environment combinations that cannot run.
    pub fn validate(&self) -> Result<(), BenchError> {
        if let Method::Hierarchical { learn_skills: false, .. } = self.method {
            if !self.env.has_expert_skills() {
                return Err(BenchError::Usage(format!(
                    "no expert skills for environment `{}`; use hierarchical+learn-skills",
                    self.env
                )));
            }
        }
        if matches!(self.curriculum.as_deref(), Some([])) {
            return Err(BenchError::Usage("curriculum override is empty".to_owned()));
        }
        Ok(())
    }

    /// Seed of trial `i`.
    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.seed.wrapping_add(trial as u64)
    }

    pub fn goal_for(&self, env: &Environment) -> Result<PartialAssignment, BenchError> {
        let goal = self.goal.clone().unwrap_or_else(|| self.env.default_goal(env));
        goal.check_dims(env.dims()).map_err(|e| BenchError::Usage(format!("goal: {e}")))?;
        Ok(goal)
    }

    pub fn curriculum_for(&self, env: &Environment, goal: &PartialAssignment) -> Result<Vec<PartialAssignment>, BenchError> {
        let goals = match &self.curriculum {
            Some(c) => c.clone(),
            None if self.goal.is_some() => auto_curriculum(env, goal),
            None => self.env.default_curriculum(env, goal),
        };
        for g in &goals {
            g.check_dims(env.dims()).map_err(|e| BenchError::Usage(format!("curriculum: {e}")))?;
        }
        Ok(goals)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_env_selectors() {
        assert_eq!("crafting".parse::<EnvSelector>().unwrap(), EnvSelector::Crafting);
        assert_eq!(
            "random:100,2,0.2,7".parse::<EnvSelector>().unwrap(),
            EnvSelector::Random { n: 100, lambda: 2.0, noise_p: 0.2, seed: 7 }
        );
        assert_eq!(
            "file:domains/x.json".parse::<EnvSelector>().unwrap(),
            EnvSelector::File("domains/x.json".into())
        );
        for bad in ["", "random:1,2", "random:a,2,0.2,1", "random:10,2,1.5,1", "kitchen"] {
            assert!(bad.parse::<EnvSelector>().is_err(), "{bad}");
        }
    }

    #[test]
    fn parses_methods() {
        assert_eq!(
            "hierarchical+learn-skills+learn-conditions".parse::<Method>().unwrap(),
            Method::Hierarchical { learn_skills: true, learn_conditions: true }
        );
        assert_eq!("mcts:300".parse::<Method>().unwrap(), Method::Mcts { budget: 300 });
        for bad in ["mcts:0", "rrt:x", "hierarchical+fast", "hierarchical+learn-skills+learn-skills", "dqn"] {
            assert!(bad.parse::<Method>().is_err(), "{bad}");
        }
    }

    #[test]
    fn expert_skills_only_on_crafting() {
        let flat = Method::Hierarchical { learn_skills: false, learn_conditions: false };
        assert!(BenchSpec::new(EnvSelector::Crafting, flat).validate().is_ok());
        let random = EnvSelector::Random { n: 10, lambda: 1.0, noise_p: 0.0, seed: 0 };
        assert!(matches!(BenchSpec::new(random, flat).validate(), Err(BenchError::Usage(_))));
    }

    #[test]
    fn goal_syntax() {
        assert_eq!(parse_goal("21").unwrap(), PartialAssignment::single(21, true));
        assert_eq!(
            parse_goal("3=1, 5=0").unwrap(),
            PartialAssignment::from_pairs([(3, true), (5, false)]).unwrap()
        );
        assert!(parse_goal("3=2").is_err());
        assert!(parse_goal("").is_err());
        assert_eq!(parse_curriculum("4;7;21").unwrap().len(), 3);
    }

    #[test]
    fn baking_domain_shape() {
        let env = EnvSelector::Baking.build(0).unwrap();
        assert_eq!(env.dims(), 30);
        assert!((env.mean_condition_count() - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn env_selector_display_round_trips(n in 1usize..200, l in 0u32..5, p in 0u32..=10, seed in any::<u64>()) {
            let sel = EnvSelector::Random { n, lambda: f64::from(l), noise_p: f64::from(p) / 10.0, seed };
            prop_assert_eq!(sel.to_string().parse::<EnvSelector>().unwrap(), sel);
        }

        #[test]
        fn method_display_round_trips(kind in 0u8..6, k in 1usize..100_000) {
            let m = match kind {
                0 => Method::Hierarchical { learn_skills: k % 2 == 0, learn_conditions: k % 3 == 0 },
                1 => Method::GoalRegression,
                2 => Method::Mcts { budget: k },
                3 => Method::Rrt { steps: k },
                _ => Method::QLearning,
            };
            prop_assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
    }
}
