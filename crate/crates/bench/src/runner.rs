//! Trial execution.

use rayon::prelude::*;
use serde::Serialize;

use hplan_core::agent::{Agent, AgentConfig, Curriculum, RunRecord};
use hplan_core::baselines::{self, Mcts, MctsConfig, QConfig, QLearner, Rrt, RrtConfig};
use hplan_core::env::{crafting_expert_registry, Environment};
use hplan_core::planner::PlannerConfig;
use hplan_core::{Error, PartialAssignment, SkillRegistry};

use crate::spec::{BenchSpec, Method};
use crate::BenchError;

/// Executed-skill budget of every evaluation episode.
pub const MAX_STEPS: usize = 100;

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub method: String,
    pub env: String,
    pub trial: usize,
    pub seed: u64,
    pub n_train: usize,
    pub plan_len: usize,
    pub plan_time_ms: f64,
    pub success: bool,
}

impl TrialRow {
    fn new(spec: &BenchSpec, trial: usize, record: &RunRecord) -> Self {
        Self {
            method: spec.method.to_string(),
            env: spec.env.to_string(),
            trial,
            seed: spec.trial_seed(trial),
            n_train: record.n_train,
            plan_len: record.plan_len,
            plan_time_ms: record.plan_time.as_secs_f64() * 1e3,
            success: record.success,
        }
    }
}

/// Runs all trials, in parallel, returning rows in trial order.
pub fn run_trials(spec: &BenchSpec) -> Result<Vec<TrialRow>, BenchError> {
    spec.validate()?;
    (0..spec.trials).into_par_iter().map(|t| run_trial(spec, t)).collect()
}

pub fn run_trial(spec: &BenchSpec, trial: usize) -> Result<TrialRow, BenchError> {
    let seed = spec.trial_seed(trial);
    let mut env = spec.env.build(seed)?;
    let goal = spec.goal_for(&env)?;
    let record = match spec.method {
        Method::Hierarchical { .. } | Method::GoalRegression => {
            let mut agent = trained_agent(spec, &mut env, &goal, seed)?;
            agent.evaluate(&mut env, &goal)?
        }
        Method::Mcts { budget } => {
            let mut mcts = Mcts::new(MctsConfig::with_budget(budget), seed);
            record_of(0, baselines::run_episode(&mut mcts, &mut env, &goal, MAX_STEPS)?)
        }
        Method::Rrt { steps } => {
            let mut rrt = Rrt::new(RrtConfig::with_steps(steps), seed);
            record_of(0, baselines::run_episode(&mut rrt, &mut env, &goal, MAX_STEPS)?)
        }
        Method::QLearning => {
            let config = QConfig {
                max_steps: MAX_STEPS,
                ..QConfig::default()
            };
            let mut q = QLearner::new(env.num_skills(), config, seed);
            let report = q.train(&mut env, &goal)?;
            record_of(report.episodes, q.greedy_episode(&mut env, &goal)?)
        }
    };
    Ok(TrialRow::new(spec, trial, &record))
}

fn record_of(n_train: usize, episode: hplan_core::agent::Episode) -> RunRecord {
    RunRecord {
        n_train,
        plan_len: episode.trajectory.len(),
        plan_time: episode.plan_time,
        success: episode.success,
    }
}

/// Agent for a planner method, trained on the bench curriculum when it
/// learns anything. A stage that never completes ends training early; the
/// agent is still returned so the trial can be evaluated.
pub fn trained_agent(
    spec: &BenchSpec,
    env: &mut Environment,
    goal: &PartialAssignment,
    seed: u64,
) -> Result<Agent, BenchError> {
    let (learn_skills, learn_conditions, planner) = match spec.method {
        Method::Hierarchical { learn_skills, learn_conditions } => {
            (learn_skills, learn_conditions, PlannerConfig::hierarchical())
        }
        Method::GoalRegression => (false, false, PlannerConfig::flat()),
        _ => {
            return Err(BenchError::Usage(format!(
                "method `{}` has no skill registry",
                spec.method
            )))
        }
    };
    let config = AgentConfig {
        learn_skills,
        learn_conditions,
        planner,
        max_steps: MAX_STEPS,
        seed,
        ..AgentConfig::default()
    };
    let expert = matches!(spec.method, Method::Hierarchical { learn_skills: false, .. });
    let mut agent = if expert {
        Agent::new(crafting_expert_registry(), config)
    } else {
        Agent::for_env(env, config)
    };
    if learn_skills || learn_conditions {
        let goals = spec.curriculum_for(env, goal)?;
        let curriculum = Curriculum::standard(goals, learn_conditions);
        match agent.train(env, &curriculum) {
            Ok(_) | Err(Error::StageFailed { .. }) => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(agent)
}

/// One row of the learned-versus-real condition table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionRow {
    pub skill: usize,
    pub effect: String,
    pub real: String,
    pub learned: String,
    pub confident: bool,
    pub exact: bool,
    pub subset: bool,
}

/// Condition text as in the comparison table: `None` for an empty
/// condition, `unknown` when nothing has been learned.
pub fn condition_text(c: Option<&PartialAssignment>) -> String {
    match c {
        None => "unknown".to_owned(),
        Some(c) if c.is_empty() => "None".to_owned(),
        Some(c) => c.iter().map(|(d, v)| format!("s{d}={}", u8::from(v))).collect::<Vec<_>>().join(", "),
    }
}

/// Trains with condition learning and compares each primitive's learned
/// condition (best estimate, also before it is trusted) with the real one.
pub fn condition_rows(spec: &BenchSpec) -> Result<(Vec<ConditionRow>, usize), BenchError> {
    let mut spec = spec.clone();
    if let Method::Hierarchical { learn_conditions, .. } = &mut spec.method {
        *learn_conditions = true;
    } else {
        return Err(BenchError::Usage(format!(
            "condition learning needs a hierarchical method, got `{}`",
            spec.method
        )));
    }
    spec.validate()?;
    let seed = spec.trial_seed(0);
    let mut env = spec.env.build(seed)?;
    let goal = spec.goal_for(&env)?;
    let agent = trained_agent(&spec, &mut env, &goal, seed)?;
    let learner = agent.learner.as_ref().expect("conditions are learned");
    let rows = env
        .primitives()
        .iter()
        .enumerate()
        .map(|(id, p)| {
            let model = learner.model(id);
            let est = model.estimate();
            ConditionRow {
                skill: id,
                effect: condition_text(Some(&p.effect)),
                real: condition_text(Some(&p.condition)),
                learned: condition_text(est.as_ref()),
                confident: model.confident,
                exact: est.as_ref() == Some(&p.condition),
                subset: est.as_ref().is_some_and(|c| c.is_subset_of(&p.condition)),
            }
        })
        .collect();
    Ok((rows, agent.n_train))
}

/// Trains as configured (first trial seed) and returns the skill registry.
pub fn trained_registry(spec: &BenchSpec) -> Result<SkillRegistry, BenchError> {
    spec.validate()?;
    let seed = spec.trial_seed(0);
    let mut env = spec.env.build(seed)?;
    let goal = spec.goal_for(&env)?;
    Ok(trained_agent(spec, &mut env, &goal, seed)?.registry)
}
