//! Curriculum training and evaluation of the hierarchical planning agent.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conditions::{ConditionConfig, ConditionLearner, ConditionModel};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::planner::{self, PlannerConfig};
use crate::skill::{compose_plan_semantics, SkillId, SkillRegistry, Trajectory};
use crate::skill_learn::{self, RegistrySpec};
use crate::state::{PartialAssignment, State};

#[derive(Debug, Clone, PartialEq)]
pub struct Curriculum {
    pub goals: Vec<PartialAssignment>,
    /// Successful episodes required before moving to the next goal.
    pub advance_threshold: usize,
}

impl Curriculum {
    pub fn new(goals: Vec<PartialAssignment>, advance_threshold: usize) -> Result<Self> {
        if advance_threshold == 0 {
            return Err(Error::Rejected("advance threshold must be at least 1".into()));
        }
        Ok(Self {
            goals,
            advance_threshold,
        })
    }

    /// Threshold used in the experiments: one success with known dynamics,
    /// five when conditions are learned.
    pub fn standard(goals: Vec<PartialAssignment>, learn_conditions: bool) -> Self {
        Self {
            goals,
            advance_threshold: if learn_conditions { 5 } else { 1 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentConfig {
    pub learn_skills: bool,
    pub learn_conditions: bool,
    pub planner: PlannerConfig,
    pub max_steps: usize,
    pub stage_episode_cap: usize,
    pub conditions: ConditionConfig,
    pub seed: u64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            learn_skills: true,
            learn_conditions: false,
            planner: PlannerConfig::hierarchical(),
            max_steps: 100,
            stage_episode_cap: 200,
            conditions: ConditionConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub trajectory: Trajectory,
    pub success: bool,
    pub plan_time: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub n_train: usize,
    pub plan_len: usize,
    pub plan_time: Duration,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageReport {
    pub goal: PartialAssignment,
    pub episodes: usize,
    pub successes: usize,
}

/// Successful trajectory a learned skill can be refined from.
#[derive(Debug, Clone)]
struct Candidate {
    start: State,
    tau: Vec<SkillId>,
}

#[derive(Debug, Clone)]
pub struct Agent {
    pub registry: SkillRegistry,
    pub learner: Option<ConditionLearner>,
    pub config: AgentConfig,
    pub n_train: usize,
    rng: ChaCha8Rng,
    candidates: BTreeMap<SkillId, Vec<Candidate>>,
    refits: u64,
}

impl Agent {
    /// Agent starting from `registry`. When conditions are learned, the
    /// registry's primitive conditions are cleared first.
    pub fn new(mut registry: SkillRegistry, config: AgentConfig) -> Self {
        let learner = config.learn_conditions.then(|| {
            for id in 0..registry.n_primitives() {
                registry.set_condition(id, None).expect("primitive id");
            }
            registry.recompute_learned();
            ConditionLearner::new(registry.dims(), registry.n_primitives(), config.conditions)
        });
        Self {
            registry,
            learner,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            n_train: 0,
            candidates: BTreeMap::new(),
            refits: 0,
        }
    }

    /// Agent over `env`'s primitives; conditions are given unless they are
    /// to be learned.
    pub fn for_env(env: &Environment, config: AgentConfig) -> Self {
        let registry = if config.learn_conditions {
            env.unknown_registry()
        } else {
            env.known_registry()
        };
        Self::new(registry, config)
    }

    pub fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    /// Random primitive whose effect does not hold yet.
    fn explore_skill(&mut self, state: &State) -> SkillId {
        let open: Vec<SkillId> = self
            .registry
            .primitives()
            .iter()
            .filter(|s| !state.satisfies(&s.effect))
            .map(|s| s.id)
            .collect();
        match open.choose(&mut self.rng) {
            Some(&id) => id,
            None => planner::random_primitive(&self.registry, &mut self.rng),
        }
    }

    /// Next primitive: the head of a fresh plan, or a random primitive
    /// right after a failed step while conditions are being learned.
    fn next_step(&mut self, state: &State, goal: &PartialAssignment, explore: bool) -> Result<SkillId> {
        if explore {
            return Ok(self.explore_skill(state));
        }
        let plan = planner::plan(state, goal, &self.registry, &self.config.planner, &mut self.rng)?;
        match planner::next_primitive_in(&plan, &self.registry, state)? {
            Some((prim, _)) => Ok(prim),
            None => Ok(planner::random_primitive(&self.registry, &mut self.rng)),
        }
    }

    /// Plans and executes one primitive at a time, replanning after each,
    /// until the goal holds or the step budget is spent. Transitions are
    /// recorded for condition learning when `learn` is set.
    pub fn run_episode(&mut self, env: &mut Environment, goal: &PartialAssignment, learn: bool) -> Result<Episode> {
        goal.check_dims(env.dims())?;
        let mut state = env.initial_state();
        let mut trajectory = Trajectory::new(state.clone());
        let mut plan_time = Duration::ZERO;
        let mut last_failed = false;
        while !state.satisfies(goal) && trajectory.len() < self.config.max_steps {
            let explore = self.learner.is_some() && last_failed;
            let t0 = Instant::now();
            let prim = self.next_step(&state, goal, explore)?;
            plan_time += t0.elapsed();
            let (post, _) = env.step(&state, prim)?;
            if learn {
                if let Some(learner) = &mut self.learner {
                    learner.record(&self.registry, prim, &state, &post)?;
                }
            }
            trajectory.record(self.registry.skill(prim), state, post.clone());
            last_failed = !trajectory.steps.last().is_some_and(|s| s.succeeded);
            state = post;
        }
        Ok(Episode {
            success: state.satisfies(goal),
            trajectory,
            plan_time,
        })
    }

    /// Runs every curriculum stage until it has collected the required
    /// number of successes, learning skills and conditions on the way.
    pub fn train(&mut self, env: &mut Environment, curriculum: &Curriculum) -> Result<Vec<StageReport>> {
        let mut reports = Vec::new();
        for (stage, goal) in curriculum.goals.iter().enumerate() {
            let mut report = StageReport {
                goal: goal.clone(),
                episodes: 0,
                successes: 0,
            };
            while report.successes < curriculum.advance_threshold {
                if report.episodes >= self.config.stage_episode_cap {
                    return Err(Error::StageFailed {
                        stage,
                        episodes: report.episodes,
                    });
                }
                let episode = self.run_episode(env, goal, true)?;
                report.episodes += 1;
                self.n_train += 1;
                self.refit_conditions()?;
                if episode.success {
                    report.successes += 1;
                    if self.config.learn_skills {
                        self.learn_from(&episode.trajectory, goal)?;
                    }
                }
                self.refine_skills()?;
            }
            reports.push(report);
        }
        Ok(reports)
    }

    fn refit_conditions(&mut self) -> Result<()> {
        if let Some(learner) = &mut self.learner {
            let seed = self.config.seed.wrapping_mul(1_000_003).wrapping_add(self.refits);
            self.refits += 1;
            if !learner.refit(seed).is_empty() {
                learner.sync(&mut self.registry)?;
            }
        }
        Ok(())
    }

    fn learn_from(&mut self, trajectory: &Trajectory, goal: &PartialAssignment) -> Result<()> {
        let start = &trajectory.start;
        let effect = skill_learn::intended_effect(start, goal);
        if effect.is_empty() {
            return Ok(());
        }
        let tau = skill_learn::extract_successful(trajectory, &self.registry);
        let candidate = Candidate {
            start: start.clone(),
            tau: tau.clone(),
        };
        match self.registry.find_learned(&effect) {
            Some(id) => {
                // noise can complete a goal the executed steps never reached
                if skill_learn::simulate(&tau, start, &self.registry)?.satisfies(goal) {
                    self.candidates.entry(id).or_default().push(candidate);
                }
            }
            None => match skill_learn::learn_skill(start, goal, tau, &mut self.registry) {
                Ok(id) => {
                    self.candidates.insert(id, vec![candidate]);
                }
                Err(Error::Rejected(_)) => {}
                Err(e) => return Err(e),
            },
        }
        Ok(())
    }

    fn constituents_confident(&self, tau: &[SkillId]) -> bool {
        let Some(learner) = &self.learner else {
            return true;
        };
        match self.registry.flatten(tau) {
            Ok(flat) => flat.iter().all(|&p| learner.is_confident(p)),
            Err(_) => false,
        }
    }

    /// Refines every learned skill, in registration order, from those stored
    /// trajectories whose primitives all have confident conditions.
    /// Plans whose composed condition holds in their start state win over
    /// the rest, then shorter flattened plans. Rerun as conditions change.
    fn refine_skills(&mut self) -> Result<()> {
        let ids: Vec<SkillId> = self.candidates.keys().copied().collect();
        for id in ids {
            let effect = self.registry.skill(id).effect.clone();
            let mut best: Option<((bool, usize), Vec<SkillId>)> = None;
            for c in &self.candidates[&id] {
                if !self.constituents_confident(&c.tau) {
                    continue;
                }
                let Ok(plan) = skill_learn::refine(&c.tau, &effect, &c.start, &self.registry, id) else {
                    continue;
                };
                let Ok(comp) = compose_plan_semantics(&plan, &self.registry) else {
                    continue;
                };
                let key = (!c.start.satisfies(&comp.condition), self.registry.flatten(&plan)?.len());
                if best.as_ref().is_none_or(|b| key < b.0) {
                    best = Some((key, plan));
                }
            }
            if let Some((_, plan)) = best {
                if plan != self.registry.skill(id).steps() {
                    // a rejected plan leaves the skill unchanged
                    let _ = self.registry.set_plan(id, plan);
                }
            }
        }
        Ok(())
    }

    /// One frozen episode on `goal`.
    pub fn evaluate(&mut self, env: &mut Environment, goal: &PartialAssignment) -> Result<RunRecord> {
        let episode = self.run_episode(env, goal, false)?;
        Ok(RunRecord {
            n_train: self.n_train,
            plan_len: episode.trajectory.len(),
            plan_time: episode.plan_time,
            success: episode.success,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            registry: skill_learn::registry_to_spec(&self.registry),
            models: self.learner.as_ref().map(|l| l.models().to_vec()),
            n_train: self.n_train,
        }
    }

    pub fn restore(checkpoint: &Checkpoint, config: AgentConfig) -> Result<Self> {
        let registry = skill_learn::registry_from_spec(&checkpoint.registry)?;
        let learner = match &checkpoint.models {
            Some(models) => {
                let mut l = ConditionLearner::new(registry.dims(), registry.n_primitives(), config.conditions);
                l.set_models(models.clone())?;
                Some(l)
            }
            None => None,
        };
        Ok(Self {
            registry,
            learner,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config: AgentConfig {
                learn_conditions: checkpoint.models.is_some(),
                ..config
            },
            n_train: checkpoint.n_train,
            candidates: BTreeMap::new(),
            refits: 0,
        })
    }
}

/// Trained state saved between training and evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub registry: RegistrySpec,
    #[serde(default)]
    pub models: Option<Vec<ConditionModel>>,
    pub n_train: usize,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
