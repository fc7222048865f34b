//! Tabular Q-learning with an epsilon-greedy behaviour policy.

use std::collections::{HashMap, VecDeque};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::StepPlanner;
use crate::agent::Episode;
use crate::env::Environment;
use crate::error::Result;
use crate::skill::{SkillId, Trajectory};
use crate::state::{PartialAssignment, State};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QConfig {
    pub gamma: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub max_episodes: usize,
    pub max_steps: usize,
    /// Training stops once `required` of the last `window` episodes
    /// reached the goal.
    pub window: usize,
    pub required: usize,
}

impl Default for QConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            alpha: 0.1,
            epsilon: 0.2,
            max_episodes: 5000,
            max_steps: 100,
            window: 20,
            required: 19,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QReport {
    pub episodes: usize,
    pub converged: bool,
    /// Executed lengths of the last `window` training episodes.
    pub recent_lengths: Vec<usize>,
}

impl QReport {
    pub fn mean_recent_length(&self) -> f64 {
        if self.recent_lengths.is_empty() {
            return 0.0;
        }
        self.recent_lengths.iter().sum::<usize>() as f64 / self.recent_lengths.len() as f64
    }
}

#[derive(Debug, Clone)]
pub struct QLearner {
    pub config: QConfig,
    table: HashMap<State, Vec<f64>>,
    actions: usize,
    rng: ChaCha8Rng,
}

impl QLearner {
    pub fn new(actions: usize, config: QConfig, seed: u64) -> Self {
        Self {
            config,
            table: HashMap::new(),
            actions,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Action value, 0 for unseen pairs.
    pub fn value(&self, state: &State, action: SkillId) -> f64 {
        self.table.get(state).map_or(0.0, |q| q[action])
    }

    pub fn states_seen(&self) -> usize {
        self.table.len()
    }

    /// Highest-valued action, uniformly among ties.
    pub fn greedy(&mut self, state: &State) -> SkillId {
        let Some(q) = self.table.get(state) else {
            return self.rng.random_range(0..self.actions);
        };
        let top = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let best: Vec<SkillId> = (0..self.actions).filter(|&a| q[a] == top).collect();
        best[self.rng.random_range(0..best.len())]
    }

    fn choose(&mut self, state: &State, epsilon: f64) -> SkillId {
        if epsilon > 0.0 && self.rng.random_bool(epsilon) {
            self.rng.random_range(0..self.actions)
        } else {
            self.greedy(state)
        }
    }

    fn update(&mut self, s: &State, a: SkillId, r: f64, next: &State, terminal: bool) {
        let future = if terminal {
            0.0
        } else {
            self.table
                .get(next)
                .map_or(0.0, |q| q.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        };
        let (alpha, gamma, k) = (self.config.alpha, self.config.gamma, self.actions);
        let q = self.table.entry(s.clone()).or_insert_with(|| vec![0.0; k]);
        q[a] += alpha * (r + gamma * future - q[a]);
    }

    /// One episode of the behaviour policy, updating the table on the way.
    pub fn behaviour_episode(&mut self, env: &mut Environment, goal: &PartialAssignment) -> Result<Episode> {
        self.episode(env, goal, self.config.epsilon)
    }

    /// One episode of greedy action selection. The table keeps learning:
    /// frozen, it ranks every untried action (still 0) above all tried ones
    /// and the policy wanders.
    pub fn greedy_episode(&mut self, env: &mut Environment, goal: &PartialAssignment) -> Result<Episode> {
        self.episode(env, goal, 0.0)
    }

    fn episode(&mut self, env: &mut Environment, goal: &PartialAssignment, epsilon: f64) -> Result<Episode> {
        goal.check_dims(env.dims())?;
        let registry = env.unknown_registry();
        let mut s = env.initial_state();
        let mut trajectory = Trajectory::new(s.clone());
        let mut plan_time = Duration::ZERO;
        while !s.satisfies(goal) && trajectory.len() < self.config.max_steps {
            let t0 = Instant::now();
            let a = self.choose(&s, epsilon);
            plan_time += t0.elapsed();
            let (next, _) = env.step(&s, a)?;
            let done = next.satisfies(goal);
            self.update(&s, a, if done { 0.0 } else { -1.0 }, &next, done);
            trajectory.record(registry.skill(a), s, next.clone());
            s = next;
        }
        Ok(Episode {
            success: s.satisfies(goal),
            trajectory,
            plan_time,
        })
    }

    /// Learns from episodes on `env` with reward 0 on reaching `goal` and -1
    /// otherwise, until the success rule or the episode cap.
    pub fn train(&mut self, env: &mut Environment, goal: &PartialAssignment) -> Result<QReport> {
        let mut recent: VecDeque<(bool, usize)> = VecDeque::new();
        let mut episodes = 0;
        let mut converged = false;
        while episodes < self.config.max_episodes {
            let ep = self.behaviour_episode(env, goal)?;
            episodes += 1;
            recent.push_back((ep.success, ep.trajectory.len()));
            if recent.len() > self.config.window {
                recent.pop_front();
            }
            if recent.len() == self.config.window && recent.iter().filter(|r| r.0).count() >= self.config.required {
                converged = true;
                break;
            }
        }
        Ok(QReport {
            episodes,
            converged,
            recent_lengths: recent.iter().map(|r| r.1).collect(),
        })
    }
}

/// Greedy policy over the frozen table.
impl StepPlanner for QLearner {
    fn next_skill(&mut self, _model: &Environment, state: &State, _goal: &PartialAssignment) -> SkillId {
        self.greedy(state)
    }
}
