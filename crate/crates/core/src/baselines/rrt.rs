//! Goal-biased rapidly exploring random tree over binary states.

use std::collections::{HashSet, VecDeque};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{applicable, StepPlanner};
use crate::env::Environment;
use crate::skill::SkillId;
use crate::state::{PartialAssignment, State};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrtConfig {
    /// Tree growth iterations per plan.
    pub steps: usize,
    pub goal_bias: f64,
}

impl RrtConfig {
    pub fn with_steps(steps: usize) -> Self {
        Self {
            steps,
            ..Self::default()
        }
    }
}

impl Default for RrtConfig {
    fn default() -> Self {
        Self {
            steps: 1000,
            goal_bias: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
struct TreeNode {
    state: State,
    parent: usize,
    action: SkillId,
    depth: usize,
}

enum Target<'a> {
    Goal(&'a PartialAssignment),
    State(State),
}

impl Target<'_> {
    fn distance(&self, s: &State) -> usize {
        match self {
            Target::Goal(g) => g.iter().filter(|&(d, v)| s.get(d) != v).count(),
            Target::State(t) => s.hamming(t),
        }
    }
}

/// Plans with a fresh tree and executes it step by step, growing a new tree
/// whenever the observed state leaves the planned path.
#[derive(Debug, Clone)]
pub struct Rrt {
    pub config: RrtConfig,
    rng: ChaCha8Rng,
    /// Remaining (expected state, skill) pairs of the current plan.
    pending: VecDeque<(State, SkillId)>,
}

impl Rrt {
    pub fn new(config: RrtConfig, seed: u64) -> Self {
        Self {
            config,
            rng: ChaCha8Rng::seed_from_u64(seed),
            pending: VecDeque::new(),
        }
    }

    /// Skill sequence from `start` towards `goal`: the tree path to the
    /// first node reaching the goal, else to the node closest to it.
    pub fn plan(&mut self, model: &Environment, start: &State, goal: &PartialAssignment) -> Vec<SkillId> {
        self.plan_states(model, start, goal).into_iter().map(|(_, a)| a).collect()
    }

    fn plan_states(&mut self, model: &Environment, start: &State, goal: &PartialAssignment) -> Vec<(State, SkillId)> {
        let mut tree = vec![TreeNode {
            state: start.clone(),
            parent: 0,
            action: 0,
            depth: 0,
        }];
        let mut seen: HashSet<State> = HashSet::from([start.clone()]);
        let mut reached = start.satisfies(goal).then_some(0);
        for _ in 0..self.config.steps {
            if reached.is_some() {
                break;
            }
            let target = if self.rng.random_bool(self.config.goal_bias) {
                Target::Goal(goal)
            } else {
                let mut s = State::zeros(model.dims());
                for d in 0..model.dims() {
                    s.set(d, self.rng.random_bool(0.5));
                }
                Target::State(s)
            };
            let near = (0..tree.len())
                .min_by_key(|&i| target.distance(&tree[i].state))
                .unwrap_or(0);
            let options = applicable(model, &tree[near].state);
            let Some((a, next)) = options.choose(&mut self.rng).cloned() else {
                continue;
            };
            if !seen.insert(next.clone()) {
                continue;
            }
            tree.push(TreeNode {
                depth: tree[near].depth + 1,
                state: next,
                parent: near,
                action: a,
            });
            if tree[tree.len() - 1].state.satisfies(goal) {
                reached = Some(tree.len() - 1);
            }
        }
        let end = reached.unwrap_or_else(|| {
            let g = Target::Goal(goal);
            (0..tree.len())
                .min_by_key(|&i| (g.distance(&tree[i].state), tree[i].depth))
                .unwrap_or(0)
        });
        let mut path = Vec::new();
        let mut n = end;
        while n != 0 {
            let p = tree[n].parent;
            path.push((tree[p].state.clone(), tree[n].action));
            n = p;
        }
        path.reverse();
        path
    }
}

impl StepPlanner for Rrt {
    fn next_skill(&mut self, model: &Environment, state: &State, goal: &PartialAssignment) -> SkillId {
        if self.pending.front().is_none_or(|(s, _)| s != state) {
            self.pending = self.plan_states(model, state, goal).into();
        }
        match self.pending.pop_front() {
            Some((_, a)) => a,
            None => self.rng.random_range(0..model.num_skills().max(1)),
        }
    }
}
