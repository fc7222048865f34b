//! UCT tree search over simulated skill executions.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::StepPlanner;
use crate::env::Environment;
use crate::skill::SkillId;
use crate::state::{PartialAssignment, State};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MctsConfig {
    /// Simulations per decision.
    pub budget: usize,
    pub exploration: f64,
    /// Depth cap of a simulation, counted from the root.
    pub rollout_depth: usize,
}

impl MctsConfig {
    pub fn with_budget(budget: usize) -> Self {
        Self {
            budget: budget.max(1),
            ..Self::default()
        }
    }
}

impl Default for MctsConfig {
    fn default() -> Self {
        Self {
            budget: 100,
            exploration: std::f64::consts::FRAC_1_SQRT_2,
            rollout_depth: 100,
        }
    }
}

#[derive(Debug)]
struct Node {
    state: State,
    parent: Option<usize>,
    action: SkillId,
    depth: usize,
    children: Vec<usize>,
    untried: Vec<SkillId>,
    visits: u32,
    value: f64,
    terminal: bool,
}

#[derive(Debug, Clone)]
pub struct Mcts {
    pub config: MctsConfig,
    rng: ChaCha8Rng,
}

impl Mcts {
    pub fn new(config: MctsConfig, seed: u64) -> Self {
        Self {
            config,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn node(&mut self, model: &Environment, state: State, parent: Option<usize>, action: SkillId, depth: usize, goal: &PartialAssignment) -> Node {
        let terminal = state.satisfies(goal) || depth >= self.config.rollout_depth;
        let mut untried: Vec<SkillId> = if terminal { Vec::new() } else { (0..model.num_skills()).collect() };
        untried.shuffle(&mut self.rng);
        Node {
            state,
            parent,
            action,
            depth,
            children: Vec::new(),
            untried,
            visits: 0,
            value: 0.0,
            terminal,
        }
    }

    fn uct_child(&self, tree: &[Node], n: usize) -> usize {
        let ln = f64::from(tree[n].visits.max(1)).ln();
        let score = |c: usize| {
            let v = f64::from(tree[c].visits.max(1));
            tree[c].value / v + self.config.exploration * (ln / v).sqrt()
        };
        // first maximum in expansion order
        let mut best = tree[n].children[0];
        for &c in &tree[n].children[1..] {
            if score(c) > score(best) {
                best = c;
            }
        }
        best
    }

    /// Uniform random skills from `state` until the goal holds or the depth
    /// cap is hit. Reward 1 on the goal, 0 otherwise.
    fn rollout(&mut self, model: &Environment, mut state: State, depth: usize, goal: &PartialAssignment) -> f64 {
        for _ in depth..self.config.rollout_depth {
            if state.satisfies(goal) {
                return 1.0;
            }
            let a = self.rng.random_range(0..model.num_skills());
            if let Ok((next, _)) = model.predict(&state, a) {
                state = next;
            }
        }
        f64::from(u8::from(state.satisfies(goal)))
    }

    /// Runs the configured number of simulations from `state` and returns
    /// the most visited root action.
    pub fn search(&mut self, model: &Environment, state: &State, goal: &PartialAssignment) -> SkillId {
        if model.num_skills() == 0 {
            return 0;
        }
        let root = self.node(model, state.clone(), None, 0, 0, goal);
        let mut tree = vec![root];
        for _ in 0..self.config.budget {
            let mut n = 0;
            while tree[n].untried.is_empty() && !tree[n].terminal && !tree[n].children.is_empty() {
                n = self.uct_child(&tree, n);
            }
            if let Some(a) = tree[n].untried.pop() {
                let next = model.predict(&tree[n].state, a).map_or_else(|_| tree[n].state.clone(), |r| r.0);
                let depth = tree[n].depth + 1;
                let child = self.node(model, next, Some(n), a, depth, goal);
                tree.push(child);
                let id = tree.len() - 1;
                tree[n].children.push(id);
                n = id;
            }
            let reward = self.rollout(model, tree[n].state.clone(), tree[n].depth, goal);
            let mut cur = Some(n);
            while let Some(c) = cur {
                tree[c].visits += 1;
                tree[c].value += reward;
                cur = tree[c].parent;
            }
        }
        tree[0]
            .children
            .iter()
            .map(|&c| &tree[c])
            .max_by(|a, b| {
                a.visits
                    .cmp(&b.visits)
                    .then(a.value.total_cmp(&b.value))
                    .then(b.action.cmp(&a.action))
            })
            .map_or(0, |c| c.action)
    }
}

impl StepPlanner for Mcts {
    fn next_skill(&mut self, model: &Environment, state: &State, goal: &PartialAssignment) -> SkillId {
        self.search(model, state, goal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::run_episode;
    use crate::env::{crafting_env, crafting_goal, PrimitiveSkill};

    #[test]
    fn single_skill_domain() {
        let env = Environment::new(
            "one",
            1,
            vec![PrimitiveSkill {
                effect: PartialAssignment::single(0, true),
                condition: PartialAssignment::new(),
            }],
            0.0,
            0,
        )
        .unwrap();
        let mut mcts = Mcts::new(MctsConfig::with_budget(5), 0);
        assert_eq!(mcts.search(&env, &State::zeros(1), &PartialAssignment::single(0, true)), 0);
    }

    #[test]
    fn finds_the_goal_skill_within_the_depth_cap() {
        let env = crafting_env();
        // everything but s21 is already done
        let mut s = State::zeros(22);
        for d in [0, 1, 4, 7, 8, 9, 11, 12, 14, 16, 17, 18] {
            s.set(d, true);
        }
        // with a one-step cap only the goal skill earns reward
        let config = MctsConfig {
            rollout_depth: 1,
            ..MctsConfig::with_budget(100)
        };
        let mut mcts = Mcts::new(config, 3);
        assert_eq!(mcts.search(&env, &s, &crafting_goal()), 21);
    }

    #[test]
    fn crafting_episode_is_longer_than_expert() {
        let mut env = crafting_env();
        let mut mcts = Mcts::new(MctsConfig::with_budget(100), 0);
        let ep = run_episode(&mut mcts, &mut env, &crafting_goal(), 100).unwrap();
        assert!(ep.trajectory.len() > 13);
    }
}
