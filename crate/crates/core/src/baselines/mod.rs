//! Comparison planners. MCTS and RRT search with the true transition model,
//! Q-learning learns a value table from interaction. All of them pick one
//! primitive at a time and share the agent's episode protocol.

pub mod mcts;
pub mod qlearn;
pub mod rrt;

use std::time::{Duration, Instant};

pub use mcts::{Mcts, MctsConfig};
pub use qlearn::{QConfig, QLearner, QReport};
pub use rrt::{Rrt, RrtConfig};

use crate::agent::Episode;
use crate::env::Environment;
use crate::error::Result;
use crate::skill::{SkillId, Trajectory};
use crate::state::{PartialAssignment, State};

/// Chooses the next primitive from the current state. `model` gives access
/// to the noiseless effect function only.
pub trait StepPlanner {
    fn next_skill(&mut self, model: &Environment, state: &State, goal: &PartialAssignment) -> SkillId;
}

/// Executes `planner` from the initial state until the goal holds or
/// `max_steps` primitives ran. Planning time excludes environment steps.
pub fn run_episode<P: StepPlanner + ?Sized>(
    planner: &mut P,
    env: &mut Environment,
    goal: &PartialAssignment,
    max_steps: usize,
) -> Result<Episode> {
    goal.check_dims(env.dims())?;
    let registry = env.unknown_registry();
    let mut state = env.initial_state();
    let mut trajectory = Trajectory::new(state.clone());
    let mut plan_time = Duration::ZERO;
    while !state.satisfies(goal) && trajectory.len() < max_steps {
        let t0 = Instant::now();
        let skill = planner.next_skill(env, &state, goal);
        plan_time += t0.elapsed();
        let (post, _) = env.step(&state, skill)?;
        trajectory.record(registry.skill(skill), state, post.clone());
        state = post;
    }
    Ok(Episode {
        success: state.satisfies(goal),
        trajectory,
        plan_time,
    })
}

/// Skills whose simulated execution changes `state`, with the result.
pub(crate) fn applicable(model: &Environment, state: &State) -> Vec<(SkillId, State)> {
    (0..model.num_skills())
        .filter_map(|a| match model.predict(state, a) {
            Ok((next, _)) if next != *state => Some((a, next)),
            _ => None,
        })
        .collect()
}
