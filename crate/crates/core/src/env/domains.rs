//! Built-in domains and their curricula.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::{Environment, PrimitiveSkill};
use crate::skill::{SkillId, SkillRegistry};
use crate::state::PartialAssignment;

fn chain(n: usize, conditions: &[&[usize]], name: &str) -> Environment {
    assert_eq!(conditions.len(), n);
    let primitives = conditions
        .iter()
        .enumerate()
        .map(|(i, c)| PrimitiveSkill {
            effect: PartialAssignment::single(i, true),
            condition: PartialAssignment::ones(c.iter().copied()),
        })
        .collect();
    Environment::new(name, n, primitives, 0.0, 0).expect("built-in domain is valid")
}

/// Skill `i` sets `s_i <- 1`; conditions are the ground truth of the
/// 22-node crafting dependency graph.
const CRAFTING_CONDITIONS: [&[usize]; 22] = [
    &[],
    &[],
    &[],
    &[0],
    &[0],
    &[1, 2],
    &[0, 2],
    &[1, 4],
    &[7],
    &[7],
    &[7],
    &[8],
    &[9, 11],
    &[10, 11],
    &[4, 12],
    &[13],
    &[14],
    &[14],
    &[11, 16],
    &[13, 17],
    &[18],
    &[17, 18],
];

/// The deterministic 22-dimensional crafting domain.
pub fn crafting_env() -> Environment {
    chain(22, &CRAFTING_CONDITIONS, "crafting")
}

pub fn crafting_goal() -> PartialAssignment {
    PartialAssignment::single(21, true)
}

/// Curriculum stages (one learned skill each) followed by the evaluation goal.
pub fn crafting_curriculum() -> Vec<PartialAssignment> {
    [4, 7, 8, 11, 12, 14, 18, 21, 21]
        .into_iter()
        .map(|d| PartialAssignment::single(d, true))
        .collect()
}

/// One step of an expert skill plan: a primitive id, or the learned skill
/// whose effect is `s_d <- 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpertStep {
    Primitive(usize),
    Skill(usize),
}

use ExpertStep::{Primitive as P, Skill as L};

/// Hierarchical crafting skills as `(effect dimension, plan)`, in
/// registration order.
pub const CRAFTING_EXPERT_PLANS: [(usize, &[ExpertStep]); 8] = [
    (4, &[P(0), P(4)]),
    (7, &[P(1), L(4), P(7)]),
    (8, &[L(7), P(8)]),
    (11, &[L(8), P(11)]),
    (12, &[L(11), P(9), P(12)]),
    (14, &[L(12), P(14)]),
    (18, &[L(14), P(16), P(18)]),
    (21, &[L(18), P(17), P(21)]),
];

/// Crafting primitives (known conditions) plus the expert skill hierarchy.
pub fn crafting_expert_registry() -> SkillRegistry {
    let mut reg = crafting_env().known_registry();
    for (effect_dim, plan) in CRAFTING_EXPERT_PLANS {
        let steps: Vec<SkillId> = plan
            .iter()
            .map(|s| match *s {
                P(id) => id,
                L(d) => reg
                    .find_learned(&PartialAssignment::single(d, true))
                    .expect("expert skills are listed bottom-up"),
            })
            .collect();
        reg.add_learned(steps, PartialAssignment::single(effect_dim, true))
            .expect("expert plans are sound");
    }
    reg
}

/// Six-skill drawer tidy-up domain: open drawer (0), pick box (1), push box
/// aside (2), store pen (3), store cup (4), close drawer (5). Storing either
/// item needs the box pushed aside; closing needs the pen stored.
pub fn drawer_env() -> Environment {
    chain(6, &[&[], &[], &[], &[2], &[2], &[3]], "drawer")
}

pub fn drawer_goal() -> PartialAssignment {
    PartialAssignment::ones(0..6)
}

pub fn drawer_curriculum() -> Vec<PartialAssignment> {
    vec![
        PartialAssignment::single(3, true),
        PartialAssignment::single(5, true),
        drawer_goal(),
    ]
}

/// Random DAG domain: skill `i` sets `s_i <- 1` and is conditioned on
/// `min(Poisson(lambda), i)` distinct earlier dimensions.
pub fn random_env(n: usize, lambda: f64, noise_p: f64, seed: u64) -> Environment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poisson = (lambda > 0.0).then(|| Poisson::new(lambda).expect("lambda is positive"));
    let mut conditions: Vec<Vec<usize>> = Vec::with_capacity(n);
    for i in 0..n {
        let k = poisson.as_ref().map_or(0, |p| p.sample(&mut rng) as usize).min(i);
        let mut c = rand::seq::index::sample(&mut rng, i.max(1), k).into_vec();
        c.sort_unstable();
        conditions.push(c);
    }
    let primitives = conditions
        .into_iter()
        .enumerate()
        .map(|(i, c)| PrimitiveSkill {
            effect: PartialAssignment::single(i, true),
            condition: PartialAssignment::ones(c),
        })
        .collect();
    Environment::new(format!("random-{n}-{lambda}-{noise_p}-{seed}"), n, primitives, noise_p, seed)
        .expect("generated graphs are acyclic by construction")
}

/// Goal reached by the skill with the most ancestors (lowest id on ties).
pub fn deepest_goal(env: &Environment) -> PartialAssignment {
    let anc = env.ancestors();
    let best = (0..env.num_skills())
        .max_by_key(|&i| (anc[i].len(), std::cmp::Reverse(i)))
        .unwrap_or(0);
    env.primitive(best)
        .map(|p| p.effect.clone())
        .unwrap_or_default()
}

/// Curriculum for generated domains: the non-root skills needed for `goal`,
/// ordered by increasing number of ancestors, keeping every second one, then
/// the goal itself.
pub fn auto_curriculum(env: &Environment, goal: &PartialAssignment) -> Vec<PartialAssignment> {
    let anc = env.ancestors();
    let producers: Vec<SkillId> = (0..env.num_skills())
        .filter(|&i| env.primitives()[i].effect.is_subset_of(goal))
        .collect();
    let mut needed = vec![false; env.num_skills()];
    for &p in &producers {
        for &a in &anc[p] {
            needed[a] = true;
        }
    }
    let mut nodes: Vec<SkillId> = (0..env.num_skills())
        .filter(|&i| needed[i] && !anc[i].is_empty())
        .collect();
    nodes.sort_by_key(|&i| (anc[i].len(), i));
    let mut goals: Vec<PartialAssignment> = nodes
        .into_iter()
        .step_by(2)
        .map(|i| env.primitives()[i].effect.clone())
        .collect();
    goals.push(goal.clone());
    goals
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{load_env, save_env};
    use crate::state::State;

    #[test]
    fn crafting_matches_published_statistics() {
        let env = crafting_env();
        assert_eq!(env.dims(), 22);
        assert_eq!(1u64 << env.dims(), 4_194_304);
        let mean = env.mean_condition_count();
        assert!((mean - 1.3).abs() < 0.05, "mean conditions {mean}");
        assert_eq!(env.noise_p(), 0.0);
        for i in 0..3 {
            assert!(env.primitives()[i].condition.is_empty());
        }
        assert_eq!(
            env.primitives()[21].condition,
            PartialAssignment::ones([17, 18])
        );
    }

    #[test]
    fn crafting_goal_needs_thirteen_skills() {
        let env = crafting_env();
        let anc = env.ancestors();
        let mut needed = anc[21].clone();
        needed.push(21);
        needed.sort_unstable();
        assert_eq!(needed, vec![0, 1, 4, 7, 8, 9, 11, 12, 14, 16, 17, 18, 21]);
    }

    #[test]
    fn drawer_admits_published_plan() {
        let mut env = drawer_env();
        let mut s = env.initial_state();
        for a in [0, 1, 2, 4, 3, 5] {
            let (next, ok) = env.step(&s, a).unwrap();
            assert!(ok, "step {a} failed");
            s = next;
        }
        assert!(s.satisfies(&drawer_goal()));
        // storing the pen before pushing the box aside fails
        let mut s = env.initial_state();
        for a in [0, 1] {
            s = env.step(&s, a).unwrap().0;
        }
        let (_, ok) = env.step(&s, 3).unwrap();
        assert!(!ok);
    }

    #[test]
    fn random_env_is_seed_deterministic() {
        let a = random_env(100, 2.0, 0.2, 7).to_spec();
        let b = random_env(100, 2.0, 0.2, 7).to_spec();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let c = random_env(100, 2.0, 0.2, 8).to_spec();
        assert_ne!(a, c);
    }

    #[test]
    fn random_env_topological_order_is_identity_compatible() {
        let env = random_env(60, 3.0, 0.0, 3);
        for (i, p) in env.primitives().iter().enumerate() {
            assert!(p.condition.dims().all(|d| d < i));
        }
        assert!(env.primitives()[0].condition.is_empty());
    }

    #[test]
    fn random_env_mean_condition_count_near_lambda() {
        // skills with index >= 10 are rarely truncated by min(k, i)
        let mut total = 0usize;
        let mut count = 0usize;
        for seed in 0..50 {
            let env = random_env(100, 2.0, 0.0, seed);
            for p in &env.primitives()[10..] {
                total += p.condition.len();
                count += 1;
            }
        }
        let mean = total as f64 / count as f64;
        assert!((mean - 2.0).abs() <= 0.2, "mean {mean}");
    }

    #[test]
    fn zero_lambda_has_no_conditions() {
        let mut env = random_env(20, 0.0, 0.0, 1);
        assert!(env.primitives().iter().all(|p| p.condition.is_empty()));
        let mut s = env.initial_state();
        for a in (0..20).rev() {
            let (next, ok) = env.step(&s, a).unwrap();
            assert!(ok);
            s = next;
        }
        assert_eq!(s, State::from_bits(&[1; 20]));
    }

    #[test]
    fn single_node_random_env() {
        let env = random_env(1, 2.0, 0.0, 9);
        assert_eq!(env.num_skills(), 1);
        assert!(env.primitives()[0].condition.is_empty());
    }

    #[test]
    fn expert_registry_flattens_to_published_plan() {
        let reg = crafting_expert_registry();
        let s21 = reg.find_learned(&crafting_goal()).unwrap();
        assert_eq!(
            reg.flatten(&[s21]).unwrap(),
            vec![1, 0, 4, 7, 8, 11, 9, 12, 14, 16, 18, 17, 21]
        );
        assert!(reg.skill(s21).condition.as_ref().unwrap().is_empty());
        assert!(reg.depth(s21) >= 6);
    }

    #[test]
    fn auto_curriculum_ends_with_goal() {
        let env = random_env(100, 2.0, 0.2, 0);
        let goal = deepest_goal(&env);
        let cur = auto_curriculum(&env, &goal);
        assert_eq!(cur.last(), Some(&goal));
        assert!(cur.len() >= 2);
        let anc = env.ancestors();
        // stage goals are ordered by increasing ancestor count
        let depth = |g: &PartialAssignment| anc[g.dims().next().unwrap()].len();
        assert!(cur.windows(2).all(|w| depth(&w[0]) <= depth(&w[1])));
    }

    #[test]
    fn crafting_round_trips_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("crafting.json");
        let env = crafting_env();
        save_env(&env, &path).unwrap();
        let back = load_env(&path, 0).unwrap();
        assert_eq!(back.to_spec(), env.to_spec());
    }
}
