//! Recursive goal-regression planning over a skill registry.
//!
//! Starting from the goal, the planner picks the skill whose effect is
//! closest to it. If that skill is expected to succeed in the current state
//! the plan is that skill alone; otherwise the skill's condition becomes the
//! next goal, one recursion level deeper. Returned plans are lazy: learned
//! skills stay unexpanded until execution reaches them.

use rand::Rng;

use crate::error::{Error, Result};
use crate::skill::{Skill, SkillId, SkillRegistry};
use crate::state::{PartialAssignment, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlannerConfig {
    pub rec_max: usize,
    /// Restrict candidates to primitive skills (flat goal regression).
    pub primitives_only: bool,
}

impl PlannerConfig {
    pub const HIERARCHICAL_REC_MAX: usize = 3;
    pub const FLAT_REC_MAX: usize = 100;

    pub fn hierarchical() -> Self {
        Self {
            rec_max: Self::HIERARCHICAL_REC_MAX,
            primitives_only: false,
        }
    }

    pub fn flat() -> Self {
        Self {
            rec_max: Self::FLAT_REC_MAX,
            primitives_only: true,
        }
    }
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self::hierarchical()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Matched,
    Fallback,
}

/// A plan whose steps may be unexpanded learned skills.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LazyPlan {
    steps: Vec<(SkillId, Provenance)>,
}

impl LazyPlan {
    pub fn new(steps: Vec<(SkillId, Provenance)>) -> Self {
        Self { steps }
    }

    pub fn matched(ids: impl IntoIterator<Item = SkillId>) -> Self {
        Self {
            steps: ids.into_iter().map(|id| (id, Provenance::Matched)).collect(),
        }
    }

    pub fn ids(&self) -> Vec<SkillId> {
        self.steps.iter().map(|s| s.0).collect()
    }

    pub fn steps(&self) -> &[(SkillId, Provenance)] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn has_fallback(&self) -> bool {
        self.steps.iter().any(|s| s.1 == Provenance::Fallback)
    }

    /// State-independent full expansion to primitive skills.
    pub fn flatten(&self, registry: &SkillRegistry) -> Result<Vec<SkillId>> {
        registry.flatten(&self.ids())
    }

    /// Primitive sequence obtained by repeatedly taking
    /// [`next_primitive_in`] and applying each primitive's effect, i.e. the
    /// execution order in a noiseless world where every step succeeds.
    pub fn flatten_from(&self, registry: &SkillRegistry, state: &State) -> Result<Vec<SkillId>> {
        let mut out = Vec::new();
        let mut plan = self.clone();
        let mut state = state.clone();
        while let Some((prim, rest)) = next_primitive_in(&plan, registry, &state)? {
            state.apply_mut(&registry.skill(prim).effect);
            out.push(prim);
            plan = rest;
        }
        Ok(out)
    }
}

/// Closeness of a skill's effect to a goal. Higher is better.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EffectScore {
    /// Goal entries not yet true in the state that the skill's effect or
    /// side effect would make true.
    pub satisfied: usize,
    /// Effect entries that contradict the goal.
    pub contradictions: usize,
}

impl PartialOrd for EffectScore {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for EffectScore {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.satisfied
            .cmp(&other.satisfied)
            .then(other.contradictions.cmp(&self.contradictions))
    }
}

pub fn score_effect(skill: &Skill, goal: &PartialAssignment, state: &State) -> EffectScore {
    let satisfied = goal
        .iter()
        .filter(|&(d, v)| d >= state.len() || state.get(d) != v)
        .filter(|&(d, v)| {
            skill.effect.get(d).or_else(|| skill.side_effect.get(d)) == Some(v)
        })
        .count();
    let contradictions = skill
        .effect
        .iter()
        .filter(|&(d, v)| goal.get(d) == Some(!v))
        .count();
    EffectScore {
        satisfied,
        contradictions,
    }
}

/// Best candidate for `goal`: highest effect score, then skills expected to
/// succeed in `state`, then shorter flattened plans, then lower ids.
fn select<'r>(
    registry: &'r SkillRegistry,
    config: &PlannerConfig,
    state: &State,
    goal: &PartialAssignment,
) -> &'r Skill {
    let pool = if config.primitives_only {
        registry.primitives()
    } else {
        registry.all()
    };
    pool.iter()
        .max_by(|a, b| {
            let ka = (score_effect(a, goal, state), a.expected_to_succeed(state));
            let kb = (score_effect(b, goal, state), b.expected_to_succeed(state));
            ka.cmp(&kb)
                .then(b.flat_len().cmp(&a.flat_len()))
                .then(b.id.cmp(&a.id))
        })
        .expect("registry is not empty")
}

/// Uniformly random primitive skill.
pub fn random_primitive<R: Rng + ?Sized>(registry: &SkillRegistry, rng: &mut R) -> SkillId {
    rng.random_range(0..registry.n_primitives())
}

/// Goal-regression plan for `goal` from `state`.
pub fn plan<R: Rng + ?Sized>(
    state: &State,
    goal: &PartialAssignment,
    registry: &SkillRegistry,
    config: &PlannerConfig,
    rng: &mut R,
) -> Result<LazyPlan> {
    if registry.n_primitives() == 0 {
        return Err(Error::EmptyRegistry);
    }
    goal.check_dims(state.len())?;
    let mut reversed = Vec::new();
    let mut goal = goal.clone();
    let mut rec = 0;
    loop {
        if rec > config.rec_max || state.satisfies(&goal) {
            reversed.push((random_primitive(registry, rng), Provenance::Fallback));
            break;
        }
        let a = select(registry, config, state, &goal);
        reversed.push((a.id, Provenance::Matched));
        match &a.condition {
            Some(cond) if !state.satisfies(cond) => {
                goal = cond.clone();
                rec += 1;
            }
            _ => break,
        }
    }
    reversed.reverse();
    Ok(LazyPlan { steps: reversed })
}

/// Flat goal regression: the same algorithm over primitive skills only.
pub fn flat_goal_regression<R: Rng + ?Sized>(
    state: &State,
    goal: &PartialAssignment,
    registry: &SkillRegistry,
    rec_max: usize,
    rng: &mut R,
) -> Result<LazyPlan> {
    let config = PlannerConfig {
        rec_max,
        primitives_only: true,
    };
    plan(state, goal, registry, &config, rng)
}

/// Expands only the head of `plan` until it is a primitive skill; the rest
/// of the plan stays unexpanded.
pub fn next_primitive(plan: &LazyPlan, registry: &SkillRegistry) -> Result<(SkillId, LazyPlan)> {
    let mut steps: Vec<(SkillId, Provenance)> = plan.steps.iter().rev().copied().collect();
    let mut guard = 0usize;
    while let Some((head, prov)) = steps.pop() {
        let skill = registry.get(head)?;
        if skill.is_primitive() {
            steps.reverse();
            return Ok((head, LazyPlan { steps }));
        }
        guard += 1;
        if guard > registry.len() * registry.len().max(1) + 1 {
            return Err(Error::ReferenceCycle(head));
        }
        steps.extend(skill.steps().iter().rev().map(|&s| (s, prov)));
    }
    Err(Error::EmptyPlan)
}

/// Whether a step has nothing left to do in `state`: a primitive whose
/// effect holds, or a learned skill whose effect and side effect all hold.
fn already_done(skill: &Skill, state: &State) -> bool {
    state.satisfies(&skill.effect) && state.satisfies(&skill.side_effect)
}

/// State-aware variant of [`next_primitive`] used during execution: steps
/// with nothing left to do are skipped, and learned skills are entered only
/// as deep as needed. Returns `None` when every step is already done.
pub fn next_primitive_in(
    plan: &LazyPlan,
    registry: &SkillRegistry,
    state: &State,
) -> Result<Option<(SkillId, LazyPlan)>> {
    let mut steps: Vec<(SkillId, Provenance)> = plan.steps.iter().rev().copied().collect();
    while let Some((head, prov)) = steps.pop() {
        let skill = registry.get(head)?;
        if already_done(skill, state) {
            continue;
        }
        if skill.is_primitive() {
            steps.reverse();
            return Ok(Some((head, LazyPlan { steps })));
        }
        steps.extend(skill.steps().iter().rev().map(|&s| (s, prov)));
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{crafting_env, crafting_expert_registry, crafting_goal};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    fn one(d: usize) -> PartialAssignment {
        PartialAssignment::single(d, true)
    }

    #[test]
    fn unconditioned_goal_plans_single_skill() {
        let env = crafting_env();
        let reg = env.known_registry();
        let p = plan(&env.initial_state(), &one(0), &reg, &PlannerConfig::hierarchical(), &mut rng())
            .unwrap();
        assert_eq!(p.ids(), vec![0]);
        assert!(!p.has_fallback());
    }

    #[test]
    fn expert_registry_plans_published_sequence() {
        let reg = crafting_expert_registry();
        let zeros = State::zeros(22);
        let p = plan(&zeros, &crafting_goal(), &reg, &PlannerConfig::hierarchical(), &mut rng())
            .unwrap();
        assert!(!p.has_fallback());
        assert_eq!(
            p.flatten_from(&reg, &zeros).unwrap(),
            vec![1, 0, 4, 7, 8, 11, 9, 12, 14, 16, 18, 17, 21]
        );
    }

    #[test]
    fn satisfied_goal_returns_fallback() {
        let reg = crafting_env().known_registry();
        let mut s = State::zeros(22);
        s.set(5, true);
        let p = plan(&s, &one(5), &reg, &PlannerConfig::hierarchical(), &mut rng()).unwrap();
        assert_eq!(p.len(), 1);
        assert!(p.has_fallback());
    }

    #[test]
    fn recursion_is_bounded() {
        let reg = crafting_env().known_registry();
        let zeros = State::zeros(22);
        for rec_max in 0..5 {
            let cfg = PlannerConfig {
                rec_max,
                primitives_only: false,
            };
            let p = plan(&zeros, &one(21), &reg, &cfg, &mut rng()).unwrap();
            assert!(p.len() <= rec_max + 2);
        }
        let p = flat_goal_regression(&zeros, &one(21), &reg, 100, &mut rng()).unwrap();
        assert!(!p.has_fallback());
        assert!(reg.skill(p.ids()[0]).expected_to_succeed(&zeros));
    }

    #[test]
    fn score_examples() {
        let reg = crafting_expert_registry();
        let zeros = State::zeros(22);
        let g = one(21);
        assert!(score_effect(reg.skill(21), &g, &zeros) > score_effect(reg.skill(17), &g, &zeros));

        let mut reg = crafting_env().known_registry();
        let both = reg.add_learned(vec![1, 2, 5, 0, 6], PartialAssignment::ones([5, 6])).unwrap();
        let g = PartialAssignment::ones([5, 6]);
        let best = score_effect(reg.skill(both), &g, &zeros);
        for p in reg.primitives() {
            assert!(best > score_effect(p, &g, &zeros));
        }
    }

    #[test]
    fn unreachable_goal_selection_is_deterministic() {
        // a 23rd dimension that no skill produces
        let mut reg = SkillRegistry::new(23);
        for p in crafting_env().primitives() {
            reg.add_primitive(p.effect.clone(), Some(p.condition.clone())).unwrap();
        }
        let zeros = State::zeros(23);
        let g = one(22);
        assert!(reg.iter().all(|s| score_effect(s, &g, &zeros).satisfied == 0));
        let a = plan(&zeros, &g, &reg, &PlannerConfig::hierarchical(), &mut rng()).unwrap();
        let b = plan(&zeros, &g, &reg, &PlannerConfig::hierarchical(), &mut rng()).unwrap();
        assert_eq!(a, b);
        // zero scores everywhere: expected-to-succeed, shortest, lowest id
        assert_eq!(a.ids(), vec![0]);
    }

    #[test]
    fn next_primitive_expands_only_the_head() {
        let reg = crafting_expert_registry();
        let s4 = reg.find_learned(&one(4)).unwrap();
        let s7 = reg.find_learned(&one(7)).unwrap();
        let (prim, rest) = next_primitive(&LazyPlan::matched([s7]), &reg).unwrap();
        assert_eq!(prim, 1);
        assert_eq!(rest.ids(), vec![s4, 7]);

        let (prim, rest) = next_primitive(&LazyPlan::matched([3]), &reg).unwrap();
        assert_eq!((prim, rest.len()), (3, 0));

        let s21 = reg.find_learned(&one(21)).unwrap();
        let (_, rest) = next_primitive(&LazyPlan::matched([s21, 5]), &reg).unwrap();
        assert!(rest.ids().iter().any(|&id| !reg.skill(id).is_primitive()));
        assert_eq!(rest.ids().last(), Some(&5));

        assert!(matches!(next_primitive(&LazyPlan::default(), &reg), Err(Error::EmptyPlan)));
    }

    #[test]
    fn state_aware_expansion_skips_done_steps() {
        let reg = crafting_expert_registry();
        let s7 = reg.find_learned(&one(7)).unwrap();
        let mut s = State::zeros(22);
        s.set(1, true);
        let (prim, _) = next_primitive_in(&LazyPlan::matched([s7]), &reg, &s).unwrap().unwrap();
        assert_eq!(prim, 0);
        for d in [0, 4, 7] {
            s.set(d, true);
        }
        assert!(next_primitive_in(&LazyPlan::matched([s7]), &reg, &s).unwrap().is_none());
    }
}
