//! Executable Markov environments: `s' = g(f(s, a))` where `f` applies the
//! skill's effect when its condition matches and `g` optionally flips one
//! random dimension.

mod domains;
mod file;

pub use domains::{
    auto_curriculum, crafting_curriculum, crafting_env, crafting_expert_registry, crafting_goal,
    deepest_goal, drawer_curriculum, drawer_env, drawer_goal, random_env, ExpertStep,
    CRAFTING_EXPERT_PLANS,
};
pub use file::{load_env, save_env, EnvSpec, SkillSpec};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph;
use crate::skill::{SkillId, SkillRegistry};
use crate::state::{PartialAssignment, State};

/// Ground-truth description of one primitive skill.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimitiveSkill {
    pub effect: PartialAssignment,
    pub condition: PartialAssignment,
}

#[derive(Debug, Clone)]
pub struct Environment {
    name: String,
    n: usize,
    primitives: Vec<PrimitiveSkill>,
    noise_p: f64,
    rng: ChaCha8Rng,
}

impl Environment {
    /// Builds and validates an environment. Every primitive must set exactly
    /// one dimension to 1 and the condition dependency graph must be acyclic.
    pub fn new(
        name: impl Into<String>,
        n: usize,
        primitives: Vec<PrimitiveSkill>,
        noise_p: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&noise_p) {
            return Err(Error::InvalidDomain(format!("noise_p {noise_p} not in [0, 1]")));
        }
        for (id, p) in primitives.iter().enumerate() {
            p.effect.check_dims(n)?;
            p.condition.check_dims(n)?;
            if p.effect.len() != 1 || p.effect.iter().any(|(_, v)| !v) {
                return Err(Error::InvalidDomain(format!(
                    "skill {id} must set exactly one dimension to 1, has effect {}",
                    p.effect
                )));
            }
        }
        let env = Self {
            name: name.into(),
            n,
            primitives,
            noise_p,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        if env.topological_order().is_none() {
            return Err(Error::NotDag);
        }
        Ok(env)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dims(&self) -> usize {
        self.n
    }

    pub fn noise_p(&self) -> f64 {
        self.noise_p
    }

    pub fn num_skills(&self) -> usize {
        self.primitives.len()
    }

    pub fn primitives(&self) -> &[PrimitiveSkill] {
        &self.primitives
    }

    pub fn primitive(&self, id: SkillId) -> Result<&PrimitiveSkill> {
        self.primitives.get(id).ok_or(Error::UnknownSkill(id))
    }

    pub fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    pub fn with_noise(mut self, noise_p: f64) -> Self {
        self.noise_p = noise_p.clamp(0.0, 1.0);
        self
    }

    pub fn initial_state(&self) -> State {
        State::zeros(self.n)
    }

    /// The effect part `f(s, a)`: deterministic, no noise.
    pub fn predict(&self, state: &State, skill: SkillId) -> Result<(State, bool)> {
        let p = self.primitive(skill)?;
        if state.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: state.len(),
            });
        }
        if state.satisfies(&p.condition) {
            let mut next = state.clone();
            next.apply_mut(&p.effect);
            Ok((next, true))
        } else {
            Ok((state.clone(), false))
        }
    }

    /// One transition `g(f(s, a))`. The returned flag is the ground-truth
    /// outcome of `f` only; agents judge success from observed states.
    pub fn step(&mut self, state: &State, skill: SkillId) -> Result<(State, bool)> {
        let (mut next, ok) = self.predict(state, skill)?;
        if self.noise_p > 0.0 && self.n > 0 && self.rng.random_bool(self.noise_p) {
            let d = self.rng.random_range(0..self.n);
            next.flip(d);
        }
        Ok((next, ok))
    }

    /// Registry of primitive skills with their ground-truth conditions.
    pub fn known_registry(&self) -> SkillRegistry {
        self.registry(true)
    }

    /// Registry of primitive skills whose conditions are still unknown.
    pub fn unknown_registry(&self) -> SkillRegistry {
        self.registry(false)
    }

    fn registry(&self, known: bool) -> SkillRegistry {
        let mut reg = SkillRegistry::new(self.n);
        for p in &self.primitives {
            reg.add_primitive(p.effect.clone(), known.then(|| p.condition.clone()))
                .expect("environment skills were validated");
        }
        reg
    }

    /// Skills whose effect produces each condition entry of `skill`.
    pub fn parents(&self, skill: SkillId) -> Vec<SkillId> {
        let cond = &self.primitives[skill].condition;
        let mut out: Vec<SkillId> = self
            .primitives
            .iter()
            .enumerate()
            .filter(|(_, p)| p.effect.iter().any(|(d, v)| cond.contains_entry(d, v)))
            .map(|(i, _)| i)
            .collect();
        out.sort_unstable();
        out
    }

    pub fn dependency_edges(&self) -> Vec<(SkillId, SkillId)> {
        (0..self.primitives.len())
            .flat_map(|c| self.parents(c).into_iter().map(move |p| (p, c)))
            .collect()
    }

    pub fn topological_order(&self) -> Option<Vec<SkillId>> {
        graph::topo_order(self.primitives.len(), &self.dependency_edges())
    }

    /// Transitive dependency closure of every skill (excluding itself).
    pub fn ancestors(&self) -> Vec<Vec<SkillId>> {
        let parents: Vec<Vec<SkillId>> = (0..self.num_skills()).map(|i| self.parents(i)).collect();
        let order = self.topological_order().expect("validated DAG");
        graph::ancestor_sets(&parents, &order)
            .into_iter()
            .map(|row| row.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect())
            .collect()
    }

    pub fn mean_condition_count(&self) -> f64 {
        if self.primitives.is_empty() {
            return 0.0;
        }
        self.primitives.iter().map(|p| p.condition.len()).sum::<usize>() as f64
            / self.primitives.len() as f64
    }

    pub fn to_spec(&self) -> EnvSpec {
        EnvSpec {
            name: self.name.clone(),
            n: self.n,
            noise_p: self.noise_p,
            skills: self
                .primitives
                .iter()
                .enumerate()
                .map(|(id, p)| SkillSpec {
                    id,
                    effect: p.effect.clone(),
                    condition: p.condition.clone(),
                })
                .collect(),
        }
    }

    pub fn from_spec(spec: &EnvSpec, seed: u64) -> Result<Self> {
        let mut slots: Vec<Option<PrimitiveSkill>> = vec![None; spec.skills.len()];
        for s in &spec.skills {
            let slot = slots
                .get_mut(s.id)
                .ok_or_else(|| Error::InvalidDomain(format!("skill id {} is not in 0..{}", s.id, spec.skills.len())))?;
            if slot.is_some() {
                return Err(Error::DuplicateSkill(s.id));
            }
            *slot = Some(PrimitiveSkill {
                effect: s.effect.clone(),
                condition: s.condition.clone(),
            });
        }
        let primitives = slots.into_iter().map(|s| s.expect("ids are dense")).collect();
        Self::new(spec.name.clone(), spec.n, primitives, spec.noise_p, seed)
    }
}

/// Alias of [`crate::state::matches`] for goals.
pub fn goal_satisfied(state: &State, goal: &PartialAssignment) -> bool {
    state.satisfies(goal)
}
