//! Skills, the skill registry, plans and trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{PartialAssignment, State};

pub type SkillId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SkillKind {
    Primitive,
    Learned,
}

/// What executing a skill means: a raw environment action for primitives,
/// an ordered sequence of other skills for learned ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SkillPlan {
    Action,
    Steps(Vec<SkillId>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Skill {
    pub id: SkillId,
    pub kind: SkillKind,
    pub effect: PartialAssignment,
    /// `None` when the condition is unknown (not yet learned).
    pub condition: Option<PartialAssignment>,
    pub plan: SkillPlan,
    pub side_effect: PartialAssignment,
    flat_len: usize,
}

impl Skill {
    pub fn is_primitive(&self) -> bool {
        self.kind == SkillKind::Primitive
    }

    pub fn steps(&self) -> &[SkillId] {
        match &self.plan {
            SkillPlan::Action => &[],
            SkillPlan::Steps(s) => s,
        }
    }

    /// Number of primitive executions in the fully expanded plan.
    pub fn flat_len(&self) -> usize {
        self.flat_len
    }

    /// Effect and side effect together.
    pub fn produces(&self) -> PartialAssignment {
        self.effect.merged(&self.side_effect)
    }

    /// Whether the skill is expected to succeed in `state`; unknown
    /// conditions are treated optimistically.
    pub fn expected_to_succeed(&self, state: &State) -> bool {
        self.condition.as_ref().is_none_or(|c| state.satisfies(c))
    }
}

/// Success of a skill execution judged only from observed states: the
/// effect holds afterwards and did not hold before.
pub fn check_success(skill: &Skill, pre: &State, post: &State) -> bool {
    post.satisfies(&skill.effect) && !pre.satisfies(&skill.effect)
}

/// Result of symbolically executing a plan over partial assignments.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Composition {
    /// Requirements not produced by earlier steps.
    pub condition: PartialAssignment,
    /// Net state changes produced by the plan.
    pub changes: PartialAssignment,
}

impl Composition {
    /// Splits the net changes into the caller-designated intended effect and
    /// the remaining side effect. Every intended entry must be produced.
    pub fn split(&self, intended: &PartialAssignment) -> Result<(PartialAssignment, PartialAssignment)> {
        if !intended.is_subset_of(&self.changes) {
            return Err(Error::Rejected(format!(
                "plan produces {} which does not achieve {}",
                self.changes, intended
            )));
        }
        let side = self
            .changes
            .iter()
            .filter(|(d, _)| !intended.contains_dim(*d))
            .collect();
        Ok((intended.clone(), side))
    }
}

/// Symbolically simulates `plan` left to right. A step's requirements that
/// are not produced by an earlier step become part of the composed
/// condition; a requirement contradicting an earlier product or an earlier
/// requirement is an error. Unknown constituent conditions count as empty.
pub fn compose_plan_semantics(plan: &[SkillId], registry: &SkillRegistry) -> Result<Composition> {
    let mut condition = PartialAssignment::new();
    let mut produced = PartialAssignment::new();
    for &id in plan {
        let skill = registry.get(id)?;
        if let Some(cond) = &skill.condition {
            for (d, v) in cond.iter() {
                match produced.get(d) {
                    Some(p) if p == v => {}
                    Some(_) => return Err(Error::ContradictoryCondition { dim: d }),
                    None => match condition.get(d) {
                        Some(c) if c != v => return Err(Error::ContradictoryCondition { dim: d }),
                        Some(_) => {}
                        None => {
                            condition.insert(d, v);
                        }
                    },
                }
            }
        }
        for (d, v) in skill.effect.iter().chain(skill.side_effect.iter()) {
            produced.insert(d, v);
        }
    }
    let changes = produced
        .iter()
        .filter(|&(d, v)| !condition.contains_entry(d, v))
        .collect();
    Ok(Composition { condition, changes })
}

/// The agent's skill set: primitives first (ids `0..k`), then learned
/// skills in insertion order. A learned skill only references skills with
/// smaller ids, which keeps the reference graph acyclic.
#[derive(Debug, Clone, PartialEq)]
pub struct SkillRegistry {
    dims: usize,
    skills: Vec<Skill>,
    n_primitives: usize,
}

impl SkillRegistry {
    pub fn new(dims: usize) -> Self {
        Self {
            dims,
            skills: Vec::new(),
            n_primitives: 0,
        }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.skills.len()
    }

    pub fn is_empty(&self) -> bool {
        self.skills.is_empty()
    }

    pub fn n_primitives(&self) -> usize {
        self.n_primitives
    }

    pub fn iter(&self) -> impl Iterator<Item = &Skill> {
        self.skills.iter()
    }

    pub fn all(&self) -> &[Skill] {
        &self.skills
    }

    pub fn primitives(&self) -> &[Skill] {
        &self.skills[..self.n_primitives]
    }

    pub fn learned(&self) -> &[Skill] {
        &self.skills[self.n_primitives..]
    }

    pub fn get(&self, id: SkillId) -> Result<&Skill> {
        self.skills.get(id).ok_or(Error::UnknownSkill(id))
    }

    /// Panics on an unknown id; use [`SkillRegistry::get`] at boundaries.
    pub fn skill(&self, id: SkillId) -> &Skill {
        &self.skills[id]
    }

    pub fn add_primitive(
        &mut self,
        effect: PartialAssignment,
        condition: Option<PartialAssignment>,
    ) -> Result<SkillId> {
        if self.n_primitives != self.skills.len() {
            return Err(Error::Rejected(
                "primitive skills must be registered before learned skills".into(),
            ));
        }
        effect.check_dims(self.dims)?;
        if let Some(c) = &condition {
            c.check_dims(self.dims)?;
        }
        let id = self.skills.len();
        self.skills.push(Skill {
            id,
            kind: SkillKind::Primitive,
            effect,
            condition,
            plan: SkillPlan::Action,
            side_effect: PartialAssignment::new(),
            flat_len: 1,
        });
        self.n_primitives += 1;
        Ok(id)
    }

    /// Registers a learned skill with the given plan and intended effect;
    /// its condition and side effect are composed from the plan.
    pub fn add_learned(&mut self, plan: Vec<SkillId>, effect: PartialAssignment) -> Result<SkillId> {
        let id = self.skills.len();
        let skill = self.build_learned(id, plan, effect, false)?;
        self.skills.push(skill);
        Ok(id)
    }

    /// Like [`SkillRegistry::add_learned`], but a plan whose constituent
    /// conditions contradict each other is still registered, with an
    /// unknown condition. Useful while conditions are being learned.
    pub fn add_learned_lenient(&mut self, plan: Vec<SkillId>, effect: PartialAssignment) -> Result<SkillId> {
        let id = self.skills.len();
        let skill = self.build_learned(id, plan, effect, true)?;
        self.skills.push(skill);
        Ok(id)
    }

    fn build_learned(
        &self,
        id: SkillId,
        plan: Vec<SkillId>,
        effect: PartialAssignment,
        lenient: bool,
    ) -> Result<Skill> {
        if plan.is_empty() {
            return Err(Error::EmptyPlan);
        }
        if effect.is_empty() {
            return Err(Error::Rejected("learned skill needs a non-empty effect".into()));
        }
        for &step in &plan {
            if step >= id {
                return if step < self.skills.len() {
                    Err(Error::ReferenceCycle(id))
                } else {
                    Err(Error::UnknownSkill(step))
                };
            }
        }
        let (condition, comp) = match compose_plan_semantics(&plan, self) {
            Ok(comp) => (Some(comp.condition.clone()), comp),
            Err(Error::ContradictoryCondition { .. }) if lenient => {
                let changes = plan
                    .iter()
                    .flat_map(|&s| {
                        let sk = &self.skills[s];
                        sk.effect.iter().chain(sk.side_effect.iter()).collect::<Vec<_>>()
                    })
                    .fold(PartialAssignment::new(), |mut acc, (d, v)| {
                        acc.insert(d, v);
                        acc
                    });
                (None, Composition {
                    condition: PartialAssignment::new(),
                    changes,
                })
            }
            Err(e) => return Err(e),
        };
        let (effect, side_effect) = comp.split(&effect)?;
        let flat_len = plan.iter().map(|&s| self.skills[s].flat_len).sum();
        Ok(Skill {
            id,
            kind: SkillKind::Learned,
            effect,
            condition,
            plan: SkillPlan::Steps(plan),
            side_effect,
            flat_len,
        })
    }

    /// Replaces the plan of an existing learned skill (e.g. after
    /// refinement) and recomputes every derived field downstream.
    pub fn set_plan(&mut self, id: SkillId, plan: Vec<SkillId>) -> Result<()> {
        let skill = self.get(id)?;
        if skill.is_primitive() {
            return Err(Error::Rejected(format!("skill {id} is primitive")));
        }
        let rebuilt = self.build_learned(id, plan, skill.effect.clone(), false)?;
        self.skills[id] = rebuilt;
        self.recompute_learned();
        Ok(())
    }

    /// Sets the (possibly unknown) condition of a primitive skill.
    pub fn set_condition(&mut self, id: SkillId, condition: Option<PartialAssignment>) -> Result<()> {
        let skill = self.get(id)?;
        if !skill.is_primitive() {
            return Err(Error::Rejected(format!(
                "conditions of learned skill {id} are composed, not set"
            )));
        }
        if let Some(c) = &condition {
            c.check_dims(self.dims)?;
        }
        self.skills[id].condition = condition;
        Ok(())
    }

    /// Recomputes conditions, side effects and flattened lengths of every
    /// learned skill from its constituents, in id order. A composition that
    /// became contradictory (possible with learned conditions) leaves the
    /// condition unknown.
    pub fn recompute_learned(&mut self) {
        for id in self.n_primitives..self.skills.len() {
            let plan = self.skills[id].steps().to_vec();
            let flat_len = plan.iter().map(|&s| self.skills[s].flat_len).sum();
            let effect = self.skills[id].effect.clone();
            let (condition, side) = match compose_plan_semantics(&plan, self) {
                Ok(comp) => {
                    let side = comp
                        .changes
                        .iter()
                        .filter(|(d, _)| !effect.contains_dim(*d))
                        .collect();
                    (Some(comp.condition), side)
                }
                Err(_) => (None, self.skills[id].side_effect.clone()),
            };
            let skill = &mut self.skills[id];
            skill.flat_len = flat_len;
            skill.condition = condition;
            skill.side_effect = side;
        }
    }

    /// Learned skill whose effect equals `effect`, if any.
    pub fn find_learned(&self, effect: &PartialAssignment) -> Option<SkillId> {
        self.learned().iter().find(|s| &s.effect == effect).map(|s| s.id)
    }

    /// Fully expands a plan to primitive skills (state-independent).
    pub fn flatten(&self, plan: &[SkillId]) -> Result<Vec<SkillId>> {
        let mut out = Vec::new();
        for &id in plan {
            self.flatten_into(id, &mut out, 0)?;
        }
        Ok(out)
    }

    fn flatten_into(&self, id: SkillId, out: &mut Vec<SkillId>, depth: usize) -> Result<()> {
        if depth > self.skills.len() {
            return Err(Error::ReferenceCycle(id));
        }
        let skill = self.get(id)?;
        match &skill.plan {
            SkillPlan::Action => out.push(id),
            SkillPlan::Steps(steps) => {
                for &s in steps {
                    self.flatten_into(s, out, depth + 1)?;
                }
            }
        }
        Ok(())
    }

    /// Nesting depth of a skill: 0 for primitives.
    pub fn depth(&self, id: SkillId) -> usize {
        self.skills[id]
            .steps()
            .iter()
            .map(|&s| self.depth(s) + 1)
            .max()
            .unwrap_or(0)
    }
}

/// One executed primitive with the observed states around it.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub skill: SkillId,
    pub pre: State,
    pub post: State,
    /// Observed success per [`check_success`].
    pub succeeded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub start: State,
    pub steps: Vec<Step>,
}

impl Trajectory {
    pub fn new(start: State) -> Self {
        Self {
            start,
            steps: Vec::new(),
        }
    }

    pub fn record(&mut self, skill: &Skill, pre: State, post: State) {
        let succeeded = check_success(skill, &pre, &post);
        self.steps.push(Step {
            skill: skill.id,
            pre,
            post,
            succeeded,
        });
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn skills(&self) -> Vec<SkillId> {
        self.steps.iter().map(|s| s.skill).collect()
    }
}
