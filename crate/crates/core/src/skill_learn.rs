//! Creating learned skills from successful trajectories and refining their
//! plans against skills that already exist.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph;
use crate::skill::{SkillId, SkillKind, SkillRegistry, Trajectory};
use crate::state::{PartialAssignment, State};

/// Successful steps of a trajectory, in order. Only the first success of
/// each effect is kept.
pub fn extract_successful(trajectory: &Trajectory, registry: &SkillRegistry) -> Vec<SkillId> {
    let mut seen: Vec<&PartialAssignment> = Vec::new();
    let mut out = Vec::new();
    for step in trajectory.steps.iter().filter(|s| s.succeeded) {
        let effect = &registry.skill(step.skill).effect;
        if !seen.contains(&effect) {
            seen.push(effect);
            out.push(step.skill);
        }
    }
    out
}

/// Symbolic end state of `plan` from `s0`: every step's effect and side
/// effect applied in order.
pub fn simulate(plan: &[SkillId], s0: &State, registry: &SkillRegistry) -> Result<State> {
    let mut s = s0.clone();
    for &id in plan {
        let skill = registry.get(id)?;
        s.apply_mut(&skill.effect);
        s.apply_mut(&skill.side_effect);
    }
    Ok(s)
}

/// Intended effect of going from `s0` to `goal`.
pub fn intended_effect(s0: &State, goal: &PartialAssignment) -> PartialAssignment {
    goal.unsatisfied_in(s0)
}

/// Registers a new skill with plan `tau` whose effect is the part of `goal`
/// not already true in `s0`.
pub fn learn_skill(
    s0: &State,
    goal: &PartialAssignment,
    tau: Vec<SkillId>,
    registry: &mut SkillRegistry,
) -> Result<SkillId> {
    let effect = intended_effect(s0, goal);
    if effect.is_empty() {
        return Err(Error::Rejected(format!("goal {goal} already holds in the start state")));
    }
    if !simulate(&tau, s0, registry)?.satisfies(goal) {
        return Err(Error::Rejected(format!("plan {tau:?} does not reach {goal}")));
    }
    registry.add_learned_lenient(tau, effect)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DagNode {
    pub skill: SkillId,
    pub effect: PartialAssignment,
    pub produces: PartialAssignment,
    pub condition: PartialAssignment,
    /// Smallest trajectory position among the steps this node stands for.
    pub pos: usize,
}

/// Dependency graph over the steps of a trajectory. An edge `i -> j` means
/// step `i` is the latest step before `j` producing one of `j`'s condition
/// entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryDag {
    pub nodes: Vec<DagNode>,
    pub edges: Vec<(usize, usize)>,
}

impl TrajectoryDag {
    fn from_nodes(nodes: Vec<DagNode>) -> Self {
        let mut edges = BTreeSet::new();
        for (j, node) in nodes.iter().enumerate() {
            for (d, v) in node.condition.iter() {
                if let Some(i) = (0..j).rev().find(|&i| nodes[i].produces.contains_entry(d, v)) {
                    edges.insert((i, j));
                }
            }
        }
        Self {
            nodes,
            edges: edges.into_iter().collect(),
        }
    }

    pub fn parents(&self, j: usize) -> Vec<usize> {
        self.edges.iter().filter(|e| e.1 == j).map(|e| e.0).collect()
    }

    pub fn skills(&self) -> Vec<SkillId> {
        self.nodes.iter().map(|n| n.skill).collect()
    }

    /// Indices of nodes that `targets` transitively depend on, plus the
    /// targets themselves, in node order.
    pub fn closure(&self, targets: &[usize]) -> Vec<usize> {
        let mut keep = vec![false; self.nodes.len()];
        let mut stack: Vec<usize> = targets.to_vec();
        while let Some(j) = stack.pop() {
            if !std::mem::replace(&mut keep[j], true) {
                stack.extend(self.parents(j));
            }
        }
        (0..self.nodes.len()).filter(|&i| keep[i]).collect()
    }
}

pub fn build_dag(tau: &[SkillId], registry: &SkillRegistry) -> Result<TrajectoryDag> {
    let mut nodes = Vec::with_capacity(tau.len());
    for (pos, &id) in tau.iter().enumerate() {
        let skill = registry.get(id)?;
        nodes.push(DagNode {
            skill: id,
            effect: skill.effect.clone(),
            produces: skill.produces(),
            condition: skill.condition.clone().unwrap_or_default(),
            pos,
        });
    }
    Ok(TrajectoryDag::from_nodes(nodes))
}

/// Refines `tau` by repeatedly replacing groups of steps with existing
/// learned skills, then keeps only what the steps producing `effect`
/// depend on. Candidates are learned skills with ids below `before`,
/// shortest flattened plan first.
pub fn refine(
    tau: &[SkillId],
    effect: &PartialAssignment,
    s0: &State,
    registry: &SkillRegistry,
    before: SkillId,
) -> Result<Vec<SkillId>> {
    let mut dag = build_dag(tau, registry)?;
    let mut candidates: Vec<_> = registry
        .learned()
        .iter()
        .filter(|c| c.id < before && c.condition.is_some())
        .collect();
    candidates.sort_by_key(|c| (c.flat_len(), c.id));

    'restart: loop {
        let order = graph::topo_order_by_key(dag.nodes.len(), &dag.edges, |i| dag.nodes[i].pos)
            .ok_or(Error::NotDag)?;
        for &n in &order {
            for c in &candidates {
                if !dag.nodes[n].effect.is_subset_of(&c.effect) {
                    continue;
                }
                let produces = c.produces();
                let group: Vec<usize> = (0..dag.nodes.len())
                    .filter(|&i| dag.nodes[i].effect.is_subset_of(&produces))
                    .collect();
                if group == [n] && dag.nodes[n].skill == c.id {
                    continue;
                }
                let cond = c.condition.as_ref().expect("filtered above");
                let satisfiable = cond.iter().all(|(d, v)| {
                    s0.get(d) == v
                        || (0..dag.nodes.len())
                            .any(|i| !group.contains(&i) && dag.nodes[i].produces.contains_entry(d, v))
                });
                if !satisfiable {
                    continue;
                }
                let group_len: usize = group
                    .iter()
                    .map(|&i| registry.skill(dag.nodes[i].skill).flat_len())
                    .sum();
                if c.flat_len() > group_len {
                    continue;
                }
                if let Some(next) = contract(&dag, &group, c.id, registry) {
                    dag = next;
                    continue 'restart;
                }
            }
        }
        break;
    }

    let order = graph::topo_order_by_key(dag.nodes.len(), &dag.edges, |i| dag.nodes[i].pos)
        .ok_or(Error::NotDag)?;
    let mut targets = Vec::new();
    for (d, v) in effect.iter() {
        let producer = order
            .iter()
            .rev()
            .copied()
            .find(|&i| dag.nodes[i].produces.contains_entry(d, v))
            .ok_or(Error::NoEffectNode)?;
        targets.push(producer);
    }
    let keep = dag.closure(&targets);
    Ok(order
        .into_iter()
        .filter(|i| keep.binary_search(i).is_ok())
        .map(|i| dag.nodes[i].skill)
        .collect())
}

/// Replaces the `group` nodes with a single node for skill `with`, or
/// `None` if that would create a cycle.
fn contract(
    dag: &TrajectoryDag,
    group: &[usize],
    with: SkillId,
    registry: &SkillRegistry,
) -> Option<TrajectoryDag> {
    let skill = registry.skill(with);
    let merged_pos = group.iter().map(|&i| dag.nodes[i].pos).min()?;
    let new_node = DagNode {
        skill: with,
        effect: skill.effect.clone(),
        produces: skill.produces(),
        condition: skill.condition.clone().unwrap_or_default(),
        pos: merged_pos,
    };
    // contracted node index is 0; others shift by one
    let mut index = vec![0usize; dag.nodes.len()];
    let mut nodes = vec![new_node];
    for (i, node) in dag.nodes.iter().enumerate() {
        if !group.contains(&i) {
            index[i] = nodes.len();
            nodes.push(node.clone());
        }
    }
    let mut edges: BTreeSet<(usize, usize)> = dag
        .edges
        .iter()
        .map(|&(a, b)| (index[a], index[b]))
        .filter(|(a, b)| a != b)
        .collect();
    for (d, v) in nodes[0].condition.clone().iter() {
        if let Some(p) = (1..nodes.len())
            .filter(|&i| nodes[i].produces.contains_entry(d, v))
            .max_by_key(|&i| nodes[i].pos)
        {
            edges.insert((p, 0));
        }
    }
    let edges: Vec<_> = edges.into_iter().collect();
    let order = graph::topo_order_by_key(nodes.len(), &edges, |i| nodes[i].pos)?;
    let ordered: Vec<DagNode> = order.iter().map(|&i| nodes[i].clone()).collect();
    let next = TrajectoryDag::from_nodes(ordered);
    graph::topo_order(next.nodes.len(), &next.edges)?;
    Some(next)
}

/// Serialized form of a registry. Learned skills store only their plan and
/// effect; conditions and side effects are recomposed on import.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistrySpec {
    pub dims: usize,
    pub skills: Vec<SkillEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkillEntry {
    pub id: SkillId,
    pub kind: SkillKind,
    pub effect: PartialAssignment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<PartialAssignment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<Vec<SkillId>>,
}

pub fn registry_to_spec(registry: &SkillRegistry) -> RegistrySpec {
    RegistrySpec {
        dims: registry.dims(),
        skills: registry
            .iter()
            .map(|s| SkillEntry {
                id: s.id,
                kind: s.kind,
                effect: s.effect.clone(),
                condition: if s.is_primitive() { s.condition.clone() } else { None },
                plan: (!s.is_primitive()).then(|| s.steps().to_vec()),
            })
            .collect(),
    }
}

pub fn registry_from_spec(spec: &RegistrySpec) -> Result<SkillRegistry> {
    let mut reg = SkillRegistry::new(spec.dims);
    for (expected, entry) in spec.skills.iter().enumerate() {
        if entry.id != expected {
            return Err(Error::InvalidDomain(format!(
                "skill ids must be dense and ordered, found {} at position {expected}",
                entry.id
            )));
        }
        match entry.kind {
            SkillKind::Primitive => {
                reg.add_primitive(entry.effect.clone(), entry.condition.clone())?;
            }
            SkillKind::Learned => {
                let plan = entry.plan.clone().ok_or(Error::EmptyPlan)?;
                reg.add_learned(plan, entry.effect.clone())?;
            }
        }
    }
    Ok(reg)
}

pub fn export_registry(registry: &SkillRegistry, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&registry_to_spec(registry))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn import_registry(path: &Path) -> Result<SkillRegistry> {
    let text = std::fs::read_to_string(path)?;
    registry_from_spec(&serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{crafting_env, crafting_expert_registry, CRAFTING_EXPERT_PLANS};

    fn one(d: usize) -> PartialAssignment {
        PartialAssignment::single(d, true)
    }

    fn zeros() -> State {
        State::zeros(22)
    }

    #[test]
    fn extract_keeps_first_success_per_effect() {
        let mut env = crafting_env();
        let reg = env.known_registry();
        let mut traj = Trajectory::new(env.initial_state());
        let mut s = env.initial_state();
        for a in [0, 3, 0, 3] {
            let (next, _) = env.step(&s, a).unwrap();
            traj.record(reg.skill(a), s.clone(), next.clone());
            s = next;
        }
        assert_eq!(extract_successful(&traj, &reg), vec![0, 3]);

        let mut traj = Trajectory::new(zeros());
        traj.record(reg.skill(3), zeros(), zeros());
        assert!(extract_successful(&traj, &reg).is_empty());
    }

    #[test]
    fn learn_skill_examples() {
        let mut reg = crafting_env().known_registry();
        let s4 = learn_skill(&zeros(), &one(4), vec![0, 4], &mut reg).unwrap();
        let sk = reg.skill(s4);
        assert_eq!(sk.effect, one(4));
        assert_eq!(sk.side_effect, one(0));
        assert!(sk.condition.as_ref().unwrap().is_empty());

        let s7 = learn_skill(&zeros(), &one(7), vec![1, 0, 4, 7], &mut reg).unwrap();
        assert!(reg.skill(s7).condition.as_ref().unwrap().is_empty());

        let mut s = zeros();
        s.set(4, true);
        let n = reg.len();
        assert!(matches!(learn_skill(&s, &one(4), vec![0, 4], &mut reg), Err(Error::Rejected(_))));
        assert!(matches!(learn_skill(&zeros(), &one(8), vec![0, 4], &mut reg), Err(Error::Rejected(_))));
        assert_eq!(reg.len(), n);
    }

    #[test]
    fn dag_examples() {
        let reg = crafting_env().known_registry();
        assert_eq!(build_dag(&[0, 4], &reg).unwrap().edges, vec![(0, 1)]);
        assert!(build_dag(&[0, 1, 2], &reg).unwrap().edges.is_empty());
        // nodes 1,0,4,7 at indices 0..4
        assert_eq!(build_dag(&[1, 0, 4, 7], &reg).unwrap().edges, vec![(0, 3), (1, 2), (2, 3)]);
        // a later producer shadows an earlier one
        assert_eq!(build_dag(&[0, 0, 3], &reg).unwrap().edges, vec![(1, 2)]);
    }

    #[test]
    fn refine_reproduces_hierarchy() {
        let mut reg = crafting_env().known_registry();
        let s4 = reg.add_learned(vec![0, 4], one(4)).unwrap();
        let before = reg.len();
        assert_eq!(refine(&[1, 0, 4, 7], &one(7), &zeros(), &reg, before).unwrap(), vec![1, s4, 7]);
        let s7 = reg.add_learned(vec![1, s4, 7], one(7)).unwrap();
        let before = reg.len();
        assert_eq!(refine(&[1, 0, 4, 7, 8], &one(8), &zeros(), &reg, before).unwrap(), vec![s7, 8]);
    }

    #[test]
    fn refine_without_learned_skills_drops_irrelevant_steps() {
        let reg = crafting_env().known_registry();
        let out = refine(&[2, 1, 0, 4, 7], &one(7), &zeros(), &reg, reg.len()).unwrap();
        assert_eq!(out, vec![1, 0, 4, 7]);
        assert!(matches!(
            refine(&[0, 4], &one(9), &zeros(), &reg, reg.len()),
            Err(Error::NoEffectNode)
        ));
    }

    #[test]
    fn refine_is_idempotent_on_expert_plans() {
        let reg = crafting_expert_registry();
        for (i, (d, _)) in CRAFTING_EXPERT_PLANS.iter().enumerate() {
            let id = reg.n_primitives() + i;
            let plan = reg.skill(id).steps().to_vec();
            assert_eq!(refine(&plan, &one(*d), &zeros(), &reg, id).unwrap(), plan);
            let flat = reg.flatten(&[id]).unwrap();
            assert_eq!(refine(&flat, &one(*d), &zeros(), &reg, id).unwrap(), plan);
        }
    }

    #[test]
    fn registry_round_trip() {
        let reg = crafting_expert_registry();
        let spec = registry_to_spec(&reg);
        let back = registry_from_spec(&spec).unwrap();
        assert_eq!(back, reg);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("skills.json");
        export_registry(&reg, &path).unwrap();
        assert_eq!(import_registry(&path).unwrap(), reg);
        let first = std::fs::read_to_string(&path).unwrap();
        export_registry(&back, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), first);
    }
}
