//! Learning primitive skill conditions from observed transitions: sparse
//! dimension selection followed by a mixture model over the successful
//! pre-states restricted to those dimensions.

mod mixture;
mod omp;

pub use mixture::{Mixture, MixtureConfig};
pub use omp::{omp, OmpResult};

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skill::{check_success, SkillId, SkillRegistry};
use crate::state::{PartialAssignment, State};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionConfig {
    /// Residual threshold for dimension selection.
    pub tolerance: f64,
    pub max_dims: usize,
    /// Selected dimensions need a coefficient at least this large.
    pub coef_eps: f64,
    pub mixture: MixtureConfig,
    /// Successful observations needed before a model is trusted.
    pub min_obs: usize,
}

impl Default for ConditionConfig {
    fn default() -> Self {
        Self {
            tolerance: 3.0,
            max_dims: 5,
            coef_eps: 0.3,
            mixture: MixtureConfig::default(),
            min_obs: 5,
        }
    }
}

/// Observed pre-states of one skill, deduplicated with success and failure
/// counts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SkillData {
    rows: BTreeMap<State, (usize, usize)>,
    pub n_pos: usize,
    pub n_neg: usize,
}

impl SkillData {
    pub fn push(&mut self, pre: State, success: bool) {
        let entry = self.rows.entry(pre).or_default();
        if success {
            entry.0 += 1;
            self.n_pos += 1;
        } else {
            entry.1 += 1;
            self.n_neg += 1;
        }
    }

    pub fn len(&self) -> usize {
        self.n_pos + self.n_neg
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Distinct pre-states with their (success, failure) counts.
    pub fn rows(&self) -> impl Iterator<Item = (&State, usize, usize)> {
        self.rows.iter().map(|(s, &(p, n))| (s, p, n))
    }
}

/// Per-skill transition data.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionDataset {
    dims: usize,
    skills: Vec<SkillData>,
}

impl TransitionDataset {
    pub fn new(dims: usize, n_skills: usize) -> Self {
        Self {
            dims,
            skills: vec![SkillData::default(); n_skills],
        }
    }

    /// Records one execution of a primitive skill. Rows whose pre-state
    /// already shows the effect carry no information about the condition
    /// and are dropped; returns the recorded label otherwise.
    pub fn record(
        &mut self,
        registry: &SkillRegistry,
        skill: SkillId,
        pre: &State,
        post: &State,
    ) -> Result<Option<bool>> {
        let sk = registry.get(skill)?;
        let data = self.skills.get_mut(skill).ok_or(Error::UnknownSkill(skill))?;
        if pre.len() != self.dims {
            return Err(Error::LengthMismatch {
                expected: self.dims,
                got: pre.len(),
            });
        }
        if pre.satisfies(&sk.effect) {
            return Ok(None);
        }
        let label = check_success(sk, pre, post);
        data.push(pre.clone(), label);
        Ok(Some(label))
    }

    pub fn skill(&self, id: SkillId) -> &SkillData {
        &self.skills[id]
    }

    pub fn dims(&self) -> usize {
        self.dims
    }
}

/// Dimensions whose values predict success. Empty unless the data holds
/// both outcomes.
pub fn select_dims(data: &SkillData, dims: usize, config: &ConditionConfig) -> Vec<usize> {
    if data.n_pos == 0 || data.n_neg == 0 {
        return Vec::new();
    }
    let mut rows = Vec::new();
    let mut y = Vec::new();
    let mut w = Vec::new();
    for (s, p, n) in data.rows() {
        let feats: Vec<f64> = (0..dims).map(|d| s.get(d) as u8 as f64).collect();
        rows.push(feats);
        w.push((p + n) as f64);
        y.push((p as f64 - n as f64) / (p + n) as f64);
    }
    let res = omp(&rows, &y, &w, config.tolerance, config.max_dims);
    let mut ranked: Vec<(usize, f64)> = res
        .active
        .iter()
        .copied()
        .zip(res.coefficients.iter().map(|c| c.abs()))
        .filter(|(_, c)| *c > config.coef_eps)
        .collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let mut out = prune(data, ranked.into_iter().map(|r| r.0).collect());
    out.sort_unstable();
    out
}

/// Majority value of `dim` over successful rows.
fn positive_value(data: &SkillData, dim: usize) -> bool {
    let (ones, total) = data
        .rows()
        .filter(|&(_, p, _)| p > 0)
        .fold((0, 0), |(o, t), (s, p, _)| (o + if s.get(dim) { p } else { 0 }, t + p));
    2 * ones >= total
}

/// Weighted number of rows the conjunction over `dims` misclassifies.
fn conjunction_errors(data: &SkillData, dims: &[(usize, bool)]) -> usize {
    data.rows()
        .map(|(s, p, n)| {
            if dims.iter().all(|&(d, v)| s.get(d) == v) {
                n
            } else {
                p
            }
        })
        .sum()
}

/// Backward elimination: drops dimensions (weakest first) whose removal
/// does not increase the errors of the conjunctive condition they form.
fn prune(data: &SkillData, dims: Vec<usize>) -> Vec<usize> {
    let mut kept: Vec<(usize, bool)> = dims.iter().map(|&d| (d, positive_value(data, d))).collect();
    let mut errors = conjunction_errors(data, &kept);
    'outer: loop {
        for i in 0..kept.len() {
            let mut without = kept.clone();
            without.remove(i);
            let e = conjunction_errors(data, &without);
            if e <= errors {
                kept = without;
                errors = e;
                continue 'outer;
            }
        }
        break;
    }
    kept.into_iter().map(|k| k.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionModel {
    pub selected_dims: Vec<usize>,
    pub mixture: Option<Mixture>,
    pub n_obs: usize,
    pub n_pos: usize,
    pub confident: bool,
}

impl ConditionModel {
    pub fn unknown() -> Self {
        Self {
            selected_dims: Vec::new(),
            mixture: None,
            n_obs: 0,
            n_pos: 0,
            confident: false,
        }
    }

    /// Fits a model to one skill's data. `was_confident` keeps confidence
    /// from being lost on refits.
    pub fn fit(data: &SkillData, dims: usize, config: &ConditionConfig, seed: u64, was_confident: bool) -> Self {
        let selected_dims = select_dims(data, dims, config);
        let points: Vec<(Vec<f64>, f64)> = data
            .rows()
            .filter(|&(_, p, _)| p > 0)
            .map(|(s, p, _)| {
                (
                    selected_dims.iter().map(|&d| s.get(d) as u8 as f64).collect(),
                    p as f64,
                )
            })
            .collect();
        let mixture = if selected_dims.is_empty() {
            None
        } else {
            Mixture::fit(&points, &config.mixture, &mut ChaCha8Rng::seed_from_u64(seed))
        };
        Self {
            selected_dims,
            mixture,
            n_obs: data.len(),
            n_pos: data.n_pos,
            confident: was_confident || data.n_pos >= config.min_obs.max(1),
        }
    }

    fn assignment(&self, bits: &[bool]) -> PartialAssignment {
        self.selected_dims.iter().copied().zip(bits.iter().copied()).collect()
    }

    /// The most probable condition: the rounded assignment carrying the
    /// largest total component weight. `None` while not confident.
    pub fn condition(&self) -> Option<PartialAssignment> {
        if !self.confident {
            return None;
        }
        self.estimate()
    }

    /// Current best guess at the condition, confident or not. `None`
    /// without any successful observation.
    pub fn estimate(&self) -> Option<PartialAssignment> {
        if self.n_pos == 0 {
            return None;
        }
        let Some(mix) = &self.mixture else {
            return Some(PartialAssignment::new());
        };
        let mut mass: Vec<(Vec<bool>, f64)> = Vec::new();
        for c in 0..mix.weights.len() {
            let r = mix.rounded(c);
            match mass.iter_mut().find(|m| m.0 == r) {
                Some(m) => m.1 += mix.weights[c],
                None => mass.push((r, mix.weights[c])),
            }
        }
        let best = mass
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(b.0.cmp(&a.0)))
            .map(|(_, m)| m.0.clone())?;
        Some(self.assignment(&best))
    }

    /// Whether the skill is predicted to succeed in `state`; optimistic
    /// while the model is not confident.
    pub fn predict_success(&self, state: &State) -> bool {
        if !self.confident {
            return true;
        }
        let Some(mix) = &self.mixture else {
            return true;
        };
        let x: Vec<f64> = self.selected_dims.iter().map(|&d| state.get(d) as u8 as f64).collect();
        let c = mix.best_component(&x);
        state.satisfies(&self.assignment(&mix.rounded(c)))
    }

    /// A goal under which the skill should succeed, drawn from the model.
    pub fn sample_goal<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<PartialAssignment> {
        if !self.confident {
            return Err(Error::NotConfident);
        }
        let Some(mix) = &self.mixture else {
            return Ok(PartialAssignment::new());
        };
        let c = mix.sample_component(rng);
        Ok(self.assignment(&mix.rounded(c)))
    }
}

/// Learned-condition summary of one skill.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionDump {
    pub skill: SkillId,
    pub selected_dims: Vec<usize>,
    pub condition: Option<PartialAssignment>,
    /// Best guess, also for models that are not confident yet.
    pub estimate: Option<PartialAssignment>,
    pub n_obs: usize,
    pub n_pos: usize,
    pub confident: bool,
}

/// Transition data and condition models for every primitive skill.
#[derive(Debug, Clone)]
pub struct ConditionLearner {
    pub config: ConditionConfig,
    pub dataset: TransitionDataset,
    models: Vec<ConditionModel>,
    dirty: Vec<bool>,
}

impl ConditionLearner {
    pub fn new(dims: usize, n_primitives: usize, config: ConditionConfig) -> Self {
        Self {
            config,
            dataset: TransitionDataset::new(dims, n_primitives),
            models: vec![ConditionModel::unknown(); n_primitives],
            dirty: vec![false; n_primitives],
        }
    }

    pub fn record(&mut self, registry: &SkillRegistry, skill: SkillId, pre: &State, post: &State) -> Result<()> {
        if self.dataset.record(registry, skill, pre, post)?.is_some() {
            self.dirty[skill] = true;
        }
        Ok(())
    }

    /// Refits models whose data changed since the last refit and returns
    /// their ids.
    pub fn refit(&mut self, seed: u64) -> Vec<SkillId> {
        let mut changed = Vec::new();
        for id in 0..self.models.len() {
            if std::mem::take(&mut self.dirty[id]) {
                let was = self.models[id].confident;
                self.models[id] = ConditionModel::fit(
                    self.dataset.skill(id),
                    self.dataset.dims(),
                    &self.config,
                    seed.wrapping_add(id as u64),
                    was,
                );
                changed.push(id);
            }
        }
        changed
    }

    /// Writes each model's current condition into the registry and
    /// recomposes learned skills.
    pub fn sync(&self, registry: &mut SkillRegistry) -> Result<()> {
        for (id, m) in self.models.iter().enumerate() {
            registry.set_condition(id, m.condition())?;
        }
        registry.recompute_learned();
        Ok(())
    }

    /// Installs previously fitted models, e.g. from a checkpoint.
    pub fn set_models(&mut self, models: Vec<ConditionModel>) -> Result<()> {
        if models.len() != self.models.len() {
            return Err(Error::LengthMismatch {
                expected: self.models.len(),
                got: models.len(),
            });
        }
        self.models = models;
        Ok(())
    }

    pub fn model(&self, id: SkillId) -> &ConditionModel {
        &self.models[id]
    }

    pub fn models(&self) -> &[ConditionModel] {
        &self.models
    }

    pub fn is_confident(&self, id: SkillId) -> bool {
        self.models.get(id).is_some_and(|m| m.confident)
    }

    pub fn dump(&self) -> Vec<ConditionDump> {
        self.models
            .iter()
            .enumerate()
            .map(|(skill, m)| ConditionDump {
                skill,
                selected_dims: m.selected_dims.clone(),
                condition: m.condition(),
                estimate: m.estimate(),
                n_obs: m.n_obs,
                n_pos: m.n_pos,
                confident: m.confident,
            })
            .collect()
    }
}
