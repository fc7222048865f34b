//! Binary states and partial assignments over state dimensions.
//!
//! A [`PartialAssignment`] is the shared representation for skill effects,
//! side effects, conditions and goals: a set of `(dimension, value)` pairs.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Full environment state: a fixed-length vector of bits.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    n: usize,
    words: SmallVec<[u64; 2]>,
}

impl State {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            words: SmallVec::from_elem(0, n.div_ceil(64)),
        }
    }

    /// Builds a state from 0/1 values; any non-zero value counts as 1.
    pub fn from_bits(bits: &[u8]) -> Self {
        let mut s = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b != 0 {
                s.set(i, true);
            }
        }
        s
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, dim: usize) -> bool {
        debug_assert!(dim < self.n);
        self.words[dim / 64] >> (dim % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, dim: usize, value: bool) {
        debug_assert!(dim < self.n);
        let mask = 1u64 << (dim % 64);
        if value {
            self.words[dim / 64] |= mask;
        } else {
            self.words[dim / 64] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, dim: usize) {
        debug_assert!(dim < self.n);
        self.words[dim / 64] ^= 1u64 << (dim % 64);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn hamming(&self, other: &State) -> usize {
        self.words
            .iter()
            .zip(other.words.iter())
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.n).map(|i| self.get(i))
    }

    pub fn to_vec(&self) -> Vec<u8> {
        self.bits().map(u8::from).collect()
    }

    /// True iff every entry of `assignment` holds in this state.
    /// Out-of-range dimensions never match.
    #[inline]
    pub fn satisfies(&self, assignment: &PartialAssignment) -> bool {
        assignment
            .iter()
            .all(|(d, v)| d < self.n && self.get(d) == v)
    }

    /// Applies `assignment` in place without range checks beyond debug builds.
    #[inline]
    pub fn apply_mut(&mut self, assignment: &PartialAssignment) {
        for (d, v) in assignment.iter() {
            self.set(d, v);
        }
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "State(")?;
        for b in self.bits() {
            write!(f, "{}", u8::from(b))?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            write!(f, "{}", u8::from(b))?;
        }
        Ok(())
    }
}

/// `state ⊕ assignment`: returns a copy of `state` with the assigned
/// dimensions overwritten.
pub fn apply(state: &State, assignment: &PartialAssignment) -> Result<State> {
    assignment.check_dims(state.len())?;
    let mut next = state.clone();
    next.apply_mut(assignment);
    Ok(next)
}

/// True iff every `(dim, value)` pair of `assignment` holds in `state`.
pub fn matches(state: &State, assignment: &PartialAssignment) -> bool {
    state.satisfies(assignment)
}

/// A set of `(dimension, value)` pairs with unique dimensions.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartialAssignment {
    entries: BTreeMap<usize, bool>,
}

impl PartialAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds an assignment setting every listed dimension to 1.
    pub fn ones(dims: impl IntoIterator<Item = usize>) -> Self {
        Self {
            entries: dims.into_iter().map(|d| (d, true)).collect(),
        }
    }

    /// Builds an assignment from pairs; a repeated dimension with a
    /// different value is a contradiction.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, bool)>) -> Result<Self> {
        let mut out = Self::new();
        for (d, v) in pairs {
            match out.entries.insert(d, v) {
                Some(prev) if prev != v => return Err(Error::ContradictoryCondition { dim: d }),
                _ => {}
            }
        }
        Ok(out)
    }

    pub fn single(dim: usize, value: bool) -> Self {
        let mut out = Self::new();
        out.insert(dim, value);
        out
    }

    pub fn insert(&mut self, dim: usize, value: bool) -> Option<bool> {
        self.entries.insert(dim, value)
    }

    pub fn remove(&mut self, dim: usize) -> Option<bool> {
        self.entries.remove(&dim)
    }

    pub fn get(&self, dim: usize) -> Option<bool> {
        self.entries.get(&dim).copied()
    }

    pub fn contains_dim(&self, dim: usize) -> bool {
        self.entries.contains_key(&dim)
    }

    pub fn contains_entry(&self, dim: usize, value: bool) -> bool {
        self.get(dim) == Some(value)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, bool)> + '_ {
        self.entries.iter().map(|(&d, &v)| (d, v))
    }

    pub fn dims(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }

    /// Every entry of `self` also appears, with the same value, in `other`.
    pub fn is_subset_of(&self, other: &PartialAssignment) -> bool {
        self.iter().all(|(d, v)| other.contains_entry(d, v))
    }

    pub fn shares_dims_with(&self, other: &PartialAssignment) -> bool {
        self.dims().any(|d| other.contains_dim(d))
    }

    /// Union of two assignments; `other` wins on shared dimensions.
    pub fn merged(&self, other: &PartialAssignment) -> PartialAssignment {
        let mut out = self.clone();
        for (d, v) in other.iter() {
            out.insert(d, v);
        }
        out
    }

    /// Entries of `self` that do not already hold in `state`.
    pub fn unsatisfied_in(&self, state: &State) -> PartialAssignment {
        Self {
            entries: self
                .entries
                .iter()
                .filter(|(&d, &v)| d >= state.len() || state.get(d) != v)
                .map(|(&d, &v)| (d, v))
                .collect(),
        }
    }

    pub fn max_dim(&self) -> Option<usize> {
        self.entries.keys().next_back().copied()
    }

    pub fn check_dims(&self, n: usize) -> Result<()> {
        match self.max_dim() {
            Some(dim) if dim >= n => Err(Error::DimOutOfRange { dim, n }),
            _ => Ok(()),
        }
    }
}

impl FromIterator<(usize, bool)> for PartialAssignment {
    fn from_iter<T: IntoIterator<Item = (usize, bool)>>(iter: T) -> Self {
        Self {
            entries: iter.into_iter().collect(),
        }
    }
}

impl fmt::Debug for PartialAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for PartialAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (d, v)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "s{d}={}", u8::from(v))?;
        }
        write!(f, "}}")
    }
}

// Serialized as a JSON object with decimal-string dimension keys and 0/1 values.
impl Serialize for PartialAssignment {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let map: BTreeMap<usize, u8> = self.iter().map(|(d, v)| (d, u8::from(v))).collect();
        map.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PartialAssignment {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let map = BTreeMap::<usize, u8>::deserialize(deserializer)?;
        map.into_iter()
            .map(|(d, v)| match v {
                0 => Ok((d, false)),
                1 => Ok((d, true)),
                other => Err(serde::de::Error::custom(format!(
                    "value for dimension {d} must be 0 or 1, got {other}"
                ))),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(bits: &[u8]) -> State {
        State::from_bits(bits)
    }

    #[test]
    fn apply_examples() {
        assert_eq!(apply(&s(&[0, 0, 0]), &PartialAssignment::new()).unwrap(), s(&[0, 0, 0]));
        assert_eq!(
            apply(&s(&[0, 0, 0]), &PartialAssignment::single(0, true)).unwrap(),
            s(&[1, 0, 0])
        );
        let a = PartialAssignment::from_pairs([(1, true), (2, false)]).unwrap();
        let input = s(&[1, 0, 1]);
        assert_eq!(apply(&input, &a).unwrap(), s(&[1, 1, 0]));
        assert_eq!(input, s(&[1, 0, 1]));
    }

    #[test]
    fn apply_rejects_out_of_range() {
        let err = apply(&s(&[0, 0]), &PartialAssignment::single(2, true)).unwrap_err();
        assert!(matches!(err, Error::DimOutOfRange { dim: 2, n: 2 }));
    }

    #[test]
    fn matches_examples() {
        assert!(matches(&s(&[1, 0, 1]), &PartialAssignment::single(0, true)));
        assert!(!matches(&s(&[1, 0, 1]), &PartialAssignment::single(1, true)));
        assert!(matches(&s(&[1, 0, 0]), &PartialAssignment::new()));
    }

    #[test]
    fn contradictory_pairs_rejected() {
        assert!(PartialAssignment::from_pairs([(3, true), (3, false)]).is_err());
        assert_eq!(
            PartialAssignment::from_pairs([(3, true), (3, true)]).unwrap().len(),
            1
        );
    }

    #[test]
    fn wide_states_cross_word_boundaries() {
        let mut st = State::zeros(130);
        st.set(64, true);
        st.set(129, true);
        assert!(st.get(64) && st.get(129) && !st.get(63));
        assert_eq!(st.count_ones(), 2);
        st.flip(129);
        assert_eq!(st.count_ones(), 1);
    }

    #[test]
    fn serde_uses_string_keys() {
        let a = PartialAssignment::from_pairs([(10, true), (2, false)]).unwrap();
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(json, r#"{"2":0,"10":1}"#);
        let back: PartialAssignment = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
        assert!(serde_json::from_str::<PartialAssignment>(r#"{"1":2}"#).is_err());
    }
}
