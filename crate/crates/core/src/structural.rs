//! Facets describing object and array structure beyond per-key types.
//!
//! Per-key and per-item types themselves (object properties, array items)
//! live on the schema nodes; see [`crate::schema`].

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::json::JsonValue;
use crate::monoid::{MergeError, Monoid};

/// Keys present in every observed object. `None` is the identity ("every
/// key"), replaced by the first real observation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Required {
    keys: Option<BTreeSet<String>>,
}

impl Required {
    pub fn of<'a>(keys: impl IntoIterator<Item = &'a String>) -> Required {
        Required { keys: Some(keys.into_iter().cloned().collect()) }
    }

    pub fn keys(&self) -> Option<&BTreeSet<String>> {
        self.keys.as_ref()
    }

    pub fn contains(&self, key: &str) -> bool {
        self.keys.as_ref().is_some_and(|k| k.contains(key))
    }
}

impl Monoid for Required {
    fn identity_like(&self) -> Self {
        Required::default()
    }

    fn merge_from(&mut self, other: &Self) -> Result<(), MergeError> {
        if let Some(theirs) = &other.keys {
            match &mut self.keys {
                None => self.keys = Some(theirs.clone()),
                Some(mine) => mine.retain(|k| theirs.contains(k)),
            }
        }
        Ok(())
    }
}

/// How many observed objects carried each key, out of how many objects.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AttributeCounts {
    pub counts: BTreeMap<String, u64>,
    pub total: u64,
}

impl AttributeCounts {
    pub fn of<'a>(keys: impl IntoIterator<Item = &'a String>) -> AttributeCounts {
        AttributeCounts { counts: keys.into_iter().map(|k| (k.clone(), 1)).collect(), total: 1 }
    }

    pub fn count(&self, key: &str) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    /// Fraction of objects containing `key`; `None` before any object.
    pub fn frequency(&self, key: &str) -> Option<f64> {
        (self.total > 0).then(|| self.count(key) as f64 / self.total as f64)
    }
}

impl Monoid for AttributeCounts {
    fn identity_like(&self) -> Self {
        AttributeCounts::default()
    }

    fn merge_from(&mut self, other: &Self) -> Result<(), MergeError> {
        for (k, c) in &other.counts {
            *self.counts.entry(k.clone()).or_insert(0) += c;
        }
        self.total += other.total;
        Ok(())
    }
}

/// Pairwise co-occurrence counts among object keys.
///
/// `a -> b` holds when every object containing `a` also contains `b`, i.e.
/// `pairs[a][b] == counts[a]`. Keys that never co-occur have no entry.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Dependencies {
    counts: BTreeMap<String, u64>,
    pairs: BTreeMap<String, BTreeMap<String, u64>>,
}

impl Dependencies {
    pub fn of<'a>(keys: impl IntoIterator<Item = &'a String> + Clone) -> Dependencies {
        let mut deps = Dependencies::default();
        for a in keys.clone() {
            deps.counts.insert(a.clone(), 1);
            let row: BTreeMap<String, u64> = keys.clone().into_iter().filter(|b| *b != a).map(|b| (b.clone(), 1)).collect();
            if !row.is_empty() {
                deps.pairs.insert(a.clone(), row);
            }
        }
        deps
    }

    pub fn count(&self, key: &str) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    pub fn pair_count(&self, a: &str, b: &str) -> u64 {
        self.pairs.get(a).and_then(|row| row.get(b)).copied().unwrap_or(0)
    }

    pub fn holds(&self, a: &str, b: &str) -> bool {
        let ca = self.count(a);
        a != b && ca > 0 && self.pair_count(a, b) == ca
    }

    /// Every `a -> {b, ...}` grouping with at least one dependent key.
    pub fn dependents(&self) -> BTreeMap<String, Vec<String>> {
        let mut out = BTreeMap::new();
        for (a, row) in &self.pairs {
            let ca = self.count(a);
            let deps: Vec<String> = row.iter().filter(|(_, &c)| c == ca).map(|(b, _)| b.clone()).collect();
            if !deps.is_empty() {
                out.insert(a.clone(), deps);
            }
        }
        out
    }
}

impl Monoid for Dependencies {
    fn identity_like(&self) -> Self {
        Dependencies::default()
    }

    fn merge_from(&mut self, other: &Self) -> Result<(), MergeError> {
        for (k, c) in &other.counts {
            *self.counts.entry(k.clone()).or_insert(0) += c;
        }
        for (a, row) in &other.pairs {
            let mine = self.pairs.entry(a.clone()).or_default();
            for (b, c) in row {
                *mine.entry(b.clone()).or_insert(0) += c;
            }
        }
        Ok(())
    }
}

/// Whether every observed array held pairwise-distinct elements. Element
/// equality is canonical-JSON equality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unique {
    pub is_unique: bool,
}

impl Unique {
    pub fn of(items: &[JsonValue]) -> Unique {
        let mut seen = HashSet::with_capacity(items.len());
        let is_unique = items.iter().all(|v| seen.insert(v.canonical_json()));
        Unique { is_unique }
    }
}

impl Default for Unique {
    fn default() -> Self {
        Unique { is_unique: true }
    }
}

impl Monoid for Unique {
    fn identity_like(&self) -> Self {
        Unique::default()
    }

    fn merge_from(&mut self, other: &Self) -> Result<(), MergeError> {
        self.is_unique &= other.is_unique;
        Ok(())
    }
}
