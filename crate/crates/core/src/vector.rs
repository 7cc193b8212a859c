//! Sparse nonnegative term vectors.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Sparse term -> weight map with a cached Euclidean norm.
///
/// Only strictly positive, finite weights are stored.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct TermVector {
    entries: BTreeMap<String, f64>,
    norm: f64,
}

impl From<BTreeMap<String, f64>> for TermVector {
    fn from(map: BTreeMap<String, f64>) -> Self {
        TermVector::from_weights(map)
    }
}

impl From<TermVector> for BTreeMap<String, f64> {
    fn from(v: TermVector) -> Self {
        v.entries
    }
}

impl TermVector {
    pub fn from_weights<I, S>(weights: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut entries = BTreeMap::new();
        for (term, w) in weights {
            if w.is_finite() && w > 0.0 {
                *entries.entry(term.into()).or_insert(0.0) += w;
            }
        }
        let norm = entries.values().map(|w| w * w).sum::<f64>().sqrt();
        Self { entries, norm }
    }

    /// A vector with weight 1 for every distinct term.
    pub fn unit<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut entries = BTreeMap::new();
        for t in terms {
            entries.insert(t.into(), 1.0);
        }
        Self::from_weights(entries)
    }

    pub fn get(&self, term: &str) -> f64 {
        self.entries.get(term).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, term: &str) -> bool {
        self.entries.contains_key(term)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn sum(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(t, w)| (t.as_str(), *w))
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn dot(&self, other: &TermVector) -> f64 {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .entries
            .iter()
            .filter_map(|(t, w)| large.entries.get(t).map(|v| w * v))
            .sum()
    }

    /// Rescaled so the weights sum to one. Empty stays empty.
    pub fn l1_normalized(&self) -> TermVector {
        let total = self.sum();
        if total <= 0.0 {
            return TermVector::default();
        }
        TermVector::from_weights(self.entries.iter().map(|(t, w)| (t.clone(), w / total)))
    }

    /// The `n` heaviest terms; equal weights are broken lexicographically.
    pub fn top_terms(&self, n: usize) -> Vec<String> {
        let mut terms: Vec<(&String, f64)> = self.entries.iter().map(|(t, w)| (t, *w)).collect();
        terms.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.0.cmp(b.0))
        });
        terms.into_iter().take(n).map(|(t, _)| t.clone()).collect()
    }
}

/// Cosine similarity. Zero when either vector is empty.
pub fn cosine(a: &TermVector, b: &TermVector) -> f64 {
    if a.norm == 0.0 || b.norm == 0.0 {
        return 0.0;
    }
    (a.dot(b) / (a.norm * b.norm)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn v(pairs: &[(&str, f64)]) -> TermVector {
        TermVector::from_weights(pairs.iter().map(|(t, w)| (*t, *w)))
    }

    #[test]
    fn cosine_closed_forms() {
        let a = v(&[("x", 1.0), ("y", 1.0)]);
        let b = v(&[("x", 1.0)]);
        assert_abs_diff_eq!(cosine(&a, &b), 1.0 / 2f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(cosine(&a, &a), 1.0, epsilon = 1e-12);
        assert_eq!(cosine(&b, &v(&[("z", 3.0)])), 0.0);
        assert_eq!(cosine(&a, &TermVector::default()), 0.0);
    }

    #[test]
    fn zero_and_negative_weights_are_not_stored() {
        let a = v(&[("x", 0.0), ("y", -1.0), ("z", 2.0)]);
        assert_eq!(a.len(), 1);
        assert_eq!(a.norm(), 2.0);
    }

    #[test]
    fn top_terms_breaks_ties_lexicographically() {
        let a = v(&[("b", 1.0), ("a", 1.0), ("c", 2.0), ("d", 0.5)]);
        assert_eq!(a.top_terms(3), vec!["c", "a", "b"]);
    }

    #[test]
    fn serde_round_trip_restores_norm() {
        let a = v(&[("x", 3.0), ("y", 4.0)]);
        let json = serde_json::to_string(&a).unwrap();
        let back: TermVector = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
        assert_eq!(back.norm(), 5.0);
    }

    proptest! {
        #[test]
        fn norm_matches_entries(ws in proptest::collection::btree_map("[a-f]{1,2}", 0.0f64..10.0, 0..12)) {
            let vec = TermVector::from_weights(ws);
            let direct = vec.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
            prop_assert!((vec.norm() - direct).abs() < 1e-9);
            prop_assert!(vec.iter().all(|(_, w)| w > 0.0));
        }

        #[test]
        fn cosine_is_bounded_and_symmetric(
            a in proptest::collection::btree_map("[a-e]", 0.0f64..5.0, 0..6),
            b in proptest::collection::btree_map("[a-e]", 0.0f64..5.0, 0..6),
        ) {
            let (a, b) = (TermVector::from_weights(a), TermVector::from_weights(b));
            let c = cosine(&a, &b);
            prop_assert!((0.0..=1.0).contains(&c));
            prop_assert!((c - cosine(&b, &a)).abs() < 1e-12);
        }
    }
}
