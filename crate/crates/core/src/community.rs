//! Community-based concept extraction.
//!
//! Each community is represented by the aggregated tag counts of its pool,
//! with rare tags trimmed and the result normalized to a tag distribution.
//! Near-duplicate communities are merged into a single concept whose
//! popularity grows with the log of the combined membership.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::concept::{CommunityShare, Concept, ConceptSource};
use crate::corpus::{Community, Corpus};
use crate::index::{ItemVectorIndex, QuerySpec};
use crate::vector::{cosine, TermVector};

pub const DEFAULT_SIM_THRESHOLD: f64 = 0.9;
pub const DEFAULT_TRIM_STD: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityVector {
    pub community_id: String,
    /// Tag distribution over the pool after trimming.
    pub vector: TermVector,
    /// Total tag occurrences before trimming.
    pub raw_tag_total: u64,
    pub image_count: usize,
    pub member_count: u64,
    pub item_ids: BTreeSet<String>,
}

impl CommunityVector {
    pub fn is_empty(&self) -> bool {
        self.vector.is_empty()
    }
}

/// Drops terms whose count is below `mean - num_std * stddev` (population
/// statistics). Never empties a nonempty input.
pub fn trim_low_frequency_with(
    counts: &BTreeMap<String, u64>,
    num_std: f64,
) -> BTreeMap<String, u64> {
    if counts.is_empty() {
        return BTreeMap::new();
    }
    let n = counts.len() as f64;
    let mean = counts.values().map(|&c| c as f64).sum::<f64>() / n;
    let var = counts
        .values()
        .map(|&c| (c as f64 - mean).powi(2))
        .sum::<f64>()
        / n;
    let threshold = mean - num_std * var.sqrt();
    let kept: BTreeMap<String, u64> = counts
        .iter()
        .filter(|(_, &c)| c as f64 >= threshold)
        .map(|(t, &c)| (t.clone(), c))
        .collect();
    if kept.is_empty() {
        counts.clone()
    } else {
        kept
    }
}

pub fn trim_low_frequency(counts: &BTreeMap<String, u64>) -> BTreeMap<String, u64> {
    trim_low_frequency_with(counts, DEFAULT_TRIM_STD)
}

pub fn build_community_vector(
    community: &Community,
    index: &ItemVectorIndex,
    trim_std: f64,
) -> CommunityVector {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut item_ids = BTreeSet::new();
    for id in &community.item_ids {
        let Some(tags) = index.tag_counts.get(id) else {
            continue;
        };
        item_ids.insert(id.clone());
        for (tag, &n) in tags {
            *counts.entry(tag.clone()).or_insert(0) += u64::from(n);
        }
    }
    let raw_tag_total = counts.values().sum();
    let trimmed = trim_low_frequency_with(&counts, trim_std);
    let vector =
        TermVector::from_weights(trimmed.into_iter().map(|(t, c)| (t, c as f64))).l1_normalized();
    CommunityVector {
        community_id: community.id.clone(),
        vector,
        raw_tag_total,
        image_count: item_ids.len(),
        member_count: community.members(),
        item_ids,
    }
}

/// Vectors for every community, plus the ids of those left empty (no
/// tagged items in the pool), which take no part in merging.
pub fn build_community_vectors(
    corpus: &Corpus,
    index: &ItemVectorIndex,
    trim_std: f64,
) -> (Vec<CommunityVector>, Vec<String>) {
    let mut vectors = Vec::new();
    let mut empty = Vec::new();
    for community in corpus.communities.values() {
        let cv = build_community_vector(community, index, trim_std);
        if cv.is_empty() {
            empty.push(cv.community_id);
        } else {
            vectors.push(cv);
        }
    }
    (vectors, empty)
}

pub fn community_popularity(member_total: u64) -> f64 {
    (1.0 + member_total as f64).ln()
}

/// Deterministic leader clustering of community vectors.
///
/// Communities are visited by descending member count (ties by id). Each
/// joins the first concept whose leader it matches with cosine at least
/// `sim_threshold`, or founds a new one.
pub fn merge_communities(vectors: &[CommunityVector], sim_threshold: f64) -> Vec<Concept> {
    let mut order: Vec<&CommunityVector> = vectors.iter().filter(|v| !v.is_empty()).collect();
    order.sort_by(|a, b| {
        b.member_count
            .cmp(&a.member_count)
            .then_with(|| a.community_id.cmp(&b.community_id))
    });

    // (leader, members)
    let mut groups: Vec<(&CommunityVector, Vec<&CommunityVector>)> = Vec::new();
    for cv in order {
        match groups
            .iter_mut()
            .find(|(leader, _)| cosine(&leader.vector, &cv.vector) >= sim_threshold)
        {
            Some((_, members)) => members.push(cv),
            None => groups.push((cv, vec![cv])),
        }
    }

    groups
        .into_iter()
        .map(|(leader, members)| {
            let images: usize = members.iter().map(|m| m.image_count).sum();
            let mut acc: BTreeMap<String, f64> = BTreeMap::new();
            let mut shares = Vec::with_capacity(members.len());
            for m in &members {
                let weight = m.image_count as f64 / images as f64;
                for (t, w) in m.vector.iter() {
                    *acc.entry(t.to_string()).or_insert(0.0) += weight * w;
                }
                shares.push(CommunityShare {
                    community_id: m.community_id.clone(),
                    weight,
                    member_count: m.member_count,
                });
            }
            let member_total: u64 = members.iter().map(|m| m.member_count).sum();
            let member_item_ids = members
                .iter()
                .flat_map(|m| m.item_ids.iter().cloned())
                .collect();
            Concept::new(
                format!("community:{}", leader.community_id),
                TermVector::from_weights(acc).l1_normalized(),
                community_popularity(member_total),
                ConceptSource::Communities {
                    communities: shares,
                    member_total,
                },
                member_item_ids,
            )
        })
        .collect()
}

/// Relevance of the query to a concept: cosine against the unit-weight
/// query vector.
pub fn concept_query_score(concept: &Concept, query: &QuerySpec) -> f64 {
    cosine(&concept.vector, &query.unit_vector())
}

/// `lambda * membership + (1 - lambda) * cosine(item, concept)`.
pub fn item_concept_score(
    item_id: &str,
    item_vector: &TermVector,
    concept: &Concept,
    lambda: f64,
) -> f64 {
    let membership = if concept.is_member(item_id) { 1.0 } else { 0.0 };
    lambda * membership + (1.0 - lambda) * cosine(item_vector, &concept.vector)
}

/// Pool members of the concept plus every item matching a query term.
pub fn candidate_items(
    concept: &Concept,
    index: &ItemVectorIndex,
    query: &QuerySpec,
) -> BTreeSet<String> {
    let mut out = concept.member_item_ids.clone();
    out.extend(index.matching_items(query));
    out
}
