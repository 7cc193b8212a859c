//! Concept-driven ranking.
//!
//! An item's score is the sum, over the query's top concepts, of
//! `P(Q|C) * P(C) * P(I|C,Q)`: how well the concept matches the query, how
//! popular the concept is, and how well the item fits the concept. The
//! query prior `1/P(Q)` is the same for every item and is left out.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{item_cluster_score, ClusterConfig};
use crate::community::{candidate_items, concept_query_score, item_concept_score};
use crate::concept::Concept;
use crate::index::{by_score_then_id, ItemVectorIndex, QuerySpec, ScoredItem, SearchMode};

pub const DEFAULT_LAMBDA: f64 = 0.5;
pub const DEFAULT_ALPHA: f64 = 1.0;
pub const DEFAULT_TOP_CONCEPTS: usize = 10;
pub const DEFAULT_GROUP_SIZE: usize = 5;
/// Communities with fewer members than this do not count as good evidence
/// when deciding whether to fall back to plain search.
pub const DEFAULT_POPULARITY_FLOOR: u64 = 10;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("lambda must be in [0, 1], got {0}")]
    Lambda(f64),
    #[error("alpha must be in [0, 1], got {0}")]
    Alpha(f64),
    #[error("top_concepts must be at least 1")]
    TopConcepts,
    #[error("k must be at least 1")]
    K,
    #[error("clusters must be at least 1")]
    Clusters,
    #[error("lsi_rank must be at least 1")]
    LsiRank,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankerConfig {
    pub mode: SearchMode,
    /// Weight of community membership against item-concept similarity.
    pub lambda: f64,
    /// Fraction of the top `k` reserved for concept-driven results.
    pub alpha: f64,
    pub top_concepts: usize,
    pub k: usize,
    /// Items shown per concept group.
    pub group_size: usize,
    /// Drop `alpha` to zero when no matching concept has a community with
    /// at least `popularity_floor` members.
    pub adaptive_alpha: bool,
    pub popularity_floor: u64,
    /// Restrict ranking to this concept id.
    pub pinned_concept: Option<String>,
    pub cluster: ClusterConfig,
}

impl Default for RankerConfig {
    fn default() -> Self {
        Self {
            mode: SearchMode::Community,
            lambda: DEFAULT_LAMBDA,
            alpha: DEFAULT_ALPHA,
            top_concepts: DEFAULT_TOP_CONCEPTS,
            k: 10,
            group_size: DEFAULT_GROUP_SIZE,
            adaptive_alpha: true,
            popularity_floor: DEFAULT_POPULARITY_FLOOR,
            pinned_concept: None,
            cluster: ClusterConfig::default(),
        }
    }
}

impl RankerConfig {
    pub fn with_mode(mode: SearchMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(ConfigError::Lambda(self.lambda));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(ConfigError::Alpha(self.alpha));
        }
        if self.top_concepts == 0 {
            return Err(ConfigError::TopConcepts);
        }
        if self.k == 0 {
            return Err(ConfigError::K);
        }
        if self.cluster.clusters == 0 {
            return Err(ConfigError::Clusters);
        }
        if self.cluster.lsi_rank == 0 {
            return Err(ConfigError::LsiRank);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HitOrigin {
    Concept,
    Plain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptContribution {
    pub concept_id: String,
    /// `P(Q|C) * P(C) * P(I|C,Q)`
    pub term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedHit {
    pub item_id: String,
    pub score: f64,
    pub origin: HitOrigin,
    pub contributing_concepts: Vec<ConceptContribution>,
}

impl RankedHit {
    pub fn plain(hit: &ScoredItem) -> Self {
        Self {
            item_id: hit.item_id.clone(),
            score: hit.score,
            origin: HitOrigin::Plain,
            contributing_concepts: Vec::new(),
        }
    }
}

/// A concept with its query-dependent scores.
#[derive(Debug, Clone)]
pub struct ScoredConcept<'a> {
    pub concept: &'a Concept,
    /// `P(Q|C)`
    pub query_score: f64,
    /// `P(Q|C) * P(C)`
    pub concept_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptGroup {
    pub concept_id: String,
    pub label: Vec<String>,
    pub query_score: f64,
    pub popularity: f64,
    pub concept_score: f64,
    /// Items by `P(I|C,Q)`, best first.
    pub items: Vec<ScoredItem>,
}

/// Concepts with a nonzero query score, best `P(Q|C) * P(C)` first, at
/// most `top`.
pub fn select_concepts<'a>(
    query: &QuerySpec,
    concepts: &'a [Concept],
    top: usize,
) -> Vec<ScoredConcept<'a>> {
    let mut scored: Vec<ScoredConcept<'a>> = concepts
        .iter()
        .filter_map(|concept| {
            let query_score = concept_query_score(concept, query);
            (query_score > 0.0).then_some(ScoredConcept {
                concept,
                query_score,
                concept_score: query_score * concept.popularity,
            })
        })
        .collect();
    scored.sort_by(|a, b| {
        b.concept_score
            .partial_cmp(&a.concept_score)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.concept.id.cmp(&b.concept.id))
    });
    scored.truncate(top);
    scored
}

/// `P(I|C,Q)`. Cluster concepts only admit their own members; community
/// concepts mix membership with similarity.
pub fn item_relevance(
    concept: &Concept,
    item_id: &str,
    index: &ItemVectorIndex,
    lambda: f64,
) -> f64 {
    let Some(v) = index.vector(item_id) else {
        return 0.0;
    };
    if concept.is_cluster() {
        item_cluster_score(item_id, v, concept)
    } else {
        item_concept_score(item_id, v, concept, lambda)
    }
}

pub fn concept_candidates(
    concept: &Concept,
    index: &ItemVectorIndex,
    query: &QuerySpec,
) -> BTreeSet<String> {
    if concept.is_cluster() {
        concept.member_item_ids.clone()
    } else {
        candidate_items(concept, index, query)
    }
}

/// Full concept-driven ranking, untruncated. Items scoring zero are left
/// out.
pub fn rank(
    query: &QuerySpec,
    concepts: &[Concept],
    cfg: &RankerConfig,
    index: &ItemVectorIndex,
) -> Vec<RankedHit> {
    let selected = select_concepts(query, concepts, cfg.top_concepts);
    let candidates: BTreeSet<String> = selected
        .iter()
        .flat_map(|s| concept_candidates(s.concept, index, query))
        .collect();

    let mut hits: Vec<RankedHit> = candidates
        .into_iter()
        .filter_map(|item_id| {
            let mut score = 0.0;
            let mut contributing = Vec::new();
            for s in &selected {
                let term = s.concept_score * item_relevance(s.concept, &item_id, index, cfg.lambda);
                if term > 0.0 {
                    score += term;
                    contributing.push(ConceptContribution {
                        concept_id: s.concept.id.clone(),
                        term,
                    });
                }
            }
            (score > 0.0).then_some(RankedHit {
                item_id,
                score,
                origin: HitOrigin::Concept,
                contributing_concepts: contributing,
            })
        })
        .collect();
    hits.sort_by(|a, b| by_score_then_id(a.score, &a.item_id, b.score, &b.item_id));
    hits
}

/// Top `n` with `ceil(alpha * n)` slots reserved for concept hits; the rest
/// (and any slots the concept list cannot fill) come from plain hits not
/// already shown.
pub fn blend_alpha(
    concept_hits: &[RankedHit],
    plain_hits: &[ScoredItem],
    alpha: f64,
    n: usize,
) -> Vec<RankedHit> {
    // guard against 0.3 * 10 = 3.0000000000000004
    let reserved = ((alpha * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n);
    let mut out: Vec<RankedHit> = concept_hits.iter().take(reserved).cloned().collect();
    let mut seen: BTreeSet<String> = out.iter().map(|h| h.item_id.clone()).collect();
    for hit in plain_hits {
        if out.len() >= n {
            break;
        }
        if seen.insert(hit.item_id.clone()) {
            out.push(RankedHit::plain(hit));
        }
    }
    out
}

/// Top concepts, each with its best items by `P(I|C,Q)`.
pub fn group_by_concept(
    query: &QuerySpec,
    concepts: &[Concept],
    cfg: &RankerConfig,
    index: &ItemVectorIndex,
) -> Vec<ConceptGroup> {
    select_concepts(query, concepts, cfg.top_concepts)
        .into_iter()
        .map(|s| {
            let mut items: Vec<ScoredItem> = concept_candidates(s.concept, index, query)
                .into_iter()
                .filter_map(|id| {
                    let score = item_relevance(s.concept, &id, index, cfg.lambda);
                    (score > 0.0).then_some(ScoredItem { item_id: id, score })
                })
                .collect();
            crate::index::sort_scored(&mut items);
            items.truncate(cfg.group_size);
            ConceptGroup {
                concept_id: s.concept.id.clone(),
                label: s.concept.label.clone(),
                query_score: s.query_score,
                popularity: s.concept.popularity,
                concept_score: s.concept_score,
                items,
            }
        })
        .collect()
}
