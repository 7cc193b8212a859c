//! Query execution over an immutable, fully built index.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{extract_cluster_concepts, ClusterError};
use crate::community::{
    build_community_vectors, merge_communities, CommunityVector, DEFAULT_SIM_THRESHOLD,
    DEFAULT_TRIM_STD,
};
use crate::concept::Concept;
use crate::corpus::{corpus_stats, Corpus, CorpusStats};
use crate::index::{build_index, plain_search, IndexFields, ItemVectorIndex, QuerySpec, SearchMode};
use crate::ranker::{
    blend_alpha, group_by_concept, rank, select_concepts, ConceptGroup, ConfigError, RankedHit,
    RankerConfig,
};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error("unknown concept {0:?}")]
    UnknownConcept(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildSettings {
    pub fields: IndexFields,
    pub trim_std: f64,
    pub sim_threshold: f64,
}

impl Default for BuildSettings {
    fn default() -> Self {
        Self {
            fields: IndexFields::default(),
            trim_std: DEFAULT_TRIM_STD,
            sim_threshold: DEFAULT_SIM_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchEngine {
    pub settings: BuildSettings,
    pub corpus: Corpus,
    pub index: ItemVectorIndex,
    pub community_vectors: Vec<CommunityVector>,
    /// Communities without any tagged pool item.
    pub empty_communities: Vec<String>,
    pub concepts: Vec<Concept>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub mode: SearchMode,
    /// Distinct items that received a nonzero score in this pass.
    pub total_candidates: usize,
    /// Effective alpha after the fallback rule.
    pub alpha: f64,
    pub hits: Vec<RankedHit>,
    pub groups: Vec<ConceptGroup>,
}

/// A concept as listed for a query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptSummary {
    pub concept_id: String,
    pub label: Vec<String>,
    pub query_score: f64,
    pub popularity: f64,
    pub concept_score: f64,
    pub member_items: usize,
}

impl SearchEngine {
    pub fn build(corpus: Corpus, settings: BuildSettings) -> Self {
        let index = build_index(&corpus, settings.fields);
        let (community_vectors, empty_communities) =
            build_community_vectors(&corpus, &index, settings.trim_std);
        let concepts = merge_communities(&community_vectors, settings.sim_threshold);
        Self {
            settings,
            corpus,
            index,
            community_vectors,
            empty_communities,
            concepts,
        }
    }

    pub fn stats(&self) -> CorpusStats {
        corpus_stats(&self.corpus)
    }

    /// Concepts the given mode would consider for `query`.
    pub fn query_concepts(
        &self,
        query: &QuerySpec,
        cfg: &RankerConfig,
    ) -> Result<Vec<Concept>, SearchError> {
        let concepts = match cfg.mode {
            SearchMode::Plain => Vec::new(),
            SearchMode::Community => self.concepts.clone(),
            SearchMode::Cluster => extract_cluster_concepts(&self.index, query, &cfg.cluster)?,
        };
        match &cfg.pinned_concept {
            None => Ok(concepts),
            Some(id) => {
                let pinned: Vec<Concept> = concepts.into_iter().filter(|c| &c.id == id).collect();
                if pinned.is_empty() {
                    Err(SearchError::UnknownConcept(id.clone()))
                } else {
                    Ok(pinned)
                }
            }
        }
    }

    /// Top concepts for a query, as shown by the `concepts` listing.
    pub fn concept_summaries(
        &self,
        query: &QuerySpec,
        cfg: &RankerConfig,
        top: usize,
    ) -> Result<Vec<ConceptSummary>, SearchError> {
        let concepts = self.query_concepts(query, cfg)?;
        Ok(select_concepts(query, &concepts, top)
            .into_iter()
            .map(|s| ConceptSummary {
                concept_id: s.concept.id.clone(),
                label: s.concept.label.clone(),
                query_score: s.query_score,
                popularity: s.concept.popularity,
                concept_score: s.concept_score,
                member_items: s.concept.member_item_ids.len(),
            })
            .collect())
    }

    pub fn search(&self, query: &QuerySpec, cfg: &RankerConfig) -> Result<SearchOutcome, SearchError> {
        cfg.validate()?;
        let plain_hits = plain_search(&self.index, query, self.index.item_count.max(cfg.k));

        if cfg.mode == SearchMode::Plain {
            let total_candidates = plain_hits.len();
            let hits = plain_hits.iter().take(cfg.k).map(RankedHit::plain).collect();
            return Ok(SearchOutcome {
                mode: SearchMode::Plain,
                total_candidates,
                alpha: 0.0,
                hits,
                groups: Vec::new(),
            });
        }

        let concepts = self.query_concepts(query, cfg)?;
        let mut group_cfg = cfg.clone();
        if cfg.pinned_concept.is_some() {
            group_cfg.group_size = cfg.k;
        }
        let concept_hits = rank(query, &concepts, cfg, &self.index);
        let groups = group_by_concept(query, &concepts, &group_cfg, &self.index);

        let mut alpha = cfg.alpha;
        if cfg.adaptive_alpha && cfg.pinned_concept.is_none() && !self.has_strong_concept(&groups, &concepts, cfg) {
            alpha = 0.0;
        }
        let hits = if cfg.pinned_concept.is_some() {
            concept_hits.iter().take(cfg.k).cloned().collect()
        } else {
            blend_alpha(&concept_hits, &plain_hits, alpha, cfg.k)
        };

        let mut scored: BTreeSet<&str> = concept_hits.iter().map(|h| h.item_id.as_str()).collect();
        if alpha < 1.0 || concept_hits.len() < cfg.k {
            scored.extend(plain_hits.iter().map(|h| h.item_id.as_str()));
        }

        Ok(SearchOutcome {
            mode: cfg.mode.clone(),
            total_candidates: scored.len(),
            alpha,
            hits,
            groups,
        })
    }

    /// Whether any selected concept is backed by evidence strong enough to
    /// keep the configured alpha. Query-time clusters always are.
    fn has_strong_concept(&self, groups: &[ConceptGroup], concepts: &[Concept], cfg: &RankerConfig) -> bool {
        groups.iter().any(|g| {
            concepts
                .iter()
                .find(|c| c.id == g.concept_id)
                .map(|c| c.largest_community().is_none_or(|m| m >= cfg.popularity_floor))
                .unwrap_or(false)
        })
    }
}
