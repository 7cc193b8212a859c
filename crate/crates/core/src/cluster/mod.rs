//! Query-time concept extraction: the items matching a query are projected
//! into a latent semantic space and grouped with k-means. Every non-empty
//! cluster becomes a concept whose popularity is its size.

pub mod kmeans;
pub mod lsi;
pub mod svd;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::concept::{Concept, ConceptSource};
use crate::index::{plain_search, ItemVectorIndex, QuerySpec};
use crate::vector::{cosine, TermVector};

pub use kmeans::{kmeans, ClusterAssignment, KMeansError};
pub use lsi::{lsi_project, LatentSpace, LsiError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClusterError {
    #[error(transparent)]
    Lsi(#[from] LsiError),
    #[error(transparent)]
    KMeans(#[from] KMeansError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub clusters: usize,
    /// Upper bound on the latent rank.
    pub lsi_rank: usize,
    pub seed: u64,
    /// Only the best-scoring matches (by TF-IDF) are clustered.
    pub match_cap: usize,
    pub max_iter: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            clusters: 5,
            lsi_rank: 50,
            seed: 42,
            match_cap: 1000,
            max_iter: kmeans::DEFAULT_MAX_ITER,
        }
    }
}

/// `min(max_rank, matches - 1, distinct terms)`, at least 1.
pub fn default_rank(max_rank: usize, matches: usize, distinct_terms: usize) -> usize {
    max_rank
        .min(matches.saturating_sub(1))
        .min(distinct_terms)
        .max(1)
}

/// One concept per non-empty cluster. The concept vector is the normalized
/// sum of the members' tag counts.
pub fn clusters_to_concepts(assignment: &ClusterAssignment, index: &ItemVectorIndex) -> Vec<Concept> {
    let mut concepts = Vec::new();
    for cluster in 0..assignment.k {
        let members: BTreeSet<String> = assignment
            .cluster_members(cluster)
            .map(str::to_string)
            .collect();
        if members.is_empty() {
            continue;
        }
        let mut counts: BTreeMap<&str, f64> = BTreeMap::new();
        for id in &members {
            if let Some(tags) = index.tag_counts.get(id) {
                for (t, &n) in tags {
                    *counts.entry(t.as_str()).or_insert(0.0) += f64::from(n);
                }
            }
        }
        concepts.push(Concept::new(
            format!("cluster:{cluster}"),
            TermVector::from_weights(counts).l1_normalized(),
            members.len() as f64,
            ConceptSource::Cluster { cluster },
            members,
        ));
    }
    concepts
}

/// Cosine between item and concept for cluster members, zero otherwise.
pub fn item_cluster_score(item_id: &str, item_vector: &TermVector, concept: &Concept) -> f64 {
    if concept.is_member(item_id) {
        cosine(item_vector, &concept.vector)
    } else {
        0.0
    }
}

/// Unit-length copy; LSI runs on cosine geometry so long tag lists do not
/// dominate the clustering.
fn unit(v: &TermVector) -> TermVector {
    let n = v.norm();
    TermVector::from_weights(v.iter().map(|(t, w)| (t, w / n)))
}

/// Clusters the query's matching items and returns their concepts.
pub fn extract_cluster_concepts(
    index: &ItemVectorIndex,
    query: &QuerySpec,
    cfg: &ClusterConfig,
) -> Result<Vec<Concept>, ClusterError> {
    let matches = plain_search(index, query, cfg.match_cap);
    if matches.is_empty() {
        return Ok(Vec::new());
    }
    let vectors: Vec<(String, TermVector)> = matches
        .into_iter()
        .map(|h| {
            let v = unit(&index.vectors[&h.item_id]);
            (h.item_id, v)
        })
        .collect();
    let refs: Vec<(String, &TermVector)> = vectors.iter().map(|(id, v)| (id.clone(), v)).collect();
    let distinct_terms = vectors
        .iter()
        .flat_map(|(_, v)| v.terms())
        .collect::<BTreeSet<_>>()
        .len();
    let rank = default_rank(cfg.lsi_rank, refs.len(), distinct_terms);
    let space = lsi_project(&refs, rank)?;
    let k = cfg.clusters.min(space.doc_coords.len()).max(1);
    let assignment = kmeans(&space.doc_coords, k, cfg.seed, cfg.max_iter)?;
    Ok(clusters_to_concepts(&assignment, index))
}
