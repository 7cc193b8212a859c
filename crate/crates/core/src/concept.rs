use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::vector::TermVector;

/// Number of terms used as a concept's human-readable label.
pub const LABEL_TERMS: usize = 3;

/// A community's share of a merged concept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityShare {
    pub community_id: String,
    /// Fraction of the concept vector contributed, proportional to the
    /// community's image count.
    pub weight: f64,
    pub member_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConceptSource {
    Communities {
        communities: Vec<CommunityShare>,
        member_total: u64,
    },
    Cluster {
        cluster: usize,
    },
}

/// A latent meaning of a query: a merged set of communities or a
/// query-time cluster of items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Concept {
    pub id: String,
    pub label: Vec<String>,
    /// Tag distribution, weights sum to one.
    pub vector: TermVector,
    /// Query-independent prior.
    pub popularity: f64,
    pub source: ConceptSource,
    pub member_item_ids: BTreeSet<String>,
}

impl Concept {
    pub fn new(
        id: String,
        vector: TermVector,
        popularity: f64,
        source: ConceptSource,
        member_item_ids: BTreeSet<String>,
    ) -> Self {
        Self {
            id,
            label: vector.top_terms(LABEL_TERMS),
            vector,
            popularity,
            source,
            member_item_ids,
        }
    }

    pub fn is_member(&self, item_id: &str) -> bool {
        self.member_item_ids.contains(item_id)
    }

    pub fn is_cluster(&self) -> bool {
        matches!(self.source, ConceptSource::Cluster { .. })
    }

    /// Largest member count among the concept's communities; `None` for
    /// cluster concepts.
    pub fn largest_community(&self) -> Option<u64> {
        match &self.source {
            ConceptSource::Communities { communities, .. } => {
                communities.iter().map(|c| c.member_count).max()
            }
            ConceptSource::Cluster { .. } => None,
        }
    }
}
