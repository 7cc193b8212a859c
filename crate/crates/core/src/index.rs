//! TF-IDF item vectors, the inverted index over them, and plain search.
//!
//! Item weight for term `t` is `tf(t) * idf(t)` with
//! `idf(t) = ln(N / df(t)) + 1`. Tag occurrences count [`TAG_BOOST`] times
//! as much as title or description tokens toward `tf`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::text::{normalize_tag, tokenize};
use crate::vector::{cosine, TermVector};

pub const TAG_BOOST: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexFields {
    pub tags: bool,
    pub title: bool,
    pub description: bool,
}

impl Default for IndexFields {
    fn default() -> Self {
        Self {
            tags: true,
            title: true,
            description: true,
        }
    }
}

impl IndexFields {
    pub fn tags_only() -> Self {
        Self {
            tags: true,
            title: false,
            description: false,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ItemVectorIndex {
    pub fields: IndexFields,
    pub item_count: usize,
    pub vectors: BTreeMap<String, TermVector>,
    /// Term -> item ids, ascending.
    pub postings: BTreeMap<String, Vec<String>>,
    pub doc_freq: BTreeMap<String, usize>,
    /// Raw (normalized) tag counts per item, used wherever tag frequencies
    /// rather than TF-IDF weights are aggregated.
    pub tag_counts: BTreeMap<String, BTreeMap<String, u32>>,
}

pub fn build_index(corpus: &Corpus, fields: IndexFields) -> ItemVectorIndex {
    let mut raw_tf: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    let mut tag_counts = BTreeMap::new();

    for item in corpus.items.values() {
        let mut tf: BTreeMap<String, f64> = BTreeMap::new();
        let mut tags: BTreeMap<String, u32> = BTreeMap::new();
        for tag in &item.tags {
            *tags.entry(tag.clone()).or_insert(0) += 1;
        }
        if fields.tags {
            for (tag, n) in &tags {
                *tf.entry(tag.clone()).or_insert(0.0) += TAG_BOOST * f64::from(*n);
            }
        }
        if fields.title {
            for tok in tokenize(&item.title) {
                *tf.entry(tok).or_insert(0.0) += 1.0;
            }
        }
        if fields.description {
            for tok in tokenize(&item.description) {
                *tf.entry(tok).or_insert(0.0) += 1.0;
            }
        }
        tag_counts.insert(item.id.clone(), tags);
        raw_tf.insert(item.id.clone(), tf);
    }

    let mut postings: BTreeMap<String, Vec<String>> = BTreeMap::new();
    // raw_tf iterates in ascending item id, so postings come out sorted.
    for (id, tf) in &raw_tf {
        for term in tf.keys() {
            postings.entry(term.clone()).or_default().push(id.clone());
        }
    }
    let doc_freq: BTreeMap<String, usize> =
        postings.iter().map(|(t, ids)| (t.clone(), ids.len())).collect();

    let item_count = corpus.items.len();
    let vectors = raw_tf
        .into_iter()
        .map(|(id, tf)| {
            let v = TermVector::from_weights(
                tf.into_iter()
                    .map(|(t, f)| {
                        let w = f * idf(item_count, doc_freq[&t]);
                        (t, w)
                    }),
            );
            (id, v)
        })
        .collect();

    ItemVectorIndex {
        fields,
        item_count,
        vectors,
        postings,
        doc_freq,
        tag_counts,
    }
}

pub fn idf(item_count: usize, doc_freq: usize) -> f64 {
    (item_count as f64 / doc_freq as f64).ln() + 1.0
}

impl ItemVectorIndex {
    pub fn vector(&self, item_id: &str) -> Option<&TermVector> {
        self.vectors.get(item_id)
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.doc_freq.get(term).map(|&df| idf(self.item_count, df))
    }

    pub fn postings(&self, term: &str) -> &[String] {
        self.postings.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Items containing at least one query term.
    pub fn matching_items(&self, query: &QuerySpec) -> BTreeSet<String> {
        query
            .terms
            .iter()
            .flat_map(|t| self.postings(t).iter().cloned())
            .collect()
    }

    /// TF-IDF query vector. Terms unknown to the index carry no weight.
    pub fn query_vector(&self, query: &QuerySpec) -> TermVector {
        let mut tf: BTreeMap<&str, f64> = BTreeMap::new();
        for t in &query.terms {
            *tf.entry(t.as_str()).or_insert(0.0) += 1.0;
        }
        TermVector::from_weights(
            tf.into_iter()
                .filter_map(|(t, f)| self.idf(t).map(|idf| (t, f * idf))),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    Plain,
    Cluster,
    Community,
}

impl std::str::FromStr for SearchMode {
    type Err = QueryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plain" => Ok(SearchMode::Plain),
            "cluster" => Ok(SearchMode::Cluster),
            "community" => Ok(SearchMode::Community),
            other => Err(QueryError::UnknownMode(other.to_string())),
        }
    }
}

impl std::fmt::Display for SearchMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SearchMode::Plain => "plain",
            SearchMode::Cluster => "cluster",
            SearchMode::Community => "community",
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QueryError {
    #[error("query has no terms")]
    Empty,
    #[error("unknown search mode {0:?} (expected plain, cluster or community)")]
    UnknownMode(String),
}

/// A parsed query. Terms are whitespace/comma separated and normalized like
/// tags, so multi-token tags such as `new-york` stay matchable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub raw: String,
    pub terms: Vec<String>,
}

impl QuerySpec {
    pub fn parse(raw: &str) -> Result<Self, QueryError> {
        let terms: Vec<String> = raw
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter_map(normalize_tag)
            .collect();
        if terms.is_empty() {
            return Err(QueryError::Empty);
        }
        Ok(Self {
            raw: raw.to_string(),
            terms,
        })
    }

    /// Unit-weight vector over the distinct query terms.
    pub fn unit_vector(&self) -> TermVector {
        TermVector::unit(self.terms.iter().cloned())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredItem {
    pub item_id: String,
    pub score: f64,
}

/// Score descending, then id ascending.
pub fn by_score_then_id(a_score: f64, a_id: &str, b_score: f64, b_id: &str) -> Ordering {
    b_score
        .partial_cmp(&a_score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a_id.cmp(b_id))
}

pub fn sort_scored(items: &mut [ScoredItem]) {
    items.sort_by(|a, b| by_score_then_id(a.score, &a.item_id, b.score, &b.item_id));
}

/// Baseline TF-IDF cosine ranking over the items that share a term with
/// the query.
pub fn plain_search(index: &ItemVectorIndex, query: &QuerySpec, k: usize) -> Vec<ScoredItem> {
    let qv = index.query_vector(query);
    let mut hits: Vec<ScoredItem> = index
        .matching_items(query)
        .into_iter()
        .map(|id| {
            let score = cosine(&qv, &index.vectors[&id]);
            ScoredItem { item_id: id, score }
        })
        .collect();
    sort_scored(&mut hits);
    hits.truncate(k);
    hits
}
