//! Independent reference implementations and random inputs for the
//! integration tests. Nothing here calls into the scoring code under test;
//! everything is recomputed from the raw corpus with dense arithmetic.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tagconcept::concept::Concept;
use tagconcept::corpus::{Community, Corpus, TaggedItem};

const WORDS: [&str; 12] = [
    "red", "sunset", "beach", "t1", "t2", "old", "city", "night", "t5", "dog", "garden", "rain",
];

/// Random corpus with at most `max_items` items over a small skewed tag
/// vocabulary, some titled, some in communities.
pub fn random_corpus(seed: u64, max_items: usize) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(5..=max_items.max(5));
    let vocab = rng.random_range(8..=40);
    let mut items = Vec::with_capacity(n);
    for i in 0..n {
        let ntags = rng.random_range(0..=6);
        let tags: Vec<String> = (0..ntags)
            .map(|_| {
                // squaring skews toward low tag numbers
                let u: f64 = rng.random();
                format!("t{}", ((u * u) * vocab as f64) as usize)
            })
            .collect();
        let title = if rng.random_bool(0.4) {
            (0..rng.random_range(1..=3))
                .map(|_| *WORDS.choose(&mut rng).unwrap())
                .collect::<Vec<_>>()
                .join(if rng.random_bool(0.5) { " " } else { ", " })
        } else {
            String::new()
        };
        items.push(TaggedItem {
            id: format!("it{i:03}"),
            title,
            description: String::new(),
            tags,
            owner: format!("u{}", rng.random_range(0..10)),
            communities: Vec::new(),
        });
    }
    let ncomm = rng.random_range(0..=10);
    let mut communities = Vec::with_capacity(ncomm);
    for c in 0..ncomm {
        let size = rng.random_range(0..=n.min(25));
        let pool: BTreeSet<String> = (0..size)
            .map(|_| format!("it{:03}", rng.random_range(0..n)))
            .collect();
        communities.push(Community {
            id: format!("c{c}"),
            title: String::new(),
            description: String::new(),
            member_count: rng.random_range(1..=800),
            item_ids: pool.into_iter().collect(),
        });
    }
    Corpus::from_parts(items, communities).unwrap()
}

/// Random query of one to three terms, occasionally unknown to the corpus.
pub fn random_query(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(1..=3);
    (0..n)
        .map(|_| match rng.random_range(0..10) {
            0 => "zzunknown".to_string(),
            1 => WORDS.choose(rng).unwrap().to_string(),
            _ => format!("t{}", rng.random_range(0..12)),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn query_terms(raw: &str) -> Vec<String> {
    raw.split(|c: char| c.is_whitespace() || c == ',')
        .map(|t| t.trim().to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

fn title_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.to_lowercase().chars() {
        if ch.is_alphanumeric() {
            cur.push(ch);
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Dense TF-IDF model of a corpus: tags weigh double, title words once,
/// idf = ln(N / df) + 1.
pub struct DenseModel {
    pub terms: Vec<String>,
    pub col: BTreeMap<String, usize>,
    pub idf: Vec<f64>,
    pub items: BTreeMap<String, Vec<f64>>,
}

impl DenseModel {
    pub fn new(corpus: &Corpus) -> Self {
        let mut tf: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for item in corpus.items.values() {
            let row = tf.entry(item.id.clone()).or_default();
            for t in &item.tags {
                *row.entry(t.clone()).or_insert(0.0) += 2.0;
            }
            for t in title_tokens(&item.title) {
                *row.entry(t).or_insert(0.0) += 1.0;
            }
        }
        let terms: Vec<String> = tf
            .values()
            .flat_map(|r| r.keys().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let col: BTreeMap<String, usize> =
            terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        let n = corpus.items.len() as f64;
        let mut df = vec![0usize; terms.len()];
        for row in tf.values() {
            for t in row.keys() {
                df[col[t]] += 1;
            }
        }
        let idf: Vec<f64> = df.iter().map(|&d| (n / d as f64).ln() + 1.0).collect();
        let items = tf
            .iter()
            .map(|(id, row)| {
                let mut v = vec![0.0; terms.len()];
                for (t, f) in row {
                    v[col[t]] = f * idf[col[t]];
                }
                (id.clone(), v)
            })
            .collect();
        Self {
            terms,
            col,
            idf,
            items,
        }
    }

    pub fn dense(&self, weights: impl IntoIterator<Item = (String, f64)>) -> Vec<f64> {
        let mut v = vec![0.0; self.terms.len()];
        for (t, w) in weights {
            if let Some(&c) = self.col.get(&t) {
                v[c] += w;
            }
        }
        v
    }

    pub fn query_tfidf(&self, terms: &[String]) -> Vec<f64> {
        let mut v = vec![0.0; self.terms.len()];
        for t in terms {
            if let Some(&c) = self.col.get(t) {
                v[c] += self.idf[c];
            }
        }
        v
    }

    pub fn matches(&self, item_id: &str, terms: &[String]) -> bool {
        let v = &self.items[item_id];
        terms.iter().any(|t| self.col.get(t).is_some_and(|&c| v[c] > 0.0))
    }
}

pub fn dense_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Exhaustive plain search: every item scored against the TF-IDF query.
pub fn oracle_plain(model: &DenseModel, raw_query: &str) -> BTreeMap<String, f64> {
    let q = model.query_tfidf(&query_terms(raw_query));
    model
        .items
        .iter()
        .map(|(id, v)| (id.clone(), dense_cosine(&q, v)))
        .filter(|(_, s)| *s > 0.0)
        .collect()
}

/// Unit-weight cosine of a concept distribution against the distinct
/// query terms.
pub fn oracle_query_score(concept: &Concept, terms: &[String]) -> f64 {
    let distinct: BTreeSet<&String> = terms.iter().collect();
    let norm = concept.vector.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    if norm == 0.0 || distinct.is_empty() {
        return 0.0;
    }
    let hit: f64 = distinct.iter().map(|t| concept.vector.get(t)).sum();
    hit / (norm * (distinct.len() as f64).sqrt())
}

/// Brute-force concept-driven score: every (item, selected concept) pair
/// summed. Candidate items are pool members of a selected concept plus,
/// for community concepts, every item carrying a query term.
pub fn oracle_rank(
    model: &DenseModel,
    concepts: &[Concept],
    raw_query: &str,
    lambda: f64,
    top: usize,
) -> BTreeMap<String, f64> {
    let terms = query_terms(raw_query);
    let mut scored: Vec<(f64, &Concept)> = concepts
        .iter()
        .map(|c| (oracle_query_score(c, &terms), c))
        .filter(|(s, _)| *s > 0.0)
        .map(|(s, c)| (s * c.popularity, c))
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then_with(|| a.1.id.cmp(&b.1.id)));
    scored.truncate(top);

    let mut out = BTreeMap::new();
    for (id, item_vec) in &model.items {
        let matching = model.matches(id, &terms);
        let candidate = scored.iter().any(|(_, c)| {
            c.member_item_ids.contains(id) || (!c.is_cluster() && matching)
        });
        if !candidate {
            continue;
        }
        let mut total = 0.0;
        for (cs, c) in &scored {
            let cv = model.dense(c.vector.iter().map(|(t, w)| (t.to_string(), w)));
            let cos = dense_cosine(item_vec, &cv);
            let member = c.member_item_ids.contains(id);
            let rel = if c.is_cluster() {
                if member {
                    cos
                } else {
                    0.0
                }
            } else {
                lambda * if member { 1.0 } else { 0.0 } + (1.0 - lambda) * cos
            };
            total += cs * rel;
        }
        if total > 0.0 {
            out.insert(id.clone(), total);
        }
    }
    out
}

/// Checks a ranked list against oracle scores: same ids, scores within
/// `tol`, and no adjacent pair out of order beyond numerical ties. Returns
/// a description of the first discrepancy.
pub fn check_ranking(
    actual: &[(String, f64)],
    oracle: &BTreeMap<String, f64>,
    tol: f64,
) -> Result<(), String> {
    let ids: BTreeSet<&String> = actual.iter().map(|(id, _)| id).collect();
    let expected: BTreeSet<&String> = oracle.keys().collect();
    if ids.len() != actual.len() {
        return Err("duplicate ids in ranking".into());
    }
    if ids != expected {
        let missing: Vec<_> = expected.difference(&ids).take(5).collect();
        let extra: Vec<_> = ids.difference(&expected).take(5).collect();
        return Err(format!("id sets differ: missing {missing:?}, extra {extra:?}"));
    }
    for (id, s) in actual {
        let o = oracle[id];
        if (s - o).abs() >= tol {
            return Err(format!("{id}: score {s} vs oracle {o}"));
        }
    }
    for w in actual.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let (oa, ob) = (oracle[&a.0], oracle[&b.0]);
        let ordered = oa > ob + 1e-12 || ((oa - ob).abs() <= 1e-12 && (a.1 > b.1 || (a.1 == b.1 && a.0 < b.0)));
        if !ordered {
            return Err(format!("{} ({oa}) ranked above {} ({ob})", a.0, b.0));
        }
    }
    Ok(())
}

/// Tag distribution of a community pool: raw tag counts, counts below
/// mean minus two population standard deviations dropped (unless that
/// drops everything), scaled to sum to one.
pub fn oracle_community_vector(corpus: &Corpus, community: &Community) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<String, f64> = BTreeMap::new();
    for id in &community.item_ids {
        if let Some(item) = corpus.items.get(id) {
            for t in &item.tags {
                *counts.entry(t.clone()).or_insert(0.0) += 1.0;
            }
        }
    }
    if counts.is_empty() {
        return counts;
    }
    let n = counts.len() as f64;
    let mean = counts.values().sum::<f64>() / n;
    let sd = (counts.values().map(|c| (c - mean) * (c - mean)).sum::<f64>() / n).sqrt();
    let kept: BTreeMap<String, f64> = counts
        .iter()
        .filter(|(_, &c)| c >= mean - 2.0 * sd)
        .map(|(t, &c)| (t.clone(), c))
        .collect();
    let kept = if kept.is_empty() { counts } else { kept };
    let total: f64 = kept.values().sum();
    kept.into_iter().map(|(t, c)| (t, c / total)).collect()
}

/// Eigenvalues (descending) and eigenvectors (as columns) of a symmetric
/// matrix by cyclic Jacobi rotations.
pub fn symmetric_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in m.iter_mut() {
                    let (mkp, mkq) = (row[p], row[q]);
                    row[p] = c * mkp - s * mkq;
                    row[q] = s * mkp + c * mkq;
                }
                let (rp, rq) = (m[p].clone(), m[q].clone());
                for k in 0..n {
                    m[p][k] = c * rp[k] - s * rq[k];
                    m[q][k] = s * rp[k] + c * rq[k];
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j][j].partial_cmp(&m[i][i]).unwrap());
    let values = order.iter().map(|&i| m[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..n).map(|r| v[r][i]).collect())
        .collect();
    (values, vectors)
}

/// Random dense matrix (column-major) with entries in [-1, 1], sometimes
/// with duplicated columns so the rank drops.
pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    let mut columns: Vec<Vec<f64>> = (0..cols)
        .map(|_| (0..rows).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect();
    if cols > 2 && rng.random_bool(0.3) {
        columns[cols - 1] = columns[0].iter().map(|x| 2.0 * x).collect();
    }
    columns
}

/// Minimum inertia over every assignment of `points` to `k` labels, each
/// label used at least once.
pub fn brute_force_kmeans(points: &[Vec<f64>], k: usize) -> f64 {
    let n = points.len();
    let dim = points[0].len();
    let mut best = f64::INFINITY;
    let mut labels = vec![0usize; n];
    loop {
        let used: BTreeSet<usize> = labels.iter().copied().collect();
        if used.len() == k {
            let mut inertia = 0.0;
            for c in 0..k {
                let members: Vec<&Vec<f64>> =
                    (0..n).filter(|&i| labels[i] == c).map(|i| &points[i]).collect();
                let mut mean = vec![0.0; dim];
                for p in &members {
                    for (m, x) in mean.iter_mut().zip(p.iter()) {
                        *m += x / members.len() as f64;
                    }
                }
                for p in &members {
                    inertia += p.iter().zip(&mean).map(|(x, m)| (x - m) * (x - m)).sum::<f64>();
                }
            }
            best = best.min(inertia);
        }
        // odometer increment
        let mut i = 0;
        while i < n {
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
        if i == n {
            return best;
        }
    }
}
