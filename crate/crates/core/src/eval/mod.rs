//! Offline evaluation: precision at rank k per system, relative
//! improvements between systems, and community coverage of items and
//! queries.

pub mod judgments;
pub mod synth;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::community::CommunityVector;
use crate::corpus::Corpus;
use crate::engine::{SearchEngine, SearchError};
use crate::index::{plain_search, QuerySpec, SearchMode};
use crate::ranker::{rank, RankerConfig};

pub use judgments::{JudgmentError, Label, RelevanceJudgments};

/// Share of good items among the judged items in the first `k` positions.
/// `None` when nothing in that prefix is judged.
pub fn precision_at_k<S: AsRef<str>>(
    ranked: &[S],
    judgments: &RelevanceJudgments,
    query: &str,
    k: usize,
) -> Option<f64> {
    let mut judged = 0usize;
    let mut good = 0usize;
    for id in ranked.iter().take(k) {
        let label = judgments.get(query, id.as_ref());
        if label.is_judged() {
            judged += 1;
            if label == Label::Good {
                good += 1;
            }
        }
    }
    (judged > 0).then(|| good as f64 / judged as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub query: String,
    /// False when the system produced no result at all for the query.
    pub answerable: bool,
    /// Precision at k = 1..=k_max.
    pub precision: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemReport {
    pub system: SearchMode,
    /// Mean precision at k = 1..=k_max over answerable queries.
    pub mean_precision: Vec<Option<f64>>,
    pub answerable: usize,
    pub unanswerable: usize,
    /// Raw per-query values, for significance testing elsewhere.
    pub per_query: Vec<QueryOutcome>,
}

impl SystemReport {
    pub fn precision_at(&self, k: usize) -> Option<f64> {
        self.mean_precision.get(k.checked_sub(1)?).copied().flatten()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub system: SearchMode,
    pub baseline: SearchMode,
    /// `(P_system@k - P_baseline@k) / P_baseline@k` for k = 1..=k_max.
    pub relative: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub k_max: usize,
    pub systems: Vec<SystemReport>,
    pub improvements: Vec<Improvement>,
}

pub fn relative_improvement(system: Option<f64>, baseline: Option<f64>) -> Option<f64> {
    match (system, baseline) {
        (Some(a), Some(b)) if b > 0.0 => Some((a - b) / b),
        _ => None,
    }
}

/// Ranked item ids a system returns for `query`, at most `n`. Concept
/// systems run pure (no plain-search backfill).
pub fn system_ranking(
    engine: &SearchEngine,
    query: &QuerySpec,
    mode: &SearchMode,
    cfg: &RankerConfig,
    n: usize,
) -> Result<Vec<String>, SearchError> {
    let ids = match mode {
        SearchMode::Plain => plain_search(&engine.index, query, n)
            .into_iter()
            .map(|h| h.item_id)
            .collect(),
        SearchMode::Community | SearchMode::Cluster => {
            let cfg = RankerConfig {
                mode: mode.clone(),
                ..cfg.clone()
            };
            let concepts = engine.query_concepts(query, &cfg)?;
            rank(query, &concepts, &cfg, &engine.index)
                .into_iter()
                .take(n)
                .map(|h| h.item_id)
                .collect()
        }
    };
    Ok(ids)
}

pub fn compare_systems(
    engine: &SearchEngine,
    queries: &[String],
    judgments: &RelevanceJudgments,
    systems: &[SearchMode],
    k_max: usize,
    cfg: &RankerConfig,
) -> Result<EvalReport, SearchError> {
    let mut reports = Vec::with_capacity(systems.len());
    for system in systems {
        let mut per_query = Vec::with_capacity(queries.len());
        for raw in queries {
            let Ok(query) = QuerySpec::parse(raw) else {
                per_query.push(QueryOutcome {
                    query: raw.clone(),
                    answerable: false,
                    precision: vec![None; k_max],
                });
                continue;
            };
            let ranked = system_ranking(engine, &query, system, cfg, k_max)?;
            per_query.push(QueryOutcome {
                query: raw.clone(),
                answerable: !ranked.is_empty(),
                precision: (1..=k_max)
                    .map(|k| precision_at_k(&ranked, judgments, raw, k))
                    .collect(),
            });
        }
        let mean_precision = (0..k_max)
            .map(|i| {
                let vals: Vec<f64> = per_query
                    .iter()
                    .filter(|q| q.answerable)
                    .filter_map(|q| q.precision[i])
                    .collect();
                (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
            })
            .collect();
        let answerable = per_query.iter().filter(|q| q.answerable).count();
        reports.push(SystemReport {
            system: system.clone(),
            mean_precision,
            answerable,
            unanswerable: per_query.len() - answerable,
            per_query,
        });
    }

    let mut improvements = Vec::new();
    for a in &reports {
        for b in &reports {
            if a.system == b.system {
                continue;
            }
            improvements.push(Improvement {
                system: a.system.clone(),
                baseline: b.system.clone(),
                relative: a
                    .mean_precision
                    .iter()
                    .zip(&b.mean_precision)
                    .map(|(&x, &y)| relative_improvement(x, y))
                    .collect(),
            });
        }
    }
    Ok(EvalReport {
        k_max,
        systems: reports,
        improvements,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())
}

fn fmt_pct(v: Option<f64>) -> String {
    v.map(|x| format!("{:+.2}%", x * 100.0))
        .unwrap_or_else(|| "-".into())
}

impl EvalReport {
    pub fn system(&self, mode: &SearchMode) -> Option<&SystemReport> {
        self.systems.iter().find(|s| &s.system == mode)
    }

    pub fn improvement(&self, system: &SearchMode, baseline: &SearchMode) -> Option<&Improvement> {
        self.improvements
            .iter()
            .find(|i| &i.system == system && &i.baseline == baseline)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let marks: Vec<usize> = [1, 5, 10, 20, 30, 40, 50]
            .into_iter()
            .filter(|&k| k <= self.k_max)
            .collect();
        let _ = writeln!(out, "mean precision at rank k");
        let _ = write!(out, "{:<10}", "system");
        for k in &marks {
            let _ = write!(out, "{:>9}", format!("@{k}"));
        }
        let _ = writeln!(out, "{:>12}", "answerable");
        for s in &self.systems {
            let _ = write!(out, "{:<10}", s.system.to_string());
            for &k in &marks {
                let _ = write!(out, "{:>9}", fmt_opt(s.precision_at(k)));
            }
            let _ = writeln!(out, "{:>12}", format!("{}/{}", s.answerable, s.answerable + s.unanswerable));
        }
        if !self.improvements.is_empty() {
            let _ = writeln!(out, "\nrelative improvement");
            for imp in &self.improvements {
                let _ = write!(out, "{:<22}", format!("{} vs {}", imp.system, imp.baseline));
                for &k in &marks {
                    let _ = write!(out, "{:>10}", fmt_pct(imp.relative[k - 1]));
                }
                let _ = writeln!(out);
            }
        }
        out
    }

    /// `system<TAB>k<TAB>precision` plus one row per query and k.
    pub fn render_table(&self) -> String {
        let mut out = String::from("system\tquery\tk\tprecision\n");
        for s in &self.systems {
            for (i, p) in s.mean_precision.iter().enumerate() {
                let _ = writeln!(out, "{}\t*\t{}\t{}", s.system, i + 1, fmt_opt(*p));
            }
            for q in &s.per_query {
                for (i, p) in q.precision.iter().enumerate() {
                    let _ = writeln!(out, "{}\t{}\t{}\t{}", s.system, q.query, i + 1, fmt_opt(*p));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryCoverage {
    pub query: String,
    pub matching_communities: usize,
    /// Matching communities with at least the popularity floor in members.
    pub strong_communities: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub communities_per_item: BTreeMap<usize, usize>,
    /// Matching-community count -> number of queries.
    pub communities_per_query: BTreeMap<usize, usize>,
    pub queries: Vec<QueryCoverage>,
    pub zero_match_fraction: f64,
    pub sub_floor_only_fraction: f64,
    pub answerable_fraction: f64,
}

/// A community matches a query when its tag distribution contains any
/// query term.
pub fn coverage_report(
    corpus: &Corpus,
    queries: &[String],
    community_vectors: &[CommunityVector],
    popularity_floor: u64,
) -> CoverageReport {
    let mut communities_per_item = BTreeMap::new();
    for item in corpus.items.values() {
        *communities_per_item.entry(item.communities.len()).or_insert(0) += 1;
    }

    let mut per_query = Vec::with_capacity(queries.len());
    let mut communities_per_query = BTreeMap::new();
    for raw in queries {
        let terms = QuerySpec::parse(raw).map(|q| q.terms).unwrap_or_default();
        let matching: Vec<&CommunityVector> = community_vectors
            .iter()
            .filter(|cv| terms.iter().any(|t| cv.vector.contains(t)))
            .collect();
        let strong = matching
            .iter()
            .filter(|cv| cv.member_count >= popularity_floor)
            .count();
        *communities_per_query.entry(matching.len()).or_insert(0) += 1;
        per_query.push(QueryCoverage {
            query: raw.clone(),
            matching_communities: matching.len(),
            strong_communities: strong,
        });
    }
    let n = queries.len().max(1) as f64;
    let zero = per_query.iter().filter(|q| q.matching_communities == 0).count();
    let sub_floor = per_query
        .iter()
        .filter(|q| q.matching_communities > 0 && q.strong_communities == 0)
        .count();
    let answerable = per_query.iter().filter(|q| q.strong_communities > 0).count();
    CoverageReport {
        communities_per_item,
        communities_per_query,
        queries: per_query,
        zero_match_fraction: zero as f64 / n,
        sub_floor_only_fraction: sub_floor as f64 / n,
        answerable_fraction: answerable as f64 / n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::BuildSettings;
    use crate::fixture::mini_jasmine;
    use crate::index::IndexFields;
    use proptest::prelude::*;

    fn labels(query: &str, pairs: &[(&str, Label)]) -> RelevanceJudgments {
        let mut j = RelevanceJudgments::new();
        for (id, l) in pairs {
            j.insert(query, *id, *l);
        }
        j
    }

    #[test]
    fn precision_cases() {
        use Label::*;
        let j = labels("q", &[("a", Good), ("b", Bad), ("c", Good), ("d", Good)]);
        assert_eq!(precision_at_k(&["a", "b", "c", "d"], &j, "q", 4), Some(0.75));
        assert_eq!(precision_at_k(&["a", "c"], &j, "q", 2), Some(1.0));
        assert_eq!(precision_at_k(&["b"], &j, "q", 1), Some(0.0));
        // shorter than k: uses what is there
        assert_eq!(precision_at_k(&["a", "b"], &j, "q", 10), Some(0.5));
        // unjudged prefix is absent, not zero
        assert_eq!(precision_at_k(&["x", "y"], &j, "q", 2), None);
        let j = labels("q", &[("a", Good), ("u", Unclear)]);
        assert_eq!(precision_at_k(&["u", "a"], &j, "q", 2), Some(1.0));
    }

    proptest! {
        #[test]
        fn unrated_relabeling_is_invisible(
            marks in proptest::collection::vec(0u8..4, 1..20),
            flips in proptest::collection::vec(any::<bool>(), 20),
            k in 1usize..25,
        ) {
            let ids: Vec<String> = (0..marks.len()).map(|i| format!("i{i}")).collect();
            let mut a = RelevanceJudgments::new();
            let mut b = RelevanceJudgments::new();
            for (i, m) in marks.iter().enumerate() {
                let l = [Label::Good, Label::Bad, Label::Unclear, Label::Unrated][*m as usize];
                a.insert("q", ids[i].clone(), l);
                let relabeled = match l {
                    Label::Unclear | Label::Unrated if flips[i] => {
                        if l == Label::Unclear { Label::Unrated } else { Label::Unclear }
                    }
                    other => other,
                };
                b.insert("q", ids[i].clone(), relabeled);
            }
            prop_assert_eq!(precision_at_k(&ids, &a, "q", k), precision_at_k(&ids, &b, "q", k));
        }
    }

    fn engine() -> SearchEngine {
        SearchEngine::build(
            mini_jasmine(),
            BuildSettings {
                fields: IndexFields::tags_only(),
                ..BuildSettings::default()
            },
        )
    }

    #[test]
    fn perfect_single_query_is_flat_one() {
        let e = engine();
        let mut j = RelevanceJudgments::new();
        for id in ["i1", "i3", "i4", "i5", "i6"] {
            j.insert("jasmine", id, Label::Good);
        }
        let report = compare_systems(
            &e,
            &["jasmine".to_string()],
            &j,
            &[SearchMode::Plain],
            5,
            &RankerConfig::default(),
        )
        .unwrap();
        assert_eq!(report.systems[0].mean_precision, vec![Some(1.0); 5]);
        assert!(report.improvements.is_empty());
    }

    #[test]
    fn unanswerable_queries_are_counted_not_averaged() {
        let e = engine();
        let mut j = RelevanceJudgments::new();
        j.insert("jasmine", "i1", Label::Good);
        j.insert("tea", "i6", Label::Good);
        // "tea" is in no community, so community search has nothing
        let report = compare_systems(
            &e,
            &["jasmine".to_string(), "tea".to_string()],
            &j,
            &[SearchMode::Community, SearchMode::Plain],
            3,
            &RankerConfig::default(),
        )
        .unwrap();
        let community = report.system(&SearchMode::Community).unwrap();
        assert_eq!(community.unanswerable, 1);
        assert_eq!(community.answerable, 1);
        let plain = report.system(&SearchMode::Plain).unwrap();
        assert_eq!(plain.answerable, 2);
    }

    #[test]
    fn improvements_are_consistent_under_swap() {
        let e = engine();
        let mut j = RelevanceJudgments::new();
        for (id, l) in [("i1", Label::Good), ("i3", Label::Good), ("i4", Label::Bad), ("i5", Label::Bad), ("i6", Label::Bad)] {
            j.insert("jasmine", id, l);
        }
        let report = compare_systems(
            &e,
            &["jasmine".to_string()],
            &j,
            &[SearchMode::Community, SearchMode::Plain],
            5,
            &RankerConfig::default(),
        )
        .unwrap();
        let ab = report.improvement(&SearchMode::Community, &SearchMode::Plain).unwrap();
        let ba = report.improvement(&SearchMode::Plain, &SearchMode::Community).unwrap();
        let pa = &report.system(&SearchMode::Community).unwrap().mean_precision;
        let pb = &report.system(&SearchMode::Plain).unwrap().mean_precision;
        for k in 0..5 {
            if let (Some(x), Some(y), Some(a), Some(b)) = (ab.relative[k], ba.relative[k], pa[k], pb[k]) {
                // x * b == -(y * a) == a - b
                assert!((x * b + y * a).abs() < 1e-12);
                assert!((x * b - (a - b)).abs() < 1e-12);
            }
        }
        assert!(report.render_text().contains("community vs plain"));
        assert!(report.render_table().starts_with("system\tquery\tk\tprecision\n"));
    }

    #[test]
    fn coverage_on_fixture() {
        let e = engine();
        let queries = vec!["jasmine".to_string(), "orchid".to_string(), "dog".to_string()];
        let report = coverage_report(&e.corpus, &queries, &e.community_vectors, 10);
        assert_eq!(report.queries[0].matching_communities, 2);
        assert_eq!(report.queries[1].matching_communities, 0);
        assert_eq!(report.queries[2].matching_communities, 1);
        assert_eq!(report.queries[2].strong_communities, 0);
        assert_eq!(report.communities_per_item[&0], 2);
        assert_eq!(report.communities_per_item.values().sum::<usize>(), 6);
        assert_eq!(report.communities_per_query.values().sum::<usize>(), 3);
        assert!((report.zero_match_fraction - 1.0 / 3.0).abs() < 1e-12);
        assert!((report.sub_floor_only_fraction - 1.0 / 3.0).abs() < 1e-12);
        assert!((report.answerable_fraction - 1.0 / 3.0).abs() < 1e-12);
    }
}
