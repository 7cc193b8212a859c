//! Tagged items, user communities, and the on-disk corpus they are loaded
//! from.
//!
//! Both input files are JSON Lines: one object per line, blank lines
//! ignored. Item and community membership is recorded on both sides in the
//! wild and the two sides rarely agree, so loading reconciles them by union
//! unless [`LoadOptions::strict`] is set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::normalize_tags;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("duplicate {kind} id {id:?}")]
    DuplicateId { kind: &'static str, id: String },
    #[error("invalid corpus: {0}")]
    Invalid(ValidationReport),
}

/// One media object. Tags are stored normalized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedItem {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default)]
    pub owner: String,
    #[serde(default)]
    pub communities: Vec<String>,
}

impl TaggedItem {
    pub fn new(id: impl Into<String>, tags: &[&str]) -> Self {
        Self {
            id: id.into(),
            title: String::new(),
            description: String::new(),
            tags: normalize_tags(tags),
            owner: String::new(),
            communities: Vec::new(),
        }
    }

    pub fn with_owner(mut self, owner: impl Into<String>) -> Self {
        self.owner = owner.into();
        self
    }

    pub fn in_communities(mut self, ids: &[&str]) -> Self {
        self.communities = ids.iter().map(|s| s.to_string()).collect();
        self
    }
}

/// A user group sharing a pool of items.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Community {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub description: String,
    /// Signed so that bad exports survive loading long enough to be reported.
    #[serde(default)]
    pub member_count: i64,
    #[serde(default)]
    pub item_ids: Vec<String>,
}

impl Community {
    pub fn new(id: impl Into<String>, title: impl Into<String>, member_count: i64) -> Self {
        Self {
            id: id.into(),
            title: title.into(),
            description: String::new(),
            member_count,
            item_ids: Vec::new(),
        }
    }

    pub fn with_items(mut self, ids: &[&str]) -> Self {
        self.item_ids = ids.iter().map(|s| s.to_string()).collect();
        self
    }

    /// Member count clamped at zero.
    pub fn members(&self) -> u64 {
        self.member_count.max(0) as u64
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub items_path: Option<PathBuf>,
    pub communities_path: Option<PathBuf>,
    /// Seconds since the Unix epoch.
    pub loaded_at: u64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Report membership lists that disagree between items and communities
    /// instead of silently taking their union.
    pub strict: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Corpus {
    pub items: BTreeMap<String, TaggedItem>,
    pub communities: BTreeMap<String, Community>,
    pub provenance: Provenance,
}

/// Provenance is ignored: two loads of the same files are equal.
impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.items == other.items && self.communities == other.communities
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EmptyItemId,
    EmptyCommunityId,
    NegativeMemberCount { community: String, member_count: i64 },
    DanglingCommunity { item: String, community: String },
    DanglingItem { community: String, item: String },
    MembershipMismatch { item: String, community: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyItemId => write!(f, "item with empty id"),
            Violation::EmptyCommunityId => write!(f, "community with empty id"),
            Violation::NegativeMemberCount { community, member_count } => {
                write!(f, "community {community:?} has negative member_count {member_count}")
            }
            Violation::DanglingCommunity { item, community } => {
                write!(f, "item {item:?} references unknown community {community:?}")
            }
            Violation::DanglingItem { community, item } => {
                write!(f, "community {community:?} references unknown item {item:?}")
            }
            Violation::MembershipMismatch { item, community } => write!(
                f,
                "item {item:?} and community {community:?} disagree about membership"
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl Corpus {
    /// Builds a corpus from in-memory records, reconciling membership by
    /// union. Does not validate.
    pub fn from_parts(
        items: Vec<TaggedItem>,
        communities: Vec<Community>,
    ) -> Result<Self, CorpusError> {
        Self::assemble(items, communities, LoadOptions::default()).map(|(c, _)| c)
    }

    fn assemble(
        items: Vec<TaggedItem>,
        communities: Vec<Community>,
        opts: LoadOptions,
    ) -> Result<(Self, Vec<Violation>), CorpusError> {
        let mut item_map = BTreeMap::new();
        for mut item in items {
            item.tags = normalize_tags(&item.tags);
            let id = item.id.clone();
            if item_map.insert(id.clone(), item).is_some() {
                return Err(CorpusError::DuplicateId { kind: "item", id });
            }
        }
        let mut comm_map = BTreeMap::new();
        for community in communities {
            let id = community.id.clone();
            if comm_map.insert(id.clone(), community).is_some() {
                return Err(CorpusError::DuplicateId { kind: "community", id });
            }
        }

        // Union of both directions. Dangling ids stay in place so that
        // validation can name them.
        let mut edges: BTreeSet<(String, String)> = BTreeSet::new();
        let mut from_items: BTreeSet<(String, String)> = BTreeSet::new();
        let mut from_comms: BTreeSet<(String, String)> = BTreeSet::new();
        for item in item_map.values() {
            for c in &item.communities {
                from_items.insert((item.id.clone(), c.clone()));
            }
        }
        for comm in comm_map.values() {
            for i in &comm.item_ids {
                from_comms.insert((i.clone(), comm.id.clone()));
            }
        }
        edges.extend(from_items.iter().cloned());
        edges.extend(from_comms.iter().cloned());

        let mut mismatches = Vec::new();
        if opts.strict {
            for (item, community) in from_items.symmetric_difference(&from_comms) {
                if item_map.contains_key(item) && comm_map.contains_key(community) {
                    mismatches.push(Violation::MembershipMismatch {
                        item: item.clone(),
                        community: community.clone(),
                    });
                }
            }
        }

        for item in item_map.values_mut() {
            item.communities.clear();
        }
        for comm in comm_map.values_mut() {
            comm.item_ids.clear();
        }
        for (item_id, comm_id) in &edges {
            if let Some(item) = item_map.get_mut(item_id) {
                item.communities.push(comm_id.clone());
            }
            if let Some(comm) = comm_map.get_mut(comm_id) {
                comm.item_ids.push(item_id.clone());
            }
        }

        Ok((
            Corpus {
                items: item_map,
                communities: comm_map,
                provenance: Provenance::default(),
            },
            mismatches,
        ))
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty() && self.communities.is_empty()
    }
}

fn read_records<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            path: path.to_path_buf(),
            line: n + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn load_corpus(items_path: &Path, communities_path: &Path) -> Result<Corpus, CorpusError> {
    load_corpus_with(items_path, communities_path, LoadOptions::default())
}

pub fn load_corpus_with(
    items_path: &Path,
    communities_path: &Path,
    opts: LoadOptions,
) -> Result<Corpus, CorpusError> {
    let items: Vec<TaggedItem> = read_records(items_path)?;
    let communities: Vec<Community> = read_records(communities_path)?;
    let (mut corpus, mismatches) = Corpus::assemble(items, communities, opts)?;

    let mut report = validate(&corpus);
    report.violations.extend(mismatches);
    if !report.is_valid() {
        return Err(CorpusError::Invalid(report));
    }

    corpus.provenance = Provenance {
        items_path: Some(items_path.to_path_buf()),
        communities_path: Some(communities_path.to_path_buf()),
        loaded_at: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    Ok(corpus)
}

fn write_records<'a, T: Serialize + 'a>(
    path: &Path,
    records: impl Iterator<Item = &'a T>,
) -> Result<(), CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    for record in records {
        let line = serde_json::to_string(record).expect("corpus records always serialize");
        writeln!(out, "{line}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Writes the corpus back out in the same line-delimited format it is
/// loaded from.
pub fn write_corpus(
    corpus: &Corpus,
    items_path: &Path,
    communities_path: &Path,
) -> Result<(), CorpusError> {
    write_records(items_path, corpus.items.values())?;
    write_records(communities_path, corpus.communities.values())
}

pub fn validate(corpus: &Corpus) -> ValidationReport {
    let mut violations = Vec::new();
    for item in corpus.items.values() {
        if item.id.is_empty() {
            violations.push(Violation::EmptyItemId);
        }
        for c in &item.communities {
            if !corpus.communities.contains_key(c) {
                violations.push(Violation::DanglingCommunity {
                    item: item.id.clone(),
                    community: c.clone(),
                });
            }
        }
    }
    for comm in corpus.communities.values() {
        if comm.id.is_empty() {
            violations.push(Violation::EmptyCommunityId);
        }
        if comm.member_count < 0 {
            violations.push(Violation::NegativeMemberCount {
                community: comm.id.clone(),
                member_count: comm.member_count,
            });
        }
        for i in &comm.item_ids {
            if !corpus.items.contains_key(i) {
                violations.push(Violation::DanglingItem {
                    community: comm.id.clone(),
                    item: i.clone(),
                });
            }
        }
    }
    ValidationReport { violations }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub item_count: usize,
    pub user_count: usize,
    pub community_count: usize,
    /// Number of communities an item belongs to -> number of such items.
    pub communities_per_item_histogram: BTreeMap<usize, usize>,
    pub zero_community_fraction: f64,
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let mut histogram = BTreeMap::new();
    let mut owners = BTreeSet::new();
    for item in corpus.items.values() {
        *histogram.entry(item.communities.len()).or_insert(0) += 1;
        if !item.owner.is_empty() {
            owners.insert(item.owner.as_str());
        }
    }
    let item_count = corpus.items.len();
    let zero = histogram.get(&0).copied().unwrap_or(0);
    CorpusStats {
        item_count,
        user_count: owners.len(),
        community_count: corpus.communities.len(),
        communities_per_item_histogram: histogram,
        zero_community_fraction: if item_count == 0 {
            0.0
        } else {
            zero as f64 / item_count as f64
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture::mini_jasmine;
    use std::fs;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn empty_files_load_to_empty_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let items = write(dir.path(), "items.jsonl", "");
        let comms = write(dir.path(), "comms.jsonl", "\n");
        let corpus = load_corpus(&items, &comms).unwrap();
        assert!(corpus.is_empty());
        assert_eq!(corpus_stats(&corpus).zero_community_fraction, 0.0);
    }

    #[test]
    fn dangling_community_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let items = write(
            dir.path(),
            "items.jsonl",
            r#"{"id":"i1","tags":["a"],"communities":["gX"]}"#,
        );
        let comms = write(dir.path(), "comms.jsonl", "");
        let err = load_corpus(&items, &comms).unwrap_err();
        assert!(matches!(err, CorpusError::Invalid(_)));
        assert!(err.to_string().contains("\"gX\""), "{err}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let items = write(
            dir.path(),
            "items.jsonl",
            "{\"id\":\"i1\"}\n\n{\"id\": 3\n",
        );
        let comms = write(dir.path(), "comms.jsonl", "");
        match load_corpus(&items, &comms).unwrap_err() {
            CorpusError::Malformed { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let items = write(dir.path(), "items.jsonl", "{\"id\":\"i1\"}\n{\"id\":\"i1\"}\n");
        let comms = write(dir.path(), "comms.jsonl", "");
        assert!(matches!(
            load_corpus(&items, &comms).unwrap_err(),
            CorpusError::DuplicateId { kind: "item", .. }
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let comms = write(dir.path(), "comms.jsonl", "");
        assert!(matches!(
            load_corpus(&dir.path().join("nope.jsonl"), &comms).unwrap_err(),
            CorpusError::Io { .. }
        ));
    }

    #[test]
    fn membership_is_reconciled_by_union() {
        let corpus = Corpus::from_parts(
            vec![
                TaggedItem::new("a", &["x"]).in_communities(&["g"]),
                TaggedItem::new("b", &["y"]),
            ],
            vec![Community::new("g", "G", 3).with_items(&["b"])],
        )
        .unwrap();
        assert_eq!(corpus.communities["g"].item_ids, vec!["a", "b"]);
        assert_eq!(corpus.items["b"].communities, vec!["g"]);
        assert!(validate(&corpus).is_valid());
    }

    #[test]
    fn strict_mode_reports_disagreement() {
        let dir = tempfile::tempdir().unwrap();
        let items = write(
            dir.path(),
            "items.jsonl",
            r#"{"id":"a","tags":["x"],"communities":["g"]}"#,
        );
        let comms = write(dir.path(), "comms.jsonl", r#"{"id":"g","member_count":3}"#);
        assert!(load_corpus(&items, &comms).is_ok());
        let err = load_corpus_with(&items, &comms, LoadOptions { strict: true }).unwrap_err();
        match err {
            CorpusError::Invalid(r) => assert_eq!(
                r.violations,
                vec![Violation::MembershipMismatch {
                    item: "a".into(),
                    community: "g".into()
                }]
            ),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn tags_are_normalized_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let items = write(
            dir.path(),
            "items.jsonl",
            r#"{"id":"a","tags":[" Jasmine","", "FLOWER "]}"#,
        );
        let comms = write(dir.path(), "comms.jsonl", "");
        let corpus = load_corpus(&items, &comms).unwrap();
        assert_eq!(corpus.items["a"].tags, vec!["jasmine", "flower"]);
    }

    #[test]
    fn mini_jasmine_shape() {
        let corpus = mini_jasmine();
        assert_eq!(corpus.items.len(), 6);
        assert_eq!(corpus.communities.len(), 2);
        assert!(validate(&corpus).is_valid());
        let stats = corpus_stats(&corpus);
        assert_eq!(stats.zero_community_fraction, 2.0 / 6.0);
        assert_eq!(stats.communities_per_item_histogram[&0], 2);
        assert_eq!(stats.communities_per_item_histogram[&1], 4);
    }

    #[test]
    fn validate_flags_negative_members_and_dangling_refs() {
        let mut corpus = mini_jasmine();
        corpus.communities.get_mut("g2").unwrap().member_count = -1;
        assert_eq!(validate(&corpus).violations.len(), 1);

        let mut corpus = mini_jasmine();
        corpus.items.get_mut("i5").unwrap().communities.push("nope".into());
        let report = validate(&corpus);
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(report.violations[0], Violation::DanglingCommunity { .. }));
    }

    #[test]
    fn fully_covered_corpus_has_zero_fraction() {
        let corpus = Corpus::from_parts(
            vec![TaggedItem::new("a", &["x"]), TaggedItem::new("b", &["y"])],
            vec![Community::new("g", "G", 1).with_items(&["a", "b"])],
        )
        .unwrap();
        assert_eq!(corpus_stats(&corpus).zero_community_fraction, 0.0);
    }

    #[test]
    fn user_count_is_distinct_owners() {
        let corpus = Corpus::from_parts(
            vec![
                TaggedItem::new("a", &["x"]).with_owner("u1"),
                TaggedItem::new("b", &["y"]).with_owner("u1"),
                TaggedItem::new("c", &["y"]).with_owner("u2"),
            ],
            vec![],
        )
        .unwrap();
        assert_eq!(corpus_stats(&corpus).user_count, 2);
    }
}
