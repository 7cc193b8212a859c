use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JudgmentError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Good,
    Bad,
    Unclear,
    Unrated,
}

impl Label {
    /// Only good and bad judgments count toward precision.
    pub fn is_judged(self) -> bool {
        matches!(self, Label::Good | Label::Bad)
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "good" => Ok(Label::Good),
            "bad" => Ok(Label::Bad),
            "unclear" => Ok(Label::Unclear),
            "unrated" => Ok(Label::Unrated),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Good => "good",
            Label::Bad => "bad",
            Label::Unclear => "unclear",
            Label::Unrated => "unrated",
        })
    }
}

/// (query, item id) -> label. Pairs never recorded read back as unrated.
///
/// Stored as tab-separated `query<TAB>item_id<TAB>label` lines.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelevanceJudgments {
    labels: BTreeMap<(String, String), Label>,
}

impl RelevanceJudgments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query: impl Into<String>, item_id: impl Into<String>, label: Label) {
        self.labels.insert((query.into(), item_id.into()), label);
    }

    pub fn get(&self, query: &str, item_id: &str) -> Label {
        self.labels
            .get(&(query.to_string(), item_id.to_string()))
            .copied()
            .unwrap_or(Label::Unrated)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, Label)> {
        self.labels
            .iter()
            .map(|((q, i), l)| (q.as_str(), i.as_str(), *l))
    }

    pub fn parse<R: BufRead>(reader: R) -> Result<Self, JudgmentError> {
        let mut out = Self::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| JudgmentError::Malformed {
                line: n + 1,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(JudgmentError::Malformed {
                    line: n + 1,
                    message: format!("expected 3 tab-separated fields, found {}", fields.len()),
                });
            }
            let label = fields[2]
                .parse()
                .map_err(|message| JudgmentError::Malformed { line: n + 1, message })?;
            out.insert(fields[0].trim(), fields[1].trim(), label);
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self, JudgmentError> {
        let file = fs::File::open(path).map_err(|source| JudgmentError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(BufReader::new(file))
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (q, i, l) in self.iter() {
            out.push_str(&format!("{q}\t{i}\t{l}\n"));
        }
        out
    }
}
