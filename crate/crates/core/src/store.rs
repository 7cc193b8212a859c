//! On-disk index directory.
//!
//! ```text
//! INDEXDIR/
//!   manifest.json      {"format": "tagconcept-index", "version": 1, "settings": {...}, ...}
//!   items.jsonl        reconciled corpus, same format as the ingest input
//!   communities.jsonl
//!   index.json         {"version": 1, "index": <item vectors, postings, doc freqs, tag counts>}
//!   concepts.json      {"version": 1, "community_vectors": [...], "empty_communities": [...], "concepts": [...]}
//! ```
//!
//! Every JSON file carries the format version; readers refuse any other.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::community::CommunityVector;
use crate::concept::Concept;
use crate::corpus::{load_corpus, write_corpus, CorpusError, Provenance};
use crate::engine::{BuildSettings, SearchEngine};
use crate::index::ItemVectorIndex;

pub const FORMAT_NAME: &str = "tagconcept-index";
pub const FORMAT_VERSION: u32 = 1;

const MANIFEST: &str = "manifest.json";
const ITEMS: &str = "items.jsonl";
const COMMUNITIES: &str = "communities.jsonl";
const INDEX: &str = "index.json";
const CONCEPTS: &str = "concepts.json";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: unsupported index format {found:?} (expected {FORMAT_NAME:?} version {FORMAT_VERSION})")]
    Version { path: PathBuf, found: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub settings: BuildSettings,
    pub item_count: usize,
    pub community_count: usize,
    pub concept_count: usize,
    pub source: Provenance,
}

#[derive(Serialize, Deserialize)]
struct IndexFile<T> {
    version: u32,
    #[serde(flatten)]
    body: T,
}

#[derive(Serialize, Deserialize)]
struct IndexBody {
    index: ItemVectorIndex,
}

#[derive(Serialize, Deserialize)]
struct ConceptsBody {
    community_vectors: Vec<CommunityVector>,
    empty_communities: Vec<String>,
    concepts: Vec<Concept>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), StoreError> {
    let io = |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    serde_json::to_writer(&mut out, value).map_err(|source| StoreError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    out.flush().map_err(io)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, StoreError> {
    let file = File::open(path).map_err(|source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_reader(BufReader::new(file)).map_err(|source| StoreError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn read_versioned<T: DeserializeOwned>(path: &Path) -> Result<T, StoreError> {
    #[derive(Deserialize)]
    struct Header {
        version: u32,
    }
    let header: Header = read_json(path)?;
    if header.version != FORMAT_VERSION {
        return Err(StoreError::Version {
            path: path.to_path_buf(),
            found: header.version.to_string(),
        });
    }
    let file: IndexFile<T> = read_json(path)?;
    Ok(file.body)
}

pub fn save(engine: &SearchEngine, dir: &Path) -> Result<Manifest, StoreError> {
    fs::create_dir_all(dir).map_err(|source| StoreError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    write_corpus(&engine.corpus, &dir.join(ITEMS), &dir.join(COMMUNITIES))?;
    write_json(
        &dir.join(INDEX),
        &IndexFile {
            version: FORMAT_VERSION,
            body: IndexBody {
                index: engine.index.clone(),
            },
        },
    )?;
    write_json(
        &dir.join(CONCEPTS),
        &IndexFile {
            version: FORMAT_VERSION,
            body: ConceptsBody {
                community_vectors: engine.community_vectors.clone(),
                empty_communities: engine.empty_communities.clone(),
                concepts: engine.concepts.clone(),
            },
        },
    )?;
    let manifest = Manifest {
        format: FORMAT_NAME.to_string(),
        version: FORMAT_VERSION,
        settings: engine.settings,
        item_count: engine.corpus.items.len(),
        community_count: engine.corpus.communities.len(),
        concept_count: engine.concepts.len(),
        source: engine.corpus.provenance.clone(),
    };
    write_json(&dir.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

pub fn load(dir: &Path) -> Result<SearchEngine, StoreError> {
    let manifest_path = dir.join(MANIFEST);
    let manifest: Manifest = read_json(&manifest_path)?;
    if manifest.format != FORMAT_NAME || manifest.version != FORMAT_VERSION {
        return Err(StoreError::Version {
            path: manifest_path,
            found: format!("{} v{}", manifest.format, manifest.version),
        });
    }
    let mut corpus = load_corpus(&dir.join(ITEMS), &dir.join(COMMUNITIES))?;
    corpus.provenance = manifest.source.clone();
    let IndexBody { index } = read_versioned(&dir.join(INDEX))?;
    let ConceptsBody {
        community_vectors,
        empty_communities,
        concepts,
    } = read_versioned(&dir.join(CONCEPTS))?;
    Ok(SearchEngine {
        settings: manifest.settings,
        corpus,
        index,
        community_vectors,
        empty_communities,
        concepts,
    })
}
