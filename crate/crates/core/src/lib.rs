//! Concept-driven tag search.
//!
//! Items carry free-form tags; user communities pool items. Communities
//! (or query-time clusters of matching items) become *concepts*, and a
//! query is answered by ranking items through the concepts it matches
//! rather than by raw tag similarity alone.
//!
//! ```
//! use tagconcept::{fixture, BuildSettings, QuerySpec, RankerConfig, SearchEngine};
//!
//! let engine = SearchEngine::build(fixture::mini_jasmine(), BuildSettings::default());
//! let query = QuerySpec::parse("jasmine").unwrap();
//! let out = engine.search(&query, &RankerConfig::default()).unwrap();
//! assert_eq!(out.groups[0].concept_id, "community:g1");
//! ```

pub mod cluster;
pub mod community;
pub mod concept;
pub mod corpus;
pub mod engine;
pub mod eval;
pub mod fixture;
pub mod index;
pub mod ranker;
pub mod store;
pub mod text;
pub mod vector;

pub use concept::Concept;
pub use corpus::{load_corpus, Community, Corpus, CorpusError, CorpusStats, TaggedItem};
pub use engine::{BuildSettings, ConceptSummary, SearchEngine, SearchError, SearchOutcome};
pub use index::{plain_search, QuerySpec, ScoredItem, SearchMode};
pub use ranker::{blend_alpha, rank, RankedHit, RankerConfig};
pub use vector::{cosine, TermVector};
