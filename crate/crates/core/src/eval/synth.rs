//! Synthetic ambiguity benchmark.
//!
//! Each pivot tag is shared by three kinds of items:
//!
//! * a *popular* sense: many items, most of them pooled in a large
//!   community, described by a handful of recurring topic tags;
//! * a *rare* sense: fewer items in a small community;
//! * *noise*: items tagged with the pivot alone or with one common
//!   background tag, in no community.
//!
//! The query for a pivot is the pivot itself. Popular-sense items are
//! judged good, every other item carrying the pivot is judged bad.
//! Background items draw tags from a Zipf-distributed vocabulary and fill
//! generic communities.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use super::judgments::{Label, RelevanceJudgments};
use crate::corpus::{write_corpus, Community, Corpus, CorpusError, TaggedItem};

const PIVOT_NAMES: [&str; 12] = [
    "jasmine", "jaguar", "apple", "mercury", "python", "java", "amazon", "orange", "bass",
    "crane", "saturn", "mustang",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub pivots: usize,
    pub popular_items: usize,
    pub rare_items: usize,
    /// Noise items per pivot are drawn uniformly from this inclusive range.
    pub noise_items: (usize, usize),
    pub topic_tags: usize,
    pub rare_tags: usize,
    pub background_items: usize,
    pub background_vocab: usize,
    pub background_communities: usize,
    pub zipf_exponent: f64,
    /// Share of popular items pooled in the large community.
    pub popular_pooled: f64,
    pub rare_pooled: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            pivots: 8,
            popular_items: 40,
            rare_items: 20,
            noise_items: (3, 9),
            topic_tags: 6,
            rare_tags: 3,
            background_items: 300,
            background_vocab: 200,
            background_communities: 10,
            zipf_exponent: 1.0,
            popular_pooled: 0.7,
            rare_pooled: 0.8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticBenchmark {
    pub seed: u64,
    pub corpus: Corpus,
    pub queries: Vec<String>,
    pub judgments: RelevanceJudgments,
}

struct Builder {
    rng: ChaCha8Rng,
    zipf: Zipf<f64>,
    items: Vec<TaggedItem>,
    communities: Vec<Community>,
    judgments: RelevanceJudgments,
}

impl Builder {
    fn background_tag(&mut self) -> String {
        let rank = self.zipf.sample(&mut self.rng) as usize;
        format!("bg{rank}")
    }

    fn item(&mut self, tags: Vec<String>) -> String {
        let id = format!("item{:05}", self.items.len());
        let owner = format!("user{}", self.rng.random_range(0..200));
        self.items.push(TaggedItem {
            id: id.clone(),
            title: String::new(),
            description: String::new(),
            tags,
            owner,
            communities: Vec::new(),
        });
        id
    }

    fn community(&mut self, id: String, title: String, members: i64, pool: Vec<String>) {
        self.communities.push(Community {
            id,
            title,
            description: String::new(),
            member_count: members,
            item_ids: pool,
        });
    }

    fn pick_tags(&mut self, vocab: &[String], lo: usize, hi: usize) -> Vec<String> {
        let n = self.rng.random_range(lo..=hi).min(vocab.len());
        vocab.choose_multiple(&mut self.rng, n).cloned().collect()
    }

    fn pooled(&mut self, ids: &[String], share: f64) -> Vec<String> {
        ids.iter()
            .filter(|_| self.rng.random_bool(share))
            .cloned()
            .collect()
    }
}

pub fn generate(seed: u64, cfg: &SynthConfig) -> Result<SyntheticBenchmark, CorpusError> {
    let mut b = Builder {
        rng: ChaCha8Rng::seed_from_u64(seed),
        zipf: Zipf::new(cfg.background_vocab.max(1) as f64, cfg.zipf_exponent)
            .expect("vocabulary size and exponent are positive"),
        items: Vec::new(),
        communities: Vec::new(),
        judgments: RelevanceJudgments::new(),
    };
    let mut queries = Vec::with_capacity(cfg.pivots);

    for p in 0..cfg.pivots {
        let pivot = match PIVOT_NAMES.get(p) {
            Some(name) => name.to_string(),
            None => format!("pivot{p}"),
        };
        let topics: Vec<String> = (0..cfg.topic_tags).map(|t| format!("{pivot}-topic{t}")).collect();
        let rares: Vec<String> = (0..cfg.rare_tags).map(|t| format!("{pivot}-rare{t}")).collect();

        let mut popular = Vec::with_capacity(cfg.popular_items);
        for _ in 0..cfg.popular_items {
            let mut tags = vec![pivot.clone()];
            tags.extend(b.pick_tags(&topics, 1, 3));
            for _ in 0..b.rng.random_range(0..=2) {
                tags.push(b.background_tag());
            }
            let id = b.item(tags);
            b.judgments.insert(pivot.clone(), id.clone(), Label::Good);
            popular.push(id);
        }

        let mut rare = Vec::with_capacity(cfg.rare_items);
        for _ in 0..cfg.rare_items {
            let mut tags = vec![pivot.clone()];
            tags.extend(b.pick_tags(&rares, 1, 2));
            if b.rng.random_bool(0.5) {
                tags.push(b.background_tag());
            }
            let id = b.item(tags);
            b.judgments.insert(pivot.clone(), id.clone(), Label::Bad);
            rare.push(id);
        }

        let noise = b.rng.random_range(cfg.noise_items.0..=cfg.noise_items.1);
        for _ in 0..noise {
            let mut tags = vec![pivot.clone()];
            if b.rng.random_bool(0.5) {
                tags.push(b.background_tag());
            }
            let id = b.item(tags);
            b.judgments.insert(pivot.clone(), id, Label::Bad);
        }

        let pool = b.pooled(&popular, cfg.popular_pooled);
        let members = b.rng.random_range(200..=2000);
        b.community(format!("{pivot}-fans"), format!("{pivot} lovers"), members, pool);
        if b.rng.random_bool(0.5) {
            // a second group about the same sense, usually merged with the first
            let pool = b.pooled(&popular, 0.4);
            let members = b.rng.random_range(50..=500);
            b.community(format!("{pivot}-club"), format!("{pivot} club"), members, pool);
        }
        let pool = b.pooled(&rare, cfg.rare_pooled);
        let members = b.rng.random_range(3..=30);
        b.community(format!("{pivot}-niche"), format!("{pivot} niche"), members, pool);

        queries.push(pivot);
    }

    let mut background = Vec::with_capacity(cfg.background_items);
    for _ in 0..cfg.background_items {
        let n = b.rng.random_range(2..=5);
        let tags: BTreeSet<String> = (0..n).map(|_| b.background_tag()).collect();
        background.push(b.item(tags.into_iter().collect()));
    }
    for c in 0..cfg.background_communities {
        background.shuffle(&mut b.rng);
        let size = b.rng.random_range(5..=30).min(background.len());
        let pool = background[..size].to_vec();
        let members = b.rng.random_range(5..=3000);
        b.community(format!("general{c}"), format!("general {c}"), members, pool);
    }

    let corpus = Corpus::from_parts(b.items, b.communities)?;
    Ok(SyntheticBenchmark {
        seed,
        corpus,
        queries,
        judgments: b.judgments,
    })
}

impl SyntheticBenchmark {
    /// Writes `items.jsonl`, `communities.jsonl`, `queries.txt` and
    /// `qrels.tsv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(), CorpusError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CorpusError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        write_corpus(
            &self.corpus,
            &dir.join("items.jsonl"),
            &dir.join("communities.jsonl"),
        )?;
        let queries_path = dir.join("queries.txt");
        let mut f = fs::File::create(&queries_path).map_err(io(&queries_path))?;
        for q in &self.queries {
            writeln!(f, "{q}").map_err(io(&queries_path))?;
        }
        let qrels_path = dir.join("qrels.tsv");
        fs::write(&qrels_path, self.judgments.to_tsv()).map_err(io(&qrels_path))?;
        Ok(())
    }
}

/// One query per line; blank lines and `#` comments are skipped.
pub fn read_queries(path: &Path) -> Result<Vec<String>, std::io::Error> {
    Ok(fs::read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}
