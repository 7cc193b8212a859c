use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tagconcept::corpus::{load_corpus_with, LoadOptions};
use tagconcept::eval::synth::{generate, read_queries, SynthConfig};
use tagconcept::eval::{compare_systems, coverage_report, RelevanceJudgments};
use tagconcept::index::IndexFields;
use tagconcept::{store, BuildSettings, RankerConfig, SearchEngine, SearchMode};
use tagconcept_service::{self as service, Params, SearchRequest, ServeOptions, DEFAULT_BIND};

#[derive(Parser)]
#[command(name = "tagconcept", version, about = "Concept-driven tag search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index directory from items and communities files.
    Ingest {
        #[arg(long)]
        items: PathBuf,
        #[arg(long)]
        communities: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Reject membership lists that disagree between the two files.
        #[arg(long)]
        strict: bool,
        /// Comma-separated subset of tags,title,description.
        #[arg(long, default_value = "tags,title,description")]
        fields: String,
        #[arg(long, default_value_t = tagconcept::community::DEFAULT_TRIM_STD)]
        trim_std: f64,
        #[arg(long, default_value_t = tagconcept::community::DEFAULT_SIM_THRESHOLD)]
        sim_threshold: f64,
    },
    /// Corpus statistics as JSON (the same document `/stats` serves).
    Stats { index: PathBuf },
    /// Ranked results for a query.
    Search {
        index: PathBuf,
        #[command(flatten)]
        opts: SearchOpts,
        /// Print concept groups instead of the flat list.
        #[arg(long)]
        grouped: bool,
        /// Print the `/search` response body.
        #[arg(long)]
        json: bool,
    },
    /// Concepts matching a query.
    Concepts {
        index: PathBuf,
        #[arg(long)]
        q: String,
        #[arg(long, default_value_t = 5)]
        top: usize,
        #[arg(long, default_value = "community")]
        mode: String,
        #[arg(long)]
        json: bool,
    },
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        index: PathBuf,
        #[arg(long, default_value = DEFAULT_BIND)]
        bind: String,
    },
}

#[derive(Args)]
struct SearchOpts {
    #[arg(long)]
    q: String,
    #[arg(long, default_value = "community")]
    mode: String,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    top_concepts: Option<usize>,
    /// Restrict to one concept id.
    #[arg(long)]
    concept: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    lsi_rank: Option<usize>,
}

impl SearchOpts {
    /// Same parameter names as the HTTP query string, so both front ends
    /// share one parser.
    fn params(&self, grouped: bool) -> Params {
        let mut p = Params::new();
        p.insert("q".into(), self.q.clone());
        p.insert("mode".into(), self.mode.clone());
        p.insert("k".into(), self.k.to_string());
        p.insert("grouped".into(), grouped.to_string());
        let mut opt = |name: &str, v: Option<String>| {
            if let Some(v) = v {
                p.insert(name.into(), v);
            }
        };
        opt("alpha", self.alpha.map(|v| v.to_string()));
        opt("lambda", self.lambda.map(|v| v.to_string()));
        opt("top_concepts", self.top_concepts.map(|v| v.to_string()));
        opt("concept", self.concept.clone());
        opt("seed", self.seed.map(|v| v.to_string()));
        opt("clusters", self.clusters.map(|v| v.to_string()));
        opt("lsi_rank", self.lsi_rank.map(|v| v.to_string()));
        p
    }
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Precision at rank k for each system against relevance judgments.
    Run {
        index: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        qrels: PathBuf,
        #[arg(long, default_value = "plain,cluster,community")]
        systems: String,
        #[arg(long, default_value_t = 50)]
        kmax: usize,
        /// Text report; a tab-separated table goes next to it with a .tsv
        /// extension.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic ambiguity benchmark.
    Synth {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        pivots: Option<usize>,
    },
    /// Community coverage of items and queries.
    Coverage {
        index: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long, default_value_t = tagconcept::ranker::DEFAULT_POPULARITY_FLOOR)]
        floor: u64,
    },
}

type CliResult = Result<(), String>;

fn load(index: &Path) -> Result<SearchEngine, String> {
    store::load(index).map_err(|e| e.to_string())
}

fn parse_fields(list: &str) -> Result<IndexFields, String> {
    let mut fields = IndexFields {
        tags: false,
        title: false,
        description: false,
    };
    for f in list.split(',').map(str::trim).filter(|f| !f.is_empty()) {
        match f {
            "tags" => fields.tags = true,
            "title" => fields.title = true,
            "description" => fields.description = true,
            other => return Err(format!("unknown field {other:?}")),
        }
    }
    if !(fields.tags || fields.title || fields.description) {
        return Err("no fields to index".into());
    }
    Ok(fields)
}

fn parse_systems(list: &str) -> Result<Vec<SearchMode>, String> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|e: tagconcept::index::QueryError| e.to_string()))
        .collect()
}

fn fmt_score(x: f64) -> String {
    format!("{x:.6}")
}

fn print_search(resp: &service::SearchResponse) {
    println!(
        "query {:?}  mode {}  alpha {}  candidates {}",
        resp.query.q, resp.mode, resp.alpha, resp.total_candidates
    );
    if let Some(groups) = &resp.groups {
        for g in groups {
            println!(
                "\n[{}] {}  P(Q|C)={} P(C)={} score={}",
                g.concept_id,
                g.label.join(" "),
                fmt_score(g.query_score),
                fmt_score(g.popularity),
                fmt_score(g.concept_score)
            );
            for item in &g.items {
                println!("  {:<12} {}  {}", item.id, fmt_score(item.score), item.tags.join(" "));
            }
        }
        return;
    }
    for (rank, h) in resp.hits.iter().enumerate() {
        let origin = match h.origin {
            tagconcept::ranker::HitOrigin::Concept => "concept",
            tagconcept::ranker::HitOrigin::Plain => "plain",
        };
        println!(
            "{:>3}. {:<12} {}  {:<7}  {}",
            rank + 1,
            h.id,
            fmt_score(h.score),
            origin,
            h.tags.join(" ")
        );
    }
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Ingest {
            items,
            communities,
            out,
            strict,
            fields,
            trim_std,
            sim_threshold,
        } => {
            let settings = BuildSettings {
                fields: parse_fields(&fields)?,
                trim_std,
                sim_threshold,
            };
            let corpus = load_corpus_with(&items, &communities, LoadOptions { strict })
                .map_err(|e| e.to_string())?;
            let engine = SearchEngine::build(corpus, settings);
            let manifest = store::save(&engine, &out).map_err(|e| e.to_string())?;
            eprintln!(
                "indexed {} items, {} communities, {} concepts into {}",
                manifest.item_count,
                manifest.community_count,
                manifest.concept_count,
                out.display()
            );
            if !engine.empty_communities.is_empty() {
                eprintln!("{} communities have no tagged items", engine.empty_communities.len());
            }
        }
        Command::Stats { index } => println!("{}", service::stats_json(&load(&index)?)),
        Command::Search {
            index,
            opts,
            grouped,
            json,
        } => {
            let engine = load(&index)?;
            let req = SearchRequest::from_params(&opts.params(grouped)).map_err(|e| e.to_string())?;
            let resp = service::search(&engine, &req).map_err(|e| e.to_string())?;
            if json {
                println!("{}", serde_json::to_string(&resp).map_err(|e| e.to_string())?);
            } else {
                print_search(&resp);
            }
        }
        Command::Concepts {
            index,
            q,
            top,
            mode,
            json,
        } => {
            let engine = load(&index)?;
            let params: Params = [("q", q), ("top", top.to_string()), ("mode", mode)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect();
            let resp = service::concepts(&engine, &params).map_err(|e| e.to_string())?;
            if json {
                println!("{}", serde_json::to_string(&resp).map_err(|e| e.to_string())?);
            } else {
                println!("{:<28} {:>8} {:>10} {:>8}  label", "concept", "P(Q|C)", "popularity", "score");
                for c in &resp.concepts {
                    println!(
                        "{:<28} {:>8.4} {:>10.4} {:>8.4}  {}",
                        c.concept_id,
                        c.query_score,
                        c.popularity,
                        c.concept_score,
                        c.label.join(" ")
                    );
                }
            }
        }
        Command::Eval(EvalCommand::Run {
            index,
            queries,
            qrels,
            systems,
            kmax,
            out,
        }) => {
            if kmax == 0 {
                return Err("kmax must be at least 1".into());
            }
            let engine = load(&index)?;
            let queries = read_queries(&queries).map_err(|e| format!("{}: {e}", queries.display()))?;
            let judgments = RelevanceJudgments::load(&qrels).map_err(|e| e.to_string())?;
            let systems = parse_systems(&systems)?;
            let report = compare_systems(&engine, &queries, &judgments, &systems, kmax, &RankerConfig::default())
                .map_err(|e| e.to_string())?;
            let text = report.render_text();
            match out {
                Some(path) => {
                    fs::write(&path, &text).map_err(|e| format!("{}: {e}", path.display()))?;
                    let table = path.with_extension("tsv");
                    fs::write(&table, report.render_table()).map_err(|e| format!("{}: {e}", table.display()))?;
                    eprintln!("wrote {} and {}", path.display(), table.display());
                }
                None => print!("{text}"),
            }
        }
        Command::Eval(EvalCommand::Synth { seed, out, pivots }) => {
            let mut cfg = SynthConfig::default();
            if let Some(p) = pivots {
                cfg.pivots = p;
            }
            let bench = generate(seed, &cfg).map_err(|e| e.to_string())?;
            bench.write_to(&out).map_err(|e| e.to_string())?;
            eprintln!(
                "wrote {} items, {} communities, {} queries, {} judgments to {}",
                bench.corpus.items.len(),
                bench.corpus.communities.len(),
                bench.queries.len(),
                bench.judgments.len(),
                out.display()
            );
        }
        Command::Eval(EvalCommand::Coverage { index, queries, floor }) => {
            let engine = load(&index)?;
            let queries = read_queries(&queries).map_err(|e| format!("{}: {e}", queries.display()))?;
            let report = coverage_report(&engine.corpus, &queries, &engine.community_vectors, floor);
            println!("{}", serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?);
        }
        Command::Serve { index, bind } => {
            let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
            rt.block_on(service::serve(ServeOptions { index, bind }))
                .map_err(|e| e.to_string())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
