//! Pipeline orchestration: composable subcommands over a shared config,
//! with a manifest entry per stage for exact replay.
//!
//! Exit codes: 0 success, 1 data error, 2 usage/config error.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::battles::{self, SentimentLexicon};
use crate::corpus::{self, TweetRecord};
use crate::embeddings::{self, EmbeddingConfig, EmbeddingMatrix};
use crate::events;
use crate::phases::{PhaseSchedule, IST_OFFSET_SECONDS};
use crate::stats::{self};
use crate::topics::{self, LdaConfig};
use crate::trends;

pub const CORPUS_FORMAT: &str = "HSJSONL1";
pub const MANIFEST_FORMAT: &str = "HSMANIFEST1";
pub const CSV_FORMAT: &str = "HSCSV1";

/// Format-version identifiers for every persisted artifact type.
pub fn format_versions() -> Vec<(&'static str, &'static str)> {
    vec![
        ("corpus", CORPUS_FORMAT),
        ("lda-model", topics::MODEL_MAGIC),
        ("vectors", "HSVEC1"),
        ("csv", CSV_FORMAT),
        ("manifest", MANIFEST_FORMAT),
    ]
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Usage or configuration problems, including missing prerequisite
    /// artifacts. Exit code 2.
    #[error("{0}")]
    Usage(String),
    /// Data-level failures surfaced from the pipeline modules. Exit code 1.
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 1,
        }
    }
}

macro_rules! data_err {
    ($($from:ty),+) => {$(
        impl From<$from> for CliError {
            fn from(e: $from) -> Self {
                CliError::Data(e.to_string())
            }
        }
    )+};
}
data_err!(
    std::io::Error,
    serde_json::Error,
    crate::stats::StatsError,
    crate::events::EventError,
    crate::topics::TopicsError,
    crate::embeddings::EmbeddingError,
    crate::battles::BattleError
);

#[derive(Debug, Parser)]
#[command(name = "hashscope", version = version_string(), about = "Hashtag corpus analytics pipeline")]
pub struct Cli {
    /// Flat key-value config file; command-line flags win over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Line-delimited JSON input (raw archive for `ingest`).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Output directory for all artifacts.
    #[arg(long, global = true)]
    pub outdir: Option<PathBuf>,
    /// Worker threads; 1 forces deterministic mode everywhere.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

fn version_string() -> &'static str {
    static VERSION: std::sync::OnceLock<String> = std::sync::OnceLock::new();
    VERSION.get_or_init(|| {
        let formats: Vec<String> = format_versions()
            .iter()
            .map(|(name, v)| format!("{name}={v}"))
            .collect();
        format!("{} ({})", env!("CARGO_PKG_VERSION"), formats.join(", "))
    })
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, repair, normalize, and filter the raw archive.
    Ingest,
    /// Frequency table, share-count distribution, per-tweet histograms.
    Stats,
    /// Overall and per-phase top-hashtag lists.
    Trends(TrendsArgs),
    /// Seeded pick of an illustrative tweet for a hashtag.
    Events(EventsArgs),
    /// LDA over hashtag documents with coherence-based K selection.
    Topics(TopicsArgs),
    /// Train skip-gram hashtag embeddings.
    Embed,
    /// Nearest hashtags to a query by cosine similarity.
    Similar(SimilarArgs),
    /// Battle detection and popularity/influence scoring.
    Battles(BattlesArgs),
    /// Verify all artifacts and write a bundle summary.
    Report,
}

#[derive(Debug, Args)]
pub struct TrendsArgs {
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EventsArgs {
    #[arg(long)]
    pub hashtag: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threshold: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TopicsArgs {
    #[arg(long)]
    pub kmin: Option<usize>,
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long)]
    pub kstep: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimilarArgs {
    #[arg(long)]
    pub query: String,
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BattlesArgs {
    /// One candidate name per line.
    #[arg(long)]
    pub roster: Option<PathBuf>,
    /// TSV of hashtag TAB positive|negative|neutral.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
}

/// Resolved settings for a run. All seeds are explicit; nothing defaults
/// to wall-clock time.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub outdir: PathBuf,
    pub threads: usize,
    pub schedule: PhaseSchedule,
    pub trend_n: usize,
    pub event_threshold: u64,
    pub event_seed: u64,
    pub lda: LdaConfig,
    pub lda_min_tags: usize,
    pub lda_kmin: usize,
    pub lda_kmax: usize,
    pub lda_kstep: usize,
    pub embed: EmbeddingConfig,
    pub battle_k: usize,
    /// Raw key-value pairs, for the manifest hash.
    raw: BTreeMap<String, String>,
}

impl PipelineConfig {
    fn from_keys(keys: BTreeMap<String, String>) -> Result<PipelineConfig, CliError> {
        let bad = |k: &str, v: &str| CliError::Usage(format!("config: bad value for {k}: {v}"));
        let get_num = |k: &str, default: u64| -> Result<u64, CliError> {
            match keys.get(k) {
                Some(v) => v.parse().map_err(|_| bad(k, v)),
                None => Ok(default),
            }
        };
        let get_f64 = |k: &str, default: f64| -> Result<f64, CliError> {
            match keys.get(k) {
                Some(v) => v.parse().map_err(|_| bad(k, v)),
                None => Ok(default),
            }
        };
        let schedule = if keys.keys().any(|k| k.starts_with("phase.")) {
            let text: String = keys
                .iter()
                .filter(|(k, _)| k.starts_with("phase."))
                .map(|(k, v)| format!("{k} = {v}\n"))
                .collect();
            PhaseSchedule::parse_config(&text, IST_OFFSET_SECONDS)
                .map_err(|e| CliError::Usage(format!("config: {e}")))?
        } else {
            PhaseSchedule::default_2019()
        };
        let input = PathBuf::from(
            keys.get("input")
                .cloned()
                .unwrap_or_else(|| "corpus.jsonl".to_string()),
        );
        let outdir = PathBuf::from(keys.get("outdir").cloned().unwrap_or_else(|| ".".to_string()));
        let lda = LdaConfig {
            alpha: keys
                .get("lda.alpha")
                .map(|v| v.parse().map_err(|_| bad("lda.alpha", v)))
                .transpose()?,
            beta: get_f64("lda.beta", 0.01)?,
            sweeps: get_num("lda.sweeps", 1000)?,
            seed: get_num("lda.seed", 0)?,
            coherence_top_m: get_num("lda.top_m", 10)? as usize,
        };
        let embed = EmbeddingConfig {
            dim: get_num("embed.dim", 300)? as usize,
            negatives: get_num("embed.negatives", 5)? as usize,
            epochs: get_num("embed.epochs", 5)? as usize,
            initial_lr: get_f64("embed.lr", 0.025)?,
            min_count: get_num("embed.min_count", 5)?,
            seed: get_num("embed.seed", 0)?,
        };
        Ok(PipelineConfig {
            input,
            outdir,
            threads: get_num("threads", 1)? as usize,
            schedule,
            trend_n: get_num("trends.n", 50)? as usize,
            event_threshold: get_num("events.threshold", 8000)?,
            event_seed: get_num("events.seed", 0)?,
            lda,
            lda_min_tags: get_num("lda.min_tags", 5)? as usize,
            lda_kmin: get_num("lda.kmin", 5)? as usize,
            lda_kmax: get_num("lda.kmax", 40)? as usize,
            lda_kstep: get_num("lda.kstep", 5)? as usize,
            embed,
            battle_k: get_num("battles.k", 10)? as usize,
            raw: keys,
        })
    }

    /// SHA-256 over the canonical key-value listing.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for (k, v) in &self.raw {
            hasher.update(k.as_bytes());
            hasher.update(b"=");
            hasher.update(v.as_bytes());
            hasher.update(b"\n");
        }
        format!("{:x}", hasher.finalize())
    }
}

fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut keys = BTreeMap::new();
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config: expected key = value: {raw}")))?;
        keys.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(keys)
}

/// Merge config file and CLI flags (flags win) into a resolved config.
pub fn resolve_config(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let mut keys = match &cli.config {
        Some(path) => parse_config_file(path)?,
        None => BTreeMap::new(),
    };
    let mut set = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            keys.insert(k.to_string(), v);
        }
    };
    set("input", cli.input.as_ref().map(|p| p.display().to_string()));
    set("outdir", cli.outdir.as_ref().map(|p| p.display().to_string()));
    set("threads", cli.threads.map(|t| t.to_string()));
    match &cli.command {
        Command::Trends(a) => set("trends.n", a.n.map(|n| n.to_string())),
        Command::Events(a) => {
            set("events.seed", a.seed.map(|s| s.to_string()));
            set("events.threshold", a.threshold.map(|t| t.to_string()));
        }
        Command::Topics(a) => {
            set("lda.kmin", a.kmin.map(|k| k.to_string()));
            set("lda.kmax", a.kmax.map(|k| k.to_string()));
            set("lda.kstep", a.kstep.map(|k| k.to_string()));
        }
        Command::Similar(a) => set("battles.k", a.k.map(|k| k.to_string())),
        Command::Battles(a) => set("battles.k", a.k.map(|k| k.to_string())),
        _ => {}
    }
    PipelineConfig::from_keys(keys)
}

fn require_artifact(path: &Path, producer: &str) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "missing {}; run `hashscope {producer}` first",
            path.display()
        )))
    }
}

fn read_corpus(path: &Path) -> Result<Vec<TweetRecord>, CliError> {
    let file = fs::File::open(path)?;
    let mut records = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TweetRecord = serde_json::from_str(&line)
            .map_err(|e| CliError::Data(format!("corrupt corpus line: {e}")))?;
        records.push(record);
    }
    Ok(records)
}

fn normalized_corpus_path(config: &PipelineConfig) -> PathBuf {
    config.outdir.join("corpus.jsonl")
}

fn vectors_path(config: &PipelineConfig) -> PathBuf {
    config.outdir.join("vectors.bin")
}

fn write_manifest_entry(
    config: &PipelineConfig,
    subcommand: &str,
    params: serde_json::Value,
) -> Result<(), CliError> {
    let entry = json!({
        "format": MANIFEST_FORMAT,
        "subcommand": subcommand,
        "config_hash": config.hash(),
        "versions": format_versions()
            .into_iter()
            .collect::<BTreeMap<&str, &str>>(),
        "params": params,
    });
    let mut file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(config.outdir.join("manifest.jsonl"))?;
    writeln!(file, "{entry}")?;
    Ok(())
}

struct CsvWriter {
    inner: BufWriter<fs::File>,
}

impl CsvWriter {
    fn create(path: &Path, header: &str) -> Result<CsvWriter, CliError> {
        let mut inner = BufWriter::new(fs::File::create(path)?);
        writeln!(inner, "{header}")?;
        Ok(CsvWriter { inner })
    }

    fn row(&mut self, fields: &[String]) -> Result<(), CliError> {
        writeln!(self.inner, "{}", fields.join(","))?;
        Ok(())
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.9}")
}

/// Run one subcommand. Returns the exit status message for success paths
/// that report counters (ingest's skipped-line count).
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let config = resolve_config(cli)?;
    fs::create_dir_all(&config.outdir)?;
    match &cli.command {
        Command::Ingest => run_ingest(&config),
        Command::Stats => run_stats(&config),
        Command::Trends(_) => run_trends(&config),
        Command::Events(a) => run_events(&config, a),
        Command::Topics(_) => run_topics(&config),
        Command::Embed => run_embed(&config),
        Command::Similar(a) => run_similar(&config, a),
        Command::Battles(a) => run_battles(&config, a),
        Command::Report => run_report(&config),
    }
}

fn run_ingest(config: &PipelineConfig) -> Result<(), CliError> {
    if !config.input.exists() {
        return Err(CliError::Usage(format!(
            "input file {} does not exist",
            config.input.display()
        )));
    }
    let file = fs::File::open(&config.input)?;
    let reader = BufReader::new(file);
    let mut skipped = 0u64;
    let mut parsed = Vec::new();
    for line in reader.split(b'\n') {
        let bytes = line?;
        if bytes.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let Ok(text) = std::str::from_utf8(&bytes) else {
            skipped += 1;
            continue;
        };
        match corpus::parse_record(text) {
            Ok(record) => parsed.push(record),
            Err(_) => skipped += 1,
        }
    }
    let (records, stats) = corpus::filter_corpus(parsed);
    let mut out = BufWriter::new(fs::File::create(normalized_corpus_path(config))?);
    for record in &records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    let stats_json = serde_json::to_string_pretty(&stats)?;
    fs::write(config.outdir.join("corpus_stats.json"), stats_json + "\n")?;
    write_manifest_entry(
        config,
        "ingest",
        json!({"input": config.input.display().to_string(), "skipped_lines": skipped}),
    )?;
    println!(
        "ingest: {} records kept, {} lines skipped",
        records.len(),
        skipped
    );
    Ok(())
}

fn load_required_corpus(config: &PipelineConfig) -> Result<Vec<TweetRecord>, CliError> {
    let path = normalized_corpus_path(config);
    require_artifact(&path, "ingest")?;
    read_corpus(&path)
}

fn run_stats(config: &PipelineConfig) -> Result<(), CliError> {
    let records = load_required_corpus(config)?;
    let table = stats::count_hashtags(&records, None, &config.schedule);

    let mut freq = CsvWriter::create(&config.outdir.join("freq.csv"), "hashtag,count")?;
    for (tag, count) in table.sorted() {
        freq.row(&[tag.to_string(), count.to_string()])?;
    }

    let dist = stats::share_count_distribution(&table)?;
    let mut share = CsvWriter::create(
        &config.outdir.join("sharedist.csv"),
        "shares,hashtag_count",
    )?;
    // Descending by hashtag count, ties by ascending share value.
    let mut rows: Vec<_> = dist.buckets.iter().collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    for &(bucket, count, _) in rows {
        share.row(&[bucket.to_string(), count.to_string()])?;
    }

    let per_tweet = stats::per_tweet_histogram(&records, &config.schedule);
    for (phase, hist) in &per_tweet {
        let name = format!("pertweet_{phase}.csv");
        let mut w = CsvWriter::create(&config.outdir.join(name), "k,count,share")?;
        for &(k, count, share) in &hist.buckets {
            let label = if Some(k) == hist.overflow_bucket {
                format!("{k}+")
            } else {
                k.to_string()
            };
            w.row(&[label, count.to_string(), fmt_f64(share)])?;
        }
    }
    write_manifest_entry(
        config,
        "stats",
        json!({"records": records.len(), "unique_hashtags": table.counts.len()}),
    )?;
    println!("stats: {} unique hashtags", table.counts.len());
    Ok(())
}

fn write_trend_csv(path: &Path, list: &trends::TrendList) -> Result<(), CliError> {
    let mut w = CsvWriter::create(path, "rank,hashtag,count,weight")?;
    for (rank, entry) in list.entries.iter().enumerate() {
        w.row(&[
            (rank + 1).to_string(),
            entry.hashtag.clone(),
            entry.count.to_string(),
            fmt_f64(entry.weight),
        ])?;
    }
    Ok(())
}

fn run_trends(config: &PipelineConfig) -> Result<(), CliError> {
    let records = load_required_corpus(config)?;
    let overall_table = stats::count_hashtags(&records, None, &config.schedule);
    let overall = trends::top_hashtags(&overall_table, config.trend_n);
    write_trend_csv(&config.outdir.join("trends_all.csv"), &overall)?;

    let mut per_phase = BTreeMap::new();
    for phase in config.schedule.phase_ids() {
        per_phase.insert(
            phase,
            stats::count_hashtags(&records, Some(phase), &config.schedule),
        );
    }
    let phase_lists = trends::phase_trends(&per_phase, &overall, config.trend_n);
    for (phase, list) in &phase_lists {
        write_trend_csv(&config.outdir.join(format!("trends_{phase}.csv")), list)?;
    }
    write_manifest_entry(config, "trends", json!({"n": config.trend_n}))?;
    println!("trends: top {} written", config.trend_n);
    Ok(())
}

fn run_events(config: &PipelineConfig, args: &EventsArgs) -> Result<(), CliError> {
    let records = load_required_corpus(config)?;
    let pick = events::pick_event(&args.hashtag, &records, config.event_seed)?;
    let out = json!({
        "hashtag": pick.hashtag,
        "timestamp": pick.tweet.timestamp.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        "text": pick.tweet.text,
        "pool_size": pick.candidate_pool_size,
        "seed": pick.seed,
    });
    let rendered = serde_json::to_string_pretty(&out)?;
    fs::write(
        config.outdir.join(format!("event_{}.json", args.hashtag)),
        rendered.clone() + "\n",
    )?;
    write_manifest_entry(
        config,
        "events",
        json!({"hashtag": args.hashtag, "seed": config.event_seed, "threshold": config.event_threshold}),
    )?;
    println!("{rendered}");
    Ok(())
}

fn k_grid(config: &PipelineConfig) -> Vec<usize> {
    let mut grid = Vec::new();
    let mut k = config.lda_kmin;
    while k <= config.lda_kmax {
        grid.push(k);
        k += config.lda_kstep.max(1);
    }
    grid
}

fn run_topics(config: &PipelineConfig) -> Result<(), CliError> {
    let records = load_required_corpus(config)?;
    let (docs, vocab) = topics::build_documents(&records, config.lda_min_tags, 1)?;
    let grid = k_grid(config);
    if grid.is_empty() {
        return Err(CliError::Usage("empty K grid".to_string()));
    }
    let curve = topics::sweep_k(&docs, &vocab, &grid, &config.lda, config.threads)?;

    let mut w = CsvWriter::create(&config.outdir.join("coherence.csv"), "K,coherence")?;
    for &(k, c) in &curve.points {
        w.row(&[k.to_string(), fmt_f64(c)])?;
    }

    let selection = if curve.points.len() >= 3 {
        topics::select_k(&curve, 0.02, 2)
    } else {
        topics::KSelection {
            k: curve.points.last().unwrap().0,
            converged: false,
        }
    };
    fs::write(
        config.outdir.join("chosen_k.json"),
        serde_json::to_string_pretty(&selection_json(&selection))? + "\n",
    )?;

    for &k in &grid {
        let seed = crate::rng::SplitMix64::derive(config.lda.seed, k as u64);
        let model = topics::train_lda(
            &docs,
            vocab.len(),
            k,
            config.lda.alpha_for(k),
            config.lda.beta,
            config.lda.sweeps,
            seed,
        )?;
        let mut out = BufWriter::new(fs::File::create(
            config.outdir.join(format!("topics_k{k}.txt")),
        )?);
        for t in 0..k {
            let words = topics::topic_top_words(&model, &vocab, t, 10);
            let rendered: Vec<String> = words.into_iter().map(|(w, _)| w).collect();
            writeln!(out, "topic {t}: {}", rendered.join(" "))?;
        }
        if k == selection.k {
            let file = fs::File::create(config.outdir.join(format!("lda_k{k}.model")))?;
            model.save(BufWriter::new(file), &vocab)?;
        }
    }
    write_manifest_entry(
        config,
        "topics",
        json!({"grid": grid, "chosen_k": selection.k, "converged": selection.converged,
               "sweeps": config.lda.sweeps, "seed": config.lda.seed}),
    )?;
    println!(
        "topics: chose K={}{}",
        selection.k,
        if selection.converged {
            ""
        } else {
            " (no plateau; argmax fallback)"
        }
    );
    Ok(())
}

fn selection_json(sel: &topics::KSelection) -> serde_json::Value {
    json!({"k": sel.k, "converged": sel.converged})
}

fn run_embed(config: &PipelineConfig) -> Result<(), CliError> {
    let records = load_required_corpus(config)?;
    let sentences: Vec<&[String]> = records.iter().map(|r| r.hashtags.as_slice()).collect();
    let matrix: EmbeddingMatrix<f32> = embeddings::train_skipgram(&sentences, &config.embed)?;
    let file = fs::File::create(vectors_path(config))?;
    embeddings::save_vectors(&matrix, BufWriter::new(file))?;
    write_manifest_entry(
        config,
        "embed",
        json!({"dim": config.embed.dim, "vocab": matrix.tokens.len(),
               "epochs": config.embed.epochs, "seed": config.embed.seed}),
    )?;
    println!(
        "embed: {} vectors of dimension {}",
        matrix.tokens.len(),
        config.embed.dim
    );
    Ok(())
}

fn load_required_vectors(config: &PipelineConfig) -> Result<EmbeddingMatrix<f32>, CliError> {
    let path = vectors_path(config);
    require_artifact(&path, "embed")?;
    let file = fs::File::open(path)?;
    Ok(embeddings::load_vectors(BufReader::new(file))?)
}

fn run_similar(config: &PipelineConfig, args: &SimilarArgs) -> Result<(), CliError> {
    let matrix = load_required_vectors(config)?;
    let k = args.k.unwrap_or(10);
    let results = embeddings::most_similar(&matrix, &args.query, k, &HashSet::new())?;
    let out = json!({
        "query": args.query,
        "neighbors": results
            .iter()
            .map(|(t, s)| json!({"hashtag": t, "similarity": s}))
            .collect::<Vec<_>>(),
    });
    let rendered = serde_json::to_string_pretty(&out)?;
    fs::write(
        config.outdir.join(format!("similar_{}.json", args.query)),
        rendered.clone() + "\n",
    )?;
    write_manifest_entry(config, "similar", json!({"query": args.query, "k": k}))?;
    println!("{rendered}");
    Ok(())
}

fn run_battles(config: &PipelineConfig, args: &BattlesArgs) -> Result<(), CliError> {
    let records = load_required_corpus(config)?;
    let matrix = load_required_vectors(config)?;
    let table = stats::count_hashtags(&records, None, &config.schedule);

    let roster: Vec<String> = match &args.roster {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read roster {}: {e}", path.display())))?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect(),
        None => Vec::new(),
    };
    let lexicon = match &args.lexicon {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read lexicon {}: {e}", path.display()))
            })?;
            SentimentLexicon::parse_tsv(&text)?
        }
        None => SentimentLexicon::default(),
    };

    let found = battles::find_battle_hashtags(&table, &roster);
    let mut reports = Vec::new();
    let mut unconfirmed = Vec::new();
    for battle in &found {
        if !battle.confirmed && !roster.is_empty() {
            unconfirmed.push(battle.battle_hashtag.clone());
            continue;
        }
        reports.push(battles::score_battle(
            &matrix,
            battle,
            &table,
            &lexicon,
            config.battle_k,
        )?);
    }

    let out = json!({
        "battles": reports,
        "unconfirmed": unconfirmed,
    });
    fs::write(
        config.outdir.join("battles.json"),
        serde_json::to_string_pretty(&out)? + "\n",
    )?;

    let mut w = CsvWriter::create(
        &config.outdir.join("battles.csv"),
        "candidate,popularity,positive_share,negative_share",
    )?;
    for report in &reports {
        for side in [&report.a, &report.b] {
            let n = side.n.max(1) as f64;
            w.row(&[
                side.candidate.clone(),
                side.popularity.to_string(),
                fmt_f64(side.positives as f64 / n),
                fmt_f64(side.negatives as f64 / n),
            ])?;
        }
    }
    write_manifest_entry(
        config,
        "battles",
        json!({"k": config.battle_k, "confirmed": reports.len(), "unconfirmed": unconfirmed.len()}),
    )?;
    println!(
        "battles: {} scored, {} unconfirmed",
        reports.len(),
        unconfirmed.len()
    );
    Ok(())
}

fn run_report(config: &PipelineConfig) -> Result<(), CliError> {
    let expected: Vec<(&str, &str)> = vec![
        ("corpus.jsonl", "ingest"),
        ("corpus_stats.json", "ingest"),
        ("freq.csv", "stats"),
        ("sharedist.csv", "stats"),
        ("trends_all.csv", "trends"),
        ("coherence.csv", "topics"),
        ("chosen_k.json", "topics"),
        ("vectors.bin", "embed"),
    ];
    let mut entries = Vec::new();
    for (name, producer) in &expected {
        let path = config.outdir.join(name);
        require_artifact(&path, producer)?;
        let bytes = fs::read(&path)?;
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        entries.push(json!({
            "artifact": name,
            "bytes": bytes.len(),
            "sha256": format!("{:x}", hasher.finalize()),
        }));
    }
    let out = json!({
        "config_hash": config.hash(),
        "versions": format_versions()
            .into_iter()
            .collect::<BTreeMap<&str, &str>>(),
        "artifacts": entries,
    });
    fs::write(
        config.outdir.join("report.json"),
        serde_json::to_string_pretty(&out)? + "\n",
    )?;
    write_manifest_entry(config, "report", json!({"artifacts": expected.len()}))?;
    println!("report: {} artifacts verified", expected.len());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults() {
        let config = PipelineConfig::from_keys(BTreeMap::new()).unwrap();
        assert_eq!(config.trend_n, 50);
        assert_eq!(config.event_threshold, 8000);
        assert_eq!(config.embed.dim, 300);
        assert_eq!(config.lda_kmin, 5);
        assert_eq!(config.lda_kmax, 40);
        assert_eq!(config.lda.seed, 0);
        assert_eq!(config.threads, 1);
    }

    #[test]
    fn config_hash_is_stable_and_sensitive() {
        let mut keys = BTreeMap::new();
        keys.insert("trends.n".to_string(), "10".to_string());
        let a = PipelineConfig::from_keys(keys.clone()).unwrap().hash();
        let b = PipelineConfig::from_keys(keys.clone()).unwrap().hash();
        assert_eq!(a, b);
        keys.insert("trends.n".to_string(), "20".to_string());
        let c = PipelineConfig::from_keys(keys).unwrap().hash();
        assert_ne!(a, c);
    }

    #[test]
    fn bad_config_value_is_usage_error() {
        let mut keys = BTreeMap::new();
        keys.insert("trends.n".to_string(), "many".to_string());
        match PipelineConfig::from_keys(keys) {
            Err(e @ CliError::Usage(_)) => assert_eq!(e.exit_code(), 2),
            other => panic!("expected usage error, got {other:?}"),
        }
    }

    #[test]
    fn k_grid_layout() {
        let mut keys = BTreeMap::new();
        keys.insert("lda.kmin".to_string(), "5".to_string());
        keys.insert("lda.kmax".to_string(), "40".to_string());
        keys.insert("lda.kstep".to_string(), "5".to_string());
        let config = PipelineConfig::from_keys(keys).unwrap();
        assert_eq!(k_grid(&config), vec![5, 10, 15, 20, 25, 30, 35, 40]);
    }

    #[test]
    fn schedule_override_via_keys() {
        let mut keys = BTreeMap::new();
        keys.insert("phase.1".to_string(), "2020-01-01..2020-01-07".to_string());
        let config = PipelineConfig::from_keys(keys).unwrap();
        assert_eq!(config.schedule.phases().len(), 1);
    }
}
