//! Stage-per-command pipeline with persisted intermediates.
//!
//! | stage    | reads                              | writes                               |
//! |----------|------------------------------------|--------------------------------------|
//! | ingest   | manifest, transcripts              | `segments.jsonl`                     |
//! | score    | `segments.jsonl`, lexicon, cache   | `scored.jsonl`, cache                |
//! | chains   | `scored.jsonl`                     | `chains.jsonl`, `corpus_stats.csv`   |
//! | stats    | `chains.jsonl`                     | `textstats.csv`, `keywords.csv`      |
//! | cpd      | `chains.jsonl`                     | `cpd.jsonl`                          |
//! | eval     | `cpd.jsonl`, annotations           | `eval_report.csv`, `eval_per_chain.csv` |
//! | report   | the CSV and JSONL outputs above    | `report.md`                          |
//!
//! Each stage also writes `<stage>.run.json` with the config hash and tool
//! version. Artifacts carry no timestamps: identical inputs and config give
//! byte-identical files.

mod config;
mod report;
pub mod store;

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

pub use config::{
    ChainConfig, CpdConfig, EvalConfig, PipelineConfig, ScorerKind, ScoringConfig,
    SegmentationConfig, StatsConfig,
};
use store::*;

use crate::chains::{corpus_stats, episode_chains, EpisodeSummary};
use crate::cpd::{
    default_penalty, max_change_points, median_heuristic_gamma, ChangePointSet, CostFunction,
    Detector, Method, Signal, Stopping,
};
use crate::error::{Error, Result};
use crate::evaluation::{aggregate_report, evaluate_chain, majority_vote, AnnotationSet, ChainEval, Metric};
use crate::ingest::{normalize_overlaps, parse_transcript};
use crate::segmentation::{aggregate_segment_toxicity, segment_turns};
use crate::textstats::{aggregate_by_position, keyword_frequencies, Measure, SegmentStats};
use crate::toxicity::{score_batch, Lexicon, LexiconScorer, RemoteScorer, ScoreCache, Scorer, DEFAULT_ENDPOINT};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestSummary {
    pub episodes: usize,
    pub turns: usize,
    pub trimmed: usize,
    pub dropped: usize,
    pub segments: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreSummary {
    pub segments: usize,
    pub chunks: usize,
    /// Chunks with no text, scored 0 without a scorer call.
    pub empty_chunks: usize,
    /// Scores obtained from the scorer rather than the cache.
    pub new_scores: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainsSummary {
    pub episodes: usize,
    pub toxic_episodes: usize,
    pub chains: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatsSummary {
    pub chains: usize,
    pub segments: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CpdSummary {
    pub chains: usize,
    pub detections: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalSummary {
    pub annotated_chains: usize,
    pub evaluated_chains: usize,
    pub rows: usize,
}

fn out_path(config: &PipelineConfig, name: &str) -> PathBuf {
    config.out_dir.join(name)
}

fn require(
    config: &PipelineConfig,
    name: &str,
    stage: &'static str,
    upstream: &'static str,
) -> Result<PathBuf> {
    let path = out_path(config, name);
    if path.is_file() {
        Ok(path)
    } else {
        Err(Error::StageOrder {
            stage,
            upstream,
            missing: path,
        })
    }
}

fn prepare(config: &PipelineConfig) -> Result<()> {
    config.validate()?;
    std::fs::create_dir_all(&config.out_dir)
        .map_err(|e| Error::from(e).in_file(&config.out_dir))
}

fn write_run_metadata(
    config: &PipelineConfig,
    stage: &str,
    inputs: &[&Path],
    outputs: &[&str],
    notes: Vec<(String, String)>,
) -> Result<()> {
    let meta = RunMetadata {
        stage: stage.to_string(),
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config.hash(),
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
        notes,
    };
    log::info!(
        "{stage}: {} {} config {}",
        meta.tool,
        meta.version,
        &meta.config_hash[..12]
    );
    let mut bytes = serde_json::to_vec_pretty(&meta)?;
    bytes.push(b'\n');
    write_atomic(&out_path(config, &format!("{stage}.run.json")), &bytes)
}

/// Parses, normalizes and segments every manifest episode into
/// `segments.jsonl`.
pub fn cmd_ingest(config: &PipelineConfig) -> Result<IngestSummary> {
    prepare(config)?;
    let manifest_path = config
        .manifest
        .as_deref()
        .ok_or_else(|| Error::config("no manifest given"))?;
    let file = File::open(manifest_path).map_err(|e| Error::from(e).in_file(manifest_path))?;
    let manifest: Manifest = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::from(e).in_file(manifest_path))?;
    let base = manifest_path.parent().unwrap_or(Path::new(""));

    let mut seen = std::collections::HashSet::new();
    for e in &manifest.episodes {
        if !seen.insert(e.episode_id.as_str()) {
            return Err(Error::config(format!("duplicate episode id `{}`", e.episode_id))
                .in_file(manifest_path));
        }
    }
    if manifest.episodes.is_empty() {
        log::warn!("manifest {} lists no episodes", manifest_path.display());
    }

    let seg = &config.segmentation;
    let per_episode: Vec<(usize, usize, usize, Vec<SegmentRecord>)> = manifest
        .episodes
        .par_iter()
        .map(|entry| {
            let path = base.join(&entry.path);
            let file = File::open(&path).map_err(|e| Error::from(e).in_file(&path))?;
            let episode = parse_transcript(BufReader::new(file), &entry.episode_id, &entry.channel_id)
                .map_err(|e| e.in_file(&path))?;
            let turns = episode.turns.len();
            let (episode, report) = normalize_overlaps(episode);
            let segments = segment_turns(&episode.turns, seg.chunk_duration, seg.max_chunks_per_segment)?;
            let records = segments
                .iter()
                .map(|s| SegmentRecord::new(&entry.episode_id, &entry.channel_id, s))
                .collect();
            Ok((turns, report.trimmed, report.dropped, records))
        })
        .collect::<Result<_>>()?;

    let mut summary = IngestSummary {
        episodes: per_episode.len(),
        turns: 0,
        trimmed: 0,
        dropped: 0,
        segments: 0,
    };
    let mut records = Vec::new();
    for (turns, trimmed, dropped, recs) in per_episode {
        summary.turns += turns;
        summary.trimmed += trimmed;
        summary.dropped += dropped;
        summary.segments += recs.len();
        records.extend(recs);
    }
    write_atomic(&out_path(config, SEGMENTS), &jsonl_bytes(&records)?)?;
    write_run_metadata(config, "ingest", &[manifest_path], &[SEGMENTS], Vec::new())?;
    Ok(summary)
}

fn build_scorer(config: &PipelineConfig) -> Result<Box<dyn Scorer>> {
    match config.scoring.scorer {
        ScorerKind::Lexicon => {
            let path = config
                .scoring
                .lexicon
                .as_deref()
                .ok_or_else(|| Error::config("the lexicon scorer needs a lexicon file"))?;
            let file = File::open(path).map_err(|e| Error::from(e).in_file(path))?;
            let lexicon = Lexicon::parse(BufReader::new(file)).map_err(|e| e.in_file(path))?;
            Ok(Box::new(LexiconScorer::new(lexicon)))
        }
        ScorerKind::Remote => {
            let remote = config.scoring.remote.clone().with_env();
            if remote.api_key.is_none() && remote.endpoint == DEFAULT_ENDPOINT {
                return Err(Error::config(format!(
                    "the remote scorer needs an API key in {}",
                    crate::toxicity::API_KEY_ENV
                )));
            }
            Ok(Box::new(RemoteScorer::new(remote)?))
        }
    }
}

/// Scores every chunk of `segments.jsonl` and writes `scored.jsonl` with
/// segment toxicity set to the maximum chunk score.
pub fn cmd_score(config: &PipelineConfig) -> Result<ScoreSummary> {
    prepare(config)?;
    let input = require(config, SEGMENTS, "score", "ingest")?;
    let scorer = build_scorer(config)?;
    score_with(config, &input, scorer.as_ref())
}

/// [`cmd_score`] with a caller-supplied scorer.
pub fn cmd_score_with(config: &PipelineConfig, scorer: &dyn Scorer) -> Result<ScoreSummary> {
    prepare(config)?;
    let input = require(config, SEGMENTS, "score", "ingest")?;
    score_with(config, &input, scorer)
}

fn score_with(config: &PipelineConfig, input: &Path, scorer: &dyn Scorer) -> Result<ScoreSummary> {
    let mut records: Vec<SegmentRecord> = read_jsonl(input)?;
    let cache = match &config.scoring.cache {
        Some(path) => ScoreCache::open(path)?,
        None => ScoreCache::in_memory(),
    };
    let cached_before = cache.len();

    let mut targets: Vec<(usize, usize)> = Vec::new();
    let mut texts: Vec<&str> = Vec::new();
    let mut empty_chunks = 0;
    for (s, rec) in records.iter().enumerate() {
        for (c, chunk) in rec.chunks.iter().enumerate() {
            if chunk.text.trim().is_empty() {
                empty_chunks += 1;
            } else {
                targets.push((s, c));
                texts.push(chunk.text.as_str());
            }
        }
    }
    let results = score_batch(&texts, scorer, &cache);
    drop(texts);
    // Keep every score paid for, even when a later chunk failed.
    cache.flush()?;
    let new_scores = cache.len() - cached_before;

    for ((s, c), result) in targets.into_iter().zip(results) {
        let rec = &mut records[s];
        let value = result.map_err(|source| Error::Score {
            context: format!("{} segment {} chunk {c}", rec.episode_id, rec.segment_index),
            source,
        })?;
        rec.chunks[c].toxicity = Some(value.value);
    }
    let mut chunks = 0;
    for rec in &mut records {
        chunks += rec.chunks.len();
        for chunk in &mut rec.chunks {
            chunk.toxicity.get_or_insert(0.0);
        }
        let mut segment = rec.to_segment();
        rec.toxicity = Some(aggregate_segment_toxicity(&mut segment)?);
    }

    write_atomic(&out_path(config, SCORED), &jsonl_bytes(&records)?)?;
    let mut inputs = vec![input];
    inputs.extend(config.scoring.lexicon.as_deref());
    write_run_metadata(
        config,
        "score",
        &inputs,
        &[SCORED],
        vec![("scorer_id".into(), scorer.id().to_string())],
    )?;
    Ok(ScoreSummary {
        segments: records.len(),
        chunks,
        empty_chunks,
        new_scores,
    })
}

/// Groups segment records by episode, keeping first-appearance order.
fn group_episodes(records: Vec<SegmentRecord>) -> Result<Vec<(String, String, Vec<SegmentRecord>)>> {
    let mut order: Vec<(String, String, Vec<SegmentRecord>)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for rec in records {
        let i = *index.entry(rec.episode_id.clone()).or_insert_with(|| {
            order.push((rec.episode_id.clone(), rec.channel_id.clone(), Vec::new()));
            order.len() - 1
        });
        let (_, channel, group) = &mut order[i];
        if rec.segment_index != group.len() || rec.channel_id != *channel {
            return Err(Error::config(format!(
                "segment store is not contiguous at {} segment {}",
                rec.episode_id, rec.segment_index
            )));
        }
        group.push(rec);
    }
    Ok(order)
}

#[derive(Serialize)]
struct CorpusStatsRow<'a> {
    channel_id: &'a str,
    episodes: usize,
    mean_duration_min: f64,
    sd_duration_min: f64,
    mean_tokens: f64,
    sd_tokens: f64,
    toxic_episodes: usize,
    toxic_pct: i64,
    toxic_episode_pct: f64,
    chains: usize,
    chain_share_pct: f64,
}

/// Extracts chains around anchor segments into `chains.jsonl` and writes
/// per-channel statistics to `corpus_stats.csv`.
pub fn cmd_chains(config: &PipelineConfig) -> Result<ChainsSummary> {
    prepare(config)?;
    let input = require(config, SCORED, "chains", "score")?;
    let episodes = group_episodes(read_jsonl(&input)?)?;
    let cc = &config.chains;

    let mut chains = Vec::new();
    let mut summaries = Vec::new();
    for (episode_id, channel_id, recs) in &episodes {
        let segments: Vec<_> = recs.iter().map(SegmentRecord::to_segment).collect();
        let found = episode_chains(&segments, cc.anchor_threshold, cc.window, episode_id, channel_id)?;
        chains.extend(found.iter().map(ChainRecord::from));
        summaries.push(EpisodeSummary::from_segments(
            episode_id,
            channel_id,
            &segments,
            cc.anchor_threshold,
        )?);
    }
    let stats = corpus_stats(&summaries);
    let rows: Vec<CorpusStatsRow> = stats
        .channels
        .iter()
        .map(|c| CorpusStatsRow {
            channel_id: &c.channel_id,
            episodes: c.episodes,
            mean_duration_min: c.mean_duration_min,
            sd_duration_min: c.sd_duration_min,
            mean_tokens: c.mean_tokens,
            sd_tokens: c.sd_tokens,
            toxic_episodes: c.toxic_episodes,
            toxic_pct: c.toxic_episode_pct.round() as i64,
            toxic_episode_pct: c.toxic_episode_pct,
            chains: c.chains,
            chain_share_pct: c.chain_share_pct,
        })
        .collect();

    write_atomic(&out_path(config, CHAINS), &jsonl_bytes(&chains)?)?;
    write_atomic(
        &out_path(config, CORPUS_STATS),
        &ensure_header(
            csv_bytes(&rows)?,
            "channel_id,episodes,mean_duration_min,sd_duration_min,mean_tokens,sd_tokens,\
             toxic_episodes,toxic_pct,toxic_episode_pct,chains,chain_share_pct",
        ),
    )?;
    write_run_metadata(config, "chains", &[&input], &[CHAINS, CORPUS_STATS], Vec::new())?;
    Ok(ChainsSummary {
        episodes: episodes.len(),
        toxic_episodes: summaries.iter().filter(|s| s.anchor_count > 0).count(),
        chains: chains.len(),
    })
}

#[derive(Serialize)]
struct TextstatsRow {
    measure: &'static str,
    position: i32,
    mean: f64,
    ci_low: f64,
    ci_high: f64,
    n: usize,
}

#[derive(Serialize)]
struct KeywordRow<'a> {
    window: &'static str,
    token: &'a str,
    count: usize,
}

/// Per-position text measures with 95% intervals (`textstats.csv`) and
/// per-window keyword counts (`keywords.csv`).
pub fn cmd_stats(config: &PipelineConfig) -> Result<StatsSummary> {
    prepare(config)?;
    let input = require(config, CHAINS, "stats", "chains")?;
    let chains: Vec<ChainRecord> = read_jsonl(&input)?;

    let mut stats = Vec::new();
    let mut texts = Vec::new();
    for chain in &chains {
        for (i, s) in chain.segments.iter().enumerate() {
            let position = chain.position(i);
            stats.push(SegmentStats::compute(&chain.chain_id, position, s.end - s.start, &s.text));
            texts.push((position, s.text.as_str()));
        }
    }
    let rows: Vec<TextstatsRow> = Measure::ALL
        .iter()
        .flat_map(|&m| {
            aggregate_by_position(&stats, m).into_iter().map(move |a| TextstatsRow {
                measure: m.name(),
                position: a.position,
                mean: a.mean,
                ci_low: a.ci_low,
                ci_high: a.ci_high,
                n: a.n,
            })
        })
        .collect();
    let keywords = keyword_frequencies(texts, config.stats.top_keywords);
    let keyword_rows: Vec<KeywordRow> = keywords
        .iter()
        .map(|k| KeywordRow {
            window: k.window.name(),
            token: &k.token,
            count: k.count,
        })
        .collect();

    write_atomic(
        &out_path(config, TEXTSTATS),
        &ensure_header(csv_bytes(&rows)?, "measure,position,mean,ci_low,ci_high,n"),
    )?;
    write_atomic(
        &out_path(config, KEYWORDS),
        &ensure_header(csv_bytes(&keyword_rows)?, "window,token,count"),
    )?;
    write_run_metadata(config, "stats", &[&input], &[TEXTSTATS, KEYWORDS], Vec::new())?;
    Ok(StatsSummary {
        chains: chains.len(),
        segments: stats.len(),
    })
}

/// Header for a CSV with no rows still names the columns.
fn ensure_header(bytes: Vec<u8>, header: &str) -> Vec<u8> {
    if bytes.is_empty() {
        format!("{header}\n").into_bytes()
    } else {
        bytes
    }
}

fn detect_one(
    chain_id: &str,
    series: &[f64],
    method: Method,
    cost: CostFunction,
    cfg: &CpdConfig,
) -> Result<CpdRecord> {
    let n = series.len();
    let gamma = match cost {
        CostFunction::Rbf { gamma: Some(g) } => Some(g),
        CostFunction::Rbf { gamma: None } if n >= 2 => {
            Some(median_heuristic_gamma(&Signal::univariate(series)?))
        }
        _ => None,
    };
    let fixed = if method == Method::Pelt { None } else { cfg.n_bkps };
    let mut record = CpdRecord {
        chain_id: chain_id.to_string(),
        method,
        cost: cost.name().to_string(),
        params: CpdParams {
            min_size: cfg.min_size,
            penalty: if fixed.is_none() { cfg.penalty } else { None },
            n_bkps: fixed,
            gamma,
        },
        breakpoints: None,
        skipped: None,
    };
    let need = 2 * cfg.min_size.max(cost.min_interval());
    if n < need.max(2) {
        record.skipped = Some(format!("series of length {n} is shorter than {}", need.max(2)));
        return Ok(record);
    }
    if let Some(k) = fixed {
        let max = max_change_points(n, cfg.min_size.max(cost.min_interval()));
        if k > max {
            record.skipped = Some(format!("{k} change points do not fit in length {n}"));
            return Ok(record);
        }
    }
    let signal = Signal::univariate(series)?;
    let mut detector = Detector::new(method, cost).with_min_size(cfg.min_size);
    let stopping = match (fixed, cfg.penalty) {
        (Some(k), _) => Some(Stopping::NBkps(k)),
        (None, Some(p)) => Some(Stopping::Penalty(p)),
        (None, None) => None,
    };
    if let Some(s) = stopping {
        detector = detector.with_stopping(s);
    } else {
        record.params.penalty = Some(default_penalty(&cost.fit(&signal)?));
    }
    match detector.detect(&signal) {
        Ok((cps, _)) => record.breakpoints = Some(cps.breakpoints().to_vec()),
        Err(e @ Error::Config(_)) => record.skipped = Some(e.to_string()),
        Err(e) => return Err(e),
    }
    Ok(record)
}

/// Runs every configured detector on each chain's toxicity series and writes
/// `cpd.jsonl`. Chains too short for a detector are recorded as skipped.
pub fn cmd_cpd(config: &PipelineConfig) -> Result<CpdSummary> {
    prepare(config)?;
    let input = require(config, CHAINS, "cpd", "chains")?;
    let chains: Vec<ChainRecord> = read_jsonl(&input)?;
    let cfg = &config.cpd;
    let cost = cfg.cost_function()?;
    if cost == CostFunction::Linear && cfg.methods.contains(&Method::KernelCpd) {
        return Err(Error::config("kernelcpd does not support the linear (regression) cost"));
    }

    let per_chain: Vec<Vec<CpdRecord>> = chains
        .par_iter()
        .map(|chain| {
            let series = chain.toxicity_series()?;
            cfg.methods
                .iter()
                .map(|&m| detect_one(&chain.chain_id, &series, m, cost, cfg))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let records: Vec<CpdRecord> = per_chain.into_iter().flatten().collect();
    let skipped = records.iter().filter(|r| r.skipped.is_some()).count();
    for r in records.iter().filter(|r| r.skipped.is_some()) {
        log::warn!("{} {}: skipped, {}", r.chain_id, r.method.name(), r.skipped.as_deref().unwrap_or(""));
    }

    write_atomic(&out_path(config, CPD), &jsonl_bytes(&records)?)?;
    write_run_metadata(
        config,
        "cpd",
        &[&input],
        &[CPD],
        vec![(
            "stopping".into(),
            match (cfg.n_bkps, cfg.penalty) {
                (Some(k), _) => format!("n_bkps = {k} (pelt penalized)"),
                (None, Some(p)) => format!("penalty = {p}"),
                (None, None) => "default penalty".into(),
            },
        )],
    )?;
    Ok(CpdSummary {
        chains: chains.len(),
        detections: records.len() - skipped,
        skipped,
    })
}

/// Reads an annotation file into one [`AnnotationSet`] per chain, in order
/// of first appearance.
pub fn load_annotations(path: &Path) -> Result<Vec<AnnotationSet>> {
    let records: Vec<AnnotationRecord> = read_jsonl(path)?;
    let mut sets: Vec<AnnotationSet> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for r in records {
        let i = *index.entry(r.chain_id.clone()).or_insert_with(|| {
            sets.push(AnnotationSet::new(r.chain_id.clone(), r.n));
            sets.len() - 1
        });
        let set = &mut sets[i];
        if set.n != r.n {
            return Err(Error::config(format!(
                "{}: annotators disagree on series length ({} vs {})",
                r.chain_id, set.n, r.n
            ))
            .in_file(path));
        }
        set.add(r.annotator_id, r.indices).map_err(|e| e.in_file(path))?;
    }
    Ok(sets)
}

#[derive(Serialize)]
struct PerChainRow<'a> {
    chain_id: &'a str,
    method: &'a str,
    metric: &'static str,
    margin: Option<usize>,
    value: String,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Scores detections against majority-vote consensus. Writes one row per
/// (chain, method, metric) to `eval_per_chain.csv` and the mean / median
/// table to `eval_report.csv`.
pub fn cmd_eval(config: &PipelineConfig) -> Result<EvalSummary> {
    prepare(config)?;
    let input = require(config, CPD, "eval", "cpd")?;
    let ann_path = config
        .annotations
        .as_deref()
        .ok_or_else(|| Error::config("no annotation file given"))?;
    let sets = load_annotations(ann_path)?;
    let consensus: BTreeMap<&str, (usize, Vec<usize>)> = sets
        .iter()
        .map(|s| {
            let quorum = config.eval.quorum.unwrap_or_else(|| s.default_quorum());
            (s.chain_id.as_str(), (s.n, majority_vote(s, quorum)))
        })
        .collect();

    let records: Vec<CpdRecord> = read_jsonl(&input)?;
    let mut methods: Vec<&'static str> = Vec::new();
    let mut evals: Vec<ChainEval> = Vec::new();
    let mut evaluated = std::collections::BTreeSet::new();
    for rec in &records {
        let Some(bkps) = &rec.breakpoints else { continue };
        let Some((n, truth)) = consensus.get(rec.chain_id.as_str()) else { continue };
        let pred = ChangePointSet::new(bkps.clone(), *n).map_err(|e| {
            Error::config(format!("{}: detections do not match annotated length {n}: {e}", rec.chain_id))
        })?;
        if !methods.contains(&rec.method.name()) {
            methods.push(rec.method.name());
        }
        evals.push(evaluate_chain(&rec.chain_id, rec.method.name(), &pred, truth)?);
        evaluated.insert(rec.chain_id.as_str());
    }
    for chain in consensus.keys().filter(|c| !evaluated.contains(*c)) {
        log::warn!("{chain}: annotated but has no detections");
    }

    let per_chain: Vec<PerChainRow> = evals
        .iter()
        .flat_map(|e| {
            Metric::table_order().into_iter().map(move |m| PerChainRow {
                chain_id: &e.chain_id,
                method: &e.method,
                metric: m.name(),
                margin: m.margin(),
                value: fmt_opt(e.get(m)),
            })
        })
        .collect();

    let report = aggregate_report(&evals);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["metric", "margin", "aggregation"];
    header.extend(methods.iter().copied());
    w.write_record(&header)?;
    for metric in Metric::table_order() {
        for agg in ["mean", "median", "n"] {
            let mut row = vec![
                metric.name().to_string(),
                metric.margin().map(|m| m.to_string()).unwrap_or_default(),
                agg.to_string(),
            ];
            for method in &methods {
                let a = report.get(method, metric);
                row.push(match agg {
                    "mean" => fmt_opt(a.map(|a| a.mean)),
                    "median" => fmt_opt(a.map(|a| a.median)),
                    _ => a.map(|a| a.n_valid).unwrap_or(0).to_string(),
                });
            }
            w.write_record(&row)?;
        }
    }
    let report_bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;

    write_atomic(
        &out_path(config, EVAL_PER_CHAIN),
        &ensure_header(csv_bytes(&per_chain)?, "chain_id,method,metric,margin,value"),
    )?;
    write_atomic(&out_path(config, EVAL_REPORT), &report_bytes)?;
    write_run_metadata(config, "eval", &[&input, ann_path], &[EVAL_REPORT, EVAL_PER_CHAIN], Vec::new())?;
    Ok(EvalSummary {
        annotated_chains: sets.len(),
        evaluated_chains: evaluated.len(),
        rows: evals.len(),
    })
}

/// Renders the available stage outputs into `report.md`.
pub fn cmd_report(config: &PipelineConfig) -> Result<PathBuf> {
    prepare(config)?;
    require(config, CORPUS_STATS, "report", "chains")?;
    let text = report::render(&config.out_dir)?;
    let path = out_path(config, REPORT);
    write_atomic(&path, text.as_bytes())?;
    write_run_metadata(config, "report", &[&config.out_dir], &[REPORT], Vec::new())?;
    Ok(path)
}

/// Runs ingest through report. Eval runs only when annotations are set.
pub fn run_all(config: &PipelineConfig) -> Result<()> {
    cmd_ingest(config)?;
    cmd_score(config)?;
    cmd_chains(config)?;
    cmd_stats(config)?;
    cmd_cpd(config)?;
    if config.annotations.is_some() {
        cmd_eval(config)?;
    }
    cmd_report(config)?;
    Ok(())
}
