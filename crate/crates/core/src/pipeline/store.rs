//! On-disk artifact records and their readers and writers.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::chains::ConversationChain;
use crate::cpd::Method;
use crate::error::{Error, Result};
use crate::segmentation::{Chunk, Segment};

pub const SEGMENTS: &str = "segments.jsonl";
pub const SCORED: &str = "scored.jsonl";
pub const CHAINS: &str = "chains.jsonl";
pub const CORPUS_STATS: &str = "corpus_stats.csv";
pub const TEXTSTATS: &str = "textstats.csv";
pub const KEYWORDS: &str = "keywords.csv";
pub const CPD: &str = "cpd.jsonl";
pub const EVAL_REPORT: &str = "eval_report.csv";
pub const EVAL_PER_CHAIN: &str = "eval_per_chain.csv";
pub const REPORT: &str = "report.md";

/// Ingest manifest: `{"episodes": [{"episode_id", "channel_id", "path"}]}`.
/// Transcript paths are relative to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub episodes: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub episode_id: String,
    pub channel_id: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkRecord {
    pub start: f64,
    pub end: f64,
    pub text: String,
    pub toxicity: Option<f64>,
}

/// One line of the segment store. `toxicity` is null until scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub episode_id: String,
    pub channel_id: String,
    pub segment_index: usize,
    pub speaker: String,
    pub start: f64,
    pub end: f64,
    pub text: String,
    pub toxicity: Option<f64>,
    pub chunks: Vec<ChunkRecord>,
}

impl SegmentRecord {
    pub fn new(episode_id: &str, channel_id: &str, segment: &Segment) -> Self {
        SegmentRecord {
            episode_id: episode_id.to_string(),
            channel_id: channel_id.to_string(),
            segment_index: segment.segment_index,
            speaker: segment.speaker_id.clone(),
            start: segment.start,
            end: segment.end,
            text: segment.text.clone(),
            toxicity: segment.toxicity,
            chunks: segment
                .chunks
                .iter()
                .map(|c| ChunkRecord {
                    start: c.start,
                    end: c.end,
                    text: c.text.clone(),
                    toxicity: c.toxicity,
                })
                .collect(),
        }
    }

    pub fn to_segment(&self) -> Segment {
        Segment {
            segment_index: self.segment_index,
            speaker_id: self.speaker.clone(),
            chunks: self
                .chunks
                .iter()
                .map(|c| Chunk {
                    speaker_id: self.speaker.clone(),
                    start: c.start,
                    end: c.end,
                    text: c.text.clone(),
                    toxicity: c.toxicity,
                })
                .collect(),
            start: self.start,
            end: self.end,
            text: self.text.clone(),
            toxicity: self.toxicity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSegmentRecord {
    pub index: usize,
    pub speaker: String,
    pub start: f64,
    pub end: f64,
    pub toxicity: Option<f64>,
    pub text: String,
}

/// One line of the chain store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub chain_id: String,
    pub episode_id: String,
    pub channel_id: String,
    /// Position of the anchor inside `segments`.
    pub anchor_offset: usize,
    pub truncated_head: usize,
    pub truncated_tail: usize,
    pub segments: Vec<ChainSegmentRecord>,
}

impl From<&ConversationChain> for ChainRecord {
    fn from(chain: &ConversationChain) -> Self {
        ChainRecord {
            chain_id: chain.chain_id.clone(),
            episode_id: chain.episode_id.clone(),
            channel_id: chain.channel_id.clone(),
            anchor_offset: chain.anchor_index,
            truncated_head: chain.truncated_head,
            truncated_tail: chain.truncated_tail,
            segments: chain
                .segments
                .iter()
                .map(|s| ChainSegmentRecord {
                    index: s.segment_index,
                    speaker: s.speaker_id.clone(),
                    start: s.start,
                    end: s.end,
                    toxicity: s.toxicity,
                    text: s.text.clone(),
                })
                .collect(),
        }
    }
}

impl ChainRecord {
    /// Offset of segment `i` from the anchor.
    pub fn position(&self, i: usize) -> i32 {
        i as i32 - self.anchor_offset as i32
    }

    pub fn toxicity_series(&self) -> Result<Vec<f64>> {
        self.segments
            .iter()
            .map(|s| {
                s.toxicity.ok_or_else(|| {
                    Error::MissingScore(format!("{} segment {}", self.chain_id, s.index))
                })
            })
            .collect()
    }
}

/// Stopping rule and cost parameters a detection ran with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpdParams {
    pub min_size: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub penalty: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_bkps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma: Option<f64>,
}

/// One line of the detection store. Exactly one of `breakpoints` and
/// `skipped` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpdRecord {
    pub chain_id: String,
    pub method: Method,
    pub cost: String,
    pub params: CpdParams,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub breakpoints: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub skipped: Option<String>,
}

/// One line of an annotation file: one annotator's marks on one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationRecord {
    pub chain_id: String,
    pub annotator_id: String,
    pub indices: Vec<usize>,
    pub n: usize,
}

/// Reproducibility sidecar written next to each stage's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub stage: String,
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<(String, String)>,
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::from(e).in_file(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::from(e).in_file(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line)
            .map_err(|e| Error::parse(i + 1, e.to_string()).in_file(path))?;
        out.push(item);
    }
    Ok(out)
}

pub fn jsonl_bytes<T: Serialize>(items: &[T]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item)?;
        buf.push(b'\n');
    }
    Ok(buf)
}

pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// Replaces `path` with `bytes` via a temporary sibling, so readers never
/// see a half-written artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| Error::from(e).in_file(&tmp))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::from(e).in_file(path))
}
