//! Chunking of speaker turns and assembly of chunks into segments.
//!
//! A turn is cut into equal-duration chunks no longer than the chunk duration
//! (17 s by default); consecutive same-speaker chunks are then grouped into
//! segments of at most four chunks, roughly one minute of speech.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::SpeakerTurn;

pub const DEFAULT_CHUNK_DURATION: f64 = 17.0;
pub const DEFAULT_MAX_CHUNKS_PER_SEGMENT: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    pub speaker_id: String,
    pub start: f64,
    pub end: f64,
    pub text: String,
    pub toxicity: Option<f64>,
}

impl Chunk {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub segment_index: usize,
    pub speaker_id: String,
    pub chunks: Vec<Chunk>,
    pub start: f64,
    pub end: f64,
    pub text: String,
    pub toxicity: Option<f64>,
}

impl Segment {
    fn from_chunks(segment_index: usize, chunks: Vec<Chunk>) -> Self {
        debug_assert!(!chunks.is_empty());
        let text = join_nonempty(chunks.iter().map(|c| c.text.as_str()));
        Segment {
            segment_index,
            speaker_id: chunks[0].speaker_id.clone(),
            start: chunks[0].start,
            end: chunks[chunks.len() - 1].end,
            text,
            toxicity: None,
            chunks,
        }
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Joins the non-empty pieces with single spaces.
pub fn join_nonempty<'a>(parts: impl IntoIterator<Item = &'a str>) -> String {
    let mut out = String::new();
    for p in parts.into_iter().filter(|p| !p.is_empty()) {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(p);
    }
    out
}

/// Whitespace-normalized text: tokens separated by single spaces.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn chunk_bounds(start: f64, end: f64, count: usize) -> Vec<(f64, f64)> {
    let width = (end - start) / count as f64;
    (0..count)
        .map(|i| {
            let a = if i == 0 { start } else { start + i as f64 * width };
            let b = if i + 1 == count {
                end
            } else {
                start + (i + 1) as f64 * width
            };
            (a, b)
        })
        .collect()
}

/// Splits a turn into `ceil(duration / chunk_duration)` equal-duration chunks.
///
/// Whitespace tokens are dealt out in order: each chunk receives
/// `tokens / chunks` of them and the first `tokens % chunks` chunks one extra.
/// A chunk may end up with empty text when a turn has fewer tokens than chunks.
pub fn chunk_turn(turn: &SpeakerTurn, chunk_duration: f64) -> Result<Vec<Chunk>> {
    if !(chunk_duration > 0.0 && chunk_duration.is_finite()) {
        return Err(Error::config(format!(
            "chunk_duration must be positive, got {chunk_duration}"
        )));
    }
    let duration = turn.duration();
    let mut count = ((duration / chunk_duration).ceil() as usize).max(1);
    let mut bounds = chunk_bounds(turn.start, turn.end, count);
    // Rounding can push a boundary a hair past the limit; add a chunk if so.
    while bounds.iter().any(|(a, b)| b - a > chunk_duration) {
        count += 1;
        bounds = chunk_bounds(turn.start, turn.end, count);
    }

    let tokens: Vec<&str> = turn.text.split_whitespace().collect();
    let base = tokens.len() / count;
    let extra = tokens.len() % count;
    let mut cursor = 0;
    let chunks = bounds
        .into_iter()
        .enumerate()
        .map(|(i, (start, end))| {
            let take = base + usize::from(i < extra);
            let text = tokens[cursor..cursor + take].join(" ");
            cursor += take;
            Chunk {
                speaker_id: turn.speaker_id.clone(),
                start,
                end,
                text,
                toxicity: None,
            }
        })
        .collect();
    Ok(chunks)
}

/// Groups time-ordered chunks greedily into segments. A speaker change always
/// closes the current segment; so does reaching `max_chunks_per_segment`.
pub fn build_segments(chunks: Vec<Chunk>, max_chunks_per_segment: usize) -> Result<Vec<Segment>> {
    if max_chunks_per_segment == 0 {
        return Err(Error::config("max_chunks_per_segment must be at least 1"));
    }
    let mut segments = Vec::new();
    let mut current: Vec<Chunk> = Vec::new();
    for chunk in chunks {
        let boundary = current.len() == max_chunks_per_segment
            || current
                .last()
                .is_some_and(|last| last.speaker_id != chunk.speaker_id);
        if boundary {
            segments.push(Segment::from_chunks(
                segments.len(),
                std::mem::take(&mut current),
            ));
        }
        current.push(chunk);
    }
    if !current.is_empty() {
        segments.push(Segment::from_chunks(segments.len(), current));
    }
    Ok(segments)
}

/// Chunks every turn and assembles the episode's segments.
pub fn segment_turns(
    turns: &[SpeakerTurn],
    chunk_duration: f64,
    max_chunks_per_segment: usize,
) -> Result<Vec<Segment>> {
    let mut chunks = Vec::new();
    for turn in turns {
        chunks.extend(chunk_turn(turn, chunk_duration)?);
    }
    build_segments(chunks, max_chunks_per_segment)
}

/// Sets the segment toxicity to the maximum chunk score and returns it.
pub fn aggregate_segment_toxicity(segment: &mut Segment) -> Result<f64> {
    let mut max = f64::NEG_INFINITY;
    for (i, chunk) in segment.chunks.iter().enumerate() {
        let score = chunk.toxicity.ok_or_else(|| {
            Error::MissingScore(format!(
                "chunk {i} of segment {} ({:.2}-{:.2} s)",
                segment.segment_index, chunk.start, chunk.end
            ))
        })?;
        max = max.max(score);
    }
    segment.toxicity = Some(max);
    Ok(max)
}
