//! Diarized transcript ingestion.
//!
//! A transcript is line-delimited JSON, one speaker turn per line:
//!
//! ```text
//! {"speaker": "SPEAKER_00", "start": 0.0, "end": 12.4, "text": "good evening"}
//! ```
//!
//! Episode and channel ids are not part of the transcript; they come from the
//! ingest manifest (see [`crate::pipeline`]).

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One diarized utterance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerTurn {
    pub speaker_id: String,
    pub start: f64,
    pub end: f64,
    pub text: String,
}

impl SpeakerTurn {
    pub fn new(
        speaker_id: impl Into<String>,
        start: f64,
        end: f64,
        text: impl Into<String>,
    ) -> Result<Self> {
        let turn = SpeakerTurn {
            speaker_id: speaker_id.into(),
            start,
            end,
            text: text.into(),
        };
        turn.validate().map_err(Error::config)?;
        Ok(turn)
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if !self.start.is_finite() || !self.end.is_finite() {
            return Err("start and end must be finite".into());
        }
        if self.start < 0.0 {
            return Err(format!("negative start time {}", self.start));
        }
        if self.start >= self.end {
            return Err(format!(
                "start ({}) must be before end ({})",
                self.start, self.end
            ));
        }
        if self.text.trim().is_empty() {
            return Err("text is empty".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub episode_id: String,
    pub channel_id: String,
    pub turns: Vec<SpeakerTurn>,
}

impl Episode {
    /// Total speech time covered by the turns, in seconds.
    pub fn speech_duration(&self) -> f64 {
        self.turns.iter().map(SpeakerTurn::duration).sum()
    }

    /// Builds an episode from turns in any order; turns are sorted by start.
    pub fn from_turns(
        episode_id: impl Into<String>,
        channel_id: impl Into<String>,
        mut turns: Vec<SpeakerTurn>,
    ) -> Self {
        sort_turns(&mut turns);
        Episode {
            episode_id: episode_id.into(),
            channel_id: channel_id.into(),
            turns,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TurnRecord {
    speaker: String,
    start: f64,
    end: f64,
    text: String,
}

fn sort_turns(turns: &mut [SpeakerTurn]) {
    // Stable: equal starts keep file order.
    turns.sort_by(|a, b| a.start.total_cmp(&b.start));
}

/// Parses a line-delimited transcript. Blank lines are skipped; any malformed
/// record fails the whole parse with its 1-based line number.
pub fn parse_transcript<R: BufRead>(
    reader: R,
    episode_id: &str,
    channel_id: &str,
) -> Result<Episode> {
    let mut turns = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TurnRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(line_no, e.to_string()))?;
        let turn = SpeakerTurn {
            speaker_id: record.speaker,
            start: record.start,
            end: record.end,
            text: record.text,
        };
        turn.validate().map_err(|m| Error::parse(line_no, m))?;
        turns.push(turn);
    }
    if turns.is_empty() {
        return Err(Error::EmptyEpisode);
    }
    Ok(Episode::from_turns(episode_id, channel_id, turns))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub trimmed: usize,
    pub dropped: usize,
}

/// Removes overlapping speech: a turn that starts before the previous kept
/// turn ends is trimmed to start at that end, and dropped entirely if nothing
/// remains. Touching intervals are left alone.
pub fn normalize_overlaps(mut episode: Episode) -> (Episode, OverlapReport) {
    let mut report = OverlapReport::default();
    let mut kept: Vec<SpeakerTurn> = Vec::with_capacity(episode.turns.len());
    for mut turn in episode.turns.drain(..) {
        if let Some(prev) = kept.last() {
            if turn.start < prev.end {
                if prev.end >= turn.end {
                    report.dropped += 1;
                    continue;
                }
                turn.start = prev.end;
                report.trimmed += 1;
            }
        }
        kept.push(turn);
    }
    episode.turns = kept;
    (episode, report)
}
