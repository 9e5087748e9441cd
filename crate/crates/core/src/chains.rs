//! Anchor detection, toxic conversation chains and per-channel statistics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segmentation::Segment;

pub const DEFAULT_ANCHOR_THRESHOLD: f64 = 0.7;
pub const DEFAULT_WINDOW: usize = 10;

/// An anchor segment with up to `window` segments of context on each side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversationChain {
    pub chain_id: String,
    pub episode_id: String,
    pub channel_id: String,
    /// Position of the anchor inside `segments`.
    pub anchor_index: usize,
    pub segments: Vec<Segment>,
    pub truncated_head: usize,
    pub truncated_tail: usize,
}

impl ConversationChain {
    pub fn anchor(&self) -> &Segment {
        &self.segments[self.anchor_index]
    }

    /// The per-segment toxicity series, with unscored segments as `None`.
    pub fn toxicity_series(&self) -> Vec<Option<f64>> {
        self.segments.iter().map(|s| s.toxicity).collect()
    }

    pub fn is_interior(&self) -> bool {
        self.truncated_head == 0 && self.truncated_tail == 0
    }
}

pub fn chain_id(episode_id: &str, anchor_segment_index: usize) -> String {
    format!("{episode_id}#{anchor_segment_index}")
}

fn scored(segment: &Segment) -> Result<f64> {
    segment
        .toxicity
        .ok_or_else(|| Error::MissingScore(format!("segment {}", segment.segment_index)))
}

/// Indices of segments scoring at or above `threshold`, ascending.
pub fn find_anchors(segments: &[Segment], threshold: f64) -> Result<Vec<usize>> {
    let mut anchors = Vec::new();
    for (i, s) in segments.iter().enumerate() {
        if scored(s)? >= threshold {
            anchors.push(i);
        }
    }
    Ok(anchors)
}

/// The chain centred on `anchor`, clipped at the episode edges. Missing
/// context is counted in `truncated_head` / `truncated_tail`.
pub fn extract_chain(
    segments: &[Segment],
    anchor: usize,
    window: usize,
    episode_id: &str,
    channel_id: &str,
) -> Result<ConversationChain> {
    if anchor >= segments.len() {
        return Err(Error::IndexOutOfBounds {
            index: anchor,
            len: segments.len(),
        });
    }
    let lo = anchor.saturating_sub(window);
    let hi = (anchor + window).min(segments.len() - 1);
    Ok(ConversationChain {
        chain_id: chain_id(episode_id, segments[anchor].segment_index),
        episode_id: episode_id.to_string(),
        channel_id: channel_id.to_string(),
        anchor_index: anchor - lo,
        segments: segments[lo..=hi].to_vec(),
        truncated_head: window - (anchor - lo),
        truncated_tail: window - (hi - anchor),
    })
}

/// One chain per anchor; overlapping chains are kept as they are.
pub fn episode_chains(
    segments: &[Segment],
    threshold: f64,
    window: usize,
    episode_id: &str,
    channel_id: &str,
) -> Result<Vec<ConversationChain>> {
    find_anchors(segments, threshold)?
        .into_iter()
        .map(|a| extract_chain(segments, a, window, episode_id, channel_id))
        .collect()
}

/// What corpus statistics need to know about one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub episode_id: String,
    pub channel_id: String,
    /// Seconds from first segment start to last segment end.
    pub duration: f64,
    pub token_count: usize,
    pub anchor_count: usize,
}

impl EpisodeSummary {
    pub fn from_segments(
        episode_id: &str,
        channel_id: &str,
        segments: &[Segment],
        threshold: f64,
    ) -> Result<Self> {
        let duration = match (segments.first(), segments.last()) {
            (Some(a), Some(b)) => b.end - a.start,
            _ => 0.0,
        };
        Ok(EpisodeSummary {
            episode_id: episode_id.to_string(),
            channel_id: channel_id.to_string(),
            duration,
            token_count: segments
                .iter()
                .map(|s| s.text.split_whitespace().count())
                .sum(),
            anchor_count: find_anchors(segments, threshold)?.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub channel_id: String,
    pub episodes: usize,
    pub mean_duration_min: f64,
    pub sd_duration_min: f64,
    pub mean_tokens: f64,
    pub sd_tokens: f64,
    pub toxic_episodes: usize,
    pub toxic_episode_pct: f64,
    pub chains: usize,
    pub chain_share_pct: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    /// Sorted by episode count (descending), then channel id.
    pub channels: Vec<ChannelStats>,
    pub total_episodes: usize,
    pub total_chains: usize,
}

fn mean_sd(values: &mut [f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let mut sq: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    sq.sort_by(f64::total_cmp);
    (mean, (sq.iter().sum::<f64>() / (n - 1.0)).sqrt())
}

/// Per-channel episode counts, toxic-episode share and chain share.
///
/// An episode is toxic when it has at least one anchor; every anchor yields
/// one chain.
pub fn corpus_stats(episodes: &[EpisodeSummary]) -> CorpusStats {
    let mut by_channel: BTreeMap<&str, Vec<&EpisodeSummary>> = BTreeMap::new();
    for e in episodes {
        by_channel.entry(e.channel_id.as_str()).or_default().push(e);
    }
    let total_chains: usize = episodes.iter().map(|e| e.anchor_count).sum();
    let mut channels: Vec<ChannelStats> = by_channel
        .into_iter()
        .map(|(channel, eps)| {
            let toxic = eps.iter().filter(|e| e.anchor_count > 0).count();
            let chains: usize = eps.iter().map(|e| e.anchor_count).sum();
            let (mean_duration_min, sd_duration_min) =
                mean_sd(&mut eps.iter().map(|e| e.duration / 60.0).collect::<Vec<_>>());
            let (mean_tokens, sd_tokens) =
                mean_sd(&mut eps.iter().map(|e| e.token_count as f64).collect::<Vec<_>>());
            ChannelStats {
                channel_id: channel.to_string(),
                episodes: eps.len(),
                mean_duration_min,
                sd_duration_min,
                mean_tokens,
                sd_tokens,
                toxic_episodes: toxic,
                toxic_episode_pct: 100.0 * toxic as f64 / eps.len() as f64,
                chains,
                chain_share_pct: if total_chains == 0 {
                    0.0
                } else {
                    100.0 * chains as f64 / total_chains as f64
                },
            }
        })
        .collect();
    channels.sort_by(|a, b| {
        b.episodes
            .cmp(&a.episodes)
            .then_with(|| a.channel_id.cmp(&b.channel_id))
    });
    CorpusStats {
        channels,
        total_episodes: episodes.len(),
        total_chains,
    }
}
