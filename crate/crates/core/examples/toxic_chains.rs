//! Builds chains around toxic anchors in a synthetic episode and shows
//! how chains are clipped at episode edges.

use toxchain::chains::{episode_chains, DEFAULT_ANCHOR_THRESHOLD, DEFAULT_WINDOW};
use toxchain::ingest::SpeakerTurn;
use toxchain::segmentation::{aggregate_segment_toxicity, segment_turns};

fn main() -> toxchain::Result<()> {
    let turns = (0..40)
        .map(|i| {
            let speaker = if i % 2 == 0 { "HOST" } else { "CALLER" };
            SpeakerTurn::new(speaker, i as f64 * 30.0, i as f64 * 30.0 + 30.0, format!("turn {i}"))
        })
        .collect::<toxchain::Result<Vec<_>>>()?;
    let mut segments = segment_turns(&turns, 17.0, 4)?;
    for s in &mut segments {
        let score = match s.segment_index {
            4 => 0.91,
            20 => 0.75,
            21 => 0.3,
            _ => 0.05,
        };
        for c in &mut s.chunks {
            c.toxicity = Some(score);
        }
        aggregate_segment_toxicity(s)?;
    }

    let chains = episode_chains(&segments, DEFAULT_ANCHOR_THRESHOLD, DEFAULT_WINDOW, "demo", "channel")?;
    for chain in &chains {
        let series: Vec<String> = chain
            .toxicity_series()
            .iter()
            .map(|t| t.map_or("-".into(), |v| format!("{v:.2}")))
            .collect();
        println!(
            "{}: {} segments, anchor at {}, clipped {} before / {} after",
            chain.chain_id,
            chain.segments.len(),
            chain.anchor_index,
            chain.truncated_head,
            chain.truncated_tail
        );
        println!("  {}", series.join(" "));
    }
    Ok(())
}
