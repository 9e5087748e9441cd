//! Parse one bundled transcript, resolve overlapping turns and cut the
//! result into scorer-sized chunks and minute-long segments.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use toxchain::ingest::{normalize_overlaps, parse_transcript};
use toxchain::segmentation::{segment_turns, DEFAULT_CHUNK_DURATION, DEFAULT_MAX_CHUNKS_PER_SEGMENT};

fn main() -> toxchain::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/corpus/ep2.jsonl");
    let episode = parse_transcript(BufReader::new(File::open(path)?), "ep2", "channel-a")?;
    let (episode, overlaps) = normalize_overlaps(episode);
    println!(
        "{} turns after overlap handling ({} trimmed, {} dropped)",
        episode.turns.len(),
        overlaps.trimmed,
        overlaps.dropped
    );

    let segments = segment_turns(&episode.turns, DEFAULT_CHUNK_DURATION, DEFAULT_MAX_CHUNKS_PER_SEGMENT)?;
    for s in &segments {
        println!(
            "segment {:>2} {:<6} {:>6.1}-{:<6.1} {} chunk(s): {:.40}",
            s.segment_index,
            s.speaker_id,
            s.start,
            s.end,
            s.chunks.len(),
            s.text
        );
    }
    Ok(())
}
