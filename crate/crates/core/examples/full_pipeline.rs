//! Every pipeline stage over the bundled corpus, writing into a temporary
//! directory, then the rendered markdown report.

use std::path::Path;

use toxchain::pipeline::{self, PipelineConfig};

fn main() -> toxchain::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let out = std::env::temp_dir().join("toxchain-full-pipeline");
    let mut config = PipelineConfig::load(&fixtures.join("pipeline.toml"))?;
    config.out_dir = out.clone();
    config.scoring.cache = Some(out.join("score_cache.jsonl"));

    let ingest = pipeline::cmd_ingest(&config)?;
    println!("{} episodes, {} segments", ingest.episodes, ingest.segments);
    let score = pipeline::cmd_score(&config)?;
    println!("{} chunks scored ({} new)", score.chunks, score.new_scores);
    let chains = pipeline::cmd_chains(&config)?;
    println!("{} chains", chains.chains);
    pipeline::cmd_stats(&config)?;
    let cpd = pipeline::cmd_cpd(&config)?;
    println!("{} detections", cpd.detections);
    pipeline::cmd_eval(&config)?;
    let report = pipeline::cmd_report(&config)?;
    println!("\n{}", std::fs::read_to_string(report)?);
    Ok(())
}
