//! Scores a few texts with the remote toxicity API. Needs
//! `PERSPECTIVE_API_KEY`; `PERSPECTIVE_ENDPOINT` points it elsewhere.
//! Without a key the example explains itself and exits.

use toxchain::toxicity::{score_batch, RemoteConfig, RemoteScorer, ScoreCache, API_KEY_ENV};

fn main() -> toxchain::Result<()> {
    let config = RemoteConfig {
        qps: 1.0,
        ..RemoteConfig::default()
    }
    .with_env();
    if config.api_key.is_none() {
        println!("set {API_KEY_ENV} to run this example against the live API");
        return Ok(());
    }
    let scorer = RemoteScorer::new(config)?;
    let dir = std::env::temp_dir().join("toxchain-example");
    std::fs::create_dir_all(&dir)?;
    let cache = ScoreCache::open(dir.join("score_cache.jsonl"))?;

    let texts = ["have a wonderful day", "you are an idiot"];
    for (text, result) in texts.iter().zip(score_batch(&texts, &scorer, &cache)) {
        match result {
            Ok(score) => println!("{:.3}  {text}", score.value),
            Err(e) => println!("error  {text}: {e}"),
        }
    }
    cache.flush()?;
    println!("{} requests sent; cache at {}", scorer.requests_sent(), dir.display());
    Ok(())
}
