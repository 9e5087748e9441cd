//! Offline toxicity scoring with a weighted word list, backed by a cache
//! so repeated texts are scored once.

use toxchain::toxicity::{score_batch, Lexicon, LexiconScorer, ScoreCache};

fn main() -> toxchain::Result<()> {
    let lexicon = Lexicon::new([("idiot", 0.8), ("stupid", 0.6), ("liar", 0.4)])?;
    let scorer = LexiconScorer::new(lexicon);
    let cache = ScoreCache::in_memory();

    let texts = [
        "thanks for joining us today",
        "that is a stupid plan",
        "you stupid liar",
        "what an idiot, a stupid idiot",
        "that is a stupid plan",
    ];
    for (text, score) in texts.iter().zip(score_batch(&texts, &scorer, &cache)) {
        let score = score.expect("lexicon scoring does not fail");
        println!("{:.3}  {text}", score.value);
    }
    println!("{} distinct texts cached", cache.len());
    Ok(())
}
