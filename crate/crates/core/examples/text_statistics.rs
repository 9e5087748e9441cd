//! Lexical measures of single texts and their averages by chain position.

use toxchain::textstats::{
    aggregate_by_position, keyword_frequencies, tokenize, ttr, unigram_entropy, unigram_perplexity,
    Measure, SegmentStats,
};

fn main() -> toxchain::Result<()> {
    let text = "the tax plan is a plan about tax";
    let tokens = tokenize(text);
    println!(
        "ttr {:.3}  entropy {:.3} bits  perplexity {:.3}",
        ttr(&tokens)?,
        unigram_entropy(&tokens)?,
        unigram_perplexity(&tokens)?
    );

    let chains = [
        ["we talked about the border", "you are a liar and a fraud", "let us move to the weather"],
        ["the senate vote is tomorrow", "what an idiot, a complete idiot", "back to the phones now"],
    ];
    let mut stats = Vec::new();
    let mut placed = Vec::new();
    for (c, texts) in chains.iter().enumerate() {
        for (i, text) in texts.iter().enumerate() {
            let position = i as i32 - 1;
            stats.push(SegmentStats::compute(&format!("c{c}"), position, 60.0, text));
            placed.push((position, *text));
        }
    }
    for agg in aggregate_by_position(&stats, Measure::Ttr) {
        println!(
            "position {:>2}: ttr {:.3} [{:.3}, {:.3}] over {}",
            agg.position, agg.mean, agg.ci_low, agg.ci_high, agg.n
        );
    }
    for k in keyword_frequencies(placed, 3) {
        println!("{:<9} {} ({})", k.window.name(), k.token, k.count);
    }
    Ok(())
}
