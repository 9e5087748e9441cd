//! Lexical statistics over chain segments and their per-position aggregates.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::chains::ConversationChain;
use crate::error::{Error, Result};

/// z-value of the two-sided 95% normal interval.
pub const Z_95: f64 = 1.96;

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Lowercased maximal runs of letters and digits, keeping apostrophes that sit
/// between two alphanumeric characters ("don't"). Everything else separates.
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else if is_apostrophe(c)
            && !current.is_empty()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric())
        {
            current.push('\'');
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

fn counts<S: AsRef<str>>(tokens: &[S]) -> HashMap<&str, usize> {
    let mut map = HashMap::new();
    for t in tokens {
        *map.entry(t.as_ref()).or_insert(0) += 1;
    }
    map
}

/// Type-token ratio: distinct tokens over total tokens.
pub fn ttr<S: AsRef<str>>(tokens: &[S]) -> Result<f64> {
    if tokens.is_empty() {
        return Err(Error::UndefinedStatistic("type-token ratio of empty text"));
    }
    Ok(counts(tokens).len() as f64 / tokens.len() as f64)
}

/// Shannon entropy in bits of the maximum-likelihood unigram distribution.
pub fn unigram_entropy<S: AsRef<str>>(tokens: &[S]) -> Result<f64> {
    if tokens.is_empty() {
        return Err(Error::UndefinedStatistic("entropy of empty text"));
    }
    let n = tokens.len() as f64;
    let mut freqs: Vec<usize> = counts(tokens).into_values().collect();
    freqs.sort_unstable();
    let h: f64 = freqs
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    Ok(h.max(0.0))
}

/// Per-token perplexity `Pr(w1..wn)^(-1/n)` under the text's own unigram model.
///
/// Computed from the token log-likelihood, independently of
/// [`unigram_entropy`]; the two agree through `perplexity = 2^entropy`.
pub fn unigram_perplexity<S: AsRef<str>>(tokens: &[S]) -> Result<f64> {
    Ok((-log2_likelihood_per_token(tokens)?).exp2())
}

/// `log2` of the unnormalized sequence perplexity `Pr(w1..wn)^-1`.
///
/// The raw value overflows `f64` for texts of a few hundred tokens, so it is
/// reported in log space.
pub fn unigram_perplexity_unnormalized_log2<S: AsRef<str>>(tokens: &[S]) -> Result<f64> {
    Ok(-log2_likelihood_per_token(tokens)? * tokens.len() as f64)
}

fn log2_likelihood_per_token<S: AsRef<str>>(tokens: &[S]) -> Result<f64> {
    if tokens.is_empty() {
        return Err(Error::UndefinedStatistic("perplexity of empty text"));
    }
    let n = tokens.len() as f64;
    let freq = counts(tokens);
    let mut logs: Vec<f64> = tokens
        .iter()
        .map(|t| (freq[t.as_ref()] as f64 / n).log2())
        .collect();
    logs.sort_by(f64::total_cmp);
    Ok(logs.iter().sum::<f64>() / n)
}

/// Measures for one segment of a chain, at its offset from the anchor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentStats {
    pub chain_id: String,
    pub position: i32,
    pub duration: f64,
    pub token_count: usize,
    pub ttr: Option<f64>,
    pub entropy: Option<f64>,
    pub perplexity: Option<f64>,
    pub perplexity_unnormalized_log2: Option<f64>,
}

impl SegmentStats {
    pub fn compute(chain_id: &str, position: i32, duration: f64, text: &str) -> Self {
        let tokens = tokenize(text);
        SegmentStats {
            chain_id: chain_id.to_string(),
            position,
            duration,
            token_count: tokens.len(),
            ttr: ttr(&tokens).ok(),
            entropy: unigram_entropy(&tokens).ok(),
            perplexity: unigram_perplexity(&tokens).ok(),
            perplexity_unnormalized_log2: unigram_perplexity_unnormalized_log2(&tokens).ok(),
        }
    }

    pub fn get(&self, measure: Measure) -> Option<f64> {
        match measure {
            Measure::Duration => Some(self.duration),
            Measure::TokenCount => Some(self.token_count as f64),
            Measure::Ttr => self.ttr,
            Measure::Entropy => self.entropy,
            Measure::Perplexity => self.perplexity,
            Measure::PerplexityUnnormalizedLog2 => self.perplexity_unnormalized_log2,
        }
    }
}

/// Stats for every segment of a chain, positioned relative to the anchor.
pub fn chain_segment_stats(chain: &ConversationChain) -> Vec<SegmentStats> {
    chain
        .segments
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let position = i as i32 - chain.anchor_index as i32;
            SegmentStats::compute(&chain.chain_id, position, s.duration(), &s.text)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Duration,
    TokenCount,
    Ttr,
    Entropy,
    Perplexity,
    PerplexityUnnormalizedLog2,
}

impl Measure {
    pub const ALL: [Measure; 6] = [
        Measure::Duration,
        Measure::TokenCount,
        Measure::Ttr,
        Measure::Entropy,
        Measure::Perplexity,
        Measure::PerplexityUnnormalizedLog2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Duration => "duration",
            Measure::TokenCount => "token_count",
            Measure::Ttr => "ttr",
            Measure::Entropy => "entropy",
            Measure::Perplexity => "perplexity",
            Measure::PerplexityUnnormalizedLog2 => "perplexity_unnormalized_log2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionAggregate {
    pub position: i32,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
}

/// Mean and normal-approximation 95% interval of `measure` at each chain
/// position. Positions with fewer than two observations are skipped.
pub fn aggregate_by_position(stats: &[SegmentStats], measure: Measure) -> Vec<PositionAggregate> {
    let mut by_pos: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for s in stats {
        if let Some(v) = s.get(measure) {
            by_pos.entry(s.position).or_default().push(v);
        }
    }
    let mut out = Vec::with_capacity(by_pos.len());
    for (position, mut values) in by_pos {
        if values.len() < 2 {
            log::warn!(
                "{}: position {position} has {} observation(s), omitted",
                measure.name(),
                values.len()
            );
            continue;
        }
        // Summing in sorted order keeps the result independent of input order.
        values.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let mut sq: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
        sq.sort_by(f64::total_cmp);
        let sd = (sq.iter().sum::<f64>() / (n - 1.0)).sqrt();
        let half = Z_95 * sd / n.sqrt();
        out.push(PositionAggregate {
            position,
            mean,
            ci_low: mean - half,
            ci_high: mean + half,
            n: values.len(),
        });
    }
    out
}

/// Which side of the anchor a segment sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Window {
    Preceding,
    Anchor,
    Following,
}

impl Window {
    pub fn of(position: i32) -> Self {
        match position {
            p if p < 0 => Window::Preceding,
            0 => Window::Anchor,
            _ => Window::Following,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Window::Preceding => "preceding",
            Window::Anchor => "anchor",
            Window::Following => "following",
        }
    }
}

const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are",
    "aren't", "as", "at", "be", "because", "been", "before", "being", "below", "between", "both",
    "but", "by", "can", "can't", "cannot", "could", "couldn't", "did", "didn't", "do", "does",
    "doesn't", "doing", "don't", "down", "during", "each", "few", "for", "from", "further", "had",
    "hadn't", "has", "hasn't", "have", "haven't", "having", "he", "he'd", "he'll", "he's", "her",
    "here", "here's", "hers", "herself", "him", "himself", "his", "how", "how's", "i", "i'd",
    "i'll", "i'm", "i've", "if", "in", "into", "is", "isn't", "it", "it's", "its", "itself",
    "let's", "me", "more", "most", "mustn't", "my", "myself", "no", "nor", "not", "of", "off",
    "on", "once", "only", "or", "other", "ought", "our", "ours", "ourselves", "out", "over", "own",
    "same", "shan't", "she", "she'd", "she'll", "she's", "should", "shouldn't", "so", "some",
    "such", "than", "that", "that's", "the", "their", "theirs", "them", "themselves", "then",
    "there", "there's", "these", "they", "they'd", "they'll", "they're", "they've", "this",
    "those", "through", "to", "too", "under", "until", "up", "very", "was", "wasn't", "we",
    "we'd", "we'll", "we're", "we've", "were", "weren't", "what", "what's", "when", "when's",
    "where", "where's", "which", "while", "who", "who's", "whom", "why", "why's", "will", "with",
    "won't", "would", "wouldn't", "you", "you'd", "you'll", "you're", "you've", "your", "yours",
    "yourself", "yourselves",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordCount {
    pub window: Window,
    pub token: String,
    pub count: usize,
}

/// Token frequencies per window with stopwords and non-English-alphabet
/// tokens removed. At most `top_n` tokens per window, most frequent first,
/// ties alphabetical.
pub fn keyword_frequencies<'a>(
    segments: impl IntoIterator<Item = (i32, &'a str)>,
    top_n: usize,
) -> Vec<KeywordCount> {
    let mut freq: BTreeMap<Window, HashMap<String, usize>> = BTreeMap::new();
    for (position, text) in segments {
        let entry = freq.entry(Window::of(position)).or_default();
        for tok in tokenize(text) {
            let alphabetic = tok.chars().all(|c| c.is_ascii_alphabetic() || c == '\'');
            if alphabetic && !is_stopword(&tok) {
                *entry.entry(tok).or_insert(0) += 1;
            }
        }
    }
    let mut out = Vec::new();
    for (window, map) in freq {
        let mut items: Vec<(String, usize)> = map.into_iter().collect();
        items.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        out.extend(items.into_iter().take(top_n).map(|(token, count)| KeywordCount {
            window,
            token,
            count,
        }));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<&str> {
        s.split(' ').collect()
    }

    #[test]
    fn tokenizer_rules() {
        assert_eq!(tokenize("Don't stop!"), vec!["don't", "stop"]);
        assert_eq!(tokenize("A a A"), vec!["a", "a", "a"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("'quoted' rock'n'roll 2024."), vec!["quoted", "rock'n'roll", "2024"]);
        assert_eq!(tokenize("it\u{2019}s"), vec!["it's"]);
    }

    #[test]
    fn stopword_list_is_sorted() {
        let mut sorted = STOPWORDS.to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, STOPWORDS);
    }

    #[test]
    fn ttr_fixtures() {
        assert_eq!(ttr(&toks("a b c d")).unwrap(), 1.0);
        assert_eq!(ttr(&toks("a a a a")).unwrap(), 0.25);
        assert_eq!(ttr(&toks("a b a b")).unwrap(), 0.5);
        assert!(matches!(ttr::<&str>(&[]), Err(Error::UndefinedStatistic(_))));
    }

    #[test]
    fn entropy_fixtures() {
        assert_eq!(unigram_entropy(&toks("a a a")).unwrap(), 0.0);
        assert_eq!(unigram_entropy(&toks("a b a b")).unwrap(), 1.0);
        assert_eq!(unigram_entropy(&toks("a a b c")).unwrap(), 1.5);
        assert!(unigram_entropy::<&str>(&[]).is_err());
    }

    #[test]
    fn perplexity_fixtures() {
        assert_eq!(unigram_perplexity(&toks("a a a")).unwrap(), 1.0);
        assert_eq!(unigram_perplexity(&toks("a b a b")).unwrap(), 2.0);
        assert_eq!(unigram_perplexity(&toks("a b c d")).unwrap(), 4.0);
        assert!(unigram_perplexity::<&str>(&[]).is_err());
        // (0.5^4)^-1 = 16 -> log2 = 4
        assert_eq!(unigram_perplexity_unnormalized_log2(&toks("a b a b")).unwrap(), 4.0);
    }

    fn obs(position: i32, value: f64, chain: &str) -> SegmentStats {
        SegmentStats {
            chain_id: chain.into(),
            position,
            duration: value,
            token_count: 0,
            ttr: None,
            entropy: None,
            perplexity: None,
            perplexity_unnormalized_log2: None,
        }
    }

    #[test]
    fn aggregate_zero_variance_and_formula() {
        let stats = vec![obs(0, 5.0, "a"), obs(0, 5.0, "b"), obs(1, 1.0, "a"), obs(1, 3.0, "b")];
        let agg = aggregate_by_position(&stats, Measure::Duration);
        assert_eq!(agg.len(), 2);
        assert_eq!((agg[0].ci_low, agg[0].mean, agg[0].ci_high), (5.0, 5.0, 5.0));
        // s = sqrt(2), n = 2 -> half width 1.96
        assert_eq!(agg[1].mean, 2.0);
        assert!((agg[1].ci_high - 2.0 - 1.96).abs() < 1e-12);
        assert!((2.0 - agg[1].ci_low - 1.96).abs() < 1e-12);
        assert!(aggregate_by_position(&[], Measure::Duration).is_empty());
    }

    #[test]
    fn aggregate_skips_sparse_positions_and_missing_values() {
        let mut stats = vec![obs(-3, 1.0, "a"), obs(0, 1.0, "a"), obs(0, 2.0, "b")];
        let agg = aggregate_by_position(&stats, Measure::Duration);
        assert_eq!(agg.iter().map(|a| a.position).collect::<Vec<_>>(), vec![0]);
        stats[1].ttr = Some(0.5);
        assert!(aggregate_by_position(&stats, Measure::Ttr).is_empty());
    }

    #[test]
    fn keywords_per_window() {
        let kws = keyword_frequencies(
            vec![(-2, "the people want more"), (-1, "people know"), (0, "you idiot idiot"), (1, "yeah 2024 people")],
            10,
        );
        let find = |w: Window| -> Vec<(String, usize)> {
            kws.iter().filter(|k| k.window == w).map(|k| (k.token.clone(), k.count)).collect()
        };
        assert_eq!(
            find(Window::Preceding),
            vec![("people".into(), 2), ("know".into(), 1), ("want".into(), 1)]
        );
        assert_eq!(find(Window::Anchor), vec![("idiot".into(), 2)]);
        assert_eq!(find(Window::Following), vec![("people".into(), 1), ("yeah".into(), 1)]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_tokens() -> impl Strategy<Value = Vec<String>> {
            prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e", "f", "g"]), 1..60)
                .prop_map(|v| v.into_iter().map(String::from).collect())
        }

        proptest! {
            #[test]
            fn perplexity_matches_two_to_entropy(tokens in arb_tokens()) {
                let h = unigram_entropy(&tokens).unwrap();
                let p = unigram_perplexity(&tokens).unwrap();
                prop_assert!((p - h.exp2()).abs() <= 1e-9 * p);
            }

            #[test]
            fn bounds(tokens in arb_tokens()) {
                let types = counts(&tokens).len() as f64;
                let h = unigram_entropy(&tokens).unwrap();
                let p = unigram_perplexity(&tokens).unwrap();
                let r = ttr(&tokens).unwrap();
                prop_assert!(h <= types.log2() + 1e-12);
                prop_assert!(p >= 1.0 - 1e-12 && p <= types + 1e-9);
                prop_assert!(r > 0.0 && r <= 1.0);
            }

            #[test]
            fn permutation_invariant(tokens in arb_tokens(), seed in any::<u64>()) {
                use rand::seq::SliceRandom;
                use rand::SeedableRng;
                let mut shuffled = tokens.clone();
                shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
                prop_assert_eq!(ttr(&tokens).unwrap(), ttr(&shuffled).unwrap());
                prop_assert_eq!(unigram_entropy(&tokens).unwrap(), unigram_entropy(&shuffled).unwrap());
                prop_assert_eq!(unigram_perplexity(&tokens).unwrap(), unigram_perplexity(&shuffled).unwrap());
            }

            #[test]
            fn aggregate_order_invariant(values in prop::collection::vec((-3i32..3, 0.0f64..100.0), 0..40), seed in any::<u64>()) {
                use rand::seq::SliceRandom;
                use rand::SeedableRng;
                let stats: Vec<SegmentStats> = values
                    .iter()
                    .enumerate()
                    .map(|(i, &(p, v))| obs(p, v, &i.to_string()))
                    .collect();
                let mut shuffled = stats.clone();
                shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
                let a = aggregate_by_position(&stats, Measure::Duration);
                let b = aggregate_by_position(&shuffled, Measure::Duration);
                prop_assert_eq!(&a, &b);
                for agg in &a {
                    prop_assert!(agg.ci_low <= agg.mean && agg.mean <= agg.ci_high);
                }
            }
        }
    }
}
