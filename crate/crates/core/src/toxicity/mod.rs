//! Toxicity scoring of chunk texts.
//!
//! Two scorers implement [`Scorer`]: [`RemoteScorer`], a client for a
//! Perspective-style HTTP service, and [`LexiconScorer`], a deterministic
//! offline substitute. Both go through a [`ScoreCache`] keyed by scorer id
//! and a hash of the exact text, so a text is sent to a scorer at most once.

mod cache;
mod lexicon;
mod rate_limit;
mod remote;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use cache::{CacheRecord, ScoreCache};
pub use lexicon::{lexicon_score, Lexicon, LexiconScorer};
pub use rate_limit::RateLimiter;
pub use remote::{
    remote_score_batch, RemoteConfig, RemoteScorer, API_KEY_ENV, DEFAULT_ENDPOINT, ENDPOINT_ENV,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("text is empty")]
    EmptyText,
    #[error("text has {tokens} tokens, over the scorer limit of {limit}; split it first")]
    MustSplit { tokens: usize, limit: usize },
    #[error("scorer rejected the request (status {status}): {message}")]
    Permanent { status: u16, message: String },
    #[error("scorer unavailable after {attempts} attempt(s): {message}")]
    Transient { attempts: u32, message: String },
    #[error("invalid scorer response: {0}")]
    InvalidResponse(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToxicityScore {
    pub value: f64,
    pub scorer_id: String,
    pub text_hash: String,
}

/// Hex SHA-256 of the exact text.
pub fn text_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// A toxicity model. Implementations score uncached text; preconditions,
/// caching and range checks live in [`score_text`] and [`score_batch`].
pub trait Scorer: Send + Sync {
    /// Identity used in cache keys. Must change whenever the scores would.
    fn id(&self) -> &str;

    /// Maximum whitespace-token count accepted per request, if any.
    fn token_limit(&self) -> Option<usize> {
        None
    }

    fn score_raw(&self, text: &str) -> Result<f64, ScoreError>;

    fn score_raw_batch(&self, texts: &[&str]) -> Vec<Result<f64, ScoreError>> {
        texts.iter().map(|t| self.score_raw(t)).collect()
    }
}

fn check_text(scorer: &dyn Scorer, text: &str) -> Result<(), ScoreError> {
    if text.trim().is_empty() {
        return Err(ScoreError::EmptyText);
    }
    if let Some(limit) = scorer.token_limit() {
        let tokens = text.split_whitespace().count();
        if tokens > limit {
            return Err(ScoreError::MustSplit { tokens, limit });
        }
    }
    Ok(())
}

fn check_value(value: f64) -> Result<f64, ScoreError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(ScoreError::InvalidResponse(format!("score {value} outside [0, 1]")))
    }
}

/// Scores one text, consulting the cache before the scorer.
pub fn score_text(
    text: &str,
    scorer: &dyn Scorer,
    cache: &ScoreCache,
) -> Result<ToxicityScore, ScoreError> {
    score_batch(&[text], scorer, cache).pop().expect("one result per text")
}

/// Scores texts in input order. Cached and duplicate texts are not re-sent;
/// failures are reported per item and successful scores are cached.
pub fn score_batch(
    texts: &[&str],
    scorer: &dyn Scorer,
    cache: &ScoreCache,
) -> Vec<Result<ToxicityScore, ScoreError>> {
    let id = scorer.id();
    let hashes: Vec<String> = texts.iter().map(|t| text_hash(t)).collect();
    let mut results: Vec<Option<Result<ToxicityScore, ScoreError>>> = vec![None; texts.len()];

    let mut pending: Vec<(usize, &str)> = Vec::new();
    let mut first_by_hash = std::collections::HashMap::new();
    for (i, (&text, hash)) in texts.iter().zip(&hashes).enumerate() {
        if let Err(e) = check_text(scorer, text) {
            results[i] = Some(Err(e));
        } else if let Some(value) = cache.get(id, hash) {
            results[i] = Some(Ok(ToxicityScore {
                value,
                scorer_id: id.to_string(),
                text_hash: hash.clone(),
            }));
        } else if !first_by_hash.contains_key(hash.as_str()) {
            first_by_hash.insert(hash.as_str(), i);
            pending.push((i, text));
        }
    }

    let batch: Vec<&str> = pending.iter().map(|&(_, t)| t).collect();
    let raw = scorer.score_raw_batch(&batch);
    for (&(i, _), outcome) in pending.iter().zip(raw) {
        let outcome = outcome.and_then(check_value).map(|value| {
            cache.insert(id, &hashes[i], value);
            ToxicityScore {
                value,
                scorer_id: id.to_string(),
                text_hash: hashes[i].clone(),
            }
        });
        results[i] = Some(outcome);
    }

    // Duplicates take the outcome of their first occurrence.
    for i in 0..texts.len() {
        if results[i].is_none() {
            let first = first_by_hash[hashes[i].as_str()];
            results[i] = results[first].clone();
        }
    }
    results.into_iter().map(|r| r.expect("filled")).collect()
}
