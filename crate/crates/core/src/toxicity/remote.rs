// Client for a Perspective-style comment analysis service.
//
// Request body (POST, API key as the `key` query parameter):
//   {"comment": {"text": ...}, "requestedAttributes": {"TOXICITY": {}},
//    "languages": [...], "doNotStore": bool}
// The score is read from attributeScores.TOXICITY.summaryScore.value.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::rate_limit::RateLimiter;
use super::{score_batch, ScoreCache, ScoreError, Scorer, ToxicityScore};
use crate::error::{Error, Result};

pub const API_KEY_ENV: &str = "PERSPECTIVE_API_KEY";
pub const ENDPOINT_ENV: &str = "PERSPECTIVE_ENDPOINT";
pub const DEFAULT_ENDPOINT: &str =
    "https://commentanalyzer.googleapis.com/v1alpha1/comments:analyze";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    pub endpoint: String,
    /// Never serialized into run metadata.
    #[serde(skip)]
    pub api_key: Option<String>,
    /// Cache identity; bump it when the service model changes.
    pub scorer_id: String,
    pub qps: f64,
    pub max_retries: u32,
    pub initial_backoff_ms: u64,
    pub max_backoff_ms: u64,
    pub max_in_flight: usize,
    pub timeout_secs: u64,
    pub languages: Vec<String>,
    pub do_not_store: bool,
    pub token_limit: usize,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            endpoint: DEFAULT_ENDPOINT.to_string(),
            api_key: None,
            scorer_id: "perspective-toxicity".to_string(),
            qps: 1.0,
            max_retries: 5,
            initial_backoff_ms: 1000,
            max_backoff_ms: 32_000,
            max_in_flight: 4,
            timeout_secs: 30,
            languages: vec!["en".to_string()],
            do_not_store: true,
            token_limit: 3000,
        }
    }
}

impl RemoteConfig {
    /// Fills the API key, and the endpoint when set, from the environment.
    pub fn with_env(mut self) -> Self {
        if let Ok(key) = std::env::var(API_KEY_ENV) {
            if !key.is_empty() {
                self.api_key = Some(key);
            }
        }
        if let Ok(endpoint) = std::env::var(ENDPOINT_ENV) {
            if !endpoint.is_empty() {
                self.endpoint = endpoint;
            }
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.qps > 0.0) {
            return Err(Error::config(format!("qps must be positive, got {}", self.qps)));
        }
        if self.max_in_flight == 0 {
            return Err(Error::config("max_in_flight must be at least 1"));
        }
        if self.token_limit == 0 {
            return Err(Error::config("token_limit must be at least 1"));
        }
        if self.endpoint.is_empty() {
            return Err(Error::config("endpoint is empty"));
        }
        Ok(())
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct AnalyzeRequest<'a> {
    comment: Comment<'a>,
    requested_attributes: HashMap<&'static str, Empty>,
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    languages: &'a [String],
    do_not_store: bool,
}

#[derive(Serialize)]
struct Comment<'a> {
    text: &'a str,
}

#[derive(Serialize)]
struct Empty {}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct AnalyzeResponse {
    attribute_scores: HashMap<String, AttributeScore>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct AttributeScore {
    summary_score: SummaryScore,
}

#[derive(Deserialize)]
struct SummaryScore {
    value: f64,
}

enum Attempt {
    Done(f64),
    Retry(String),
    Fail(ScoreError),
}

/// Blocking HTTP scorer with request pacing, bounded concurrency and
/// exponential backoff on rate-limit and server errors.
pub struct RemoteScorer {
    config: RemoteConfig,
    agent: ureq::Agent,
    limiter: RateLimiter,
    requests: AtomicUsize,
}

impl std::fmt::Debug for RemoteScorer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteScorer")
            .field("endpoint", &self.config.endpoint)
            .field("scorer_id", &self.config.scorer_id)
            .field("qps", &self.config.qps)
            .finish_non_exhaustive()
    }
}

impl RemoteScorer {
    pub fn new(config: RemoteConfig) -> Result<Self> {
        config.validate()?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .into();
        Ok(RemoteScorer {
            limiter: RateLimiter::new(config.qps),
            agent,
            requests: AtomicUsize::new(0),
            config,
        })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    /// HTTP requests issued so far, retries included.
    pub fn requests_sent(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    fn backoff(&self, retry: u32) -> Duration {
        let ms = self
            .config
            .initial_backoff_ms
            .saturating_mul(1u64 << retry.min(20))
            .min(self.config.max_backoff_ms);
        Duration::from_millis(ms)
    }

    fn attempt(&self, text: &str) -> Attempt {
        let body = AnalyzeRequest {
            comment: Comment { text },
            requested_attributes: HashMap::from([("TOXICITY", Empty {})]),
            languages: &self.config.languages,
            do_not_store: self.config.do_not_store,
        };
        let mut req = self.agent.post(&self.config.endpoint);
        if let Some(key) = &self.config.api_key {
            req = req.query("key", key);
        }
        self.limiter.acquire();
        self.requests.fetch_add(1, Ordering::SeqCst);
        let mut resp = match req.send_json(&body) {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = resp.status().as_u16();
        match status {
            200..=299 => match resp.body_mut().read_json::<AnalyzeResponse>() {
                Ok(parsed) => match parsed.attribute_scores.get("TOXICITY") {
                    Some(a) => Attempt::Done(a.summary_score.value),
                    None => Attempt::Fail(ScoreError::InvalidResponse(
                        "no TOXICITY attribute in response".into(),
                    )),
                },
                Err(e) => Attempt::Fail(ScoreError::InvalidResponse(e.to_string())),
            },
            429 | 500..=599 => Attempt::Retry(format!("status {status}")),
            _ => {
                let message = resp.body_mut().read_to_string().unwrap_or_default();
                Attempt::Fail(ScoreError::Permanent { status, message })
            }
        }
    }
}

impl Scorer for RemoteScorer {
    fn id(&self) -> &str {
        &self.config.scorer_id
    }

    fn token_limit(&self) -> Option<usize> {
        Some(self.config.token_limit)
    }

    fn score_raw(&self, text: &str) -> std::result::Result<f64, ScoreError> {
        let mut retries = 0;
        loop {
            match self.attempt(text) {
                Attempt::Done(v) => return Ok(v),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(message) => {
                    if retries >= self.config.max_retries {
                        return Err(ScoreError::Transient {
                            attempts: retries + 1,
                            message,
                        });
                    }
                    log::debug!("retrying after {message} (retry {})", retries + 1);
                    std::thread::sleep(self.backoff(retries));
                    retries += 1;
                }
            }
        }
    }

    /// Up to `max_in_flight` requests run concurrently; all of them share
    /// the rate limiter, so the qps bound holds for the batch as a whole.
    fn score_raw_batch(&self, texts: &[&str]) -> Vec<std::result::Result<f64, ScoreError>> {
        let next = AtomicUsize::new(0);
        let results: Mutex<Vec<Option<std::result::Result<f64, ScoreError>>>> =
            Mutex::new(vec![None; texts.len()]);
        let workers = self.config.max_in_flight.min(texts.len());
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= texts.len() {
                        break;
                    }
                    let r = self.score_raw(texts[i]);
                    results.lock().expect("results lock poisoned")[i] = Some(r);
                });
            }
        });
        results
            .into_inner()
            .expect("results lock poisoned")
            .into_iter()
            .map(|r| r.expect("every index scored"))
            .collect()
    }
}

/// Scores `texts` against the remote service, in input order, through `cache`.
pub fn remote_score_batch(
    scorer: &RemoteScorer,
    texts: &[&str],
    cache: &ScoreCache,
) -> Vec<std::result::Result<ToxicityScore, ScoreError>> {
    score_batch(texts, scorer, cache)
}
