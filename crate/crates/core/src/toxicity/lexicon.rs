use std::collections::BTreeMap;
use std::io::BufRead;

use sha2::{Digest, Sha256};

use super::{ScoreError, Scorer};
use crate::error::{Error, Result};
use crate::textstats::tokenize;

/// Term weights in `(0, 1]`. Terms are single lowercase tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    weights: BTreeMap<String, f64>,
}

impl Lexicon {
    pub fn new<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        let mut weights = BTreeMap::new();
        for (term, weight) in entries {
            let term = term.as_ref();
            let toks = tokenize(term);
            if toks.len() != 1 {
                return Err(Error::config(format!(
                    "lexicon term {term:?} must be a single token"
                )));
            }
            if !(weight > 0.0 && weight <= 1.0) {
                return Err(Error::config(format!(
                    "lexicon weight for {term:?} must be in (0, 1], got {weight}"
                )));
            }
            weights.insert(toks.into_iter().next().unwrap(), weight);
        }
        if weights.is_empty() {
            return Err(Error::config("lexicon is empty"));
        }
        Ok(Lexicon { weights })
    }

    /// Reads `term,weight` lines. Blank lines and `#` comments are ignored.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (term, weight) = line
                .rsplit_once(',')
                .ok_or_else(|| Error::parse(i + 1, "expected `term,weight`"))?;
            let weight: f64 = weight
                .trim()
                .parse()
                .map_err(|_| Error::parse(i + 1, format!("bad weight {:?}", weight.trim())))?;
            entries.push((term.trim().to_string(), weight));
        }
        Lexicon::new(entries)
    }

    pub fn weight(&self, token: &str) -> Option<f64> {
        self.weights.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn digest(&self) -> String {
        let mut h = Sha256::new();
        for (t, w) in &self.weights {
            h.update(t.as_bytes());
            h.update(b"\0");
            h.update(w.to_bits().to_le_bytes());
        }
        hex::encode(&h.finalize()[..6])
    }
}

/// Noisy-OR over matched token occurrences: `1 - prod(1 - weight)`.
pub fn lexicon_score(text: &str, lexicon: &Lexicon) -> f64 {
    let mut hits: BTreeMap<&str, i32> = BTreeMap::new();
    let tokens = tokenize(text);
    for tok in &tokens {
        if lexicon.weights.contains_key(tok.as_str()) {
            *hits.entry(tok.as_str()).or_insert(0) += 1;
        }
    }
    let survive: f64 = hits
        .iter()
        .map(|(t, &n)| (1.0 - lexicon.weights[*t]).powi(n))
        .product();
    (1.0 - survive).clamp(0.0, 1.0)
}

#[derive(Debug, Clone)]
pub struct LexiconScorer {
    lexicon: Lexicon,
    id: String,
}

impl LexiconScorer {
    pub fn new(lexicon: Lexicon) -> Self {
        let id = format!("lexicon-{}", lexicon.digest());
        LexiconScorer { lexicon, id }
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }
}

impl Scorer for LexiconScorer {
    fn id(&self) -> &str {
        &self.id
    }

    fn score_raw(&self, text: &str) -> std::result::Result<f64, ScoreError> {
        Ok(lexicon_score(text, &self.lexicon))
    }
}
