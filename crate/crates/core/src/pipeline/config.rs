use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chains::{DEFAULT_ANCHOR_THRESHOLD, DEFAULT_WINDOW};
use crate::cpd::{CostFunction, Method, DEFAULT_MIN_SIZE};
use crate::error::{Error, Result};
use crate::segmentation::{DEFAULT_CHUNK_DURATION, DEFAULT_MAX_CHUNKS_PER_SEGMENT};
use crate::toxicity::RemoteConfig;

/// Every tunable of a pipeline run. Loaded from TOML; missing keys take
/// their defaults.
///
/// ```toml
/// manifest = "corpus/manifest.json"
/// out_dir = "out"
///
/// [scoring]
/// scorer = "lexicon"
/// lexicon = "corpus/lexicon.csv"
///
/// [cpd]
/// methods = ["pelt", "kernelcpd"]
/// cost = "rbf"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub manifest: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub annotations: Option<PathBuf>,
    pub segmentation: SegmentationConfig,
    pub scoring: ScoringConfig,
    pub chains: ChainConfig,
    pub stats: StatsConfig,
    pub cpd: CpdConfig,
    pub eval: EvalConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            manifest: None,
            out_dir: PathBuf::from("out"),
            annotations: None,
            segmentation: SegmentationConfig::default(),
            scoring: ScoringConfig::default(),
            chains: ChainConfig::default(),
            stats: StatsConfig::default(),
            cpd: CpdConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationConfig {
    pub chunk_duration: f64,
    pub max_chunks_per_segment: usize,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        SegmentationConfig {
            chunk_duration: DEFAULT_CHUNK_DURATION,
            max_chunks_per_segment: DEFAULT_MAX_CHUNKS_PER_SEGMENT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    #[default]
    Lexicon,
    Remote,
}

impl FromStr for ScorerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lexicon" => Ok(ScorerKind::Lexicon),
            "remote" => Ok(ScorerKind::Remote),
            other => Err(Error::config(format!(
                "unknown scorer `{other}` (expected `lexicon` or `remote`)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringConfig {
    pub scorer: ScorerKind,
    /// Required by the lexicon scorer.
    pub lexicon: Option<PathBuf>,
    /// Persistent score cache; in-memory only when unset.
    pub cache: Option<PathBuf>,
    pub remote: RemoteConfig,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            scorer: ScorerKind::Lexicon,
            lexicon: None,
            cache: None,
            remote: RemoteConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub anchor_threshold: f64,
    pub window: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            anchor_threshold: DEFAULT_ANCHOR_THRESHOLD,
            window: DEFAULT_WINDOW,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    /// Keywords kept per window.
    pub top_keywords: usize,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig { top_keywords: 25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CpdConfig {
    pub methods: Vec<Method>,
    /// `l2`, `rbf`, `linear` or `cosine`.
    pub cost: String,
    /// Fixed rbf bandwidth; the median heuristic when unset.
    pub gamma: Option<f64>,
    /// Penalty per change point; the cost-scaled default when unset.
    pub penalty: Option<f64>,
    /// Fixed change-point count for kernelcpd, binseg and bottomup. pelt is
    /// always penalized.
    pub n_bkps: Option<usize>,
    pub min_size: usize,
}

impl Default for CpdConfig {
    fn default() -> Self {
        CpdConfig {
            methods: Method::ALL.to_vec(),
            cost: "rbf".to_string(),
            gamma: None,
            penalty: None,
            n_bkps: None,
            min_size: DEFAULT_MIN_SIZE,
        }
    }
}

impl CpdConfig {
    pub fn cost_function(&self) -> Result<CostFunction> {
        let cost = CostFunction::from_str(&self.cost)?;
        match (cost, self.gamma) {
            (CostFunction::Rbf { .. }, gamma) => Ok(CostFunction::Rbf { gamma }),
            (_, Some(_)) => Err(Error::config("gamma applies to the rbf cost only")),
            (c, None) => Ok(c),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Annotators needed for a consensus change point; half rounded up when
    /// unset.
    pub quorum: Option<usize>,
}

impl PipelineConfig {
    /// Reads a TOML config. Relative paths inside it are resolved against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
        let mut config: PipelineConfig = toml::from_str(&text)
            .map_err(|e| Error::config(e.to_string()).in_file(path))?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.out_dir);
        for p in [
            &mut self.manifest,
            &mut self.annotations,
            &mut self.scoring.lexicon,
            &mut self.scoring.cache,
        ]
        .into_iter()
        .flatten()
        {
            join(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.segmentation;
        if !(s.chunk_duration > 0.0 && s.chunk_duration.is_finite()) {
            return Err(Error::config(format!(
                "chunk_duration must be positive, got {}",
                s.chunk_duration
            )));
        }
        if s.max_chunks_per_segment == 0 {
            return Err(Error::config("max_chunks_per_segment must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.chains.anchor_threshold) {
            return Err(Error::config(format!(
                "anchor_threshold must lie in [0, 1], got {}",
                self.chains.anchor_threshold
            )));
        }
        if self.chains.window == 0 {
            return Err(Error::config("window must be at least 1"));
        }
        if self.stats.top_keywords == 0 {
            return Err(Error::config("top_keywords must be at least 1"));
        }
        let c = &self.cpd;
        if c.methods.is_empty() {
            return Err(Error::config("no cpd methods selected"));
        }
        c.cost_function()?;
        if let Some(p) = c.penalty {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::config(format!("penalty must be positive, got {p}")));
            }
        }
        if c.n_bkps == Some(0) {
            return Err(Error::config("n_bkps must be at least 1"));
        }
        if c.min_size == 0 {
            return Err(Error::config("min_size must be at least 1"));
        }
        if self.eval.quorum == Some(0) {
            return Err(Error::config("quorum must be at least 1"));
        }
        if self.scoring.scorer == ScorerKind::Remote {
            self.scoring.remote.validate()?;
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form. Secrets are never part of it.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}
