use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use toxchain::cpd::Method;
use toxchain::pipeline::{self, PipelineConfig, ScorerKind};

/// Toxicity timelines, toxic conversation chains and change points for
/// diarized transcripts.
#[derive(Parser)]
#[command(name = "toxchain", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, normalize and segment the manifest's transcripts.
    Ingest,
    /// Score every chunk and aggregate segment toxicity.
    Score,
    /// Extract anchor-centred chains and per-channel statistics.
    Chains,
    /// Per-position text statistics and keyword counts over chains.
    Stats,
    /// Change-point detection on chain toxicity series.
    Cpd,
    /// Score detections against annotator consensus.
    Eval,
    /// Render a markdown summary of the stage outputs.
    Report,
    /// Every stage in order; eval only when annotations are given.
    Run,
}

/// Flags win over the config file.
#[derive(Args)]
struct Overrides {
    /// TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    annotations: Option<PathBuf>,
    /// `lexicon` or `remote`.
    #[arg(long, global = true)]
    scorer: Option<String>,
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    #[arg(long, global = true)]
    chunk_duration: Option<f64>,
    #[arg(long, global = true)]
    max_chunks_per_segment: Option<usize>,
    #[arg(long, global = true)]
    anchor_threshold: Option<f64>,
    #[arg(long, global = true)]
    window: Option<usize>,
    /// Comma-separated: pelt, kernelcpd, binseg, bottomup.
    #[arg(long, global = true, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    #[arg(long, global = true)]
    cost: Option<String>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true)]
    penalty: Option<f64>,
    #[arg(long, global = true)]
    n_bkps: Option<usize>,
    #[arg(long, global = true)]
    min_size: Option<usize>,
    #[arg(long, global = true)]
    quorum: Option<usize>,
}

impl Overrides {
    fn apply(self) -> anyhow::Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = self.manifest {
            c.manifest = Some(v);
        }
        if let Some(v) = self.out_dir {
            c.out_dir = v;
        }
        if let Some(v) = self.annotations {
            c.annotations = Some(v);
        }
        if let Some(v) = self.scorer {
            c.scoring.scorer = v.parse::<ScorerKind>()?;
        }
        if let Some(v) = self.lexicon {
            c.scoring.lexicon = Some(v);
        }
        if let Some(v) = self.cache {
            c.scoring.cache = Some(v);
        }
        if let Some(v) = self.chunk_duration {
            c.segmentation.chunk_duration = v;
        }
        if let Some(v) = self.max_chunks_per_segment {
            c.segmentation.max_chunks_per_segment = v;
        }
        if let Some(v) = self.anchor_threshold {
            c.chains.anchor_threshold = v;
        }
        if let Some(v) = self.window {
            c.chains.window = v;
        }
        if let Some(v) = self.methods {
            c.cpd.methods = v
                .iter()
                .map(|m| m.parse::<Method>())
                .collect::<Result<_, _>>()?;
        }
        if let Some(v) = self.cost {
            c.cpd.cost = v;
        }
        if self.gamma.is_some() {
            c.cpd.gamma = self.gamma;
        }
        if self.penalty.is_some() {
            c.cpd.penalty = self.penalty;
        }
        if self.n_bkps.is_some() {
            c.cpd.n_bkps = self.n_bkps;
        }
        if let Some(v) = self.min_size {
            c.cpd.min_size = v;
        }
        if self.quorum.is_some() {
            c.eval.quorum = self.quorum;
        }
        c.validate()?;
        Ok(c)
    }
}

fn run(command: Command, config: &PipelineConfig) -> anyhow::Result<()> {
    match command {
        Command::Ingest => {
            let s = pipeline::cmd_ingest(config)?;
            println!(
                "ingest: {} episodes, {} turns ({} trimmed, {} dropped), {} segments",
                s.episodes, s.turns, s.trimmed, s.dropped, s.segments
            );
        }
        Command::Score => {
            let s = pipeline::cmd_score(config)?;
            println!(
                "score: {} segments, {} chunks ({} empty), {} new scores",
                s.segments, s.chunks, s.empty_chunks, s.new_scores
            );
        }
        Command::Chains => {
            let s = pipeline::cmd_chains(config)?;
            println!(
                "chains: {} chains from {} of {} episodes",
                s.chains, s.toxic_episodes, s.episodes
            );
        }
        Command::Stats => {
            let s = pipeline::cmd_stats(config)?;
            println!("stats: {} segments across {} chains", s.segments, s.chains);
        }
        Command::Cpd => {
            let s = pipeline::cmd_cpd(config)?;
            println!(
                "cpd: {} detections over {} chains, {} skipped",
                s.detections, s.chains, s.skipped
            );
        }
        Command::Eval => {
            let s = pipeline::cmd_eval(config)?;
            println!(
                "eval: {} of {} annotated chains evaluated, {} rows",
                s.evaluated_chains, s.annotated_chains, s.rows
            );
        }
        Command::Report => {
            let path = pipeline::cmd_report(config)?;
            println!("report: {}", path.display());
        }
        Command::Run => {
            for stage in [Command::Ingest, Command::Score, Command::Chains, Command::Stats, Command::Cpd] {
                run(stage, config)?;
            }
            if config.annotations.is_some() {
                run(Command::Eval, config)?;
            }
            run(Command::Report, config)?;
        }
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let config = cli.overrides.apply().context("configuration")?;
    run(cli.command, &config)
}
