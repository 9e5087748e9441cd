//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{word_score, MockServer, Reply};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use toxchain::chains::{corpus_stats, EpisodeSummary};
use toxchain::cpd::{
    default_penalty, detect_kernelcpd, detect_pelt, CostFunction, Detector, Kernel,
    Method, Signal, Stopping,
};
use toxchain::evaluation::{hausdorff, majority_vote, precision_recall, rand_index, AnnotationSet};
use toxchain::ingest::SpeakerTurn;
use toxchain::pipeline::{self, store};
use toxchain::segmentation::{normalize_whitespace, segment_turns};
use toxchain::textstats::{ttr, unigram_entropy, unigram_perplexity};
use toxchain::toxicity::{score_batch, RemoteConfig, RemoteScorer, ScoreCache, Scorer};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err(format!($($arg)+));
        }
    };
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("cpd oracle equivalence", cpd_oracle_equivalence),
        ("synthetic recovery", synthetic_recovery),
        ("metric fixtures", metric_fixtures),
        ("textstat fixtures", textstat_fixtures),
        ("chain invariants", chain_invariants),
        ("segmentation invariants", segmentation_invariants),
        ("corpus stats", corpus_stats_rounding),
        ("scorer client contract", scorer_client_contract),
        ("end-to-end smoke", end_to_end_smoke),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|p| Err(format!("panicked: {}", panic_message(&p))));
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn panic_message(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>()
        .cloned()
        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "unknown panic".into())
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

// ---- criterion 1 ----------------------------------------------------------

fn l2_direct(x: &[f64]) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - mean) * (v - mean)).sum()
}

fn rbf_direct(x: &[f64], gamma: f64) -> f64 {
    let mut s = 0.0;
    for a in x {
        for b in x {
            s += (-gamma * (a - b) * (a - b)).exp();
        }
    }
    x.len() as f64 - s / x.len() as f64
}

fn median_gamma(x: &[f64]) -> f64 {
    let mut d = Vec::new();
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            d.push((x[i] - x[j]).abs());
        }
    }
    d.sort_by(f64::total_cmp);
    let m = d.len();
    let med = if m % 2 == 1 { d[m / 2] } else { 0.5 * (d[m / 2 - 1] + d[m / 2]) };
    if med == 0.0 {
        1.0
    } else {
        1.0 / (2.0 * med * med)
    }
}

/// Every segmentation of `0..n` into runs of at least `min_size`, as
/// breakpoint lists ending in `n`, in lexicographic order.
fn segmentations(n: usize, min_size: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        for end in start + m..=n {
            if end != n && n - end < m {
                continue;
            }
            cur.push(end);
            if end == n {
                out.push(cur.clone());
            } else {
                rec(end, n, m, cur, out);
            }
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, min_size, &mut Vec::new(), &mut out);
    out.sort();
    out
}

fn seg_cost(x: &[f64], bkps: &[usize], cost: &dyn Fn(&[f64]) -> f64) -> f64 {
    let mut start = 0;
    let mut total = 0.0;
    for &b in bkps {
        total += cost(&x[start..b]);
        start = b;
    }
    total
}

/// Minimum objective and the earliest minimizer among `candidates`.
fn brute(candidates: &[Vec<usize>], objective: impl Fn(&[usize]) -> f64) -> (f64, Vec<usize>) {
    let mut best = (f64::INFINITY, Vec::new());
    for c in candidates {
        let v = objective(c);
        if best.1.is_empty() || v < best.0 - 1e-12 * best.0.abs().max(1.0) {
            best = (v, c.clone());
        }
    }
    best
}

fn random_signal(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut level = 0.0;
    (0..n)
        .map(|_| {
            if rng.gen_bool(0.2) {
                level = rng.gen_range(-5.0..5.0);
            }
            level + noise.sample(rng)
        })
        .collect()
}

fn cpd_oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut kernel_cases = 0;
    for trial in 0..200 {
        let min_size = rng.gen_range(1..=3);
        let n = rng.gen_range((2 * min_size).max(3)..=12);
        let x = random_signal(&mut rng, n);
        let signal = Signal::univariate(&x).unwrap();
        let all = segmentations(n, min_size);

        let penalty = if trial % 2 == 0 {
            default_penalty(&CostFunction::L2.fit(&signal).unwrap())
        } else {
            rng.gen_range(0.05..10.0)
        };
        let got = detect_pelt(&signal, &CostFunction::L2, penalty, min_size)
            .map_err(|e| format!("trial {trial}: pelt failed: {e}"))?;
        let objective = |b: &[usize]| seg_cost(&x, b, &l2_direct) + penalty * (b.len() - 1) as f64;
        let (want, want_bkps) = brute(&all, objective);
        let have = objective(got.breakpoints());
        ensure!(
            rel_close(have, want, 1e-9),
            "trial {trial}: pelt objective {have} vs oracle {want}"
        );
        ensure!(
            got.breakpoints() == want_bkps.as_slice(),
            "trial {trial}: pelt {:?} vs oracle {want_bkps:?}",
            got.breakpoints()
        );

        let gamma = median_gamma(&x);
        for k in [1usize, 2] {
            if n < (k + 1) * min_size {
                continue;
            }
            kernel_cases += 1;
            let got = detect_kernelcpd(&signal, Kernel::Rbf { gamma: None }, Stopping::NBkps(k), min_size)
                .map_err(|e| format!("trial {trial}: kernelcpd k={k} failed: {e}"))?;
            let fixed: Vec<Vec<usize>> = all.iter().filter(|b| b.len() == k + 1).cloned().collect();
            let rbf = |s: &[f64]| rbf_direct(s, gamma);
            let (want, want_bkps) = brute(&fixed, |b| seg_cost(&x, b, &rbf));
            let have = seg_cost(&x, got.breakpoints(), &rbf);
            ensure!(
                rel_close(have, want, 1e-9),
                "trial {trial}: kernelcpd k={k} cost {have} vs oracle {want}"
            );
            ensure!(
                got.breakpoints() == want_bkps.as_slice(),
                "trial {trial}: kernelcpd k={k} {:?} vs oracle {want_bkps:?}",
                got.breakpoints()
            );
        }
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!("200 signals, {kernel_cases} kernelcpd cases, {elapsed:.2?}"))
}

// ---- criterion 2 ----------------------------------------------------------

/// Seed of the scored run; hyperparameters were fixed on other seeds.
const RECOVERY_SEED: u64 = 7;
/// PELT/rbf penalty, calibrated on seeds 99 and 2024.
const RECOVERY_PELT_PENALTY: f64 = 1.0;

fn recovery_signal(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<usize>) {
    let noise = Normal::new(0.0, 0.5).unwrap();
    let a = rng.gen_range(3..=15);
    let b = rng.gen_range(a + 3..=18);
    let mut level = rng.gen_range(-2.0..2.0);
    let mut x = Vec::with_capacity(21);
    for i in 0..21 {
        if i == a || i == b {
            level += if rng.gen_bool(0.5) { 5.0 } else { -5.0 };
        }
        x.push(level + noise.sample(rng));
    }
    (x, vec![a, b])
}

fn synthetic_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(RECOVERY_SEED);
    let detectors = [
        ("pelt/rbf", Detector::new(Method::Pelt, CostFunction::rbf())
            .with_stopping(Stopping::Penalty(RECOVERY_PELT_PENALTY))),
        ("kernelcpd/rbf", Detector::new(Method::KernelCpd, CostFunction::rbf())
            .with_stopping(Stopping::NBkps(2))),
        // Reported, not gated: the automatic penalty under the rbf median heuristic.
        ("pelt/rbf default penalty (not gated)", Detector::new(Method::Pelt, CostFunction::rbf())),
    ];
    let mut sums = [(0.0, 0usize, 0.0, 0usize); 3];
    for _ in 0..200 {
        let (x, truth) = recovery_signal(&mut rng);
        let signal = Signal::univariate(&x).unwrap();
        for (d, (_, det)) in detectors.iter().enumerate() {
            let (cps, _) = det.detect(&signal).map_err(|e| e.to_string())?;
            let pr = precision_recall(cps.change_points(), &truth, 1);
            if let Some(p) = pr.precision {
                sums[d].0 += p;
                sums[d].1 += 1;
            }
            if let Some(r) = pr.recall {
                sums[d].2 += r;
                sums[d].3 += 1;
            }
        }
    }
    let mut detail = Vec::new();
    let mut ok = true;
    for (d, (name, _)) in detectors.iter().enumerate() {
        let p = sums[d].0 / sums[d].1.max(1) as f64;
        let r = sums[d].2 / sums[d].3.max(1) as f64;
        if d < 2 {
            ok &= p >= 0.90 && r >= 0.95;
        }
        detail.push(format!("{name} precision {p:.3} recall {r:.3}"));
    }
    let detail = detail.join(", ");
    ensure!(ok, "{detail} (need precision >= 0.90, recall >= 0.95)");
    Ok(detail)
}

// ---- criterion 3 ----------------------------------------------------------

fn metric_fixtures() -> Outcome {
    let h = hausdorff(&[5], &[3, 8]);
    ensure!(h == Some(3.0), "hausdorff {h:?}");
    let ri = rand_index(&[2, 5], &[3, 5], 5).map_err(|e| e.to_string())?;
    ensure!(ri == 0.6, "rand index {ri}");
    let pr1 = precision_recall(&[4, 9], &[3, 8], 1);
    ensure!(
        pr1.precision == Some(1.0) && pr1.recall == Some(1.0),
        "margin 1: {pr1:?}"
    );
    let pr0 = precision_recall(&[4, 9], &[3, 8], 0);
    ensure!(
        pr0.precision == Some(0.0) && pr0.recall == Some(0.0),
        "margin 0: {pr0:?}"
    );
    let mut set = AnnotationSet::new("c", 12);
    set.add("a", vec![3, 7]).map_err(|e| e.to_string())?;
    set.add("b", vec![3]).map_err(|e| e.to_string())?;
    set.add("c", vec![7, 9]).map_err(|e| e.to_string())?;
    let mv = majority_vote(&set, 2);
    ensure!(mv == vec![3, 7], "majority vote {mv:?}");
    Ok("hausdorff 3, rand 0.6, P/R (1,1) and (0,0), vote [3, 7]".into())
}

// ---- criterion 4 ----------------------------------------------------------

fn textstat_fixtures() -> Outcome {
    let toks = ["a", "b", "a", "b"];
    let (t, h, p) = (
        ttr(&toks).unwrap(),
        unigram_entropy(&toks).unwrap(),
        unigram_perplexity(&toks).unwrap(),
    );
    ensure!(t == 0.5 && h == 1.0 && p == 2.0, "ttr {t}, entropy {h}, perplexity {p}");

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let vocab = rng.gen_range(1..=60);
        let len = rng.gen_range(1..=300);
        // Skewed draws so distributions range from uniform to near-degenerate.
        let skew: f64 = rng.gen_range(0.0..3.0);
        let tokens: Vec<String> = (0..len)
            .map(|_| {
                let u: f64 = rng.gen();
                format!("w{}", (u.powf(1.0 + skew) * vocab as f64) as usize)
            })
            .collect();
        let h = unigram_entropy(&tokens).unwrap();
        let p = unigram_perplexity(&tokens).unwrap();
        let rel = (p - h.exp2()).abs() / h.exp2();
        worst = worst.max(rel);
        ensure!(rel <= 1e-9, "list {i}: perplexity {p} vs 2^entropy {}", h.exp2());
    }
    Ok(format!("[a,b,a,b] exact; 1000 lists, worst relative gap {worst:.1e}"))
}

// ---- criterion 5 ----------------------------------------------------------

fn chain_invariants() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::fixture_config(dir.path());
    let run = |cfg: &pipeline::PipelineConfig| -> Result<(), String> {
        pipeline::cmd_ingest(cfg).map_err(|e| e.to_string())?;
        pipeline::cmd_score(cfg).map_err(|e| e.to_string())?;
        pipeline::cmd_chains(cfg).map_err(|e| e.to_string())?;
        Ok(())
    };
    run(&cfg)?;
    let threshold = cfg.chains.anchor_threshold;
    let scored: Vec<store::SegmentRecord> =
        store::read_jsonl(&dir.path().join(store::SCORED)).map_err(|e| e.to_string())?;
    let anchors = scored
        .iter()
        .filter(|s| s.toxicity.is_some_and(|t| t >= threshold))
        .count();
    let chains_path = dir.path().join(store::CHAINS);
    let chains: Vec<store::ChainRecord> = store::read_jsonl(&chains_path).map_err(|e| e.to_string())?;
    ensure!(!chains.is_empty(), "fixture produced no chains");
    ensure!(chains.len() == anchors, "{} chains for {anchors} anchors", chains.len());
    let mut interior = 0;
    for c in &chains {
        let anchor = &c.segments[c.anchor_offset];
        ensure!(
            anchor.toxicity.is_some_and(|t| t >= threshold),
            "{}: anchor toxicity {:?}",
            c.chain_id,
            anchor.toxicity
        );
        if c.truncated_head == 0 && c.truncated_tail == 0 {
            interior += 1;
            ensure!(
                c.segments.len() == 21 && c.anchor_offset == 10,
                "{}: interior chain with {} segments, anchor at {}",
                c.chain_id,
                c.segments.len(),
                c.anchor_offset
            );
        }
    }
    ensure!(interior > 0, "no interior chain to check");
    let first = std::fs::read(&chains_path).unwrap();
    run(&cfg)?;
    ensure!(std::fs::read(&chains_path).unwrap() == first, "rerun changed chains.jsonl");
    let other = tempfile::tempdir().unwrap();
    run(&common::fixture_config(other.path()))?;
    ensure!(
        std::fs::read(other.path().join(store::CHAINS)).unwrap() == first,
        "fresh run differs from first run"
    );
    Ok(format!(
        "{} chains = {anchors} anchors, {interior} interior, reruns byte-identical",
        chains.len()
    ))
}

// ---- criterion 6 ----------------------------------------------------------

fn random_text(rng: &mut ChaCha8Rng) -> String {
    const WORDS: [&str; 8] = ["the", "idiot", "said", "x", "well", "ok", "tax", "plan"];
    const GAPS: [&str; 5] = [" ", "  ", "\t", "\n", " \r\n "];
    // Turns carry at least one token; ingest rejects blank text.
    let n = match rng.gen_range(0..10) {
        0..=3 => rng.gen_range(1..5),
        _ => rng.gen_range(5..1500),
    };
    let mut s = String::new();
    if rng.gen_bool(0.3) {
        s.push_str(GAPS.choose(rng).unwrap());
    }
    for i in 0..n {
        if i > 0 {
            s.push_str(GAPS.choose(rng).unwrap());
        }
        s.push_str(WORDS.choose(rng).unwrap());
    }
    if rng.gen_bool(0.3) {
        s.push_str(GAPS.choose(rng).unwrap());
    }
    s
}

fn segmentation_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut turns = Vec::new();
    let mut t = 0.0;
    for _ in 0..1000 {
        let duration = match rng.gen_range(0..4) {
            0 => rng.gen_range(0.01..17.0),
            1 => 17.0 * rng.gen_range(1..10) as f64,
            _ => rng.gen_range(17.0..600.0),
        };
        let speaker = if rng.gen_bool(0.5) { "A" } else { "B" };
        turns.push(SpeakerTurn::new(speaker, t, t + duration, random_text(&mut rng)).unwrap());
        t += duration + rng.gen_range(0.0..2.0);
    }

    let mut chunks = 0;
    for (i, turn) in turns.iter().enumerate() {
        let segments = segment_turns(std::slice::from_ref(turn), 17.0, 4).map_err(|e| e.to_string())?;
        for s in &segments {
            ensure!(
                (1..=4).contains(&s.chunks.len()),
                "turn {i}: segment with {} chunks",
                s.chunks.len()
            );
            for c in &s.chunks {
                ensure!(c.duration() <= 17.0, "turn {i}: chunk of {}s", c.duration());
            }
            chunks += s.chunks.len();
        }
        let joined = segments
            .iter()
            .map(|s| s.text.as_str())
            .filter(|s| !s.is_empty())
            .collect::<Vec<_>>()
            .join(" ");
        ensure!(joined == normalize_whitespace(&turn.text), "turn {i}: text not preserved");
    }

    // The whole sequence at once: segments never mix speakers or exceed four chunks.
    let segments = segment_turns(&turns, 17.0, 4).map_err(|e| e.to_string())?;
    for s in &segments {
        ensure!(s.chunks.len() <= 4, "segment {} has {} chunks", s.segment_index, s.chunks.len());
        ensure!(
            s.chunks.iter().all(|c| c.speaker_id == s.speaker_id),
            "segment {} mixes speakers",
            s.segment_index
        );
    }
    Ok(format!("1000 turns, {chunks} chunks, {} segments in sequence", segments.len()))
}

// ---- criterion 7 ----------------------------------------------------------

fn corpus_stats_rounding() -> Outcome {
    let episodes: Vec<EpisodeSummary> = (0..440)
        .map(|i| EpisodeSummary {
            episode_id: format!("e{i}"),
            channel_id: "talk-radio".into(),
            duration: 3600.0,
            token_count: 9000,
            anchor_count: usize::from(i < 380),
        })
        .collect();
    let stats = corpus_stats(&episodes);
    let c = &stats.channels[0];
    ensure!(
        c.episodes == 440 && c.toxic_episodes == 380,
        "{} episodes, {} toxic",
        c.episodes,
        c.toxic_episodes
    );
    ensure!(c.toxic_episode_pct.round() == 86.0, "toxic share {}", c.toxic_episode_pct);
    Ok(format!("380 / 440 = {:.2}% -> 86%", c.toxic_episode_pct))
}

// ---- criterion 8 ----------------------------------------------------------

fn mock_config(server: &MockServer) -> RemoteConfig {
    RemoteConfig {
        endpoint: server.url.clone(),
        api_key: None,
        qps: 1000.0,
        initial_backoff_ms: 5,
        max_backoff_ms: 40,
        max_retries: 3,
        timeout_secs: 5,
        ..RemoteConfig::default()
    }
}

fn scorer_client_contract() -> Outcome {
    let server = MockServer::start(|n, _| if n < 2 { Reply::Status(429) } else { Reply::Score(0.42) });
    let scorer = RemoteScorer::new(mock_config(&server)).map_err(|e| e.to_string())?;
    let v = scorer.score_raw("hello").map_err(|e| e.to_string())?;
    ensure!(v == 0.42 && server.request_count() == 3, "got {v} after {} requests", server.request_count());
    drop(server);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cache.jsonl");
    let server = MockServer::start(|_, t| Reply::Score(word_score(t)));
    let scorer = RemoteScorer::new(mock_config(&server)).map_err(|e| e.to_string())?;
    let texts = ["a b", "c", "a b", "d e f"];
    let cache = ScoreCache::open(&path).map_err(|e| e.to_string())?;
    let first: Vec<f64> = score_batch(&texts, &scorer, &cache)
        .into_iter()
        .map(|r| r.map(|s| s.value).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    cache.flush().map_err(|e| e.to_string())?;
    let sent = server.request_count();
    ensure!(sent == 3, "{sent} requests for 3 distinct texts");
    let reopened = ScoreCache::open(&path).map_err(|e| e.to_string())?;
    let again: Vec<f64> = score_batch(&texts, &scorer, &reopened)
        .into_iter()
        .map(|r| r.map(|s| s.value).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    ensure!(server.request_count() == sent, "cached texts were re-sent");
    ensure!(first == again, "cached values differ");
    drop(server);

    let server = MockServer::start(|_, t| Reply::Score(word_score(t)));
    let qps = 20.0;
    let scorer = RemoteScorer::new(RemoteConfig { qps, max_in_flight: 4, ..mock_config(&server) })
        .map_err(|e| e.to_string())?;
    let texts: Vec<String> = (0..40).map(|i| format!("text {i}")).collect();
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    ensure!(
        scorer.score_raw_batch(&refs).iter().all(Result::is_ok),
        "rate-limited batch failed"
    );
    let reqs = server.requests();
    let span = reqs.last().unwrap().at - reqs[0].at;
    let rate = (reqs.len() - 1) as f64 / span.as_secs_f64();
    ensure!((rate - qps).abs() <= 0.1 * qps, "observed {rate:.2} qps for bound {qps}");
    Ok(format!("429 retried, cache hit on rerun, {rate:.2} qps at bound {qps}"))
}

// ---- criterion 9 ----------------------------------------------------------

fn end_to_end_smoke() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let config = common::fixtures().join("pipeline.toml");
    let started = Instant::now();
    let mut lines = BTreeMap::new();
    for stage in ["ingest", "score", "chains", "stats", "cpd", "eval"] {
        let output = Command::new(env!("CARGO_BIN_EXE_toxchain"))
            .arg(stage)
            .arg("--config")
            .arg(&config)
            .arg("--out-dir")
            .arg(out)
            .arg("--cache")
            .arg(out.join("score_cache.jsonl"))
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(
            output.status.success(),
            "{stage} exited with {}: {}",
            output.status,
            String::from_utf8_lossy(&output.stderr)
        );
        lines.insert(stage, String::from_utf8_lossy(&output.stdout).trim().to_string());
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    let mut missing = Vec::new();
    for name in [
        store::SEGMENTS,
        store::SCORED,
        store::CHAINS,
        store::CORPUS_STATS,
        store::TEXTSTATS,
        store::KEYWORDS,
        store::CPD,
        store::EVAL_REPORT,
        store::EVAL_PER_CHAIN,
    ] {
        if !nonempty(&out.join(name)) {
            missing.push(name.to_string());
        }
    }
    for stage in ["ingest", "score", "chains", "stats", "cpd", "eval"] {
        let sidecar = format!("{stage}.run.json");
        if !nonempty(&out.join(&sidecar)) {
            missing.push(sidecar);
        }
    }
    ensure!(missing.is_empty(), "missing artifacts: {}", missing.join(", "));
    Ok(format!("6 stages in {elapsed:.2?}; {}", lines["eval"]))
}

fn nonempty(path: &Path) -> bool {
    std::fs::metadata(path).is_ok_and(|m| m.len() > 0)
}
