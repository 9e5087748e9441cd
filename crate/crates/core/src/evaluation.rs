//! Scoring detected change points against annotator consensus.
//!
//! Metrics that cannot be computed for a chain (for instance Hausdorff
//! distance when the detector found nothing) are `None` and left out of that
//! metric's aggregate.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::cpd::ChangePointSet;
use crate::error::{Error, Result};

/// Margins used for precision and recall.
pub const MARGINS: [usize; 3] = [1, 2, 4];

/// Change points marked by each annotator for one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationSet {
    pub chain_id: String,
    /// Series length; marks lie in `[1, n - 1]`.
    pub n: usize,
    pub annotators: BTreeMap<String, Vec<usize>>,
}

impl AnnotationSet {
    pub fn new(chain_id: impl Into<String>, n: usize) -> Self {
        AnnotationSet {
            chain_id: chain_id.into(),
            n,
            annotators: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, annotator: impl Into<String>, indices: Vec<usize>) -> Result<()> {
        let annotator = annotator.into();
        if let Some(&bad) = indices.iter().find(|&&i| i == 0 || i >= self.n) {
            return Err(Error::config(format!(
                "{}: annotator {annotator} marked {bad}, outside [1, {}]",
                self.chain_id,
                self.n.saturating_sub(1)
            )));
        }
        if !indices.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::config(format!(
                "{}: annotator {annotator} marks are not strictly ascending",
                self.chain_id
            )));
        }
        if self.annotators.insert(annotator.clone(), indices).is_some() {
            return Err(Error::config(format!(
                "{}: duplicate annotations from {annotator}",
                self.chain_id
            )));
        }
        Ok(())
    }

    /// `ceil(annotators / 2)`: two of three.
    pub fn default_quorum(&self) -> usize {
        self.annotators.len().div_ceil(2).max(1)
    }

    pub fn union(&self) -> BTreeSet<usize> {
        self.annotators.values().flatten().copied().collect()
    }
}

/// Indices marked by at least `quorum` annotators, ascending.
pub fn majority_vote(annotations: &AnnotationSet, quorum: usize) -> Vec<usize> {
    let quorum = quorum.max(1);
    let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
    for marks in annotations.annotators.values() {
        for &i in marks {
            *votes.entry(i).or_insert(0) += 1;
        }
    }
    votes
        .into_iter()
        .filter(|&(_, v)| v >= quorum)
        .map(|(i, _)| i)
        .collect()
}

fn directed(from: &[usize], to: &[usize]) -> usize {
    from.iter()
        .map(|&p| to.iter().map(|&t| p.abs_diff(t)).min().expect("non-empty"))
        .max()
        .expect("non-empty")
}

/// Symmetric Hausdorff distance between two change-point sets (no end
/// sentinel). `None` when either set is empty.
pub fn hausdorff(pred: &[usize], truth: &[usize]) -> Option<f64> {
    if pred.is_empty() || truth.is_empty() {
        return None;
    }
    Some(directed(pred, truth).max(directed(truth, pred)) as f64)
}

fn check_breakpoints(b: &[usize], n: usize) -> Result<()> {
    ChangePointSet::new(b.to_vec(), n).map(|_| ())
}

fn same_segment_pairs(bkps: &[usize]) -> u64 {
    let mut prev = 0;
    bkps.iter()
        .map(|&b| {
            let len = (b - prev) as u64;
            prev = b;
            len * len.saturating_sub(1) / 2
        })
        .sum()
}

/// Fraction of sample pairs on which two segmentations agree (same segment
/// in both, or different segments in both). Both lists end at `n`.
pub fn rand_index(pred: &[usize], truth: &[usize], n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::UndefinedStatistic("rand index needs at least 2 samples"));
    }
    check_breakpoints(pred, n)?;
    check_breakpoints(truth, n)?;
    let merged: Vec<usize> = pred
        .iter()
        .chain(truth)
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let total = (n as u64) * (n as u64 - 1) / 2;
    let same_pred = same_segment_pairs(pred);
    let same_truth = same_segment_pairs(truth);
    let same_both = same_segment_pairs(&merged);
    let agree = total + 2 * same_both - same_pred - same_truth;
    Ok(agree as f64 / total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    /// `None` when nothing was predicted.
    pub precision: Option<f64>,
    /// `None` when there is no true change point.
    pub recall: Option<f64>,
    pub matches: usize,
}

/// Greedy one-to-one matching within `margin`, closest pairs first (ties by
/// predicted then true index).
pub fn precision_recall(pred: &[usize], truth: &[usize], margin: usize) -> PrecisionRecall {
    let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
    for (i, &p) in pred.iter().enumerate() {
        for (j, &t) in truth.iter().enumerate() {
            let d = p.abs_diff(t);
            if d <= margin {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_unstable();
    let mut used_pred = vec![false; pred.len()];
    let mut used_truth = vec![false; truth.len()];
    let mut matches = 0;
    for (_, i, j) in pairs {
        if !used_pred[i] && !used_truth[j] {
            used_pred[i] = true;
            used_truth[j] = true;
            matches += 1;
        }
    }
    let ratio = |den: usize| (den > 0).then(|| matches as f64 / den as f64);
    PrecisionRecall {
        precision: ratio(pred.len()),
        recall: ratio(truth.len()),
        matches,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Hausdorff,
    RandIndex,
    Precision(usize),
    Recall(usize),
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Hausdorff => "hausdorff",
            Metric::RandIndex => "rand_index",
            Metric::Precision(_) => "precision",
            Metric::Recall(_) => "recall",
        }
    }

    pub fn margin(self) -> Option<usize> {
        match self {
            Metric::Precision(m) | Metric::Recall(m) => Some(m),
            _ => None,
        }
    }

    /// Hausdorff, rand index, then precision and recall at each margin.
    pub fn table_order() -> Vec<Metric> {
        let mut v = vec![Metric::Hausdorff, Metric::RandIndex];
        v.extend(MARGINS.iter().map(|&m| Metric::Precision(m)));
        v.extend(MARGINS.iter().map(|&m| Metric::Recall(m)));
        v
    }
}

/// All metrics for one (chain, method) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainEval {
    pub chain_id: String,
    pub method: String,
    pub values: BTreeMap<Metric, Option<f64>>,
}

impl ChainEval {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        self.values.get(&metric).copied().flatten()
    }
}

/// Scores predicted breakpoints (ending at `n`) against consensus change
/// points (no sentinel).
pub fn evaluate_chain(
    chain_id: &str,
    method: &str,
    predicted: &ChangePointSet,
    consensus: &[usize],
) -> Result<ChainEval> {
    let n = predicted.signal_len();
    let pred = predicted.change_points();
    let truth_bkps = ChangePointSet::from_change_points(consensus, n)?;
    let mut values = BTreeMap::new();
    values.insert(Metric::Hausdorff, hausdorff(pred, consensus));
    values.insert(
        Metric::RandIndex,
        Some(rand_index(predicted.breakpoints(), truth_bkps.breakpoints(), n)?),
    );
    for m in MARGINS {
        let pr = precision_recall(pred, consensus, m);
        values.insert(Metric::Precision(m), pr.precision);
        values.insert(Metric::Recall(m), pr.recall);
    }
    Ok(ChainEval {
        chain_id: chain_id.to_string(),
        method: method.to_string(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricAggregate {
    pub metric: Metric,
    pub mean: f64,
    pub median: f64,
    pub n_valid: usize,
    pub n_excluded: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Method name -> aggregates in [`Metric::table_order`].
    pub methods: BTreeMap<String, Vec<MetricAggregate>>,
}

impl EvalReport {
    pub fn get(&self, method: &str, metric: Metric) -> Option<&MetricAggregate> {
        self.methods.get(method)?.iter().find(|a| a.metric == metric)
    }
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    })
}

/// Mean and median of each metric per method over the chains where the
/// metric is defined.
pub fn aggregate_report(rows: &[ChainEval]) -> EvalReport {
    let mut by_method: BTreeMap<&str, Vec<&ChainEval>> = BTreeMap::new();
    for r in rows {
        by_method.entry(r.method.as_str()).or_default().push(r);
    }
    let mut report = EvalReport::default();
    for (method, evals) in by_method {
        let mut aggs = Vec::new();
        for metric in Metric::table_order() {
            let mut values: Vec<f64> = evals.iter().filter_map(|e| e.get(metric)).collect();
            let excluded = evals.len() - values.len();
            let Some(med) = median(&mut values) else {
                log::warn!(
                    "{method}: {}{} undefined on every chain, omitted",
                    metric.name(),
                    metric.margin().map(|m| format!("@{m}")).unwrap_or_default()
                );
                continue;
            };
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            aggs.push(MetricAggregate {
                metric,
                mean,
                median: med,
                n_valid: values.len(),
                n_excluded: excluded,
            });
        }
        report.methods.insert(method.to_string(), aggs);
    }
    report
}
