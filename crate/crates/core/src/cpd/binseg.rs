use super::{
    check_min_size, check_n_bkps, check_penalty, ChangePointSet, CostFunction, FittedCost, Signal,
    Stopping,
};
use crate::error::{Error, Result};

/// Greedy binary segmentation.
///
/// Each step splits the segment whose best single split lowers the total cost
/// the most. Stops after `n_bkps` splits, or once the best gain falls below
/// the penalty.
pub fn detect_binseg(
    signal: &Signal,
    cost: &CostFunction,
    stopping: Stopping,
    min_size: usize,
) -> Result<ChangePointSet> {
    binseg(&cost.fit(signal)?, stopping, min_size)
}

/// Best split of `[a, b)`: (gain, split index).
fn best_split(cost: &FittedCost, a: usize, b: usize, min_size: usize) -> Option<(f64, usize)> {
    if b - a < 2 * min_size {
        return None;
    }
    let whole = cost.segment_cost(a, b);
    let mut best: Option<(f64, usize)> = None;
    for t in a + min_size..=b - min_size {
        let gain = whole - cost.segment_cost(a, t) - cost.segment_cost(t, b);
        if best.is_none_or(|(g, _)| gain > g) {
            best = Some((gain, t));
        }
    }
    best
}

pub(crate) fn binseg(cost: &FittedCost, stopping: Stopping, min_size: usize) -> Result<ChangePointSet> {
    check_min_size(cost, min_size)?;
    let n = cost.len();
    match stopping {
        Stopping::NBkps(k) => check_n_bkps(n, k, min_size)?,
        Stopping::Penalty(p) => {
            check_penalty(p)?;
            if n < 2 * min_size {
                return Err(Error::SignalTooShort {
                    len: n,
                    required: 2 * min_size,
                });
            }
        }
    }

    let mut bkps: Vec<usize> = vec![n];
    loop {
        if let Stopping::NBkps(k) = stopping {
            if bkps.len() - 1 == k {
                break;
            }
        }
        // Segments are scanned left to right, so ties go to the earliest split.
        let mut best: Option<(f64, usize)> = None;
        let mut start = 0;
        for &end in &bkps {
            if let Some((gain, t)) = best_split(cost, start, end, min_size) {
                if best.is_none_or(|(g, _)| gain > g) {
                    best = Some((gain, t));
                }
            }
            start = end;
        }
        let Some((gain, t)) = best else {
            if let Stopping::NBkps(k) = stopping {
                return Err(Error::config(format!(
                    "binseg placed {} of {k} change points; no segment can be split further",
                    bkps.len() - 1
                )));
            }
            break;
        };
        if let Stopping::Penalty(p) = stopping {
            if gain < p {
                break;
            }
        }
        let pos = bkps.partition_point(|&b| b < t);
        bkps.insert(pos, t);
    }
    Ok(ChangePointSet::from_sorted(bkps[..bkps.len() - 1].to_vec(), n))
}
