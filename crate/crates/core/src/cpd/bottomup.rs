use super::{
    check_min_size, check_n_bkps, check_penalty, ChangePointSet, CostFunction, FittedCost, Signal,
    Stopping,
};
use crate::error::{Error, Result};

/// Greedy bottom-up segmentation.
///
/// Starts from breakpoints every `min_size` samples and repeatedly removes
/// the one whose removal raises the total cost least, until `n_bkps` remain
/// or the cheapest removal would cost more than the penalty.
pub fn detect_bottomup(
    signal: &Signal,
    cost: &CostFunction,
    stopping: Stopping,
    min_size: usize,
) -> Result<ChangePointSet> {
    bottomup(&cost.fit(signal)?, stopping, min_size)
}

pub(crate) fn bottomup(
    cost: &FittedCost,
    stopping: Stopping,
    min_size: usize,
) -> Result<ChangePointSet> {
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

    // Grid of multiples of min_size; the last segment absorbs any remainder.
    let mut bkps: Vec<usize> = (1..n / min_size).map(|i| i * min_size).collect();
    bkps.push(n);

    loop {
        let interior = bkps.len() - 1;
        if let Stopping::NBkps(k) = stopping {
            if interior == k {
                break;
            }
        }
        if interior == 0 {
            break;
        }
        let mut best: Option<(f64, usize)> = None;
        let mut start = 0;
        for i in 0..interior {
            let (b, end) = (bkps[i], bkps[i + 1]);
            let increase =
                cost.segment_cost(start, end) - cost.segment_cost(start, b) - cost.segment_cost(b, end);
            if best.is_none_or(|(c, _)| increase < c) {
                best = Some((increase, i));
            }
            start = b;
        }
        let (increase, i) = best.expect("at least one interior breakpoint");
        if let Stopping::Penalty(p) = stopping {
            if increase > p {
                break;
            }
        }
        bkps.remove(i);
    }
    Ok(ChangePointSet::from_sorted(bkps[..bkps.len() - 1].to_vec(), n))
}
