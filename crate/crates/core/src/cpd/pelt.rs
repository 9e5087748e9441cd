use super::{check_min_size, check_penalty, ChangePointSet, CostFunction, FittedCost, Signal};
use crate::error::{Error, Result};

/// Exact penalized segmentation by pruned dynamic programming.
///
/// Minimizes `sum(segment costs) + penalty * (segments - 1)` over all
/// segmentations whose segments have at least `min_size` samples.
pub fn detect_pelt(
    signal: &Signal,
    cost: &CostFunction,
    penalty: f64,
    min_size: usize,
) -> Result<ChangePointSet> {
    pelt(&cost.fit(signal)?, penalty, min_size)
}

pub(crate) fn pelt(cost: &FittedCost, penalty: f64, min_size: usize) -> Result<ChangePointSet> {
    check_penalty(penalty)?;
    check_min_size(cost, min_size)?;
    let n = cost.len();
    if n < 2 * min_size {
        return Err(Error::SignalTooShort {
            len: n,
            required: 2 * min_size,
        });
    }

    // best[s]: optimal objective of [0, s) plus one penalty, i.e. the price of
    // starting a new segment at s. best[0] = 0 since the first segment is free.
    let mut best = vec![f64::INFINITY; n + 1];
    let mut last = vec![0usize; n + 1];
    best[0] = 0.0;

    // (start, expires): a pruned start stays usable for ends below `expires`,
    // where the dominating path through a later start is not yet feasible.
    let mut candidates: Vec<(usize, Option<usize>)> = Vec::new();

    for end in min_size..=n {
        let newly = end - min_size;
        if newly == 0 || newly >= min_size {
            candidates.push((newly, None));
        }
        candidates.retain(|&(_, exp)| exp.is_none_or(|e| end < e));

        let mut value = f64::INFINITY;
        let mut arg = 0;
        for &(start, _) in &candidates {
            let v = best[start] + cost.segment_cost(start, end);
            if v < value {
                value = v;
                arg = start;
            }
        }
        best[end] = value + penalty;
        last[end] = arg;

        for (start, exp) in candidates.iter_mut() {
            if exp.is_none() && best[*start] + cost.segment_cost(*start, end) > best[end] {
                *exp = Some(end + min_size);
            }
        }
    }

    let mut interior = Vec::new();
    let mut end = n;
    while last[end] > 0 {
        end = last[end];
        interior.push(end);
    }
    interior.reverse();
    Ok(ChangePointSet::from_sorted(interior, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(v: &[f64], cost: CostFunction, pen: f64) -> Vec<usize> {
        detect_pelt(&Signal::univariate(v).unwrap(), &cost, pen, 2)
            .unwrap()
            .breakpoints()
            .to_vec()
    }

    #[test]
    fn two_plateaus() {
        assert_eq!(run(&[0.0, 0.0, 0.0, 5.0, 5.0, 5.0], CostFunction::L2, 1.0), vec![3, 6]);
    }

    #[test]
    fn constant_signal_has_no_change() {
        assert_eq!(run(&[2.0; 9], CostFunction::L2, 0.01), vec![9]);
        assert_eq!(run(&[2.0; 9], CostFunction::rbf(), 0.01), vec![9]);
    }

    #[test]
    fn huge_penalty_suppresses_changes() {
        let v = [0.0, 9.0, -3.0, 7.0, 1.0, 8.0];
        assert_eq!(run(&v, CostFunction::L2, 1e12), vec![6]);
        assert_eq!(run(&v, CostFunction::L2, f64::INFINITY), vec![6]);
    }

    #[test]
    fn errors() {
        let s = Signal::univariate(&[0.0, 1.0, 2.0]).unwrap();
        assert!(matches!(
            detect_pelt(&s, &CostFunction::L2, 1.0, 2),
            Err(Error::SignalTooShort { len: 3, required: 4 })
        ));
        assert!(detect_pelt(&s, &CostFunction::L2, 0.0, 1).is_err());
        assert!(detect_pelt(&s, &CostFunction::Linear, 1.0, 1).is_err());
    }
}
