use serde::{Deserialize, Serialize};

use super::{
    check_min_size, check_n_bkps, pelt::pelt, ChangePointSet, CostFunction, FittedCost, Signal,
    Stopping,
};
use crate::error::{Error, Result};

/// Kernels available to [`detect_kernelcpd`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    Rbf { gamma: Option<f64> },
    Cosine,
    /// Dot-product kernel; its dispersion is the l2 cost.
    Linear,
}

impl Kernel {
    pub fn cost(self) -> CostFunction {
        match self {
            Kernel::Rbf { gamma } => CostFunction::Rbf { gamma },
            Kernel::Cosine => CostFunction::Cosine,
            Kernel::Linear => CostFunction::L2,
        }
    }
}

impl TryFrom<CostFunction> for Kernel {
    type Error = Error;

    fn try_from(cost: CostFunction) -> Result<Self> {
        match cost {
            CostFunction::Rbf { gamma } => Ok(Kernel::Rbf { gamma }),
            CostFunction::Cosine => Ok(Kernel::Cosine),
            CostFunction::L2 => Ok(Kernel::Linear),
            CostFunction::Linear => Err(Error::config(
                "kernelcpd needs a kernel cost (rbf, cosine or l2/linear kernel)",
            )),
        }
    }
}

/// Exact kernel change-point detection.
///
/// With [`Stopping::NBkps`] a dynamic program finds the segmentation with
/// exactly that many change points and the least total kernel cost; with
/// [`Stopping::Penalty`] the penalized objective is minimized exactly.
pub fn detect_kernelcpd(
    signal: &Signal,
    kernel: Kernel,
    stopping: Stopping,
    min_size: usize,
) -> Result<ChangePointSet> {
    kernelcpd(&kernel.cost().fit(signal)?, stopping, min_size)
}

pub(crate) fn kernelcpd(
    cost: &FittedCost,
    stopping: Stopping,
    min_size: usize,
) -> Result<ChangePointSet> {
    match stopping {
        Stopping::Penalty(p) => pelt(cost, p, min_size),
        Stopping::NBkps(k) => fixed_count(cost, k, min_size),
    }
}

fn fixed_count(cost: &FittedCost, n_bkps: usize, min_size: usize) -> Result<ChangePointSet> {
    check_min_size(cost, min_size)?;
    let n = cost.len();
    if n_bkps == 0 {
        return Ok(ChangePointSet::from_sorted(Vec::new(), n));
    }
    check_n_bkps(n, n_bkps, min_size)?;

    let inf = f64::INFINITY;
    // table[j][s]: least cost of [0, s) cut into j + 1 segments.
    let mut table = vec![vec![inf; n + 1]; n_bkps + 1];
    let mut arg = vec![vec![0usize; n + 1]; n_bkps + 1];
    for s in min_size..=n {
        table[0][s] = cost.segment_cost(0, s);
    }
    for j in 1..=n_bkps {
        for s in (j + 1) * min_size..=n {
            let mut best = inf;
            let mut best_t = 0;
            for t in j * min_size..=s - min_size {
                let prev = table[j - 1][t];
                if prev == inf {
                    continue;
                }
                let v = prev + cost.segment_cost(t, s);
                if v < best {
                    best = v;
                    best_t = t;
                }
            }
            table[j][s] = best;
            arg[j][s] = best_t;
        }
    }

    let mut interior = Vec::with_capacity(n_bkps);
    let mut end = n;
    for j in (1..=n_bkps).rev() {
        end = arg[j][end];
        interior.push(end);
    }
    interior.reverse();
    Ok(ChangePointSet::from_sorted(interior, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(v: &[f64], k: usize) -> Vec<usize> {
        detect_kernelcpd(
            &Signal::univariate(v).unwrap(),
            Kernel::Rbf { gamma: None },
            Stopping::NBkps(k),
            2,
        )
        .unwrap()
        .breakpoints()
        .to_vec()
    }

    #[test]
    fn two_plateaus_rbf() {
        assert_eq!(run(&[0.0, 0.0, 0.0, 5.0, 5.0, 5.0], 1), vec![3, 6]);
    }

    #[test]
    fn zero_count_is_whole_signal() {
        assert_eq!(run(&[0.0, 1.0, 0.0, 5.0], 0), vec![4]);
    }

    #[test]
    fn three_plateaus_linear_kernel() {
        let v = [1.0, 1.0, 1.0, 4.0, 4.0, 4.0, 4.0, -2.0, -2.0];
        let out = detect_kernelcpd(&Signal::univariate(&v).unwrap(), Kernel::Linear, Stopping::NBkps(2), 2)
            .unwrap();
        assert_eq!(out.breakpoints(), &[3, 7, 9]);
    }

    #[test]
    fn infeasible_count() {
        let s = Signal::univariate(&[0.0; 6]).unwrap();
        // floor(6 / 2) - 1 = 2 change points at most
        assert!(detect_kernelcpd(&s, Kernel::Cosine, Stopping::NBkps(2), 2).is_ok());
        assert!(matches!(
            detect_kernelcpd(&s, Kernel::Cosine, Stopping::NBkps(3), 2),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn kernel_cost_mapping() {
        assert_eq!(Kernel::try_from(CostFunction::L2).unwrap(), Kernel::Linear);
        assert!(Kernel::try_from(CostFunction::Linear).is_err());
    }
}
