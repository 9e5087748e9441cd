//! Offline change-point detection.
//!
//! Four search methods over a common set of segment costs:
//!
//! | method      | objective                                   | exact? |
//! |-------------|---------------------------------------------|--------|
//! | [`detect_pelt`]      | costs + penalty per change point     | yes    |
//! | [`detect_kernelcpd`] | kernel costs, fixed count or penalty | yes    |
//! | [`detect_binseg`]    | greedy top-down splitting            | no     |
//! | [`detect_bottomup`]  | greedy merging from a fine grid      | no     |
//!
//! Breakpoints follow the usual convention: strictly increasing segment ends,
//! the last one equal to the signal length. Ties go to the earliest index.

mod binseg;
mod bottomup;
mod cost;
mod dynp;
mod pelt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use binseg::detect_binseg;
pub use bottomup::detect_bottomup;
pub use cost::{median_heuristic_gamma, CostFunction, FittedCost};
pub use dynp::{detect_kernelcpd, Kernel};
pub use pelt::detect_pelt;

pub const DEFAULT_MIN_SIZE: usize = 2;

/// A sequence of `n >= 2` equal-dimension real vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    values: Vec<f64>,
    dim: usize,
}

impl Signal {
    pub fn univariate(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec(), 1)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            if r.as_ref().len() != dim {
                return Err(Error::Signal(format!(
                    "row {i} has dimension {}, expected {dim}",
                    r.as_ref().len()
                )));
            }
            values.extend_from_slice(r.as_ref());
        }
        Self::new(values, dim)
    }

    fn new(values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Signal("dimension must be at least 1".into()));
        }
        let n = values.len() / dim;
        if n < 2 {
            return Err(Error::SignalTooShort { len: n, required: 2 });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Signal("values must be finite".into()));
        }
        Ok(Signal { values, dim })
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }
}

/// Segment ends in `(0, n]`, strictly increasing, last element `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChangePointSet {
    breakpoints: Vec<usize>,
}

impl ChangePointSet {
    pub fn new(breakpoints: Vec<usize>, n: usize) -> Result<Self> {
        let ok = breakpoints.last() == Some(&n)
            && breakpoints.first().is_some_and(|&b| b > 0)
            && breakpoints.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(Error::Signal(format!(
                "invalid breakpoints {breakpoints:?} for length {n}"
            )));
        }
        Ok(ChangePointSet { breakpoints })
    }

    /// Builds a set from interior change points (without the end sentinel).
    pub fn from_change_points(points: &[usize], n: usize) -> Result<Self> {
        let mut b = points.to_vec();
        b.push(n);
        Self::new(b, n)
    }

    pub(crate) fn from_sorted(mut interior: Vec<usize>, n: usize) -> Self {
        interior.push(n);
        debug_assert!(interior.windows(2).all(|w| w[0] < w[1]));
        ChangePointSet {
            breakpoints: interior,
        }
    }

    pub fn breakpoints(&self) -> &[usize] {
        &self.breakpoints
    }

    /// Interior change points, without the end sentinel.
    pub fn change_points(&self) -> &[usize] {
        &self.breakpoints[..self.breakpoints.len() - 1]
    }

    pub fn signal_len(&self) -> usize {
        *self.breakpoints.last().expect("non-empty")
    }

    pub fn n_segments(&self) -> usize {
        self.breakpoints.len()
    }

    /// Shortest segment length.
    pub fn min_segment_len(&self) -> usize {
        let mut prev = 0;
        let mut min = usize::MAX;
        for &b in &self.breakpoints {
            min = min.min(b - prev);
            prev = b;
        }
        min
    }
}

/// When a search stops: after a fixed number of change points, or when a
/// further change point costs more than the penalty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stopping {
    NBkps(usize),
    Penalty(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pelt,
    KernelCpd,
    Binseg,
    BottomUp,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Pelt, Method::KernelCpd, Method::BottomUp, Method::Binseg];

    pub fn name(self) -> &'static str {
        match self {
            Method::Pelt => "pelt",
            Method::KernelCpd => "kernelcpd",
            Method::Binseg => "binseg",
            Method::BottomUp => "bottomup",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "pelt" => Ok(Method::Pelt),
            "kernelcpd" | "kernel" => Ok(Method::KernelCpd),
            "binseg" => Ok(Method::Binseg),
            "bottomup" => Ok(Method::BottomUp),
            other => Err(Error::config(format!("unknown search method `{other}`"))),
        }
    }
}

/// Median of the chi-square distribution with one degree of freedom.
const CHI2_1_MEDIAN: f64 = 0.454_936_423_119_572_8;

/// Robust per-sample noise dispersion in the cost's own units.
///
/// Each window of `min_interval + 1` consecutive samples has one residual
/// degree of freedom, so under Gaussian noise its cost is `s^2 * chi2(1)`
/// (exactly for l2 and linear, to first order for kernels). The median over
/// all windows ignores the few windows that straddle a change. Falls back
/// to the whole-signal dispersion `cost(0, n) / (n - 1)` when the median is
/// zero or there are too few samples.
pub fn noise_dispersion(cost: &FittedCost) -> f64 {
    let n = cost.len();
    let w = cost.function().min_interval() + 1;
    if n > w {
        let mut local: Vec<f64> = (0..=n - w).map(|t| cost.segment_cost(t, t + w)).collect();
        local.sort_by(f64::total_cmp);
        let mid = local.len() / 2;
        let median = if local.len() % 2 == 1 {
            local[mid]
        } else {
            0.5 * (local[mid - 1] + local[mid])
        };
        if median > 0.0 {
            return median / CHI2_1_MEDIAN;
        }
    }
    cost.segment_cost(0, n) / (n as f64 - 1.0)
}

/// Default penalty per change point: `2 * s^2 * ln(n)` with `s^2` from
/// [`noise_dispersion`].
pub fn default_penalty(cost: &FittedCost) -> f64 {
    let n = cost.len();
    let penalty = 2.0 * noise_dispersion(cost) * (n as f64).ln();
    if penalty > 0.0 {
        penalty
    } else {
        // Constant under the cost: every split gains nothing, so any penalty
        // well above rounding noise rejects them all.
        1.0
    }
}

pub(crate) fn check_min_size(cost: &FittedCost, min_size: usize) -> Result<()> {
    let need = cost.function().min_interval();
    if min_size < need {
        return Err(Error::config(format!(
            "min_size {min_size} is below the {} cost's minimum interval {need}",
            cost.function().name()
        )));
    }
    Ok(())
}

pub(crate) fn check_penalty(penalty: f64) -> Result<()> {
    if penalty > 0.0 {
        Ok(())
    } else {
        Err(Error::config(format!("penalty must be positive, got {penalty}")))
    }
}

/// Largest change-point count a signal of length `n` can hold.
pub fn max_change_points(n: usize, min_size: usize) -> usize {
    (n / min_size).saturating_sub(1)
}

pub(crate) fn check_n_bkps(n: usize, n_bkps: usize, min_size: usize) -> Result<()> {
    let max = max_change_points(n, min_size);
    if n_bkps > max {
        return Err(Error::config(format!(
            "cannot place {n_bkps} change points in a signal of length {n} with min_size {min_size} (max {max})"
        )));
    }
    Ok(())
}

/// A detector configuration applied to whole signals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detector {
    pub method: Method,
    pub cost: CostFunction,
    /// `None` uses [`default_penalty`].
    pub stopping: Option<Stopping>,
    pub min_size: usize,
}

impl Detector {
    pub fn new(method: Method, cost: CostFunction) -> Self {
        Detector {
            method,
            cost,
            stopping: None,
            min_size: DEFAULT_MIN_SIZE,
        }
    }

    pub fn with_stopping(mut self, stopping: Stopping) -> Self {
        self.stopping = Some(stopping);
        self
    }

    pub fn with_min_size(mut self, min_size: usize) -> Self {
        self.min_size = min_size;
        self
    }

    /// Runs the detector; returns the breakpoints and the stopping rule used.
    pub fn detect(&self, signal: &Signal) -> Result<(ChangePointSet, Stopping)> {
        let fitted = self.cost.fit(signal)?;
        let stopping = match self.stopping {
            Some(Stopping::NBkps(k)) if self.method == Method::Pelt => {
                return Err(Error::config(format!(
                    "pelt is penalized only; got n_bkps = {k}"
                )))
            }
            Some(s) => s,
            None => Stopping::Penalty(default_penalty(&fitted)),
        };
        let cps = match self.method {
            Method::Pelt => match stopping {
                Stopping::Penalty(p) => pelt::pelt(&fitted, p, self.min_size)?,
                Stopping::NBkps(_) => unreachable!(),
            },
            Method::KernelCpd => {
                Kernel::try_from(self.cost)?;
                dynp::kernelcpd(&fitted, stopping, self.min_size)?
            }
            Method::Binseg => binseg::binseg(&fitted, stopping, self.min_size)?,
            Method::BottomUp => bottomup::bottomup(&fitted, stopping, self.min_size)?,
        };
        Ok((cps, stopping))
    }
}
