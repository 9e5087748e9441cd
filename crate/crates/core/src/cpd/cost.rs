use serde::{Deserialize, Serialize};

use super::Signal;
use crate::error::{Error, Result};

/// Within-segment cost functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostFunction {
    /// Squared deviation from the segment mean.
    L2,
    /// Kernel dispersion under `exp(-gamma * |u - v|^2)`. Without an explicit
    /// `gamma`, the median heuristic `1 / (2 * median^2)` over all pairwise
    /// distances of the signal is used.
    Rbf { gamma: Option<f64> },
    /// Residual sum of squares of a least-squares line against time.
    Linear,
    /// Kernel dispersion under cosine similarity; zero vectors have similarity 0.
    Cosine,
}

impl CostFunction {
    pub fn rbf() -> Self {
        CostFunction::Rbf { gamma: None }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CostFunction::L2 => "l2",
            CostFunction::Rbf { .. } => "rbf",
            CostFunction::Linear => "linear",
            CostFunction::Cosine => "cosine",
        }
    }

    /// Shortest interval the cost is defined on.
    pub fn min_interval(&self) -> usize {
        match self {
            CostFunction::Linear => 2,
            _ => 1,
        }
    }

    pub fn fit(&self, signal: &Signal) -> Result<FittedCost> {
        let inner = match *self {
            CostFunction::L2 => Fitted::L2(L2Tables::new(signal)),
            CostFunction::Linear => Fitted::Linear(LinearTables::new(signal)),
            CostFunction::Rbf { gamma } => {
                let gamma = match gamma {
                    Some(g) if g > 0.0 && g.is_finite() => g,
                    Some(g) => {
                        return Err(Error::config(format!(
                            "rbf gamma must be finite and positive, got {g}"
                        )))
                    }
                    None => median_heuristic_gamma(signal),
                };
                Fitted::Kernel(KernelTables::new(
                    signal,
                    |u, v| (-gamma * sq_dist(u, v)).exp(),
                    gamma,
                ))
            }
            CostFunction::Cosine => Fitted::Kernel(KernelTables::new(signal, cosine_similarity, 0.0)),
        };
        Ok(FittedCost {
            function: *self,
            n: signal.len(),
            inner,
        })
    }
}

impl std::str::FromStr for CostFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(CostFunction::L2),
            "rbf" => Ok(CostFunction::rbf()),
            "linear" => Ok(CostFunction::Linear),
            "cosine" => Ok(CostFunction::Cosine),
            other => Err(Error::config(format!("unknown cost function `{other}`"))),
        }
    }
}

fn sq_dist(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn cosine_similarity(u: &[f64], v: &[f64]) -> f64 {
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    (dot / (nu * nv)).clamp(-1.0, 1.0)
}

/// `1 / (2 * median^2)` of the pairwise Euclidean distances; falls back to 1
/// when the median distance is zero.
pub fn median_heuristic_gamma(signal: &Signal) -> f64 {
    let n = signal.len();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            dists.push(sq_dist(signal.row(i), signal.row(j)).sqrt());
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_by(f64::total_cmp);
    let mid = dists.len() / 2;
    let median = if dists.len() % 2 == 1 {
        dists[mid]
    } else {
        0.5 * (dists[mid - 1] + dists[mid])
    };
    if median == 0.0 {
        log::debug!("median pairwise distance is 0; using rbf gamma = 1");
        1.0
    } else {
        1.0 / (2.0 * median * median)
    }
}

/// A cost function with its per-signal tables, answering segment costs in O(1).
#[derive(Debug, Clone)]
pub struct FittedCost {
    function: CostFunction,
    n: usize,
    inner: Fitted,
}

#[derive(Debug, Clone)]
enum Fitted {
    L2(L2Tables),
    Linear(LinearTables),
    Kernel(KernelTables),
}

impl FittedCost {
    pub fn function(&self) -> CostFunction {
        self.function
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// The rbf bandwidth actually used, if this is an rbf cost.
    pub fn gamma(&self) -> Option<f64> {
        match (&self.function, &self.inner) {
            (CostFunction::Rbf { .. }, Fitted::Kernel(k)) => Some(k.gamma_hint),
            _ => None,
        }
    }

    /// Cost of `[start, end)`, checking bounds.
    pub fn cost(&self, start: usize, end: usize) -> Result<f64> {
        if start >= end || end > self.n || end - start < self.function.min_interval() {
            return Err(Error::Interval {
                start,
                end,
                len: self.n,
            });
        }
        Ok(self.segment_cost(start, end))
    }

    /// Cost of `[start, end)`; callers guarantee a valid interval.
    pub(crate) fn segment_cost(&self, start: usize, end: usize) -> f64 {
        let c = match &self.inner {
            Fitted::L2(t) => t.cost(start, end),
            Fitted::Linear(t) => t.cost(start, end),
            Fitted::Kernel(t) => t.cost(start, end),
        };
        c.max(0.0)
    }

    /// Sum of segment costs for a breakpoint list ending at `n`.
    pub fn total_cost(&self, breakpoints: &[usize]) -> f64 {
        let mut start = 0;
        let mut total = 0.0;
        for &b in breakpoints {
            total += self.segment_cost(start, b);
            start = b;
        }
        total
    }
}

fn prefix(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut acc = 0.0;
    for v in values {
        acc += v;
        out.push(acc);
    }
    out
}

#[derive(Debug, Clone)]
struct L2Tables {
    dim: usize,
    /// Per-dimension prefix sums of the centred values.
    sums: Vec<Vec<f64>>,
    sq: Vec<f64>,
}

impl L2Tables {
    fn new(signal: &Signal) -> Self {
        let n = signal.len();
        let dim = signal.dim();
        let means: Vec<f64> = (0..dim)
            .map(|d| (0..n).map(|i| signal.row(i)[d]).sum::<f64>() / n as f64)
            .collect();
        let centred = |i: usize, d: usize| signal.row(i)[d] - means[d];
        let sums = (0..dim)
            .map(|d| prefix((0..n).map(|i| centred(i, d))))
            .collect();
        let sq = prefix((0..n).map(|i| (0..dim).map(|d| centred(i, d).powi(2)).sum()));
        L2Tables { dim, sums, sq }
    }

    fn cost(&self, a: usize, b: usize) -> f64 {
        let m = (b - a) as f64;
        let mut c = self.sq[b] - self.sq[a];
        for d in 0..self.dim {
            let s = self.sums[d][b] - self.sums[d][a];
            c -= s * s / m;
        }
        c
    }
}

#[derive(Debug, Clone)]
struct LinearTables {
    dim: usize,
    t: Vec<f64>,
    tt: Vec<f64>,
    y: Vec<Vec<f64>>,
    ty: Vec<Vec<f64>>,
    yy: Vec<f64>,
}

impl LinearTables {
    fn new(signal: &Signal) -> Self {
        let n = signal.len();
        let dim = signal.dim();
        let mid = (n as f64 - 1.0) / 2.0;
        let time = |i: usize| i as f64 - mid;
        let means: Vec<f64> = (0..dim)
            .map(|d| (0..n).map(|i| signal.row(i)[d]).sum::<f64>() / n as f64)
            .collect();
        let y_at = |i: usize, d: usize| signal.row(i)[d] - means[d];
        LinearTables {
            dim,
            t: prefix((0..n).map(time)),
            tt: prefix((0..n).map(|i| time(i).powi(2))),
            y: (0..dim).map(|d| prefix((0..n).map(|i| y_at(i, d)))).collect(),
            ty: (0..dim)
                .map(|d| prefix((0..n).map(|i| time(i) * y_at(i, d))))
                .collect(),
            yy: prefix((0..n).map(|i| (0..dim).map(|d| y_at(i, d).powi(2)).sum())),
        }
    }

    fn cost(&self, a: usize, b: usize) -> f64 {
        let m = (b - a) as f64;
        let st = self.t[b] - self.t[a];
        let sxx = (self.tt[b] - self.tt[a]) - st * st / m;
        let mut rss = self.yy[b] - self.yy[a];
        for d in 0..self.dim {
            let sy = self.y[d][b] - self.y[d][a];
            let sxy = (self.ty[d][b] - self.ty[d][a]) - st * sy / m;
            rss -= sy * sy / m;
            if sxx > 0.0 {
                rss -= sxy * sxy / sxx;
            }
        }
        rss
    }
}

#[derive(Debug, Clone)]
struct KernelTables {
    n: usize,
    /// `(n+1) x (n+1)` two-dimensional prefix sums of the Gram matrix.
    block: Vec<f64>,
    diag: Vec<f64>,
    gamma_hint: f64,
}

impl KernelTables {
    fn new(signal: &Signal, kernel: impl Fn(&[f64], &[f64]) -> f64, gamma_hint: f64) -> Self {
        let n = signal.len();
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let k = kernel(signal.row(i), signal.row(j));
                gram[i * n + j] = k;
                gram[j * n + i] = k;
            }
        }
        let w = n + 1;
        let mut block = vec![0.0; w * w];
        for i in 0..n {
            let mut row_acc = 0.0;
            for j in 0..n {
                row_acc += gram[i * n + j];
                block[(i + 1) * w + (j + 1)] = block[i * w + (j + 1)] + row_acc;
            }
        }
        KernelTables {
            n,
            block,
            diag: prefix((0..n).map(|i| gram[i * n + i])),
            gamma_hint,
        }
    }

    fn sum(&self, a: usize, b: usize) -> f64 {
        let w = self.n + 1;
        self.block[b * w + b] - self.block[a * w + b] - self.block[b * w + a]
            + self.block[a * w + a]
    }

    fn cost(&self, a: usize, b: usize) -> f64 {
        (self.diag[b] - self.diag[a]) - self.sum(a, b) / (b - a) as f64
    }
}
