//! Mean first passage times `m_ij`: the expected number of steps a walk
//! started at `i` needs to reach `j` (return time when `i == j`).

mod estimate;
mod exact;

pub use estimate::{mfpt_estimate, walk_length_default, WalkParams};
pub use exact::{mfpt_exact, ExactOptions, DEFAULT_DENSE_CAP};

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::graph::Graph;
use crate::spectral::CentralityVector;

#[derive(Debug, Error)]
pub enum MfptError {
    #[error("{n} nodes exceed the dense cap of {cap}")]
    DenseCapExceeded { n: usize, cap: usize },
    #[error("fundamental matrix is singular; the chain is not ergodic")]
    Singular,
    #[error("dimension mismatch: graph has {graph} nodes, centrality has {pi}")]
    DimensionMismatch { graph: usize, pi: usize },
    #[error("no target nodes given")]
    NoTargets,
    #[error("walk length must be at least 1")]
    EmptyWalk,
    #[error("node {node} out of range for {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("table does not cover m({i}, {j})")]
    Uncovered { i: usize, j: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfptMode {
    ExactFull,
    EstimatedPartial,
}

/// Either the full `n × n` table or walk estimates to a set of target nodes
/// (`m_it` for every `i`) and from a set of source nodes (`m_sj` for every
/// `j`).
#[derive(Debug, Clone)]
pub struct MfptTable {
    n: usize,
    inner: Inner,
}

#[derive(Debug, Clone)]
enum Inner {
    Exact(Vec<f64>),
    Estimated(Estimates),
}

#[derive(Debug, Clone)]
struct Estimates {
    walk_len: u64,
    targets: Vec<usize>,
    target_slot: Vec<Option<usize>>,
    /// Node-major: `[i * targets.len() + t]`.
    to_mean: Vec<f64>,
    to_count: Vec<u64>,
    /// Per target, the value used for entries with zero samples.
    to_fill: Vec<f64>,
    sources: Vec<usize>,
    source_slot: Vec<Option<usize>>,
    /// Source-major: `[s * n + j]`.
    from_mean: Vec<f64>,
    from_count: Vec<u64>,
    from_fill: Vec<f64>,
}

impl MfptTable {
    pub(crate) fn exact(n: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), n * n);
        Self { n, inner: Inner::Exact(values) }
    }

    pub fn mode(&self) -> MfptMode {
        match self.inner {
            Inner::Exact(_) => MfptMode::ExactFull,
            Inner::Estimated(_) => MfptMode::EstimatedPartial,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Stationary distribution implied by an exact table, `1 / m_jj`.
    pub fn stationary(&self) -> Option<Vec<f64>> {
        match &self.inner {
            Inner::Exact(v) => Some((0..self.n).map(|j| 1.0 / v[j * self.n + j]).collect()),
            Inner::Estimated(_) => None,
        }
    }

    /// Target nodes of an estimated table; empty for exact tables.
    pub fn targets(&self) -> &[usize] {
        match &self.inner {
            Inner::Exact(_) => &[],
            Inner::Estimated(e) => &e.targets,
        }
    }

    pub fn sources(&self) -> &[usize] {
        match &self.inner {
            Inner::Exact(_) => &[],
            Inner::Estimated(e) => &e.sources,
        }
    }

    /// Whether the table is meant to hold `m_ij`, sampled or not.
    pub fn covers(&self, i: usize, j: usize) -> bool {
        if i >= self.n || j >= self.n {
            return false;
        }
        match &self.inner {
            Inner::Exact(_) => true,
            Inner::Estimated(e) => e.target_slot[j].is_some() || e.source_slot[i].is_some(),
        }
    }

    /// Observed value of `m_ij`: `None` when uncovered or when the walk never
    /// produced a sample for it.
    pub fn raw(&self, i: usize, j: usize) -> Option<f64> {
        if i >= self.n || j >= self.n {
            return None;
        }
        match &self.inner {
            Inner::Exact(v) => Some(v[i * self.n + j]),
            Inner::Estimated(e) => e.lookup(self.n, i, j).and_then(|(mean, count, _)| (count > 0).then_some(mean)),
        }
    }

    /// Number of first-passage samples behind `m_ij`; `None` for exact tables
    /// and uncovered entries.
    pub fn samples(&self, i: usize, j: usize) -> Option<u64> {
        match &self.inner {
            Inner::Exact(_) => None,
            Inner::Estimated(e) => e.lookup(self.n, i, j).map(|(_, count, _)| count),
        }
    }

    /// `m_ij` for downstream use. Covered entries that never received a sample
    /// are replaced by `n` times the mean observed passage time to that target
    /// (or from that source).
    pub fn value(&self, i: usize, j: usize) -> Result<f64, MfptError> {
        if i >= self.n || j >= self.n {
            return Err(MfptError::Uncovered { i, j });
        }
        match &self.inner {
            Inner::Exact(v) => Ok(v[i * self.n + j]),
            Inner::Estimated(e) => match e.lookup(self.n, i, j) {
                Some((mean, count, fill)) => Ok(if count > 0 { mean } else { fill }),
                None => Err(MfptError::Uncovered { i, j }),
            },
        }
    }

    /// Covered entries without a single sample.
    pub fn missing_entries(&self) -> usize {
        match &self.inner {
            Inner::Exact(_) => 0,
            Inner::Estimated(e) => {
                let to = e.to_count.iter().filter(|&&c| c == 0).count();
                let from = e
                    .sources
                    .iter()
                    .enumerate()
                    .map(|(s, _)| {
                        (0..self.n)
                            .filter(|&j| e.target_slot[j].is_none() && e.from_count[s * self.n + j] == 0)
                            .count()
                    })
                    .sum::<usize>();
                to + from
            }
        }
    }

    /// Targets that never collected a sample from any node.
    pub fn unsampled_targets(&self) -> Vec<usize> {
        match &self.inner {
            Inner::Exact(_) => Vec::new(),
            Inner::Estimated(e) => {
                let nt = e.targets.len();
                e.targets
                    .iter()
                    .enumerate()
                    .filter(|&(t, _)| (0..self.n).all(|i| e.to_count[i * nt + t] == 0))
                    .map(|(_, &node)| node)
                    .collect()
            }
        }
    }

    pub fn walk_len(&self) -> Option<u64> {
        match &self.inner {
            Inner::Exact(_) => None,
            Inner::Estimated(e) => Some(e.walk_len),
        }
    }

    /// CSV with header `i,j,value,samples`. Exact tables leave `samples`
    /// empty; unsampled estimates leave `value` empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,value,samples\n");
        match &self.inner {
            Inner::Exact(v) => {
                for i in 0..self.n {
                    for j in 0..self.n {
                        let _ = writeln!(out, "{i},{j},{},", v[i * self.n + j]);
                    }
                }
            }
            Inner::Estimated(e) => {
                let nt = e.targets.len();
                for i in 0..self.n {
                    for (t, &j) in e.targets.iter().enumerate() {
                        push_estimate(&mut out, i, j, e.to_mean[i * nt + t], e.to_count[i * nt + t]);
                    }
                }
                for (s, &i) in e.sources.iter().enumerate() {
                    for j in (0..self.n).filter(|&j| e.target_slot[j].is_none()) {
                        push_estimate(&mut out, i, j, e.from_mean[s * self.n + j], e.from_count[s * self.n + j]);
                    }
                }
            }
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), MfptError> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

fn push_estimate(out: &mut String, i: usize, j: usize, mean: f64, count: u64) {
    if count > 0 {
        let _ = writeln!(out, "{i},{j},{mean},{count}");
    } else {
        let _ = writeln!(out, "{i},{j},,0");
    }
}

impl Estimates {
    /// `(mean, samples, fill)` for a covered entry. Estimates to a target take
    /// precedence over estimates from a source.
    fn lookup(&self, n: usize, i: usize, j: usize) -> Option<(f64, u64, f64)> {
        if let Some(t) = self.target_slot[j] {
            let k = i * self.targets.len() + t;
            return Some((self.to_mean[k], self.to_count[k], self.to_fill[t]));
        }
        self.source_slot[i].map(|s| {
            let k = s * n + j;
            (self.from_mean[k], self.from_count[k], self.from_fill[s])
        })
    }
}

/// Largest `|m_ij − 1 − Σ_{k≠j} w_ik m_kj|` over all covered pairs whose
/// right-hand side is fully covered.
pub fn one_hop_residual(g: &Graph, table: &MfptTable) -> f64 {
    let n = g.node_count();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let Some(m_ij) = table.raw(i, j) else { continue };
            let mut rhs = 1.0;
            let mut complete = true;
            for &(k, w) in g.row(i) {
                if k == j {
                    continue;
                }
                match table.raw(k, j) {
                    Some(m) => rhs += w * m,
                    None => {
                        complete = false;
                        break;
                    }
                }
            }
            if complete {
                worst = worst.max((m_ij - rhs).abs());
            }
        }
    }
    worst
}

/// Largest `|m_ii π_i − 1|` over the covered diagonal.
pub fn return_time_residual(pi: &CentralityVector, table: &MfptTable) -> f64 {
    (0..pi.len())
        .filter_map(|i| table.raw(i, i).map(|m| (m * pi.values[i] - 1.0).abs()))
        .fold(0.0, f64::max)
}

/// Kemeny's constant seen from every start state, `Σ_{j≠k} π_j m_kj`.
pub fn kemeny_by_start(pi: &[f64], table: &MfptTable) -> Option<Vec<f64>> {
    let n = pi.len();
    (0..n)
        .map(|k| {
            (0..n)
                .filter(|&j| j != k)
                .map(|j| table.raw(k, j).map(|m| pi[j] * m))
                .sum::<Option<f64>>()
        })
        .collect()
}
