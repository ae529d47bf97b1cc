//! Eigenvector centrality by power iteration and the consensus value it
//! induces.

use thiserror::Error;

use crate::graph::Graph;
use crate::opinion::Opinions;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 10_000;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("power method stalled after {iterations} iterations at L1 residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("start vector must be non-negative with positive mass")]
    BadStart,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER }
    }
}

/// L1-normalized dominant left eigenvector of a row-stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityVector {
    pub values: Vec<f64>,
    /// `‖πᵀW − πᵀ‖₁` of `values`.
    pub residual: f64,
    pub iterations: usize,
}

impl CentralityVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Node ids sorted by descending centrality, ties by ascending id.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.values.len()).collect();
        order.sort_by(|&a, &b| self.values[b].total_cmp(&self.values[a]).then(a.cmp(&b)));
        order
    }

    pub fn argmax(&self) -> usize {
        self.ranking()[0]
    }
}

pub fn eigencentrality(g: &Graph, opts: PowerOptions) -> Result<CentralityVector, SpectralError> {
    let n = g.node_count();
    eigencentrality_from(g, vec![1.0 / n as f64; n], opts)
}

/// Power iteration started from `start`, which is normalized first.
pub fn eigencentrality_from(
    g: &Graph,
    mut pi: Vec<f64>,
    opts: PowerOptions,
) -> Result<CentralityVector, SpectralError> {
    let n = g.node_count();
    if pi.len() != n {
        return Err(SpectralError::DimensionMismatch { left: pi.len(), right: n });
    }
    let mass: f64 = pi.iter().sum();
    if !(mass > 0.0) || pi.iter().any(|&v| v < 0.0) {
        return Err(SpectralError::BadStart);
    }
    pi.iter_mut().for_each(|v| *v /= mass);

    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for iteration in 0..=opts.max_iter {
        left_multiply(g, &pi, &mut next);
        residual = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        if residual <= opts.tol {
            return Ok(CentralityVector { values: pi, residual, iterations: iteration });
        }
        let norm: f64 = next.iter().sum();
        for (p, &q) in pi.iter_mut().zip(&next) {
            *p = q / norm;
        }
    }
    Err(SpectralError::NotConverged { iterations: opts.max_iter, residual })
}

/// `out = πᵀ W`.
pub(crate) fn left_multiply(g: &Graph, pi: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (i, row) in g.rows().enumerate() {
        let mass = pi[i];
        for &(j, w) in row {
            out[j] += mass * w;
        }
    }
}

/// `⟨π, x⟩`, the value every opinion converges to.
pub fn consensus_value(pi: &CentralityVector, x: &Opinions) -> Result<f64, SpectralError> {
    if pi.len() != x.len() {
        return Err(SpectralError::DimensionMismatch { left: pi.len(), right: x.len() });
    }
    Ok(dot(&pi.values, x.as_slice()))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}
