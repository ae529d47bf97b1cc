//! Sparse row-stochastic appraisal graphs.
//!
//! Row `i` of a [`Graph`] holds the weights user `i` assigns to the opinions
//! of its out-neighbors (itself included when it has a self-loop). Every row
//! sums to one, so the graph doubles as the transition matrix of a Markov
//! chain whose stationary distribution is the eigenvector centrality.

mod generate;
mod io;
mod validate;

pub use generate::{generate_scale_free, ScaleFreeParams};
pub use io::{read_graph, write_graph};
pub use validate::{validate, ValidationReport};

use thiserror::Error;

/// Row-sum tolerance for graphs built in memory.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Row-sum tolerance for graphs parsed from decimal text.
pub const LOAD_ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph has no nodes")]
    Empty,
    #[error("node {node} out of range for a graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("edge ({src}, {dst}) has weight {weight} outside (0, 1]")]
    BadWeight { src: usize, dst: usize, weight: f64 },
    #[error("duplicate edge ({src}, {dst})")]
    DuplicateEdge { src: usize, dst: usize },
    #[error("row {row} sums to {sum}, not 1")]
    RowSum { row: usize, sum: f64 },
    #[error("edge ({src}, {dst}) already present")]
    EdgeExists { src: usize, dst: usize },
    #[error("cannot add a self-loop at node {node}")]
    SelfLoopAddition { node: usize },
    #[error("edge weight theta = {0} outside (0, 1]")]
    ThetaOutOfRange(f64),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid generator parameters: {0}")]
    Generator(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A new directed edge `(r, c)` with appraisal weight `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgePerturbation {
    pub r: usize,
    pub c: usize,
    pub theta: f64,
}

impl EdgePerturbation {
    pub fn new(r: usize, c: usize, theta: f64) -> Result<Self, GraphError> {
        if r == c {
            return Err(GraphError::SelfLoopAddition { node: r });
        }
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(GraphError::ThetaOutOfRange(theta));
        }
        Ok(Self { r, c, theta })
    }
}

/// Immutable row-stochastic sparse graph with dense `0..n` node ids.
///
/// Rows are kept sorted by destination so single-weight lookups are a binary
/// search.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    rows: Vec<Vec<(usize, f64)>>,
}

impl Graph {
    /// Builds a graph from per-node out-neighborhoods, checking every invariant
    /// at [`ROW_SUM_TOL`].
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Result<Self, GraphError> {
        Self::from_rows_with_tolerance(rows, ROW_SUM_TOL)
    }

    pub(crate) fn from_rows_with_tolerance(
        mut rows: Vec<Vec<(usize, f64)>>,
        tol: f64,
    ) -> Result<Self, GraphError> {
        let n = rows.len();
        if n == 0 {
            return Err(GraphError::Empty);
        }
        for (src, row) in rows.iter_mut().enumerate() {
            row.sort_by_key(|&(dst, _)| dst);
            for pair in row.windows(2) {
                if pair[0].0 == pair[1].0 {
                    return Err(GraphError::DuplicateEdge { src, dst: pair[0].0 });
                }
            }
            for &(dst, weight) in row.iter() {
                if dst >= n {
                    return Err(GraphError::NodeOutOfRange { node: dst, n });
                }
                if !(weight > 0.0 && weight <= 1.0) {
                    return Err(GraphError::BadWeight { src, dst, weight });
                }
            }
            let sum: f64 = row.iter().map(|&(_, w)| w).sum();
            if (sum - 1.0).abs() > tol {
                return Err(GraphError::RowSum { row: src, sum });
            }
        }
        Ok(Self { rows })
    }

    /// Builds a graph from `(src, dst, weight)` triples over `n` nodes.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self, GraphError> {
        let mut rows = vec![Vec::new(); n];
        for &(src, dst, w) in edges {
            if src >= n {
                return Err(GraphError::NodeOutOfRange { node: src, n });
            }
            rows[src].push((dst, w));
        }
        Self::from_rows(rows)
    }

    /// Row-normalized binary adjacency of an undirected graph: every node
    /// weighs each of its neighbors equally.
    pub fn uniform_undirected(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut nbrs = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(GraphError::NodeOutOfRange { node: a.max(b), n });
            }
            nbrs[a].push(b);
            if a != b {
                nbrs[b].push(a);
            }
        }
        let rows = nbrs
            .into_iter()
            .map(|list| {
                let w = 1.0 / list.len() as f64;
                list.into_iter().map(|j| (j, w)).collect()
            })
            .collect();
        Self::from_rows(rows)
    }

    pub fn node_count(&self) -> usize {
        self.rows.len()
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Out-neighborhood of `i` as `(destination, weight)` pairs sorted by
    /// destination.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[(usize, f64)]> {
        self.rows.iter().map(Vec::as_slice)
    }

    /// All edges as `(src, dst, weight)` in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(j, w)| (i, j, w)))
    }

    /// `w_ij`, zero when the edge is absent.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let row = &self.rows[i];
        match row.binary_search_by_key(&j, |&(dst, _)| dst) {
            Ok(pos) => row[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.rows[i].binary_search_by_key(&j, |&(dst, _)| dst).is_ok()
    }

    /// True when `w_ii` exceeds every other weight in row `i`.
    pub fn is_rationally_selfish(&self, i: usize) -> bool {
        let own = self.weight(i, i);
        self.rows[i].iter().all(|&(j, w)| j == i || own > w)
    }

    pub fn max_row_sum_deviation(&self) -> f64 {
        self.rows
            .iter()
            .map(|row| (row.iter().map(|&(_, w)| w).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Adds edge `(r, c)` with weight `theta`, scaling the rest of row `r` by
    /// `1 - theta`. All other rows are shared unchanged.
    pub fn add_edge_perturbed(&self, p: &EdgePerturbation) -> Result<Graph, GraphError> {
        let n = self.node_count();
        for node in [p.r, p.c] {
            if node >= n {
                return Err(GraphError::NodeOutOfRange { node, n });
            }
        }
        let p = EdgePerturbation::new(p.r, p.c, p.theta)?;
        if self.has_edge(p.r, p.c) {
            return Err(GraphError::EdgeExists { src: p.r, dst: p.c });
        }
        let keep = 1.0 - p.theta;
        let old = &self.rows[p.r];
        let mut row = Vec::with_capacity(old.len() + 1);
        row.extend(
            old.iter()
                .map(|&(j, w)| (j, keep * w))
                .filter(|&(_, w)| w > 0.0),
        );
        let pos = row.partition_point(|&(j, _)| j < p.c);
        row.insert(pos, (p.c, p.theta));
        let mut rows = self.rows.clone();
        rows[p.r] = row;
        Ok(Graph { rows })
    }

    /// Reversed adjacency (ignoring weights), used for connectivity checks.
    pub(crate) fn predecessors(&self) -> Vec<Vec<usize>> {
        let mut preds = vec![Vec::new(); self.node_count()];
        for (i, j, _) in self.edges() {
            preds[j].push(i);
        }
        preds
    }
}
