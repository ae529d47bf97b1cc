//! Closed-form effect of adding one edge `(r, c)` with weight `θ`.
//!
//! With `D = m_rr + θ(m_cr − m_rr + 1)`, the new centrality is
//!
//! ```text
//! π̃_j = π_j [1 − θ (m_cj (1 − δ_jc) − m_rj + 1) / D]
//! ```
//!
//! and the drop in consensus value for altered opinions `x̃` is
//!
//! ```text
//! f(r, c) = ⟨π, x̃⟩ − ⟨π̃, x̃⟩ = θ Σ_j π_j (m_cj (1 − δ_jc) − m_rj + 1) x̃_j / D.
//! ```
//!
//! Both require row `r` to weigh itself above every neighbor.

use std::fmt::Write as _;

use thiserror::Error;

use crate::graph::{EdgePerturbation, Graph, GraphError};
use crate::mfpt::{MfptError, MfptMode, MfptTable};
use crate::opinion::Opinions;
use crate::spectral::CentralityVector;

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error(transparent)]
    Edge(#[from] GraphError),
    #[error("missing passage time: {0}")]
    Mfpt(#[from] MfptError),
    #[error("row {row} is not rationally selfish; the closed form does not apply")]
    NotSelfish { row: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreMode {
    Exact,
    Truncated,
}

impl ScoreMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreMode::Exact => "exact",
            ScoreMode::Truncated => "truncated",
        }
    }
}

/// Which `j` enter the score's sum.
#[derive(Debug, Clone, Copy)]
pub enum NodeSubset<'a> {
    All,
    /// These nodes plus the edge's endpoints.
    Only(&'a [usize]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredEdge {
    pub r: usize,
    pub c: usize,
    pub theta: f64,
    pub score: f64,
    pub mode: ScoreMode,
    pub nodes_used: usize,
    /// Computed from walk-estimated passage times.
    pub estimated: bool,
}

impl ScoredEdge {
    pub fn perturbation(&self) -> EdgePerturbation {
        EdgePerturbation { r: self.r, c: self.c, theta: self.theta }
    }
}

/// Score dump with header `r,c,theta,score,mode`.
pub fn scores_to_csv(edges: &[ScoredEdge]) -> String {
    let mut out = String::from("r,c,theta,score,mode\n");
    for e in edges {
        let _ = writeln!(out, "{},{},{},{},{}", e.r, e.c, e.theta, e.score, e.mode.as_str());
    }
    out
}

/// A graph together with its centrality and passage times, ready to
/// evaluate candidate edges.
#[derive(Debug, Clone, Copy)]
pub struct PerturbationModel<'a> {
    graph: &'a Graph,
    pi: &'a CentralityVector,
    mfpt: &'a MfptTable,
    force: bool,
}

impl<'a> PerturbationModel<'a> {
    pub fn new(
        graph: &'a Graph,
        pi: &'a CentralityVector,
        mfpt: &'a MfptTable,
    ) -> Result<Self, ScoreError> {
        let n = graph.node_count();
        for got in [pi.len(), mfpt.node_count()] {
            if got != n {
                return Err(ScoreError::DimensionMismatch { expected: n, got });
            }
        }
        Ok(Self { graph, pi, mfpt, force: false })
    }

    /// Skips the rational-selfishness check on the source row.
    pub fn forced(mut self) -> Self {
        self.force = true;
        self
    }

    pub fn is_estimated(&self) -> bool {
        self.mfpt.mode() == MfptMode::EstimatedPartial
    }

    fn admit(&self, p: &EdgePerturbation) -> Result<(), ScoreError> {
        let n = self.graph.node_count();
        for node in [p.r, p.c] {
            if node >= n {
                return Err(GraphError::NodeOutOfRange { node, n }.into());
            }
        }
        EdgePerturbation::new(p.r, p.c, p.theta)?;
        if self.graph.has_edge(p.r, p.c) {
            return Err(GraphError::EdgeExists { src: p.r, dst: p.c }.into());
        }
        if !self.force && !self.graph.is_rationally_selfish(p.r) {
            return Err(ScoreError::NotSelfish { row: p.r });
        }
        Ok(())
    }

    fn denominator(&self, p: &EdgePerturbation) -> Result<f64, ScoreError> {
        let m_rr = self.mfpt.value(p.r, p.r)?;
        let m_cr = self.mfpt.value(p.c, p.r)?;
        Ok(m_rr + p.theta * (m_cr - m_rr + 1.0))
    }

    /// `m_cj (1 − δ_jc) − m_rj + 1`.
    fn bracket(&self, p: &EdgePerturbation, j: usize) -> Result<f64, ScoreError> {
        let m_cj = if j == p.c { 0.0 } else { self.mfpt.value(p.c, j)? };
        Ok(m_cj - self.mfpt.value(p.r, j)? + 1.0)
    }

    /// Centrality after adding `p`, from the closed form.
    pub fn perturbed_centrality(&self, p: &EdgePerturbation) -> Result<CentralityVector, ScoreError> {
        self.admit(p)?;
        let scale = p.theta / self.denominator(p)?;
        let values = (0..self.graph.node_count())
            .map(|j| Ok(self.pi.values[j] * (1.0 - scale * self.bracket(p, j)?)))
            .collect::<Result<Vec<f64>, ScoreError>>()?;
        Ok(CentralityVector { values, residual: 0.0, iterations: 0 })
    }

    /// Predicted drop `⟨π, x̃⟩ − ⟨π̃, x̃⟩` in consensus value.
    pub fn edge_score(
        &self,
        p: &EdgePerturbation,
        x_tilde: &Opinions,
        subset: NodeSubset<'_>,
    ) -> Result<ScoredEdge, ScoreError> {
        let n = self.graph.node_count();
        if x_tilde.len() != n {
            return Err(ScoreError::DimensionMismatch { expected: n, got: x_tilde.len() });
        }
        self.admit(p)?;
        let term = |j: usize| -> Result<f64, ScoreError> {
            Ok(self.pi.values[j] * self.bracket(p, j)? * x_tilde[j])
        };
        let (sum, mode, nodes_used) = match subset {
            NodeSubset::All => {
                let mut sum = 0.0;
                for j in 0..n {
                    sum += term(j)?;
                }
                (sum, ScoreMode::Exact, n)
            }
            NodeSubset::Only(nodes) => {
                let mut sum = term(p.r)? + term(p.c)?;
                let mut used = 2;
                for &j in nodes {
                    if j != p.r && j != p.c {
                        sum += term(j)?;
                        used += 1;
                    }
                }
                (sum, ScoreMode::Truncated, used)
            }
        };
        Ok(ScoredEdge {
            r: p.r,
            c: p.c,
            theta: p.theta,
            score: p.theta * sum / self.denominator(p)?,
            mode,
            nodes_used,
            estimated: self.is_estimated(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mfpt::{mfpt_exact, mfpt_estimate, ExactOptions, WalkParams};
    use crate::spectral::{consensus_value, eigencentrality, PowerOptions};

    fn three_node() -> Graph {
        Graph::from_rows(vec![
            vec![(0, 0.6), (1, 0.4)],
            vec![(0, 0.3), (1, 0.5), (2, 0.2)],
            vec![(0, 0.2), (1, 0.2), (2, 0.6)],
        ])
        .unwrap()
    }

    fn setup(g: &Graph) -> (CentralityVector, MfptTable) {
        let pi = eigencentrality(g, PowerOptions::default()).unwrap();
        let m = mfpt_exact(g, &pi, ExactOptions::default()).unwrap();
        (pi, m)
    }

    #[test]
    fn closed_form_matches_recomputation() {
        let g = three_node();
        let (pi, m) = setup(&g);
        let model = PerturbationModel::new(&g, &pi, &m).unwrap();
        // Nodes are 0-based here: the edge runs from the first to the third node.
        let p = EdgePerturbation::new(0, 2, 0.3).unwrap();
        let predicted = model.perturbed_centrality(&p).unwrap();
        let actual = eigencentrality(&g.add_edge_perturbed(&p).unwrap(), PowerOptions::default()).unwrap();
        for j in 0..3 {
            assert!((predicted.values[j] - actual.values[j]).abs() <= 1e-8);
        }
        assert!((predicted.values.iter().sum::<f64>() - 1.0).abs() <= 1e-9);

        let x_tilde = Opinions::new(vec![1.0, 0.0, 0.5]).unwrap();
        let scored = model.edge_score(&p, &x_tilde, NodeSubset::All).unwrap();
        let direct = consensus_value(&pi, &x_tilde).unwrap() - consensus_value(&actual, &x_tilde).unwrap();
        assert!((scored.score - direct).abs() <= 1e-10, "{} vs {direct}", scored.score);
        assert_eq!(scored.mode, ScoreMode::Exact);
        assert_eq!(scored.nodes_used, 3);
        assert!(!scored.estimated);
    }

    #[test]
    fn vanishing_theta() {
        let g = three_node();
        let (pi, m) = setup(&g);
        let model = PerturbationModel::new(&g, &pi, &m).unwrap();
        let p = EdgePerturbation::new(0, 2, 1e-15).unwrap();
        let tilde = model.perturbed_centrality(&p).unwrap();
        for j in 0..3 {
            assert!((tilde.values[j] - pi.values[j]).abs() <= 1e-12);
        }
        let x = Opinions::new(vec![0.2, 0.9, 0.4]).unwrap();
        assert!(model.edge_score(&p, &x, NodeSubset::All).unwrap().score.abs() <= 1e-14);
    }

    #[test]
    fn all_ones_opinions_score_zero() {
        let g = three_node();
        let (pi, m) = setup(&g);
        let model = PerturbationModel::new(&g, &pi, &m).unwrap();
        let ones = Opinions::constant(3, 1.0).unwrap();
        let p = EdgePerturbation::new(0, 2, 0.4).unwrap();
        assert!(model.edge_score(&p, &ones, NodeSubset::All).unwrap().score.abs() <= 1e-9);
    }

    #[test]
    fn truncation_counts_endpoints() {
        let g = three_node();
        let (pi, m) = setup(&g);
        let model = PerturbationModel::new(&g, &pi, &m).unwrap();
        let x = Opinions::new(vec![0.2, 0.9, 0.4]).unwrap();
        let p = EdgePerturbation::new(0, 2, 0.2).unwrap();
        let partial = model.edge_score(&p, &x, NodeSubset::Only(&[])).unwrap();
        assert_eq!(partial.mode, ScoreMode::Truncated);
        assert_eq!(partial.nodes_used, 2);
        let full = model.edge_score(&p, &x, NodeSubset::Only(&[0, 1, 2])).unwrap();
        assert_eq!(full.nodes_used, 3);
        let exact = model.edge_score(&p, &x, NodeSubset::All).unwrap();
        assert!((full.score - exact.score).abs() <= 1e-15);
    }

    #[test]
    fn refuses_inadmissible_edges() {
        let g = three_node();
        let (pi, m) = setup(&g);
        let model = PerturbationModel::new(&g, &pi, &m).unwrap();
        let present = EdgePerturbation { r: 0, c: 1, theta: 0.1 };
        assert!(matches!(model.perturbed_centrality(&present), Err(ScoreError::Edge(_))));

        // Row 0 puts more weight on node 1 than on itself.
        let g = Graph::from_rows(vec![
            vec![(0, 0.3), (1, 0.7)],
            vec![(0, 0.3), (1, 0.5), (2, 0.2)],
            vec![(0, 0.2), (1, 0.2), (2, 0.6)],
        ])
        .unwrap();
        let (pi, m) = setup(&g);
        let model = PerturbationModel::new(&g, &pi, &m).unwrap();
        let p = EdgePerturbation::new(0, 2, 0.2).unwrap();
        assert!(matches!(model.perturbed_centrality(&p), Err(ScoreError::NotSelfish { row: 0 })));
        // The formula itself still holds when forced.
        let forced = model.forced().perturbed_centrality(&p).unwrap();
        let actual = eigencentrality(&g.add_edge_perturbed(&p).unwrap(), PowerOptions::default()).unwrap();
        assert!((forced.values[2] - actual.values[2]).abs() <= 1e-8);
    }

    #[test]
    fn estimated_tables_flag_scores_and_report_gaps() {
        let g = three_node();
        let pi = eigencentrality(&g, PowerOptions::default()).unwrap();
        let m = mfpt_estimate(&g, &[0], &[0], WalkParams::new(200_000, 3)).unwrap();
        let model = PerturbationModel::new(&g, &pi, &m).unwrap();
        let x = Opinions::new(vec![0.2, 0.9, 0.4]).unwrap();
        let p = EdgePerturbation::new(0, 2, 0.2).unwrap();
        let scored = model.edge_score(&p, &x, NodeSubset::Only(&[0])).unwrap();
        assert!(scored.estimated);
        // m_21 is not covered: passage times to node 1 are not tracked.
        assert!(matches!(model.perturbed_centrality(&p), Err(ScoreError::Mfpt(_))));
    }

    #[test]
    fn csv_dump() {
        let e = ScoredEdge { r: 1, c: 2, theta: 0.1, score: 0.5, mode: ScoreMode::Exact, nodes_used: 3, estimated: false };
        assert_eq!(scores_to_csv(&[e]), "r,c,theta,score,mode\n1,2,0.1,0.5,exact\n");
    }
}
