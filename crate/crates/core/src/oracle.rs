//! Exhaustive ground truth for small edge-recommendation instances, and the
//! clique gadget that encodes k-subset-sum as an edge-recommendation problem.

use itertools::Itertools;
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{EdgePerturbation, Graph, GraphError};
use crate::opinion::{Opinions, VectorError};
use crate::spectral::{dot, eigencentrality, PowerOptions, SpectralError};

/// Largest number of subsets [`brute_force_diver`] will enumerate.
pub const MAX_COMBINATIONS: u128 = 1_000_000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{count} candidate subsets exceed the cap of {MAX_COMBINATIONS}")]
    TooManyCombinations { count: u128 },
    #[error("need {k} edges but only {available} candidates")]
    NotEnoughCandidates { k: usize, available: usize },
    #[error("{name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("subset size k = {k} must lie in [1, {n}]")]
    BadSubsetSize { k: usize, n: usize },
    #[error("matching edge {0} is out of range or repeated")]
    BadChoice(usize),
    #[error("opinion vectors must have one entry per node")]
    DimensionMismatch,
    #[error("undirected network is disconnected or has no edges")]
    Disconnected,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Opinion(#[from] VectorError),
}

/// How a chosen candidate edge changes the network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeApplication {
    /// Row `r` is rescaled by `1 - θ` and `θ` placed on `(r, c)`.
    Weighted(f64),
    /// The network is read as uniformly weighted and undirected; `(a, b)`
    /// joins both endpoints and every row is reweighted uniformly.
    UniformUndirected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    /// Chosen edges in lexicographic order.
    pub edges: Vec<(usize, usize)>,
    pub objective: f64,
    pub subsets_checked: usize,
}

/// Tries every `k`-subset of `candidates` and returns the one minimizing
/// `|⟨π̃, x̃⟩ − ⟨π, x⟩|`. Ties go to the lexicographically first subset.
pub fn brute_force_diver(
    g: &Graph,
    k: usize,
    x: &Opinions,
    x_tilde: &Opinions,
    candidates: &[(usize, usize)],
    application: EdgeApplication,
    power: PowerOptions,
) -> Result<BruteForceResult, OracleError> {
    let n = g.node_count();
    if x.len() != n || x_tilde.len() != n {
        return Err(OracleError::DimensionMismatch);
    }
    let candidates: Vec<(usize, usize)> = candidates.iter().copied().sorted().dedup().collect();
    if k > candidates.len() {
        return Err(OracleError::NotEnoughCandidates { k, available: candidates.len() });
    }
    let count = binomial(candidates.len() as u128, k as u128);
    if count > MAX_COMBINATIONS {
        return Err(OracleError::TooManyCombinations { count });
    }

    let base_edges = match application {
        EdgeApplication::UniformUndirected => undirected_edges(g),
        EdgeApplication::Weighted(_) => Vec::new(),
    };
    let target = match application {
        EdgeApplication::Weighted(_) => dot(&eigencentrality(g, power)?.values, x.as_slice()),
        EdgeApplication::UniformUndirected => dot(&degree_centrality(n, &base_edges)?, x.as_slice()),
    };

    let objective = |subset: &[(usize, usize)]| -> Result<f64, OracleError> {
        let pi = match application {
            EdgeApplication::Weighted(theta) => {
                let mut h = g.clone();
                for &(r, c) in subset {
                    h = h.add_edge_perturbed(&EdgePerturbation::new(r, c, theta)?)?;
                }
                eigencentrality(&h, power)?.values
            }
            EdgeApplication::UniformUndirected => {
                let mut edges = base_edges.clone();
                edges.extend_from_slice(subset);
                degree_centrality(n, &edges)?
            }
        };
        Ok((dot(&pi, x_tilde.as_slice()) - target).abs())
    };

    let subsets: Vec<Vec<(usize, usize)>> = candidates.iter().copied().combinations(k).collect();
    let best = subsets
        .par_iter()
        .enumerate()
        .map(|(idx, s)| objective(s).map(|f| (f, idx)))
        .try_reduce(
            || (f64::INFINITY, usize::MAX),
            |a, b| Ok(if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a }),
        )?;
    Ok(BruteForceResult {
        edges: subsets[best.1].clone(),
        objective: best.0,
        subsets_checked: subsets.len(),
    })
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Undirected edges `(a, b)`, `a < b`, present in both directions.
fn undirected_edges(g: &Graph) -> Vec<(usize, usize)> {
    g.edges()
        .filter(|&(a, b, _)| a < b && g.has_edge(b, a))
        .map(|(a, b, _)| (a, b))
        .collect()
}

/// Stationary distribution `d / 2m` of a connected undirected network.
fn degree_centrality(n: usize, edges: &[(usize, usize)]) -> Result<Vec<f64>, OracleError> {
    let mut degree = vec![0usize; n];
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        degree[a] += 1;
        degree[b] += 1;
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    if edges.is_empty() || seen.contains(&false) {
        return Err(OracleError::Disconnected);
    }
    let total = 2.0 * edges.len() as f64;
    Ok(degree.into_iter().map(|d| d as f64 / total).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GadgetInstance {
    pub z: Vec<f64>,
    pub k: usize,
    pub s: f64,
    /// `2 * z.len()`.
    pub node_count: usize,
    /// Undirected edges of the clique minus the matching, `a < b`.
    pub edges: Vec<(usize, usize)>,
    pub x: Opinions,
    pub x_tilde: Opinions,
    /// The removed matching `(2ℓ, 2ℓ + 1)`.
    pub candidate_edges: Vec<(usize, usize)>,
}

impl GadgetInstance {
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Uniformly weighted network; fails for a single item, where the gadget
    /// has no edges.
    pub fn graph(&self) -> Result<Graph, GraphError> {
        Graph::uniform_undirected(self.node_count, &self.edges)
    }

    /// Exhaustive search over matching edges.
    pub fn solve(&self) -> Result<BruteForceResult, OracleError> {
        let n = self.node_count;
        let target = self.initial_value();
        let subsets: Vec<Vec<usize>> = (0..self.z.len()).combinations(self.k).collect();
        let best = subsets
            .par_iter()
            .enumerate()
            .map(|(idx, chosen)| {
                let mut edges = self.edges.clone();
                edges.extend(chosen.iter().map(|&l| self.candidate_edges[l]));
                degree_centrality(n, &edges)
                    .map(|pi| ((dot(&pi, self.x_tilde.as_slice()) - target).abs(), idx))
            })
            .try_reduce(
                || (f64::INFINITY, usize::MAX),
                |a, b| Ok(if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a }),
            )?;
        Ok(BruteForceResult {
            edges: subsets[best.1].iter().map(|&l| self.candidate_edges[l]).collect(),
            objective: best.0,
            subsets_checked: subsets.len(),
        })
    }

    /// `⟨π, x⟩` before any edge is added. Every node has the same degree,
    /// so this is the mean of `x`.
    fn initial_value(&self) -> f64 {
        self.x.as_slice().iter().sum::<f64>() / self.node_count as f64
    }
}

pub fn build_gadget(z: &[f64], k: usize, s: f64) -> Result<GadgetInstance, OracleError> {
    let n = z.len();
    if k == 0 || k > n {
        return Err(OracleError::BadSubsetSize { k, n });
    }
    if let Some(&v) = z.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(OracleError::OutOfRange { name: "z", value: v });
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(OracleError::OutOfRange { name: "s", value: s });
    }
    let nodes = 2 * n;
    let edges: Vec<(usize, usize)> = (0..nodes)
        .tuple_combinations()
        .filter(|&(a, b)| !(a % 2 == 0 && b == a + 1))
        .collect();
    let m = edges.len() as f64;
    let x_tilde: Vec<f64> = z.iter().flat_map(|&v| [v, v]).collect();
    let x: Vec<f64> = x_tilde
        .iter()
        .map(|&v| ((s + m * v) / (m + k as f64)).clamp(0.0, 1.0))
        .collect();
    Ok(GadgetInstance {
        z: z.to_vec(),
        k,
        s,
        node_count: nodes,
        edges,
        x: Opinions::new(x)?,
        x_tilde: Opinions::new(x_tilde)?,
        candidate_edges: (0..n).map(|l| (2 * l, 2 * l + 1)).collect(),
    })
}

/// Evaluates the objective after adding the matching edges `chosen` two
/// ways: from the degrees of the resulting network (`lhs`) and from the
/// subset-sum residual `|Σ z_ℓ − s| / (m + k)` (`rhs`).
pub fn verify_gadget(inst: &GadgetInstance, chosen: &[usize]) -> Result<(f64, f64), OracleError> {
    let n = inst.z.len();
    if chosen.len() != inst.k {
        return Err(OracleError::BadSubsetSize { k: chosen.len(), n: inst.k });
    }
    let mut used = vec![false; n];
    for &l in chosen {
        if l >= n || used[l] {
            return Err(OracleError::BadChoice(l));
        }
        used[l] = true;
    }
    let mut edges = inst.edges.clone();
    edges.extend(chosen.iter().map(|&l| inst.candidate_edges[l]));
    let pi = degree_centrality(inst.node_count, &edges)?;
    let lhs = (dot(&pi, inst.x_tilde.as_slice()) - inst.initial_value()).abs();
    let m = inst.edge_count() as f64;
    let rhs = (chosen.iter().map(|&l| inst.z[l]).sum::<f64>() - inst.s).abs() / (m + inst.k as f64);
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::validate;

    #[test]
    fn gadget_shape() {
        let g = build_gadget(&[0.2, 0.3, 0.5], 2, 0.5).unwrap();
        assert_eq!(g.node_count, 6);
        assert_eq!(g.edge_count(), 12);
        let w = g.graph().unwrap();
        assert!(w.rows().all(|row| row.len() == 4 && row.iter().all(|&(_, v)| v == 0.25)));
        let report = validate(&w);
        assert!(report.strongly_connected && report.aperiodic && !report.rationally_selfish);
        for n in 1..=6 {
            let inst = build_gadget(&vec![0.5; n], 1, 0.5).unwrap();
            assert_eq!(inst.edge_count(), 2 * n * n - 2 * n);
        }
    }

    #[test]
    fn gadget_solve_finds_exact_sum() {
        let inst = build_gadget(&[0.2, 0.3, 0.5], 2, 0.5).unwrap();
        let best = inst.solve().unwrap();
        assert!(best.objective < 1e-15);
        assert_eq!(best.edges, vec![(0, 1), (2, 3)]);
        assert_eq!(best.subsets_checked, 3);

        let g = inst.graph().unwrap();
        let bf = brute_force_diver(
            &g,
            2,
            &inst.x,
            &inst.x_tilde,
            &inst.candidate_edges,
            EdgeApplication::UniformUndirected,
            PowerOptions::default(),
        )
        .unwrap();
        assert_eq!(bf.edges, best.edges);
        assert!(bf.objective < 1e-15);
    }

    #[test]
    fn single_item_gadget() {
        let inst = build_gadget(&[1.0], 1, 1.0).unwrap();
        assert_eq!(inst.edge_count(), 0);
        assert!(inst.graph().is_err());
        let (lhs, rhs) = verify_gadget(&inst, &[0]).unwrap();
        assert_eq!((lhs, rhs), (0.0, 0.0));
        assert_eq!(inst.solve().unwrap().objective, 0.0);
    }

    #[test]
    fn verify_arithmetic() {
        let inst = build_gadget(&[0.9], 1, 0.5).unwrap();
        let (lhs, rhs) = verify_gadget(&inst, &[0]).unwrap();
        assert!((rhs - 0.4).abs() < 1e-15);
        assert!((lhs - rhs).abs() < 1e-12);
        let inst = build_gadget(&[0.2, 0.3, 0.5, 0.7], 2, 0.6).unwrap();
        for chosen in (0..4).combinations(2) {
            let (lhs, rhs) = verify_gadget(&inst, &chosen).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12, "{chosen:?}: {lhs} vs {rhs}");
        }
        assert!(matches!(verify_gadget(&inst, &[0]), Err(OracleError::BadSubsetSize { .. })));
        assert!(matches!(verify_gadget(&inst, &[1, 1]), Err(OracleError::BadChoice(1))));
    }

    #[test]
    fn gadget_input_checks() {
        assert!(build_gadget(&[0.2], 0, 0.5).is_err());
        assert!(build_gadget(&[0.2], 2, 0.5).is_err());
        assert!(build_gadget(&[1.2], 1, 0.5).is_err());
        assert!(build_gadget(&[0.2], 1, -0.1).is_err());
    }

    #[test]
    fn weighted_brute_force_trivial_cases() {
        let g = Graph::from_rows(vec![
            vec![(0, 0.6), (1, 0.4)],
            vec![(0, 0.3), (1, 0.5), (2, 0.2)],
            vec![(0, 0.2), (1, 0.2), (2, 0.6)],
        ])
        .unwrap();
        let x = Opinions::new(vec![0.1, 0.4, 0.8]).unwrap();
        let x_tilde = Opinions::new(vec![1.0, 0.4, 0.8]).unwrap();
        let app = EdgeApplication::Weighted(0.3);
        let none = brute_force_diver(&g, 0, &x, &x_tilde, &[(0, 2)], app, PowerOptions::default()).unwrap();
        let pi = eigencentrality(&g, PowerOptions::default()).unwrap().values;
        assert!(none.edges.is_empty());
        assert!((none.objective - pi[0] * 0.9).abs() < 1e-12);

        let same = brute_force_diver(&g, 0, &x, &x, &[(0, 2)], app, PowerOptions::default()).unwrap();
        assert_eq!(same.objective, 0.0);

        let one = brute_force_diver(&g, 1, &x, &x_tilde, &[(0, 2)], app, PowerOptions::default()).unwrap();
        assert_eq!(one.edges, vec![(0, 2)]);
        let h = g.add_edge_perturbed(&EdgePerturbation::new(0, 2, 0.3).unwrap()).unwrap();
        let pi_h = eigencentrality(&h, PowerOptions::default()).unwrap().values;
        let direct = (dot(&pi_h, x_tilde.as_slice()) - dot(&pi, x.as_slice())).abs();
        assert!((one.objective - direct).abs() < 1e-15);
    }

    #[test]
    fn combination_cap() {
        let g = Graph::uniform_undirected(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let x = Opinions::constant(3, 0.5).unwrap();
        let many: Vec<(usize, usize)> = (0..60).map(|i| (i, i + 1)).collect();
        let err = brute_force_diver(&g, 10, &x, &x, &many, EdgeApplication::Weighted(0.1), PowerOptions::default());
        assert!(matches!(err, Err(OracleError::TooManyCombinations { .. })));
        assert_eq!(binomial(60, 10), 75_394_027_566);
    }
}
