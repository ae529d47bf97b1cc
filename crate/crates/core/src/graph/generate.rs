use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::validate::is_strongly_connected;
use super::{Graph, GraphError};

const MIN_DEGREE: usize = 2;
const SELF_LOOP_CEIL: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleFreeParams {
    pub n: usize,
    /// Power-law exponent of the degree distribution, below -1.
    pub gamma: f64,
    pub seed: u64,
    /// Lower bound of the uniformly drawn self-loop weight.
    pub self_loop_floor: f64,
}

impl ScaleFreeParams {
    pub fn new(n: usize, gamma: f64, seed: u64) -> Self {
        Self { n, gamma, seed, self_loop_floor: 0.51 }
    }
}

/// Directed configuration-model graph with power-law degrees.
///
/// Out-degrees are drawn from `P(d) ∝ d^gamma` on `[2, n - 1]`; the in-degree
/// sequence is an independent shuffle of the same values. Stubs are matched
/// at random and self-pairs and multi-edges are dropped. Each node keeps a
/// self-loop heavier than one half and splits the remaining weight equally
/// over its out-neighbors, so every row is rationally selfish. If the result
/// is not strongly connected, the edges of a random Hamiltonian cycle are
/// added as ordinary out-neighbors before weighting.
pub fn generate_scale_free(params: &ScaleFreeParams) -> Result<Graph, GraphError> {
    let ScaleFreeParams { n, gamma, seed, self_loop_floor } = *params;
    if n < 2 {
        return Err(GraphError::Generator(format!("need at least 2 nodes, got {n}")));
    }
    if !(gamma < -1.0) {
        return Err(GraphError::Generator(format!("exponent must be below -1, got {gamma}")));
    }
    if !(self_loop_floor > 0.5 && self_loop_floor < SELF_LOOP_CEIL) {
        return Err(GraphError::Generator(format!(
            "self-loop floor must lie in (0.5, {SELF_LOOP_CEIL}), got {self_loop_floor}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let max_degree = n - 1;
    let min_degree = MIN_DEGREE.min(max_degree);
    let cumulative: Vec<f64> = (min_degree..=max_degree)
        .scan(0.0, |acc, d| {
            *acc += (d as f64).powf(gamma);
            Some(*acc)
        })
        .collect();
    let total = *cumulative.last().expect("non-empty degree support");
    let out_degrees: Vec<usize> = (0..n)
        .map(|_| {
            let u = rng.random::<f64>() * total;
            min_degree + cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1)
        })
        .collect();

    let mut in_degrees = out_degrees.clone();
    in_degrees.shuffle(&mut rng);
    let out_stubs: Vec<usize> = stubs(&out_degrees);
    let mut in_stubs: Vec<usize> = stubs(&in_degrees);
    in_stubs.shuffle(&mut rng);

    let mut neighbors: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (&src, &dst) in out_stubs.iter().zip(&in_stubs) {
        if src != dst {
            neighbors[src].insert(dst);
        }
    }

    let self_weights: Vec<f64> = (0..n)
        .map(|_| rng.random_range(self_loop_floor..=SELF_LOOP_CEIL))
        .collect();
    let build = |neighbors: &[BTreeSet<usize>]| {
        let rows = neighbors
            .iter()
            .zip(&self_weights)
            .enumerate()
            .map(|(i, (nbrs, &own))| weighted_row(i, own, nbrs))
            .collect();
        Graph::from_rows(rows)
    };
    let graph = build(&neighbors)?;
    if is_strongly_connected(&graph) {
        return Ok(graph);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    for (k, &src) in order.iter().enumerate() {
        neighbors[src].insert(order[(k + 1) % n]);
    }
    build(&neighbors)
}

fn stubs(degrees: &[usize]) -> Vec<usize> {
    degrees
        .iter()
        .enumerate()
        .flat_map(|(node, &d)| std::iter::repeat_n(node, d))
        .collect()
}

fn weighted_row(i: usize, own: f64, nbrs: &BTreeSet<usize>) -> Vec<(usize, f64)> {
    if nbrs.is_empty() {
        return vec![(i, 1.0)];
    }
    let share = (1.0 - own) / nbrs.len() as f64;
    let mut row: Vec<(usize, f64)> = nbrs.iter().map(|&j| (j, share)).collect();
    row.push((i, own));
    row
}

#[cfg(test)]
mod tests {
    use super::super::validate;
    use super::*;

    #[test]
    fn seeded_generation_is_deterministic_and_valid() {
        let params = ScaleFreeParams::new(100, -2.5, 7);
        let a = generate_scale_free(&params).unwrap();
        let b = generate_scale_free(&params).unwrap();
        assert_eq!(a, b);
        let report = validate(&a);
        assert!(report.all_passed(), "{report:?}");
        let c = generate_scale_free(&ScaleFreeParams::new(100, -2.5, 8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn minimal_graph() {
        let g = generate_scale_free(&ScaleFreeParams::new(2, -2.5, 1)).unwrap();
        assert_eq!(g.node_count(), 2);
        assert!(validate(&g).all_passed());
        assert!(g.has_edge(0, 0) && g.has_edge(1, 1));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(generate_scale_free(&ScaleFreeParams::new(1, -2.5, 1)).is_err());
        assert!(generate_scale_free(&ScaleFreeParams::new(10, -1.0, 1)).is_err());
        assert!(generate_scale_free(&ScaleFreeParams::new(10, 0.5, 1)).is_err());
        let mut p = ScaleFreeParams::new(10, -2.5, 1);
        p.self_loop_floor = 0.4;
        assert!(generate_scale_free(&p).is_err());
    }

    #[test]
    fn degree_distribution_is_heavy_tailed() {
        let g = generate_scale_free(&ScaleFreeParams::new(2000, -2.5, 3)).unwrap();
        let mut in_deg = vec![0usize; g.node_count()];
        for (i, j, _) in g.edges() {
            if i != j {
                in_deg[j] += 1;
            }
        }
        let max = *in_deg.iter().max().unwrap();
        let mean = in_deg.iter().sum::<usize>() as f64 / in_deg.len() as f64;
        assert!(max as f64 > 10.0 * mean, "max {max}, mean {mean}");
    }
}
