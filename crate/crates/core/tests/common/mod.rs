#![allow(dead_code)]

use std::collections::BTreeSet;

use diver_core::graph::{generate_scale_free, ScaleFreeParams};
use diver_core::Graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Strongly connected graph whose every row puts more weight on itself than
/// on any neighbor: a directed ring plus up to `extra` random edges per row.
pub fn random_selfish_graph(n: usize, extra: usize, rng: &mut ChaCha8Rng) -> Graph {
    let rows = (0..n)
        .map(|i| {
            let mut nbrs = BTreeSet::from([(i + 1) % n]);
            for _ in 0..rng.random_range(0..=extra) {
                let j = rng.random_range(0..n);
                if j != i {
                    nbrs.insert(j);
                }
            }
            let self_w = rng.random_range(0.5..0.9);
            let raw: Vec<f64> = nbrs.iter().map(|_| rng.random_range(0.1..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let mut row: Vec<(usize, f64)> = nbrs
                .iter()
                .zip(&raw)
                .map(|(&j, &w)| (j, (1.0 - self_w) * w / total))
                .collect();
            let rest: f64 = row.iter().map(|&(_, w)| w).sum();
            row.push((i, 1.0 - rest));
            row.sort_by_key(|&(j, _)| j);
            row
        })
        .collect();
    Graph::from_rows(rows).expect("constructed rows are stochastic")
}

/// Alternates between scale-free and ring-plus-random graphs.
pub fn test_graph(index: usize, n: usize, rng: &mut ChaCha8Rng) -> Graph {
    if index % 2 == 0 {
        let seed = rng.random();
        generate_scale_free(&ScaleFreeParams::new(n, -2.5, seed)).expect("valid parameters")
    } else {
        random_selfish_graph(n, 4, rng)
    }
}

/// A node pair `(r, c)` with `r != c` and no existing edge, if any.
pub fn random_absent_edge(g: &Graph, rng: &mut ChaCha8Rng) -> Option<(usize, usize)> {
    let n = g.node_count();
    for _ in 0..1000 {
        let r = rng.random_range(0..n);
        let c = rng.random_range(0..n);
        if r != c && !g.has_edge(r, c) {
            return Some((r, c));
        }
    }
    None
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
