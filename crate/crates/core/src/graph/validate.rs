use std::collections::VecDeque;

use super::{Graph, ROW_SUM_TOL};

/// Structural findings about a graph. Computing it never fails.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub row_stochastic: bool,
    pub max_row_sum_deviation: f64,
    pub strongly_connected: bool,
    /// Period one. Only reported true for strongly connected graphs, where the
    /// period is well defined.
    pub aperiodic: bool,
    pub rationally_selfish: bool,
    pub selfishness_violations: Vec<usize>,
    pub has_self_loop: bool,
}

impl ValidationReport {
    /// Strongly connected, aperiodic and row-stochastic: the chain is ergodic.
    pub fn is_ergodic(&self) -> bool {
        self.row_stochastic && self.strongly_connected && self.aperiodic
    }

    pub fn all_passed(&self) -> bool {
        self.is_ergodic() && self.rationally_selfish
    }
}

pub fn validate(g: &Graph) -> ValidationReport {
    let deviation = g.max_row_sum_deviation();
    let strongly_connected = is_strongly_connected(g);
    let has_self_loop = (0..g.node_count()).any(|i| g.has_edge(i, i));
    let aperiodic = strongly_connected && (has_self_loop || period(g) == 1);
    let violations: Vec<usize> = (0..g.node_count())
        .filter(|&i| !g.is_rationally_selfish(i))
        .collect();
    ValidationReport {
        row_stochastic: deviation <= ROW_SUM_TOL,
        max_row_sum_deviation: deviation,
        strongly_connected,
        aperiodic,
        rationally_selfish: violations.is_empty(),
        selfishness_violations: violations,
        has_self_loop,
    }
}

/// Node 0 reaches everything and everything reaches node 0.
pub(crate) fn is_strongly_connected(g: &Graph) -> bool {
    let n = g.node_count();
    let forward = reach(n, 0, |v| g.row(v).iter().map(|&(w, _)| w).collect());
    if forward.iter().any(|&seen| !seen) {
        return false;
    }
    let preds = g.predecessors();
    let backward = reach(n, 0, |v| preds[v].clone());
    backward.iter().all(|&seen| seen)
}

fn reach(n: usize, start: usize, next: impl Fn(usize) -> Vec<usize>) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(v) = stack.pop() {
        for w in next(v) {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

/// Period of a strongly connected graph: gcd of `level(u) + 1 - level(v)`
/// over all edges, with BFS levels from node 0.
pub(crate) fn period(g: &Graph) -> usize {
    let n = g.node_count();
    let mut level = vec![usize::MAX; n];
    let mut queue = VecDeque::from([0]);
    level[0] = 0;
    while let Some(u) = queue.pop_front() {
        for &(v, _) in g.row(u) {
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut d = 0usize;
    for (u, v, _) in g.edges() {
        if level[u] == usize::MAX || level[v] == usize::MAX {
            continue;
        }
        let diff = (level[u] + 1).abs_diff(level[v]);
        d = gcd(d, diff);
    }
    d
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_state_chain_passes_everything() {
        let g = Graph::from_edges(2, &[(0, 0, 0.7), (0, 1, 0.3), (1, 0, 0.4), (1, 1, 0.6)]).unwrap();
        let report = validate(&g);
        assert!(report.all_passed(), "{report:?}");
        assert!(report.has_self_loop);
    }

    #[test]
    fn directed_two_cycle_is_periodic() {
        let g = Graph::from_edges(2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let report = validate(&g);
        assert!(report.strongly_connected);
        assert!(!report.aperiodic);
        assert_eq!(period(&g), 2);
        assert!(!report.rationally_selfish);
        assert_eq!(report.selfishness_violations, vec![0, 1]);
    }

    #[test]
    fn clique_minus_matching_is_aperiodic_but_not_selfish() {
        let n = 3;
        let mut edges = Vec::new();
        for a in 0..2 * n {
            for b in a + 1..2 * n {
                if !(a % 2 == 0 && b == a + 1) {
                    edges.push((a, b));
                }
            }
        }
        assert_eq!(edges.len(), 12);
        let g = Graph::uniform_undirected(2 * n, &edges).unwrap();
        let report = validate(&g);
        assert!(report.strongly_connected);
        assert!(report.aperiodic);
        assert!(!report.has_self_loop);
        assert!(!report.rationally_selfish);
        assert_eq!(period(&g), 1);
    }

    #[test]
    fn disconnected_graph() {
        let g = Graph::from_edges(3, &[(0, 0, 1.0), (1, 1, 1.0), (2, 0, 1.0)]).unwrap();
        let report = validate(&g);
        assert!(!report.strongly_connected);
        assert!(!report.aperiodic);
        assert!(report.has_self_loop);
    }

    #[test]
    fn period_three_cycle() {
        let g = Graph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap();
        assert_eq!(period(&g), 3);
        assert!(!validate(&g).aperiodic);
    }

    proptest::proptest! {
        #[test]
        fn self_loops_imply_period_one(seed in proptest::prelude::any::<u64>(), n in 2usize..80) {
            let g = super::super::generate_scale_free(&super::super::ScaleFreeParams::new(n, -2.5, seed)).unwrap();
            proptest::prop_assert!(g.has_edge(0, 0));
            proptest::prop_assert_eq!(period(&g), 1);
        }
    }
}
