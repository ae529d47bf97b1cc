use diver_core::graph::{generate_scale_free, ScaleFreeParams};
use diver_core::mfpt::{mfpt_estimate, mfpt_exact, walk_length_default, ExactOptions, MfptTable, WalkParams};
use diver_core::seed::derive_seed;
use diver_core::spectral::{eigencentrality, PowerOptions};
use diver_core::{CentralityVector, Graph};

const SEED: u64 = 77;

fn instance(k: u64) -> (Graph, CentralityVector, Vec<usize>) {
    let g = generate_scale_free(&ScaleFreeParams::new(100, -2.5, derive_seed(SEED, &format!("graph-{k}")))).unwrap();
    let pi = eigencentrality(&g, PowerOptions::default()).unwrap();
    let targets = pi.ranking().into_iter().take(5).collect();
    (g, pi, targets)
}

fn median_relative_error(est: &MfptTable, exact: &MfptTable, n: usize, targets: &[usize]) -> f64 {
    let mut errors: Vec<f64> = (0..n)
        .flat_map(|i| targets.iter().map(move |&t| (i, t)))
        .map(|(i, t)| {
            let truth = exact.value(i, t).unwrap();
            (est.value(i, t).unwrap() - truth).abs() / truth
        })
        .collect();
    errors.sort_by(f64::total_cmp);
    errors[errors.len() / 2]
}

#[test]
fn return_counts_follow_centrality() {
    let walk_len = walk_length_default(100);
    for k in 0..5 {
        let (g, pi, targets) = instance(k);
        let params = WalkParams::new(walk_len, derive_seed(SEED, &format!("counts-{k}"))).starting_at(targets[0]);
        let est = mfpt_estimate(&g, &targets, &[], params).unwrap();
        for &t in &targets {
            let expected = walk_len as f64 * pi.values[t];
            let returns = est.samples(t, t).unwrap() as f64;
            assert!((returns / expected - 1.0).abs() <= 0.1, "graph {k}, target {t}: {returns} returns, expected {expected:.0}");
        }
    }
}

#[test]
fn doubling_the_walk_tightens_estimates() {
    let walk_len = walk_length_default(100) / 4;
    let mut wins = 0;
    let (mut short_total, mut long_total) = (0.0, 0.0);
    for k in 0..20 {
        let (g, pi, targets) = instance(k);
        let exact = mfpt_exact(&g, &pi, ExactOptions::default()).unwrap();
        let seed = derive_seed(SEED, &format!("doubling-{k}"));
        let short = mfpt_estimate(&g, &targets, &[], WalkParams::new(walk_len, seed).starting_at(targets[0])).unwrap();
        let long = mfpt_estimate(&g, &targets, &[], WalkParams::new(2 * walk_len, seed).starting_at(targets[0])).unwrap();
        let short_err = median_relative_error(&short, &exact, 100, &targets);
        let long_err = median_relative_error(&long, &exact, 100, &targets);
        short_total += short_err;
        long_total += long_err;
        if long_err <= short_err {
            wins += 1;
        }
    }
    assert!(long_total <= short_total, "mean median error {:.4} after doubling vs {:.4}", long_total / 20.0, short_total / 20.0);
    assert!(wins > 10, "doubling helped in only {wins}/20 seeds");
}
