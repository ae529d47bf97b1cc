//! Data behind the figures: per-source score against centrality, truncated
//! against full scores, and walk-length convergence of the estimator.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use diver_core::mfpt::{
    mfpt_estimate, mfpt_exact, walk_length_default, ExactOptions, MfptTable, WalkParams,
};
use diver_core::perturb::{NodeSubset, PerturbationModel, ScoredEdge};
use diver_core::recommend::{score_candidates, select_sources, MfptStrategy, RecommenderConfig, SummationScope};
use diver_core::seed::derive_seed;
use diver_core::spectral::eigencentrality;
use diver_core::{CentralityVector, Graph, Opinions};

use crate::config::ExperimentConfig;

const TRUNCATION_EDGES: usize = 10;

pub fn emit(
    cfg: &ExperimentConfig,
    g: &Graph,
    x_tilde: &Opinions,
    rc: &RecommenderConfig,
    dir: &Path,
) -> anyhow::Result<()> {
    let n = g.node_count();
    let pi = eigencentrality(g, rc.power)?;
    let sources: Vec<usize> = pi
        .ranking()
        .into_iter()
        .filter(|&r| rc.force_assumption || g.is_rationally_selfish(r))
        .take(rc.n_src)
        .collect();
    let exact = if n <= rc.dense_cap {
        Some(mfpt_exact(g, &pi, ExactOptions { dense_cap: rc.dense_cap })?)
    } else {
        None
    };

    let summed = match rc.summation {
        SummationScope::All => None,
        SummationScope::TopSources => Some(select_sources(&pi, rc.n_src)),
        SummationScope::Top(s) => Some(select_sources(&pi, s.min(n))),
    };
    let table = match (rc.mfpt, &exact) {
        (MfptStrategy::Exact, Some(t)) => t.clone(),
        _ => {
            let mut targets = summed.clone().unwrap_or_default();
            targets.extend(sources.iter().filter(|s| !targets.contains(s)).collect::<Vec<_>>());
            let walk_len = match rc.mfpt {
                MfptStrategy::Walk { walk_len: Some(l), .. } => l,
                _ => walk_length_default(n),
            };
            let params = WalkParams::new(walk_len, derive_seed(cfg.seed, "figure-walk")).starting_at(pi.argmax());
            mfpt_estimate(g, &targets, &sources, params)?
        }
    };
    let scored = score_candidates(g, &pi, &table, x_tilde, &sources, summed.as_deref(), rc)?;
    fs::write(dir.join("score_vs_centrality.csv"), score_vs_centrality(&pi, &sources, &scored))?;

    if let Some(exact) = exact {
        let csv = truncation(g, &pi, &exact, x_tilde, &sources, rc, &cfg.figures.subset_sizes)?;
        fs::write(dir.join("truncation.csv"), csv)?;
        let csv = walk_convergence(g, &pi, &exact, cfg)?;
        fs::write(dir.join("walk_convergence.csv"), csv)?;
    } else {
        log::info!("n = {n} exceeds the dense cap; skipping truncation and convergence data");
    }
    Ok(())
}

fn score_vs_centrality(pi: &CentralityVector, sources: &[usize], scored: &[ScoredEdge]) -> String {
    let mut out = String::from("r,pi_r,candidates,max_score,mean_score\n");
    for &r in sources {
        let scores: Vec<f64> = scored.iter().filter(|e| e.r == r).map(|e| e.score).collect();
        if scores.is_empty() {
            continue;
        }
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        let _ = writeln!(out, "{r},{},{},{max},{mean}", pi.values[r], scores.len());
    }
    out
}

fn truncation(
    g: &Graph,
    pi: &CentralityVector,
    exact: &MfptTable,
    x_tilde: &Opinions,
    sources: &[usize],
    rc: &RecommenderConfig,
    sizes: &[usize],
) -> anyhow::Result<String> {
    let n = g.node_count();
    let mut model = PerturbationModel::new(g, pi, exact)?;
    if rc.force_assumption {
        model = model.forced();
    }
    let mut full = score_candidates(g, pi, exact, x_tilde, sources, None, rc)?;
    full.sort_by(|a, b| b.score.abs().total_cmp(&a.score.abs()).then(a.r.cmp(&b.r)).then(a.c.cmp(&b.c)));
    full.truncate(TRUNCATION_EDGES);

    let ranking = pi.ranking();
    let mut sizes: Vec<usize> = sizes.iter().map(|&s| s.min(n)).filter(|&s| s > 0).collect();
    sizes.push(n);
    sizes.sort_unstable();
    sizes.dedup();
    let mut out = String::from("r,c,subset_size,score_truncated,score_exact\n");
    for e in &full {
        for &s in &sizes {
            let t = model.edge_score(&e.perturbation(), x_tilde, NodeSubset::Only(&ranking[..s]))?;
            let _ = writeln!(out, "{},{},{s},{},{}", e.r, e.c, t.score, e.score);
        }
    }
    Ok(out)
}

fn walk_convergence(
    g: &Graph,
    pi: &CentralityVector,
    exact: &MfptTable,
    cfg: &ExperimentConfig,
) -> anyhow::Result<String> {
    let n = g.node_count();
    let ranking = pi.ranking();
    let targets = &ranking[..n.div_ceil(20)];
    let base = walk_length_default(n) as f64;
    let mut out = String::from("walk_len,seed,fraction_within_5pct,median_relative_error\n");
    for &factor in &cfg.figures.walk_factors {
        let walk_len = ((factor * base).round() as u64).max(1);
        for seed in 0..cfg.figures.walk_seeds {
            let params = WalkParams::new(walk_len, derive_seed(cfg.seed, &format!("convergence-{walk_len}-{seed}")))
                .starting_at(ranking[0]);
            let est = mfpt_estimate(g, targets, &[], params)?;
            let mut errors: Vec<f64> = (0..n)
                .flat_map(|i| targets.iter().map(move |&t| (i, t)))
                .map(|(i, t)| {
                    let truth = exact.value(i, t).expect("exact table is complete");
                    est.value(i, t).map_or(f64::INFINITY, |v| (v - truth).abs() / truth)
                })
                .collect();
            errors.sort_by(f64::total_cmp);
            let within = errors.iter().filter(|&&e| e <= 0.05).count() as f64 / errors.len() as f64;
            let _ = writeln!(out, "{walk_len},{seed},{within},{}", errors[errors.len() / 2]);
        }
    }
    Ok(out)
}
