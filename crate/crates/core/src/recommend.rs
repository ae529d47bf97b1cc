//! Greedy edge recommendation: score candidate edges out of the most central
//! nodes with the closed-form consensus drop, add the best ones, repeat.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{validate, EdgePerturbation, Graph, GraphError, ValidationReport};
use crate::mfpt::{
    mfpt_estimate, mfpt_exact, walk_length_default, ExactOptions, MfptError, MfptTable, WalkParams,
    DEFAULT_DENSE_CAP,
};
use crate::opinion::Opinions;
use crate::perturb::{NodeSubset, PerturbationModel, ScoreError, ScoredEdge};
use crate::seed::derive_seed;
use crate::spectral::{consensus_value, eigencentrality, CentralityVector, PowerOptions, SpectralError};

#[derive(Debug, Error)]
pub enum RecommendError {
    #[error("graph is not ergodic: {0:?}")]
    Invalid(Box<ValidationReport>),
    #[error("no admissible candidate edges")]
    NoCandidates,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("objective failed to decrease for {batches} consecutive batches")]
    Stalled { batches: usize, trajectory: Box<Trajectory> },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Mfpt(#[from] MfptError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ThetaPolicy {
    Constant(f64),
    PerEdge { default: f64, weights: HashMap<(usize, usize), f64> },
}

impl ThetaPolicy {
    pub fn theta(&self, r: usize, c: usize) -> f64 {
        match self {
            ThetaPolicy::Constant(t) => *t,
            ThetaPolicy::PerEdge { default, weights } => *weights.get(&(r, c)).unwrap_or(default),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DestinationScope {
    AllNodes,
    /// Only nodes two hops downstream of the source.
    TwoHop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfptStrategy {
    Exact,
    /// Random-walk estimates; `walk_len: None` uses [`walk_length_default`].
    Walk { walk_len: Option<u64>, seed: u64 },
}

/// Nodes summed over when scoring a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SummationScope {
    All,
    /// The `n_src` most central nodes.
    TopSources,
    Top(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OvershootPolicy {
    /// Take candidates by descending effect while their running total stays
    /// within the gap; if none fits, take the single candidate closest to it.
    Skip,
    /// Rank candidates by how closely their effect matches the gap.
    ClosestFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecommenderConfig {
    pub k: usize,
    pub n_src: usize,
    pub theta: ThetaPolicy,
    pub destinations: DestinationScope,
    pub mfpt: MfptStrategy,
    pub summation: SummationScope,
    pub overshoot: OvershootPolicy,
    pub stop_tol: f64,
    /// Score sources whose rows are not rationally selfish anyway.
    pub force_assumption: bool,
    pub power: PowerOptions,
    pub dense_cap: usize,
}

impl Default for RecommenderConfig {
    fn default() -> Self {
        Self {
            k: 5,
            n_src: 25,
            theta: ThetaPolicy::Constant(0.1),
            destinations: DestinationScope::AllNodes,
            mfpt: MfptStrategy::Exact,
            summation: SummationScope::TopSources,
            overshoot: OvershootPolicy::Skip,
            stop_tol: 1e-8,
            force_assumption: false,
            power: PowerOptions::default(),
            dense_cap: DEFAULT_DENSE_CAP,
        }
    }
}

impl RecommenderConfig {
    fn check(&self, n: usize) -> Result<(), RecommendError> {
        if self.k == 0 {
            return Err(RecommendError::Config("k must be at least 1".into()));
        }
        if self.n_src == 0 || self.n_src > n {
            return Err(RecommendError::Config(format!(
                "n_src must lie in [1, {n}], got {}",
                self.n_src
            )));
        }
        if matches!(self.mfpt, MfptStrategy::Walk { .. }) && self.summation == SummationScope::All {
            return Err(RecommendError::Config(
                "walk-estimated passage times need a truncated summation scope".into(),
            ));
        }
        Ok(())
    }

    fn summation_size(&self, n: usize) -> Option<usize> {
        match self.summation {
            SummationScope::All => None,
            SummationScope::TopSources => Some(self.n_src.min(n)),
            SummationScope::Top(s) => Some(s.min(n)),
        }
    }
}

/// The `n_src` most central nodes, descending, ties by ascending id.
pub fn select_sources(pi: &CentralityVector, n_src: usize) -> Vec<usize> {
    let mut ranking = pi.ranking();
    ranking.truncate(n_src);
    ranking
}

#[derive(Debug, Clone)]
pub struct Recommendation {
    pub edges: Vec<ScoredEdge>,
    pub pi: CentralityVector,
    /// `⟨π, x̃⟩` minus the value to restore.
    pub gap: f64,
    pub sources: Vec<usize>,
    pub candidates_scored: usize,
}

/// One invocation of the heuristic: up to `cfg.k` edges that best move
/// `⟨π, x̃⟩` back toward `⟨π, x⟩`.
pub fn recommend_edges(
    g: &Graph,
    x: &Opinions,
    x_tilde: &Opinions,
    cfg: &RecommenderConfig,
) -> Result<Recommendation, RecommendError> {
    let pi = eigencentrality(g, cfg.power)?;
    let target = consensus_value(&pi, x)?;
    recommend_toward(g, Some(pi), target, x_tilde, cfg)
}

/// Like [`recommend_edges`] but restoring an explicit consensus value, with
/// an optional precomputed centrality vector for `g`.
pub fn recommend_toward(
    g: &Graph,
    pi: Option<CentralityVector>,
    target: f64,
    x_tilde: &Opinions,
    cfg: &RecommenderConfig,
) -> Result<Recommendation, RecommendError> {
    let n = g.node_count();
    cfg.check(n)?;
    let report = validate(g);
    if !report.is_ergodic() {
        return Err(RecommendError::Invalid(Box::new(report)));
    }
    let pi = match pi {
        Some(pi) => pi,
        None => eigencentrality(g, cfg.power)?,
    };
    let gap = consensus_value(&pi, x_tilde)? - target;
    let ranking = pi.ranking();
    let sources: Vec<usize> = ranking
        .iter()
        .copied()
        .filter(|&r| cfg.force_assumption || g.is_rationally_selfish(r))
        .take(cfg.n_src)
        .collect();
    if gap == 0.0 {
        return Ok(Recommendation { edges: Vec::new(), pi, gap, sources, candidates_scored: 0 });
    }
    if sources.len() < cfg.n_src {
        log::info!(
            "{} of the top rows violate rational selfishness and were skipped as sources",
            cfg.n_src - sources.len()
        );
    }
    let summed: Option<Vec<usize>> = cfg.summation_size(n).map(|s| ranking[..s].to_vec());

    let mfpt = match cfg.mfpt {
        MfptStrategy::Exact => mfpt_exact(g, &pi, ExactOptions { dense_cap: cfg.dense_cap })?,
        MfptStrategy::Walk { walk_len, seed } => {
            let mut targets = summed.clone().unwrap_or_default();
            for &s in &sources {
                if !targets.contains(&s) {
                    targets.push(s);
                }
            }
            let params = WalkParams::new(walk_len.unwrap_or_else(|| walk_length_default(n)), seed)
                .starting_at(ranking[0]);
            mfpt_estimate(g, &targets, &sources, params)?
        }
    };

    let candidates = score_candidates(g, &pi, &mfpt, x_tilde, &sources, summed.as_deref(), cfg)?;
    if candidates.is_empty() {
        return Err(RecommendError::NoCandidates);
    }
    let candidates_scored = candidates.len();
    let edges = select_edges(candidates, gap, cfg);
    Ok(Recommendation { edges, pi, gap, sources, candidates_scored })
}

/// Scores every admissible edge out of `sources`, in source order then
/// destination order.
pub fn score_candidates(
    g: &Graph,
    pi: &CentralityVector,
    mfpt: &MfptTable,
    x_tilde: &Opinions,
    sources: &[usize],
    summed: Option<&[usize]>,
    cfg: &RecommenderConfig,
) -> Result<Vec<ScoredEdge>, RecommendError> {
    let mut model = PerturbationModel::new(g, pi, mfpt)?;
    if cfg.force_assumption {
        model = model.forced();
    }
    let subset = match summed {
        Some(nodes) => NodeSubset::Only(nodes),
        None => NodeSubset::All,
    };
    let per_source: Vec<Vec<ScoredEdge>> = sources
        .par_iter()
        .map(|&r| {
            destinations(g, r, cfg.destinations)
                .into_iter()
                .map(|c| {
                    let p = EdgePerturbation::new(r, c, cfg.theta.theta(r, c))?;
                    Ok(model.edge_score(&p, x_tilde, subset)?)
                })
                .collect::<Result<Vec<_>, RecommendError>>()
        })
        .collect::<Result<_, _>>()?;
    Ok(per_source.into_iter().flatten().collect())
}

fn destinations(g: &Graph, r: usize, scope: DestinationScope) -> Vec<usize> {
    let admissible = |c: usize| c != r && !g.has_edge(r, c);
    match scope {
        DestinationScope::AllNodes => (0..g.node_count()).filter(|&c| admissible(c)).collect(),
        DestinationScope::TwoHop => {
            let set: BTreeSet<usize> = g
                .row(r)
                .iter()
                .flat_map(|&(k, _)| g.row(k).iter().map(|&(c, _)| c))
                .filter(|&c| admissible(c))
                .collect();
            set.into_iter().collect()
        }
    }
}

/// Picks up to `k` edges whose effect points in the direction of `gap`.
fn select_edges(candidates: Vec<ScoredEdge>, gap: f64, cfg: &RecommenderConfig) -> Vec<ScoredEdge> {
    let direction = gap.signum();
    let remaining = gap.abs();
    let effect = |e: &ScoredEdge| direction * e.score;
    let by_id = |a: &ScoredEdge, b: &ScoredEdge| a.r.cmp(&b.r).then(a.c.cmp(&b.c));
    let helpful: Vec<ScoredEdge> = candidates.into_iter().filter(|e| effect(e) > 0.0).collect();
    let misfit = |e: &ScoredEdge| (remaining - effect(e)).abs();

    match cfg.overshoot {
        OvershootPolicy::Skip => {
            let mut ranked = helpful;
            ranked.sort_by(|a, b| effect(b).total_cmp(&effect(a)).then(by_id(a, b)));
            // The gap shrinks as edges are accepted into the batch.
            let mut left = remaining + cfg.stop_tol;
            let mut picked = Vec::new();
            for e in &ranked {
                if picked.len() == cfg.k {
                    break;
                }
                if effect(e) <= left {
                    left -= effect(e);
                    picked.push(e.clone());
                }
            }
            if picked.is_empty() {
                picked.extend(
                    ranked
                        .into_iter()
                        .min_by(|a, b| misfit(a).total_cmp(&misfit(b)).then(by_id(a, b))),
                );
            }
            picked
        }
        OvershootPolicy::ClosestFit => {
            let mut ranked = helpful;
            ranked.sort_by(|a, b| misfit(a).total_cmp(&misfit(b)).then(by_id(a, b)));
            ranked.truncate(cfg.k);
            ranked
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunParams {
    pub batch: usize,
    pub max_edges: usize,
    pub stop_tol: f64,
}

impl Default for RunParams {
    fn default() -> Self {
        Self { batch: 5, max_edges: 180, stop_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchRecord {
    pub batch: usize,
    pub edges: Vec<ScoredEdge>,
    pub edges_added_total: usize,
    /// `⟨π̃, x̃⟩ − ⟨π, x⟩` with `π̃` recomputed by power iteration.
    pub objective_signed: f64,
    /// What the closed-form scores predicted for `objective_signed`.
    pub predicted_signed: f64,
    pub seconds: f64,
}

impl BatchRecord {
    /// The minimized quantity, `|⟨π̃, x̃⟩ − ⟨π, x⟩|`.
    pub fn objective_exact(&self) -> f64 {
        self.objective_signed.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Signed objective dropped below the stop tolerance.
    Converged,
    EdgeBudget,
    /// No candidate moves the objective in the right direction.
    NoHelpfulEdge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// The consensus value being restored, `⟨π, x⟩` of the original graph.
    pub target_value: f64,
    pub initial_objective: f64,
    pub records: Vec<BatchRecord>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn final_objective(&self) -> f64 {
        self.records.last().map_or(self.initial_objective, |r| r.objective_signed)
    }

    pub fn edges_added(&self) -> usize {
        self.records.last().map_or(0, |r| r.edges_added_total)
    }

    /// CSV with header `batch,edges_added_total,objective_signed,objective_exact,seconds`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("batch,edges_added_total,objective_signed,objective_exact,seconds\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.6}",
                r.batch,
                r.edges_added_total,
                r.objective_signed,
                r.objective_exact(),
                r.seconds
            );
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct DiverRun {
    pub graph: Graph,
    pub trajectory: Trajectory,
}

const STALL_LIMIT: usize = 3;

/// Adds edges batch by batch until the consensus value is restored to within
/// `stop_tol` or `max_edges` edges have been added. Centrality and passage
/// times are recomputed from scratch after every batch.
pub fn run_diver(
    g: &Graph,
    x: &Opinions,
    x_tilde: &Opinions,
    cfg: &RecommenderConfig,
    params: RunParams,
) -> Result<DiverRun, RecommendError> {
    if params.batch == 0 {
        return Err(RecommendError::Config("batch must be at least 1".into()));
    }
    let pi0 = eigencentrality(g, cfg.power)?;
    let target_value = consensus_value(&pi0, x)?;
    let mut objective = consensus_value(&pi0, x_tilde)? - target_value;
    let mut trajectory = Trajectory {
        target_value,
        initial_objective: objective,
        records: Vec::new(),
        termination: Termination::Converged,
    };
    let mut graph = g.clone();
    let mut pi = pi0;
    let mut total = 0;
    let mut stalled = 0;

    loop {
        if objective < params.stop_tol {
            trajectory.termination = Termination::Converged;
            break;
        }
        if total >= params.max_edges {
            trajectory.termination = Termination::EdgeBudget;
            break;
        }
        let started = Instant::now();
        let batch = trajectory.records.len() + 1;
        let mut batch_cfg = cfg.clone();
        batch_cfg.k = params.batch.min(params.max_edges - total);
        batch_cfg.stop_tol = params.stop_tol;
        if let MfptStrategy::Walk { walk_len, seed } = cfg.mfpt {
            batch_cfg.mfpt = MfptStrategy::Walk { walk_len, seed: derive_seed(seed, &format!("batch-{batch}")) };
        }
        let rec = recommend_toward(&graph, Some(pi), target_value, x_tilde, &batch_cfg)?;
        if rec.edges.is_empty() {
            trajectory.termination = Termination::NoHelpfulEdge;
            break;
        }
        for e in &rec.edges {
            graph = graph.add_edge_perturbed(&e.perturbation())?;
        }
        total += rec.edges.len();
        pi = eigencentrality(&graph, cfg.power)?;
        let next = consensus_value(&pi, x_tilde)? - target_value;
        let predicted = objective - rec.edges.iter().map(|e| e.score).sum::<f64>();
        trajectory.records.push(BatchRecord {
            batch,
            edges: rec.edges,
            edges_added_total: total,
            objective_signed: next,
            predicted_signed: predicted,
            seconds: started.elapsed().as_secs_f64(),
        });
        stalled = if next >= objective { stalled + 1 } else { 0 };
        objective = next;
        if stalled >= STALL_LIMIT {
            return Err(RecommendError::Stalled { batches: stalled, trajectory: Box::new(trajectory) });
        }
    }
    Ok(DiverRun { graph, trajectory })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::attack_random;
    use crate::graph::{generate_scale_free, ScaleFreeParams};
    use crate::perturb::ScoreMode;

    fn scored(r: usize, c: usize, score: f64) -> ScoredEdge {
        ScoredEdge { r, c, theta: 0.1, score, mode: ScoreMode::Exact, nodes_used: 1, estimated: false }
    }

    #[test]
    fn source_selection() {
        let pi = CentralityVector { values: vec![3.0 / 7.0, 4.0 / 7.0], residual: 0.0, iterations: 0 };
        assert_eq!(select_sources(&pi, 1), vec![1]);
        assert_eq!(select_sources(&pi, 5), vec![1, 0]);
        let flat = CentralityVector { values: vec![0.2; 5], residual: 0.0, iterations: 0 };
        assert_eq!(select_sources(&flat, 3), vec![0, 1, 2]);
    }

    #[test]
    fn skip_policy_filters_overshoot_and_falls_back() {
        let cfg = RecommenderConfig { k: 2, ..Default::default() };
        let cands = vec![scored(0, 1, 0.5), scored(0, 2, 0.06), scored(1, 2, 0.05), scored(1, 3, 0.03), scored(2, 3, -0.2)];
        let picked = select_edges(cands.clone(), 0.1, &cfg);
        assert_eq!(picked.iter().map(|e| (e.r, e.c)).collect::<Vec<_>>(), vec![(0, 2), (1, 3)]);
        let picked = select_edges(cands, 0.01, &cfg);
        assert_eq!(picked.iter().map(|e| (e.r, e.c)).collect::<Vec<_>>(), vec![(1, 3)]);
    }

    #[test]
    fn closest_fit_and_negative_gaps() {
        let cfg = RecommenderConfig { k: 1, overshoot: OvershootPolicy::ClosestFit, ..Default::default() };
        let cands = vec![scored(0, 1, 0.5), scored(0, 2, 0.09), scored(1, 2, 0.12)];
        assert_eq!(select_edges(cands.clone(), 0.1, &cfg)[0].c, 2);
        assert_eq!(select_edges(cands, 0.1, &cfg)[0].r, 0);
        let cfg = RecommenderConfig { k: 1, ..Default::default() };
        let cands = vec![scored(0, 1, 0.05), scored(0, 2, -0.04)];
        assert_eq!(select_edges(cands, -0.1, &cfg)[0].c, 2);
    }

    #[test]
    fn no_attack_means_no_edges() {
        let g = generate_scale_free(&ScaleFreeParams::new(60, -2.5, 3)).unwrap();
        let x = Opinions::uniform(60, 4);
        let cfg = RecommenderConfig { n_src: 5, ..Default::default() };
        let rec = recommend_edges(&g, &x, &x, &cfg).unwrap();
        assert!(rec.edges.is_empty());
        let run = run_diver(&g, &x, &x, &cfg, RunParams::default()).unwrap();
        assert!(run.trajectory.records.is_empty());
        assert_eq!(run.graph, g);
    }

    #[test]
    fn recommended_edges_are_new_and_reduce_the_gap() {
        let g = generate_scale_free(&ScaleFreeParams::new(80, -2.5, 9)).unwrap();
        let x = Opinions::uniform(80, 1);
        let x_tilde = attack_random(&x, 8, 1.0, 2).unwrap();
        let cfg = RecommenderConfig { n_src: 8, k: 3, ..Default::default() };
        let rec = recommend_edges(&g, &x, &x_tilde, &cfg).unwrap();
        assert!(!rec.edges.is_empty() && rec.edges.len() <= 3);
        assert!(rec.gap > 0.0);
        for e in &rec.edges {
            assert_ne!(e.r, e.c);
            assert!(!g.has_edge(e.r, e.c));
            assert!(rec.sources.contains(&e.r));
            assert_eq!(e.mode, ScoreMode::Truncated);
        }
        assert!(rec.edges.windows(2).all(|w| w[0].score >= w[1].score));
    }

    #[test]
    fn two_hop_destinations() {
        let g = Graph::from_rows(vec![
            vec![(0, 0.6), (1, 0.4)],
            vec![(1, 0.6), (2, 0.4)],
            vec![(2, 0.6), (3, 0.4)],
            vec![(3, 0.6), (0, 0.4)],
        ])
        .unwrap();
        assert_eq!(destinations(&g, 0, DestinationScope::TwoHop), vec![2]);
        assert_eq!(destinations(&g, 0, DestinationScope::AllNodes), vec![2, 3]);
    }

    #[test]
    fn walk_mode_needs_truncation() {
        let g = generate_scale_free(&ScaleFreeParams::new(30, -2.5, 3)).unwrap();
        let x = Opinions::uniform(30, 4);
        let cfg = RecommenderConfig {
            n_src: 3,
            mfpt: MfptStrategy::Walk { walk_len: None, seed: 1 },
            summation: SummationScope::All,
            ..Default::default()
        };
        assert!(matches!(recommend_edges(&g, &x, &x, &cfg), Err(RecommendError::Config(_))));
    }

    #[test]
    fn periodic_graph_is_rejected() {
        let g = Graph::from_edges(2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let x = Opinions::new(vec![0.1, 0.2]).unwrap();
        let cfg = RecommenderConfig { n_src: 1, ..Default::default() };
        assert!(matches!(
            recommend_toward(&g, None, 0.0, &x, &cfg),
            Err(RecommendError::Invalid(_))
        ));
    }
}
