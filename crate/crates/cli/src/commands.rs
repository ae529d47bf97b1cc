use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use diver_core::adversary::{AttackKind, AttackSpec};
use diver_core::graph::{generate_scale_free, read_graph, write_graph, ScaleFreeParams};
use diver_core::mfpt::{mfpt_estimate, mfpt_exact, walk_length_default, ExactOptions, WalkParams};
use diver_core::opinion::{read_opinions, read_vector, write_vector};
use diver_core::oracle::{build_gadget, verify_gadget};
use diver_core::perturb::scores_to_csv;
use diver_core::recommend::{recommend_edges, run_diver, RecommendError, ThetaPolicy, Trajectory};
use diver_core::seed::derive_seed;
use diver_core::spectral::{consensus_value, eigencentrality, PowerOptions};
use diver_core::{Graph, Opinions};

use crate::config::{AttackName, ExperimentConfig, MfptName};
use crate::{figures, UsageError};

/// Creates the output directory and archives the effective configuration.
fn prepare(cfg: &ExperimentConfig) -> anyhow::Result<PathBuf> {
    let dir = cfg.out_dir.clone();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("config.toml"), cfg.to_toml())?;
    Ok(dir)
}

fn load_graph(cfg: &ExperimentConfig) -> anyhow::Result<Graph> {
    let net = &cfg.network;
    match &net.path {
        Some(path) => read_graph(path).with_context(|| format!("reading graph {}", path.display())),
        None => {
            let params = ScaleFreeParams {
                self_loop_floor: net.self_loop_floor,
                ..ScaleFreeParams::new(net.n, net.gamma, derive_seed(cfg.seed, "graph"))
            };
            Ok(generate_scale_free(&params)?)
        }
    }
}

fn check_len(what: &str, got: usize, n: usize) -> anyhow::Result<()> {
    if got != n {
        bail!("{what} has {got} entries but the graph has {n} nodes");
    }
    Ok(())
}

fn load_opinions(cfg: &ExperimentConfig, n: usize) -> anyhow::Result<Opinions> {
    let x = match &cfg.opinions.path {
        Some(path) => read_opinions(path).with_context(|| format!("reading opinions {}", path.display()))?,
        None => Opinions::uniform(n, derive_seed(cfg.seed, "opinions")),
    };
    check_len("opinion vector", x.len(), n)?;
    Ok(x)
}

fn read_costs(path: &Path) -> anyhow::Result<Vec<u64>> {
    let values = read_vector(path).with_context(|| format!("reading costs {}", path.display()))?;
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 {
                Ok(v as u64)
            } else {
                Err(UsageError(anyhow::anyhow!("cost of user {i} is {v}; costs must be non-negative integers")).into())
            }
        })
        .collect()
}

fn load_attacked(cfg: &ExperimentConfig, g: &Graph, x: &Opinions) -> anyhow::Result<Opinions> {
    let n = g.node_count();
    if let Some(path) = &cfg.opinions.attacked_path {
        let xt = read_opinions(path).with_context(|| format!("reading attacked opinions {}", path.display()))?;
        check_len("attacked opinion vector", xt.len(), n)?;
        return Ok(xt);
    }
    let a = &cfg.attack;
    let kind = match a.kind {
        AttackName::Random => AttackKind::RandomTargets { n_targets: a.targets },
        AttackName::Knapsack => AttackKind::Knapsack {
            budget: a.budget,
            costs: a.costs_path.as_deref().map(read_costs).transpose()?,
        },
    };
    let spec = AttackSpec { kind, target_value: a.value, seed: derive_seed(cfg.seed, "attack") };
    let pi = eigencentrality(g, PowerOptions::default())?;
    Ok(spec.apply(&pi, x)?)
}

/// Whitespace-separated `r c theta` lines; `#` starts a comment.
fn read_theta_table(path: &Path, default: f64) -> anyhow::Result<ThetaPolicy> {
    let text = fs::read_to_string(path).with_context(|| format!("reading theta table {}", path.display()))?;
    let mut weights = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parsed = match fields.as_slice() {
            [r, c, t] => r.parse::<usize>().ok().zip(c.parse::<usize>().ok()).zip(t.parse::<f64>().ok()),
            _ => None,
        };
        let Some(((r, c), theta)) = parsed else {
            bail!(UsageError(anyhow::anyhow!(
                "{}:{}: expected `r c theta`, got `{line}`",
                path.display(),
                idx + 1
            )));
        };
        weights.insert((r, c), theta);
    }
    Ok(ThetaPolicy::PerEdge { default, weights })
}

fn theta_policy(cfg: &ExperimentConfig) -> anyhow::Result<ThetaPolicy> {
    let r = &cfg.recommender;
    match &r.theta_path {
        Some(path) => read_theta_table(path, r.theta),
        None => Ok(ThetaPolicy::Constant(r.theta)),
    }
}

/// Invalid recommender settings are usage errors; everything else is a
/// domain error.
fn classify(e: RecommendError) -> anyhow::Error {
    match e {
        RecommendError::Config(_) => UsageError(e.into()).into(),
        e => e.into(),
    }
}

struct Inputs {
    graph: Graph,
    x: Opinions,
    x_tilde: Opinions,
}

fn load_inputs(cfg: &ExperimentConfig) -> anyhow::Result<Inputs> {
    let graph = load_graph(cfg)?;
    let x = load_opinions(cfg, graph.node_count())?;
    let x_tilde = load_attacked(cfg, &graph, &x)?;
    Ok(Inputs { graph, x, x_tilde })
}

pub fn generate(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    let dir = prepare(cfg)?;
    let g = load_graph(cfg)?;
    let x = load_opinions(cfg, g.node_count())?;
    write_graph(&g, dir.join("graph.tsv"))?;
    write_vector(x.as_slice(), dir.join("opinions.tsv"))?;
    println!("{} nodes, {} edges -> {}", g.node_count(), g.edge_count(), dir.display());
    Ok(())
}

pub fn attack(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    let dir = prepare(cfg)?;
    let inputs = load_inputs(cfg)?;
    write_vector(inputs.x_tilde.as_slice(), dir.join("attacked.tsv"))?;
    let changed = (0..inputs.x.len()).filter(|&i| inputs.x[i] != inputs.x_tilde[i]).count();
    let pi = eigencentrality(&inputs.graph, PowerOptions::default())?;
    println!(
        "{changed} opinions changed; consensus {:.6} -> {:.6}",
        consensus_value(&pi, &inputs.x)?,
        consensus_value(&pi, &inputs.x_tilde)?
    );
    Ok(())
}

pub fn recommend(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    let dir = prepare(cfg)?;
    let inputs = load_inputs(cfg)?;
    let rc = cfg.recommender(theta_policy(cfg)?);
    let rec = recommend_edges(&inputs.graph, &inputs.x, &inputs.x_tilde, &rc).map_err(classify)?;
    fs::write(dir.join("recommendations.csv"), scores_to_csv(&rec.edges))?;
    println!(
        "gap {:.6e}; {} of {} candidates recommended",
        rec.gap,
        rec.edges.len(),
        rec.candidates_scored
    );
    Ok(())
}

fn edges_csv(t: &Trajectory) -> String {
    let mut out = String::from("batch,r,c,theta,score,mode\n");
    for rec in &t.records {
        for e in &rec.edges {
            let _ = writeln!(out, "{},{},{},{},{},{}", rec.batch, e.r, e.c, e.theta, e.score, e.mode.as_str());
        }
    }
    out
}

pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    let dir = prepare(cfg)?;
    let inputs = load_inputs(cfg)?;
    let rc = cfg.recommender(theta_policy(cfg)?);
    let (trajectory, graph, stalled) =
        match run_diver(&inputs.graph, &inputs.x, &inputs.x_tilde, &rc, cfg.run_params()) {
            Ok(run) => (run.trajectory, Some(run.graph), None),
            Err(RecommendError::Stalled { batches, trajectory }) => (*trajectory, None, Some(batches)),
            Err(e) => return Err(classify(e)),
        };
    fs::write(dir.join("trajectory.csv"), trajectory.to_csv())?;
    fs::write(dir.join("edges.csv"), edges_csv(&trajectory))?;
    let final_graph = match graph {
        Some(g) => g,
        None => trajectory.records.iter().flat_map(|r| &r.edges).try_fold(inputs.graph.clone(), |g, e| {
            g.add_edge_perturbed(&e.perturbation())
        })?,
    };
    write_graph(&final_graph, dir.join("final_graph.tsv"))?;
    if cfg.figures.enabled {
        figures::emit(cfg, &inputs.graph, &inputs.x_tilde, &rc, &dir)?;
    }
    println!(
        "gap {:.6e} -> {:.6e} after {} edges in {} batches ({:?})",
        trajectory.initial_objective,
        trajectory.final_objective(),
        trajectory.edges_added(),
        trajectory.records.len(),
        trajectory.termination
    );
    if let Some(batches) = stalled {
        bail!("objective failed to decrease for {batches} consecutive batches");
    }
    Ok(())
}

pub fn mfpt(cfg: &ExperimentConfig, top: usize) -> anyhow::Result<()> {
    let dir = prepare(cfg)?;
    let g = load_graph(cfg)?;
    let n = g.node_count();
    let pi = eigencentrality(&g, PowerOptions::default())?;
    let table = match cfg.recommender.mfpt {
        MfptName::Exact => mfpt_exact(&g, &pi, ExactOptions::default())?,
        MfptName::Walk => {
            if top == 0 || top > n {
                bail!(UsageError(anyhow::anyhow!("--top must lie in [1, {n}], got {top}")));
            }
            let ranking = pi.ranking();
            let nodes = &ranking[..top];
            let walk_len = cfg.recommender.walk_len.unwrap_or_else(|| walk_length_default(n));
            let params = WalkParams::new(walk_len, derive_seed(cfg.seed, "walk")).starting_at(ranking[0]);
            mfpt_estimate(&g, nodes, nodes, params)?
        }
    };
    table.write_csv(dir.join("mfpt.csv"))?;
    println!("mfpt table for {n} nodes -> {}", dir.join("mfpt.csv").display());
    Ok(())
}

pub fn gadget(cfg: &ExperimentConfig, z: &[f64], k: usize, s: f64) -> anyhow::Result<()> {
    let inst = build_gadget(z, k, s).map_err(|e| UsageError(e.into()))?;
    let best = inst.solve()?;
    let witness: Vec<usize> = best.edges.iter().map(|&(a, _)| a / 2).collect();
    let (lhs, rhs) = verify_gadget(&inst, &witness)?;
    let items = witness.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(",");
    println!("objective {}", best.objective);
    println!("witness {items}");
    println!("subset-sum residual {rhs} (degree formula {lhs})");

    let dir = prepare(cfg)?;
    let mut edges = String::from("a,b\n");
    for &(a, b) in &inst.edges {
        let _ = writeln!(edges, "{a},{b}");
    }
    fs::write(dir.join("gadget_edges.csv"), edges)?;
    write_vector(inst.x.as_slice(), dir.join("gadget_x.tsv"))?;
    write_vector(inst.x_tilde.as_slice(), dir.join("gadget_x_tilde.tsv"))?;
    let mut result = String::from("item,z,a,b\n");
    for (&l, &(a, b)) in witness.iter().zip(&best.edges) {
        let _ = writeln!(result, "{l},{},{a},{b}", inst.z[l]);
    }
    fs::write(dir.join("gadget_witness.csv"), result)?;
    Ok(())
}
