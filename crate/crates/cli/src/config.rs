//! Experiment configuration: a TOML file with dotted sections, overridden by
//! command-line flags.

use std::path::{Path, PathBuf};

use anyhow::Context;
use diver_core::recommend::{
    DestinationScope, MfptStrategy, OvershootPolicy, RecommenderConfig, RunParams, SummationScope,
    ThetaPolicy,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub network: NetworkConfig,
    pub opinions: OpinionConfig,
    pub attack: AttackConfig,
    pub recommender: RecommenderSection,
    pub run: RunSection,
    pub figures: FigureConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            out_dir: PathBuf::from("out"),
            network: NetworkConfig::default(),
            opinions: OpinionConfig::default(),
            attack: AttackConfig::default(),
            recommender: RecommenderSection::default(),
            run: RunSection::default(),
            figures: FigureConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    /// Edge list to load instead of generating a graph.
    pub path: Option<PathBuf>,
    pub n: usize,
    pub gamma: f64,
    pub self_loop_floor: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self { path: None, n: 250, gamma: -2.5, self_loop_floor: 0.51 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpinionConfig {
    /// Pre-attack opinions; drawn uniformly from the seed when absent.
    pub path: Option<PathBuf>,
    /// Post-attack opinions; produced by the attack when absent.
    pub attacked_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum AttackName {
    Random,
    Knapsack,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackConfig {
    pub kind: AttackName,
    /// Number of users set to `value` by the random attack.
    pub targets: usize,
    pub value: f64,
    pub budget: u64,
    /// One integer cost per user; unit costs when absent.
    pub costs_path: Option<PathBuf>,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self { kind: AttackName::Random, targets: 16, value: 1.0, budget: 16, costs_path: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MfptName {
    Exact,
    Walk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ScopeName {
    All,
    TwoHop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OvershootName {
    Skip,
    ClosestFit,
}

/// `"all"`, `"sources"` or a node count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SummationSetting {
    Named(SummationName),
    Size(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SummationName {
    All,
    Sources,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecommenderSection {
    pub k: usize,
    pub n_src: usize,
    pub theta: f64,
    /// Lines of `r c theta` overriding `theta` for specific edges.
    pub theta_path: Option<PathBuf>,
    pub destinations: ScopeName,
    pub mfpt: MfptName,
    /// Walk length for estimated passage times; sized from `n` when absent.
    pub walk_len: Option<u64>,
    pub summation: SummationSetting,
    pub overshoot: OvershootName,
    pub force: bool,
}

impl Default for RecommenderSection {
    fn default() -> Self {
        Self {
            k: 5,
            n_src: 25,
            theta: 0.1,
            theta_path: None,
            destinations: ScopeName::All,
            mfpt: MfptName::Exact,
            walk_len: None,
            summation: SummationSetting::Named(SummationName::Sources),
            overshoot: OvershootName::Skip,
            force: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub batch: usize,
    pub max_edges: usize,
    pub stop_tol: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        let p = RunParams::default();
        Self { batch: p.batch, max_edges: p.max_edges, stop_tol: p.stop_tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FigureConfig {
    pub enabled: bool,
    /// Summation sizes for the truncation curves.
    pub subset_sizes: Vec<usize>,
    /// Multiples of the default walk length for the convergence curve.
    pub walk_factors: Vec<f64>,
    pub walk_seeds: usize,
}

impl Default for FigureConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            subset_sizes: vec![1, 2, 5, 10, 25, 50, 100, 250],
            walk_factors: vec![0.125, 0.25, 0.5, 1.0, 2.0, 4.0],
            walk_seeds: 5,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Recommender settings; the per-edge θ table must already be loaded.
    pub fn recommender(&self, theta: ThetaPolicy) -> RecommenderConfig {
        let r = &self.recommender;
        RecommenderConfig {
            k: r.k,
            n_src: r.n_src,
            theta,
            destinations: match r.destinations {
                ScopeName::All => DestinationScope::AllNodes,
                ScopeName::TwoHop => DestinationScope::TwoHop,
            },
            mfpt: match r.mfpt {
                MfptName::Exact => MfptStrategy::Exact,
                MfptName::Walk => MfptStrategy::Walk {
                    walk_len: r.walk_len,
                    seed: diver_core::seed::derive_seed(self.seed, "walk"),
                },
            },
            summation: match r.summation {
                SummationSetting::Named(SummationName::All) => SummationScope::All,
                SummationSetting::Named(SummationName::Sources) => SummationScope::TopSources,
                SummationSetting::Size(s) => SummationScope::Top(s),
            },
            overshoot: match r.overshoot {
                OvershootName::Skip => OvershootPolicy::Skip,
                OvershootName::ClosestFit => OvershootPolicy::ClosestFit,
            },
            stop_tol: self.run.stop_tol,
            force_assumption: r.force,
            ..RecommenderConfig::default()
        }
    }

    pub fn run_params(&self) -> RunParams {
        RunParams { batch: self.run.batch, max_edges: self.run.max_edges, stop_tol: self.run.stop_tol }
    }
}
