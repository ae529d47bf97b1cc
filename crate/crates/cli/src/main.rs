//! `diver`: generate networks, attack opinions, recommend edges and run the
//! iterative restoration, writing CSV for every step.

mod commands;
mod config;
mod figures;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{AttackName, ExperimentConfig, MfptName, OvershootName, ScopeName, SummationName, SummationSetting};

#[derive(Debug, Parser)]
#[command(name = "diver", version, about = "Restore a DeGroot consensus value by recommending edges")]
struct Cli {
    /// TOML configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; every random component derives its own seed from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a scale-free network and uniform opinions.
    Generate {
        #[command(flatten)]
        network: NetworkArgs,
    },
    /// Apply an attack and write the attacked opinions.
    Attack {
        #[command(flatten)]
        network: NetworkArgs,
        #[command(flatten)]
        opinions: OpinionArgs,
        #[command(flatten)]
        attack: AttackArgs,
    },
    /// Recommend one batch of edges.
    Recommend {
        #[command(flatten)]
        network: NetworkArgs,
        #[command(flatten)]
        opinions: OpinionArgs,
        #[command(flatten)]
        attack: AttackArgs,
        #[command(flatten)]
        recommender: RecommenderArgs,
    },
    /// Add edges batch by batch until the consensus value is restored.
    Run {
        #[command(flatten)]
        network: NetworkArgs,
        #[command(flatten)]
        opinions: OpinionArgs,
        #[command(flatten)]
        attack: AttackArgs,
        #[command(flatten)]
        recommender: RecommenderArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Write mean first passage times.
    Mfpt {
        #[command(flatten)]
        network: NetworkArgs,
        #[arg(long, value_enum)]
        mfpt: Option<MfptName>,
        #[arg(long)]
        walk_len: Option<u64>,
        /// Number of most central nodes used as walk targets and sources.
        #[arg(long, default_value_t = 25)]
        top: usize,
    },
    /// Build the subset-sum gadget and solve it exhaustively.
    Gadget {
        /// Comma-separated item values in [0, 1].
        #[arg(long, value_delimiter = ',', required = true)]
        z: Vec<f64>,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        s: f64,
    },
}

#[derive(Debug, Args, Default)]
struct NetworkArgs {
    /// Edge list to load instead of generating.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
}

#[derive(Debug, Args, Default)]
struct OpinionArgs {
    #[arg(long)]
    opinions: Option<PathBuf>,
    #[arg(long)]
    attacked: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
struct AttackArgs {
    #[arg(long, value_enum)]
    attack: Option<AttackName>,
    #[arg(long)]
    targets: Option<usize>,
    #[arg(long)]
    value: Option<f64>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    costs: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
struct RecommenderArgs {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n_src: Option<usize>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    theta_table: Option<PathBuf>,
    #[arg(long, value_enum)]
    destinations: Option<ScopeName>,
    #[arg(long, value_enum)]
    mfpt: Option<MfptName>,
    #[arg(long)]
    walk_len: Option<u64>,
    /// `all`, `sources` or a node count.
    #[arg(long, value_parser = parse_summation)]
    summation: Option<SummationSetting>,
    #[arg(long, value_enum)]
    overshoot: Option<OvershootName>,
    /// Score rows that are not rationally selfish anyway.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args, Default)]
struct RunArgs {
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    max_edges: Option<usize>,
    #[arg(long)]
    stop_tol: Option<f64>,
    #[arg(long)]
    no_figures: bool,
}

fn parse_summation(text: &str) -> Result<SummationSetting, String> {
    match text {
        "all" => Ok(SummationSetting::Named(SummationName::All)),
        "sources" => Ok(SummationSetting::Named(SummationName::Sources)),
        other => other
            .parse()
            .map(SummationSetting::Size)
            .map_err(|_| format!("expected `all`, `sources` or a count, got `{other}`")),
    }
}

macro_rules! set {
    ($target:expr, $value:expr) => {
        if let Some(v) = $value {
            $target = v;
        }
    };
}

impl NetworkArgs {
    fn apply(self, cfg: &mut ExperimentConfig) {
        if self.graph.is_some() {
            cfg.network.path = self.graph;
        }
        set!(cfg.network.n, self.n);
        set!(cfg.network.gamma, self.gamma);
    }
}

impl OpinionArgs {
    fn apply(self, cfg: &mut ExperimentConfig) {
        if self.opinions.is_some() {
            cfg.opinions.path = self.opinions;
        }
        if self.attacked.is_some() {
            cfg.opinions.attacked_path = self.attacked;
        }
    }
}

impl AttackArgs {
    fn apply(self, cfg: &mut ExperimentConfig) {
        set!(cfg.attack.kind, self.attack);
        set!(cfg.attack.targets, self.targets);
        set!(cfg.attack.value, self.value);
        set!(cfg.attack.budget, self.budget);
        if self.costs.is_some() {
            cfg.attack.costs_path = self.costs;
        }
    }
}

impl RecommenderArgs {
    fn apply(self, cfg: &mut ExperimentConfig) {
        let r = &mut cfg.recommender;
        set!(r.k, self.k);
        set!(r.n_src, self.n_src);
        set!(r.theta, self.theta);
        if self.theta_table.is_some() {
            r.theta_path = self.theta_table;
        }
        set!(r.destinations, self.destinations);
        set!(r.mfpt, self.mfpt);
        if self.walk_len.is_some() {
            r.walk_len = self.walk_len;
        }
        set!(r.summation, self.summation);
        set!(r.overshoot, self.overshoot);
        r.force |= self.force;
    }
}

impl RunArgs {
    fn apply(self, cfg: &mut ExperimentConfig) {
        set!(cfg.run.batch, self.batch);
        set!(cfg.run.max_edges, self.max_edges);
        set!(cfg.run.stop_tol, self.stop_tol);
        if self.no_figures {
            cfg.figures.enabled = false;
        }
    }
}

/// Bad flags or configuration, as opposed to a failure inside the pipeline.
#[derive(Debug)]
struct UsageError(anyhow::Error);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path).map_err(UsageError)?,
        None => ExperimentConfig::default(),
    };
    set!(cfg.seed, cli.seed);
    set!(cfg.out_dir, cli.out_dir);
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| UsageError(e.into()))?;
    }
    match cli.command {
        Command::Generate { network } => {
            network.apply(&mut cfg);
            commands::generate(&cfg)
        }
        Command::Attack { network, opinions, attack } => {
            network.apply(&mut cfg);
            opinions.apply(&mut cfg);
            attack.apply(&mut cfg);
            commands::attack(&cfg)
        }
        Command::Recommend { network, opinions, attack, recommender } => {
            network.apply(&mut cfg);
            opinions.apply(&mut cfg);
            attack.apply(&mut cfg);
            recommender.apply(&mut cfg);
            commands::recommend(&cfg)
        }
        Command::Run { network, opinions, attack, recommender, run } => {
            network.apply(&mut cfg);
            opinions.apply(&mut cfg);
            attack.apply(&mut cfg);
            recommender.apply(&mut cfg);
            run.apply(&mut cfg);
            commands::run(&cfg)
        }
        Command::Mfpt { network, mfpt, walk_len, top } => {
            network.apply(&mut cfg);
            set!(cfg.recommender.mfpt, mfpt);
            if walk_len.is_some() {
                cfg.recommender.walk_len = walk_len;
            }
            commands::mfpt(&cfg, top)
        }
        Command::Gadget { z, k, s } => commands::gadget(&cfg, &z, k, s),
    }
}
