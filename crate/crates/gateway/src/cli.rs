use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use navsim_core::agents::tabular::{tabular_train, TrainConfig};
use navsim_core::bundle::{build_environment_with, load_bundle, save_bundle, BuildOptions};
use navsim_core::dataset::{write_dataset, write_jsonl};
use navsim_core::episode::{EpisodeConfig, RewardRule, DEFAULT_MAX_ROUNDS};
use navsim_core::eval::{eval_interactive, eval_static, InteractiveConfig};
use navsim_core::graph::{BranchingSpec, Role, SplitAssignment};
use navsim_core::icons::NameStyle;
use navsim_core::layout::LayoutPolicy;
use navsim_core::report::{render_table, write_report, Report};
use navsim_core::tasks::{
    enumerate_tasks, split_dataset, DatasetKind, DatasetRecord, TaskEntry, TaskSpec,
};
use navsim_core::variant::{apply_variant, save_variant, variant_dir, VariantKind, VariantSpec};
use navsim_core::{EnvBundle, PolicyTable, PolicyTable32};

use crate::agent::{build_agent, AgentKind};
use crate::config::FileConfig;
use crate::play::play;
use crate::transcript::Transcript;

#[derive(Debug, Parser)]
#[command(
    name = "navsim",
    version,
    about = "Screen-navigation environment: build, evaluate, train and serve"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Seed for whatever the command draws.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Environment bundle directory.
    #[arg(long)]
    pub env_dir: Option<PathBuf>,
    /// Output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML file with defaults for any of these options.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a base environment bundle.
    Gen(GenArgs),
    /// Derive a perturbed copy of a bundle.
    Variant(VariantArgs),
    /// Write one dataset split as JSONL.
    Synth(SynthArgs),
    /// Score single steps against reference actions.
    EvalStatic(EvalStaticArgs),
    /// Run closed-loop episodes and report Pass@k.
    EvalInteractive(EvalInteractiveArgs),
    /// Train a tabular Q-learning policy.
    TrainTabular(TrainArgs),
    /// Serve sessions over HTTP.
    Serve(ServeArgs),
    /// Step through one episode by hand.
    Play(PlayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NameStyleArg {
    Pseudo,
    Nouns,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LayoutArg {
    Grid,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RoleArg {
    Sft,
    Rl,
    Test,
}

impl From<RoleArg> for Role {
    fn from(r: RoleArg) -> Self {
        match r {
            RoleArg::Sft => Role::Sft,
            RoleArg::Rl => Role::Rl,
            RoleArg::Test => Role::Test,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Edges,
    Paths,
    Captions,
    Grounding,
    Interactive,
}

impl From<KindArg> for DatasetKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Edges => DatasetKind::Edges,
            KindArg::Paths => DatasetKind::Paths,
            KindArg::Captions => DatasetKind::Captions,
            KindArg::Grounding => DatasetKind::Grounding,
            KindArg::Interactive => DatasetKind::Interactive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Image,
    Name,
    Position,
    Noise,
}

impl From<VariantArg> for VariantKind {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Image => VariantKind::Image,
            VariantArg::Name => VariantKind::Name,
            VariantArg::Position => VariantKind::Position,
            VariantArg::Noise => VariantKind::Noise,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub common: Common,
    /// Children per node at each depth, e.g. 5,3,2,2,1,1,0.
    #[arg(long)]
    pub branching: Option<String>,
    #[arg(long, value_enum, default_value = "pseudo")]
    pub name_style: NameStyleArg,
    #[arg(long, value_enum, default_value = "grid")]
    pub layout: LayoutArg,
}

#[derive(Debug, Args)]
pub struct VariantArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub kind: VariantArg,
    /// Extra no-op icons per screen for the noise variant.
    #[arg(long, default_value_t = 2)]
    pub noise_count: usize,
    /// Keep Home and Back in their slots for the position variant.
    #[arg(long)]
    pub pin_system: bool,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Role of each root subtree in order, e.g. sft,sft,rl,rl,test.
    #[arg(long)]
    pub roles: Option<String>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub split_args: SplitArgs,
    #[arg(long, value_enum)]
    pub split: RoleArg,
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Draws per icon for captions and grounding.
    #[arg(long, default_value_t = navsim_core::tasks::DEFAULT_ICON_MULTIPLICITY)]
    pub multiplicity: usize,
}

#[derive(Debug, Args)]
pub struct EvalStaticArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub split_args: SplitArgs,
    #[arg(long, value_enum)]
    pub agent: AgentKind,
    #[arg(long, value_enum, default_value = "test")]
    pub split: RoleArg,
    /// Policy file for the tabular agent.
    #[arg(long)]
    pub policy: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalInteractiveArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub split_args: SplitArgs,
    #[arg(long, value_enum)]
    pub agent: AgentKind,
    #[arg(long, value_enum, default_value = "test")]
    pub split: RoleArg,
    /// Rollouts per task.
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub max_rounds: Option<u32>,
    #[arg(long, action = ArgAction::Set)]
    pub allow_complete: Option<bool>,
    /// Only tasks up to this shortest-path length.
    #[arg(long)]
    pub max_distance: Option<u32>,
    /// Write one transcript per rollout to this JSONL file.
    #[arg(long)]
    pub transcripts: Option<PathBuf>,
    #[arg(long)]
    pub policy: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub split_args: SplitArgs,
    #[arg(long, value_enum, default_value = "rl")]
    pub split: RoleArg,
    #[arg(long, default_value_t = 3)]
    pub max_distance: u32,
    /// Episodes per task.
    #[arg(long)]
    pub episodes: Option<u32>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub epsilon_start: Option<f64>,
    #[arg(long)]
    pub epsilon_end: Option<f64>,
    #[arg(long)]
    pub max_rounds: Option<u32>,
    #[arg(long, action = ArgAction::Set)]
    pub allow_complete: Option<bool>,
    /// Pay for every `complete`, reached or not.
    #[arg(long)]
    pub broken_reward: bool,
    #[arg(long, value_enum, default_value = "f64")]
    pub precision: Precision,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub bind: Option<String>,
}

#[derive(Debug, Args)]
pub struct PlayArgs {
    #[command(flatten)]
    pub common: Common,
    /// Instruction such as "From page_0 to page_6".
    #[arg(long)]
    pub task: String,
    #[arg(long)]
    pub max_rounds: Option<u32>,
    #[arg(long, action = ArgAction::Set)]
    pub allow_complete: Option<bool>,
}

/// Common options after merging flags, config file and defaults.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub seed: u64,
    pub env_dir: PathBuf,
    pub out: Option<PathBuf>,
    pub file: FileConfig,
}

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_ENV_DIR: &str = "env";
pub const DEFAULT_BIND: &str = "127.0.0.1:8080";

impl Common {
    pub fn resolve(&self) -> anyhow::Result<Resolved> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        Ok(Resolved {
            seed: self.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            env_dir: self
                .env_dir
                .clone()
                .or_else(|| file.env_dir.clone())
                .unwrap_or_else(|| DEFAULT_ENV_DIR.into()),
            out: self.out.clone().or_else(|| file.out.clone()),
            file,
        })
    }
}

impl Resolved {
    fn load_env(&self) -> anyhow::Result<EnvBundle> {
        load_bundle(&self.env_dir)
            .with_context(|| format!("loading environment from {}", self.env_dir.display()))
    }

    fn split(&self, env: &EnvBundle, args: &SplitArgs) -> anyhow::Result<SplitAssignment> {
        let roles = match args.roles.as_ref().or(self.file.roles.as_ref()) {
            Some(s) => s
                .split(',')
                .map(|r| r.trim().parse::<Role>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| anyhow!("bad --roles: {e}"))?,
            None => Role::env_base_split(),
        };
        env.graph
            .partition_subtrees(&roles)
            .map_err(|e| anyhow!("cannot assign roles {roles:?} to the root subtrees: {e}"))
    }

    fn episode(
        &self,
        max_rounds: Option<u32>,
        allow_complete: Option<bool>,
    ) -> anyhow::Result<EpisodeConfig> {
        let max_rounds = max_rounds
            .or(self.file.max_rounds)
            .unwrap_or(DEFAULT_MAX_ROUNDS);
        if max_rounds == 0 {
            bail!("max rounds must be at least 1");
        }
        Ok(EpisodeConfig::default()
            .with_max_rounds(max_rounds)
            .with_allow_complete(allow_complete.or(self.file.allow_complete).unwrap_or(true)))
    }

    fn policy(&self, policy: Option<&Path>) -> PathBuf {
        policy
            .map(Path::to_path_buf)
            .unwrap_or_else(|| self.env_dir.join("policy.json"))
    }
}

/// Tasks among the role's subtrees, each joined with the root.
pub fn role_tasks(
    env: &EnvBundle,
    split: &SplitAssignment,
    role: Role,
    max_distance: Option<u32>,
) -> Vec<TaskEntry> {
    let nav = env.navigator();
    split
        .subtree_sets(&env.graph, role)
        .iter()
        .flat_map(|set| enumerate_tasks(&nav, set))
        .filter(|t| max_distance.is_none_or(|m| t.distance <= m))
        .collect()
}

pub fn run() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let stdout = io::stdout();
    execute(cli.command, &mut stdout.lock())
}

pub fn execute(command: Command, out: &mut impl Write) -> anyhow::Result<()> {
    match command {
        Command::Gen(a) => cmd_gen(a, out),
        Command::Variant(a) => cmd_variant(a, out),
        Command::Synth(a) => cmd_synth(a, out),
        Command::EvalStatic(a) => cmd_eval_static(a, out),
        Command::EvalInteractive(a) => cmd_eval_interactive(a, out),
        Command::TrainTabular(a) => cmd_train(a, out),
        Command::Serve(a) => cmd_serve(a),
        Command::Play(a) => cmd_play(a, out),
    }
}

fn cmd_gen(a: GenArgs, out: &mut impl Write) -> anyhow::Result<()> {
    let r = a.common.resolve()?;
    let branching: BranchingSpec = match a.branching.as_ref().or(r.file.branching.as_ref()) {
        Some(s) => s.parse().map_err(|e| anyhow!("bad --branching: {e}"))?,
        None => BranchingSpec::env_base(),
    };
    let opts = BuildOptions {
        name_style: match a.name_style {
            NameStyleArg::Pseudo => NameStyle::PseudoWord,
            NameStyleArg::Nouns => NameStyle::Nouns,
        },
        layout: match a.layout {
            LayoutArg::Grid => LayoutPolicy::Grid,
            LayoutArg::Free => LayoutPolicy::Free { pin_system: true },
        },
    };
    let env = build_environment_with(&branching, r.seed, opts)?;
    let dir = r.out.clone().unwrap_or(r.env_dir.clone());
    save_bundle(&env, &dir)?;
    writeln!(
        out,
        "built {} screens, {} assets, max distance {} in {}",
        env.screens.len(),
        env.assets.len(),
        env.navigator().max_distance(),
        dir.display()
    )?;
    Ok(())
}

fn cmd_variant(a: VariantArgs, out: &mut impl Write) -> anyhow::Result<()> {
    let r = a.common.resolve()?;
    let base = r.load_env()?;
    let kind: VariantKind = a.kind.into();
    let mut spec = VariantSpec::new(kind, r.seed);
    spec.noise_count = a.noise_count;
    spec.pin_system = a.pin_system;
    let env = apply_variant(&base, &spec)?;
    let dir = match &r.out {
        Some(d) => {
            save_bundle(&env, d)?;
            d.clone()
        }
        None => save_variant(&env, &r.env_dir, kind)?,
    };
    debug_assert!(r.out.is_some() || dir == variant_dir(&r.env_dir, kind));
    writeln!(
        out,
        "wrote {kind} variant ({} screens) to {}",
        env.screens.len(),
        dir.display()
    )?;
    Ok(())
}

fn cmd_synth(a: SynthArgs, out: &mut impl Write) -> anyhow::Result<()> {
    let r = a.common.resolve()?;
    let env = r.load_env()?;
    let split = r.split(&env, &a.split_args)?;
    let role: Role = a.split.into();
    let kind: DatasetKind = a.kind.into();
    let records = split_dataset(
        &env,
        &env.navigator(),
        &split,
        role,
        kind,
        a.multiplicity,
        r.seed,
    );
    let path = r.out.clone().unwrap_or_else(|| {
        r.env_dir
            .join("data")
            .join(format!("{:?}", role).to_lowercase())
            .join(kind.file_name())
    });
    write_dataset(&records, &path)?;
    writeln!(out, "wrote {} records to {}", records.len(), path.display())?;
    Ok(())
}

fn cmd_eval_static(a: EvalStaticArgs, out: &mut impl Write) -> anyhow::Result<()> {
    let r = a.common.resolve()?;
    let env = Arc::new(r.load_env()?);
    let split = r.split(&env, &a.split_args)?;
    let nav = env.navigator();
    let role: Role = a.split.into();
    let instances: Vec<_> = split_dataset(&env, &nav, &split, role, DatasetKind::Paths, 0, r.seed)
        .into_iter()
        .filter_map(|rec| match rec {
            DatasetRecord::Navigation(s) => Some(s),
            _ => None,
        })
        .collect();
    let agent = build_agent(
        a.agent,
        env.clone(),
        &split,
        &r.policy(a.policy.as_deref()),
        r.seed,
    )?;
    let report = eval_static(&env, &instances, &agent, r.seed);
    let report = Report::Static {
        agent: agent_label(a.agent),
        report,
    };
    emit_report(
        &r,
        &report,
        &format!("static_{}", agent_label(a.agent)),
        out,
    )
}

fn cmd_eval_interactive(a: EvalInteractiveArgs, out: &mut impl Write) -> anyhow::Result<()> {
    let r = a.common.resolve()?;
    let env = Arc::new(r.load_env()?);
    let split = r.split(&env, &a.split_args)?;
    let tasks = role_tasks(&env, &split, a.split.into(), a.max_distance);
    if tasks.is_empty() {
        bail!("no tasks selected");
    }
    let cfg = InteractiveConfig {
        n: a.n.or(r.file.rollouts).unwrap_or(1),
        episode: r.episode(a.max_rounds, a.allow_complete)?,
        seed: r.seed,
    };
    if cfg.n == 0 {
        bail!("--n must be at least 1");
    }
    let agent = build_agent(
        a.agent,
        env.clone(),
        &split,
        &r.policy(a.policy.as_deref()),
        r.seed,
    )?;
    let (report, records) = eval_interactive(&env, &env.navigator(), &tasks, &agent, &cfg);
    if let Some(path) = &a.transcripts {
        let transcripts: Vec<Transcript> = records
            .iter()
            .map(|rec| Transcript::from_record(rec, &cfg.episode))
            .collect();
        write_jsonl(&transcripts, path)?;
        writeln!(
            out,
            "wrote {} transcripts to {}",
            transcripts.len(),
            path.display()
        )?;
    }
    let report = Report::Interactive {
        agent: agent_label(a.agent),
        report,
    };
    emit_report(
        &r,
        &report,
        &format!("interactive_{}", agent_label(a.agent)),
        out,
    )
}

fn agent_label(kind: AgentKind) -> String {
    kind.to_possible_value()
        .map(|v| v.get_name().to_string())
        .unwrap_or_default()
}

fn emit_report(
    r: &Resolved,
    report: &Report,
    stem: &str,
    out: &mut impl Write,
) -> anyhow::Result<()> {
    let path = r
        .out
        .clone()
        .unwrap_or_else(|| r.env_dir.join("reports").join(format!("{stem}.txt")));
    let sidecar = write_report(report, &path)?;
    write!(out, "{}", render_table(report))?;
    writeln!(
        out,
        "report: {} (json: {})",
        path.display(),
        sidecar.display()
    )?;
    Ok(())
}

fn cmd_train(a: TrainArgs, out: &mut impl Write) -> anyhow::Result<()> {
    let r = a.common.resolve()?;
    let env = r.load_env()?;
    let split = r.split(&env, &a.split_args)?;
    let entries = role_tasks(&env, &split, a.split.into(), Some(a.max_distance));
    let tasks: Vec<TaskSpec> = entries.iter().map(|t| t.task).collect();
    let defaults = TrainConfig::default();
    let mut episode = r.episode(a.max_rounds, a.allow_complete)?;
    if a.broken_reward {
        episode.reward_rule = RewardRule::CompleteAlwaysPays;
    }
    let cfg = TrainConfig {
        episodes_per_task: a
            .episodes
            .or(r.file.episodes)
            .unwrap_or(defaults.episodes_per_task),
        alpha: a.alpha.or(r.file.alpha).unwrap_or(defaults.alpha),
        gamma: a.gamma.or(r.file.gamma).unwrap_or(defaults.gamma),
        epsilon_start: a
            .epsilon_start
            .or(r.file.epsilon_start)
            .unwrap_or(defaults.epsilon_start),
        epsilon_end: a
            .epsilon_end
            .or(r.file.epsilon_end)
            .unwrap_or(defaults.epsilon_end),
        seed: r.seed,
        episode,
    };
    let nav = env.navigator();
    let path = r.policy(r.out.as_deref());
    let states = match a.precision {
        Precision::F64 => {
            let table: PolicyTable = tabular_train(&env, &nav, &tasks, &cfg)?;
            table.save(&path)?;
            table.len()
        }
        Precision::F32 => {
            let table: PolicyTable32 = tabular_train(&env, &nav, &tasks, &cfg)?;
            table.save(&path)?;
            table.len()
        }
    };
    writeln!(
        out,
        "trained on {} tasks ({} episodes each), {} states, policy written to {}",
        tasks.len(),
        cfg.episodes_per_task,
        states,
        path.display()
    )?;
    Ok(())
}

fn cmd_serve(a: ServeArgs) -> anyhow::Result<()> {
    let r = a.common.resolve()?;
    let env = Arc::new(r.load_env()?);
    let bind = a
        .bind
        .or(r.file.bind.clone())
        .unwrap_or_else(|| DEFAULT_BIND.to_string());
    let addr: SocketAddr = bind.parse().with_context(|| format!("bad --bind {bind}"))?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(crate::server::serve(env, Some(r.env_dir.clone()), addr))?;
    Ok(())
}

fn cmd_play(a: PlayArgs, out: &mut impl Write) -> anyhow::Result<()> {
    let r = a.common.resolve()?;
    let env = r.load_env()?;
    let task: TaskSpec = a.task.parse()?;
    let cfg = r.episode(a.max_rounds, a.allow_complete)?;
    let stdin = io::stdin();
    play(&env, task, cfg, stdin.lock(), out)?;
    Ok(())
}
