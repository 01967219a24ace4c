use std::path::Path;
use std::sync::Arc;

use anyhow::Context;
use clap::ValueEnum;

use navsim_core::agents::{Agent, EpisodeContext, MemorizerAgent, OracleAgent, RandomAgent};
use navsim_core::bundle::EnvBundle;
use navsim_core::episode::Observation;
use navsim_core::graph::{Role, SplitAssignment};
use navsim_core::tasks::{
    split_dataset, DatasetKind, DatasetRecord, StepInstance, DEFAULT_ICON_MULTIPLICITY,
};
use navsim_core::{PolicyTable, TabularAgent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AgentKind {
    Oracle,
    Random,
    Memorizer,
    Tabular,
}

#[derive(Debug, Clone)]
pub enum AnyAgent {
    Oracle(OracleAgent),
    Random(RandomAgent),
    Memorizer(MemorizerAgent),
    Tabular(TabularAgent),
}

impl Agent for AnyAgent {
    fn begin_episode(&mut self, ctx: &EpisodeContext) {
        match self {
            AnyAgent::Oracle(a) => a.begin_episode(ctx),
            AnyAgent::Random(a) => a.begin_episode(ctx),
            AnyAgent::Memorizer(a) => a.begin_episode(ctx),
            AnyAgent::Tabular(a) => a.begin_episode(ctx),
        }
    }

    fn act(&mut self, obs: &Observation) -> String {
        match self {
            AnyAgent::Oracle(a) => a.act(obs),
            AnyAgent::Random(a) => a.act(obs),
            AnyAgent::Memorizer(a) => a.act(obs),
            AnyAgent::Tabular(a) => a.act(obs),
        }
    }
}

/// Navigation step instances of the SFT role: edges from every subtree plus
/// its own paths.
pub fn sft_instances(env: &EnvBundle, split: &SplitAssignment, seed: u64) -> Vec<StepInstance> {
    let nav = env.navigator();
    [DatasetKind::Edges, DatasetKind::Paths]
        .into_iter()
        .flat_map(|k| {
            split_dataset(
                env,
                &nav,
                split,
                Role::Sft,
                k,
                DEFAULT_ICON_MULTIPLICITY,
                seed,
            )
        })
        .filter_map(|r| match r {
            DatasetRecord::Navigation(s) => Some(s),
            _ => None,
        })
        .collect()
}

pub fn build_agent(
    kind: AgentKind,
    env: Arc<EnvBundle>,
    split: &SplitAssignment,
    policy: &Path,
    seed: u64,
) -> anyhow::Result<AnyAgent> {
    Ok(match kind {
        AgentKind::Oracle => AnyAgent::Oracle(OracleAgent::new(env)),
        AgentKind::Random => AnyAgent::Random(RandomAgent::new(env, seed)),
        AgentKind::Memorizer => {
            let training = sft_instances(&env, split, seed);
            AnyAgent::Memorizer(MemorizerAgent::new(env, &training, seed))
        }
        AgentKind::Tabular => {
            let table = PolicyTable::load(policy)
                .with_context(|| format!("loading policy {}", policy.display()))?;
            AnyAgent::Tabular(TabularAgent::new(env, Arc::new(table), seed))
        }
    })
}
