//! Reference policies. All of them read node identity from observation
//! metadata rather than pixels.

use crate::action::{click_explanation, format_output, ActionKind, COMPLETE_EXPLANATION};
use crate::episode::Observation;
use crate::graph::NodeId;
use crate::layout::ScreenSpec;
use crate::tasks::TaskSpec;

pub mod memorizer;
pub mod oracle;
pub mod random;
pub mod tabular;

pub use memorizer::MemorizerAgent;
pub use oracle::OracleAgent;
pub use random::RandomAgent;
pub use tabular::{tabular_train, QTable, TabularAgent, TrainConfig, TrainError};

/// Per-episode information handed to an agent before its first action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpisodeContext {
    pub task: TaskSpec,
    /// Rollout index within a Pass@N evaluation, starting at 0.
    pub rollout: u32,
    pub seed: u64,
    pub allow_complete: bool,
}

/// A policy over observations. `begin_episode` must reset all per-episode
/// state so that `act` is a function of the context seed and observations.
pub trait Agent: Send {
    fn begin_episode(&mut self, ctx: &EpisodeContext);
    fn act(&mut self, obs: &Observation) -> String;
}

/// Goal node named in the observation's instruction.
pub fn goal_of(obs: &Observation) -> Option<NodeId> {
    obs.instruction.parse::<TaskSpec>().ok().map(|t| t.goal)
}

/// Reference-formatted click on the center of icon `idx`.
pub fn click_text(screen: &ScreenSpec, idx: usize) -> String {
    let icon = &screen.icons[idx];
    let (x, y) = icon.bbox.center();
    format_output(
        &click_explanation(icon.name(), screen.node),
        ActionKind::Click { x, y },
    )
}

pub fn complete_text() -> String {
    format_output(COMPLETE_EXPLANATION, ActionKind::Complete)
}
