//! Exported episode transcripts: the raw agent outputs of one rollout plus
//! the outcome they produced, replayable through the session server.

use serde::{Deserialize, Serialize};

use navsim_core::bundle::EnvBundle;
use navsim_core::episode::{EpisodeConfig, EpisodeError, EpisodeState};
use navsim_core::eval::RolloutRecord;
use navsim_core::tasks::TaskSpec;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub task: String,
    pub rollout: u32,
    pub seed: u64,
    pub max_rounds: u32,
    pub allow_complete: bool,
    pub actions: Vec<String>,
    pub history: Vec<String>,
    pub done: bool,
    pub success: bool,
    pub a2b_reward: u8,
}

impl Transcript {
    pub fn from_record(r: &RolloutRecord, cfg: &EpisodeConfig) -> Self {
        Transcript {
            task: r.task.instruction(),
            rollout: r.rollout,
            seed: r.seed,
            max_rounds: cfg.max_rounds,
            allow_complete: cfg.allow_complete,
            actions: r.trace.iter().map(|s| s.raw.clone()).collect(),
            history: r.history.clone(),
            done: true,
            success: r.success,
            a2b_reward: r.a2b_reward,
        }
    }
}

/// Re-runs the transcript's actions in process and returns the transcript
/// they produce.
pub fn replay(env: &EnvBundle, t: &Transcript) -> Result<Transcript, ReplayError> {
    let task: TaskSpec = t
        .task
        .parse()
        .map_err(|e| ReplayError::BadTask(format!("{e}")))?;
    let cfg = EpisodeConfig::default()
        .with_max_rounds(t.max_rounds)
        .with_allow_complete(t.allow_complete);
    let (mut st, _) = EpisodeState::reset(env, task, cfg)?;
    for a in &t.actions {
        st.step(env, a)?;
    }
    Ok(Transcript {
        history: st.history.clone(),
        done: st.done,
        success: st.success,
        a2b_reward: st.a2b_reward(),
        ..t.clone()
    })
}

#[derive(Debug)]
pub enum ReplayError {
    BadTask(String),
    Episode(EpisodeError),
}

impl From<EpisodeError> for ReplayError {
    fn from(e: EpisodeError) -> Self {
        ReplayError::Episode(e)
    }
}

impl std::fmt::Display for ReplayError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReplayError::BadTask(m) => write!(f, "bad task: {m}"),
            ReplayError::Episode(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ReplayError {}
