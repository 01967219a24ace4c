//! Deterministic simulator for GUI screen-navigation agents.
//!
//! Builds tree-shaped screen environments with rendered screenshots, runs
//! click-driven episodes against them, scores agent outputs, synthesizes
//! training data, and evaluates agents statically and interactively.
//!
//! ```
//! use std::sync::Arc;
//! use navsim_core::agents::{Agent, EpisodeContext, OracleAgent};
//! use navsim_core::{build_environment, BranchingSpec, EpisodeConfig, EpisodeState, NodeId, TaskSpec};
//!
//! # fn main() -> Result<(), Box<dyn std::error::Error>> {
//! let env = Arc::new(build_environment(&BranchingSpec::env_base(), 42)?);
//! let task = TaskSpec::new(NodeId(0), NodeId(17))?;
//! let mut agent = OracleAgent::new(env.clone());
//! agent.begin_episode(&EpisodeContext { task, rollout: 0, seed: 0, allow_complete: true });
//! let (mut st, mut obs) = EpisodeState::reset(&env, task, EpisodeConfig::default())?;
//! while !st.done {
//!     obs = st.step(&env, &agent.act(&obs))?.observation;
//! }
//! assert_eq!(st.a2b_reward(), 1);
//! # Ok(())
//! # }
//! ```

pub mod action;
pub mod agents;
pub mod bundle;
pub mod dataset;
pub mod episode;
pub mod eval;
pub mod font;
pub mod graph;
pub mod icons;
pub mod layout;
pub mod raster;
pub mod report;
pub mod reward;
pub mod seed;
pub mod tasks;
pub mod variant;

pub use action::{parse_action, Action, ActionKind, ParseError};
pub use agents::{Agent, EpisodeContext, MemorizerAgent, OracleAgent, RandomAgent};
pub use bundle::{build_environment, load_bundle, save_bundle, EnvBundle};
pub use episode::{EpisodeConfig, EpisodeState, Observation, RewardRule, StepResult};
pub use eval::{eval_interactive, eval_static, InteractiveConfig, InteractiveReport, StaticReport};
pub use graph::{BranchingSpec, NavGraph, Navigator, NodeId, Role};
pub use reward::{composite_reward, RewardBreakdown};
pub use tasks::{TaskEntry, TaskSpec};
pub use variant::{apply_variant, VariantKind, VariantSpec};

/// Q-table in double precision.
pub type PolicyTable = agents::QTable<f64>;
/// Q-table in single precision, half the file size.
pub type PolicyTable32 = agents::QTable<f32>;
pub type TabularAgent = agents::TabularAgent<f64>;
pub type TabularAgent32 = agents::TabularAgent<f32>;
