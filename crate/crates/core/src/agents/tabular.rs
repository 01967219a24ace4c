//! Tabular Q-learning over `(screen, goal)` states with the sparse terminal
//! reward as the only learning signal.

use std::collections::HashMap;
use std::fmt::Debug;
use std::fs;
use std::io;
use std::path::Path;
use std::sync::Arc;

use num_traits::Float;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{click_text, complete_text, goal_of, Agent, EpisodeContext};
use crate::bundle::EnvBundle;
use crate::episode::{EpisodeConfig, EpisodeError, EpisodeState, Observation};
use crate::graph::{Navigator, NodeId, Transition};
use crate::seed::{self, Rng};
use crate::tasks::TaskSpec;

pub const POLICY_VERSION: u32 = 1;
/// Exploration rate used by evaluation rollouts after the first.
pub const EVAL_EPSILON: f64 = 0.1;
const DIVERGENCE_LIMIT: f64 = 1e6;

/// Float types a table can be stored in.
pub trait Scalar: Float + Debug + Send + Sync + Serialize + DeserializeOwned + 'static {}
impl<T: Float + Debug + Send + Sync + Serialize + DeserializeOwned + 'static> Scalar for T {}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("value estimate {value} at ({node}, {goal}) exceeds the divergence guard")]
    DivergenceGuard {
        node: NodeId,
        goal: NodeId,
        value: f64,
    },
    #[error("no training tasks")]
    NoTasks,
    #[error("invalid hyperparameter: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Episode(#[from] EpisodeError),
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
    #[error("policy file version {found:?}, expected {POLICY_VERSION}")]
    VersionMismatch { found: Option<u64> },
    #[error("corrupt policy file: {0}")]
    Corrupt(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub episodes_per_task: u32,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub seed: u64,
    pub episode: EpisodeConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            episodes_per_task: 200,
            alpha: 0.1,
            gamma: 0.9,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            seed: 0,
            episode: EpisodeConfig::default(),
        }
    }
}

impl TrainConfig {
    /// Linear decay from `epsilon_start` at the first episode to
    /// `epsilon_end` at the last.
    pub fn epsilon_at(&self, episode: u64, total: u64) -> f64 {
        if total <= 1 {
            return self.epsilon_end;
        }
        let frac = episode.min(total - 1) as f64 / (total - 1) as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }

    fn validate(&self) -> Result<(), TrainError> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(unit(self.alpha)
            && unit(self.gamma)
            && unit(self.epsilon_start)
            && unit(self.epsilon_end))
        {
            return Err(TrainError::BadConfig(format!(
                "alpha, gamma and epsilon must lie in [0,1]: {} {} {} {}",
                self.alpha, self.gamma, self.epsilon_start, self.epsilon_end
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyAction {
    Move(Transition),
    Complete,
}

/// Available actions at `node`: its transitions in map order, then
/// `complete` when allowed.
pub fn policy_actions(nav: &Navigator, node: NodeId, allow_complete: bool) -> Vec<PolicyAction> {
    let mut acts: Vec<PolicyAction> = nav
        .transitions
        .out(node)
        .iter()
        .map(|&t| PolicyAction::Move(t))
        .collect();
    if allow_complete {
        acts.push(PolicyAction::Complete);
    }
    acts
}

pub fn action_text(env: &EnvBundle, node: NodeId, action: PolicyAction) -> String {
    match action {
        PolicyAction::Complete => complete_text(),
        PolicyAction::Move(t) => env
            .screen(node)
            .and_then(|s| s.icon_for_target(t.target).map(|i| click_text(s, i)))
            .unwrap_or_else(complete_text),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QEntry<F> {
    pub values: Vec<F>,
    pub visits: Vec<u32>,
}

/// First index holding the maximum.
pub fn argmax<F: Float>(values: &[F]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        if best.is_none_or(|b| *v > values[b]) {
            best = Some(i);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct QTable<F> {
    pub allow_complete: bool,
    pub config: Option<TrainConfig>,
    entries: HashMap<(NodeId, NodeId), QEntry<F>>,
}

#[derive(Serialize, Deserialize)]
struct PersistedEntry<F> {
    node: NodeId,
    goal: NodeId,
    values: Vec<F>,
    visits: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct PolicyFile<F> {
    version: u32,
    allow_complete: bool,
    config: Option<TrainConfig>,
    entries: Vec<PersistedEntry<F>>,
}

impl<F: Scalar> QTable<F> {
    pub fn new(allow_complete: bool) -> Self {
        QTable {
            allow_complete,
            config: None,
            entries: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, node: NodeId, goal: NodeId) -> Option<&QEntry<F>> {
        self.entries.get(&(node, goal))
    }

    fn entry_mut(&mut self, node: NodeId, goal: NodeId, actions: usize) -> &mut QEntry<F> {
        self.entries.entry((node, goal)).or_insert_with(|| QEntry {
            values: vec![F::zero(); actions],
            visits: vec![0; actions],
        })
    }

    fn max_value(&self, node: NodeId, goal: NodeId) -> F {
        self.get(node, goal)
            .and_then(|e| argmax(&e.values).map(|i| e.values[i]))
            .unwrap_or_else(F::zero)
    }

    /// Greedy action index among the first `limit` actions.
    pub fn greedy(&self, node: NodeId, goal: NodeId, limit: usize) -> Option<usize> {
        self.get(node, goal)
            .and_then(|e| argmax(&e.values[..limit.min(e.values.len())]))
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut entries: Vec<PersistedEntry<F>> = self
            .entries
            .iter()
            .map(|(&(node, goal), e)| PersistedEntry {
                node,
                goal,
                values: e.values.clone(),
                visits: e.visits.clone(),
            })
            .collect();
        entries.sort_by_key(|e| (e.node, e.goal));
        let file = PolicyFile {
            version: POLICY_VERSION,
            allow_complete: self.allow_complete,
            config: self.config,
            entries,
        };
        let mut out = serde_json::to_vec(&file).expect("policy serializes");
        out.push(b'\n');
        out
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, TrainError> {
        let value: serde_json::Value =
            serde_json::from_slice(bytes).map_err(|e| TrainError::Corrupt(e.to_string()))?;
        let found = value.get("version").and_then(|v| v.as_u64());
        if found != Some(POLICY_VERSION as u64) {
            return Err(TrainError::VersionMismatch { found });
        }
        let file: PolicyFile<F> =
            serde_json::from_value(value).map_err(|e| TrainError::Corrupt(e.to_string()))?;
        let mut entries = HashMap::with_capacity(file.entries.len());
        for e in file.entries {
            if e.values.len() != e.visits.len() || e.values.iter().any(|v| !v.is_finite()) {
                return Err(TrainError::Corrupt(format!(
                    "bad entry at ({}, {})",
                    e.node, e.goal
                )));
            }
            entries.insert(
                (e.node, e.goal),
                QEntry {
                    values: e.values,
                    visits: e.visits,
                },
            );
        }
        Ok(QTable {
            allow_complete: file.allow_complete,
            config: file.config,
            entries,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), TrainError> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, TrainError> {
        Self::from_json(&fs::read(path)?)
    }
}

/// Runs `episodes_per_task` epsilon-greedy episodes per task, visiting the
/// tasks in a freshly shuffled order each sweep.
pub fn tabular_train<F: Scalar>(
    env: &EnvBundle,
    nav: &Navigator,
    tasks: &[TaskSpec],
    cfg: &TrainConfig,
) -> Result<QTable<F>, TrainError> {
    cfg.validate()?;
    if tasks.is_empty() {
        return Err(TrainError::NoTasks);
    }
    let mut table = QTable::new(cfg.episode.allow_complete);
    table.config = Some(*cfg);
    let mut rng = seed::rng(cfg.seed, &[b"tabular-train"]);
    let total = cfg.episodes_per_task as u64 * tasks.len() as u64;
    let mut order: Vec<usize> = (0..tasks.len()).collect();
    let mut count = 0u64;
    for _ in 0..cfg.episodes_per_task {
        order.shuffle(&mut rng);
        for &i in &order {
            let eps = cfg.epsilon_at(count, total);
            train_episode(env, nav, tasks[i], cfg, eps, &mut table, &mut rng)?;
            count += 1;
        }
    }
    Ok(table)
}

fn train_episode<F: Scalar>(
    env: &EnvBundle,
    nav: &Navigator,
    task: TaskSpec,
    cfg: &TrainConfig,
    eps: f64,
    table: &mut QTable<F>,
    rng: &mut Rng,
) -> Result<(), TrainError> {
    let cast = |v: f64| F::from(v).expect("representable constant");
    let (alpha, gamma) = (cast(cfg.alpha), cast(cfg.gamma));
    let goal = task.goal;
    let (mut st, _) = EpisodeState::reset(env, task, cfg.episode)?;
    while !st.done {
        let node = st.current;
        let acts = policy_actions(nav, node, cfg.episode.allow_complete);
        if acts.is_empty() {
            break;
        }
        let entry = table.entry_mut(node, goal, acts.len());
        let a = if rng.random_bool(eps) {
            rng.random_range(0..acts.len())
        } else {
            argmax(&entry.values).expect("non-empty action set")
        };
        entry.visits[a] += 1;

        let res = st.step(env, &action_text(env, node, acts[a]))?;
        let reward = cast(res.a2b_reward as f64);
        let terminal = res.done && (st.success || acts[a] == PolicyAction::Complete);
        let next = if terminal {
            F::zero()
        } else {
            table.max_value(st.current, goal)
        };
        let q = &mut table.entry_mut(node, goal, acts.len()).values[a];
        *q = *q + alpha * (reward + gamma * next - *q);
        let value = q.to_f64().unwrap_or(f64::NAN);
        if !value.is_finite() || value.abs() > DIVERGENCE_LIMIT {
            return Err(TrainError::DivergenceGuard { node, goal, value });
        }
    }
    Ok(())
}

/// Acts greedily on the first rollout of a task and epsilon-greedily on
/// later ones. States missing from the table get a uniformly random action
/// and are counted in `fallbacks`.
#[derive(Debug, Clone)]
pub struct TabularAgent<F> {
    env: Arc<EnvBundle>,
    nav: Arc<Navigator>,
    table: Arc<QTable<F>>,
    pub eval_epsilon: f64,
    seed: u64,
    rng: Rng,
    epsilon: f64,
    allow_complete: bool,
    pub fallbacks: u64,
    pub last_fallback: bool,
}

impl<F: Scalar> TabularAgent<F> {
    pub fn new(env: Arc<EnvBundle>, table: Arc<QTable<F>>, seed: u64) -> Self {
        let nav = Arc::new(env.navigator());
        TabularAgent {
            env,
            nav,
            allow_complete: table.allow_complete,
            table,
            eval_epsilon: EVAL_EPSILON,
            seed,
            rng: seed::rng(seed, &[b"tabular-agent"]),
            epsilon: 0.0,
            fallbacks: 0,
            last_fallback: false,
        }
    }

    pub fn table(&self) -> &QTable<F> {
        &self.table
    }
}

impl<F: Scalar> Agent for TabularAgent<F> {
    fn begin_episode(&mut self, ctx: &EpisodeContext) {
        self.rng = seed::rng(self.seed, &[b"tabular-agent", &ctx.seed.to_le_bytes()]);
        self.epsilon = if ctx.rollout == 0 {
            0.0
        } else {
            self.eval_epsilon
        };
        self.allow_complete = ctx.allow_complete;
        self.last_fallback = false;
    }

    fn act(&mut self, obs: &Observation) -> String {
        let node = obs.current_node;
        let acts = policy_actions(&self.nav, node, self.allow_complete);
        if acts.is_empty() {
            return complete_text();
        }
        let greedy = goal_of(obs).and_then(|g| self.table.greedy(node, g, acts.len()));
        self.last_fallback = greedy.is_none();
        let a = match greedy {
            None => {
                self.fallbacks += 1;
                self.rng.random_range(0..acts.len())
            }
            Some(_) if self.epsilon > 0.0 && self.rng.random_bool(self.epsilon) => {
                self.rng.random_range(0..acts.len())
            }
            Some(i) => i,
        };
        action_text(&self.env, node, acts[a])
    }
}
