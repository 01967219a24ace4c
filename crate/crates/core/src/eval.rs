//! Static (teacher-forced step instances) and interactive (Pass@N rollouts)
//! evaluation, bucketed by task distance.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::parse_action;
use crate::agents::{Agent, EpisodeContext};
use crate::bundle::EnvBundle;
use crate::episode::{EpisodeConfig, EpisodeState, Observation, TraceStep};
use crate::graph::{Navigator, NodeId};
use crate::reward::{reward_coord, reward_type, ReferenceStep};
use crate::seed;
use crate::tasks::{StepInstance, TaskEntry, TaskSpec};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub correct: u64,
    pub total: u64,
}

impl Ratio {
    pub fn add(&mut self, ok: bool) {
        self.correct += u64::from(ok);
        self.total += 1;
    }

    pub fn merge(&mut self, other: Ratio) {
        self.correct += other.correct;
        self.total += other.total;
    }

    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }

    pub fn percent(&self) -> f64 {
        100.0 * self.fraction()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StaticReport {
    pub step: BTreeMap<u32, Ratio>,
    pub task: BTreeMap<u32, Ratio>,
    pub step_overall: Ratio,
    pub task_overall: Ratio,
    /// Step accuracy over distance-1 instances.
    pub edge: Ratio,
    /// Step accuracy over instances of distance 2 and more.
    pub path: Ratio,
}

/// Seed for rollout `k` of `task` under evaluation seed `base`.
pub fn rollout_seed(base: u64, task: TaskSpec, k: u32) -> u64 {
    seed::derive(
        base,
        &[
            &task.start.0.to_le_bytes(),
            &task.goal.0.to_le_bytes(),
            &k.to_le_bytes(),
        ],
    )
}

/// A prediction is right when it has the reference's type and, for clicks,
/// lands inside the reference icon.
pub fn step_correct(env: &EnvBundle, inst: &StepInstance, raw: &str) -> bool {
    let Ok(pred) = parse_action(raw) else {
        return false;
    };
    let Ok(reference) = ReferenceStep::from_instance(inst, env) else {
        return false;
    };
    reward_type(&pred, &reference) == 1 && reward_coord(&pred, &reference) == Ok(1)
}

pub fn instance_observation(inst: &StepInstance) -> Observation {
    Observation {
        instruction: inst.instruction.clone(),
        history: inst.history_prefix.clone(),
        current_node: inst.node,
        step_index: inst.step - 1,
    }
}

pub fn eval_static<A: Agent + Clone + Sync>(
    env: &EnvBundle,
    instances: &[StepInstance],
    agent: &A,
    seed: u64,
) -> StaticReport {
    let results: Vec<bool> = instances
        .par_iter()
        .map_init(
            || agent.clone(),
            |a, inst| {
                a.begin_episode(&EpisodeContext {
                    task: inst.task,
                    rollout: 0,
                    seed: rollout_seed(seed, inst.task, 0),
                    allow_complete: true,
                });
                step_correct(env, inst, &a.act(&instance_observation(inst)))
            },
        )
        .collect();

    let mut report = StaticReport::default();
    let mut tasks: HashMap<(NodeId, NodeId), (u32, bool)> = HashMap::new();
    for (inst, &ok) in instances.iter().zip(&results) {
        let b = inst.distance_bucket;
        report.step.entry(b).or_default().add(ok);
        report.step_overall.add(ok);
        if b == 1 {
            report.edge.add(ok);
        } else {
            report.path.add(ok);
        }
        let t = tasks
            .entry((inst.task.start, inst.task.goal))
            .or_insert((b, true));
        t.1 &= ok;
    }
    for (bucket, ok) in tasks.into_values() {
        report.task.entry(bucket).or_default().add(ok);
        report.task_overall.add(ok);
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractiveConfig {
    /// Rollouts per task.
    pub n: u32,
    pub episode: EpisodeConfig,
    pub seed: u64,
}

impl Default for InteractiveConfig {
    fn default() -> Self {
        InteractiveConfig {
            n: 1,
            episode: EpisodeConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RolloutRecord {
    pub task: TaskSpec,
    pub distance: u32,
    pub rollout: u32,
    pub seed: u64,
    pub success: bool,
    pub a2b_reward: u8,
    pub steps: u32,
    /// Some transition moved away from every shortest path to the goal.
    pub left_shortest_path: bool,
    /// A Back transition happened after leaving the shortest path.
    pub backtracked: bool,
    pub final_node: NodeId,
    pub history: Vec<String>,
    pub trace: Vec<TraceStep>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InteractiveReport {
    pub n: u32,
    pub tasks: u64,
    /// Entry `k-1` is Pass@k.
    pub pass_at: Vec<Ratio>,
    pub per_bucket: BTreeMap<u32, Vec<Ratio>>,
    pub mean_episode_length: f64,
    /// Successful episodes that left the shortest path on the way.
    pub recovery_count: u64,
}

impl InteractiveReport {
    pub fn pass_at_k(&self, k: u32) -> Option<Ratio> {
        k.checked_sub(1)
            .and_then(|i| self.pass_at.get(i as usize))
            .copied()
    }
}

pub fn run_rollout<A: Agent + ?Sized>(
    env: &EnvBundle,
    nav: &Navigator,
    entry: &TaskEntry,
    agent: &mut A,
    rollout: u32,
    cfg: &InteractiveConfig,
) -> RolloutRecord {
    let seed = rollout_seed(cfg.seed, entry.task, rollout);
    agent.begin_episode(&EpisodeContext {
        task: entry.task,
        rollout,
        seed,
        allow_complete: cfg.episode.allow_complete,
    });
    let (mut st, mut obs) =
        EpisodeState::reset(env, entry.task, cfg.episode).expect("task nodes belong to env");
    while !st.done {
        let raw = agent.act(&obs);
        obs = st
            .step(env, &raw)
            .expect("episode still running")
            .observation;
    }
    let (left, backtracked) = scan_trace(env, nav, entry.task.goal, &st.trace);
    RolloutRecord {
        task: entry.task,
        distance: entry.distance,
        rollout,
        seed,
        success: st.success,
        a2b_reward: st.a2b_reward(),
        steps: st.step_index,
        left_shortest_path: left,
        backtracked,
        final_node: st.current,
        history: st.history,
        trace: st.trace,
    }
}

fn scan_trace(env: &EnvBundle, nav: &Navigator, goal: NodeId, trace: &[TraceStep]) -> (bool, bool) {
    let mut left = false;
    let mut backtracked = false;
    for s in trace.iter().filter(|s| s.before != s.after) {
        let is_back = env.graph.node(s.before).and_then(|n| n.parent) == Some(s.after);
        if left && is_back {
            backtracked = true;
        }
        if nav.distance(s.after, goal) + 1 != nav.distance(s.before, goal) {
            left = true;
        }
    }
    (left, backtracked)
}

/// Rolls every task out `cfg.n` times. Records come back in task order,
/// rollouts ascending.
pub fn eval_interactive<A: Agent + Clone + Sync>(
    env: &EnvBundle,
    nav: &Navigator,
    tasks: &[TaskEntry],
    agent: &A,
    cfg: &InteractiveConfig,
) -> (InteractiveReport, Vec<RolloutRecord>) {
    let n = cfg.n.max(1);
    let per_task: Vec<Vec<RolloutRecord>> = tasks
        .par_iter()
        .map_init(
            || agent.clone(),
            |a, entry| {
                (0..n)
                    .map(|k| run_rollout(env, nav, entry, a, k, cfg))
                    .collect()
            },
        )
        .collect();

    let mut report = InteractiveReport {
        n,
        tasks: tasks.len() as u64,
        pass_at: vec![Ratio::default(); n as usize],
        ..Default::default()
    };
    let mut steps = 0u64;
    for (entry, rollouts) in tasks.iter().zip(&per_task) {
        let bucket = report
            .per_bucket
            .entry(entry.distance)
            .or_insert_with(|| vec![Ratio::default(); n as usize]);
        let mut solved = false;
        for (k, r) in rollouts.iter().enumerate() {
            solved |= r.success;
            report.pass_at[k].add(solved);
            bucket[k].add(solved);
            steps += r.steps as u64;
            report.recovery_count += u64::from(r.success && r.left_shortest_path);
        }
    }
    let episodes = tasks.len() as u64 * n as u64;
    report.mean_episode_length = if episodes == 0 {
        0.0
    } else {
        steps as f64 / episodes as f64
    };
    (report, per_task.into_iter().flatten().collect())
}
