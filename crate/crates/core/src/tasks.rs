//! Navigation tasks, reference trajectories, and the per-step dataset
//! records derived from them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::{click_explanation, format_output, ActionKind, COMPLETE_EXPLANATION};
use crate::bundle::{screen_file_name, EnvBundle, SCREENS_DIR};
use crate::graph::{Navigator, NodeId, Role, SplitAssignment, Transition};
use crate::layout::BBox;
use crate::seed;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TaskError {
    #[error("task start and goal must differ (both {0})")]
    SameNode(NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("bad instruction {0:?}")]
    BadInstruction(String),
    #[error("{node} has no icon leading to {target}")]
    MissingIcon { node: NodeId, target: NodeId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TaskSpec {
    pub start: NodeId,
    pub goal: NodeId,
}

impl TaskSpec {
    pub fn new(start: NodeId, goal: NodeId) -> Result<Self, TaskError> {
        if start == goal {
            return Err(TaskError::SameNode(start));
        }
        Ok(TaskSpec { start, goal })
    }

    pub fn instruction(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for TaskSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "From {} to {}", self.start, self.goal)
    }
}

impl FromStr for TaskSpec {
    type Err = TaskError;

    /// Parses `From page_A to page_B`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TaskError::BadInstruction(s.to_string());
        let rest = s.trim().strip_prefix("From ").ok_or_else(bad)?;
        let (a, b) = rest.split_once(" to ").ok_or_else(bad)?;
        let start = a.trim().parse::<NodeId>().map_err(|_| bad())?;
        let goal = b.trim().parse::<NodeId>().map_err(|_| bad())?;
        TaskSpec::new(start, goal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskEntry {
    pub task: TaskSpec,
    pub distance: u32,
}

/// All ordered pairs of distinct nodes in `node_set`, sorted by start then
/// goal.
pub fn enumerate_tasks(nav: &Navigator, node_set: &[NodeId]) -> Vec<TaskEntry> {
    let mut nodes = node_set.to_vec();
    nodes.sort();
    nodes.dedup();
    let mut out = Vec::with_capacity(nodes.len() * nodes.len().saturating_sub(1));
    for &a in &nodes {
        for &b in &nodes {
            if a != b {
                out.push(TaskEntry {
                    task: TaskSpec { start: a, goal: b },
                    distance: nav.distance(a, b),
                });
            }
        }
    }
    out
}

pub fn bucket_counts(tasks: &[TaskEntry]) -> BTreeMap<u32, usize> {
    let mut m = BTreeMap::new();
    for t in tasks {
        *m.entry(t.distance).or_insert(0) += 1;
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrajectoryKind {
    Shortest,
    Redundant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajStep {
    pub before: NodeId,
    pub action: ActionKind,
    pub explanation: String,
    pub after: NodeId,
    /// Index of the clicked icon on the `before` screen.
    pub icon: Option<usize>,
}

impl TrajStep {
    pub fn output_text(&self) -> String {
        format_output(&self.explanation, self.action)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub task: TaskSpec,
    pub kind: TrajectoryKind,
    pub distance: u32,
    pub steps: Vec<TrajStep>,
}

/// The click step that follows `t` out of `node`: the icon's center, named in
/// the explanation.
pub fn click_step(env: &EnvBundle, node: NodeId, t: Transition) -> Result<TrajStep, TaskError> {
    let screen = env.screen(node).ok_or(TaskError::UnknownNode(node))?;
    let idx = screen
        .icon_for_target(t.target)
        .ok_or(TaskError::MissingIcon {
            node,
            target: t.target,
        })?;
    let icon = &screen.icons[idx];
    let (x, y) = icon.bbox.center();
    Ok(TrajStep {
        before: node,
        action: ActionKind::Click { x, y },
        explanation: click_explanation(icon.name(), node),
        after: t.target,
        icon: Some(idx),
    })
}

pub fn complete_step(node: NodeId) -> TrajStep {
    TrajStep {
        before: node,
        action: ActionKind::Complete,
        explanation: COMPLETE_EXPLANATION.to_string(),
        after: node,
        icon: None,
    }
}

/// Shortest: the canonical shortest path plus a final `complete`.
/// Redundant: the same walk with one or two detours, each a wrong step that
/// costs at most one extra hop, followed by the shortest route back.
pub fn synth_trajectory(
    env: &EnvBundle,
    nav: &Navigator,
    task: TaskSpec,
    kind: TrajectoryKind,
    seed: u64,
) -> Result<Trajectory, TaskError> {
    for n in [task.start, task.goal] {
        if !env.graph.contains(n) {
            return Err(TaskError::UnknownNode(n));
        }
    }
    let distance = nav.distance(task.start, task.goal);
    let mut rng = seed::rng(
        seed,
        &[
            b"trajectory",
            &task.start.0.to_le_bytes(),
            &task.goal.0.to_le_bytes(),
        ],
    );
    let mut detours: Vec<u32> = match kind {
        TrajectoryKind::Shortest => Vec::new(),
        TrajectoryKind::Redundant => {
            let k = rng.random_range(1..=2u32).min(distance);
            rand::seq::index::sample(&mut rng, distance as usize, k as usize)
                .into_iter()
                .map(|i| i as u32)
                .collect()
        }
    };

    let mut steps = Vec::new();
    let mut cur = task.start;
    let mut progress = 0;
    while cur != task.goal {
        if let Some(pos) = detours.iter().position(|&p| p == progress) {
            detours.swap_remove(pos);
            let best = nav.next_hop(cur, task.goal);
            let d = nav.distance(cur, task.goal);
            let wrong: Vec<Transition> = nav
                .transitions
                .out(cur)
                .iter()
                .copied()
                .filter(|&t| Some(t) != best && nav.distance(t.target, task.goal) <= d + 1)
                .collect();
            if let Some(&t) = wrong.choose(&mut rng) {
                steps.push(click_step(env, cur, t)?);
                cur = t.target;
            }
        }
        let t = nav.next_hop(cur, task.goal).expect("goal reachable");
        steps.push(click_step(env, cur, t)?);
        cur = t.target;
        progress += 1;
    }
    steps.push(complete_step(cur));
    Ok(Trajectory {
        task,
        kind,
        distance,
        steps,
    })
}

/// The reference output for one step, as stored in dataset records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceRecord {
    pub action: ActionKind,
    pub explanation: String,
    pub target_icon: Option<usize>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepInstance {
    pub task: TaskSpec,
    pub instruction: String,
    pub step: u32,
    pub history_prefix: Vec<String>,
    pub node: NodeId,
    pub screen_image: String,
    pub reference: ReferenceRecord,
    pub distance_bucket: u32,
}

pub fn screen_image_path(node: NodeId) -> String {
    format!("{SCREENS_DIR}/{}", screen_file_name(node))
}

/// One instance per trajectory step; instance `t` carries the history lines
/// of steps before `t`.
pub fn expand_steps(env: &EnvBundle, traj: &Trajectory) -> Vec<StepInstance> {
    let mut history = Vec::new();
    let mut out = Vec::with_capacity(traj.steps.len());
    for (i, s) in traj.steps.iter().enumerate() {
        let n = i as u32 + 1;
        out.push(StepInstance {
            task: traj.task,
            instruction: traj.task.instruction(),
            step: n,
            history_prefix: history.clone(),
            node: s.before,
            screen_image: screen_image_path(s.before),
            reference: ReferenceRecord {
                action: s.action,
                explanation: s.explanation.clone(),
                target_icon: s.icon,
                text: s.output_text(),
            },
            distance_bucket: traj.distance,
        });
        history.push(match (s.action, s.icon) {
            (ActionKind::Click { .. }, Some(idx)) => {
                let name = env
                    .screen(s.before)
                    .map(|sc| sc.icons[idx].name().to_string())
                    .unwrap_or_default();
                crate::episode::click_history_line(n, &name, s.before)
            }
            (ActionKind::Click { .. }, None) => crate::episode::invalid_history_line(n, s.before),
            (ActionKind::Complete, _) => crate::episode::complete_history_line(n, s.before),
        });
    }
    out
}

/// Shortest-trajectory step instances for every task over `node_set`.
pub fn path_instances(env: &EnvBundle, nav: &Navigator, node_set: &[NodeId]) -> Vec<StepInstance> {
    enumerate_tasks(nav, node_set)
        .into_iter()
        .flat_map(|t| {
            let traj = synth_trajectory(env, nav, t.task, TrajectoryKind::Shortest, 0)
                .expect("valid task");
            expand_steps(env, &traj)
        })
        .collect()
}

pub fn edge_instances(env: &EnvBundle, nav: &Navigator, node_set: &[NodeId]) -> Vec<StepInstance> {
    path_instances(env, nav, node_set)
        .into_iter()
        .filter(|s| s.distance_bucket == 1)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetRecord {
    Navigation(StepInstance),
    Caption {
        node: NodeId,
        screen_image: String,
        icon_id: u32,
        point: (i32, i32),
        answer: String,
    },
    Grounding {
        node: NodeId,
        screen_image: String,
        icon_id: u32,
        name: String,
        answer: BBox,
    },
    Task {
        start: NodeId,
        goal: NodeId,
        instruction: String,
        distance: u32,
    },
}

impl From<TaskEntry> for DatasetRecord {
    fn from(t: TaskEntry) -> Self {
        DatasetRecord::Task {
            start: t.task.start,
            goal: t.task.goal,
            instruction: t.task.instruction(),
            distance: t.distance,
        }
    }
}

/// Caption and grounding records: for each asset that appears on some
/// screen, `multiplicity` draws of one occurrence each, yielding a caption
/// (point inside the box, answer = name) and a grounding record (name,
/// answer = box) from the same occurrence.
pub fn synth_icon_data(
    env: &EnvBundle,
    multiplicity: usize,
    seed: u64,
) -> (Vec<DatasetRecord>, Vec<DatasetRecord>) {
    let mut occurrences: BTreeMap<u32, Vec<(NodeId, usize)>> = BTreeMap::new();
    for s in &env.screens {
        for (i, icon) in s.icons.iter().enumerate() {
            occurrences
                .entry(icon.asset.icon_id)
                .or_default()
                .push((s.node, i));
        }
    }
    let mut rng = seed::rng(seed, &[b"icon-data"]);
    let mut captions = Vec::new();
    let mut grounding = Vec::new();
    for (&icon_id, occ) in &occurrences {
        for _ in 0..multiplicity {
            let &(node, idx) = occ.choose(&mut rng).expect("non-empty");
            let icon = &env.screens[node.index()].icons[idx];
            let b = icon.bbox;
            let point = (rng.random_range(b.x0..b.x1), rng.random_range(b.y0..b.y1));
            captions.push(DatasetRecord::Caption {
                node,
                screen_image: screen_image_path(node),
                icon_id,
                point,
                answer: icon.name().to_string(),
            });
            grounding.push(DatasetRecord::Grounding {
                node,
                screen_image: screen_image_path(node),
                icon_id,
                name: icon.name().to_string(),
                answer: b,
            });
        }
    }
    (captions, grounding)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DatasetKind {
    Edges,
    Paths,
    Captions,
    Grounding,
    Interactive,
}

impl DatasetKind {
    pub const ALL: [DatasetKind; 5] = [
        DatasetKind::Edges,
        DatasetKind::Paths,
        DatasetKind::Captions,
        DatasetKind::Grounding,
        DatasetKind::Interactive,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            DatasetKind::Edges => "edges.jsonl",
            DatasetKind::Paths => "paths.jsonl",
            DatasetKind::Captions => "captions.jsonl",
            DatasetKind::Grounding => "grounding.jsonl",
            DatasetKind::Interactive => "tasks_interactive.jsonl",
        }
    }
}

impl FromStr for DatasetKind {
    type Err = TaskError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "edges" | "edge" => Ok(DatasetKind::Edges),
            "paths" | "path" => Ok(DatasetKind::Paths),
            "captions" | "caption" => Ok(DatasetKind::Captions),
            "grounding" => Ok(DatasetKind::Grounding),
            "interactive" | "tasks" => Ok(DatasetKind::Interactive),
            _ => Err(TaskError::BadInstruction(s.to_string())),
        }
    }
}

pub const DEFAULT_ICON_MULTIPLICITY: usize = 10;

/// Records of one kind for one role.
///
/// The SFT split takes edge instances from every subtree (not only its
/// own) and carries the icon captioning/grounding data; path instances and
/// interactive tasks come from the role's own subtrees, each joined with
/// the root.
pub fn split_dataset(
    env: &EnvBundle,
    nav: &Navigator,
    split: &SplitAssignment,
    role: Role,
    kind: DatasetKind,
    icon_multiplicity: usize,
    seed: u64,
) -> Vec<DatasetRecord> {
    let own = split.subtree_sets(&env.graph, role);
    match kind {
        DatasetKind::Edges => {
            let sets: Vec<Vec<NodeId>> = if role == Role::Sft {
                split
                    .subtrees
                    .iter()
                    .map(|&(top, _)| {
                        let mut v = vec![split.root];
                        v.extend(env.graph.subtree(top));
                        v
                    })
                    .collect()
            } else {
                own
            };
            sets.iter()
                .flat_map(|s| edge_instances(env, nav, s))
                .map(DatasetRecord::Navigation)
                .collect()
        }
        DatasetKind::Paths => own
            .iter()
            .flat_map(|s| path_instances(env, nav, s))
            .map(DatasetRecord::Navigation)
            .collect(),
        DatasetKind::Captions | DatasetKind::Grounding => {
            if role != Role::Sft {
                return Vec::new();
            }
            let (c, g) = synth_icon_data(env, icon_multiplicity, seed);
            if kind == DatasetKind::Captions {
                c
            } else {
                g
            }
        }
        DatasetKind::Interactive => own
            .iter()
            .flat_map(|s| enumerate_tasks(nav, s))
            .map(DatasetRecord::from)
            .collect(),
    }
}
