use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::Rng as _;

use super::{click_text, goal_of, Agent, EpisodeContext};
use crate::action::format_output;
use crate::bundle::EnvBundle;
use crate::episode::Observation;
use crate::graph::NodeId;
use crate::seed::{self, Rng};
use crate::tasks::StepInstance;

/// Replays the reference output memorized for `(screen, goal)`. Unseen keys
/// fall back to some click memorized on that screen, then to a random icon.
#[derive(Debug, Clone)]
pub struct MemorizerAgent {
    env: Arc<EnvBundle>,
    exact: Arc<HashMap<(NodeId, NodeId), String>>,
    edges: Arc<HashMap<NodeId, Vec<String>>>,
    seed: u64,
    rng: Rng,
}

impl MemorizerAgent {
    pub fn new(env: Arc<EnvBundle>, training: &[StepInstance], seed: u64) -> Self {
        let mut exact = HashMap::new();
        let mut edges: BTreeMap<NodeId, Vec<String>> = BTreeMap::new();
        for inst in training {
            let text = format_output(&inst.reference.explanation, inst.reference.action);
            if inst.reference.action.is_click() {
                edges.entry(inst.node).or_default().push(text.clone());
            }
            exact.entry((inst.node, inst.task.goal)).or_insert(text);
        }
        let edges = edges
            .into_iter()
            .map(|(k, mut v)| {
                v.sort();
                v.dedup();
                (k, v)
            })
            .collect();
        MemorizerAgent {
            env,
            exact: Arc::new(exact),
            edges: Arc::new(edges),
            seed,
            rng: seed::rng(seed, &[b"memorizer"]),
        }
    }

    pub fn knows(&self, node: NodeId, goal: NodeId) -> bool {
        self.exact.contains_key(&(node, goal))
    }
}

impl Agent for MemorizerAgent {
    fn begin_episode(&mut self, ctx: &EpisodeContext) {
        self.rng = seed::rng(self.seed, &[b"memorizer", &ctx.seed.to_le_bytes()]);
    }

    fn act(&mut self, obs: &Observation) -> String {
        let cur = obs.current_node;
        if let Some(goal) = goal_of(obs) {
            if let Some(text) = self.exact.get(&(cur, goal)) {
                return text.clone();
            }
        }
        if let Some(text) = self.edges.get(&cur).and_then(|v| v.choose(&mut self.rng)) {
            return text.clone();
        }
        match self.env.screen(cur) {
            Some(s) if !s.icons.is_empty() => {
                click_text(s, self.rng.random_range(0..s.icons.len()))
            }
            _ => super::complete_text(),
        }
    }
}
