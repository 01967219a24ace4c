use std::sync::Arc;

use super::{click_text, complete_text, goal_of, Agent, EpisodeContext};
use crate::bundle::EnvBundle;
use crate::episode::Observation;
use crate::graph::Navigator;

/// Follows the canonical shortest path and completes on the goal screen.
#[derive(Debug, Clone)]
pub struct OracleAgent {
    env: Arc<EnvBundle>,
    nav: Arc<Navigator>,
}

impl OracleAgent {
    pub fn new(env: Arc<EnvBundle>) -> Self {
        let nav = Arc::new(env.navigator());
        OracleAgent { env, nav }
    }
}

impl Agent for OracleAgent {
    fn begin_episode(&mut self, _ctx: &EpisodeContext) {}

    fn act(&mut self, obs: &Observation) -> String {
        let cur = obs.current_node;
        let Some(goal) = goal_of(obs) else {
            return complete_text();
        };
        if cur == goal {
            return complete_text();
        }
        let Some(screen) = self.env.screen(cur) else {
            return complete_text();
        };
        self.nav
            .next_hop(cur, goal)
            .and_then(|t| screen.icon_for_target(t.target))
            .map(|idx| click_text(screen, idx))
            .unwrap_or_else(complete_text)
    }
}
