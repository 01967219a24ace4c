use std::sync::Arc;

use rand::Rng as _;

use super::{click_text, complete_text, Agent, EpisodeContext};
use crate::bundle::EnvBundle;
use crate::episode::Observation;
use crate::seed::{self, Rng};

/// Uniform over the icons on the current screen, plus `complete` when the
/// episode allows it.
#[derive(Debug, Clone)]
pub struct RandomAgent {
    env: Arc<EnvBundle>,
    seed: u64,
    rng: Rng,
    allow_complete: bool,
}

impl RandomAgent {
    pub fn new(env: Arc<EnvBundle>, seed: u64) -> Self {
        RandomAgent {
            env,
            seed,
            rng: seed::rng(seed, &[b"random-agent"]),
            allow_complete: true,
        }
    }
}

impl Agent for RandomAgent {
    fn begin_episode(&mut self, ctx: &EpisodeContext) {
        self.rng = seed::rng(self.seed, &[b"random-agent", &ctx.seed.to_le_bytes()]);
        self.allow_complete = ctx.allow_complete;
    }

    fn act(&mut self, obs: &Observation) -> String {
        let Some(screen) = self.env.screen(obs.current_node) else {
            return complete_text();
        };
        let options = screen.icons.len() + usize::from(self.allow_complete);
        if options == 0 {
            return complete_text();
        }
        match self.rng.random_range(0..options) {
            i if i < screen.icons.len() => click_text(screen, i),
            _ => complete_text(),
        }
    }
}
