//! Wire schemas for the session server. See `PROTOCOL.md`.

use serde::{Deserialize, Serialize};

use navsim_core::episode::{Observation, StepInfo};

pub const PROTOCOL_VERSION: &str = "navsim/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreateSession {
    /// Instruction text, `From page_<a> to page_<b>`.
    pub task: String,
    #[serde(default)]
    pub max_rounds: Option<u32>,
    #[serde(default)]
    pub allow_complete: Option<bool>,
    #[serde(default)]
    pub inline_image: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRequest {
    pub raw_text: String,
    #[serde(default)]
    pub inline_image: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireObservation {
    pub instruction: String,
    pub history: Vec<String>,
    pub step_index: u32,
    pub image_url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_base64: Option<String>,
}

impl WireObservation {
    pub fn from_observation(obs: &Observation, image_base64: Option<String>) -> Self {
        WireObservation {
            instruction: obs.instruction.clone(),
            history: obs.history.clone(),
            step_index: obs.step_index,
            image_url: format!("/{}", obs.screen_image()),
            image_base64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireInfo {
    pub transitioned: bool,
    /// The step had no effect on the screen.
    pub invalid: bool,
    pub format_error: bool,
    pub reached_target: bool,
}

impl From<StepInfo> for WireInfo {
    fn from(i: StepInfo) -> Self {
        WireInfo {
            transitioned: i.transitioned,
            invalid: i.invalid_click,
            format_error: i.format_error,
            reached_target: i.reached_target,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub version: String,
    pub session_id: String,
    pub observation: WireObservation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepResponse {
    pub version: String,
    pub observation: WireObservation,
    pub done: bool,
    pub a2b_reward: u8,
    pub info: WireInfo,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub version: String,
    pub session_id: String,
    pub task: String,
    pub step_index: u32,
    pub max_rounds: u32,
    pub allow_complete: bool,
    pub done: bool,
    pub success: bool,
    pub a2b_reward: u8,
    pub history: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deleted {
    pub version: String,
    pub session_id: String,
    pub deleted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionInfo {
    pub version: String,
    pub schema_version: u32,
    pub renderer_version: u32,
    pub env_seed: u64,
    pub variant: String,
    pub screens: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub version: String,
    pub error: ErrorBody,
}
