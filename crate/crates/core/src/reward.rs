//! Single-step composite reward: action type, click coordinates, intent
//! (the explanation names what was actually clicked), and output format.
//! Each component is 0 or 1 and the total is their unweighted sum.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::{parse_action, Action, ActionKind};
use crate::bundle::EnvBundle;
use crate::layout::{IconInstance, ScreenSpec};
use crate::tasks::StepInstance;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RewardError {
    #[error("click reference has no target icon")]
    MissingTargetIcon,
    #[error("reference screen {0} not in environment")]
    UnknownScreen(String),
}

static CLICK_TEMPLATE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^click \S+ icon on page_\d+\.?$").expect("valid regex"));
static COMPLETE_TEMPLATE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^this is the target page\.?$").expect("valid regex"));

pub const COMPLETE_INTENT_PHRASE: &str = "target page";

#[derive(Debug, Clone, Copy)]
pub struct ReferenceStep<'a> {
    pub action: ActionKind,
    pub explanation: &'a str,
    pub screen: &'a ScreenSpec,
    pub target_icon: Option<usize>,
}

impl<'a> ReferenceStep<'a> {
    pub fn from_instance(inst: &'a StepInstance, env: &'a EnvBundle) -> Result<Self, RewardError> {
        let screen = env
            .screen(inst.node)
            .ok_or_else(|| RewardError::UnknownScreen(inst.node.to_string()))?;
        Ok(ReferenceStep {
            action: inst.reference.action,
            explanation: &inst.reference.explanation,
            screen,
            target_icon: inst.reference.target_icon,
        })
    }

    pub fn target(&self) -> Option<&'a IconInstance> {
        self.target_icon.and_then(|i| self.screen.icons.get(i))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_type: u8,
    pub r_coord: u8,
    pub r_intent: u8,
    pub r_format: u8,
    pub total: u8,
}

impl RewardBreakdown {
    pub fn new(r_type: u8, r_coord: u8, r_intent: u8, r_format: u8) -> Self {
        RewardBreakdown {
            r_type,
            r_coord,
            r_intent,
            r_format,
            total: r_type + r_coord + r_intent + r_format,
        }
    }
}

pub fn reward_type(pred: &Action, reference: &ReferenceStep) -> u8 {
    u8::from(pred.kind.same_type(&reference.action))
}

/// Click inside the reference target box scores 1; a `complete` always
/// scores 1 since it carries no coordinates.
pub fn reward_coord(pred: &Action, reference: &ReferenceStep) -> Result<u8, RewardError> {
    match pred.kind {
        ActionKind::Complete => Ok(1),
        ActionKind::Click { x, y } => match reference.action {
            ActionKind::Complete => Ok(0),
            ActionKind::Click { .. } => {
                let target = reference.target().ok_or(RewardError::MissingTargetIcon)?;
                Ok(u8::from(target.bbox.contains(x, y)))
            }
        },
    }
}

/// A click scores 1 when the explanation names the icon actually hit on the
/// reference screen; a `complete` when the explanation mentions the target
/// page.
pub fn reward_intent(pred: &Action, reference: &ReferenceStep) -> u8 {
    match pred.kind {
        ActionKind::Click { x, y } => match reference.screen.hit_test(x, y) {
            Some(icon) => u8::from(contains_token(&pred.explanation, icon.name())),
            None => 0,
        },
        ActionKind::Complete => u8::from(pred.explanation.contains(COMPLETE_INTENT_PHRASE)),
    }
}

/// 1 when `raw` parses and its explanation follows the template of the
/// reference action's type.
pub fn reward_format(raw: &str, reference: &ReferenceStep) -> u8 {
    match parse_action(raw) {
        Ok(a) => u8::from(explanation_matches_template(
            &a.explanation,
            reference.action,
        )),
        Err(_) => 0,
    }
}

pub fn explanation_matches_template(explanation: &str, kind: ActionKind) -> bool {
    let e = explanation.trim();
    match kind {
        ActionKind::Click { .. } => CLICK_TEMPLATE.is_match(e),
        ActionKind::Complete => COMPLETE_TEMPLATE.is_match(e),
    }
}

pub fn composite_reward(
    raw: &str,
    reference: &ReferenceStep,
) -> Result<RewardBreakdown, RewardError> {
    let pred = match parse_action(raw) {
        Ok(a) => a,
        Err(_) => return Ok(RewardBreakdown::default()),
    };
    Ok(RewardBreakdown::new(
        reward_type(&pred, reference),
        reward_coord(&pred, reference)?,
        reward_intent(&pred, reference),
        reward_format(raw, reference),
    ))
}

/// `name` occurs in `text` delimited by non-alphanumeric characters (or the
/// ends of the text).
pub fn contains_token(text: &str, name: &str) -> bool {
    if name.is_empty() {
        return false;
    }
    let bytes = text.as_bytes();
    text.match_indices(name).any(|(i, m)| {
        let before_ok = i == 0 || !bytes[i - 1].is_ascii_alphanumeric();
        let end = i + m.len();
        let after_ok = end == bytes.len() || !bytes[end].is_ascii_alphanumeric();
        before_ok && after_ok
    })
}
