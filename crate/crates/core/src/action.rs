//! The agent output grammar.
//!
//! ```text
//! Explain: <free text>\tAction: click(start_box=<|box_start|>(x,y)<|box_end|>)
//! Explain: <free text>\tAction: complete
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::NodeId;

pub const COORD_MAX: i64 = 1000;
const EXPLAIN_TAG: &str = "Explain:";
const ACTION_TAG: &str = "\tAction:";
const CLICK_OPEN: &str = "click(start_box=<|box_start|>(";
const CLICK_CLOSE: &str = ")<|box_end|>)";
pub const COMPLETE_EXPLANATION: &str = "this is the target page.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ActionKind {
    Click { x: i32, y: i32 },
    Complete,
}

impl ActionKind {
    pub fn is_click(&self) -> bool {
        matches!(self, ActionKind::Click { .. })
    }

    pub fn same_type(&self, other: &ActionKind) -> bool {
        self.is_click() == other.is_click()
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionKind::Click { x, y } => write!(f, "{CLICK_OPEN}{x},{y}{CLICK_CLOSE}"),
            ActionKind::Complete => f.write_str("complete"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    pub kind: ActionKind,
    pub explanation: String,
    pub raw: String,
}

impl Action {
    pub fn new(kind: ActionKind, explanation: impl Into<String>) -> Self {
        let explanation = explanation.into();
        let raw = format_output(&explanation, kind);
        Action {
            kind,
            explanation,
            raw,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("malformed action text: {0:?}")]
    FormatError(String),
    #[error("click coordinates ({x},{y}) outside [0,1000]")]
    CoordRange { x: i64, y: i64 },
}

/// Renders an explanation and action in the canonical output format.
pub fn format_output(explanation: &str, kind: ActionKind) -> String {
    format!("{EXPLAIN_TAG} {explanation}{ACTION_TAG} {kind}")
}

/// Reference explanation for clicking the icon `name` on `page`.
pub fn click_explanation(name: &str, page: NodeId) -> String {
    format!("click {name} icon on {page}.")
}

/// Parses agent output. Surrounding whitespace is tolerated, as is
/// whitespace after `Action:` and around the coordinates.
pub fn parse_action(text: &str) -> Result<Action, ParseError> {
    let fail = || ParseError::FormatError(text.to_string());
    let body = text.trim();
    let rest = body.strip_prefix(EXPLAIN_TAG).ok_or_else(fail)?;
    let split = rest.find(ACTION_TAG).ok_or_else(fail)?;
    let explanation = rest[..split].trim().to_string();
    let action = rest[split + ACTION_TAG.len()..].trim();

    let kind = if action == "complete" {
        ActionKind::Complete
    } else {
        let inner = action
            .strip_prefix(CLICK_OPEN)
            .and_then(|s| s.strip_suffix(CLICK_CLOSE))
            .ok_or_else(fail)?;
        let (xs, ys) = inner.split_once(',').ok_or_else(fail)?;
        let x: i64 = xs.trim().parse().map_err(|_| fail())?;
        let y: i64 = ys.trim().parse().map_err(|_| fail())?;
        if !(0..=COORD_MAX).contains(&x) || !(0..=COORD_MAX).contains(&y) {
            return Err(ParseError::CoordRange { x, y });
        }
        ActionKind::Click {
            x: x as i32,
            y: y as i32,
        }
    };
    Ok(Action {
        kind,
        explanation,
        raw: text.to_string(),
    })
}
