//! Plain-text result tables with a JSON sidecar.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{InteractiveReport, Ratio, StaticReport};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt report sidecar: {0}")]
    Corrupt(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Report {
    Static {
        agent: String,
        report: StaticReport,
    },
    Interactive {
        agent: String,
        report: InteractiveReport,
    },
}

fn header(buckets: &[u32]) -> String {
    let mut line = format!("{:<12}", "");
    for b in buckets {
        let _ = write!(line, "{:>9}", format!("Path@{b}"));
    }
    let _ = write!(line, "{:>9}", "Overall");
    line
}

fn row(label: &str, buckets: &[u32], get: impl Fn(u32) -> Option<Ratio>, overall: Ratio) -> String {
    let mut line = format!("{label:<12}");
    for &b in buckets {
        match get(b) {
            Some(r) => {
                let _ = write!(line, "{:>9.2}", r.percent());
            }
            None => {
                let _ = write!(line, "{:>9}", "-");
            }
        }
    }
    let _ = write!(line, "{:>9.2}", overall.percent());
    line
}

/// Bucket columns run from 1 to the largest distance present.
fn columns(max: Option<u32>) -> Vec<u32> {
    (1..=max.unwrap_or(0)).collect()
}

pub fn render_table(report: &Report) -> String {
    let mut out = String::new();
    match report {
        Report::Static { agent, report: r } => {
            let cols = columns(r.step.keys().max().copied());
            let _ = writeln!(out, "static evaluation: {agent}");
            let _ = writeln!(out, "{}", header(&cols));
            let _ = writeln!(
                out,
                "{}",
                row("Step", &cols, |b| r.step.get(&b).copied(), r.step_overall)
            );
            let _ = writeln!(
                out,
                "{}",
                row("Task", &cols, |b| r.task.get(&b).copied(), r.task_overall)
            );
            let _ = writeln!(
                out,
                "Edge {:.2}  Path {:.2}  Overall {:.2}",
                r.edge.percent(),
                r.path.percent(),
                r.step_overall.percent()
            );
        }
        Report::Interactive { agent, report: r } => {
            let cols = columns(r.per_bucket.keys().max().copied());
            let _ = writeln!(
                out,
                "interactive evaluation: {agent} ({} tasks, {} rollouts each)",
                r.tasks, r.n
            );
            let _ = writeln!(out, "{}", header(&cols));
            for (k, overall) in r.pass_at.iter().enumerate() {
                let get = |b: u32| r.per_bucket.get(&b).map(|v| v[k]);
                let _ = writeln!(
                    out,
                    "{}",
                    row(&format!("Pass@{}", k + 1), &cols, get, *overall)
                );
            }
            let _ = writeln!(
                out,
                "mean episode length {:.2}  recoveries {}",
                r.mean_episode_length, r.recovery_count
            );
        }
    }
    out
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    if path.extension().is_some_and(|e| e == "json") {
        path.with_extension("sidecar.json")
    } else {
        path.with_extension("json")
    }
}

/// Writes the table to `path` and the full report as JSON next to it.
/// Returns the sidecar path.
pub fn write_report(report: &Report, path: &Path) -> Result<PathBuf, ReportError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, render_table(report))?;
    let sidecar = sidecar_path(path);
    let mut json = serde_json::to_vec_pretty(report).expect("report serializes");
    json.push(b'\n');
    fs::write(&sidecar, json)?;
    Ok(sidecar)
}

pub fn read_report(sidecar: &Path) -> Result<Report, ReportError> {
    serde_json::from_slice(&fs::read(sidecar)?).map_err(|e| ReportError::Corrupt(e.to_string()))
}
