//! Text-mode single-episode debugger.

use std::io::{self, BufRead, Write};

use navsim_core::action::format_output;
use navsim_core::agents::{click_text, complete_text};
use navsim_core::bundle::EnvBundle;
use navsim_core::episode::{EpisodeConfig, EpisodeState};
use navsim_core::layout::OnClick;
use navsim_core::tasks::TaskSpec;
use navsim_core::ActionKind;

pub fn print_screen(env: &EnvBundle, st: &EpisodeState, out: &mut impl Write) -> io::Result<()> {
    writeln!(
        out,
        "{} (round {}/{})",
        st.current, st.step_index, st.config.max_rounds
    )?;
    writeln!(
        out,
        "  {:>2}  {:<10} {:<22} {:<12} leads to",
        "#", "name", "box", "center"
    )?;
    if let Some(screen) = env.screen(st.current) {
        for (i, icon) in screen.icons.iter().enumerate() {
            let b = icon.bbox;
            let (cx, cy) = b.center();
            let target = match icon.on_click {
                OnClick::Transition { target, .. } => target.to_string(),
                OnClick::NoOp => "-".to_string(),
            };
            writeln!(
                out,
                "  {i:>2}  {:<10} {:<22} {:<12} {target}",
                icon.name(),
                format!("({},{})-({},{})", b.x0, b.y0, b.x1, b.y1),
                format!("({cx},{cy})")
            )?;
        }
    }
    Ok(())
}

/// Turns a typed command into agent output. Accepts an icon index, `click X
/// Y`, `complete`, or a full `Explain: ...` line (with `\t` written
/// literally or as a real tab).
pub fn interpret(env: &EnvBundle, st: &EpisodeState, line: &str) -> Option<String> {
    let line = line.trim();
    if line.starts_with("Explain:") {
        return Some(line.replace("\\t", "\t"));
    }
    if line == "complete" {
        return Some(complete_text());
    }
    if let Some(rest) = line.strip_prefix("click ") {
        let mut parts = rest.split_whitespace().map(str::parse::<i32>);
        if let (Some(Ok(x)), Some(Ok(y)), None) = (parts.next(), parts.next(), parts.next()) {
            return Some(format_output("typed click", ActionKind::Click { x, y }));
        }
        return None;
    }
    let idx: usize = line.strip_prefix('#').unwrap_or(line).parse().ok()?;
    let screen = env.screen(st.current)?;
    (idx < screen.icons.len()).then(|| click_text(screen, idx))
}

pub fn play(
    env: &EnvBundle,
    task: TaskSpec,
    cfg: EpisodeConfig,
    input: impl BufRead,
    mut out: impl Write,
) -> anyhow::Result<EpisodeState> {
    let (mut st, obs) = EpisodeState::reset(env, task, cfg)?;
    writeln!(out, "{}", obs.instruction)?;
    print_screen(env, &st, &mut out)?;
    let mut lines = input.lines();
    while !st.done {
        write!(out, "> ")?;
        out.flush()?;
        let Some(line) = lines.next() else { break };
        let line = line?;
        if matches!(line.trim(), "quit" | "exit") {
            break;
        }
        let Some(raw) = interpret(env, &st, &line) else {
            writeln!(
                out,
                "commands: <icon #>, click X Y, complete, Explain: ...\\tAction: ..., quit"
            )?;
            continue;
        };
        let r = st.step(env, &raw)?;
        writeln!(
            out,
            "{}",
            r.observation
                .history
                .last()
                .map(String::as_str)
                .unwrap_or("")
        )?;
        if r.done {
            writeln!(out, "done: a2b_reward {}", r.a2b_reward)?;
        } else {
            print_screen(env, &st, &mut out)?;
        }
    }
    Ok(st)
}
