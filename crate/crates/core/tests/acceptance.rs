//! Acceptance suite. Runs every criterion in sequence, prints one PASS/FAIL
//! line each, and exits non-zero if any fails.

use std::collections::{BTreeMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use navsim_core::action::{click_explanation, format_output, ActionKind, COMPLETE_EXPLANATION};
use navsim_core::agents::tabular::{tabular_train, TrainConfig};
use navsim_core::agents::{Agent, MemorizerAgent, OracleAgent, RandomAgent, TabularAgent};
use navsim_core::bundle::{build_environment, save_bundle, screen_path, EnvBundle, METADATA_FILE};
use navsim_core::episode::{EpisodeConfig, EpisodeState, RewardRule};
use navsim_core::eval::{
    eval_interactive, eval_static, instance_observation, InteractiveConfig, InteractiveReport,
};
use navsim_core::graph::{BranchingSpec, Navigator, NodeId, Role, SplitAssignment};
use navsim_core::icons::{forge_icon, IconKind};
use navsim_core::layout::{layout_screen, LayoutPolicy, OnClick, ScreenSpec, CANVAS};
use navsim_core::reward::{composite_reward, ReferenceStep};
use navsim_core::tasks::{
    bucket_counts, edge_instances, enumerate_tasks, path_instances, split_dataset, synth_icon_data,
    DatasetKind, DatasetRecord, StepInstance, TaskEntry,
};
use navsim_core::variant::{apply_variant, VariantKind, VariantSpec};
use navsim_core::PolicyTable;
use regex::Regex;

const ENV_SEED: u64 = 42;
const EVAL_SEED: u64 = 2024;
const TRAIN_SEED: u64 = 7;
const VARIANT_SEED: u64 = 99;

/// Path@1..Path@7 task counts over one subtree joined with the root.
const TASK_BUCKETS: [(u32, usize); 7] = [
    (1, 137),
    (2, 147),
    (3, 222),
    (4, 324),
    (5, 492),
    (6, 456),
    (7, 384),
];
const TASK_TOTAL: usize = 2162;
const EDGE_INSTANCES: usize = 274;
const PATH_INSTANCES: usize = 12_439;
const ICON_RECORDS: usize = 2320;
const ICON_MULTIPLICITY: usize = 10;

const MIN_REWARD_CASES: usize = 10_000;
const TABULAR_EPISODES: u32 = 200;
const TABULAR_MIN_PASS1: f64 = 0.95;
const HACK_EPISODES: u32 = 50;
/// Learning rate for the reward-hacking probe.
const HACK_ALPHA: f64 = 1.0;
const PASS_N: u32 = 5;

type Check = Result<String, String>;
type Criterion = (&'static str, fn(&Fixture) -> Check);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

struct Fixture {
    env: Arc<EnvBundle>,
    nav: Navigator,
    split: SplitAssignment,
    test_nodes: Vec<NodeId>,
    test_tasks: Vec<TaskEntry>,
    trained_tasks: Vec<TaskEntry>,
    table: OnceLock<Arc<PolicyTable>>,
}

impl Fixture {
    fn new() -> Self {
        let env = build_environment(&BranchingSpec::env_base(), ENV_SEED).expect("Env-Base builds");
        let nav = env.navigator();
        let split = env
            .graph
            .partition_subtrees(&Role::env_base_split())
            .expect("five subtrees");
        let test_nodes = split.nodes_with_root(Role::Test);
        let test_tasks = enumerate_tasks(&nav, &test_nodes);
        let trained_tasks = split
            .subtree_sets(&env.graph, Role::Rl)
            .iter()
            .flat_map(|s| enumerate_tasks(&nav, s))
            .filter(|t| t.distance <= 3)
            .collect();
        Fixture {
            env: Arc::new(env),
            nav,
            split,
            test_nodes,
            test_tasks,
            trained_tasks,
            table: OnceLock::new(),
        }
    }

    fn trained_table(&self) -> Arc<PolicyTable> {
        self.table
            .get_or_init(|| {
                let tasks: Vec<_> = self.trained_tasks.iter().map(|t| t.task).collect();
                let cfg = TrainConfig {
                    episodes_per_task: TABULAR_EPISODES,
                    seed: TRAIN_SEED,
                    ..TrainConfig::default()
                };
                Arc::new(
                    tabular_train(&self.env, &self.nav, &tasks, &cfg).expect("training converges"),
                )
            })
            .clone()
    }

    fn interactive<A: Agent + Clone + Sync>(
        &self,
        tasks: &[TaskEntry],
        agent: &A,
        n: u32,
        episode: EpisodeConfig,
    ) -> InteractiveReport {
        let cfg = InteractiveConfig {
            n,
            episode,
            seed: EVAL_SEED,
        };
        eval_interactive(&self.env, &self.nav, tasks, agent, &cfg).0
    }
}

fn within(start: Instant, limit: Duration) -> Result<Duration, String> {
    let took = start.elapsed();
    if took > limit {
        Err(format!("took {took:.2?}, limit {limit:?}"))
    } else {
        Ok(took)
    }
}

fn c1_env_base(_: &Fixture) -> Check {
    let t = Instant::now();
    let a = build_environment(&BranchingSpec::env_base(), ENV_SEED).map_err(|e| e.to_string())?;
    let dir_a = tempfile::tempdir().unwrap();
    save_bundle(&a, dir_a.path()).map_err(|e| e.to_string())?;
    let took = within(t, Duration::from_secs(10))?;

    ensure!(a.graph.len() == 231, "{} nodes", a.graph.len());
    let ids: HashSet<u32> = a.assets.iter().map(|x| x.icon_id).collect();
    let names: HashSet<&str> = a.assets.iter().map(|x| x.name.as_str()).collect();
    ensure!(
        a.assets.len() == 232 && ids.len() == 232 && names.len() == 232,
        "{} assets, {} names",
        a.assets.len(),
        names.len()
    );
    let max = independent_max_distance(&a);
    ensure!(max == 7, "max distance {max}");
    ensure!(
        a.navigator().max_distance() == 7,
        "navigator max distance disagrees"
    );

    let b = build_environment(&BranchingSpec::env_base(), ENV_SEED).map_err(|e| e.to_string())?;
    let dir_b = tempfile::tempdir().unwrap();
    save_bundle(&b, dir_b.path()).map_err(|e| e.to_string())?;
    let read = |d: &std::path::Path, f: &std::path::Path| std::fs::read(d.join(f)).unwrap();
    ensure!(
        read(dir_a.path(), METADATA_FILE.as_ref()) == read(dir_b.path(), METADATA_FILE.as_ref()),
        "env.json differs between builds"
    );
    for id in a.graph.ids() {
        ensure!(
            std::fs::read(screen_path(dir_a.path(), id)).unwrap()
                == std::fs::read(screen_path(dir_b.path(), id)).unwrap(),
            "{id} PNG differs between builds"
        );
    }
    Ok(format!(
        "231 nodes, 232 assets, max distance 7, byte-identical rebuild; build+save {took:.2?}"
    ))
}

/// All-pairs BFS over an adjacency list rebuilt from parent links.
fn independent_max_distance(env: &EnvBundle) -> u32 {
    let n = env.graph.len();
    let mut adj = vec![Vec::new(); n];
    for node in &env.graph.nodes {
        let i = node.id.index();
        if let Some(p) = node.parent {
            adj[i].push(p.index());
            adj[p.index()].push(i);
            if node.depth >= 2 {
                adj[i].push(0);
            }
        }
    }
    let mut best = 0;
    for s in 0..n {
        let mut dist = vec![u32::MAX; n];
        dist[s] = 0;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if dist[v] == u32::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        best = best.max(*dist.iter().max().unwrap());
    }
    best
}

fn c2_task_histogram(fx: &Fixture) -> Check {
    let t = Instant::now();
    let tasks = enumerate_tasks(&fx.nav, &fx.test_nodes);
    let counts = bucket_counts(&tasks);
    let took = within(t, Duration::from_secs(1))?;
    let expected: BTreeMap<u32, usize> = TASK_BUCKETS.into_iter().collect();
    ensure!(counts == expected, "buckets {counts:?}");
    ensure!(tasks.len() == TASK_TOTAL, "{} tasks", tasks.len());
    for s in fx
        .split
        .subtree_sets(&fx.env.graph, Role::Sft)
        .iter()
        .chain(&fx.split.subtree_sets(&fx.env.graph, Role::Rl))
    {
        ensure!(
            bucket_counts(&enumerate_tasks(&fx.nav, s)) == expected,
            "another subtree differs"
        );
    }
    Ok(format!("{counts:?}, total {TASK_TOTAL}; {took:.2?}"))
}

fn c3_dataset_counts(fx: &Fixture) -> Check {
    let t = Instant::now();
    let edges = edge_instances(&fx.env, &fx.nav, &fx.test_nodes);
    let paths = path_instances(&fx.env, &fx.nav, &fx.test_nodes);
    let (captions, grounding) = synth_icon_data(&fx.env, ICON_MULTIPLICITY, ENV_SEED);
    let took = within(t, Duration::from_secs(5))?;
    ensure!(
        edges.len() == EDGE_INSTANCES,
        "{} edge instances",
        edges.len()
    );
    ensure!(
        paths.len() == PATH_INSTANCES,
        "{} path instances",
        paths.len()
    );
    let completes = paths
        .iter()
        .filter(|p| p.reference.action == ActionKind::Complete)
        .count();
    ensure!(completes == TASK_TOTAL, "{completes} complete instances");
    ensure!(
        captions.len() == ICON_RECORDS,
        "{} caption records",
        captions.len()
    );
    ensure!(
        grounding.len() == ICON_RECORDS,
        "{} grounding records",
        grounding.len()
    );
    Ok(format!("{EDGE_INSTANCES} edge, {PATH_INSTANCES} path, {ICON_RECORDS}+{ICON_RECORDS} icon records; {took:.2?}"))
}

struct BruteScreen {
    names: Vec<String>,
    /// Icon index painted at each canvas point, -1 for background.
    hit: Vec<i16>,
}

impl BruteScreen {
    fn paint(screen: &ScreenSpec) -> Self {
        let side = CANVAS as usize + 1;
        let mut hit = vec![-1i16; side * side];
        for (i, icon) in screen.icons.iter().enumerate() {
            for y in icon.bbox.y0..icon.bbox.y1 {
                for x in icon.bbox.x0..icon.bbox.x1 {
                    hit[y as usize * side + x as usize] = i as i16;
                }
            }
        }
        BruteScreen {
            names: screen.icons.iter().map(|i| i.name().to_string()).collect(),
            hit,
        }
    }

    fn at(&self, x: i64, y: i64) -> Option<usize> {
        let side = CANVAS as i64 + 1;
        let v = self.hit[(y * side + x) as usize];
        (v >= 0).then_some(v as usize)
    }
}

enum BruteAction {
    Click(i64, i64),
    Complete,
}

fn brute_parse(raw: &str) -> Option<(String, BruteAction)> {
    static OUTER: OnceLock<Regex> = OnceLock::new();
    static CLICK: OnceLock<Regex> = OnceLock::new();
    let outer = OUTER.get_or_init(|| Regex::new(r"(?s)^\s*Explain:(.*?)\tAction:(.*)$").unwrap());
    let click = CLICK.get_or_init(|| {
        Regex::new(r"^click\(start_box=<\|box_start\|>\(\s*(-?[0-9]+)\s*,\s*(-?[0-9]+)\s*\)<\|box_end\|>\)$").unwrap()
    });
    let caps = outer.captures(raw)?;
    let explanation = caps[1].trim().to_string();
    let action = caps[2].trim();
    if action == "complete" {
        return Some((explanation, BruteAction::Complete));
    }
    let c = click.captures(action)?;
    let (x, y): (i64, i64) = (c[1].parse().ok()?, c[2].parse().ok()?);
    ((0..=1000).contains(&x) && (0..=1000).contains(&y))
        .then_some((explanation, BruteAction::Click(x, y)))
}

fn brute_template(explanation: &str, click_ref: bool) -> bool {
    let lower = explanation.trim().to_lowercase();
    let body = lower.strip_suffix('.').unwrap_or(&lower);
    if !click_ref {
        return body == "this is the target page";
    }
    let parts: Vec<&str> = body.split(' ').collect();
    parts.len() == 5
        && parts[0] == "click"
        && !parts[1].is_empty()
        && !parts[1].chars().any(char::is_whitespace)
        && parts[2] == "icon"
        && parts[3] == "on"
        && parts[4]
            .strip_prefix("page_")
            .is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
}

/// Reference: `Some(icon)` for a click on that icon, `None` for complete.
fn brute_score(raw: &str, screen: &BruteScreen, target: Option<usize>) -> [u8; 4] {
    let Some((explanation, action)) = brute_parse(raw) else {
        return [0; 4];
    };
    let r_type = match (&action, target) {
        (BruteAction::Click(..), Some(_)) | (BruteAction::Complete, None) => 1,
        _ => 0,
    };
    let r_coord = match (&action, target) {
        (BruteAction::Complete, _) => 1,
        (BruteAction::Click(..), None) => 0,
        (BruteAction::Click(x, y), Some(t)) => u8::from(screen.at(*x, *y) == Some(t)),
    };
    let r_intent = match &action {
        BruteAction::Complete => u8::from(explanation.contains("target page")),
        BruteAction::Click(x, y) => match screen.at(*x, *y) {
            None => 0,
            Some(i) => u8::from(
                explanation
                    .split(|c: char| !c.is_ascii_alphanumeric())
                    .any(|tok| tok == screen.names[i]),
            ),
        },
    };
    let r_format = u8::from(brute_template(&explanation, target.is_some()));
    [r_type, r_coord, r_intent, r_format]
}

fn synthetic_screen(node: u32, count: usize, policy: LayoutPolicy) -> ScreenSpec {
    let items = (0..count)
        .map(|i| {
            let name = ["Tovik", "Marel", "Pasudo", "Kelbi", "Zunor"][i];
            let asset = forge_icon(node as u64, i as u32 + 10, name, IconKind::Functional).unwrap();
            (
                asset,
                OnClick::Transition {
                    kind: navsim_core::graph::EdgeKind::Forward,
                    target: NodeId(i as u32 + 1),
                },
            )
        })
        .collect();
    layout_screen(NodeId(node), items, 3 + node as u64, policy).unwrap()
}

fn c4_reward_oracle(fx: &Fixture) -> Check {
    let t = Instant::now();
    let two = fx
        .env
        .screens
        .iter()
        .find(|s| s.icons.len() == 2)
        .unwrap()
        .clone();
    let five = fx
        .env
        .screens
        .iter()
        .find(|s| s.icons.len() == 5)
        .unwrap()
        .clone();
    let screens = vec![
        two,
        five,
        synthetic_screen(3, 2, LayoutPolicy::Free { pin_system: false }),
        synthetic_screen(4, 5, LayoutPolicy::Grid),
    ];
    let mut cases = 0usize;
    for screen in &screens {
        let brute = BruteScreen::paint(screen);
        let mut coords: Vec<i32> = (0..=1000).step_by(25).collect();
        for icon in &screen.icons {
            coords.extend([
                icon.bbox.x0 - 1,
                icon.bbox.x0,
                icon.bbox.x1 - 1,
                icon.bbox.x1,
            ]);
            coords.extend([
                icon.bbox.y0 - 1,
                icon.bbox.y0,
                icon.bbox.y1 - 1,
                icon.bbox.y1,
            ]);
        }
        coords.retain(|c| (0..=1000).contains(c));
        coords.sort();
        coords.dedup();

        let mut explanations: Vec<String> = screen
            .icons
            .iter()
            .map(|i| click_explanation(i.name(), screen.node))
            .collect();
        explanations.extend([
            COMPLETE_EXPLANATION.to_string(),
            "This Is The Target Page".to_string(),
            format!("CLICK {} ICON ON PAGE_{}", brute.names[0], screen.node.0),
            format!("I will press {}", brute.names[0]),
            format!("click {}x icon on {}.", brute.names[0], screen.node),
            "this is the target page..".to_string(),
        ]);

        let mut refs: Vec<Option<usize>> = (0..screen.icons.len()).map(Some).collect();
        refs.push(None);
        for &target in &refs {
            let (ref_action, ref_expl) = match target {
                Some(i) => {
                    let (x, y) = screen.icons[i].bbox.center();
                    (
                        ActionKind::Click { x, y },
                        click_explanation(screen.icons[i].name(), screen.node),
                    )
                }
                None => (ActionKind::Complete, COMPLETE_EXPLANATION.to_string()),
            };
            let reference = ReferenceStep {
                action: ref_action,
                explanation: &ref_expl,
                screen,
                target_icon: target,
            };
            let mut check = |raw: &str| -> Result<(), String> {
                let got = composite_reward(raw, &reference).map_err(|e| e.to_string())?;
                let want = brute_score(raw, &brute, target);
                let got_arr = [got.r_type, got.r_coord, got.r_intent, got.r_format];
                if got_arr != want || got.total != want.iter().sum::<u8>() {
                    return Err(format!(
                        "{raw:?} vs {target:?}: got {got_arr:?}, brute {want:?}"
                    ));
                }
                cases += 1;
                Ok(())
            };
            for e in &explanations {
                check(&format_output(e, ActionKind::Complete))?;
                for &x in &coords {
                    for &y in coords.iter().step_by(2) {
                        check(&format_output(e, ActionKind::Click { x, y }))?;
                    }
                }
            }
            for raw in [
                String::new(),
                "Explain: x Action: complete".to_string(),
                "Explain: x\tAction: click(start_box=<|box_start|>(1001,4)<|box_end|>)".to_string(),
                "Explain: x\tAction: click(5,5)".to_string(),
                format!(
                    "  {}  ",
                    format_output(&explanations[0], ActionKind::Click { x: 500, y: 500 })
                ),
            ] {
                check(&raw)?;
            }
        }
    }
    let took = within(t, Duration::from_secs(30))?;
    ensure!(cases >= MIN_REWARD_CASES, "only {cases} cases");
    Ok(format!(
        "{cases} cases agree with the brute-force scorer; {took:.2?}"
    ))
}

fn c5_oracle(fx: &Fixture) -> Check {
    let t = Instant::now();
    let oracle = OracleAgent::new(fx.env.clone());
    let report = fx.interactive(&fx.test_tasks, &oracle, 1, EpisodeConfig::default());
    let p1 = report.pass_at[0];
    ensure!(
        p1.correct == TASK_TOTAL as u64 && p1.total == TASK_TOTAL as u64,
        "interactive Pass@1 {p1:?}"
    );

    let instances = path_instances(&fx.env, &fx.nav, &fx.test_nodes);
    let st = eval_static(&fx.env, &instances, &oracle, EVAL_SEED);
    for (b, r) in st.step.iter().chain(&st.task) {
        ensure!(r.correct == r.total, "bucket {b} not perfect: {r:?}");
    }
    ensure!(
        st.task_overall.total == TASK_TOTAL as u64,
        "{:?} tasks",
        st.task_overall
    );

    let mut agent = oracle.clone();
    for inst in &instances {
        let raw = agent.act(&instance_observation(inst));
        let reference = ReferenceStep::from_instance(inst, &fx.env).map_err(|e| e.to_string())?;
        let r = composite_reward(&raw, &reference).map_err(|e| e.to_string())?;
        ensure!(r.total == 4, "{raw:?} scored {r:?}");
    }
    let took = within(t, Duration::from_secs(120))?;
    Ok(format!(
        "Pass@1 100.00 on {TASK_TOTAL} tasks, static 100.00 over {} steps, all outputs score 4; {took:.2?}",
        instances.len()
    ))
}

fn c6_round_limit(fx: &Fixture) -> Check {
    let oracle = OracleAgent::new(fx.env.clone());
    let report = fx.interactive(
        &fx.test_tasks,
        &oracle,
        1,
        EpisodeConfig::default().with_max_rounds(3),
    );
    let expected = (TASK_BUCKETS[0].1 + TASK_BUCKETS[1].1) as u64;
    ensure!(
        report.pass_at[0].correct == expected,
        "{} passed, expected {expected}",
        report.pass_at[0].correct
    );
    for (b, r) in &report.per_bucket {
        let ok = if *b <= 2 {
            r[0].correct == r[0].total
        } else {
            r[0].correct == 0
        };
        ensure!(ok, "bucket {b}: {:?}", r[0]);
    }
    Ok(format!(
        "{expected}/{TASK_TOTAL} = {:.2}%",
        report.pass_at[0].percent()
    ))
}

fn c7_tabular(fx: &Fixture) -> Check {
    let t = Instant::now();
    let table = fx.trained_table();
    let agent = TabularAgent::new(fx.env.clone(), table, TRAIN_SEED);
    let cfg = InteractiveConfig {
        n: PASS_N,
        episode: EpisodeConfig::default(),
        seed: EVAL_SEED,
    };
    let (report, records) = eval_interactive(&fx.env, &fx.nav, &fx.trained_tasks, &agent, &cfg);
    let took = within(t, Duration::from_secs(300))?;
    let p1 = report.pass_at[0].fraction();
    ensure!(
        p1 >= TABULAR_MIN_PASS1,
        "greedy Pass@1 {:.4} < {TABULAR_MIN_PASS1}",
        p1
    );
    let backtracks = records
        .iter()
        .filter(|r| r.success && r.backtracked)
        .count();
    ensure!(backtracks > 0, "no successful trace backtracks");
    Ok(format!(
        "{} tasks, Pass@1 {:.2}%, {backtracks} successful backtracking traces; {took:.2?}",
        fx.trained_tasks.len(),
        100.0 * p1
    ))
}

fn train_with(
    fx: &Fixture,
    episode: EpisodeConfig,
    alpha: f64,
) -> Result<Arc<PolicyTable>, String> {
    let tasks: Vec<_> = fx.trained_tasks.iter().map(|t| t.task).collect();
    let cfg = TrainConfig {
        episodes_per_task: HACK_EPISODES,
        seed: TRAIN_SEED,
        episode,
        alpha,
        ..TrainConfig::default()
    };
    tabular_train(&fx.env, &fx.nav, &tasks, &cfg)
        .map(Arc::new)
        .map_err(|e| e.to_string())
}

fn c8_reward_hacking(fx: &Fixture) -> Check {
    let t = Instant::now();
    let broken = EpisodeConfig {
        reward_rule: RewardRule::CompleteAlwaysPays,
        ..EpisodeConfig::default()
    };
    let hacked = TabularAgent::new(
        fx.env.clone(),
        train_with(fx, broken, HACK_ALPHA)?,
        TRAIN_SEED,
    );
    let len_hacked = fx
        .interactive(&fx.trained_tasks, &hacked, 1, broken)
        .mean_episode_length;
    ensure!(
        len_hacked == 1.0,
        "broken reward mean episode length {len_hacked}"
    );

    let honest = TabularAgent::new(
        fx.env.clone(),
        train_with(fx, EpisodeConfig::default(), HACK_ALPHA)?,
        TRAIN_SEED,
    );
    let len_honest = fx
        .interactive(&fx.trained_tasks, &honest, 1, EpisodeConfig::default())
        .mean_episode_length;
    ensure!(
        len_honest > 1.0,
        "correct reward mean episode length {len_honest}"
    );

    let mut off_goal = 0;
    for rule in [RewardRule::GoalReached, RewardRule::CompleteAlwaysPays] {
        let ep = EpisodeConfig {
            allow_complete: false,
            reward_rule: rule,
            ..EpisodeConfig::default()
        };
        let agent = TabularAgent::new(fx.env.clone(), train_with(fx, ep, HACK_ALPHA)?, TRAIN_SEED);
        let cfg = InteractiveConfig {
            n: PASS_N,
            episode: ep,
            seed: EVAL_SEED,
        };
        let (_, records) = eval_interactive(&fx.env, &fx.nav, &fx.trained_tasks, &agent, &cfg);
        off_goal += records
            .iter()
            .filter(|r| r.success && r.final_node != r.task.goal)
            .count();
    }
    ensure!(
        off_goal == 0,
        "{off_goal} off-goal successes without complete"
    );

    let slow = TabularAgent::new(
        fx.env.clone(),
        train_with(fx, broken, TrainConfig::default().alpha)?,
        TRAIN_SEED,
    );
    let len_slow = fx
        .interactive(&fx.trained_tasks, &slow, 1, broken)
        .mean_episode_length;
    let took = within(t, Duration::from_secs(120))?;
    Ok(format!(
        "alpha {HACK_ALPHA}: mean length {len_hacked:.2} broken vs {len_honest:.2} correct; 0 off-goal successes \
         (alpha 0.1 broken: {len_slow:.2}); {took:.2?}"
    ))
}

fn c9_variants(fx: &Fixture) -> Check {
    let t = Instant::now();
    let base_graph = serde_json::to_vec(&fx.env.graph).unwrap();
    let base_hashes: Vec<String> = fx
        .env
        .render_all()
        .iter()
        .map(|i| i.content_hash())
        .collect();
    let mut notes = Vec::new();
    for kind in VariantKind::ALL {
        let v = Arc::new(
            apply_variant(&fx.env, &VariantSpec::new(kind, VARIANT_SEED))
                .map_err(|e| e.to_string())?,
        );
        ensure!(
            serde_json::to_vec(&v.graph).unwrap() == base_graph,
            "{kind}: graph changed"
        );
        let report = {
            let cfg = InteractiveConfig {
                n: 1,
                episode: EpisodeConfig::default(),
                seed: EVAL_SEED,
            };
            eval_interactive(
                &v,
                &fx.nav,
                &fx.test_tasks,
                &OracleAgent::new(v.clone()),
                &cfg,
            )
            .0
        };
        ensure!(
            report.pass_at[0].correct == TASK_TOTAL as u64,
            "{kind}: oracle Pass@1 {:?}",
            report.pass_at[0]
        );
        match kind {
            VariantKind::Image => {
                let hashes: Vec<String> = v.render_all().iter().map(|i| i.content_hash()).collect();
                for (s, (a, b)) in fx.env.screens.iter().zip(base_hashes.iter().zip(&hashes)) {
                    let functional = s.icons.iter().any(|i| i.asset.kind == IconKind::Functional);
                    ensure!(!functional || a != b, "{kind}: {} image unchanged", s.node);
                }
            }
            VariantKind::Position | VariantKind::Noise => {
                for s in &v.screens {
                    ensure!(
                        pairwise_disjoint(s),
                        "{kind}: overlapping boxes on {}",
                        s.node
                    );
                }
            }
            VariantKind::Name => {}
        }
        if kind == VariantKind::Noise {
            for (b, s) in fx.env.screens.iter().zip(&v.screens) {
                ensure!(
                    s.icons.len() == b.icons.len() + 2,
                    "{} gained {} icons",
                    s.node,
                    s.icons.len() - b.icons.len()
                );
                for icon in &s.icons[b.icons.len()..] {
                    ensure!(icon.on_click == OnClick::NoOp, "noise icon with an effect");
                    let goal = if s.node == NodeId(0) {
                        NodeId(1)
                    } else {
                        NodeId(0)
                    };
                    let task = navsim_core::TaskSpec::new(s.node, goal).unwrap();
                    let (mut st, _) =
                        EpisodeState::reset(&v, task, EpisodeConfig::default()).unwrap();
                    let (x, y) = icon.bbox.center();
                    st.step(&v, &format_output("noise", ActionKind::Click { x, y }))
                        .unwrap();
                    ensure!(st.current == s.node, "noise click moved the episode");
                }
            }
        }
        notes.push(kind.to_string());
    }
    let took = within(t, Duration::from_secs(60))?;
    Ok(format!("{} checked; {took:.2?}", notes.join(", ")))
}

fn pairwise_disjoint(s: &ScreenSpec) -> bool {
    let boxes: Vec<_> = s.icons.iter().map(|i| i.bbox).collect();
    boxes
        .iter()
        .all(|b| b.x0 >= 0 && b.y0 >= 0 && b.x1 <= 1000 && b.y1 <= 1000)
        && (0..boxes.len()).all(|i| {
            (i + 1..boxes.len()).all(|j| {
                let (a, b) = (boxes[i], boxes[j]);
                a.x1 <= b.x0 || b.x1 <= a.x0 || a.y1 <= b.y0 || b.y1 <= a.y0
            })
        })
}

fn sft_instances(fx: &Fixture) -> Vec<StepInstance> {
    [DatasetKind::Edges, DatasetKind::Paths]
        .into_iter()
        .flat_map(|k| {
            split_dataset(
                &fx.env,
                &fx.nav,
                &fx.split,
                Role::Sft,
                k,
                ICON_MULTIPLICITY,
                ENV_SEED,
            )
        })
        .filter_map(|r| match r {
            DatasetRecord::Navigation(s) => Some(s),
            _ => None,
        })
        .collect()
}

fn c10_ordering(fx: &Fixture) -> Check {
    let random = RandomAgent::new(fx.env.clone(), TRAIN_SEED);
    let memorizer = MemorizerAgent::new(fx.env.clone(), &sft_instances(fx), TRAIN_SEED);
    let tabular = TabularAgent::new(fx.env.clone(), fx.trained_table(), TRAIN_SEED);
    let ep = EpisodeConfig::default();

    let mut lines = Vec::new();
    let full = [
        (
            "random",
            fx.interactive(&fx.test_tasks, &random, PASS_N, ep),
        ),
        (
            "memorizer",
            fx.interactive(&fx.test_tasks, &memorizer, PASS_N, ep),
        ),
        (
            "tabular",
            fx.interactive(&fx.test_tasks, &tabular, PASS_N, ep),
        ),
    ];
    for (name, r) in &full {
        for w in r.pass_at.windows(2) {
            ensure!(w[1].correct >= w[0].correct, "{name}: Pass@k decreases");
        }
        ensure!(
            r.pass_at[4].correct >= r.pass_at[0].correct,
            "{name}: Pass@5 < Pass@1"
        );
        lines.push(format!(
            "{name} {:.2}/{:.2}",
            r.pass_at[0].percent(),
            r.pass_at[4].percent()
        ));
    }

    let trained = &fx.trained_tasks;
    let o = fx
        .interactive(trained, &OracleAgent::new(fx.env.clone()), 1, ep)
        .pass_at[0];
    let tb = fx.interactive(trained, &tabular, 1, ep).pass_at[0];
    let rd = fx.interactive(trained, &random, 1, ep).pass_at[0];
    ensure!(
        o.correct >= tb.correct && tb.correct >= rd.correct,
        "ordering broken: {o:?} {tb:?} {rd:?}"
    );
    Ok(format!(
        "Pass@1/Pass@5 on all test tasks: {}; trained Pass@1 oracle {:.2} >= tabular {:.2} >= random {:.2}",
        lines.join(", "),
        o.percent(),
        tb.percent(),
        rd.percent()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("Env-Base construction and determinism", c1_env_base),
        ("task distance histogram", c2_task_histogram),
        ("dataset record counts", c3_dataset_counts),
        ("composite reward vs brute-force scorer", c4_reward_oracle),
        ("oracle agent interactive and static", c5_oracle),
        ("round limit truncates long tasks", c6_round_limit),
        ("tabular learner and backtracking", c7_tabular),
        ("reward-hacking probe", c8_reward_hacking),
        ("perturbed environment invariants", c9_variants),
        ("Pass@k monotonicity and agent ordering", c10_ordering),
    ];
    if std::env::args().any(|a| a == "--list") {
        for (i, (name, _)) in criteria.iter().enumerate() {
            println!("criterion_{}: {name}: test", i + 1);
        }
        return;
    }
    let filter: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let fx = Fixture::new();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if filter.is_some_and(|k| k != n) {
            continue;
        }
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(|| f(&fx))).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {n:>2} PASS [{secs:7.2}s] {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n:>2} FAIL [{secs:7.2}s] {name}: {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
