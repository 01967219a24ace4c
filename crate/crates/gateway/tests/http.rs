use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use base64::Engine;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use navsim_core::agents::{click_text, complete_text, RandomAgent};
use navsim_core::bundle::build_environment;
use navsim_core::episode::{EpisodeConfig, EpisodeState};
use navsim_core::eval::{eval_interactive, InteractiveConfig};
use navsim_core::graph::{BranchingSpec, NodeId};
use navsim_core::raster::ImageBuffer;
use navsim_core::tasks::{enumerate_tasks, TaskSpec};
use navsim_core::EnvBundle;
use navsim_gateway::protocol::PROTOCOL_VERSION;
use navsim_gateway::server::{router, AppState};
use navsim_gateway::transcript::{replay, Transcript};

fn env() -> Arc<EnvBundle> {
    static ENV: OnceLock<Arc<EnvBundle>> = OnceLock::new();
    ENV.get_or_init(|| Arc::new(build_environment(&BranchingSpec(vec![3, 2, 1, 0]), 5).unwrap()))
        .clone()
}

fn app() -> (Router, Arc<AppState>) {
    let state = Arc::new(AppState::new(env(), None));
    (router(state.clone()), state)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (
        status,
        serde_json::from_slice(&bytes).unwrap_or(Value::Null),
    )
}

async fn raw_call(app: &Router, method: &str, uri: &str, body: &str) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .body(Body::from(body.to_string()))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (
        status,
        serde_json::from_slice(&bytes).unwrap_or(Value::Null),
    )
}

async fn create(app: &Router, task: &str) -> String {
    let (s, v) = call(app, "POST", "/session", Some(json!({ "task": task }))).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    v["session_id"].as_str().unwrap().to_string()
}

async fn step(app: &Router, id: &str, raw: &str) -> (StatusCode, Value) {
    call(
        app,
        "POST",
        &format!("/session/{id}/step"),
        Some(json!({ "raw_text": raw })),
    )
    .await
}

fn click_toward(env: &EnvBundle, from: NodeId, to: NodeId) -> String {
    let hop = env.navigator().next_hop(from, to).unwrap();
    let screen = env.screen(from).unwrap();
    click_text(screen, screen.icon_for_target(hop.target).unwrap())
}

#[tokio::test]
async fn version_endpoint_reports_bundle() {
    let (app, _) = app();
    let (s, v) = call(&app, "GET", "/version", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["version"], PROTOCOL_VERSION);
    assert_eq!(v["env_seed"], 5);
    assert_eq!(v["variant"], "base");
    assert_eq!(v["screens"], env().screens.len());
}

#[tokio::test]
async fn navigate_and_complete_pays_one() {
    let env = env();
    let (app, _) = app();
    let (start, goal) = (NodeId(0), NodeId(4));
    let (s, v) = call(
        &app,
        "POST",
        "/session",
        Some(json!({ "task": "From page_0 to page_4" })),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["version"], PROTOCOL_VERSION);
    assert_eq!(v["observation"]["instruction"], "From page_0 to page_4");
    assert_eq!(v["observation"]["step_index"], 0);
    assert_eq!(v["observation"]["image_url"], "/screens/page_0.png");
    assert!(v["observation"].get("image_base64").is_none());
    assert!(v["observation"].get("current_node").is_none());
    let id = v["session_id"].as_str().unwrap().to_string();

    let mut at = start;
    while at != goal {
        let (s, v) = step(&app, &id, &click_toward(&env, at, goal)).await;
        assert_eq!(s, StatusCode::OK);
        assert_eq!(v["version"], PROTOCOL_VERSION);
        assert_eq!(v["info"]["transitioned"], true);
        at = env.navigator().next_hop(at, goal).unwrap().target;
        assert_eq!(v["observation"]["image_url"], format!("/screens/{at}.png"));
        assert_eq!(v["done"], false);
        assert_eq!(v["a2b_reward"], 0);
    }
    let (s, v) = step(&app, &id, &complete_text()).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["done"], true);
    assert_eq!(v["a2b_reward"], 1);
    assert_eq!(v["info"]["reached_target"], true);

    let (s, v) = call(&app, "GET", &format!("/session/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["success"], true);
    assert_eq!(v["done"], true);
    assert_eq!(v["a2b_reward"], 1);
    assert_eq!(
        v["history"].as_array().unwrap().last().unwrap(),
        "step3: complete on page_4"
    );
}

#[tokio::test]
async fn finished_session_rejects_steps() {
    let (app, _) = app();
    let id = create(&app, "From page_0 to page_4").await;
    let (s, v) = step(&app, &id, &complete_text()).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["done"], true);
    assert_eq!(v["a2b_reward"], 0);
    let (s, v) = step(&app, &id, &complete_text()).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["error"]["code"], "session_finished");
    assert_eq!(v["version"], PROTOCOL_VERSION);
}

#[tokio::test]
async fn unknown_sessions_are_not_found() {
    let (app, _) = app();
    for (method, uri, body) in [
        ("GET", "/session/nope", None),
        ("DELETE", "/session/nope", None),
        (
            "POST",
            "/session/nope/step",
            Some(json!({ "raw_text": "x" })),
        ),
    ] {
        let (s, v) = call(&app, method, uri, body).await;
        assert_eq!(s, StatusCode::NOT_FOUND, "{method} {uri}");
        assert_eq!(v["error"]["code"], "not_found");
    }
    let (s, _) = call(&app, "GET", "/screens/page_999.png", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = call(&app, "GET", "/screens/banner.png", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn malformed_requests_are_bad_requests() {
    let (app, _) = app();
    for body in ["{", "{}", "{\"task\": 3}", "not json"] {
        let (s, v) = raw_call(&app, "POST", "/session", body).await;
        assert_eq!(s, StatusCode::BAD_REQUEST, "{body}");
        assert_eq!(v["error"]["code"], "bad_request");
    }
    for task in [
        "From page_0 to page_0",
        "From page_0 to page_999",
        "go somewhere",
    ] {
        let (s, _) = call(&app, "POST", "/session", Some(json!({ "task": task }))).await;
        assert_eq!(s, StatusCode::BAD_REQUEST, "{task}");
    }
    let (s, _) = call(
        &app,
        "POST",
        "/session",
        Some(json!({ "task": "From page_0 to page_1", "max_rounds": 0 })),
    )
    .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let id = create(&app, "From page_0 to page_1").await;
    let (s, _) = raw_call(&app, "POST", &format!("/session/{id}/step"), "{\"raw\": 1}").await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn unparseable_text_is_a_wasted_round() {
    let (app, _) = app();
    let (_, v) = call(
        &app,
        "POST",
        "/session",
        Some(json!({ "task": "From page_0 to page_1", "max_rounds": 2 })),
    )
    .await;
    let id = v["session_id"].as_str().unwrap().to_string();
    let (s, v) = step(&app, &id, "I would click somewhere").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["info"]["format_error"], true);
    assert_eq!(v["info"]["invalid"], true);
    assert_eq!(v["done"], false);
    let (_, v) = step(&app, &id, "still nothing").await;
    assert_eq!(v["done"], true);
    assert_eq!(v["a2b_reward"], 0);
    assert_eq!(
        v["observation"]["history"],
        json!([
            "step1: invalid action on page_0",
            "step2: invalid action on page_0"
        ])
    );
}

#[tokio::test]
async fn delete_removes_session() {
    let (app, state) = app();
    let id = create(&app, "From page_0 to page_1").await;
    assert_eq!(state.session_count(), 1);
    let (s, v) = call(&app, "DELETE", &format!("/session/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["deleted"], true);
    assert_eq!(state.session_count(), 0);
    let (s, _) = call(&app, "GET", &format!("/session/{id}"), None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn screens_are_served_as_png() {
    let env = env();
    let (app, _) = app();
    let req = Request::builder()
        .uri("/screens/page_2.png")
        .body(Body::empty())
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(resp.headers()["content-type"], "image/png");
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let img = ImageBuffer::from_png(&bytes).unwrap();
    assert_eq!(img, env.render(NodeId(2)).unwrap());

    let (_, v) = call(
        &app,
        "POST",
        "/session",
        Some(json!({ "task": "From page_2 to page_0", "inline_image": true })),
    )
    .await;
    let inline = base64::engine::general_purpose::STANDARD
        .decode(v["observation"]["image_base64"].as_str().unwrap())
        .unwrap();
    assert_eq!(inline, bytes.to_vec());
}

#[tokio::test]
async fn interleaved_sessions_stay_isolated() {
    let env = env();
    let (app, _) = app();
    let tasks = [
        (NodeId(0), NodeId(9)),
        (NodeId(9), NodeId(1)),
        (NodeId(4), NodeId(7)),
    ];
    let mut ids = Vec::new();
    let mut local = Vec::new();
    for &(a, b) in &tasks {
        ids.push(create(&app, &TaskSpec::new(a, b).unwrap().instruction()).await);
        local.push(
            EpisodeState::reset(&env, TaskSpec::new(a, b).unwrap(), EpisodeConfig::default())
                .unwrap()
                .0,
        );
    }
    for round in 0..6 {
        for (i, id) in ids.iter().enumerate() {
            if local[i].done {
                continue;
            }
            let st = &local[i];
            let raw = if st.current == st.task.goal {
                complete_text()
            } else if round == 1 {
                "Explain: miss.\tAction: click(start_box=<|box_start|>(999,999)<|box_end|>)"
                    .to_string()
            } else {
                click_toward(&env, st.current, st.task.goal)
            };
            let (s, v) = step(&app, id, &raw).await;
            assert_eq!(s, StatusCode::OK);
            let r = local[i].step(&env, &raw).unwrap();
            assert_eq!(v["observation"]["history"], json!(r.observation.history));
            assert_eq!(v["done"], r.done);
            assert_eq!(v["a2b_reward"], r.a2b_reward);
        }
    }
    assert!(local.iter().all(|s| s.success));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_sessions_complete_independently() {
    let env = env();
    let (app, state) = app();
    let nav = env.navigator();
    let all: Vec<_> = env.graph.ids().collect();
    let tasks: Vec<TaskSpec> = enumerate_tasks(&nav, &all)
        .into_iter()
        .map(|t| t.task)
        .take(40)
        .collect();
    let mut handles = Vec::new();
    for task in tasks.clone() {
        let app = app.clone();
        let env = env.clone();
        handles.push(tokio::spawn(async move {
            let id = create(&app, &task.instruction()).await;
            let mut at = task.start;
            while at != task.goal {
                let (s, _) = step(&app, &id, &click_toward(&env, at, task.goal)).await;
                assert_eq!(s, StatusCode::OK);
                at = env.navigator().next_hop(at, task.goal).unwrap().target;
                tokio::task::yield_now().await;
            }
            let (_, v) = step(&app, &id, &complete_text()).await;
            (
                v["done"].clone(),
                v["a2b_reward"].clone(),
                env.navigator().distance(task.start, task.goal),
                v,
            )
        }));
    }
    for h in handles {
        let (done, reward, dist, v) = h.await.unwrap();
        assert_eq!(done, true);
        assert_eq!(reward, 1);
        assert_eq!(v["observation"]["step_index"], dist + 1);
    }
    assert_eq!(state.session_count(), tasks.len());
}

#[tokio::test]
async fn transcripts_replay_identically_over_http() {
    let env = env();
    let (app, _) = app();
    let nav = env.navigator();
    let all: Vec<_> = env.graph.ids().collect();
    let tasks = enumerate_tasks(&nav, &all);
    let cfg = InteractiveConfig {
        n: 2,
        episode: EpisodeConfig::default().with_max_rounds(6),
        seed: 11,
    };
    let agent = RandomAgent::new(env.clone(), 3);
    let (_, records) = eval_interactive(&env, &nav, &tasks[..30], &agent, &cfg);
    let transcripts: Vec<Transcript> = records
        .iter()
        .map(|r| Transcript::from_record(r, &cfg.episode))
        .collect();
    assert!(transcripts.iter().any(|t| t.success));
    assert!(transcripts.iter().any(|t| !t.success));
    for t in &transcripts {
        assert_eq!(&replay(&env, t).unwrap(), t);
        let (s, v) = call(
            &app,
            "POST",
            "/session",
            Some(json!({ "task": t.task, "max_rounds": t.max_rounds, "allow_complete": t.allow_complete })),
        )
        .await;
        assert_eq!(s, StatusCode::OK);
        let id = v["session_id"].as_str().unwrap().to_string();
        let mut last = Value::Null;
        for a in &t.actions {
            let (s, v) = step(&app, &id, a).await;
            assert_eq!(s, StatusCode::OK);
            last = v;
        }
        assert_eq!(last["done"], true);
        assert_eq!(last["a2b_reward"], t.a2b_reward);
        assert_eq!(last["observation"]["history"], json!(t.history));
        let (_, summary) = call(&app, "GET", &format!("/session/{id}"), None).await;
        assert_eq!(summary["success"], t.success);
    }
}

#[tokio::test]
async fn disallowed_complete_ends_on_arrival() {
    let env = env();
    let (app, _) = app();
    let (_, v) = call(
        &app,
        "POST",
        "/session",
        Some(json!({ "task": "From page_0 to page_1", "allow_complete": false })),
    )
    .await;
    let id = v["session_id"].as_str().unwrap().to_string();
    let (_, v) = step(&app, &id, &complete_text()).await;
    assert_eq!(v["info"]["invalid"], true);
    assert_eq!(v["done"], false);
    let (_, v) = step(&app, &id, &click_toward(&env, NodeId(0), NodeId(1))).await;
    assert_eq!(v["done"], true);
    assert_eq!(v["a2b_reward"], 1);
}

fn keys(v: &Value) -> Vec<String> {
    let mut k: Vec<String> = v.as_object().unwrap().keys().cloned().collect();
    k.sort();
    k
}

#[tokio::test]
async fn wire_field_sets_are_pinned() {
    let (app, _) = app();
    let (_, v) = call(&app, "GET", "/version", None).await;
    assert_eq!(
        keys(&v),
        [
            "env_seed",
            "renderer_version",
            "schema_version",
            "screens",
            "variant",
            "version"
        ]
    );
    let (_, v) = call(
        &app,
        "POST",
        "/session",
        Some(json!({ "task": "From page_0 to page_1" })),
    )
    .await;
    assert_eq!(keys(&v), ["observation", "session_id", "version"]);
    assert_eq!(
        keys(&v["observation"]),
        ["history", "image_url", "instruction", "step_index"]
    );
    let id = v["session_id"].as_str().unwrap().to_string();
    let (_, v) = call(
        &app,
        "POST",
        &format!("/session/{id}/step"),
        Some(json!({ "raw_text": "x", "inline_image": true })),
    )
    .await;
    assert_eq!(
        keys(&v),
        ["a2b_reward", "done", "info", "observation", "version"]
    );
    assert_eq!(
        keys(&v["observation"]),
        [
            "history",
            "image_base64",
            "image_url",
            "instruction",
            "step_index"
        ]
    );
    assert_eq!(
        keys(&v["info"]),
        ["format_error", "invalid", "reached_target", "transitioned"]
    );
    let (_, v) = call(&app, "GET", &format!("/session/{id}"), None).await;
    assert_eq!(
        keys(&v),
        [
            "a2b_reward",
            "allow_complete",
            "done",
            "history",
            "max_rounds",
            "session_id",
            "step_index",
            "success",
            "task",
            "version"
        ]
    );
    let (_, v) = call(&app, "DELETE", &format!("/session/{id}"), None).await;
    assert_eq!(keys(&v), ["deleted", "session_id", "version"]);
    let (_, v) = call(&app, "DELETE", &format!("/session/{id}"), None).await;
    assert_eq!(keys(&v), ["error", "version"]);
    assert_eq!(keys(&v["error"]), ["code", "message"]);
}
