use std::collections::BTreeSet;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use caio_core::engine::{replay_store, Event, SessionSpec, StateView};
use caio_service::{router, AppState, ServiceConfig, API_SCHEMA};
use futures::StreamExt;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tokio_tungstenite::tungstenite::Message;
use tower::ServiceExt;

const GOLDEN: &str = "Nao, I am going to unplug you, I need to dry my hair";

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/data")
}

fn app() -> AppState {
    AppState::new(ServiceConfig {
        base_dir: data_dir(),
        default_spec: SessionSpec { init_facts: vec!["Ideal(nao, not unplugged, 0.8)".into()], ..SessionSpec::default() },
        static_dir: None,
    })
}

async fn call(app: &AppState, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let request = Request::builder().method(method).uri(uri);
    let request = match body {
        Some(b) => request.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => request.body(Body::empty()),
    }
    .unwrap();
    let response = router(app.clone()).oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

async fn create(app: &AppState, body: Value) -> String {
    let (status, v) = call(app, "POST", "/sessions", Some(body)).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    v["id"].as_str().unwrap().to_string()
}

async fn say(app: &AppState, id: &str, text: &str) -> Value {
    let (status, v) = call(app, "POST", &format!("/sessions/{id}/utterances"), Some(json!({ "text": text }))).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    v
}

async fn log(app: &AppState, id: &str, since: u64) -> Vec<Event> {
    let (status, v) = call(app, "GET", &format!("/sessions/{id}/log?since={since}"), None).await;
    assert_eq!(status, StatusCode::OK);
    serde_json::from_value(v).unwrap()
}

async fn listen(app: &AppState) -> SocketAddr {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let service = router(app.clone());
    tokio::spawn(async move { axum::serve(listener, service).await.unwrap() });
    addr
}

type Socket = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

async fn subscribe(addr: SocketAddr, id: &str, since: u64) -> Socket {
    let url = format!("ws://{addr}/sessions/{id}/events?since={since}");
    tokio_tungstenite::connect_async(url).await.unwrap().0
}

/// Read events until one has tick `until`.
async fn read_until(socket: &mut Socket, until: u64) -> Vec<Event> {
    let mut got = Vec::new();
    while got.last().is_none_or(|e: &Event| e.tick < until) {
        let msg = tokio::time::timeout(Duration::from_secs(10), socket.next()).await.expect("event in time");
        match msg.expect("stream open").unwrap() {
            Message::Text(t) => got.push(serde_json::from_str(&t).unwrap()),
            other => panic!("unexpected frame {other:?}"),
        }
    }
    got
}

#[tokio::test]
async fn create_with_defaults() {
    let app = app();
    let (status, v) = call(&app, "POST", "/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(v["self_agent"], "nao");
    assert_eq!(v["interlocutor"], "wafa");
    assert_eq!(v["scenario"], Value::Null);
    assert_eq!(v["tick"], 2);
    let (status, again) = call(&app, "GET", &format!("/sessions/{}", v["id"].as_str().unwrap()), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(again, v);
}

#[tokio::test]
async fn create_from_scenario_and_inline_spec() {
    let app = app();
    let (_, v) = call(&app, "POST", "/sessions", Some(json!({ "scenario": "scenarios/travel.json" }))).await;
    assert_eq!(v["scenario"], "scenarios/travel.json");
    let id = create(&app, json!({ "spec": { "agents": { "self": "pepper", "interlocutor": "ann" } } })).await;
    let (_, state) = call(&app, "GET", &format!("/sessions/{id}/state"), None).await;
    assert_eq!(state["self_agent"], "pepper");
    assert_eq!(state["interlocutor"], "ann");
}

#[tokio::test]
async fn bad_session_requests_are_rejected() {
    let app = app();
    for body in [
        json!({ "spec": { "catalog": "missing/catalog.json" } }),
        json!({ "scenario": "scenarios/none.json" }),
        json!({ "scenario": "scenarios/travel.json", "spec": {} }),
        json!({ "spec": { "init_facts": ["Bel(nao,"] } }),
    ] {
        let (status, v) = call(&app, "POST", "/sessions", Some(body.clone())).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
        assert_eq!(v["error"], "bad_config", "{body}");
        assert!(!v["message"].as_str().unwrap().is_empty());
    }
    let (status, v) = call(&app, "POST", "/sessions", Some(json!({ "colour": "red" }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], "bad_input");
    let (_, list) = call(&app, "GET", "/sessions", None).await;
    assert_eq!(list, json!([]));
}

#[tokio::test]
async fn session_ids_are_distinct() {
    let app = app();
    let mut ids = BTreeSet::new();
    for _ in 0..20 {
        ids.insert(create(&app, json!({})).await);
    }
    assert_eq!(ids.len(), 20);
    let (_, list) = call(&app, "GET", "/sessions", None).await;
    let listed: BTreeSet<String> = list.as_array().unwrap().iter().map(|d| d["id"].as_str().unwrap().to_string()).collect();
    assert_eq!(listed, ids);
}

#[tokio::test]
async fn unknown_sessions_are_not_found() {
    let app = app();
    let routes = [
        ("GET", "/sessions/nope", None),
        ("DELETE", "/sessions/nope", None),
        ("GET", "/sessions/nope/state", None),
        ("GET", "/sessions/nope/log", None),
        ("POST", "/sessions/nope/utterances", Some(json!({ "text": "hello" }))),
        ("POST", "/sessions/nope/stimuli", Some(json!({ "content": "rain" }))),
    ];
    for (method, uri, body) in routes {
        let (status, v) = call(&app, method, uri, body).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{method} {uri}");
        assert_eq!(v["error"], "not_found");
    }
    let addr = listen(&app).await;
    let err = tokio_tungstenite::connect_async(format!("ws://{addr}/sessions/nope/events")).await.unwrap_err();
    match err {
        tokio_tungstenite::tungstenite::Error::Http(r) => assert_eq!(r.status(), StatusCode::NOT_FOUND),
        other => panic!("{other:?}"),
    }
}

#[tokio::test]
async fn golden_utterance_streams_its_events() {
    let app = app();
    let addr = listen(&app).await;
    let id = create(&app, json!({ "scenario": "scenarios/nao_unplugged.json" })).await;
    let mut socket = subscribe(addr, &id, 0).await;
    let initial = read_until(&mut socket, 2).await;
    assert_eq!(initial.len(), 1);
    assert_eq!(initial[0].kind.as_str(), "facts_asserted");

    let accepted = say(&app, &id, GOLDEN).await;
    assert_eq!(accepted["accepted"], true);
    assert_eq!(accepted["tick"], 3);
    let last = accepted["last_tick"].as_u64().unwrap();
    let streamed = read_until(&mut socket, last).await;
    assert_eq!(streamed.len() as u64, accepted["events"].as_u64().unwrap());
    assert_eq!(streamed, log(&app, &id, 2).await);

    let kinds: Vec<&str> = streamed.iter().map(|e| e.kind.as_str()).collect();
    let pos = |k: &str| kinds.iter().position(|x| *x == k).unwrap_or_else(|| panic!("no {k}"));
    assert!(pos("act_received") < pos("emotion_triggered"));
    assert!(pos("emotion_triggered") < pos("intention_adopted"));
    assert!(pos("plan_found") < pos("action_executed"));
    assert!(pos("action_executed") < pos("utterance_out"));
    let out = streamed.iter().find(|e| e.kind.as_str() == "utterance_out").unwrap();
    assert_eq!(out.payload["act"], "reproach");
    assert_eq!(out.payload["surface_text"], "Wafa, I do not approve of this: unplugged.");
}

#[tokio::test]
async fn subscribers_see_the_same_stream() {
    let app = app();
    let addr = listen(&app).await;
    let id = create(&app, json!({ "scenario": "scenarios/household.json" })).await;
    let mut a = subscribe(addr, &id, 0).await;
    let mut b = subscribe(addr, &id, 0).await;
    let mut last = 0;
    for text in ["Could you fetch the ball?", "zzz", "I have tidied"] {
        last = say(&app, &id, text).await["last_tick"].as_u64().unwrap();
    }
    let from_a = read_until(&mut a, last).await;
    let from_b = read_until(&mut b, last).await;
    assert_eq!(from_a, from_b);
    assert_eq!(from_a, log(&app, &id, 0).await);
    assert!(from_a.windows(2).all(|w| w[0].tick < w[1].tick));
}

#[tokio::test]
async fn reconnecting_resumes_without_duplicates() {
    let app = app();
    let addr = listen(&app).await;
    let id = create(&app, json!({ "scenario": "scenarios/household.json" })).await;
    let mut socket = subscribe(addr, &id, 0).await;
    let first = say(&app, &id, "Could you fetch the ball?").await["last_tick"].as_u64().unwrap();
    let mut seen = read_until(&mut socket, first).await;
    socket.close(None).await.unwrap();

    // missed while disconnected
    let second = say(&app, &id, "zzz").await["last_tick"].as_u64().unwrap();
    let mut socket = subscribe(addr, &id, first).await;
    seen.extend(read_until(&mut socket, second).await);
    let third = say(&app, &id, "I have tidied").await["last_tick"].as_u64().unwrap();
    seen.extend(read_until(&mut socket, third).await);

    assert_eq!(seen, log(&app, &id, 0).await);
}

#[tokio::test]
async fn state_after_golden_utterance() {
    let app = app();
    let id = create(&app, json!({ "scenario": "scenarios/nao_unplugged.json" })).await;
    say(&app, &id, GOLDEN).await;
    let (status, state) = call(&app, "GET", &format!("/sessions/{id}/state"), None).await;
    assert_eq!(status, StatusCode::OK);
    let emotions = state["emotions"].as_array().unwrap();
    assert_eq!(emotions.len(), 1);
    assert_eq!(emotions[0]["category"], "reproach");
    assert_eq!(emotions[0]["target"], "wafa");
    assert_eq!(emotions[0]["intensity"], 0.8);
    assert_eq!(emotions[0]["expressed"], true);
    let beliefs: Vec<&str> = state["beliefs"].as_array().unwrap().iter().map(|f| f["formula"].as_str().unwrap()).collect();
    assert!(beliefs.contains(&"Bel(nao, unplugged)"));
    assert_eq!(state["responsibilities"][0]["formula"], "Bel(nao, Resp(wafa, unplugged))");
}

#[tokio::test]
async fn fresh_state_holds_initial_facts_only() {
    let app = app();
    let id = create(&app, json!({})).await;
    let (_, state) = call(&app, "GET", &format!("/sessions/{id}/state"), None).await;
    assert_eq!(state["tick"], 2);
    assert_eq!(state["ideals"][0]["formula"], "Ideal(nao, not unplugged, 0.8)");
    for list in ["beliefs", "goals", "responsibilities", "other_facts", "emotions", "intentions", "obligations"] {
        assert_eq!(state[list], json!([]), "{list}");
    }
    assert_eq!(state["plan"], Value::Null);
    assert_eq!(state["last_sec"], Value::Null);
}

#[tokio::test]
async fn deleted_sessions_are_gone() {
    let app = app();
    let addr = listen(&app).await;
    let id = create(&app, json!({})).await;
    let mut socket = subscribe(addr, &id, 0).await;
    read_until(&mut socket, 2).await;
    let (status, body) = call(&app, "DELETE", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    assert_eq!(body, Value::Null);
    let ended = tokio::time::timeout(Duration::from_secs(10), socket.next()).await.expect("stream ends");
    assert!(matches!(ended, None | Some(Ok(Message::Close(_))) | Some(Err(_))), "{ended:?}");
    for (method, uri) in [("GET", format!("/sessions/{id}/state")), ("DELETE", format!("/sessions/{id}"))] {
        assert_eq!(call(&app, method, &uri, None).await.0, StatusCode::NOT_FOUND);
    }
    let (status, _) = call(&app, "POST", &format!("/sessions/{id}/utterances"), Some(json!({ "text": "hi" }))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn state_matches_replayed_log() {
    let app = app();
    let id = create(&app, json!({ "scenario": "scenarios/household.json" })).await;
    for text in ["Could you fetch the ball?", "zzz", "I have tidied"] {
        say(&app, &id, text).await;
    }
    let (_, state) = call(&app, "GET", &format!("/sessions/{id}/state"), None).await;
    let state: StateView = serde_json::from_value(state).unwrap();
    let replayed = replay_store(&log(&app, &id, 0).await).unwrap();
    let mut from_log: Vec<String> = replayed.fact_formulas().iter().map(ToString::to_string).collect();
    let mut from_state: Vec<String> = [&state.beliefs, &state.goals, &state.ideals, &state.responsibilities, &state.other_facts]
        .into_iter()
        .flatten()
        .map(|f| f.formula.clone())
        .collect();
    from_log.sort();
    from_state.sort();
    assert_eq!(from_state, from_log);
    let mut emotions: Vec<(u64, bool)> = state.emotions.iter().map(|e| (e.id, e.expressed)).collect();
    emotions.sort();
    let replayed_emotions: Vec<(u64, bool)> = replayed.emotions().iter().map(|r| (r.tick, r.expressed)).collect();
    assert_eq!(emotions, replayed_emotions);
}

#[tokio::test]
async fn empty_and_unknown_utterances_ask_for_clarification() {
    let app = app();
    let id = create(&app, json!({})).await;
    for text in ["", "zzz"] {
        let since = say(&app, &id, text).await["tick"].as_u64().unwrap() - 1;
        let events = log(&app, &id, since).await;
        assert_eq!(events[0].payload["unrecognized"], true, "{text:?}");
        let out = events.iter().find(|e| e.kind.as_str() == "utterance_out").unwrap();
        assert_eq!(out.payload["act"], "ask-ref");
    }
}

#[tokio::test]
async fn stimuli_are_perceived() {
    let app = app();
    let id = create(&app, json!({})).await;
    let (status, v) =
        call(&app, "POST", &format!("/sessions/{id}/stimuli"), Some(json!({ "content": "unplugged", "responsible": "wafa" })))
            .await;
    assert_eq!(status, StatusCode::OK, "{v}");
    let (_, state) = call(&app, "GET", &format!("/sessions/{id}/state"), None).await;
    assert_eq!(state["emotions"][0]["category"], "reproach");
    let (status, v) = call(&app, "POST", &format!("/sessions/{id}/stimuli"), Some(json!({ "content": "Bel(" }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], "bad_input");
}

#[tokio::test]
async fn inputs_to_one_session_never_interleave() {
    let app = app();
    let id = create(&app, json!({ "scenario": "scenarios/household.json" })).await;
    let texts = ["Could you fetch the ball?", "zzz", "I have tidied", "Is the ball fetched?", "hello"];
    let mut tasks = Vec::new();
    for text in texts {
        let (app, id) = (app.clone(), id.clone());
        tasks.push(tokio::spawn(async move { say(&app, &id, text).await }));
    }
    let mut ranges = Vec::new();
    for t in tasks {
        let v = t.await.unwrap();
        ranges.push((v["tick"].as_u64().unwrap(), v["last_tick"].as_u64().unwrap()));
    }
    ranges.sort();
    assert!(ranges.windows(2).all(|w| w[0].1 < w[1].0), "{ranges:?}");
    let events = log(&app, &id, 0).await;
    let received = events.iter().filter(|e| e.kind.as_str() == "act_received" && e.payload["text"].is_string()).count();
    assert_eq!(received, texts.len());
}

#[tokio::test]
async fn sessions_are_independent() {
    let app = app();
    let mut tasks = Vec::new();
    for _ in 0..6 {
        let app = app.clone();
        tasks.push(tokio::spawn(async move {
            let id = create(&app, json!({ "scenario": "scenarios/household.json" })).await;
            for text in ["Could you fetch the ball?", "zzz", "I have tidied"] {
                say(&app, &id, text).await;
            }
            serde_json::to_string(&log(&app, &id, 0).await).unwrap()
        }));
    }
    let mut logs = BTreeSet::new();
    for t in tasks {
        logs.insert(t.await.unwrap());
    }
    assert_eq!(logs.len(), 1);
}

fn keys(v: &Value) -> BTreeSet<String> {
    v.as_object().unwrap().keys().cloned().collect()
}

#[tokio::test]
async fn wire_format_matches_the_schema() {
    let schema: Value = serde_json::from_str(API_SCHEMA).unwrap();
    let app = app();
    let (_, served) = call(&app, "GET", "/api/schema", None).await;
    assert_eq!(served, schema);

    let types = &schema["types"];
    let (_, descriptor) = call(&app, "POST", "/sessions", Some(json!({ "scenario": "scenarios/household.json" }))).await;
    assert_eq!(keys(&descriptor), keys(&types["SessionDescriptor"]));
    let id = descriptor["id"].as_str().unwrap();
    let accepted = say(&app, id, "Could you fetch the ball?").await;
    assert_eq!(keys(&accepted), keys(&types["Accepted"]));
    let (_, err) = call(&app, "GET", "/sessions/nope", None).await;
    assert_eq!(keys(&err), keys(&types["Error"]));

    let (_, state) = call(&app, "GET", &format!("/sessions/{id}/state"), None).await;
    assert_eq!(keys(&state), keys(&types["StateView"]));
    for (list, ty) in [("goals", "FactView"), ("intentions", "IntentionView"), ("obligations", "Obligation")] {
        for item in state[list].as_array().unwrap() {
            assert_eq!(keys(item), keys(&types[ty]), "{list}");
        }
    }
    assert_eq!(keys(&state["last_sec"]), keys(&types["SecProfile"]));
    let (_, travel) = call(&app, "POST", "/sessions", Some(json!({ "scenario": "scenarios/travel.json" }))).await;
    let travel_id = travel["id"].as_str().unwrap();
    let (_, travel_state) = call(&app, "GET", &format!("/sessions/{travel_id}/state"), None).await;
    assert_eq!(keys(&travel_state["commitment"]), keys(&types["Commitment"]));
    say(&app, id, "I have tidied").await;
    let (_, state) = call(&app, "GET", &format!("/sessions/{id}/state"), None).await;
    assert_eq!(keys(&state["emotions"][0]), keys(&types["EmotionView"]));

    let kinds: Vec<&str> = schema["enums"]["EventKind"].as_array().unwrap().iter().map(|k| k.as_str().unwrap()).collect();
    for e in log(&app, id, 0).await {
        let raw = serde_json::to_value(&e).unwrap();
        assert_eq!(keys(&raw), keys(&types["Event"]));
        assert!(kinds.contains(&e.kind.as_str()));
        let allowed: BTreeSet<String> = schema["payloads"][e.kind.as_str()]
            .as_array()
            .unwrap()
            .iter()
            .map(|k| k.as_str().unwrap().to_string())
            .collect();
        assert!(keys(&e.payload).is_subset(&allowed), "{} {:?}", e.kind, keys(&e.payload));
    }
}

#[tokio::test]
async fn static_console_is_served() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<title>console</title>").unwrap();
    let app = AppState::new(ServiceConfig { static_dir: Some(dir.path().to_path_buf()), ..ServiceConfig::default() });
    let response: axum::response::Response =
        Router::oneshot(router(app), Request::get("/").body(Body::empty()).unwrap()).await.unwrap();
    assert_eq!(response.status(), StatusCode::OK);
    let body = response.into_body().collect().await.unwrap().to_bytes();
    assert_eq!(&body[..], b"<title>console</title>");
}
