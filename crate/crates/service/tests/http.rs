use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use lfsearch_api::*;
use lfsearch_service::{app, AppState, Settings};
use serde_json::Value;
use tower::ServiceExt;

fn fixture() -> CreateSession {
    let rows = [
        ["2001", "Hungary", "2nd", "400m"],
        ["2003", "Finland", "1st", "400m"],
        ["2005", "Germany", "11th", "400m"],
        ["2007", "Thailand", "1st", "Relay"],
    ];
    CreateSession {
        table: TableInput {
            columns: ["Year", "Venue", "Position", "Event"].map(String::from).to_vec(),
            rows: rows.iter().map(|r| r.map(String::from).to_vec()).collect(),
        },
        question: "Where did the last 1st place finish occur?".into(),
        answer: vec!["Thailand".into()],
        config: SessionConfig { s_max: Some(5), k: Some(30), ..Default::default() },
    }
}

async fn call(router: &axum::Router, method: &str, uri: &str, body: Option<Value>, key: Option<&str>) -> (StatusCode, String, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(k) = key {
        req = req.header(IDEMPOTENCY_HEADER, k);
    }
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())).unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = router.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let ctype = resp.headers().get("content-type").map(|v| v.to_str().unwrap().to_string()).unwrap_or_default();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    (status, ctype, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn ready(router: &axum::Router, id: &str) -> Value {
    for _ in 0..2000 {
        let (_, _, v) = call(router, "GET", &format!("/sessions/{id}"), None, None).await;
        if v["state"] != "searching" {
            return v;
        }
        tokio::time::sleep(std::time::Duration::from_millis(25)).await;
    }
    panic!("search did not finish");
}

fn router(dir: Option<std::path::PathBuf>) -> axum::Router {
    app(AppState::new(dir, Settings::default()), None)
}

#[tokio::test(flavor = "multi_thread")]
async fn full_session() {
    let r = router(None);
    let (status, _, created) = call(&r, "POST", "/sessions", Some(serde_json::to_value(fixture()).unwrap()), Some("k1")).await;
    assert_eq!(status, StatusCode::CREATED);
    let id = created["id"].as_str().unwrap().to_string();

    let (status, _, again) = call(&r, "POST", "/sessions", Some(serde_json::to_value(fixture()).unwrap()), Some("k1")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(again["id"], created["id"]);

    let view = ready(&r, &id).await;
    assert_eq!(view["state"], "awaiting-annotation");
    assert!(view["stats"]["consistent_forms"].as_u64().unwrap() > 0);

    let (status, _, _) = call(&r, "POST", &format!("/sessions/{id}/annotations"), Some(serde_json::json!({"world_id": 0, "answer": ["x"]})), None).await;
    assert_eq!(status, StatusCode::CONFLICT);

    let mut rounds = 0;
    loop {
        let (status, _, next) = call(&r, "GET", &format!("/sessions/{id}/next-world"), None, None).await;
        assert_eq!(status, StatusCode::OK);
        if next["done"] == true {
            break;
        }
        let world = &next["world"];
        let wid = world["world_id"].as_u64().unwrap();
        let (status, ctype, _) = call(&r, "POST", &format!("/sessions/{id}/annotations"), Some(serde_json::json!({"world_id": wid, "answer": [""]})), None).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
        assert_eq!(ctype, "application/problem+json");
        // Answer as the intended reading would: the venue of the last 1st place.
        let rows = world["rows"].as_array().unwrap();
        let answer = rows
            .iter()
            .rev()
            .find(|row| row[2] == "1st")
            .map(|row| row[1].as_str().unwrap().to_string());
        let answer = answer.unwrap_or_else(|| "none".into());
        let (status, _, _) = call(&r, "POST", &format!("/sessions/{id}/annotations"), Some(serde_json::json!({"world_id": wid, "answer": [answer]})), None).await;
        assert_eq!(status, StatusCode::OK);
        rounds += 1;
        assert!(rounds <= 30);
    }
    let (status, _, result) = call(&r, "GET", &format!("/sessions/{id}/result"), None, None).await;
    assert_eq!(status, StatusCode::OK);
    let forms: Vec<&str> = result["classes"].as_array().unwrap().iter().flat_map(|c| c["forms"].as_array().unwrap()).map(|f| f.as_str().unwrap()).collect();
    let answer = lfsearch_core::fixtures::z_answer().canonical_string();
    assert!(forms.contains(&answer.as_str()), "{forms:?}");
    let (status, _, all) = call(&r, "GET", &format!("/sessions/{id}/classes"), None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(all["classes"].as_array().unwrap().len() >= result["classes"].as_array().unwrap().len());
}

#[tokio::test(flavor = "multi_thread")]
async fn bad_requests() {
    let r = router(None);
    let mut bad = fixture();
    bad.table.rows[1].pop();
    let (status, ctype, body) = call(&r, "POST", "/sessions", Some(serde_json::to_value(bad).unwrap()), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(ctype, "application/problem+json");
    assert_eq!(body["status"], 400);
    let mut empty = fixture();
    empty.answer.clear();
    let (status, _, _) = call(&r, "POST", "/sessions", Some(serde_json::to_value(empty).unwrap()), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, ctype, _) = call(&r, "GET", "/sessions/nope", None, None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(ctype, "application/problem+json");
}

#[tokio::test(flavor = "multi_thread")]
async fn searching_is_a_conflict_and_batch_mode_serves_worlds() {
    let r = router(None);
    let mut req = fixture();
    req.config.s_max = Some(6);
    let (_, _, created) = call(&r, "POST", "/sessions", Some(serde_json::to_value(req).unwrap()), None).await;
    let id = created["id"].as_str().unwrap().to_string();
    let (status, _, _) = call(&r, "GET", &format!("/sessions/{id}/result"), None, None).await;
    assert_eq!(status, StatusCode::CONFLICT, "search finished before the first poll");
    ready(&r, &id).await;
    let (status, _, next) = call(&r, "GET", &format!("/sessions/{id}/next-world?mode=batch"), None, None).await;
    assert_eq!(status, StatusCode::OK);
    let worlds = next["worlds"].as_array().unwrap();
    assert_eq!(worlds.len(), 5);
    assert!(next["objective"].as_f64().is_some());
    let wid = worlds[0]["world_id"].as_u64().unwrap();
    let (status, _, _) = call(&r, "POST", &format!("/sessions/{id}/annotations"), Some(serde_json::json!({"world_id": wid, "answer": ["a"]})), None).await;
    assert_eq!(status, StatusCode::OK);
    // Last write wins.
    let (_, _, v) = call(&r, "POST", &format!("/sessions/{id}/annotations"), Some(serde_json::json!({"world_id": wid, "answer": ["b"]})), None).await;
    assert_eq!(v["annotations"].as_array().unwrap().len(), 1);
    assert_eq!(v["annotations"][0]["answer"][0], "b");
}

#[tokio::test(flavor = "multi_thread")]
async fn sessions_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let r = router(Some(dir.path().to_path_buf()));
    let (_, _, created) = call(&r, "POST", "/sessions", Some(serde_json::to_value(fixture()).unwrap()), Some("again")).await;
    let id = created["id"].as_str().unwrap().to_string();
    let before = ready(&r, &id).await;
    let (_, _, next) = call(&r, "GET", &format!("/sessions/{id}/next-world"), None, None).await;
    let wid = next["world"]["world_id"].as_u64().unwrap();
    call(&r, "POST", &format!("/sessions/{id}/annotations"), Some(serde_json::json!({"world_id": wid, "answer": ["Thailand"]})), None).await;
    drop(r);

    let state: Arc<AppState> = AppState::new(Some(dir.path().to_path_buf()), Settings::default());
    let r = app(state, None);
    let (status, _, after) = call(&r, "GET", &format!("/sessions/{id}"), None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(after["progress"]["annotations"], 1);
    assert_eq!(after["stats"], before["stats"]);
    let (status, _, same) = call(&r, "POST", "/sessions", Some(serde_json::to_value(fixture()).unwrap()), Some("again")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(same["id"], id.as_str());
}

#[tokio::test]
async fn ui_is_served_from_a_directory() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<p>ui</p>").unwrap();
    let r = app(AppState::new(None, Settings::default()), Some(dir.path()));
    let resp = r.oneshot(Request::builder().uri("/ui/index.html").body(Body::empty()).unwrap()).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
}
