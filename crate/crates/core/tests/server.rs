mod common;

use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use famex::server::{router, AppState, ServerConfig};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

fn app() -> Router {
    router(AppState::new(ServerConfig::default()))
}

async fn call(app: &Router, method: &str, uri: &str, body: Vec<u8>) -> (StatusCode, String) {
    let req = Request::builder().method(method).uri(uri).body(Body::from(body)).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

fn csv(name: &str) -> Vec<u8> {
    std::fs::read(common::data_path(name)).unwrap()
}

async fn upload(app: &Router, file: &str, name: &str) -> Value {
    let (status, body) = call(app, "POST", &format!("/api/datasets?name={name}"), csv(file)).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    serde_json::from_str(&body).unwrap()
}

fn cli(args: &[&str]) -> String {
    let mut argv = vec!["famex"];
    argv.extend_from_slice(args);
    let mut out = Vec::new();
    assert_eq!(famex::cli::run(argv, &mut out, &mut Vec::new()), 0);
    String::from_utf8(out).unwrap()
}

#[tokio::test]
async fn health() {
    let (status, body) = call(&app(), "GET", "/api/health", vec![]).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, "ok");
}

#[tokio::test]
async fn upload_summarizes_dataset() {
    let app = app();
    let v = upload(&app, "wisconsin.csv", "wisconsin").await;
    assert_eq!(v["features"].as_array().unwrap().len(), 9);
    assert_eq!(v["rows"], 683);
    assert_eq!(v["dropped_rows"], 16);
    let counts: u64 = v["classes"].as_array().unwrap().iter().map(|c| c["count"].as_u64().unwrap()).sum();
    assert_eq!(counts, 683);
    let id = v["id"].as_str().unwrap();
    assert_eq!(id.len(), 32);
    // same bytes, same id
    assert_eq!(upload(&app, "wisconsin.csv", "wisconsin").await["id"], id);
    let (status, body) = call(&app, "GET", &format!("/api/datasets/{id}"), vec![]).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(serde_json::from_str::<Value>(&body).unwrap(), v);
}

#[tokio::test]
async fn bad_requests() {
    let app = app();
    let (s, body) = call(&app, "POST", "/api/datasets", vec![]).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert!(serde_json::from_str::<Value>(&body).unwrap()["error"].is_string());
    let (s, _) = call(&app, "POST", "/api/datasets?class_col=Nope", csv("pima.csv")).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = call(&app, "POST", "/api/datasets", b"a,b\n1,x\n".to_vec()).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = call(&app, "GET", "/api/datasets/ffff/scores", vec![]).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = call(&app, "GET", "/api/jobs/ffff", vec![]).await;
    assert_eq!(s, StatusCode::NOT_FOUND);

    let id = upload(&app, "pima.csv", "pima").await["id"].as_str().unwrap().to_string();
    for q in ["bins=0", "bins=x", "thresholds=0.9,0.1", "corr_decimals=two", "colour=red"] {
        let (s, _) = call(&app, "GET", &format!("/api/datasets/{id}/scores?{q}"), vec![]).await;
        assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY, "{q}");
    }
    for body in [r#"{"methods":["lime"]}"#, r#"{"folds":1}"#, r#"{"colour":1}"#, "not json"] {
        let (s, _) = call(&app, "POST", &format!("/api/datasets/{id}/evaluate"), body.into()).await;
        assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
    }
}

#[tokio::test]
async fn oversized_upload_is_rejected() {
    let app = router(AppState::new(ServerConfig {
        max_upload_bytes: 1024,
        ..ServerConfig::default()
    }));
    let (s, _) = call(&app, "POST", "/api/datasets", csv("pima.csv")).await;
    assert_eq!(s, StatusCode::PAYLOAD_TOO_LARGE);
}

#[tokio::test]
async fn scores_and_graph_match_the_cli() {
    let app = app();
    let id = upload(&app, "winequality-red.csv", "winequality-red").await["id"].as_str().unwrap().to_string();
    let uri = format!("/api/datasets/{id}/scores");
    let (s, first) = call(&app, "GET", &uri, vec![]).await;
    assert_eq!(s, StatusCode::OK);
    let (_, second) = call(&app, "GET", &uri, vec![]).await;
    assert_eq!(first, second);
    let path = common::data_path("winequality-red.csv");
    assert_eq!(first, cli(&["score", path.to_str().unwrap(), "--format", "json"]));

    let (s, graph) = call(&app, "GET", &format!("/api/datasets/{id}/graph"), vec![]).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(graph, cli(&["graph", path.to_str().unwrap(), "--format", "json"]));
    let g: Value = serde_json::from_str(&graph).unwrap();
    let vertices = g["features"].as_array().unwrap();
    assert_eq!(vertices.len(), 11);
    assert_eq!(vertices.iter().filter(|v| v["grade"] == 1).count(), 5);

    let (_, raw) = call(&app, "GET", &format!("{uri}?corr_decimals=none&bins=5"), vec![]).await;
    assert_eq!(
        raw,
        cli(&["score", path.to_str().unwrap(), "--format", "json", "--corr-decimals", "none", "--bins", "5"])
    );
}

#[tokio::test]
async fn evaluate_waits_and_matches_cli() {
    let app = app();
    let id = upload(&app, "pima.csv", "pima").await["id"].as_str().unwrap().to_string();
    let body = r#"{"classifiers":["naive_bayes","decision_tree"],"iters":2}"#;
    let (s, report) = call(&app, "POST", &format!("/api/datasets/{id}/evaluate?wait=true"), body.into()).await;
    assert_eq!(s, StatusCode::OK, "{report}");
    let path = common::data_path("pima.csv");
    let want = cli(&["evaluate", path.to_str().unwrap(), "--classifiers", "nb,dt", "--iters", "2", "--format", "json"]);
    assert_eq!(report, want);
}

#[tokio::test]
async fn jobs_report_progress_then_result() {
    let app = app();
    let id = upload(&app, "wisconsin.csv", "wisconsin").await["id"].as_str().unwrap().to_string();
    let body = r#"{"classifiers":["naive_bayes"],"iters":1,"methods":["famex","pfi"]}"#;
    let (s, started) = call(&app, "POST", &format!("/api/datasets/{id}/evaluate"), body.into()).await;
    assert_eq!(s, StatusCode::ACCEPTED, "{started}");
    let started: Value = serde_json::from_str(&started).unwrap();
    let status_url = started["status_url"].as_str().unwrap().to_string();
    let job: Value = loop {
        let (s, body) = call(&app, "GET", &status_url, vec![]).await;
        assert_eq!(s, StatusCode::OK);
        let v: Value = serde_json::from_str(&body).unwrap();
        if v["status"] != "running" && v["status"] != "queued" {
            break v;
        }
        let (s, _) = call(&app, "GET", &format!("{status_url}/report"), vec![]).await;
        assert!(s == StatusCode::CONFLICT || s == StatusCode::OK);
        tokio::time::sleep(Duration::from_millis(20)).await;
    };
    assert_eq!(job["status"], "done", "{job}");
    assert_eq!(job["progress"]["completed"], job["progress"]["total"]);
    let (s, report) = call(&app, "GET", &format!("{status_url}/report"), vec![]).await;
    assert_eq!(s, StatusCode::OK);
    let r = famex::harness::EvaluationReport::from_json(&report).unwrap();
    assert_eq!(r.cells.len(), 4);
    assert_eq!(serde_json::to_value(&r).unwrap(), job["report"]);
}

#[tokio::test]
async fn idle_sessions_expire() {
    let app = router(AppState::new(ServerConfig {
        idle_ttl: Duration::from_millis(50),
        ..ServerConfig::default()
    }));
    let id = upload(&app, "pima.csv", "pima").await["id"].as_str().unwrap().to_string();
    let (s, _) = call(&app, "GET", &format!("/api/datasets/{id}"), vec![]).await;
    assert_eq!(s, StatusCode::OK);
    tokio::time::sleep(Duration::from_millis(120)).await;
    let (s, _) = call(&app, "GET", &format!("/api/datasets/{id}"), vec![]).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}
