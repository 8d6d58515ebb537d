use std::fs;
use std::path::Path;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use needdesk_core::defaults;
use needdesk_core::sources::SourcePolicy;
use needdesk_core::taxonomy::Granularity;
use needdesk_core::workflow::automation::Automation;
use needdesk_core::workflow::store::CaseStore;
use needdesk_core::workflow::WorkflowPolicy;
use needdesk_service::{bind, router, AppState, Reference, ServiceError};
use serde_json::{json, Value};
use tower::ServiceExt;

fn demo(name: &str) -> String {
    fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/demo").join(name)).unwrap()
}

fn app(dir: &Path) -> Router {
    let taxonomy = defaults::taxonomy().unwrap();
    let teams = defaults::teams().unwrap();
    let reference = Reference {
        tie_order: defaults::tie_order(&teams).unwrap(),
        policy: WorkflowPolicy::default(),
        taxonomy: taxonomy.clone(),
        teams: teams.clone(),
    };
    let automation = Automation {
        lexicon: defaults::lexicon().unwrap(),
        filter: defaults::filter(Granularity::Fine, &taxonomy).unwrap(),
        table: defaults::table(&teams, &taxonomy).unwrap(),
        articles: defaults::articles().unwrap(),
        responses: Vec::new(),
        source_policy: SourcePolicy::default(),
    };
    let store = CaseStore::open(dir, &reference.context()).unwrap();
    router(AppState::new(reference, store, automation))
}

async fn call(app: &Router, method: &str, uri: &str, actor: Option<&str>, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(a) = actor {
        req = req.header("X-Actor", a);
    }
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (status, value)
}

async fn ingest_demo(app: &Router) -> Value {
    let (status, body) = call(
        app,
        "POST",
        "/admin/ingest",
        None,
        Some(json!({
            "format": "json-lines",
            "store": "google_play",
            "mapping": demo("google_play.toml"),
            "data": demo("google_play.jsonl"),
        })),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    body
}

const GP1: &str = "google_play:com.example.navigator:gp-001#1";

fn case_uri(id: &str) -> String {
    format!("/cases/{}", id.replace('#', "%23"))
}

#[tokio::test]
async fn empty_store_has_empty_queue_and_no_data_reports() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (status, page) = call(&app, "GET", "/cases", None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(page["total"], 0);
    assert_eq!(page["cases"], json!([]));
    let (_, report) = call(&app, "GET", "/reports/addressability", None, None).await;
    assert_eq!(report["display"], "no data");
    let (_, agreement) = call(&app, "GET", "/reports/agreement", None, None).await;
    assert_eq!(agreement["filter"]["kappa"], Value::Null);
    let (status, _) = call(&app, "GET", &case_uri("nope"), None, None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn ingest_opens_cases_and_filters_work() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let body = ingest_demo(&app).await;
    assert_eq!(body["import"]["accepted"], 35);
    assert_eq!(body["import"]["rejected"].as_array().unwrap().len(), 1);
    assert_eq!(body["cases"]["created"].as_array().unwrap().len(), 35);
    // Ingesting again opens nothing new.
    let again = ingest_demo(&app).await;
    assert_eq!(again["cases"]["existing"].as_array().unwrap().len(), 35);

    let (_, page) = call(&app, "GET", "/cases?state=AutoDetected&per_page=10&page=2", None, None).await;
    assert_eq!(page["total"], 35);
    assert_eq!(page["cases"].as_array().unwrap().len(), 10);
    let (_, apple) = call(&app, "GET", "/cases?store=apple_app_store", None, None).await;
    assert_eq!(apple["total"], 0);
    let (status, _) = call(&app, "GET", "/cases?state=Bogus", None, None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (_, detail) = call(&app, "GET", &case_uri(GP1), None, None).await;
    assert_eq!(detail["case"]["state"], "AutoDetected");
    assert_eq!(detail["legal_actions"], json!(["confirm_need", "reject_need"]));
}

#[tokio::test]
async fn happy_path_over_http_then_reports_and_restart() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    ingest_demo(&app).await;
    let uri = format!("{}/decision", case_uri(GP1));
    let steps = [
        json!({"version": 1, "action": "confirm_need", "payload": {"kind": "explicit"}}),
        json!({"version": 3, "action": "confirm_category", "payload": {"category": "Operation"}}),
        json!({"version": 5, "action": "confirm_team", "payload": {"team": "Mobile"}}),
        json!({"version": 7, "action": "draft_response", "payload": {"text": "Open Settings, then Voice guidance.", "status": null}}),
    ];
    let mut last = Value::Null;
    for step in steps {
        let (status, body) = call(&app, "POST", &uri, Some("alice"), Some(step)).await;
        assert_eq!(status, StatusCode::OK, "{body}");
        last = body;
    }
    assert_eq!(last["case"]["state"], "Answered");
    assert_eq!(last["case"]["version"], 8);
    assert_eq!(last["legal_actions"], json!([]));
    let audit = last["case"]["audit"].as_array().unwrap();
    let humans = audit.iter().filter(|e| e["actor"] != "system").count();
    assert_eq!((humans, audit.len() - humans), (4, 4));

    let (_, report) = call(&app, "GET", "/reports/addressability", None, None).await;
    assert_eq!(report["display"], "1 (100%)");
    let (_, stats) = call(&app, "GET", "/reports/stats", None, None).await;
    assert_eq!(stats["by_state"]["Answered"], 1);
    assert_eq!(stats["team_hits"]["cases"], 1);
    let (_, agreement) = call(&app, "GET", "/reports/agreement", None, None).await;
    assert_eq!(agreement["filter"]["items"], 1);

    let (status, table) = call(&app, "POST", "/admin/derive-table", None, Some(json!({}))).await;
    assert_eq!(status, StatusCode::OK, "{table}");
    let row = table["rows"].as_array().unwrap().iter().find(|r| r["category"] == "Operation").unwrap();
    assert_eq!(row["teams"], json!([{"rank": 1, "team": "Mobile", "votes": 1, "total": 1, "percent": 100}]));
    let (status, _) = call(&app, "POST", "/admin/derive-table", None, Some(json!({"threshold": "7/4"}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    drop(app);
    let reopened = self::app(dir.path());
    let (_, detail) = call(&reopened, "GET", &case_uri(GP1), None, None).await;
    assert_eq!(detail["case"], last["case"]);
}

#[tokio::test]
async fn stale_illegal_and_anonymous_decisions_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    ingest_demo(&app).await;
    let uri = format!("{}/decision", case_uri(GP1));
    let confirm = json!({"version": 0, "action": "confirm_need", "payload": {"kind": "explicit"}});
    let (status, body) = call(&app, "POST", &uri, Some("alice"), Some(confirm.clone())).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "conflict");
    assert_eq!(body["current_version"], 1);

    let (status, body) = call(&app, "POST", &uri, None, Some(confirm)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
    let (status, body) = call(
        &app,
        "POST",
        &uri,
        Some("alice"),
        Some(json!({"version": 1, "action": "confirm_team", "payload": {"team": "Mobile"}})),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"], "illegal_transition");
    let (status, body) = call(
        &app,
        "POST",
        &uri,
        Some("alice"),
        Some(json!({"version": 1, "action": "auto_detect", "payload": {"label": "none", "hits": []}})),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"], "illegal_transition");
    let (status, _) = call(&app, "POST", &uri, Some("alice"), Some(json!({"version": 1}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(
        &app,
        "POST",
        "/cases/missing/decision",
        Some("alice"),
        Some(json!({"version": 1, "action": "reject_need"})),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_conflicting_decisions_exactly_one_wins() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    ingest_demo(&app).await;
    let (_, page) = call(&app, "GET", "/cases?per_page=10", None, None).await;
    for summary in page["cases"].as_array().unwrap() {
        let id = summary["case_id"].as_str().unwrap();
        let uri = format!("{}/decision", case_uri(id));
        let version = summary["version"].clone();
        let a = tokio::spawn({
            let (app, uri) = (app.clone(), uri.clone());
            let body = json!({"version": version, "action": "confirm_need", "payload": {"kind": "explicit"}});
            async move { call(&app, "POST", &uri, Some("alice"), Some(body)).await.0 }
        });
        let b = tokio::spawn({
            let (app, uri) = (app.clone(), uri.clone());
            let body = json!({"version": version, "action": "reject_need"});
            async move { call(&app, "POST", &uri, Some("bob"), Some(body)).await.0 }
        });
        let mut statuses = [a.await.unwrap(), b.await.unwrap()];
        statuses.sort();
        assert_eq!(statuses, [StatusCode::OK, StatusCode::CONFLICT], "{id}");
        let (_, detail) = call(&app, "GET", &case_uri(id), None, None).await;
        let audit = detail["case"]["audit"].as_array().unwrap();
        assert_eq!(audit.iter().filter(|e| e["actor"] != "system").count(), 1, "{id}");
    }
}

#[tokio::test]
async fn busy_port_fails_startup_with_diagnostic() {
    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = taken.local_addr().unwrap();
    let err = bind(addr).await.unwrap_err();
    assert!(matches!(err, ServiceError::Bind { .. }));
    assert!(err.to_string().contains(&addr.to_string()), "{err}");
}
