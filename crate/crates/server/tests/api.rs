use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use tsconnect_core::extract::{adapters_from_spec, AdapterError, AdapterSet, OcrAdapter};
use tsconnect_core::feedback::{FeedbackStore, VideoInfo};
use tsconnect_core::graph::GraphDocument;
use tsconnect_core::ChapterAnnotation;
use tsconnect_server::{app, FeedbackBatch, ServerConfig};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/course")
}

fn mock_adapters() -> AdapterSet {
    adapters_from_spec(&format!("mock:{}", fixture().join("adapters").display())).unwrap()
}

fn chapters() -> Value {
    serde_json::from_str(&std::fs::read_to_string(fixture().join("chapters.json")).unwrap()).unwrap()
}

fn stream() -> Vec<u8> {
    std::fs::read(fixture().join("deck.tscf")).unwrap()
}

struct Client {
    router: Router,
}

impl Client {
    fn new(config: &ServerConfig) -> Self {
        Self {
            router: app(config).unwrap().0,
        }
    }

    async fn send(&self, req: Request<Body>) -> (StatusCode, Value) {
        let resp = self.router.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
    }

    async fn login(&self, pseudonym: &str, role: &str) -> String {
        let req = Request::post("/auth/session")
            .header("content-type", "application/json")
            .body(Body::from(json!({"pseudonym": pseudonym, "role": role}).to_string()))
            .unwrap();
        let (status, body) = self.send(req).await;
        assert_eq!(status, StatusCode::OK, "{body}");
        body["token"].as_str().unwrap().to_string()
    }

    async fn get(&self, token: &str, uri: &str) -> (StatusCode, Value) {
        let req = Request::get(uri)
            .header("authorization", format!("Bearer {token}"))
            .body(Body::empty())
            .unwrap();
        self.send(req).await
    }

    async fn post_json(&self, token: &str, uri: &str, body: Value) -> (StatusCode, Value) {
        let req = Request::post(uri)
            .header("authorization", format!("Bearer {token}"))
            .header("content-type", "application/json")
            .body(Body::from(body.to_string()))
            .unwrap();
        self.send(req).await
    }

    async fn upload_parts(&self, token: &str, parts: &[(&str, &[u8])]) -> (StatusCode, Value) {
        let boundary = "tsc-test-boundary";
        let mut body = Vec::new();
        for (name, data) in parts {
            body.extend_from_slice(
                format!("--{boundary}\r\nContent-Disposition: form-data; name=\"{name}\"; filename=\"{name}\"\r\n\r\n")
                    .as_bytes(),
            );
            body.extend_from_slice(data);
            body.extend_from_slice(b"\r\n");
        }
        body.extend_from_slice(format!("--{boundary}--\r\n").as_bytes());
        let req = Request::post("/videos")
            .header("authorization", format!("Bearer {token}"))
            .header("content-type", format!("multipart/form-data; boundary={boundary}"))
            .body(Body::from(body))
            .unwrap();
        self.send(req).await
    }

    async fn upload(&self, token: &str, chapters: Value, stream: &[u8]) -> (StatusCode, Value) {
        let meta = json!({"title": "Network Flows", "chapters": chapters}).to_string();
        self.upload_parts(token, &[("meta", meta.as_bytes()), ("stream", stream)]).await
    }

    async fn wait_for(&self, token: &str, video_id: &str, state: &str) -> Value {
        let deadline = Instant::now() + Duration::from_secs(60);
        loop {
            let (_, body) = self.get(token, &format!("/videos/{video_id}")).await;
            if body["processing_state"]["state"] == state {
                return body;
            }
            assert!(Instant::now() < deadline, "video stuck in {body}");
            tokio::time::sleep(Duration::from_millis(20)).await;
        }
    }

    /// Uploads the fixture course as a fresh instructor and waits until it
    /// is ready. Returns (instructor token, video id).
    async fn ready_video(&self) -> (String, String) {
        let token = self.login("prof", "instructor").await;
        let (status, body) = self.upload(&token, chapters(), &stream()).await;
        assert_eq!(status, StatusCode::ACCEPTED, "{body}");
        let id = body["video_id"].as_str().unwrap().to_string();
        self.wait_for(&token, &id, "ready").await;
        (token, id)
    }
}

fn node_ids(doc: &Value) -> BTreeSet<String> {
    doc["nodes"].as_array().unwrap().iter().map(|n| n["id"].as_str().unwrap().to_string()).collect()
}

fn edge_set(doc: &Value) -> BTreeSet<(String, String)> {
    doc["edges"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e[0].as_str().unwrap().to_string(), e[1].as_str().unwrap().to_string()))
        .collect()
}

#[tokio::test]
async fn uploaded_course_yields_the_golden_graph() {
    let client = Client::new(&ServerConfig::new(mock_adapters()));
    let (prof, id) = client.ready_video().await;

    let (status, graph) = client.get(&prof, &format!("/videos/{id}/graph")).await;
    assert_eq!(status, StatusCode::OK);
    let golden = GraphDocument::from_json(&std::fs::read_to_string(fixture().join("graph.json")).unwrap()).unwrap();
    assert_eq!(graph, golden.to_value());
    assert!(graph.get("markings").is_none());

    let student = client.login("s1", "student").await;
    let (_, graph) = client.get(&student, &format!("/videos/{id}/graph?scope=global")).await;
    assert_eq!(graph["markings"], json!({}));

    let (_, list) = client.get(&student, "/videos").await;
    assert_eq!(list.as_array().unwrap().len(), 1);
    assert_eq!(list[0]["duration"], 120);
}

#[tokio::test]
async fn chapter_views_are_subgraphs_that_cover_the_skeleton() {
    let client = Client::new(&ServerConfig::new(mock_adapters()));
    let (prof, id) = client.ready_video().await;
    let (_, global) = client.get(&prof, &format!("/videos/{id}/graph")).await;
    let all_nodes = node_ids(&global);
    let all_edges = edge_set(&global);

    let mut covered = BTreeSet::new();
    for chapter in ["1", "2", "3"] {
        let (status, view) = client.get(&prof, &format!("/videos/{id}/graph?scope=chapter:{chapter}")).await;
        assert_eq!(status, StatusCode::OK, "{view}");
        let nodes = node_ids(&view);
        assert!(!nodes.is_empty());
        assert!(nodes.is_subset(&all_nodes));
        assert!(edge_set(&view).is_subset(&all_edges));
        for n in view["nodes"].as_array().unwrap() {
            let nid = n["id"].as_str().unwrap();
            assert_eq!(view["layout"]["cells"][nid], global["layout"]["cells"][nid], "{nid} moved");
            if n["kind"] != "prerequisite" {
                covered.insert(nid.to_string());
            }
        }
    }
    let skeleton: BTreeSet<String> = global["nodes"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|n| n["kind"] != "prerequisite")
        .map(|n| n["id"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(covered, skeleton);

    let (status, body) = client.get(&prof, &format!("/videos/{id}/graph?scope=chapter:9")).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::NOT_FOUND, Some("UnknownChapter")));
    let (status, _) = client.get(&prof, &format!("/videos/{id}/graph?scope=everything")).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn a_bad_item_rejects_the_whole_batch() {
    let client = Client::new(&ServerConfig::new(mock_adapters()));
    let (prof, id) = client.ready_video().await;
    let student = client.login("s1", "student").await;
    let batch = json!({
        "events": [{"video_second": 3, "kind": "play"}, {"video_second": 9, "kind": "pause"}],
        "comments": [{"video_second": 5, "body": "what is a residual graph?"}],
        "markings": [{"concept_id": "graph", "score": 1}, {"concept_id": "path", "score": 7}]
    });
    let (status, body) = client.post_json(&student, &format!("/videos/{id}/feedback"), batch).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("BadScore")));

    let (_, dash) = client.get(&prof, &format!("/videos/{id}/dashboard")).await;
    let plays: u64 = dash["timeline"]["seconds"].as_array().unwrap().iter().map(|s| s["plays"].as_u64().unwrap()).sum();
    assert_eq!(plays, 0);
    assert_eq!(dash["comment_index"]["total"], 0);
    assert!(dash["concepts"].as_array().unwrap().iter().all(|c| c["marker_count"] == 0));

    let unknown = json!({"markings": [{"concept_id": "no-such-concept", "score": 1}]});
    let (status, body) = client.post_json(&student, &format!("/videos/{id}/feedback"), unknown).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("UnknownConcept")));
    let late = json!({"events": [{"video_second": 121, "kind": "play"}]});
    let (_, body) = client.post_json(&student, &format!("/videos/{id}/feedback"), late).await;
    assert_eq!(body["error"], "OutOfRangeSecond");
}

fn scripted_batches() -> Vec<(&'static str, Value)> {
    let t = |s: u32| format!("2026-05-04T10:{:02}:{:02}Z", s / 60, s % 60);
    vec![
        (
            "ana",
            json!({
                "events": [
                    {"video_second": 0, "kind": "play", "wall_time": t(0)},
                    {"video_second": 10, "kind": "rate_change", "new_rate": 1.5, "wall_time": t(10)},
                    {"video_second": 20, "kind": "pause", "wall_time": t(17)}
                ],
                "comments": [
                    {"video_second": 12, "body": "why reverse edges?", "wall_time": t(12)},
                    {"video_second": 40, "body": "matching example please", "wall_time": t(30)}
                ],
                "markings": [
                    {"concept_id": "max-flow", "score": 3, "wall_time": t(5)},
                    {"concept_id": "graph", "score": 0, "wall_time": t(6)}
                ]
            }),
        ),
        (
            "ben",
            json!({
                "events": [
                    {"video_second": 16, "kind": "play", "wall_time": t(40)},
                    {"video_second": 30, "kind": "pause", "wall_time": t(54)}
                ],
                "comments": [{"video_second": 18, "body": "capacity units?", "wall_time": t(45)}],
                "markings": [{"concept_id": "max-flow", "score": 1, "wall_time": t(50)}]
            }),
        ),
        (
            "ana",
            json!({
                "deletions": [{"comment_id": 2, "wall_time": t(60)}],
                "markings": [{"concept_id": "max-flow", "score": 1, "wall_time": t(70)}]
            }),
        ),
    ]
}

#[tokio::test]
async fn dashboard_matches_a_store_fed_the_same_ops() {
    let client = Client::new(&ServerConfig::new(mock_adapters()));
    let (prof, id) = client.ready_video().await;
    let (_, record) = client.get(&prof, &format!("/videos/{id}")).await;
    let (_, graph) = client.get(&prof, &format!("/videos/{id}/graph")).await;

    let mut reference = FeedbackStore::in_memory().unwrap();
    reference
        .register_video(&VideoInfo {
            video_id: id.clone(),
            duration: 120,
            chapters: serde_json::from_value::<Vec<ChapterAnnotation>>(record["chapters"].clone()).unwrap(),
            concepts: node_ids(&graph).into_iter().collect(),
        })
        .unwrap();
    for (who, batch) in scripted_batches() {
        let token = client.login(who, "student").await;
        let (status, body) = client.post_json(&token, &format!("/videos/{id}/feedback"), batch.clone()).await;
        assert_eq!(status, StatusCode::OK, "{body}");
        let ops = serde_json::from_value::<FeedbackBatch>(batch).unwrap().into_ops(who, &id, chrono::Utc::now());
        reference.apply(&ops).unwrap();
    }
    let want = reference.report(&id).unwrap();

    let (status, dash) = client.get(&prof, &format!("/videos/{id}/dashboard?from=10&to=45&at=12&sort=video_timestamp")).await;
    assert_eq!(status, StatusCode::OK, "{dash}");
    assert_eq!(dash["timeline"], json!(want.timeline));
    assert_eq!(dash["concepts"], json!(want.concepts));
    assert_eq!(dash["tooltip"], dash["timeline"]["seconds"][12]);
    assert_eq!(dash["tooltip"]["avg_speed"], 1.5);
    assert_eq!(dash["range"]["chapters"], json!(["1", "2"]));
    let seconds: Vec<u64> = dash["comments"].as_array().unwrap().iter().map(|c| c["video_second"].as_u64().unwrap()).collect();
    assert_eq!(seconds, [12, 18, 40]);
    assert_eq!(dash["comments"][2]["deleted"], true);
    assert_eq!(dash["comment_index"]["total"], 2);
    assert_eq!(dash["comment_index"]["deleted"], 1);
    // ana lowered max-flow from 3 to 1 after 65 s
    assert_eq!(dash["downgrades"].as_array().unwrap().len(), 1);
    assert_eq!(dash["downgrades"][0]["pseudonym"], "ana");

    let max_flow = dash["concepts"].as_array().unwrap().iter().find(|c| c["concept_id"] == "max-flow").unwrap();
    assert_eq!(max_flow["mean_score"], 1.0);
    assert_eq!(max_flow["marker_count"], 2);

    let ana = client.login("ana", "student").await;
    let (_, graph) = client.get(&ana, &format!("/videos/{id}/graph")).await;
    assert_eq!(graph["markings"], json!({"graph": 0, "max-flow": 1}));
}

#[tokio::test]
async fn comments_are_private_to_their_author() {
    let client = Client::new(&ServerConfig::new(mock_adapters()));
    let (prof, id) = client.ready_video().await;
    for (who, batch) in scripted_batches().into_iter().take(2) {
        let token = client.login(who, "student").await;
        client.post_json(&token, &format!("/videos/{id}/feedback"), batch).await;
    }
    let ben = client.login("ben", "student").await;
    let (_, mine) = client.get(&ben, &format!("/videos/{id}/comments")).await;
    let authors: BTreeSet<&str> = mine["comments"].as_array().unwrap().iter().map(|c| c["pseudonym"].as_str().unwrap()).collect();
    assert_eq!(authors, BTreeSet::from(["ben"]));

    let steal = json!({"deletions": [{"comment_id": 1}]});
    let (status, body) = client.post_json(&ben, &format!("/videos/{id}/feedback"), steal).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::FORBIDDEN, Some("NotOwner")));

    let (_, all) = client.get(&prof, &format!("/videos/{id}/comments?sort=student_id")).await;
    let names: Vec<&str> = all["comments"].as_array().unwrap().iter().map(|c| c["pseudonym"].as_str().unwrap()).collect();
    assert_eq!(names, ["ana", "ana", "ben"]);
}

#[tokio::test]
async fn uploads_are_validated() {
    let client = Client::new(&ServerConfig::new(mock_adapters()));
    let prof = client.login("prof", "instructor").await;

    let overlapping = json!([
        {"chapter_id": "1", "title": "A", "start": 0.0, "end": 20.0},
        {"chapter_id": "2", "title": "B", "start": 10.0, "end": 120.0}
    ]);
    let (status, body) = client.upload(&prof, overlapping, &stream()).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("BadChapters")));

    let mut corrupt = stream();
    corrupt[0] = b'X';
    let (status, body) = client.upload(&prof, chapters(), &corrupt).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("BadStream")));

    let meta = json!({"title": "no stream", "chapters": chapters()}).to_string();
    let (status, _) = client.upload_parts(&prof, &[("meta", meta.as_bytes())]).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    let (status, list) = client.get(&prof, "/videos").await;
    assert_eq!((status, list), (StatusCode::OK, json!([])));
    let (status, body) = client.get(&prof, "/videos/nope").await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::NOT_FOUND, Some("UnknownVideo")));
}

/// OCR that blocks until the test opens the gate.
struct GatedOcr {
    inner: Arc<dyn OcrAdapter>,
    open: Arc<(Mutex<bool>, Condvar)>,
}

impl OcrAdapter for GatedOcr {
    fn recognize(&self, png: &[u8]) -> Result<Value, AdapterError> {
        let (lock, cv) = &*self.open;
        let _open = cv.wait_while(lock.lock().unwrap(), |open| !*open).unwrap();
        self.inner.recognize(png)
    }
}

#[tokio::test]
async fn feedback_waits_for_processing() {
    let gate = Arc::new((Mutex::new(false), Condvar::new()));
    let mut adapters = mock_adapters();
    adapters.ocr = Arc::new(GatedOcr {
        inner: adapters.ocr.clone(),
        open: gate.clone(),
    });
    let client = Client::new(&ServerConfig::new(adapters));
    let prof = client.login("prof", "instructor").await;
    let student = client.login("s1", "student").await;
    let (status, body) = client.upload(&prof, chapters(), &stream()).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    assert_eq!(body["processing_state"]["state"], "uploaded");
    let id = body["video_id"].as_str().unwrap().to_string();
    client.wait_for(&prof, &id, "processing").await;

    let (status, body) = client.get(&student, &format!("/videos/{id}/graph")).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::CONFLICT, Some("NotReady")));
    let batch = json!({"events": [{"video_second": 1, "kind": "play"}]});
    let (status, _) = client.post_json(&student, &format!("/videos/{id}/feedback"), batch.clone()).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, _) = client.get(&prof, &format!("/videos/{id}/dashboard")).await;
    assert_eq!(status, StatusCode::CONFLICT);

    *gate.0.lock().unwrap() = true;
    gate.1.notify_all();
    client.wait_for(&prof, &id, "ready").await;
    let (status, body) = client.post_json(&student, &format!("/videos/{id}/feedback"), batch).await;
    assert_eq!((status, &body["stored"]), (StatusCode::OK, &json!(1)));
}

struct BrokenOcr;

impl OcrAdapter for BrokenOcr {
    fn recognize(&self, _png: &[u8]) -> Result<Value, AdapterError> {
        Err(AdapterError::Unavailable("ocr service down".into()))
    }
}

#[tokio::test]
async fn adapter_outage_marks_the_video_failed() {
    let mut adapters = mock_adapters();
    adapters.ocr = Arc::new(BrokenOcr);
    let client = Client::new(&ServerConfig::new(adapters));
    let prof = client.login("prof", "instructor").await;
    let (_, body) = client.upload(&prof, chapters(), &stream()).await;
    let id = body["video_id"].as_str().unwrap().to_string();
    let record = client.wait_for(&prof, &id, "failed").await;
    assert!(record["processing_state"]["reason"].as_str().unwrap().contains("ocr service down"));
    let (status, _) = client.get(&prof, &format!("/videos/{id}/graph")).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn sessions_expire_and_roles_are_enforced() {
    let mut config = ServerConfig::new(mock_adapters());
    config.session_ttl = chrono::Duration::seconds(-1);
    let client = Client::new(&config);
    let stale = client.login("s1", "student").await;
    let (status, body) = client.get(&stale, "/videos").await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::UNAUTHORIZED, Some("Unauthorized")));
    let (status, _) = client.get("not-a-token", "/videos").await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);

    let client = Client::new(&ServerConfig::new(mock_adapters()));
    let student = client.login("s1", "student").await;
    let (status, body) = client.upload(&student, chapters(), &stream()).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::FORBIDDEN, Some("Forbidden")));
    let req = Request::post("/auth/session")
        .header("content-type", "application/json")
        .body(Body::from(json!({"pseudonym": " ", "role": "student"}).to_string()))
        .unwrap();
    assert_eq!(client.send(req).await.0, StatusCode::UNPROCESSABLE_ENTITY);
}
