use std::sync::Arc;

use axum::extract::{Multipart, Path, Query, State};
use axum::http::StatusCode;
use axum::{Extension, Json};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tsconnect_core::chapter::validate_chapters;
use tsconnect_core::feedback::{
    chapters_in_range, CommentSort, EventKind, FeedbackEvent, FeedbackOp, OpReceipt, VideoInfo, Viewer,
};
use tsconnect_core::graph::{chapter_document, DependencyGraph, GraphDocument, LayoutPlacement};
use tsconnect_core::keyframe::{load_frame_stream, StreamError};
use tsconnect_core::{ChapterAnnotation, ChapterId};

use crate::auth::{Role, Session};
use crate::error::ApiError;
use crate::jobs::{ProcessingState, VideoRecord};
use crate::AppState;

type ApiResult<T> = Result<T, ApiError>;

#[derive(Deserialize)]
pub struct SessionRequest {
    pub pseudonym: String,
    pub role: Role,
}

pub async fn create_session(State(state): State<AppState>, Json(req): Json<SessionRequest>) -> ApiResult<Json<Session>> {
    if req.pseudonym.trim().is_empty() {
        return Err(ApiError::BadRequest("pseudonym is empty".into()));
    }
    Ok(Json(state.sessions.create(req.pseudonym, req.role, state.session_ttl)))
}

pub async fn list_videos(State(state): State<AppState>) -> Json<Vec<VideoRecord>> {
    Json(state.videos.read().expect("video lock").values().cloned().collect())
}

/// The `meta` part of an upload.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VideoMeta {
    pub title: String,
    pub chapters: Vec<ChapterAnnotation>,
}

/// Multipart upload with a JSON `meta` part and a TSCF `stream` part.
pub async fn upload_video(State(state): State<AppState>, mut form: Multipart) -> ApiResult<(StatusCode, Json<VideoRecord>)> {
    let mut meta: Option<VideoMeta> = None;
    let mut stream: Option<Vec<u8>> = None;
    while let Some(field) = form
        .next_field()
        .await
        .map_err(|e| ApiError::BadRequest(e.to_string()))?
    {
        let name = field.name().unwrap_or_default().to_string();
        let bytes = field.bytes().await.map_err(|e| ApiError::BadRequest(e.to_string()))?;
        match name.as_str() {
            "meta" => {
                meta = Some(serde_json::from_slice(&bytes).map_err(|e| ApiError::BadRequest(format!("meta: {e}")))?)
            }
            "stream" => stream = Some(bytes.to_vec()),
            other => return Err(ApiError::BadRequest(format!("unexpected part {other:?}"))),
        }
    }
    let meta = meta.ok_or_else(|| ApiError::BadRequest("missing meta part".into()))?;
    let stream = stream.ok_or_else(|| ApiError::BadStream(StreamError::BadHeader("missing stream part".into())))?;
    validate_chapters(&meta.chapters)?;

    let video_id = uuid::Uuid::new_v4().simple().to_string();
    let seq = load_frame_stream(video_id.clone(), stream.as_slice())?;
    let duration = seq.duration().ceil() as u32;
    state.store.lock().expect("store lock").register_video(&VideoInfo {
        video_id: video_id.clone(),
        duration,
        chapters: meta.chapters.clone(),
        concepts: Vec::new(),
    })?;
    let record = VideoRecord {
        video_id: video_id.clone(),
        title: meta.title,
        duration,
        chapters: meta.chapters.clone(),
        processing_state: ProcessingState::Uploaded,
        warnings: Vec::new(),
    };
    state
        .videos
        .write()
        .expect("video lock")
        .insert(video_id.clone(), record.clone());
    state.spawn_pipeline(video_id, seq, meta.chapters);
    Ok((StatusCode::ACCEPTED, Json(record)))
}

fn video(state: &AppState, id: &str) -> ApiResult<VideoRecord> {
    state.video(id).ok_or_else(|| ApiError::UnknownVideo(id.into()))
}

fn ready(state: &AppState, id: &str) -> ApiResult<(VideoRecord, Arc<GraphDocument>)> {
    let v = video(state, id)?;
    if v.processing_state != ProcessingState::Ready {
        let label = serde_json::to_value(&v.processing_state).expect("state serializes")["state"]
            .as_str()
            .unwrap_or_default()
            .to_string();
        return Err(ApiError::NotReady(label));
    }
    let doc = state
        .graphs
        .read()
        .expect("graph lock")
        .get(id)
        .cloned()
        .ok_or_else(|| ApiError::NotReady("graph missing".into()))?;
    Ok((v, doc))
}

pub async fn get_video(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<VideoRecord>> {
    Ok(Json(video(&state, &id)?))
}

#[derive(Deserialize)]
pub struct GraphQuery {
    pub scope: Option<String>,
}

/// `scope=global` (default) or `scope=chapter:<id>`. Student responses carry
/// a `markings` object with their own effective scores.
pub async fn get_graph(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<GraphQuery>,
    Extension(session): Extension<Session>,
) -> ApiResult<Json<Value>> {
    let (record, doc) = ready(&state, &id)?;
    let scope = q.scope.as_deref().unwrap_or("global");
    let mut value = if scope == "global" {
        doc.to_value()
    } else if let Some(chapter) = scope.strip_prefix("chapter:") {
        let chapter = ChapterId::new(chapter);
        if !record.chapters.iter().any(|c| c.chapter_id == chapter) {
            return Err(tsconnect_core::graph::GraphError::UnknownChapter(chapter).into());
        }
        if doc.graph.chapters().contains(&chapter) {
            chapter_document(&doc, &chapter)?.to_value()
        } else {
            // a chapter without concepts of its own has an empty view
            GraphDocument::new(
                DependencyGraph::new(),
                Some(LayoutPlacement {
                    side: doc.layout.as_ref().map_or(0.0, |l| l.side),
                    cells: Default::default(),
                }),
            )
            .to_value()
        }
    } else {
        return Err(ApiError::BadRequest(format!("unknown scope {scope:?}")));
    };
    if session.role == Role::Student {
        let scores = state.store.lock().expect("store lock").scores_of(&id, &session.pseudonym)?;
        value["markings"] = json!(scores);
    }
    Ok(Json(value))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchEvent {
    pub video_second: u32,
    #[serde(default)]
    pub wall_time: Option<DateTime<Utc>>,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchComment {
    pub video_second: u32,
    #[serde(default)]
    pub wall_time: Option<DateTime<Utc>>,
    pub body: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchDeletion {
    pub comment_id: i64,
    #[serde(default)]
    pub wall_time: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchMarking {
    pub concept_id: String,
    pub score: i64,
    #[serde(default)]
    pub wall_time: Option<DateTime<Utc>>,
}

/// Student feedback, stored all-or-nothing. Missing wall times default to
/// the time the batch arrives. Ops apply in the order events, comments,
/// deletions, markings.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FeedbackBatch {
    #[serde(default)]
    pub events: Vec<BatchEvent>,
    #[serde(default)]
    pub comments: Vec<BatchComment>,
    #[serde(default)]
    pub deletions: Vec<BatchDeletion>,
    #[serde(default)]
    pub markings: Vec<BatchMarking>,
}

impl FeedbackBatch {
    pub fn into_ops(self, pseudonym: &str, video_id: &str, now: DateTime<Utc>) -> Vec<FeedbackOp> {
        let mut ops = Vec::new();
        ops.extend(self.events.into_iter().map(|e| {
            FeedbackOp::Event(FeedbackEvent {
                pseudonym: pseudonym.into(),
                video_id: video_id.into(),
                video_second: e.video_second,
                wall_time: e.wall_time.unwrap_or(now),
                kind: e.kind,
            })
        }));
        ops.extend(self.comments.into_iter().map(|c| FeedbackOp::Comment {
            pseudonym: pseudonym.into(),
            video_id: video_id.into(),
            video_second: c.video_second,
            wall_time: c.wall_time.unwrap_or(now),
            body: c.body,
            comment_id: None,
        }));
        ops.extend(self.deletions.into_iter().map(|d| FeedbackOp::DeleteComment {
            pseudonym: pseudonym.into(),
            comment_id: d.comment_id,
            wall_time: d.wall_time.unwrap_or(now),
        }));
        ops.extend(self.markings.into_iter().map(|m| FeedbackOp::Mark {
            pseudonym: pseudonym.into(),
            video_id: video_id.into(),
            concept_id: m.concept_id,
            score: m.score,
            wall_time: m.wall_time.unwrap_or(now),
        }));
        ops
    }
}

pub async fn post_feedback(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Extension(session): Extension<Session>,
    Json(batch): Json<FeedbackBatch>,
) -> ApiResult<Json<Value>> {
    ready(&state, &id)?;
    let ops = batch.into_ops(&session.pseudonym, &id, Utc::now());
    let receipts: Vec<OpReceipt> = state.store.lock().expect("store lock").apply(&ops)?;
    Ok(Json(json!({ "stored": receipts.len(), "receipts": receipts })))
}

#[derive(Deserialize)]
pub struct DashboardQuery {
    pub from: Option<u32>,
    pub to: Option<u32>,
    pub at: Option<u32>,
    pub sort: Option<String>,
}

fn parse_range(from: Option<u32>, to: Option<u32>) -> ApiResult<Option<(u32, u32)>> {
    match (from, to) {
        (None, None) => Ok(None),
        (Some(a), Some(b)) => Ok(Some((a, b))),
        _ => Err(ApiError::BadRequest("from and to must be given together".into())),
    }
}

fn parse_sort(sort: Option<&str>) -> ApiResult<CommentSort> {
    sort.map_or(Ok(CommentSort::SubmitTime), |s| s.parse().map_err(ApiError::BadRequest))
}

/// Timeline, concept aggregates and comment index in one response. With
/// `from`/`to` it adds the comments and chapters in that range; with `at`
/// it adds the timeline entry for that second.
pub async fn dashboard(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<DashboardQuery>,
) -> ApiResult<Json<Value>> {
    let (record, _) = ready(&state, &id)?;
    let range = parse_range(q.from, q.to)?;
    let sort = parse_sort(q.sort.as_deref())?;
    let store = state.store.lock().expect("store lock");
    let report = store.report(&id)?;
    let comments = store.list_comments(&id, &Viewer::Instructor, sort, range)?;
    let mut body = json!({
        "video_id": id,
        "timeline": report.timeline,
        "concepts": report.concepts,
        "comment_index": store.comment_index(&id)?,
        "comments": comments,
        "downgrades": store.long_interval_downgrades(&id)?,
    });
    if let Some((s1, s2)) = range {
        body["range"] = json!({
            "from": s1,
            "to": s2,
            "chapters": chapters_in_range(&record.chapters, s1 as f64, s2 as f64),
        });
    }
    if let Some(at) = q.at {
        let stats = report.timeline.at(at).ok_or_else(|| {
            ApiError::Feedback(tsconnect_core::feedback::FeedbackError::OutOfRangeSecond {
                second: at,
                duration: record.duration,
            })
        })?;
        body["tooltip"] = json!(stats);
    }
    Ok(Json(body))
}

#[derive(Deserialize)]
pub struct CommentsQuery {
    pub from: Option<u32>,
    pub to: Option<u32>,
    pub sort: Option<String>,
}

pub async fn list_comments(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<CommentsQuery>,
    Extension(session): Extension<Session>,
) -> ApiResult<Json<Value>> {
    video(&state, &id)?;
    let viewer = match session.role {
        Role::Instructor => Viewer::Instructor,
        Role::Student => Viewer::Student(session.pseudonym.clone()),
    };
    let comments = state.store.lock().expect("store lock").list_comments(
        &id,
        &viewer,
        parse_sort(q.sort.as_deref())?,
        parse_range(q.from, q.to)?,
    )?;
    Ok(Json(json!({ "comments": comments })))
}
