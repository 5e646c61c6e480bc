use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;
use thiserror::Error;
use tsconnect_core::chapter::ChapterError;
use tsconnect_core::feedback::FeedbackError;
use tsconnect_core::graph::GraphError;
use tsconnect_core::keyframe::StreamError;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("missing or expired session token")]
    Unauthorized,
    #[error("this role may not call this endpoint")]
    Forbidden,
    #[error("unknown video {0}")]
    UnknownVideo(String),
    #[error("video is not ready ({0})")]
    NotReady(String),
    #[error("bad chapters: {0}")]
    BadChapters(#[from] ChapterError),
    #[error("bad stream: {0}")]
    BadStream(#[from] StreamError),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error(transparent)]
    Feedback(#[from] FeedbackError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl ApiError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Self::Unauthorized => "Unauthorized",
            Self::Forbidden => "Forbidden",
            Self::UnknownVideo(_) => "UnknownVideo",
            Self::NotReady(_) => "NotReady",
            Self::BadChapters(_) => "BadChapters",
            Self::BadStream(_) => "BadStream",
            Self::BadRequest(_) => "BadRequest",
            Self::Graph(GraphError::UnknownChapter(_)) => "UnknownChapter",
            Self::Graph(_) => "GraphError",
            Self::Feedback(e) => match e {
                FeedbackError::UnknownVideo(_) => "UnknownVideo",
                FeedbackError::OutOfRangeSecond { .. } => "OutOfRangeSecond",
                FeedbackError::BadRate(_) => "BadRate",
                FeedbackError::EmptyBody => "EmptyBody",
                FeedbackError::NotOwner(_) => "NotOwner",
                FeedbackError::UnknownComment(_) => "UnknownComment",
                FeedbackError::UnknownConcept(_) => "UnknownConcept",
                FeedbackError::BadScore(_) => "BadScore",
                FeedbackError::NonMonotonicRevision { .. } => "NonMonotonicRevision",
                FeedbackError::BadRange { .. } => "BadRange",
                FeedbackError::BadTimestamp(_) => "BadTimestamp",
                FeedbackError::BadLogLine { .. } => "BadLogLine",
                FeedbackError::Storage(_) | FeedbackError::Json(_) => "StorageError",
            },
        }
    }

    pub fn status(&self) -> StatusCode {
        match self.code() {
            "Unauthorized" => StatusCode::UNAUTHORIZED,
            "Forbidden" | "NotOwner" => StatusCode::FORBIDDEN,
            "UnknownVideo" | "UnknownChapter" | "UnknownComment" => StatusCode::NOT_FOUND,
            "NotReady" => StatusCode::CONFLICT,
            "StorageError" | "GraphError" => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": self.code(), "message": self.to_string() });
        (self.status(), Json(body)).into_response()
    }
}
