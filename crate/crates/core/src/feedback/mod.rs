//! Student feedback: clickstream events, comments and concept markings, plus
//! the aggregates instructors look at.

mod aggregate;
mod log;
mod model;
mod store;

use thiserror::Error;

pub use aggregate::{
    chapters_in_range, concept_aggregates, long_interval_downgrades, sort_comments, timeline, watch_segments,
    DOWNGRADE_GAP_SECS,
};
pub use log::{export_log, read_log, replay, replay_report, write_log, LogEntry, LogRecord};
pub use model::*;
pub use store::{AggregateReport, CommentIndex, FeedbackStore};

#[derive(Debug, Error)]
pub enum FeedbackError {
    #[error("unknown video {0}")]
    UnknownVideo(String),
    #[error("second {second} is outside the video (duration {duration} s)")]
    OutOfRangeSecond { second: u32, duration: u32 },
    #[error("playback rate {0} is not offered by the player")]
    BadRate(f64),
    #[error("comment body is empty")]
    EmptyBody,
    #[error("comment {0} belongs to another student")]
    NotOwner(i64),
    #[error("unknown comment {0}")]
    UnknownComment(i64),
    #[error("unknown concept {0}")]
    UnknownConcept(String),
    #[error("score {0} is not in 0..=3")]
    BadScore(i64),
    #[error("marking revision for {concept_id} is not later than the previous one")]
    NonMonotonicRevision { concept_id: String },
    #[error("bad range: {from} > {to}")]
    BadRange { from: u32, to: u32 },
    #[error("timestamp {0} out of range")]
    BadTimestamp(String),
    #[error("bad log line {line}: {reason}")]
    BadLogLine { line: usize, reason: String },
    #[error("storage: {0}")]
    Storage(#[from] rusqlite::Error),
    #[error("stored JSON: {0}")]
    Json(#[from] serde_json::Error),
}
