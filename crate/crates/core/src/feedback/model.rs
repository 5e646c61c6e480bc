use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::chapter::{ChapterAnnotation, ChapterId};

/// Playback rates the player offers.
pub const PLAYER_RATES: [f64; 6] = [0.5, 0.75, 1.0, 1.25, 1.5, 2.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Play,
    Pause,
    RateChange { new_rate: f64 },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Play => "play",
            Self::Pause => "pause",
            Self::RateChange { .. } => "rate_change",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackEvent {
    pub pseudonym: String,
    pub video_id: String,
    pub video_second: u32,
    pub wall_time: DateTime<Utc>,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comment {
    pub comment_id: i64,
    pub pseudonym: String,
    pub video_id: String,
    pub video_second: u32,
    pub wall_time: DateTime<Utc>,
    pub chapter_id: ChapterId,
    pub chapter_title: String,
    pub body: String,
    pub deleted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Revision {
    pub wall_time: DateTime<Utc>,
    pub score: u8,
}

/// One student's self-assessment history for one concept. Scores run from 0
/// (completely mastered) to 3 (never heard of it or unfamiliar).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marking {
    pub pseudonym: String,
    pub concept_id: String,
    pub revisions: Vec<Revision>,
}

impl Marking {
    pub fn effective_score(&self) -> Option<u8> {
        self.revisions.last().map(|r| r.score)
    }
}

/// What the store knows about a video: its length in whole seconds, its
/// chapters, and the concept ids of its graph (empty until the graph exists).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoInfo {
    pub video_id: String,
    pub duration: u32,
    pub chapters: Vec<ChapterAnnotation>,
    pub concepts: Vec<String>,
}

/// A single write. Feedback batches and replayed logs are both sequences of
/// these.
#[derive(Debug, Clone, PartialEq)]
pub enum FeedbackOp {
    Event(FeedbackEvent),
    Comment {
        pseudonym: String,
        video_id: String,
        video_second: u32,
        wall_time: DateTime<Utc>,
        body: String,
        /// Fixed id when replaying an exported log; `None` allocates one.
        comment_id: Option<i64>,
    },
    DeleteComment {
        pseudonym: String,
        comment_id: i64,
        wall_time: DateTime<Utc>,
    },
    Mark {
        pseudonym: String,
        video_id: String,
        concept_id: String,
        score: i64,
        wall_time: DateTime<Utc>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum OpReceipt {
    Event { stored: bool },
    Comment { comment: Comment },
    DeleteComment { comment_id: i64 },
    Mark { marking: Marking },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommentSort {
    SubmitTime,
    VideoTimestamp,
    StudentId,
}

impl std::str::FromStr for CommentSort {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "submit_time" => Ok(Self::SubmitTime),
            "video_timestamp" => Ok(Self::VideoTimestamp),
            "student_id" => Ok(Self::StudentId),
            other => Err(format!("unknown sort key {other:?}")),
        }
    }
}

/// Who is reading comments. Students only ever see their own live comments;
/// instructors see everything, deleted comments included (with the flag).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Viewer {
    Instructor,
    Student(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondStats {
    pub second: u32,
    pub plays: u64,
    pub pauses: u64,
    pub avg_speed: f64,
    pub cumulative_comments: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineAggregate {
    pub seconds: Vec<SecondStats>,
}

impl TimelineAggregate {
    pub fn at(&self, second: u32) -> Option<&SecondStats> {
        self.seconds.get(second as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptAggregate {
    pub concept_id: String,
    pub mean_score: f64,
    pub marker_count: u64,
    pub intensity: f64,
    /// 0 for unmarked concepts, which render in the base colour.
    pub alpha: f64,
}

/// A score lowered more than the gap threshold after the previous revision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Downgrade {
    pub pseudonym: String,
    pub concept_id: String,
    pub from_score: u8,
    pub to_score: u8,
    pub gap_secs: f64,
    pub wall_time: DateTime<Utc>,
}
