//! Newline-delimited JSON event log: export and replay.
//!
//! Each line is `{type, pseudonym, video_id, video_second, wall_time,
//! payload}`. Record types and payloads:
//!
//! | type             | payload                                  |
//! |------------------|------------------------------------------|
//! | `video`          | `{duration, chapters, concepts}`         |
//! | `play`, `pause`  | `{}`                                     |
//! | `rate_change`    | `{new_rate}`                             |
//! | `comment`        | `{body, comment_id?}`                    |
//! | `comment_delete` | `{comment_id}`                           |
//! | `marking`        | `{concept_id, score}`                    |

use std::io::{BufRead, Write};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::model::{EventKind, FeedbackEvent, FeedbackOp, VideoInfo};
use super::store::{AggregateReport, FeedbackStore};
use super::FeedbackError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default)]
    pub pseudonym: String,
    pub video_id: String,
    #[serde(default)]
    pub video_second: u32,
    pub wall_time: DateTime<Utc>,
    #[serde(default)]
    pub payload: Value,
}

/// A parsed log line.
#[derive(Debug, Clone, PartialEq)]
pub enum LogEntry {
    Video(VideoInfo),
    Op(FeedbackOp),
}

#[derive(Deserialize)]
struct VideoPayload {
    duration: u32,
    #[serde(default)]
    chapters: Vec<crate::chapter::ChapterAnnotation>,
    #[serde(default)]
    concepts: Vec<String>,
}

#[derive(Deserialize)]
struct RatePayload {
    new_rate: f64,
}

#[derive(Deserialize)]
struct CommentPayload {
    body: String,
    #[serde(default)]
    comment_id: Option<i64>,
}

#[derive(Deserialize)]
struct DeletePayload {
    comment_id: i64,
}

#[derive(Deserialize)]
struct MarkingPayload {
    concept_id: String,
    score: i64,
}

impl LogRecord {
    pub fn to_entry(&self) -> Result<LogEntry, String> {
        let payload = || if self.payload.is_null() { json!({}) } else { self.payload.clone() };
        let parse_err = |e: serde_json::Error| format!("{} payload: {e}", self.kind);
        let event = |kind| {
            LogEntry::Op(FeedbackOp::Event(FeedbackEvent {
                pseudonym: self.pseudonym.clone(),
                video_id: self.video_id.clone(),
                video_second: self.video_second,
                wall_time: self.wall_time,
                kind,
            }))
        };
        Ok(match self.kind.as_str() {
            "video" => {
                let p: VideoPayload = serde_json::from_value(payload()).map_err(parse_err)?;
                LogEntry::Video(VideoInfo {
                    video_id: self.video_id.clone(),
                    duration: p.duration,
                    chapters: p.chapters,
                    concepts: p.concepts,
                })
            }
            "play" => event(EventKind::Play),
            "pause" => event(EventKind::Pause),
            "rate_change" => {
                let p: RatePayload = serde_json::from_value(payload()).map_err(parse_err)?;
                event(EventKind::RateChange { new_rate: p.new_rate })
            }
            "comment" => {
                let p: CommentPayload = serde_json::from_value(payload()).map_err(parse_err)?;
                LogEntry::Op(FeedbackOp::Comment {
                    pseudonym: self.pseudonym.clone(),
                    video_id: self.video_id.clone(),
                    video_second: self.video_second,
                    wall_time: self.wall_time,
                    body: p.body,
                    comment_id: p.comment_id,
                })
            }
            "comment_delete" => {
                let p: DeletePayload = serde_json::from_value(payload()).map_err(parse_err)?;
                LogEntry::Op(FeedbackOp::DeleteComment {
                    pseudonym: self.pseudonym.clone(),
                    comment_id: p.comment_id,
                    wall_time: self.wall_time,
                })
            }
            "marking" => {
                let p: MarkingPayload = serde_json::from_value(payload()).map_err(parse_err)?;
                LogEntry::Op(FeedbackOp::Mark {
                    pseudonym: self.pseudonym.clone(),
                    video_id: self.video_id.clone(),
                    concept_id: p.concept_id,
                    score: p.score,
                    wall_time: self.wall_time,
                })
            }
            other => return Err(format!("unknown record type {other:?}")),
        })
    }

    pub fn from_event(e: &FeedbackEvent) -> Self {
        let payload = match e.kind {
            EventKind::RateChange { new_rate } => json!({ "new_rate": new_rate }),
            _ => json!({}),
        };
        Self {
            kind: e.kind.name().into(),
            pseudonym: e.pseudonym.clone(),
            video_id: e.video_id.clone(),
            video_second: e.video_second,
            wall_time: e.wall_time,
            payload,
        }
    }
}

/// Parses a log, skipping blank lines. Line numbers in errors are 1-based.
pub fn read_log(reader: impl BufRead) -> Result<Vec<(usize, LogEntry)>, FeedbackError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(|e| FeedbackError::BadLogLine { line: n, reason: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: LogRecord = serde_json::from_str(&line)
            .map_err(|e| FeedbackError::BadLogLine { line: n, reason: e.to_string() })?;
        let entry = record
            .to_entry()
            .map_err(|reason| FeedbackError::BadLogLine { line: n, reason })?;
        out.push((n, entry));
    }
    Ok(out)
}

/// Applies parsed entries to a store in order. A store error is reported
/// against the line that caused it.
pub fn replay(store: &mut FeedbackStore, entries: &[(usize, LogEntry)]) -> Result<Vec<String>, FeedbackError> {
    let mut videos = Vec::new();
    for (line, entry) in entries {
        let result = match entry {
            LogEntry::Video(info) => {
                if !videos.contains(&info.video_id) {
                    videos.push(info.video_id.clone());
                }
                store.register_video(info)
            }
            LogEntry::Op(op) => store.apply(std::slice::from_ref(op)).map(|_| ()),
        };
        result.map_err(|e| FeedbackError::BadLogLine {
            line: *line,
            reason: e.to_string(),
        })?;
    }
    Ok(videos)
}

/// Reads a log into a fresh in-memory store and reports the aggregates of
/// every video it registers, in order of first registration.
pub fn replay_report(reader: impl BufRead) -> Result<Vec<AggregateReport>, FeedbackError> {
    let entries = read_log(reader)?;
    let mut store = FeedbackStore::in_memory()?;
    replay(&mut store, &entries)?
        .iter()
        .map(|v| store.report(v))
        .collect()
}

/// Everything stored for a video as log records: the registration, then
/// events, comments, deletions and marking revisions.
pub fn export_log(store: &FeedbackStore, video_id: &str) -> Result<Vec<LogRecord>, FeedbackError> {
    let info = store.video(video_id)?;
    let first_time = DateTime::<Utc>::UNIX_EPOCH;
    let mut out = vec![LogRecord {
        kind: "video".into(),
        pseudonym: String::new(),
        video_id: video_id.into(),
        video_second: 0,
        wall_time: first_time,
        payload: json!({
            "duration": info.duration,
            "chapters": info.chapters,
            "concepts": info.concepts,
        }),
    }];
    out.extend(store.events(video_id)?.iter().map(LogRecord::from_event));
    for c in store.all_comments(video_id)? {
        out.push(LogRecord {
            kind: "comment".into(),
            pseudonym: c.pseudonym,
            video_id: video_id.into(),
            video_second: c.video_second,
            wall_time: c.wall_time,
            payload: json!({ "body": c.body, "comment_id": c.comment_id }),
        });
    }
    for (comment_id, pseudonym, at) in store.deletions(video_id)? {
        out.push(LogRecord {
            kind: "comment_delete".into(),
            pseudonym,
            video_id: video_id.into(),
            video_second: 0,
            wall_time: at,
            payload: json!({ "comment_id": comment_id }),
        });
    }
    for m in store.markings(video_id)? {
        for r in &m.revisions {
            out.push(LogRecord {
                kind: "marking".into(),
                pseudonym: m.pseudonym.clone(),
                video_id: video_id.into(),
                video_second: 0,
                wall_time: r.wall_time,
                payload: json!({ "concept_id": m.concept_id, "score": r.score }),
            });
        }
    }
    Ok(out)
}

pub fn write_log(records: &[LogRecord], mut w: impl Write) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const LOG: &str = r#"{"type":"video","video_id":"v","wall_time":"2024-03-01T09:00:00Z","payload":{"duration":60,"chapters":[{"chapter_id":"1","title":"Intro","start":0.0,"end":60.0}],"concepts":["graph"]}}
{"type":"play","pseudonym":"s1","video_id":"v","video_second":0,"wall_time":"2024-03-01T10:00:00Z"}

{"type":"rate_change","pseudonym":"s1","video_id":"v","video_second":10,"wall_time":"2024-03-01T10:00:10Z","payload":{"new_rate":1.5}}
{"type":"pause","pseudonym":"s1","video_id":"v","video_second":20,"wall_time":"2024-03-01T10:00:17Z","payload":{}}
{"type":"comment","pseudonym":"s1","video_id":"v","video_second":12,"wall_time":"2024-03-01T10:00:12Z","payload":{"body":"lost here"}}
{"type":"comment_delete","pseudonym":"s1","video_id":"v","wall_time":"2024-03-01T10:00:13Z","payload":{"comment_id":1}}
{"type":"marking","pseudonym":"s1","video_id":"v","wall_time":"2024-03-01T10:00:30Z","payload":{"concept_id":"graph","score":2}}
"#;

    #[test]
    fn replay_small_log() {
        let reports = replay_report(LOG.as_bytes()).unwrap();
        assert_eq!(reports.len(), 1);
        let t = &reports[0].timeline;
        assert_eq!(t.seconds[0].plays, 1);
        assert_eq!(t.seconds[15].avg_speed, 1.5);
        assert_eq!(t.seconds[60].cumulative_comments, 0);
        assert_eq!(reports[0].concepts[0].mean_score, 2.0);
    }

    #[test]
    fn empty_log_reports_nothing() {
        assert!(replay_report("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn bad_line_numbered() {
        let mut lines: Vec<&str> = LOG.lines().collect();
        lines.insert(6, "{not json");
        let text = lines.join("\n");
        assert!(matches!(
            read_log(text.as_bytes()),
            Err(FeedbackError::BadLogLine { line: 7, .. })
        ));
        let unknown = r#"{"type":"seek","video_id":"v","wall_time":"2024-03-01T10:00:00Z"}"#;
        assert!(matches!(
            read_log(unknown.as_bytes()),
            Err(FeedbackError::BadLogLine { line: 1, .. })
        ));
    }

    #[test]
    fn store_errors_carry_line() {
        let text = r#"{"type":"play","pseudonym":"s","video_id":"ghost","wall_time":"2024-03-01T10:00:00Z"}"#;
        let mut store = FeedbackStore::in_memory().unwrap();
        let entries = read_log(text.as_bytes()).unwrap();
        assert!(matches!(
            replay(&mut store, &entries),
            Err(FeedbackError::BadLogLine { line: 1, .. })
        ));
    }

    #[test]
    fn export_replay_round_trip() {
        let mut store = FeedbackStore::in_memory().unwrap();
        replay(&mut store, &read_log(LOG.as_bytes()).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_log(&export_log(&store, "v").unwrap(), &mut buf).unwrap();
        let mut again = FeedbackStore::in_memory().unwrap();
        replay(&mut again, &read_log(buf.as_slice()).unwrap()).unwrap();
        assert_eq!(again.report("v").unwrap(), store.report("v").unwrap());
        assert_eq!(again.all_comments("v").unwrap(), store.all_comments("v").unwrap());
        assert_eq!(again.markings("v").unwrap(), store.markings("v").unwrap());
    }
}
