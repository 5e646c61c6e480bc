//! SQLite-backed feedback store.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use chrono::{DateTime, Utc};
use rusqlite::{params, Connection, OptionalExtension, Transaction};
use serde::{Deserialize, Serialize};

use super::aggregate::{self, DOWNGRADE_GAP_SECS};
use super::model::*;
use super::FeedbackError;
use crate::chapter::{locate_chapter, ChapterAnnotation, ChapterId};

const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS videos (
    video_id TEXT PRIMARY KEY,
    duration INTEGER NOT NULL,
    chapters TEXT NOT NULL,
    concepts TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS events (
    id INTEGER PRIMARY KEY,
    video_id TEXT NOT NULL,
    pseudonym TEXT NOT NULL,
    video_second INTEGER NOT NULL,
    wall_time INTEGER NOT NULL,
    kind TEXT NOT NULL,
    rate REAL NOT NULL,
    UNIQUE (video_id, pseudonym, kind, rate, video_second, wall_time)
);
CREATE TABLE IF NOT EXISTS comments (
    comment_id INTEGER PRIMARY KEY,
    video_id TEXT NOT NULL,
    pseudonym TEXT NOT NULL,
    video_second INTEGER NOT NULL,
    wall_time INTEGER NOT NULL,
    chapter_id TEXT NOT NULL,
    chapter_title TEXT NOT NULL,
    body TEXT NOT NULL,
    deleted_at INTEGER
);
CREATE TABLE IF NOT EXISTS revisions (
    seq INTEGER PRIMARY KEY,
    video_id TEXT NOT NULL,
    pseudonym TEXT NOT NULL,
    concept_id TEXT NOT NULL,
    wall_time INTEGER NOT NULL,
    score INTEGER NOT NULL
);
CREATE INDEX IF NOT EXISTS events_by_video ON events (video_id);
CREATE INDEX IF NOT EXISTS comments_by_video ON comments (video_id);
CREATE INDEX IF NOT EXISTS revisions_by_key ON revisions (video_id, pseudonym, concept_id);
";

fn to_nanos(t: DateTime<Utc>) -> Result<i64, FeedbackError> {
    t.timestamp_nanos_opt()
        .ok_or_else(|| FeedbackError::BadTimestamp(t.to_rfc3339()))
}

fn from_nanos(n: i64) -> DateTime<Utc> {
    DateTime::from_timestamp_nanos(n)
}

/// Comment counts keyed the three ways the instructor can sort them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CommentIndex {
    /// Live comments; deleted ones are only counted in `deleted`.
    pub total: u64,
    pub deleted: u64,
    pub by_second: BTreeMap<u32, u64>,
    pub by_student: BTreeMap<String, u64>,
    pub by_chapter: BTreeMap<ChapterId, u64>,
}

/// Timeline and concept aggregates for one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub video_id: String,
    pub timeline: TimelineAggregate,
    pub concepts: Vec<ConceptAggregate>,
}

pub struct FeedbackStore {
    conn: Connection,
    cache: RefCell<HashMap<String, AggregateReport>>,
}

impl FeedbackStore {
    pub fn open(path: &Path) -> Result<Self, FeedbackError> {
        Self::init(Connection::open(path)?)
    }

    pub fn in_memory() -> Result<Self, FeedbackError> {
        Self::init(Connection::open_in_memory()?)
    }

    fn init(conn: Connection) -> Result<Self, FeedbackError> {
        conn.execute_batch(SCHEMA)?;
        Ok(Self {
            conn,
            cache: RefCell::new(HashMap::new()),
        })
    }

    /// Creates or replaces a video's metadata. Existing feedback is kept.
    pub fn register_video(&mut self, info: &VideoInfo) -> Result<(), FeedbackError> {
        self.conn.execute(
            "INSERT INTO videos (video_id, duration, chapters, concepts) VALUES (?1, ?2, ?3, ?4)
             ON CONFLICT (video_id) DO UPDATE SET duration = ?2, chapters = ?3, concepts = ?4",
            params![
                info.video_id,
                info.duration,
                serde_json::to_string(&info.chapters)?,
                serde_json::to_string(&info.concepts)?
            ],
        )?;
        self.cache.borrow_mut().remove(&info.video_id);
        Ok(())
    }

    pub fn video(&self, video_id: &str) -> Result<VideoInfo, FeedbackError> {
        load_video(&self.conn, video_id)
    }

    pub fn video_ids(&self) -> Result<Vec<String>, FeedbackError> {
        let mut stmt = self.conn.prepare("SELECT video_id FROM videos ORDER BY video_id")?;
        let ids = stmt.query_map([], |r| r.get(0))?.collect::<Result<_, _>>()?;
        Ok(ids)
    }

    /// Applies the ops in order inside one transaction: either all of them
    /// are stored or none is.
    pub fn apply(&mut self, ops: &[FeedbackOp]) -> Result<Vec<OpReceipt>, FeedbackError> {
        let tx = self.conn.transaction()?;
        let mut receipts = Vec::with_capacity(ops.len());
        let mut touched = Vec::new();
        for op in ops {
            let (video, receipt) = apply_op(&tx, op)?;
            touched.push(video);
            receipts.push(receipt);
        }
        tx.commit()?;
        let mut cache = self.cache.borrow_mut();
        for v in touched {
            cache.remove(&v);
        }
        Ok(receipts)
    }

    /// Stores one clickstream event. Returns `false` if an identical event
    /// was already stored.
    pub fn record_event(&mut self, event: &FeedbackEvent) -> Result<bool, FeedbackError> {
        match self.apply(&[FeedbackOp::Event(event.clone())])?.pop() {
            Some(OpReceipt::Event { stored }) => Ok(stored),
            _ => unreachable!("event op yields event receipt"),
        }
    }

    pub fn post_comment(
        &mut self,
        pseudonym: &str,
        video_id: &str,
        video_second: u32,
        wall_time: DateTime<Utc>,
        body: &str,
    ) -> Result<Comment, FeedbackError> {
        let op = FeedbackOp::Comment {
            pseudonym: pseudonym.into(),
            video_id: video_id.into(),
            video_second,
            wall_time,
            body: body.into(),
            comment_id: None,
        };
        match self.apply(&[op])?.pop() {
            Some(OpReceipt::Comment { comment }) => Ok(comment),
            _ => unreachable!("comment op yields comment receipt"),
        }
    }

    pub fn delete_comment(&mut self, pseudonym: &str, comment_id: i64, wall_time: DateTime<Utc>) -> Result<(), FeedbackError> {
        self.apply(&[FeedbackOp::DeleteComment {
            pseudonym: pseudonym.into(),
            comment_id,
            wall_time,
        }])?;
        Ok(())
    }

    pub fn set_marking(
        &mut self,
        pseudonym: &str,
        video_id: &str,
        concept_id: &str,
        score: i64,
        wall_time: DateTime<Utc>,
    ) -> Result<Marking, FeedbackError> {
        let op = FeedbackOp::Mark {
            pseudonym: pseudonym.into(),
            video_id: video_id.into(),
            concept_id: concept_id.into(),
            score,
            wall_time,
        };
        match self.apply(&[op])?.pop() {
            Some(OpReceipt::Mark { marking }) => Ok(marking),
            _ => unreachable!("mark op yields mark receipt"),
        }
    }

    /// Events of a video in insertion order.
    pub fn events(&self, video_id: &str) -> Result<Vec<FeedbackEvent>, FeedbackError> {
        load_video(&self.conn, video_id)?;
        let mut stmt = self.conn.prepare(
            "SELECT pseudonym, video_second, wall_time, kind, rate FROM events WHERE video_id = ?1 ORDER BY id",
        )?;
        let rows = stmt.query_map([video_id], |r| {
            Ok((
                r.get::<_, String>(0)?,
                r.get::<_, u32>(1)?,
                r.get::<_, i64>(2)?,
                r.get::<_, String>(3)?,
                r.get::<_, f64>(4)?,
            ))
        })?;
        let mut out = Vec::new();
        for row in rows {
            let (pseudonym, video_second, wall, kind, rate) = row?;
            let kind = match kind.as_str() {
                "play" => EventKind::Play,
                "pause" => EventKind::Pause,
                _ => EventKind::RateChange { new_rate: rate },
            };
            out.push(FeedbackEvent {
                pseudonym,
                video_id: video_id.into(),
                video_second,
                wall_time: from_nanos(wall),
                kind,
            });
        }
        Ok(out)
    }

    /// All comments of a video, deleted ones included, in id order.
    pub fn all_comments(&self, video_id: &str) -> Result<Vec<Comment>, FeedbackError> {
        load_video(&self.conn, video_id)?;
        let mut stmt = self.conn.prepare(
            "SELECT comment_id, pseudonym, video_second, wall_time, chapter_id, chapter_title, body, deleted_at
             FROM comments WHERE video_id = ?1 ORDER BY comment_id",
        )?;
        let rows = stmt.query_map([video_id], |r| {
            Ok(Comment {
                comment_id: r.get(0)?,
                pseudonym: r.get(1)?,
                video_id: video_id.into(),
                video_second: r.get(2)?,
                wall_time: from_nanos(r.get(3)?),
                chapter_id: ChapterId::new(r.get::<_, String>(4)?),
                chapter_title: r.get(5)?,
                body: r.get(6)?,
                deleted: r.get::<_, Option<i64>>(7)?.is_some(),
            })
        })?;
        Ok(rows.collect::<Result<_, _>>()?)
    }

    /// Comments visible to `viewer`, optionally limited to video seconds in
    /// `[s1, s2]`, sorted by `sort`.
    pub fn list_comments(
        &self,
        video_id: &str,
        viewer: &Viewer,
        sort: CommentSort,
        range: Option<(u32, u32)>,
    ) -> Result<Vec<Comment>, FeedbackError> {
        if let Some((s1, s2)) = range {
            if s1 > s2 {
                return Err(FeedbackError::BadRange { from: s1, to: s2 });
            }
        }
        let mut out: Vec<Comment> = self
            .all_comments(video_id)?
            .into_iter()
            .filter(|c| match viewer {
                Viewer::Instructor => true,
                Viewer::Student(p) => !c.deleted && &c.pseudonym == p,
            })
            .filter(|c| range.is_none_or(|(s1, s2)| (s1..=s2).contains(&c.video_second)))
            .collect();
        aggregate::sort_comments(&mut out, sort);
        Ok(out)
    }

    pub fn comment_index(&self, video_id: &str) -> Result<CommentIndex, FeedbackError> {
        let mut idx = CommentIndex::default();
        for c in self.all_comments(video_id)? {
            if c.deleted {
                idx.deleted += 1;
                continue;
            }
            idx.total += 1;
            *idx.by_second.entry(c.video_second).or_default() += 1;
            *idx.by_student.entry(c.pseudonym).or_default() += 1;
            *idx.by_chapter.entry(c.chapter_id).or_default() += 1;
        }
        Ok(idx)
    }

    /// Every marking of a video with its full revision history.
    pub fn markings(&self, video_id: &str) -> Result<Vec<Marking>, FeedbackError> {
        load_video(&self.conn, video_id)?;
        let mut stmt = self.conn.prepare(
            "SELECT pseudonym, concept_id, wall_time, score FROM revisions
             WHERE video_id = ?1 ORDER BY pseudonym, concept_id, seq",
        )?;
        let rows = stmt.query_map([video_id], |r| {
            Ok((
                r.get::<_, String>(0)?,
                r.get::<_, String>(1)?,
                r.get::<_, i64>(2)?,
                r.get::<_, u8>(3)?,
            ))
        })?;
        let mut out: Vec<Marking> = Vec::new();
        for row in rows {
            let (pseudonym, concept_id, wall, score) = row?;
            let rev = Revision {
                wall_time: from_nanos(wall),
                score,
            };
            match out.last_mut() {
                Some(m) if m.pseudonym == pseudonym && m.concept_id == concept_id => m.revisions.push(rev),
                _ => out.push(Marking {
                    pseudonym,
                    concept_id,
                    revisions: vec![rev],
                }),
            }
        }
        Ok(out)
    }

    /// A student's effective scores, concept id to score.
    pub fn scores_of(&self, video_id: &str, pseudonym: &str) -> Result<BTreeMap<String, u8>, FeedbackError> {
        Ok(self
            .markings(video_id)?
            .into_iter()
            .filter(|m| m.pseudonym == pseudonym)
            .filter_map(|m| m.effective_score().map(|s| (m.concept_id, s)))
            .collect())
    }

    pub fn long_interval_downgrades(&self, video_id: &str) -> Result<Vec<Downgrade>, FeedbackError> {
        Ok(aggregate::long_interval_downgrades(&self.markings(video_id)?, DOWNGRADE_GAP_SECS))
    }

    pub fn aggregate_timeline(&self, video_id: &str) -> Result<TimelineAggregate, FeedbackError> {
        Ok(self.report(video_id)?.timeline)
    }

    pub fn aggregate_concept_scores(&self, video_id: &str) -> Result<Vec<ConceptAggregate>, FeedbackError> {
        Ok(self.report(video_id)?.concepts)
    }

    /// Both aggregates, served from a cache that every write to the video
    /// invalidates.
    pub fn report(&self, video_id: &str) -> Result<AggregateReport, FeedbackError> {
        if let Some(hit) = self.cache.borrow().get(video_id) {
            return Ok(hit.clone());
        }
        let info = self.video(video_id)?;
        let report = AggregateReport {
            video_id: video_id.into(),
            timeline: aggregate::timeline(info.duration, &self.events(video_id)?, &self.all_comments(video_id)?),
            concepts: aggregate::concept_aggregates(&info.concepts, &self.markings(video_id)?),
        };
        self.cache.borrow_mut().insert(video_id.into(), report.clone());
        Ok(report)
    }

    /// Deleted-comment wall times, needed to export a faithful log.
    pub(crate) fn deletions(&self, video_id: &str) -> Result<Vec<(i64, String, DateTime<Utc>)>, FeedbackError> {
        let mut stmt = self.conn.prepare(
            "SELECT comment_id, pseudonym, deleted_at FROM comments
             WHERE video_id = ?1 AND deleted_at IS NOT NULL ORDER BY deleted_at, comment_id",
        )?;
        let rows = stmt.query_map([video_id], |r| {
            Ok((r.get(0)?, r.get(1)?, from_nanos(r.get(2)?)))
        })?;
        Ok(rows.collect::<Result<_, _>>()?)
    }
}

fn load_video(conn: &Connection, video_id: &str) -> Result<VideoInfo, FeedbackError> {
    let row = conn
        .query_row(
            "SELECT duration, chapters, concepts FROM videos WHERE video_id = ?1",
            [video_id],
            |r| Ok((r.get::<_, u32>(0)?, r.get::<_, String>(1)?, r.get::<_, String>(2)?)),
        )
        .optional()?;
    let (duration, chapters, concepts) = row.ok_or_else(|| FeedbackError::UnknownVideo(video_id.into()))?;
    Ok(VideoInfo {
        video_id: video_id.into(),
        duration,
        chapters: serde_json::from_str(&chapters)?,
        concepts: serde_json::from_str(&concepts)?,
    })
}

fn check_second(info: &VideoInfo, second: u32) -> Result<(), FeedbackError> {
    if second > info.duration {
        return Err(FeedbackError::OutOfRangeSecond {
            second,
            duration: info.duration,
        });
    }
    Ok(())
}

fn chapter_at(chapters: &[ChapterAnnotation], second: u32) -> (ChapterId, String) {
    if chapters.is_empty() {
        return (ChapterId::new(""), String::new());
    }
    let c = &chapters[locate_chapter(chapters, second as f64)];
    (c.chapter_id.clone(), c.title.clone())
}

fn apply_op(tx: &Transaction<'_>, op: &FeedbackOp) -> Result<(String, OpReceipt), FeedbackError> {
    match op {
        FeedbackOp::Event(e) => {
            let info = load_video(tx, &e.video_id)?;
            check_second(&info, e.video_second)?;
            let rate = match e.kind {
                EventKind::RateChange { new_rate } => {
                    if !PLAYER_RATES.contains(&new_rate) {
                        return Err(FeedbackError::BadRate(new_rate));
                    }
                    new_rate
                }
                _ => 0.0,
            };
            let n = tx.execute(
                "INSERT OR IGNORE INTO events (video_id, pseudonym, video_second, wall_time, kind, rate)
                 VALUES (?1, ?2, ?3, ?4, ?5, ?6)",
                params![e.video_id, e.pseudonym, e.video_second, to_nanos(e.wall_time)?, e.kind.name(), rate],
            )?;
            Ok((e.video_id.clone(), OpReceipt::Event { stored: n == 1 }))
        }
        FeedbackOp::Comment {
            pseudonym,
            video_id,
            video_second,
            wall_time,
            body,
            comment_id,
        } => {
            if body.trim().is_empty() {
                return Err(FeedbackError::EmptyBody);
            }
            let info = load_video(tx, video_id)?;
            check_second(&info, *video_second)?;
            let (chapter_id, chapter_title) = chapter_at(&info.chapters, *video_second);
            tx.execute(
                "INSERT INTO comments (comment_id, video_id, pseudonym, video_second, wall_time, chapter_id, chapter_title, body)
                 VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8)",
                params![
                    comment_id,
                    video_id,
                    pseudonym,
                    video_second,
                    to_nanos(*wall_time)?,
                    chapter_id.as_str(),
                    chapter_title,
                    body
                ],
            )?;
            let comment = Comment {
                comment_id: tx.last_insert_rowid(),
                pseudonym: pseudonym.clone(),
                video_id: video_id.clone(),
                video_second: *video_second,
                wall_time: *wall_time,
                chapter_id,
                chapter_title,
                body: body.clone(),
                deleted: false,
            };
            Ok((video_id.clone(), OpReceipt::Comment { comment }))
        }
        FeedbackOp::DeleteComment {
            pseudonym,
            comment_id,
            wall_time,
        } => {
            let row: Option<(String, String, Option<i64>)> = tx
                .query_row(
                    "SELECT video_id, pseudonym, deleted_at FROM comments WHERE comment_id = ?1",
                    [comment_id],
                    |r| Ok((r.get(0)?, r.get(1)?, r.get(2)?)),
                )
                .optional()?;
            let (video_id, owner, deleted_at) = row.ok_or(FeedbackError::UnknownComment(*comment_id))?;
            if &owner != pseudonym {
                return Err(FeedbackError::NotOwner(*comment_id));
            }
            if deleted_at.is_none() {
                tx.execute(
                    "UPDATE comments SET deleted_at = ?1 WHERE comment_id = ?2",
                    params![to_nanos(*wall_time)?, comment_id],
                )?;
            }
            Ok((video_id, OpReceipt::DeleteComment { comment_id: *comment_id }))
        }
        FeedbackOp::Mark {
            pseudonym,
            video_id,
            concept_id,
            score,
            wall_time,
        } => {
            let info = load_video(tx, video_id)?;
            if !(0..=3).contains(score) {
                return Err(FeedbackError::BadScore(*score));
            }
            if !info.concepts.iter().any(|c| c == concept_id) {
                return Err(FeedbackError::UnknownConcept(concept_id.clone()));
            }
            let mut marking = load_marking(tx, video_id, pseudonym, concept_id)?;
            let rev = Revision {
                wall_time: *wall_time,
                score: *score as u8,
            };
            match marking.revisions.last() {
                Some(last) if *last == rev => {}
                Some(last) if last.wall_time >= rev.wall_time => {
                    return Err(FeedbackError::NonMonotonicRevision {
                        concept_id: concept_id.clone(),
                    })
                }
                _ => {
                    tx.execute(
                        "INSERT INTO revisions (video_id, pseudonym, concept_id, wall_time, score)
                         VALUES (?1, ?2, ?3, ?4, ?5)",
                        params![video_id, pseudonym, concept_id, to_nanos(*wall_time)?, score],
                    )?;
                    marking.revisions.push(rev);
                }
            }
            Ok((video_id.clone(), OpReceipt::Mark { marking }))
        }
    }
}

fn load_marking(conn: &Connection, video_id: &str, pseudonym: &str, concept_id: &str) -> Result<Marking, FeedbackError> {
    let mut stmt = conn.prepare(
        "SELECT wall_time, score FROM revisions
         WHERE video_id = ?1 AND pseudonym = ?2 AND concept_id = ?3 ORDER BY seq",
    )?;
    let revisions = stmt
        .query_map(params![video_id, pseudonym, concept_id], |r| {
            Ok(Revision {
                wall_time: from_nanos(r.get(0)?),
                score: r.get(1)?,
            })
        })?
        .collect::<Result<_, _>>()?;
    Ok(Marking {
        pseudonym: pseudonym.into(),
        concept_id: concept_id.into(),
        revisions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Duration;

    fn t(secs: i64) -> DateTime<Utc> {
        "2024-03-01T10:00:00Z".parse::<DateTime<Utc>>().unwrap() + Duration::seconds(secs)
    }

    fn store() -> FeedbackStore {
        let mut s = FeedbackStore::in_memory().unwrap();
        s.register_video(&VideoInfo {
            video_id: "v".into(),
            duration: 300,
            chapters: vec![
                ChapterAnnotation::new("1", "Graphs", 10.0, 100.0),
                ChapterAnnotation::new("2", "Flows", 100.0, 200.0),
            ],
            concepts: vec!["graph".into(), "max-flow".into()],
        })
        .unwrap();
        s
    }

    fn play(who: &str, second: u32, at: i64) -> FeedbackEvent {
        FeedbackEvent {
            pseudonym: who.into(),
            video_id: "v".into(),
            video_second: second,
            wall_time: t(at),
            kind: EventKind::Play,
        }
    }

    #[test]
    fn events_count_and_dedup() {
        let mut s = store();
        assert!(s.record_event(&play("a", 10, 0)).unwrap());
        assert!(!s.record_event(&play("a", 10, 0)).unwrap());
        assert_eq!(s.events("v").unwrap().len(), 1);
        assert_eq!(s.aggregate_timeline("v").unwrap().seconds[10].plays, 1);
        assert!(matches!(
            s.record_event(&play("a", 301, 1)),
            Err(FeedbackError::OutOfRangeSecond { second: 301, duration: 300 })
        ));
        assert!(s.record_event(&play("a", 300, 1)).unwrap());
        let mut bad = play("a", 3, 2);
        bad.kind = EventKind::RateChange { new_rate: 3.0 };
        assert!(matches!(s.record_event(&bad), Err(FeedbackError::BadRate(_))));
        bad.video_id = "nope".into();
        assert!(matches!(s.record_event(&bad), Err(FeedbackError::UnknownVideo(_))));
    }

    #[test]
    fn same_second_different_rate_both_kept() {
        let mut s = store();
        let mut e = play("a", 5, 0);
        e.kind = EventKind::RateChange { new_rate: 1.5 };
        assert!(s.record_event(&e).unwrap());
        e.kind = EventKind::RateChange { new_rate: 2.0 };
        assert!(s.record_event(&e).unwrap());
    }

    #[test]
    fn comments_resolve_chapters() {
        let mut s = store();
        let c = s.post_comment("a", "v", 150, t(0), "why residual?").unwrap();
        assert_eq!(c.chapter_title, "Flows");
        let early = s.post_comment("a", "v", 2, t(1), "hi").unwrap();
        assert_eq!(early.chapter_id, ChapterId::new("1"));
        let gap = s.post_comment("a", "v", 250, t(2), "after").unwrap();
        assert_eq!(gap.chapter_id, ChapterId::new("2"));
        assert!(matches!(s.post_comment("a", "v", 3, t(3), "  "), Err(FeedbackError::EmptyBody)));
    }

    #[test]
    fn soft_delete_rules() {
        let mut s = store();
        let c = s.post_comment("a", "v", 5, t(0), "x").unwrap();
        s.post_comment("a", "v", 5, t(1), "y").unwrap();
        assert!(matches!(
            s.delete_comment("b", c.comment_id, t(2)),
            Err(FeedbackError::NotOwner(_))
        ));
        s.delete_comment("a", c.comment_id, t(2)).unwrap();
        s.delete_comment("a", c.comment_id, t(3)).unwrap();
        assert!(matches!(s.delete_comment("a", 999, t(3)), Err(FeedbackError::UnknownComment(999))));
        assert_eq!(s.aggregate_timeline("v").unwrap().seconds[5].cumulative_comments, 1);

        let student = s
            .list_comments("v", &Viewer::Student("a".into()), CommentSort::SubmitTime, None)
            .unwrap();
        assert_eq!(student.len(), 1);
        let all = s.list_comments("v", &Viewer::Instructor, CommentSort::SubmitTime, None).unwrap();
        assert_eq!(all.len(), 2);
        assert!(all[0].deleted);
        assert_eq!(s.deletions("v").unwrap()[0].2, t(2));
    }

    #[test]
    fn students_only_see_their_own() {
        let mut s = store();
        s.post_comment("a", "v", 5, t(0), "mine").unwrap();
        s.post_comment("b", "v", 6, t(1), "theirs").unwrap();
        let seen = s
            .list_comments("v", &Viewer::Student("a".into()), CommentSort::VideoTimestamp, None)
            .unwrap();
        assert_eq!(seen.iter().map(|c| c.body.as_str()).collect::<Vec<_>>(), vec!["mine"]);
    }

    #[test]
    fn comment_sorting_and_range() {
        let mut s = store();
        for (i, (who, sec)) in [("c", 150), ("a", 50), ("b", 120), ("a", 220)].into_iter().enumerate() {
            s.post_comment(who, "v", sec, t(i as i64), "x").unwrap();
        }
        let by_video = s.list_comments("v", &Viewer::Instructor, CommentSort::VideoTimestamp, None).unwrap();
        assert!(by_video.windows(2).all(|w| w[0].video_second <= w[1].video_second));
        let by_student = s.list_comments("v", &Viewer::Instructor, CommentSort::StudentId, None).unwrap();
        assert_eq!(
            by_student.iter().map(|c| c.pseudonym.as_str()).collect::<Vec<_>>(),
            vec!["a", "a", "b", "c"]
        );
        let ranged = s
            .list_comments("v", &Viewer::Instructor, CommentSort::SubmitTime, Some((100, 200)))
            .unwrap();
        assert_eq!(ranged.len(), 2);
        let full = s
            .list_comments("v", &Viewer::Instructor, CommentSort::SubmitTime, Some((0, 300)))
            .unwrap();
        assert_eq!(full, s.list_comments("v", &Viewer::Instructor, CommentSort::SubmitTime, None).unwrap());
        assert!(matches!(
            s.list_comments("v", &Viewer::Instructor, CommentSort::SubmitTime, Some((5, 4))),
            Err(FeedbackError::BadRange { .. })
        ));
        let idx = s.comment_index("v").unwrap();
        assert_eq!(idx.total, 4);
        assert_eq!(idx.by_student["a"], 2);
        assert_eq!(idx.by_chapter[&ChapterId::new("2")], 3);
    }

    #[test]
    fn marking_revisions() {
        let mut s = store();
        s.set_marking("a", "v", "graph", 2, t(0)).unwrap();
        let m = s.set_marking("a", "v", "graph", 1, t(5)).unwrap();
        assert_eq!(m.revisions.len(), 2);
        assert_eq!(m.effective_score(), Some(1));
        // identical retry is a no-op
        assert_eq!(s.set_marking("a", "v", "graph", 1, t(5)).unwrap().revisions.len(), 2);
        assert!(matches!(
            s.set_marking("a", "v", "graph", 0, t(4)),
            Err(FeedbackError::NonMonotonicRevision { .. })
        ));
        assert!(matches!(s.set_marking("a", "v", "graph", 5, t(9)), Err(FeedbackError::BadScore(5))));
        assert!(matches!(
            s.set_marking("a", "v", "nope", 1, t(9)),
            Err(FeedbackError::UnknownConcept(_))
        ));
        s.set_marking("a", "v", "graph", 0, t(17)).unwrap();
        let d = s.long_interval_downgrades("v").unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].from_score, d[0].to_score), (1, 0));
        assert_eq!(s.scores_of("v", "a").unwrap()["graph"], 0);
    }

    #[test]
    fn batch_is_atomic() {
        let mut s = store();
        let ops = vec![
            FeedbackOp::Event(play("a", 1, 0)),
            FeedbackOp::Comment {
                pseudonym: "a".into(),
                video_id: "v".into(),
                video_second: 3,
                wall_time: t(1),
                body: "ok".into(),
                comment_id: None,
            },
            FeedbackOp::Mark {
                pseudonym: "a".into(),
                video_id: "v".into(),
                concept_id: "graph".into(),
                score: 7,
                wall_time: t(2),
            },
        ];
        assert!(matches!(s.apply(&ops), Err(FeedbackError::BadScore(7))));
        assert!(s.events("v").unwrap().is_empty());
        assert!(s.all_comments("v").unwrap().is_empty());
        assert_eq!(s.apply(&ops[..2]).unwrap().len(), 2);
    }

    #[test]
    fn cache_invalidated_on_write() {
        let mut s = store();
        assert_eq!(s.aggregate_timeline("v").unwrap().seconds[7].plays, 0);
        s.record_event(&play("a", 7, 0)).unwrap();
        assert_eq!(s.aggregate_timeline("v").unwrap().seconds[7].plays, 1);
        s.set_marking("a", "v", "graph", 3, t(0)).unwrap();
        assert_eq!(s.aggregate_concept_scores("v").unwrap()[0].marker_count, 1);
    }

    #[test]
    fn persists_across_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fb.sqlite");
        {
            let mut s = FeedbackStore::open(&path).unwrap();
            s.register_video(&VideoInfo {
                video_id: "v".into(),
                duration: 10,
                chapters: vec![],
                concepts: vec![],
            })
            .unwrap();
            s.record_event(&play("a", 1, 0)).unwrap();
        }
        let s = FeedbackStore::open(&path).unwrap();
        assert_eq!(s.events("v").unwrap(), vec![play("a", 1, 0)]);
    }
}
