//! Instructor aggregates, as pure functions over stored records.

use std::collections::BTreeMap;

use super::model::{
    Comment, CommentSort, ConceptAggregate, Downgrade, EventKind, FeedbackEvent, Marking, SecondStats,
    TimelineAggregate,
};
use crate::chapter::{ChapterAnnotation, ChapterId};

/// Gap beyond which a lowered score counts as a long-interval downgrade.
pub const DOWNGRADE_GAP_SECS: f64 = 10.0;

/// Replays one student's events (in wall-time order) into watch segments
/// `(first, last, rate)`, both ends inclusive.
///
/// Play opens a segment. A rate change closes the open segment just before
/// its second and opens a new one at the new rate. Pause closes the segment
/// at its own second. A segment still open at the end of the log closes at
/// the last event's second.
pub fn watch_segments(events: &[&FeedbackEvent]) -> Vec<(u32, u32, f64)> {
    let mut out = Vec::new();
    let mut rate = 1.0;
    let mut open: Option<u32> = None;
    let mut last = 0;
    let mut close = |lo: u32, hi: Option<u32>, rate: f64| {
        if let Some(hi) = hi {
            if lo <= hi {
                out.push((lo, hi, rate));
            }
        }
    };
    for e in events {
        let s = e.video_second;
        match e.kind {
            EventKind::Play => {
                if let Some(start) = open {
                    close(start, Some(last), rate);
                }
                open = Some(s);
            }
            EventKind::RateChange { new_rate } => {
                if let Some(start) = open {
                    close(start, s.checked_sub(1), rate);
                    open = Some(s);
                }
                rate = new_rate;
            }
            EventKind::Pause => {
                if let Some(start) = open.take() {
                    close(start, Some(s), rate);
                }
            }
        }
        last = s;
    }
    if let Some(start) = open {
        close(start, Some(last), rate);
    }
    out
}

/// Per-second plays, pauses, average speed and cumulative comment count over
/// `0..=duration`. Events are grouped per student and taken in wall-time
/// order (stable for ties). A student's rate at a second is that of their
/// latest segment covering it; seconds nobody covers report 1.0.
pub fn timeline(duration: u32, events: &[FeedbackEvent], comments: &[Comment]) -> TimelineAggregate {
    let n = duration as usize + 1;
    let mut plays = vec![0u64; n];
    let mut pauses = vec![0u64; n];
    let mut by_student: BTreeMap<&str, Vec<&FeedbackEvent>> = BTreeMap::new();
    for e in events {
        let s = e.video_second as usize;
        if s < n {
            match e.kind {
                EventKind::Play => plays[s] += 1,
                EventKind::Pause => pauses[s] += 1,
                EventKind::RateChange { .. } => {}
            }
        }
        by_student.entry(&e.pseudonym).or_default().push(e);
    }

    let mut speed_sum = vec![0.0; n];
    let mut covering = vec![0u32; n];
    let mut rate_at: Vec<Option<f64>> = vec![None; n];
    for list in by_student.values_mut() {
        list.sort_by_key(|e| e.wall_time);
        rate_at.iter_mut().for_each(|r| *r = None);
        for (lo, hi, rate) in watch_segments(list) {
            let hi = (hi as usize).min(n - 1);
            for slot in &mut rate_at[lo as usize..=hi] {
                *slot = Some(rate);
            }
        }
        for (s, r) in rate_at.iter().enumerate() {
            if let Some(r) = r {
                speed_sum[s] += r;
                covering[s] += 1;
            }
        }
    }

    let mut per_second = vec![0u64; n];
    for c in comments.iter().filter(|c| !c.deleted) {
        per_second[(c.video_second as usize).min(n - 1)] += 1;
    }
    let mut running = 0;
    let seconds = (0..n)
        .map(|s| {
            running += per_second[s];
            SecondStats {
                second: s as u32,
                plays: plays[s],
                pauses: pauses[s],
                avg_speed: if covering[s] == 0 {
                    1.0
                } else {
                    speed_sum[s] / covering[s] as f64
                },
                cumulative_comments: running,
            }
        })
        .collect();
    TimelineAggregate { seconds }
}

/// Mean of each student's latest score per concept, with the display
/// intensity (`mean / 3`) and opacity (`0.25 + 0.75 * count / max_count`).
/// Concepts nobody marked report zero everywhere.
pub fn concept_aggregates(concepts: &[String], markings: &[Marking]) -> Vec<ConceptAggregate> {
    let mut sums: BTreeMap<&str, (u64, u64)> = concepts.iter().map(|c| (c.as_str(), (0, 0))).collect();
    for m in markings {
        if let Some(score) = m.effective_score() {
            let e = sums.entry(&m.concept_id).or_default();
            e.0 += score as u64;
            e.1 += 1;
        }
    }
    let max = sums.values().map(|(_, n)| *n).max().unwrap_or(0);
    sums.into_iter()
        .map(|(id, (sum, count))| {
            let mean = if count == 0 { 0.0 } else { sum as f64 / count as f64 };
            ConceptAggregate {
                concept_id: id.to_string(),
                mean_score: mean,
                marker_count: count,
                intensity: mean / 3.0,
                alpha: if count == 0 {
                    0.0
                } else {
                    0.25 + 0.75 * count as f64 / max as f64
                },
            }
        })
        .collect()
}

/// Revisions that lower the score more than `gap_secs` after the previous
/// revision of the same marking.
pub fn long_interval_downgrades(markings: &[Marking], gap_secs: f64) -> Vec<Downgrade> {
    let mut out = Vec::new();
    for m in markings {
        for pair in m.revisions.windows(2) {
            let gap = (pair[1].wall_time - pair[0].wall_time).as_seconds_f64();
            if gap > gap_secs && pair[1].score < pair[0].score {
                out.push(Downgrade {
                    pseudonym: m.pseudonym.clone(),
                    concept_id: m.concept_id.clone(),
                    from_score: pair[0].score,
                    to_score: pair[1].score,
                    gap_secs: gap,
                    wall_time: pair[1].wall_time,
                });
            }
        }
    }
    out
}

/// Chapters whose `[start, end)` interval meets the closed range `[s1, s2]`.
pub fn chapters_in_range(chapters: &[ChapterAnnotation], s1: f64, s2: f64) -> Vec<ChapterId> {
    chapters
        .iter()
        .filter(|c| c.start <= s2 && c.end > s1)
        .map(|c| c.chapter_id.clone())
        .collect()
}

/// Stable sort by the chosen key, submit time second.
pub fn sort_comments(comments: &mut [Comment], sort: CommentSort) {
    match sort {
        CommentSort::SubmitTime => comments.sort_by_key(|c| (c.wall_time, c.comment_id)),
        CommentSort::VideoTimestamp => comments.sort_by_key(|c| (c.video_second, c.wall_time, c.comment_id)),
        CommentSort::StudentId => comments.sort_by(|a, b| {
            a.pseudonym
                .cmp(&b.pseudonym)
                .then(a.wall_time.cmp(&b.wall_time))
                .then(a.comment_id.cmp(&b.comment_id))
        }),
    }
}
