//! Chapter annotations supplied by the instructor at upload time.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChapterId(pub String);

impl ChapterId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for ChapterId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChapterAnnotation {
    pub chapter_id: ChapterId,
    pub title: String,
    /// Inclusive start, seconds.
    pub start: f64,
    /// Exclusive end, seconds.
    pub end: f64,
}

impl ChapterAnnotation {
    pub fn new(id: impl Into<String>, title: impl Into<String>, start: f64, end: f64) -> Self {
        Self {
            chapter_id: ChapterId::new(id),
            title: title.into(),
            start,
            end,
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChapterError {
    #[error("no chapters given")]
    Empty,
    #[error("chapter {0}: start must be >= 0 and < end")]
    BadInterval(ChapterId),
    #[error("chapter {0} overlaps or precedes the chapter before it")]
    Overlap(ChapterId),
    #[error("duplicate chapter id {0}")]
    DuplicateId(ChapterId),
}

/// Checks ordering, interval sanity and disjointness. The union of chapters
/// does not have to cover the whole video.
pub fn validate_chapters(chapters: &[ChapterAnnotation]) -> Result<(), ChapterError> {
    if chapters.is_empty() {
        return Err(ChapterError::Empty);
    }
    let mut seen = std::collections::BTreeSet::new();
    for (i, ch) in chapters.iter().enumerate() {
        if !(ch.start.is_finite() && ch.end.is_finite()) || ch.start < 0.0 || ch.start >= ch.end {
            return Err(ChapterError::BadInterval(ch.chapter_id.clone()));
        }
        if !seen.insert(&ch.chapter_id) {
            return Err(ChapterError::DuplicateId(ch.chapter_id.clone()));
        }
        if i > 0 && ch.start < chapters[i - 1].end {
            return Err(ChapterError::Overlap(ch.chapter_id.clone()));
        }
    }
    Ok(())
}

/// Index of the chapter a time point belongs to: the chapter containing it,
/// otherwise the nearest preceding chapter, otherwise the first chapter.
/// `chapters` must be ordered and non-empty.
pub fn locate_chapter(chapters: &[ChapterAnnotation], t: f64) -> usize {
    chapters
        .iter()
        .rposition(|ch| ch.start <= t)
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three() -> Vec<ChapterAnnotation> {
        vec![
            ChapterAnnotation::new("1", "Intro", 5.0, 10.0),
            ChapterAnnotation::new("2", "Flows", 12.0, 20.0),
            ChapterAnnotation::new("3", "Cuts", 20.0, 30.0),
        ]
    }

    #[test]
    fn locate_inside_gap_and_before() {
        let ch = three();
        assert_eq!(locate_chapter(&ch, 6.0), 0);
        assert_eq!(locate_chapter(&ch, 11.0), 0);
        assert_eq!(locate_chapter(&ch, 12.0), 1);
        assert_eq!(locate_chapter(&ch, 20.0), 2);
        assert_eq!(locate_chapter(&ch, 1.0), 0);
        assert_eq!(locate_chapter(&ch, 99.0), 2);
    }

    #[test]
    fn validation() {
        assert!(validate_chapters(&three()).is_ok());
        assert_eq!(validate_chapters(&[]), Err(ChapterError::Empty));
        let mut overlapping = three();
        overlapping[1].start = 9.0;
        assert!(matches!(validate_chapters(&overlapping), Err(ChapterError::Overlap(_))));
        let bad = vec![ChapterAnnotation::new("x", "x", 3.0, 3.0)];
        assert!(matches!(validate_chapters(&bad), Err(ChapterError::BadInterval(_))));
        let mut dup = three();
        dup[2].chapter_id = ChapterId::new("1");
        assert!(matches!(validate_chapters(&dup), Err(ChapterError::DuplicateId(_))));
    }
}
