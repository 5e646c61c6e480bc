//! Lecture-video knowledge graph engine.
//!
//! - [`keyframe`]: slide keyframes and OCR text from raw frame streams.
//! - [`graph`]: the prerequisite DAG, its reduction, layout and export.
//! - [`extract`]: adapter protocol (OCR, concept extractor, encyclopedia)
//!   and the concept-identification steps built on it.
//! - [`pipeline`]: the end-to-end video → graph run.
//! - [`feedback`]: clickstream, comments and markings, with instructor
//!   aggregates.

pub mod chapter;
pub mod extract;
pub mod feedback;
pub mod graph;
pub mod keyframe;
pub mod pipeline;

pub use chapter::{ChapterAnnotation, ChapterId};
