//! Video records and the background pipeline jobs that fill them in.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use tsconnect_core::feedback::VideoInfo;
use tsconnect_core::keyframe::FrameSequence;
use tsconnect_core::pipeline::run_pipeline;
use tsconnect_core::ChapterAnnotation;

use crate::AppState;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum ProcessingState {
    Uploaded,
    Processing,
    Ready,
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub video_id: String,
    pub title: String,
    /// Whole seconds, rounded up.
    pub duration: u32,
    pub chapters: Vec<ChapterAnnotation>,
    pub processing_state: ProcessingState,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl AppState {
    fn set_state(&self, id: &str, state: ProcessingState) {
        if let Some(v) = self.videos.write().expect("video lock").get_mut(id) {
            v.processing_state = state;
        }
    }

    /// Queues the pipeline for a freshly uploaded video. Jobs wait for a
    /// worker slot, then run on the blocking pool.
    pub(crate) fn spawn_pipeline(&self, video_id: String, seq: FrameSequence, chapters: Vec<ChapterAnnotation>) {
        let state = self.clone();
        tokio::spawn(async move {
            let _permit = match Arc::clone(&state.pool).acquire_owned().await {
                Ok(p) => p,
                Err(_) => return,
            };
            state.set_state(&video_id, ProcessingState::Processing);
            let adapters = state.adapters.clone();
            let params = state.params.clone();
            let chapters_for_job = chapters.clone();
            let result =
                tokio::task::spawn_blocking(move || run_pipeline(&seq, &chapters_for_job, &adapters, &params)).await;
            match result {
                Ok(Ok(out)) => {
                    let concepts: Vec<String> = out.document.graph.node_ids().map(|id| id.to_string()).collect();
                    let duration = state.video(&video_id).map(|v| v.duration).unwrap_or(0);
                    let registered = state.store.lock().expect("store lock").register_video(&VideoInfo {
                        video_id: video_id.clone(),
                        duration,
                        chapters,
                        concepts,
                    });
                    if let Err(e) = registered {
                        state.set_state(&video_id, ProcessingState::Failed { reason: e.to_string() });
                        return;
                    }
                    state
                        .graphs
                        .write()
                        .expect("graph lock")
                        .insert(video_id.clone(), Arc::new(out.document));
                    if let Some(v) = state.videos.write().expect("video lock").get_mut(&video_id) {
                        v.warnings = out.warnings.iter().map(|w| w.to_string()).collect();
                        v.processing_state = ProcessingState::Ready;
                    }
                    tracing::info!(%video_id, "pipeline finished");
                }
                Ok(Err(e)) => {
                    tracing::warn!(%video_id, error = %e, "pipeline failed");
                    state.set_state(&video_id, ProcessingState::Failed { reason: e.to_string() });
                }
                Err(e) => {
                    state.set_state(&video_id, ProcessingState::Failed { reason: format!("pipeline job aborted: {e}") });
                }
            }
        });
    }
}
