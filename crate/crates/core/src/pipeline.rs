//! End-to-end run: frame stream and chapters in, laid-out graph out.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::{info, warn};

use crate::chapter::{validate_chapters, ChapterAnnotation, ChapterError};
use crate::extract::{
    attach_association_nodes, disambiguate_and_merge, enrich_definitions, extract_chapter_concepts,
    extract_hidden_prerequisites, AdapterError, AdapterSet, ExtractError, Warning,
};
use crate::graph::{reduce_and_layout, DependencyGraph, GraphDocument, GraphError};
use crate::keyframe::{extract_keyframes, ocr_keyframes, DetectError, FrameSequence, KeyframeParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Chapters(#[from] ChapterError),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error("OCR failed: {0}")]
    Ocr(AdapterError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessParams {
    pub keyframes: KeyframeParams,
    pub hex_side: f64,
}

impl Default for ProcessParams {
    fn default() -> Self {
        Self {
            keyframes: KeyframeParams::default(),
            hex_side: 20.0,
        }
    }
}

/// One line of the keyframe manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyframeEntry {
    pub index: usize,
    pub time: f64,
    pub group_size: usize,
    pub text: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub document: GraphDocument,
    pub keyframes: Vec<KeyframeEntry>,
    pub warnings: Vec<Warning>,
}

pub fn run_pipeline(
    seq: &FrameSequence,
    chapters: &[ChapterAnnotation],
    adapters: &AdapterSet,
    params: &ProcessParams,
) -> Result<PipelineOutput, PipelineError> {
    validate_chapters(chapters)?;
    let mut keyframes = extract_keyframes(seq, &params.keyframes)?;
    info!(count = keyframes.len(), "keyframes extracted");
    let bundles = ocr_keyframes(&mut keyframes, chapters, adapters.ocr.as_ref()).map_err(PipelineError::Ocr)?;

    let mut warnings = Vec::new();
    let mut results = Vec::new();
    for bundle in &bundles {
        if bundle.is_empty() {
            warnings.push(Warning::new(
                "extract",
                bundle.chapter_id.to_string(),
                "chapter has no keyframes; skipped",
            ));
            continue;
        }
        results.push(extract_chapter_concepts(bundle, adapters.extractor.as_ref())?);
    }

    let mut graph = if results.is_empty() {
        DependencyGraph::new()
    } else {
        let (g, w) = disambiguate_and_merge(&results, adapters.encyclopedia.as_ref(), adapters.extractor.as_ref())?;
        warnings.extend(w);
        g
    };
    let titles: BTreeMap<_, _> = chapters
        .iter()
        .map(|c| (c.chapter_id.clone(), c.title.clone()))
        .collect();
    warnings.extend(attach_association_nodes(&mut graph, adapters.extractor.as_ref(), &titles)?);
    warnings.extend(enrich_definitions(&mut graph, adapters.encyclopedia.as_ref(), adapters.extractor.as_ref()));
    warnings.extend(extract_hidden_prerequisites(&mut graph, adapters.extractor.as_ref())?);
    // definitions for the prerequisite nodes just created
    warnings.extend(enrich_definitions(&mut graph, adapters.encyclopedia.as_ref(), adapters.extractor.as_ref()));

    let document = reduce_and_layout(&graph, params.hex_side)?;
    // the second enrichment pass repeats misses from the first
    let mut seen = std::collections::BTreeSet::new();
    warnings.retain(|w| seen.insert(w.clone()));
    for w in &warnings {
        warn!("{w}");
    }
    info!(
        nodes = document.graph.node_count(),
        edges = document.graph.edge_count(),
        "graph built"
    );
    let keyframes = keyframes
        .into_iter()
        .map(|k| KeyframeEntry {
            index: k.frame_index,
            time: k.video_time,
            group_size: k.group_size,
            text: k.ocr_text,
        })
        .collect();
    Ok(PipelineOutput {
        document,
        keyframes,
        warnings,
    })
}
