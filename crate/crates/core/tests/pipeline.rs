use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::Value;
use tsconnect_core::extract::{adapters_from_spec, AdapterError, AdapterSet, ConceptExtractorAdapter, ExtractError, ExtractorRequest};
use tsconnect_core::graph::{GraphDocument, NodeId, NodeKind};
use tsconnect_core::keyframe::load_frame_stream;
use tsconnect_core::pipeline::{run_pipeline, PipelineError, ProcessParams};
use tsconnect_core::{ChapterAnnotation, ChapterId};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/course")
}

fn adapters() -> AdapterSet {
    adapters_from_spec(&format!("mock:{}", fixture().join("adapters").display())).unwrap()
}

fn deck() -> tsconnect_core::keyframe::FrameSequence {
    let file = std::fs::File::open(fixture().join("deck.tscf")).unwrap();
    load_frame_stream("deck", std::io::BufReader::new(file)).unwrap()
}

fn chapters() -> Vec<ChapterAnnotation> {
    serde_json::from_str(&std::fs::read_to_string(fixture().join("chapters.json")).unwrap()).unwrap()
}

#[test]
fn fixture_course_matches_the_golden_graph() {
    let seq = deck();
    let a = run_pipeline(&seq, &chapters(), &adapters(), &ProcessParams::default()).unwrap();
    let b = run_pipeline(&seq, &chapters(), &adapters(), &ProcessParams::default()).unwrap();
    let golden = std::fs::read_to_string(fixture().join("graph.json")).unwrap();
    assert_eq!(a.document.to_json(), golden);
    assert_eq!(b.document.to_json(), golden);
    assert_eq!(a.warnings, b.warnings);
    assert_eq!(a.keyframes, b.keyframes);
    assert_eq!(a.keyframes.len(), 11);
    // the annotated repeat of slide 5 collapses onto the annotated slide
    let merged = a.keyframes.iter().find(|k| k.group_size > 1).unwrap();
    assert_eq!(merged.index, 120);
    assert_eq!(merged.text, ["Residual graph", "Remaining capacity", "backward edges"]);
}

#[test]
fn golden_graph_has_the_expected_shape() {
    let doc = GraphDocument::from_json(&std::fs::read_to_string(fixture().join("graph.json")).unwrap()).unwrap();
    let g = &doc.graph;
    let kind = |id: &str| g.node(&NodeId::new(id)).unwrap().kind;
    // "BFS" and "Breadth-First Search" merged into one concept
    assert!(g.node(&NodeId::new("bfs")).is_none());
    assert_eq!(kind("breadth-first-search"), NodeKind::Course);
    assert_eq!(kind("combinatorics"), NodeKind::Association);
    assert_eq!(kind("queue"), NodeKind::Prerequisite);
    let chapters = |id: &str| -> Vec<String> {
        g.node(&NodeId::new(id)).unwrap().source_chapters.iter().map(|c| c.to_string()).collect()
    };
    assert_eq!(chapters("max-flow"), ["2", "3"]);
    assert_eq!(chapters("breadth-first-search"), ["1", "2"]);
    for n in g.nodes().filter(|n| n.kind != NodeKind::Prerequisite) {
        assert!(!n.definition.is_empty() || n.id.as_str() == "residual-graph", "{} undefined", n.id);
    }
}

#[test]
fn two_chapter_split_tags_concepts_by_chapter() {
    let two = vec![
        ChapterAnnotation::new("1", "Graph Basics", 0.0, 40.0),
        ChapterAnnotation::new("2", "Flows and Matching", 40.0, 120.0),
    ];
    let out = run_pipeline(&deck(), &two, &adapters(), &ProcessParams::default()).unwrap();
    let g = &out.document.graph;
    assert_eq!(
        g.chapters().into_iter().collect::<Vec<_>>(),
        [ChapterId::new("1"), ChapterId::new("2")]
    );
    let tags = |id: &str| -> Vec<String> {
        g.node(&NodeId::new(id)).unwrap().source_chapters.iter().map(|c| c.to_string()).collect()
    };
    assert_eq!(tags("graph"), ["1"]);
    assert_eq!(tags("max-flow"), ["2"]);
    assert_eq!(tags("breadth-first-search"), ["1", "2"]);
    // nothing is extracted for the third chapter id any more
    assert!(g.node(&NodeId::new("bipartite-matching")).is_none());
}

struct Down;

impl ConceptExtractorAdapter for Down {
    fn call(&self, _request: &ExtractorRequest) -> Result<Value, AdapterError> {
        Err(AdapterError::Unavailable("model endpoint unreachable".into()))
    }
}

#[test]
fn extractor_outage_fails_the_run() {
    let mut set = adapters();
    set.extractor = Arc::new(Down);
    let err = run_pipeline(&deck(), &chapters(), &set, &ProcessParams::default()).unwrap_err();
    assert!(matches!(err, PipelineError::Extract(ExtractError::Adapter(AdapterError::Unavailable(_)))), "{err}");
}

#[test]
fn chapters_must_cover_the_video_sensibly() {
    let err = run_pipeline(&deck(), &[], &adapters(), &ProcessParams::default()).unwrap_err();
    assert!(matches!(err, PipelineError::Chapters(_)), "{err}");
}
