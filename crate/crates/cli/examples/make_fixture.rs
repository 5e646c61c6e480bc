//! Regenerates the fixture course: a synthetic slide deck, its chapters and
//! the mock adapter tables. With `--golden` it also rewrites the golden
//! `graph.json` from the current pipeline.
//!
//! ```text
//! cargo run -p tsconnect-cli --example make_fixture -- fixtures/course [--golden]
//! ```

use std::path::PathBuf;

use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tsconnect_core::extract::{image_key, MockAdapters};
use tsconnect_core::keyframe::{extract_keyframes, FrameSequence, KeyframeParams};
use tsconnect_core::pipeline::{run_pipeline, ProcessParams};
use tsconnect_core::ChapterAnnotation;

const W: u32 = 96;
const H: u32 = 72;
const FPS: u32 = 2;
const HOLD: usize = 20;

/// Slide text, one entry per slide. Slide 6 is slide 5 with an annotation.
const SLIDES: [&[&str]; 12] = [
    &["Network Flows", "Lecture 7"],
    &["Graphs", "A graph G = (V, E)"],
    &["Paths", "A path visits vertices in order"],
    &["BFS", "Explore neighbours level by level"],
    &["Flow networks", "Capacities on edges"],
    &["Residual graph", "Remaining capacity"],
    &["Residual graph", "Remaining capacity", "backward edges"],
    &["Breadth-First Search", "Shortest augmenting paths"],
    &["Max-Flow", "Ford-Fulkerson method"],
    &["Bipartite matching", "Reduce to Max-Flow"],
    &["Hall's theorem"],
    &["Summary"],
];

fn slide_image(rng: &mut ChaCha8Rng) -> Vec<u8> {
    let mut px = vec![235u8; (W * H) as usize];
    for _ in 0..10 {
        let bw = rng.random_range(20..60);
        let bh = rng.random_range(6..20);
        let x0 = rng.random_range(0..W - bw);
        let y0 = rng.random_range(0..H - bh);
        let shade = rng.random_range(20..90);
        for y in y0..y0 + bh {
            for x in x0..x0 + bw {
                px[(y * W + x) as usize] = shade;
            }
        }
    }
    px
}

fn annotate(base: &[u8]) -> Vec<u8> {
    let mut px = base.to_vec();
    for y in 30..60 {
        for x in 40..90 {
            px[(y * W + x) as usize] = 140;
        }
    }
    px
}

fn chapters() -> Vec<ChapterAnnotation> {
    vec![
        ChapterAnnotation::new("1", "Graph Basics", 0.0, 40.0),
        ChapterAnnotation::new("2", "Flow Networks", 40.0, 90.0),
        ChapterAnnotation::new("3", "Applications", 90.0, 120.0),
    ]
}

fn extractor_table() -> Vec<(&'static str, Value)> {
    let quiz = |q: &str, a: &str, e: &str| json!({"question": q, "answer": a, "explanation": e});
    let def = |d: &str| json!({ "definition": d });
    let pre = |p: &[&str]| json!({ "prerequisites": p });
    vec![
        ("subtopics:1", json!({"subtopics": ["graph representation", "graph traversal"]})),
        ("concepts:1", json!({
            "concepts": ["Graph", "Path", "BFS"],
            "edges": [["Graph", "Path"], ["Graph", "BFS"]]
        })),
        ("subtopics:2", json!({"subtopics": ["flow networks", "augmenting paths"]})),
        ("concepts:2", json!({
            "concepts": ["Flow Network", "Residual Graph", "Breadth-First Search", "Max-Flow"],
            "edges": [
                ["Flow Network", "Residual Graph"],
                ["Residual Graph", "Max-Flow"],
                ["Breadth-First Search", "Max-Flow"],
                ["Flow Network", "Max-Flow"]
            ]
        })),
        ("subtopics:3", json!({"subtopics": ["matching"]})),
        ("concepts:3", json!({
            "concepts": ["Max-Flow", "Bipartite Matching", "Hall's Theorem"],
            "edges": [["Max-Flow", "Bipartite Matching"]]
        })),
        ("canonicalize:Breadth-first search", json!({"name": "Breadth-First Search"})),
        ("associations:hall's theorem", json!({"associations": ["Combinatorics"]})),
        ("definition:graph", def("A set of vertices joined by edges.")),
        ("definition:path", def("A sequence of edges joining a sequence of distinct vertices.")),
        ("definition:breadth-first search", def("A traversal that visits all vertices at one distance before moving further.")),
        ("definition:flow network", def("A directed graph whose edges have capacities and carry a flow.")),
        ("definition:max-flow", def("The largest flow that can be sent from source to sink.")),
        ("definition:bipartite matching", def("A set of edges without common vertices in a two-part graph.")),
        ("definition:hall's theorem", def("A condition for a bipartite graph to have a matching covering one side.")),
        ("definition:combinatorics", def("The mathematics of counting and arranging finite structures.")),
        ("definition:set", def("A collection of distinct objects.")),
        ("definition:sequence", def("An ordered list of objects.")),
        ("definition:queue", def("A first-in first-out collection.")),
        ("definition:directed graph", def("A graph whose edges have a direction.")),
        ("definition:matching", def("A set of edges with no shared endpoints.")),
        ("definition:bipartite graph", def("A graph whose vertices split into two sets with edges only between them.")),
        ("definition:counting", def("Finding the number of elements of a finite set.")),
        ("quiz:graph", quiz("What joins the vertices of a graph?", "Edges", "A graph is a set of vertices joined by edges.")),
        ("quiz:path", quiz("Can a path repeat a vertex?", "No", "A path joins distinct vertices.")),
        ("quiz:breadth-first search", quiz("Which data structure drives BFS?", "A queue", "Vertices are processed first-in first-out.")),
        ("quiz:flow network", quiz("What bounds the flow on an edge?", "Its capacity", "Flow may not exceed capacity.")),
        ("quiz:max-flow", quiz("What equals the maximum flow value?", "The minimum cut capacity", "By the max-flow min-cut theorem.")),
        ("quiz:bipartite matching", quiz("Which problem solves bipartite matching?", "Max-flow", "Add a source and a sink with unit capacities.")),
        ("quiz:hall's theorem", quiz("What must every subset of one side satisfy?", "It has at least as many neighbours", "This is Hall's condition.")),
        ("quiz:combinatorics", quiz("Is counting permutations combinatorics?", "Yes", "It counts arrangements.")),
        ("prerequisites:graph", pre(&["Set", "Path"])),
        ("prerequisites:path", pre(&["Sequence"])),
        ("prerequisites:breadth-first search", pre(&["Queue", "Graph"])),
        ("prerequisites:flow network", pre(&["Directed Graph", "Capacity"])),
        ("prerequisites:max-flow", pre(&["Capacity", "Flow Network"])),
        ("prerequisites:bipartite matching", pre(&["Matching", "Bipartite Graph"])),
        ("prerequisites:hall's theorem", pre(&["Bipartite Graph", "Matching"])),
        ("prerequisites:combinatorics", pre(&["Counting"])),
    ]
}

fn encyclopedia_table() -> Vec<(String, Value)> {
    // residual graph and capacity deliberately have no article
    let articles = [
        ("graph", "Graph (discrete mathematics)"),
        ("path", "Path (graph theory)"),
        ("bfs", "Breadth-first search"),
        ("breadth-first search", "Breadth-first search"),
        ("flow network", "Flow network"),
        ("max-flow", "Maximum flow problem"),
        ("bipartite matching", "Matching (graph theory)"),
        ("hall's theorem", "Hall's marriage theorem"),
        ("combinatorics", "Combinatorics"),
        ("set", "Set (mathematics)"),
        ("sequence", "Sequence"),
        ("queue", "Queue (abstract data type)"),
        ("directed graph", "Directed graph"),
        ("matching", "Matching (graph theory)"),
        ("bipartite graph", "Bipartite graph"),
        ("counting", "Counting"),
    ];
    let mut out = Vec::new();
    for (name, title) in articles {
        out.push((format!("search:{name}"), json!({ "title": title })));
        out.push((
            format!("intro:{title}"),
            json!({ "intro": format!("{title} is a topic in mathematics and computer science.") }),
        ));
    }
    out
}

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "fixtures/course".into()));
    let golden = args.any(|a| a == "--golden");
    std::fs::create_dir_all(&out)?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut images: Vec<Vec<u8>> = Vec::new();
    for i in 0..SLIDES.len() {
        let img = if i == 6 { annotate(&images[5]) } else { slide_image(&mut rng) };
        images.push(img);
    }
    let frames: Vec<Vec<u8>> = images
        .iter()
        .flat_map(|img| std::iter::repeat_n(img.clone(), HOLD))
        .collect();
    let seq = FrameSequence::from_frames("course", W, H, FPS, 1, &frames)?;
    std::fs::write(out.join("deck.tscf"), seq.to_bytes())?;
    let chapters = chapters();
    std::fs::write(
        out.join("chapters.json"),
        serde_json::to_string_pretty(&chapters)? + "\n",
    )?;

    let mut mock = MockAdapters::new();
    for kf in extract_keyframes(&seq, &KeyframeParams::default())? {
        let slide = kf.frame_index / HOLD;
        mock = mock.with_ocr(image_key(W, H, seq.frame(kf.frame_index)), SLIDES[slide]);
    }
    for (k, v) in extractor_table() {
        mock = mock.with_extractor(k, v);
    }
    for (k, v) in encyclopedia_table() {
        mock = mock.with_encyclopedia(k, v);
    }
    mock.save(&out.join("adapters"))?;

    if golden {
        let result = run_pipeline(&seq, &chapters, &mock.into_set(), &ProcessParams::default())?;
        std::fs::write(out.join("graph.json"), result.document.to_json())?;
        for w in &result.warnings {
            eprintln!("warning: {w}");
        }
    }
    println!("fixture written to {}", out.display());
    Ok(())
}
