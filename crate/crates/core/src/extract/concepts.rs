//! Concept identification: per-chapter extraction, global merge with
//! disambiguation, association nodes, definitions and quizzes, and hidden
//! prerequisites mined from definitions.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::adapter::{AdapterError, ConceptExtractorAdapter, Encyclopedia, EncyclopediaAdapter, Extractor};
use crate::chapter::ChapterId;
use crate::graph::{build_dag, normalize_name, ConceptNode, DependencyGraph, GraphError, NodeId, NodeKind};
use crate::keyframe::ChapterTextBundle;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtractError {
    #[error(transparent)]
    Adapter(#[from] AdapterError),
    #[error("chapter {0} has no keyframe text")]
    EmptyBundle(ChapterId),
    #[error("no chapter results to merge")]
    NoChapters,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A non-fatal problem met while building the graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Warning {
    pub stage: String,
    pub subject: String,
    pub message: String,
}

impl Warning {
    pub fn new(stage: &str, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            stage: stage.into(),
            subject: subject.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] {}: {}", self.stage, self.subject, self.message)
    }
}

/// Subtopics, course concepts and intra-chapter edges of one chapter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChapterConcepts {
    pub chapter_id: ChapterId,
    pub title: String,
    pub start: f64,
    pub subtopics: Vec<String>,
    pub concepts: Vec<String>,
    pub edges: Vec<(String, String)>,
}

/// Two passes over one chapter's text: first the subtopics, then the
/// concepts (with their prerequisite edges) relevant to those subtopics.
pub fn extract_chapter_concepts(
    bundle: &ChapterTextBundle,
    extractor: &dyn ConceptExtractorAdapter,
) -> Result<ChapterConcepts, ExtractError> {
    if bundle.is_empty() {
        return Err(ExtractError::EmptyBundle(bundle.chapter_id.clone()));
    }
    let ex = Extractor(extractor);
    let text = bundle.lines();
    let id = bundle.chapter_id.as_str();
    let subtopics = ex.subtopics(id, &bundle.title, &text)?;
    let reply = ex.concepts(id, &bundle.title, &subtopics, &text)?;
    Ok(ChapterConcepts {
        chapter_id: bundle.chapter_id.clone(),
        title: bundle.title.clone(),
        start: bundle.start,
        subtopics,
        concepts: reply.concepts,
        edges: reply.edges,
    })
}

/// Unifies per-chapter results into one skeleton graph of course nodes.
///
/// Identical names (case and whitespace insensitive) merge directly. Names
/// the encyclopedia resolves to the same article are then merged under a
/// canonical name chosen by the extractor. If the encyclopedia is down, only
/// exact-name merging happens and a warning is returned.
pub fn disambiguate_and_merge(
    chapter_results: &[ChapterConcepts],
    encyclopedia: &dyn EncyclopediaAdapter,
    extractor: &dyn ConceptExtractorAdapter,
) -> Result<(DependencyGraph, Vec<Warning>), ExtractError> {
    if chapter_results.is_empty() {
        return Err(ExtractError::NoChapters);
    }
    let mut ordered: Vec<&ChapterConcepts> = chapter_results.iter().collect();
    ordered.sort_by(|a, b| a.start.total_cmp(&b.start).then_with(|| a.chapter_id.cmp(&b.chapter_id)));

    // exact merge: normalized name -> (display name, chapters), first seen wins
    let mut exact: Vec<(String, String, BTreeSet<ChapterId>)> = Vec::new();
    let mut slot: BTreeMap<String, usize> = BTreeMap::new();
    for r in &ordered {
        for c in &r.concepts {
            let key = normalize_name(c);
            let i = *slot.entry(key.clone()).or_insert_with(|| {
                exact.push((key, c.clone(), BTreeSet::new()));
                exact.len() - 1
            });
            exact[i].2.insert(r.chapter_id.clone());
        }
    }

    let mut warnings = Vec::new();
    // normalized name -> canonical display name
    let mut canonical: BTreeMap<String, String> =
        exact.iter().map(|(k, name, _)| (k.clone(), name.clone())).collect();

    let enc = Encyclopedia(encyclopedia);
    let mut titles: Vec<(String, String)> = Vec::new();
    let mut lookup_failed = false;
    for (key, name, _) in &exact {
        match enc.search(name) {
            Ok(Some(title)) => titles.push((key.clone(), title)),
            Ok(None) => {}
            Err(e) => {
                warnings.push(Warning::new(
                    "disambiguate",
                    name.clone(),
                    format!("encyclopedia lookup failed, using exact-name merging only: {e}"),
                ));
                lookup_failed = true;
                break;
            }
        }
    }
    if !lookup_failed {
        let mut by_title: BTreeMap<String, (String, Vec<String>)> = BTreeMap::new();
        for (key, title) in &titles {
            let entry = by_title
                .entry(normalize_name(title))
                .or_insert_with(|| (title.clone(), Vec::new()));
            entry.1.push(key.clone());
        }
        let ex = Extractor(extractor);
        for (title, keys) in by_title.values() {
            if keys.len() < 2 {
                continue;
            }
            let candidates: Vec<String> = keys.iter().map(|k| canonical[k].clone()).collect();
            let chosen = ex.canonicalize(title, &candidates)?;
            for k in keys {
                canonical.insert(k.clone(), chosen.clone());
            }
        }
    }

    // group by normalized canonical name, keeping first-appearance order
    let mut merged: Vec<(String, BTreeSet<ChapterId>)> = Vec::new();
    let mut merged_slot: BTreeMap<String, usize> = BTreeMap::new();
    for (key, _, chapters) in &exact {
        let name = &canonical[key];
        let i = *merged_slot.entry(normalize_name(name)).or_insert_with(|| {
            merged.push((name.clone(), BTreeSet::new()));
            merged.len() - 1
        });
        merged[i].1.extend(chapters.iter().cloned());
    }
    merged.sort_by(|a, b| normalize_name(&a.0).cmp(&normalize_name(&b.0)).then(a.0.cmp(&b.0)));
    let nodes: Vec<ConceptNode> = merged
        .into_iter()
        .map(|(name, chapters)| {
            let mut n = ConceptNode::new(name, NodeKind::Course);
            n.source_chapters = chapters;
            n
        })
        .collect();

    let edges: Vec<(String, String)> = ordered
        .iter()
        .flat_map(|r| r.edges.iter())
        .map(|(u, v)| {
            let map = |s: &String| canonical.get(&normalize_name(s)).cloned().unwrap_or_else(|| s.clone());
            (map(u), map(v))
        })
        .collect();
    let (graph, rejected) = build_dag(nodes, &edges)?;
    warnings.extend(
        rejected
            .into_iter()
            .map(|r| Warning::new("merge", "edge", r.to_string())),
    );
    Ok((graph, warnings))
}

/// Gives every isolated course node at least one prerequisite: the extractor
/// names association concepts for it, matched by name against existing nodes
/// before new association nodes are created.
pub fn attach_association_nodes(
    graph: &mut DependencyGraph,
    extractor: &dyn ConceptExtractorAdapter,
    chapter_titles: &BTreeMap<ChapterId, String>,
) -> Result<Vec<Warning>, ExtractError> {
    let isolated: Vec<NodeId> = graph
        .nodes()
        .filter(|n| n.kind == NodeKind::Course && graph.degree(&n.id) == 0)
        .map(|n| n.id.clone())
        .collect();
    let ex = Extractor(extractor);
    let mut warnings = Vec::new();
    for course in isolated {
        let node = graph.node(&course).expect("listed above").clone();
        let theme = node
            .source_chapters
            .iter()
            .find_map(|c| chapter_titles.get(c))
            .cloned()
            .unwrap_or_default();
        for name in ex.associations(&node.name, &theme)? {
            let id = match graph.find_by_name(&name) {
                Some(id) => id.clone(),
                None => graph.add_node(ConceptNode::new(name.clone(), NodeKind::Association))?,
            };
            if graph.node(&id).is_some_and(|n| n.kind == NodeKind::Association) {
                let chapters = node.source_chapters.clone();
                graph.node_mut(&id).expect("exists").source_chapters.extend(chapters);
            }
            if let Err(r) = graph.try_add_edge(&id, &course) {
                warnings.push(Warning::new("associate", node.name.clone(), r.to_string()));
            }
        }
        if graph.degree(&course) == 0 {
            return Err(AdapterError::Malformed(format!(
                "associations for {:?} left it isolated",
                node.name
            ))
            .into());
        }
    }
    Ok(warnings)
}

/// Fills missing definitions (encyclopedia introduction, simplified by the
/// extractor) and quizzes. Course nodes need both; association nodes need a
/// definition and get a quiz when one is available; prerequisite nodes only
/// get a definition. Failures leave the field empty and are reported.
pub fn enrich_definitions(
    graph: &mut DependencyGraph,
    encyclopedia: &dyn EncyclopediaAdapter,
    extractor: &dyn ConceptExtractorAdapter,
) -> Vec<Warning> {
    let enc = Encyclopedia(encyclopedia);
    let ex = Extractor(extractor);
    let mut warnings = Vec::new();
    let ids: Vec<NodeId> = graph.node_ids().cloned().collect();
    for id in ids {
        let node = graph.node(&id).expect("listed above").clone();
        let flag = |w: &mut Vec<Warning>, msg: String| w.push(Warning::new("enrich", id.to_string(), msg));

        let mut definition = node.definition.clone();
        if definition.is_empty() {
            let intro = match enc.search(&node.name) {
                Ok(Some(title)) => match enc.intro(&title) {
                    Ok(Some(intro)) => Some(intro),
                    Ok(None) => {
                        flag(&mut warnings, format!("no introduction for article {title:?}"));
                        None
                    }
                    Err(e) => {
                        flag(&mut warnings, format!("introduction lookup failed: {e}"));
                        None
                    }
                },
                Ok(None) => {
                    flag(&mut warnings, "no encyclopedia article found".into());
                    None
                }
                Err(e) => {
                    flag(&mut warnings, format!("encyclopedia lookup failed: {e}"));
                    None
                }
            };
            if let Some(intro) = intro {
                match ex.definition(&node.name, &intro) {
                    Ok(d) if !d.trim().is_empty() => definition = d,
                    Ok(_) => flag(&mut warnings, "definition reply was empty".into()),
                    Err(e) => flag(&mut warnings, format!("definition failed: {e}")),
                }
            }
            graph.node_mut(&id).expect("exists").definition = definition.clone();
        }

        if node.kind == NodeKind::Prerequisite || node.quiz.is_some() || definition.is_empty() {
            continue;
        }
        match ex.quiz(&node.name, &definition) {
            Ok(q) => graph.node_mut(&id).expect("exists").quiz = Some(q),
            Err(e) if node.kind == NodeKind::Course => flag(&mut warnings, format!("quiz failed: {e}")),
            Err(_) => {}
        }
    }
    warnings
}

/// Mines each skeleton node's definition for prerequisite concepts. A name
/// that already exists gets an edge to the existing node; a new name becomes
/// a prerequisite node. Edges that would close a cycle are dropped with a
/// warning.
pub fn extract_hidden_prerequisites(
    graph: &mut DependencyGraph,
    extractor: &dyn ConceptExtractorAdapter,
) -> Result<Vec<Warning>, ExtractError> {
    let ex = Extractor(extractor);
    let mut warnings = Vec::new();
    let skeleton: Vec<NodeId> = graph.skeleton_ids().cloned().collect();
    for target in skeleton {
        let node = graph.node(&target).expect("listed above").clone();
        if node.definition.is_empty() {
            warnings.push(Warning::new(
                "prerequisites",
                target.to_string(),
                "no definition to mine for prerequisites",
            ));
            continue;
        }
        for name in ex.prerequisites(&node.name, &node.definition)? {
            let id = match graph.find_by_name(&name) {
                Some(id) => id.clone(),
                None => graph.add_node(ConceptNode::new(name.clone(), NodeKind::Prerequisite))?,
            };
            if let Err(r) = graph.try_add_edge(&id, &target) {
                warnings.push(Warning::new("prerequisites", node.name.clone(), r.to_string()));
            }
        }
    }
    Ok(warnings)
}
