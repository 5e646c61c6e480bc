//! Adapter protocol for the external services the pipeline depends on.
//!
//! Every adapter speaks JSON: a typed request goes out, a JSON value comes
//! back, and the typed helpers in this module validate the reply against its
//! schema. Anything that does not validate is a
//! [`AdapterError::Malformed`] reply.

use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::graph::{normalize_name, Quiz};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdapterError {
    #[error("adapter unavailable: {0}")]
    Unavailable(String),
    #[error("malformed adapter reply: {0}")]
    Malformed(String),
}

/// Text recognition on one keyframe. The request is a PNG image, the reply a
/// JSON array of text lines in reading order.
pub trait OcrAdapter: Send + Sync {
    fn recognize(&self, png: &[u8]) -> Result<Value, AdapterError>;
}

/// Language-model backed concept extraction.
pub trait ConceptExtractorAdapter: Send + Sync {
    fn call(&self, request: &ExtractorRequest) -> Result<Value, AdapterError>;
}

/// Encyclopedia title search and introduction lookup.
pub trait EncyclopediaAdapter: Send + Sync {
    fn call(&self, request: &EncyclopediaRequest) -> Result<Value, AdapterError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ExtractorRequest {
    /// Reply: `{"subtopics": [string]}`
    Subtopics {
        chapter_id: String,
        title: String,
        text: Vec<String>,
    },
    /// Reply: `{"concepts": [string], "edges": [[prerequisite, dependent]]}`
    Concepts {
        chapter_id: String,
        title: String,
        subtopics: Vec<String>,
        text: Vec<String>,
    },
    /// Reply: `{"name": string}`, one of `candidates`.
    Canonicalize {
        title: String,
        candidates: Vec<String>,
    },
    /// Reply: `{"associations": [string]}` with at least one entry.
    Associations {
        concept: String,
        chapter_title: String,
    },
    /// Reply: `{"definition": string}`
    Definition { concept: String, intro: String },
    /// Reply: `{"question": string, "answer": string, "explanation": string}`
    Quiz { concept: String, definition: String },
    /// Reply: `{"prerequisites": [string]}`
    Prerequisites { concept: String, definition: String },
}

impl ExtractorRequest {
    pub fn op(&self) -> &'static str {
        match self {
            Self::Subtopics { .. } => "subtopics",
            Self::Concepts { .. } => "concepts",
            Self::Canonicalize { .. } => "canonicalize",
            Self::Associations { .. } => "associations",
            Self::Definition { .. } => "definition",
            Self::Quiz { .. } => "quiz",
            Self::Prerequisites { .. } => "prerequisites",
        }
    }

    /// Lookup key used by fixture tables: `op:subject`, where the subject is
    /// the chapter id, the encyclopedia title, or the normalized concept name.
    pub fn key(&self) -> String {
        let subject = match self {
            Self::Subtopics { chapter_id, .. } | Self::Concepts { chapter_id, .. } => chapter_id.clone(),
            Self::Canonicalize { title, .. } => title.clone(),
            Self::Associations { concept, .. }
            | Self::Definition { concept, .. }
            | Self::Quiz { concept, .. }
            | Self::Prerequisites { concept, .. } => normalize_name(concept),
        };
        format!("{}:{}", self.op(), subject)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EncyclopediaRequest {
    /// Reply: `{"title": string | null}`
    Search { name: String },
    /// Reply: `{"intro": string | null}`
    Intro { title: String },
}

impl EncyclopediaRequest {
    pub fn key(&self) -> String {
        match self {
            Self::Search { name } => format!("search:{}", normalize_name(name)),
            Self::Intro { title } => format!("intro:{title}"),
        }
    }
}

fn parse<T: DeserializeOwned>(what: &str, reply: Value) -> Result<T, AdapterError> {
    serde_json::from_value(reply).map_err(|e| AdapterError::Malformed(format!("{what}: {e}")))
}

fn non_blank(what: &str, items: Vec<String>) -> Result<Vec<String>, AdapterError> {
    if items.iter().any(|s| s.trim().is_empty()) {
        return Err(AdapterError::Malformed(format!("{what}: blank entry")));
    }
    Ok(items)
}

pub fn ocr_lines(ocr: &dyn OcrAdapter, png: &[u8]) -> Result<Vec<String>, AdapterError> {
    parse("ocr lines", ocr.recognize(png)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptsReply {
    pub concepts: Vec<String>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
}

#[derive(Deserialize)]
struct SubtopicsReply {
    subtopics: Vec<String>,
}

#[derive(Deserialize)]
struct NameReply {
    name: String,
}

#[derive(Deserialize)]
struct AssociationsReply {
    associations: Vec<String>,
}

#[derive(Deserialize)]
struct DefinitionReply {
    definition: String,
}

#[derive(Deserialize)]
struct PrerequisitesReply {
    prerequisites: Vec<String>,
}

#[derive(Deserialize)]
struct TitleReply {
    title: Option<String>,
}

#[derive(Deserialize)]
struct IntroReply {
    intro: Option<String>,
}

/// The three adapters a pipeline run needs.
#[derive(Clone)]
pub struct AdapterSet {
    pub ocr: Arc<dyn OcrAdapter>,
    pub extractor: Arc<dyn ConceptExtractorAdapter>,
    pub encyclopedia: Arc<dyn EncyclopediaAdapter>,
}

impl std::fmt::Debug for AdapterSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("AdapterSet")
    }
}

/// Typed extractor calls.
pub struct Extractor<'a>(pub &'a dyn ConceptExtractorAdapter);

impl Extractor<'_> {
    pub fn subtopics(&self, chapter_id: &str, title: &str, text: &[String]) -> Result<Vec<String>, AdapterError> {
        let reply: SubtopicsReply = parse(
            "subtopics",
            self.0.call(&ExtractorRequest::Subtopics {
                chapter_id: chapter_id.into(),
                title: title.into(),
                text: text.to_vec(),
            })?,
        )?;
        non_blank("subtopics", reply.subtopics)
    }

    /// Concepts and intra-chapter edges. Every edge endpoint must name a
    /// returned concept.
    pub fn concepts(
        &self,
        chapter_id: &str,
        title: &str,
        subtopics: &[String],
        text: &[String],
    ) -> Result<ConceptsReply, AdapterError> {
        let reply: ConceptsReply = parse(
            "concepts",
            self.0.call(&ExtractorRequest::Concepts {
                chapter_id: chapter_id.into(),
                title: title.into(),
                subtopics: subtopics.to_vec(),
                text: text.to_vec(),
            })?,
        )?;
        let concepts = non_blank("concepts", reply.concepts)?;
        let known: std::collections::BTreeSet<String> = concepts.iter().map(|c| normalize_name(c)).collect();
        for (u, v) in &reply.edges {
            for end in [u, v] {
                if !known.contains(&normalize_name(end)) {
                    return Err(AdapterError::Malformed(format!(
                        "concepts: edge {u} -> {v} names {end:?}, which is not a returned concept"
                    )));
                }
            }
        }
        Ok(ConceptsReply {
            concepts,
            edges: reply.edges,
        })
    }

    pub fn canonicalize(&self, title: &str, candidates: &[String]) -> Result<String, AdapterError> {
        let reply: NameReply = parse(
            "canonicalize",
            self.0.call(&ExtractorRequest::Canonicalize {
                title: title.into(),
                candidates: candidates.to_vec(),
            })?,
        )?;
        if reply.name.trim().is_empty() {
            return Err(AdapterError::Malformed("canonicalize: blank name".into()));
        }
        Ok(reply.name)
    }

    pub fn associations(&self, concept: &str, chapter_title: &str) -> Result<Vec<String>, AdapterError> {
        let reply: AssociationsReply = parse(
            "associations",
            self.0.call(&ExtractorRequest::Associations {
                concept: concept.into(),
                chapter_title: chapter_title.into(),
            })?,
        )?;
        if reply.associations.is_empty() {
            return Err(AdapterError::Malformed("associations: empty list".into()));
        }
        non_blank("associations", reply.associations)
    }

    pub fn definition(&self, concept: &str, intro: &str) -> Result<String, AdapterError> {
        let reply: DefinitionReply = parse(
            "definition",
            self.0.call(&ExtractorRequest::Definition {
                concept: concept.into(),
                intro: intro.into(),
            })?,
        )?;
        Ok(reply.definition)
    }

    pub fn quiz(&self, concept: &str, definition: &str) -> Result<Quiz, AdapterError> {
        parse(
            "quiz",
            self.0.call(&ExtractorRequest::Quiz {
                concept: concept.into(),
                definition: definition.into(),
            })?,
        )
    }

    pub fn prerequisites(&self, concept: &str, definition: &str) -> Result<Vec<String>, AdapterError> {
        let reply: PrerequisitesReply = parse(
            "prerequisites",
            self.0.call(&ExtractorRequest::Prerequisites {
                concept: concept.into(),
                definition: definition.into(),
            })?,
        )?;
        non_blank("prerequisites", reply.prerequisites)
    }
}

/// Typed encyclopedia calls.
pub struct Encyclopedia<'a>(pub &'a dyn EncyclopediaAdapter);

impl Encyclopedia<'_> {
    pub fn search(&self, name: &str) -> Result<Option<String>, AdapterError> {
        let reply: TitleReply = parse(
            "search",
            self.0.call(&EncyclopediaRequest::Search { name: name.into() })?,
        )?;
        Ok(reply.title)
    }

    pub fn intro(&self, title: &str) -> Result<Option<String>, AdapterError> {
        let reply: IntroReply = parse(
            "intro",
            self.0.call(&EncyclopediaRequest::Intro { title: title.into() })?,
        )?;
        Ok(reply.intro)
    }
}
