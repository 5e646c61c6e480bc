//! External adapters and the concept-identification steps built on them.

mod adapter;
mod concepts;
pub mod mock;
pub mod remote;

pub use adapter::{
    ocr_lines, AdapterError, AdapterSet, ConceptExtractorAdapter, ConceptsReply, Encyclopedia,
    EncyclopediaAdapter, EncyclopediaRequest, Extractor, ExtractorRequest, OcrAdapter,
};
pub use concepts::{
    attach_association_nodes, disambiguate_and_merge, enrich_definitions, extract_chapter_concepts,
    extract_hidden_prerequisites, ChapterConcepts, ExtractError, Warning,
};
pub use mock::{image_key, MockAdapters};
pub use remote::{adapters_from_spec, AdapterConfig};
