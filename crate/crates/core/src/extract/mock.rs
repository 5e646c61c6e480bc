//! Table-driven adapters for offline runs and tests.
//!
//! A fixture directory holds up to three JSON objects:
//!
//! - `ocr.json`: image key → array of text lines. The image key is
//!   [`image_key`] of the decoded keyframe.
//! - `extractor.json`: request key (see [`ExtractorRequest::key`]) → reply.
//! - `encyclopedia.json`: request key (see [`EncyclopediaRequest::key`]) →
//!   reply. Missing keys answer as encyclopedia misses (`null`).
//!
//! Missing OCR or extractor keys make the adapter report itself unavailable.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::adapter::{
    AdapterError, AdapterSet, ConceptExtractorAdapter, EncyclopediaAdapter, EncyclopediaRequest,
    ExtractorRequest, OcrAdapter,
};
use crate::keyframe::decode_png;

/// SHA-256 over `width` and `height` (little-endian u32) followed by the
/// grayscale pixels, hex encoded.
pub fn image_key(width: u32, height: u32, pixels: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(width.to_le_bytes());
    h.update(height.to_le_bytes());
    h.update(pixels);
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MockAdapters {
    pub ocr: BTreeMap<String, Value>,
    pub extractor: BTreeMap<String, Value>,
    pub encyclopedia: BTreeMap<String, Value>,
}

impl MockAdapters {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn load(dir: &Path) -> Result<Self, AdapterError> {
        let table = |name: &str| -> Result<BTreeMap<String, Value>, AdapterError> {
            let path = dir.join(name);
            if !path.exists() {
                return Ok(BTreeMap::new());
            }
            let text = std::fs::read_to_string(&path)
                .map_err(|e| AdapterError::Unavailable(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| AdapterError::Malformed(format!("{}: {e}", path.display())))
        };
        if !dir.is_dir() {
            return Err(AdapterError::Unavailable(format!(
                "fixture directory {} not found",
                dir.display()
            )));
        }
        Ok(Self {
            ocr: table("ocr.json")?,
            extractor: table("extractor.json")?,
            encyclopedia: table("encyclopedia.json")?,
        })
    }

    pub fn save(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, table) in [
            ("ocr.json", &self.ocr),
            ("extractor.json", &self.extractor),
            ("encyclopedia.json", &self.encyclopedia),
        ] {
            let mut text = serde_json::to_string_pretty(table).expect("tables serialize");
            text.push('\n');
            std::fs::write(dir.join(name), text)?;
        }
        Ok(())
    }

    pub fn with_ocr(mut self, key: impl Into<String>, lines: &[&str]) -> Self {
        self.ocr.insert(key.into(), json!(lines));
        self
    }

    pub fn with_extractor(mut self, key: impl Into<String>, reply: Value) -> Self {
        self.extractor.insert(key.into(), reply);
        self
    }

    pub fn with_encyclopedia(mut self, key: impl Into<String>, reply: Value) -> Self {
        self.encyclopedia.insert(key.into(), reply);
        self
    }

    pub fn into_set(self) -> AdapterSet {
        let shared = Arc::new(self);
        AdapterSet {
            ocr: shared.clone(),
            extractor: shared.clone(),
            encyclopedia: shared,
        }
    }
}

impl OcrAdapter for MockAdapters {
    fn recognize(&self, png: &[u8]) -> Result<Value, AdapterError> {
        let (w, h, pixels) = decode_png(png).map_err(AdapterError::Malformed)?;
        let key = image_key(w, h, &pixels);
        self.ocr
            .get(&key)
            .cloned()
            .ok_or_else(|| AdapterError::Unavailable(format!("no OCR fixture for image {key}")))
    }
}

impl ConceptExtractorAdapter for MockAdapters {
    fn call(&self, request: &ExtractorRequest) -> Result<Value, AdapterError> {
        let key = request.key();
        self.extractor
            .get(&key)
            .cloned()
            .ok_or_else(|| AdapterError::Unavailable(format!("no extractor fixture for {key}")))
    }
}

impl EncyclopediaAdapter for MockAdapters {
    fn call(&self, request: &EncyclopediaRequest) -> Result<Value, AdapterError> {
        Ok(self.encyclopedia.get(&request.key()).cloned().unwrap_or_else(|| match request {
            EncyclopediaRequest::Search { .. } => json!({ "title": null }),
            EncyclopediaRequest::Intro { .. } => json!({ "intro": null }),
        }))
    }
}
