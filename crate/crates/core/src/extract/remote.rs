//! Live adapters: JSON over HTTP, or a local OCR subprocess.
//!
//! HTTP adapters POST the request JSON to a single endpoint and expect the
//! reply JSON in the response body. The extractor request additionally
//! carries `model` and `temperature`. The HTTP OCR adapter POSTs the PNG as
//! `image/png`. The subprocess OCR adapter writes the PNG to the child's
//! stdin and reads a JSON array from its stdout.

use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::adapter::{
    AdapterError, AdapterSet, ConceptExtractorAdapter, EncyclopediaAdapter, EncyclopediaRequest,
    ExtractorRequest, OcrAdapter,
};
use super::mock::MockAdapters;

fn client(timeout: Duration) -> Result<reqwest::blocking::Client, AdapterError> {
    reqwest::blocking::Client::builder()
        .timeout(timeout)
        .build()
        .map_err(|e| AdapterError::Unavailable(e.to_string()))
}

fn read_reply(resp: reqwest::blocking::Response) -> Result<Value, AdapterError> {
    let status = resp.status();
    if !status.is_success() {
        return Err(AdapterError::Unavailable(format!("HTTP {status}")));
    }
    let text = resp.text().map_err(|e| AdapterError::Unavailable(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| AdapterError::Malformed(e.to_string()))
}

pub struct HttpExtractor {
    url: String,
    model: String,
    temperature: f64,
    http: reqwest::blocking::Client,
}

impl HttpExtractor {
    pub fn new(url: impl Into<String>, model: impl Into<String>, temperature: f64, timeout: Duration) -> Result<Self, AdapterError> {
        Ok(Self {
            url: url.into(),
            model: model.into(),
            temperature,
            http: client(timeout)?,
        })
    }
}

impl ConceptExtractorAdapter for HttpExtractor {
    fn call(&self, request: &ExtractorRequest) -> Result<Value, AdapterError> {
        let mut body = serde_json::to_value(request).expect("requests serialize");
        body["model"] = Value::from(self.model.clone());
        body["temperature"] = Value::from(self.temperature);
        let resp = self
            .http
            .post(&self.url)
            .json(&body)
            .send()
            .map_err(|e| AdapterError::Unavailable(e.to_string()))?;
        read_reply(resp)
    }
}

pub struct HttpEncyclopedia {
    url: String,
    http: reqwest::blocking::Client,
}

impl HttpEncyclopedia {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Result<Self, AdapterError> {
        Ok(Self {
            url: url.into(),
            http: client(timeout)?,
        })
    }
}

impl EncyclopediaAdapter for HttpEncyclopedia {
    fn call(&self, request: &EncyclopediaRequest) -> Result<Value, AdapterError> {
        let resp = self
            .http
            .post(&self.url)
            .json(request)
            .send()
            .map_err(|e| AdapterError::Unavailable(e.to_string()))?;
        read_reply(resp)
    }
}

pub struct HttpOcr {
    url: String,
    http: reqwest::blocking::Client,
}

impl HttpOcr {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Result<Self, AdapterError> {
        Ok(Self {
            url: url.into(),
            http: client(timeout)?,
        })
    }
}

impl OcrAdapter for HttpOcr {
    fn recognize(&self, png: &[u8]) -> Result<Value, AdapterError> {
        let resp = self
            .http
            .post(&self.url)
            .header(reqwest::header::CONTENT_TYPE, "image/png")
            .body(png.to_vec())
            .send()
            .map_err(|e| AdapterError::Unavailable(e.to_string()))?;
        read_reply(resp)
    }
}

pub struct CommandOcr {
    argv: Vec<String>,
}

impl CommandOcr {
    pub fn new(argv: Vec<String>) -> Result<Self, AdapterError> {
        if argv.is_empty() {
            return Err(AdapterError::Unavailable("empty OCR command".into()));
        }
        Ok(Self { argv })
    }
}

impl OcrAdapter for CommandOcr {
    fn recognize(&self, png: &[u8]) -> Result<Value, AdapterError> {
        let mut child = Command::new(&self.argv[0])
            .args(&self.argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| AdapterError::Unavailable(format!("{}: {e}", self.argv[0])))?;
        {
            let mut stdin = child.stdin.take().expect("stdin is piped");
            // A child that exits without reading its input surfaces below.
            let _ = stdin.write_all(png);
        }
        let out = child
            .wait_with_output()
            .map_err(|e| AdapterError::Unavailable(e.to_string()))?;
        if !out.status.success() {
            return Err(AdapterError::Unavailable(format!(
                "OCR command exited with {}: {}",
                out.status,
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        serde_json::from_slice(&out.stdout).map_err(|e| AdapterError::Malformed(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OcrEndpoint {
    Http(String),
    Command(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractorEndpoint {
    pub url: String,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
}

fn default_model() -> String {
    "gpt-4-turbo".into()
}

fn default_temperature() -> f64 {
    0.4
}

fn default_timeout() -> u64 {
    120
}

/// Contents of an adapter configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterConfig {
    pub ocr: OcrEndpoint,
    pub extractor: ExtractorEndpoint,
    pub encyclopedia: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

impl AdapterConfig {
    pub fn build(&self) -> Result<AdapterSet, AdapterError> {
        let timeout = Duration::from_secs(self.timeout_secs);
        let ocr: Arc<dyn OcrAdapter> = match &self.ocr {
            OcrEndpoint::Http(url) => Arc::new(HttpOcr::new(url, timeout)?),
            OcrEndpoint::Command(argv) => Arc::new(CommandOcr::new(argv.clone())?),
        };
        Ok(AdapterSet {
            ocr,
            extractor: Arc::new(HttpExtractor::new(
                &self.extractor.url,
                &self.extractor.model,
                self.extractor.temperature,
                timeout,
            )?),
            encyclopedia: Arc::new(HttpEncyclopedia::new(&self.encyclopedia, timeout)?),
        })
    }
}

/// Resolves an `--adapters` value: `mock:<fixture-dir>` or the path of an
/// [`AdapterConfig`] JSON file.
pub fn adapters_from_spec(spec: &str) -> Result<AdapterSet, AdapterError> {
    if let Some(dir) = spec.strip_prefix("mock:") {
        return Ok(MockAdapters::load(Path::new(dir))?.into_set());
    }
    let text = std::fs::read_to_string(spec)
        .map_err(|e| AdapterError::Unavailable(format!("adapter config {spec}: {e}")))?;
    let config: AdapterConfig = serde_json::from_str(&text)
        .map_err(|e| AdapterError::Malformed(format!("adapter config {spec}: {e}")))?;
    config.build()
}
