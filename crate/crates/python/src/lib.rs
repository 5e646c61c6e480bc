//! Python bindings: frame streams, keyframe extraction, graph construction
//! and layout, the full pipeline, and the feedback store.

use std::fs::File;
use std::io::BufReader;

use chrono::{DateTime, Utc};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};
use tsconnect_core::extract::adapters_from_spec;
use tsconnect_core::feedback::{
    self, CommentSort, EventKind, FeedbackEvent, FeedbackOp, VideoInfo, Viewer,
};
use tsconnect_core::graph::{
    self, build_dag, chapter_document, layered_layout, render_svg, transitive_reduce, ConceptNode,
    GraphDocument, NodeKind,
};
use tsconnect_core::keyframe::{self, DiffSeries, KeyframeParams};
use tsconnect_core::pipeline::{run_pipeline, ProcessParams};
use tsconnect_core::{ChapterAnnotation, ChapterId};

create_exception!(tsconnect, TsconnectError, PyException, "Raised for any failure inside tsconnect.");

fn err(e: impl std::fmt::Display) -> PyErr {
    TsconnectError::new_err(e.to_string())
}

/// Serializes through JSON into native Python objects.
fn to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn parse_kind(kind: &str) -> PyResult<NodeKind> {
    match kind {
        "course" => Ok(NodeKind::Course),
        "association" => Ok(NodeKind::Association),
        "prerequisite" => Ok(NodeKind::Prerequisite),
        other => Err(PyValueError::new_err(format!("unknown node kind {other:?}"))),
    }
}

/// Decoded grayscale frames of one lecture video.
#[pyclass(name = "FrameSequence", frozen)]
struct PyFrameSequence(keyframe::FrameSequence);

#[pymethods]
impl PyFrameSequence {
    #[new]
    #[pyo3(signature = (video_id, width, height, frames, fps_num=1, fps_den=1))]
    fn new(video_id: &str, width: u32, height: u32, frames: Vec<Vec<u8>>, fps_num: u32, fps_den: u32) -> PyResult<Self> {
        keyframe::FrameSequence::from_frames(video_id, width, height, fps_num, fps_den, &frames)
            .map(Self)
            .map_err(err)
    }

    /// Reads a TSCF file.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let file = File::open(path).map_err(err)?;
        let stem = std::path::Path::new(path).file_stem().and_then(|s| s.to_str()).unwrap_or("video");
        keyframe::load_frame_stream(stem, BufReader::new(file)).map(Self).map_err(err)
    }

    #[getter]
    fn width(&self) -> u32 {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> u32 {
        self.0.height()
    }

    #[getter]
    fn duration(&self) -> f64 {
        self.0.duration()
    }

    fn __len__(&self) -> usize {
        self.0.frame_count()
    }

    fn frame<'py>(&self, py: Python<'py>, index: usize) -> PyResult<Bound<'py, PyBytes>> {
        if index >= self.0.frame_count() {
            return Err(pyo3::exceptions::PyIndexError::new_err(index));
        }
        Ok(PyBytes::new(py, self.0.frame(index)))
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.0.to_bytes())
    }

    /// Keyframes as dicts with `index`, `time` and `group_size`.
    #[pyo3(signature = (window_len=9, dedup_threshold=0.9, noise_floor=None))]
    fn keyframes(&self, py: Python<'_>, window_len: usize, dedup_threshold: f64, noise_floor: Option<f64>) -> PyResult<Vec<Py<PyAny>>> {
        let params = KeyframeParams {
            window_len,
            dedup_threshold,
            noise_floor,
        };
        let found = py.detach(|| keyframe::extract_keyframes(&self.0, &params)).map_err(err)?;
        found
            .iter()
            .map(|k| {
                let d = PyDict::new(py);
                d.set_item("index", k.frame_index)?;
                d.set_item("time", k.video_time)?;
                d.set_item("group_size", k.group_size)?;
                Ok(d.into_any().unbind())
            })
            .collect()
    }
}

/// Normalized Hann window of odd length.
#[pyfunction]
fn hann_kernel(window_len: usize) -> Vec<f64> {
    keyframe::hann_kernel(window_len)
}

#[pyfunction]
fn smooth_hanning(values: Vec<f64>, window_len: usize) -> PyResult<Vec<f64>> {
    keyframe::smooth_hanning(&DiffSeries::raw(values), window_len)
        .map(|s| s.values)
        .map_err(err)
}

/// A concept graph, optionally laid out on the hex grid.
/// Node id, hex q, hex r, pixel x, pixel y.
type Position = (String, i32, i32, f64, f64);

#[pyclass(name = "Graph", frozen)]
struct PyGraph(GraphDocument);

#[pymethods]
impl PyGraph {
    /// Builds a DAG from `(name, kind)` nodes and `(from, to)` edges.
    /// Returns the graph and the rejected edges as messages.
    #[staticmethod]
    fn build(nodes: Vec<(String, String)>, edges: Vec<(String, String)>) -> PyResult<(PyGraph, Vec<String>)> {
        let nodes = nodes
            .into_iter()
            .map(|(name, kind)| Ok(ConceptNode::new(name, parse_kind(&kind)?)))
            .collect::<PyResult<Vec<_>>>()?;
        let (g, rejected) = build_dag(nodes, &edges).map_err(err)?;
        Ok((
            PyGraph(GraphDocument::new(g, None)),
            rejected.iter().map(ToString::to_string).collect(),
        ))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        GraphDocument::from_json(text).map(Self).map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.0.to_value())
    }

    fn to_svg(&self) -> PyResult<String> {
        render_svg(&self.0).map_err(err)
    }

    /// Transitive reduction; drops any layout.
    fn reduce(&self) -> PyResult<PyGraph> {
        Ok(PyGraph(GraphDocument::new(transitive_reduce(&self.0.graph).map_err(err)?, None)))
    }

    /// Skeleton layers, left to right.
    fn layers(&self) -> PyResult<Vec<Vec<String>>> {
        Ok(layered_layout(&self.0.graph)
            .map_err(err)?
            .into_iter()
            .map(|l| l.into_iter().map(|id| id.0).collect())
            .collect())
    }

    /// Reduces and places every node on the hex grid.
    #[pyo3(signature = (side=20.0))]
    fn layout(&self, side: f64) -> PyResult<PyGraph> {
        graph::reduce_and_layout(&self.0.graph, side).map(Self).map_err(err)
    }

    /// Hex cell and pixel centre per node id, or `None` without a layout.
    fn positions(&self) -> Option<Vec<Position>> {
        let layout = self.0.layout.as_ref()?;
        Some(
            layout
                .cells
                .iter()
                .map(|(id, p)| (id.0.clone(), p.q, p.r, p.x, p.y))
                .collect(),
        )
    }

    fn chapter(&self, chapter_id: &str) -> PyResult<PyGraph> {
        if self.0.layout.is_some() {
            chapter_document(&self.0, &ChapterId::new(chapter_id)).map(Self).map_err(err)
        } else {
            graph::chapter_subgraph(&self.0.graph, &ChapterId::new(chapter_id))
                .map(|g| Self(GraphDocument::new(g, None)))
                .map_err(err)
        }
    }

    fn node_ids(&self) -> Vec<String> {
        self.0.graph.node_ids().map(|id| id.0.clone()).collect()
    }

    fn edges(&self) -> Vec<(String, String)> {
        self.0.graph.edges().map(|(u, v)| (u.0.clone(), v.0.clone())).collect()
    }

    fn __len__(&self) -> usize {
        self.0.graph.node_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(nodes={}, edges={}, laid_out={})",
            self.0.graph.node_count(),
            self.0.graph.edge_count(),
            self.0.layout.is_some()
        )
    }
}

/// Runs the whole pipeline on a TSCF file. `adapters` is an adapter config
/// path or `mock:<dir>`. Returns `(graph, keyframes, warnings)`.
#[pyfunction]
#[pyo3(signature = (stream_path, chapters_json, adapters, window_len=9, dedup_threshold=0.9, hex_side=20.0))]
fn process(
    py: Python<'_>,
    stream_path: &str,
    chapters_json: &str,
    adapters: &str,
    window_len: usize,
    dedup_threshold: f64,
    hex_side: f64,
) -> PyResult<(PyGraph, Py<PyAny>, Vec<String>)> {
    let seq = PyFrameSequence::load(stream_path)?.0;
    let chapters: Vec<ChapterAnnotation> = from_json(chapters_json)?;
    let adapters = adapters_from_spec(adapters).map_err(err)?;
    let params = ProcessParams {
        keyframes: KeyframeParams {
            window_len,
            dedup_threshold,
            noise_floor: None,
        },
        hex_side,
    };
    let out = py.detach(|| run_pipeline(&seq, &chapters, &adapters, &params)).map_err(err)?;
    Ok((
        PyGraph(out.document),
        to_py(py, &out.keyframes)?,
        out.warnings.iter().map(ToString::to_string).collect(),
    ))
}

/// Student feedback for registered videos, in SQLite.
#[pyclass(name = "FeedbackStore", unsendable)]
struct PyFeedbackStore(feedback::FeedbackStore);

#[pymethods]
impl PyFeedbackStore {
    /// Opens a store file, or an in-memory store when `path` is omitted.
    #[new]
    #[pyo3(signature = (path=None))]
    fn new(path: Option<&str>) -> PyResult<Self> {
        let store = match path {
            Some(p) => feedback::FeedbackStore::open(std::path::Path::new(p)),
            None => feedback::FeedbackStore::in_memory(),
        };
        store.map(Self).map_err(err)
    }

    #[pyo3(signature = (video_id, duration, chapters_json, concepts))]
    fn register_video(&mut self, video_id: &str, duration: u32, chapters_json: &str, concepts: Vec<String>) -> PyResult<()> {
        let info = VideoInfo {
            video_id: video_id.into(),
            duration,
            chapters: from_json(chapters_json)?,
            concepts,
        };
        self.0.register_video(&info).map_err(err)
    }

    /// `kind` is `play`, `pause` or `rate_change` (with `rate`). Returns
    /// `False` for a duplicate.
    #[pyo3(signature = (pseudonym, video_id, second, kind, wall_time, rate=None))]
    fn record_event(
        &mut self,
        pseudonym: &str,
        video_id: &str,
        second: u32,
        kind: &str,
        wall_time: DateTime<Utc>,
        rate: Option<f64>,
    ) -> PyResult<bool> {
        let kind = match (kind, rate) {
            ("play", _) => EventKind::Play,
            ("pause", _) => EventKind::Pause,
            ("rate_change", Some(new_rate)) => EventKind::RateChange { new_rate },
            ("rate_change", None) => return Err(PyValueError::new_err("rate_change needs a rate")),
            (other, _) => return Err(PyValueError::new_err(format!("unknown event kind {other:?}"))),
        };
        self.0
            .record_event(&FeedbackEvent {
                pseudonym: pseudonym.into(),
                video_id: video_id.into(),
                video_second: second,
                wall_time,
                kind,
            })
            .map_err(err)
    }

    /// Returns the new comment id.
    fn post_comment(&mut self, pseudonym: &str, video_id: &str, second: u32, wall_time: DateTime<Utc>, body: &str) -> PyResult<i64> {
        self.0
            .post_comment(pseudonym, video_id, second, wall_time, body)
            .map(|c| c.comment_id)
            .map_err(err)
    }

    fn delete_comment(&mut self, pseudonym: &str, comment_id: i64, wall_time: DateTime<Utc>) -> PyResult<()> {
        self.0.delete_comment(pseudonym, comment_id, wall_time).map_err(err)
    }

    fn set_marking(&mut self, pseudonym: &str, video_id: &str, concept_id: &str, score: i64, wall_time: DateTime<Utc>) -> PyResult<()> {
        self.0.set_marking(pseudonym, video_id, concept_id, score, wall_time).map(|_| ()).map_err(err)
    }

    /// Applies a list of ops atomically. Each op is a dict with `op` set to
    /// `event`, `comment`, `delete` or `mark`, plus that op's fields.
    fn apply(&mut self, ops: Vec<Bound<'_, PyDict>>) -> PyResult<usize> {
        let ops = ops.iter().map(dict_to_op).collect::<PyResult<Vec<_>>>()?;
        self.0.apply(&ops).map(|r| r.len()).map_err(err)
    }

    #[pyo3(signature = (video_id, viewer=None, sort="submit_time", start=None, end=None))]
    fn comments(
        &self,
        py: Python<'_>,
        video_id: &str,
        viewer: Option<String>,
        sort: &str,
        start: Option<u32>,
        end: Option<u32>,
    ) -> PyResult<Py<PyAny>> {
        let sort: CommentSort = sort.parse().map_err(PyValueError::new_err)?;
        let viewer = viewer.map_or(Viewer::Instructor, Viewer::Student);
        let range = match (start, end) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => return Err(PyValueError::new_err("start and end go together")),
        };
        to_py(py, &self.0.list_comments(video_id, &viewer, sort, range).map_err(err)?)
    }

    /// Timeline and concept aggregates as a dict.
    fn report(&self, py: Python<'_>, video_id: &str) -> PyResult<Py<PyAny>> {
        to_py(py, &self.0.report(video_id).map_err(err)?)
    }

    fn downgrades(&self, py: Python<'_>, video_id: &str) -> PyResult<Py<PyAny>> {
        to_py(py, &self.0.long_interval_downgrades(video_id).map_err(err)?)
    }

    /// The video's history as NDJSON.
    fn export_log(&self, video_id: &str) -> PyResult<String> {
        let mut out = Vec::new();
        feedback::write_log(&feedback::export_log(&self.0, video_id).map_err(err)?, &mut out).map_err(err)?;
        String::from_utf8(out).map_err(err)
    }
}

fn dict_to_op(d: &Bound<'_, PyDict>) -> PyResult<FeedbackOp> {
    fn field<'py, T: FromPyObjectOwned<'py>>(d: &Bound<'py, PyDict>, key: &str) -> PyResult<T> {
        d.get_item(key)?
            .ok_or_else(|| PyValueError::new_err(format!("missing field {key:?}")))?
            .extract()
            .map_err(Into::into)
    }
    let op: String = field(d, "op")?;
    Ok(match op.as_str() {
        "event" => {
            let kind: String = field(d, "kind")?;
            FeedbackOp::Event(FeedbackEvent {
                pseudonym: field(d, "pseudonym")?,
                video_id: field(d, "video_id")?,
                video_second: field(d, "second")?,
                wall_time: field(d, "wall_time")?,
                kind: match kind.as_str() {
                    "play" => EventKind::Play,
                    "pause" => EventKind::Pause,
                    "rate_change" => EventKind::RateChange {
                        new_rate: field(d, "rate")?,
                    },
                    other => return Err(PyValueError::new_err(format!("unknown event kind {other:?}"))),
                },
            })
        }
        "comment" => FeedbackOp::Comment {
            pseudonym: field(d, "pseudonym")?,
            video_id: field(d, "video_id")?,
            video_second: field(d, "second")?,
            wall_time: field(d, "wall_time")?,
            body: field(d, "body")?,
            comment_id: None,
        },
        "delete" => FeedbackOp::DeleteComment {
            pseudonym: field(d, "pseudonym")?,
            comment_id: field(d, "comment_id")?,
            wall_time: field(d, "wall_time")?,
        },
        "mark" => FeedbackOp::Mark {
            pseudonym: field(d, "pseudonym")?,
            video_id: field(d, "video_id")?,
            concept_id: field(d, "concept_id")?,
            score: field(d, "score")?,
            wall_time: field(d, "wall_time")?,
        },
        other => return Err(PyValueError::new_err(format!("unknown op {other:?}"))),
    })
}

/// Replays an NDJSON event log into a fresh store and returns one report
/// per video.
#[pyfunction]
fn replay_report(py: Python<'_>, log: &str) -> PyResult<Py<PyAny>> {
    let reports = feedback::replay_report(log.as_bytes()).map_err(err)?;
    to_py(py, &reports)
}

#[pymodule]
fn tsconnect(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("TsconnectError", m.py().get_type::<TsconnectError>())?;
    m.add_class::<PyFrameSequence>()?;
    m.add_class::<PyGraph>()?;
    m.add_class::<PyFeedbackStore>()?;
    m.add_function(wrap_pyfunction!(hann_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(smooth_hanning, m)?)?;
    m.add_function(wrap_pyfunction!(process, m)?)?;
    m.add_function(wrap_pyfunction!(replay_report, m)?)?;
    Ok(())
}
