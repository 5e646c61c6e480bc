//! Slide keyframes from a raw frame stream, and per-chapter OCR text.

mod detect;
mod ocr;
mod stream;

pub use detect::{
    candidate_frames, dedup_keyframes, default_noise_floor, detect_local_maxima,
    extract_keyframes, frame_difference_series, frame_similarity, hann_kernel, mean_abs_diff,
    smooth_hanning, DetectError, DiffSeries, Keyframe, KeyframeParams,
};
pub use ocr::{bucket_by_chapter, decode_png, encode_png, ocr_keyframes, ChapterTextBundle};
pub use stream::{load_frame_stream, FrameSequence, StreamError, HEADER_LEN, MAGIC};
