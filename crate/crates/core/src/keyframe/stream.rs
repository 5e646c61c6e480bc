//! Raw grayscale frame streams ("TSCF").
//!
//! Layout, little-endian:
//!
//! ```text
//! "TSCF" | u32 width | u32 height | u32 fps_num | u32 fps_den | u64 frame_count | frames
//! ```
//!
//! Frames follow the header back to back, each `width * height` bytes,
//! row-major, one byte per pixel.

use std::io::{Read, Write};

use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"TSCF";
pub const HEADER_LEN: usize = 28;

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("stream truncated: expected {expected} payload bytes, got {actual}")]
    TruncatedStream { expected: u64, actual: u64 },
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("stream declares zero frames")]
    ZeroFrames,
    #[error("stream has data after the last frame")]
    TrailingData,
    #[error("frame {index} has {actual} bytes, expected {expected}")]
    FrameSize {
        index: usize,
        expected: usize,
        actual: usize,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Decoded grayscale frames of one lecture video.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSequence {
    pub video_id: String,
    width: u32,
    height: u32,
    fps_num: u32,
    fps_den: u32,
    pixels: Vec<u8>,
}

impl FrameSequence {
    /// Builds a sequence from individual frames; every frame must be
    /// `width * height` bytes and there must be at least one.
    pub fn from_frames(
        video_id: impl Into<String>,
        width: u32,
        height: u32,
        fps_num: u32,
        fps_den: u32,
        frames: &[Vec<u8>],
    ) -> Result<Self, StreamError> {
        check_dims(width, height, fps_num, fps_den)?;
        if frames.is_empty() {
            return Err(StreamError::ZeroFrames);
        }
        let frame_len = width as usize * height as usize;
        let mut pixels = Vec::with_capacity(frame_len * frames.len());
        for (index, f) in frames.iter().enumerate() {
            if f.len() != frame_len {
                return Err(StreamError::FrameSize {
                    index,
                    expected: frame_len,
                    actual: f.len(),
                });
            }
            pixels.extend_from_slice(f);
        }
        Ok(Self {
            video_id: video_id.into(),
            width,
            height,
            fps_num,
            fps_den,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Frame rate as the rational `(num, den)`.
    pub fn fps(&self) -> (u32, u32) {
        (self.fps_num, self.fps_den)
    }

    pub fn frame_len(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn frame_count(&self) -> usize {
        self.pixels.len() / self.frame_len()
    }

    pub fn frame(&self, index: usize) -> &[u8] {
        let len = self.frame_len();
        &self.pixels[index * len..(index + 1) * len]
    }

    pub fn frames(&self) -> impl ExactSizeIterator<Item = &[u8]> {
        self.pixels.chunks_exact(self.frame_len())
    }

    /// Presentation time of a frame in seconds.
    pub fn time_of(&self, index: usize) -> f64 {
        index as f64 * self.fps_den as f64 / self.fps_num as f64
    }

    /// Total duration covered by the frames, in seconds.
    pub fn duration(&self) -> f64 {
        self.time_of(self.frame_count())
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&self.width.to_le_bytes())?;
        out.write_all(&self.height.to_le_bytes())?;
        out.write_all(&self.fps_num.to_le_bytes())?;
        out.write_all(&self.fps_den.to_le_bytes())?;
        out.write_all(&(self.frame_count() as u64).to_le_bytes())?;
        out.write_all(&self.pixels)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(HEADER_LEN + self.pixels.len());
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }
}

fn check_dims(width: u32, height: u32, fps_num: u32, fps_den: u32) -> Result<(), StreamError> {
    if width == 0 || height == 0 {
        return Err(StreamError::BadHeader(format!(
            "frame size {width}x{height} is empty"
        )));
    }
    if fps_num == 0 || fps_den == 0 {
        return Err(StreamError::BadHeader(format!(
            "frame rate {fps_num}/{fps_den} is not positive"
        )));
    }
    Ok(())
}

/// Reads a complete TSCF stream.
pub fn load_frame_stream<R: Read>(
    video_id: impl Into<String>,
    mut source: R,
) -> Result<FrameSequence, StreamError> {
    let mut header = [0u8; HEADER_LEN];
    let mut filled = 0;
    while filled < HEADER_LEN {
        let n = source.read(&mut header[filled..])?;
        if n == 0 {
            return Err(StreamError::BadHeader(format!(
                "header is {filled} bytes, expected {HEADER_LEN}"
            )));
        }
        filled += n;
    }
    if &header[0..4] != MAGIC {
        return Err(StreamError::BadHeader("missing TSCF magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
    let width = u32_at(4);
    let height = u32_at(8);
    let fps_num = u32_at(12);
    let fps_den = u32_at(16);
    let frame_count = u64::from_le_bytes(header[20..28].try_into().unwrap());
    check_dims(width, height, fps_num, fps_den)?;
    if frame_count == 0 {
        return Err(StreamError::ZeroFrames);
    }
    let expected = (width as u64)
        .checked_mul(height as u64)
        .and_then(|px| px.checked_mul(frame_count))
        .ok_or_else(|| StreamError::BadHeader("payload size overflows".into()))?;

    let mut pixels = Vec::new();
    let actual = source.by_ref().take(expected).read_to_end(&mut pixels)? as u64;
    if actual < expected {
        return Err(StreamError::TruncatedStream { expected, actual });
    }
    let mut probe = [0u8; 1];
    if source.read(&mut probe)? != 0 {
        return Err(StreamError::TrailingData);
    }
    Ok(FrameSequence {
        video_id: video_id.into(),
        width,
        height,
        fps_num,
        fps_den,
        pixels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(w: u32, h: u32, num: u32, den: u32, count: u64) -> Vec<u8> {
        let mut b = MAGIC.to_vec();
        for v in [w, h, num, den] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b.extend_from_slice(&count.to_le_bytes());
        b
    }

    #[test]
    fn minimal_stream() {
        let mut bytes = header(4, 4, 1, 1, 2);
        bytes.extend(0..32u8);
        let seq = load_frame_stream("v", bytes.as_slice()).unwrap();
        assert_eq!(seq.frame_count(), 2);
        assert_eq!(seq.frame(1)[0], 16);
        assert_eq!(seq.to_bytes(), bytes);
    }

    #[test]
    fn off_by_one_payload() {
        let mut bytes = header(4, 4, 1, 1, 2);
        bytes.extend(0..31u8);
        assert!(matches!(
            load_frame_stream("v", bytes.as_slice()),
            Err(StreamError::TruncatedStream { expected: 32, actual: 31 })
        ));
    }

    #[test]
    fn zero_fps_and_zero_frames() {
        let bytes = header(4, 4, 0, 1, 2);
        assert!(matches!(
            load_frame_stream("v", bytes.as_slice()),
            Err(StreamError::BadHeader(_))
        ));
        let bytes = header(4, 4, 1, 1, 0);
        assert!(matches!(
            load_frame_stream("v", bytes.as_slice()),
            Err(StreamError::ZeroFrames)
        ));
    }

    #[test]
    fn bad_magic_short_header_trailing() {
        let mut bytes = header(4, 4, 1, 1, 1);
        bytes[0] = b'X';
        bytes.extend([0u8; 16]);
        assert!(matches!(
            load_frame_stream("v", bytes.as_slice()),
            Err(StreamError::BadHeader(_))
        ));
        assert!(matches!(
            load_frame_stream("v", &b"TSCF\x01"[..]),
            Err(StreamError::BadHeader(_))
        ));
        let mut bytes = header(4, 4, 1, 1, 1);
        bytes.extend([0u8; 17]);
        assert!(matches!(
            load_frame_stream("v", bytes.as_slice()),
            Err(StreamError::TrailingData)
        ));
    }

    #[test]
    fn timing_uses_rational_rate() {
        let seq = FrameSequence::from_frames("v", 1, 1, 30000, 1001, &vec![vec![0]; 4]).unwrap();
        assert!((seq.time_of(3) - 3.0 * 1001.0 / 30000.0).abs() < 1e-15);
    }
}
