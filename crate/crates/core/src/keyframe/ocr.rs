use serde::{Deserialize, Serialize};

use super::detect::Keyframe;
use crate::chapter::{locate_chapter, ChapterAnnotation, ChapterId};
use crate::extract::{ocr_lines, AdapterError, OcrAdapter};

/// OCR text of the keyframes that fall into one chapter, in time order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChapterTextBundle {
    pub chapter_id: ChapterId,
    pub title: String,
    pub start: f64,
    pub keyframe_texts: Vec<(f64, Vec<String>)>,
}

impl ChapterTextBundle {
    pub fn is_empty(&self) -> bool {
        self.keyframe_texts.is_empty()
    }

    /// All recognized lines, flattened in keyframe order.
    pub fn lines(&self) -> Vec<String> {
        self.keyframe_texts
            .iter()
            .flat_map(|(_, lines)| lines.iter().cloned())
            .collect()
    }
}

pub fn encode_png(width: u32, height: u32, pixels: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width, height);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().expect("in-memory PNG header");
        writer.write_image_data(pixels).expect("in-memory PNG data");
    }
    out
}

/// Decodes an 8-bit grayscale PNG into `(width, height, pixels)`.
pub fn decode_png(bytes: &[u8]) -> Result<(u32, u32, Vec<u8>), String> {
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(|e| e.to_string())?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| "PNG too large".to_string())?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(|e| e.to_string())?;
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(format!(
            "expected 8-bit grayscale PNG, got {:?} {:?}",
            info.color_type, info.bit_depth
        ));
    }
    buf.truncate(info.buffer_size());
    Ok((info.width, info.height, buf))
}

/// Buckets keyframes into chapters by their time stamp: the chapter whose
/// `[start, end)` contains it, else the nearest preceding chapter, else the
/// first chapter. Every chapter gets a bundle, possibly empty.
pub fn bucket_by_chapter(keyframes: &[Keyframe], chapters: &[ChapterAnnotation]) -> Vec<ChapterTextBundle> {
    let mut bundles: Vec<ChapterTextBundle> = chapters
        .iter()
        .map(|c| ChapterTextBundle {
            chapter_id: c.chapter_id.clone(),
            title: c.title.clone(),
            start: c.start,
            keyframe_texts: Vec::new(),
        })
        .collect();
    if bundles.is_empty() {
        return bundles;
    }
    for kf in keyframes {
        let at = locate_chapter(chapters, kf.video_time);
        bundles[at]
            .keyframe_texts
            .push((kf.video_time, kf.ocr_text.clone()));
    }
    bundles
}

/// Runs OCR on every keyframe and buckets the text by chapter. Any adapter
/// failure fails the whole call.
pub fn ocr_keyframes(
    keyframes: &mut [Keyframe],
    chapters: &[ChapterAnnotation],
    ocr: &dyn OcrAdapter,
) -> Result<Vec<ChapterTextBundle>, AdapterError> {
    let texts = keyframes
        .iter()
        .map(|kf| ocr_lines(ocr, &encode_png(kf.width, kf.height, &kf.bitmap)))
        .collect::<Result<Vec<_>, _>>()?;
    for (kf, text) in keyframes.iter_mut().zip(texts) {
        kf.ocr_text = text;
    }
    Ok(bucket_by_chapter(keyframes, chapters))
}
