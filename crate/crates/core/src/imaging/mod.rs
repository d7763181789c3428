//! Per-photo computational features: mean HSV and Haar-cascade face counts.

mod accuracy;
mod cascade;
mod color;
mod detect;
mod integral;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use accuracy::{detector_accuracy_report, AccuracyCell, DetectorAccuracyReport, FaceAnnotation, GroupCountDiff, PhotoDetection};
pub use cascade::{CascadeModel, Stage, WeakClassifier, WeightedRect};
pub use color::{hsv_to_rgb, mean_hsv, rgb_to_hsv, Hsv, MeanHsv};
pub use detect::{detect_faces, group_boxes, iou, FaceBox, DetectionParams, GROUPING_IOU};
pub use integral::{luma_plane, IntegralImage, LumaPlane};

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("image dimensions {width}x{height} do not match {pixels} pixels")]
    Dimensions { width: usize, height: usize, pixels: usize },
    #[error("unsupported image format{}", .0.as_deref().map(|f| format!(" ({f})")).unwrap_or_default())]
    UnsupportedFormat(Option<String>),
    #[error("cannot decode image: {0}")]
    Decode(String),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cascade {path}: {message}")]
    Cascade { path: String, message: String },
    #[error("invalid detection parameters: {0}")]
    Params(String),
}

/// An 8-bit RGB raster stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(ImagingError::Dimensions { width, height, pixels: pixels.len() });
        }
        Ok(Self { width, height, pixels })
    }

    /// Builds an image from a per-pixel function of `(x, y)`.
    ///
    /// Panics if either dimension is zero.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self { width, height, pixels }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    /// Decodes PNG or baseline JPEG bytes. Anything else is rejected.
    pub fn decode(bytes: &[u8]) -> Result<Self, ImagingError> {
        let format = image::guess_format(bytes).map_err(|_| ImagingError::UnsupportedFormat(None))?;
        match format {
            image::ImageFormat::Png | image::ImageFormat::Jpeg => {}
            other => return Err(ImagingError::UnsupportedFormat(Some(format!("{other:?}")))),
        }
        let img = image::load_from_memory_with_format(bytes, format)
            .map_err(|e| ImagingError::Decode(e.to_string()))?
            .to_rgb8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        let pixels = img.pixels().map(|p| p.0).collect();
        Self::new(w, h, pixels)
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self, ImagingError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| ImagingError::Io { path: path.to_owned(), source })?;
        Self::decode(&bytes)
    }
}

/// Features extracted from one photo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageFeatures {
    pub mean_hue: f64,
    pub mean_saturation: f64,
    pub mean_brightness: f64,
    pub face_count: u32,
    pub has_face: bool,
}

impl ImageFeatures {
    pub fn new(hsv: MeanHsv, face_count: u32) -> Self {
        Self {
            mean_hue: hsv.mean_hue,
            mean_saturation: hsv.mean_saturation,
            mean_brightness: hsv.mean_brightness,
            face_count,
            has_face: face_count >= 1,
        }
    }
}

pub fn extract_features(image: &RgbImage, cascade: &CascadeModel, params: &DetectionParams) -> ImageFeatures {
    let faces = detect_faces(image, cascade, params);
    ImageFeatures::new(mean_hsv(image), faces.len() as u32)
}

/// Outcome for one photo in a batch; decode failures never abort the batch.
#[derive(Debug)]
pub struct BatchItem {
    pub path: PathBuf,
    pub result: Result<ImageFeatures, ImagingError>,
}

/// Extracts features for many files in parallel, preserving input order.
pub fn extract_batch(paths: &[PathBuf], cascade: &CascadeModel, params: &DetectionParams) -> Vec<BatchItem> {
    paths
        .par_iter()
        .map(|path| BatchItem {
            path: path.clone(),
            result: RgbImage::open(path).map(|img| extract_features(&img, cascade, params)),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_dimensions() {
        assert!(RgbImage::new(2, 2, vec![[0, 0, 0]; 3]).is_err());
        assert!(RgbImage::new(0, 0, vec![]).is_err());
    }

    #[test]
    fn rejects_unknown_bytes() {
        assert!(matches!(RgbImage::decode(b"definitely not an image"), Err(ImagingError::UnsupportedFormat(_))));
        // GIF magic is recognized but not accepted
        assert!(matches!(
            RgbImage::decode(b"GIF89a\x01\x00\x01\x00\x00\x00\x00;"),
            Err(ImagingError::UnsupportedFormat(Some(_)))
        ));
    }

    #[test]
    fn truncated_png_is_decode_error() {
        let mut bytes = Vec::new();
        let img = image::RgbImage::from_pixel(8, 8, image::Rgb([10, 20, 30]));
        img.write_to(&mut std::io::Cursor::new(&mut bytes), image::ImageFormat::Png).unwrap();
        let decoded = RgbImage::decode(&bytes).unwrap();
        assert_eq!(decoded.pixel(3, 3), [10, 20, 30]);
        bytes.truncate(bytes.len() / 2);
        assert!(matches!(RgbImage::decode(&bytes), Err(ImagingError::Decode(_))));
    }

    #[test]
    fn feature_record_face_flag() {
        let hsv = MeanHsv { mean_hue: 0.0, mean_saturation: 1.0, mean_brightness: 1.0 };
        assert!(!ImageFeatures::new(hsv, 0).has_face);
        assert!(ImageFeatures::new(hsv, 3).has_face);
    }
}
