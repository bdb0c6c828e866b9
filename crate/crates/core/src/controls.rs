//! Layout control images.
//!
//! Only the contrast control is computed here. It is a stand-in formulation:
//! the foreground is copied verbatim; in training mode background channels are
//! pulled halfway toward their background mean, and in inference mode the
//! background is painted white. Depth and HED controls come from external
//! models and are only decoded, resized and checked.

use std::path::Path;

use image::imageops::{self, FilterType};
use serde::{Deserialize, Serialize};

use crate::corpus::{ImageBuffer, SampleRecord};
use crate::error::{Error, Result};
use crate::Mode;

/// Background contraction factor toward the channel mean in training mode.
pub const CONTRAST_LAMBDA: f64 = 0.5;
pub const INFERENCE_BACKGROUND: [u8; 3] = [255, 255, 255];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlKind {
    Contrast,
    Depth,
    Hed,
}

impl ControlKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ControlKind::Contrast => "contrast",
            ControlKind::Depth => "depth",
            ControlKind::Hed => "hed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlImage {
    pub kind: ControlKind,
    pub image: ImageBuffer,
    /// Set for computed controls; external controls are mode-independent.
    pub mode: Option<Mode>,
}

pub fn contrast_control(sample: &SampleRecord, mode: Mode) -> Result<ControlImage> {
    contrast_control_with(sample, mode, CONTRAST_LAMBDA)
}

pub fn contrast_control_with(sample: &SampleRecord, mode: Mode, lambda: f64) -> Result<ControlImage> {
    let mask = &sample.mask;
    if mask.foreground_count() == 0 {
        return Err(Error::EmptyMask);
    }
    let mut out = sample.image.clone();
    let (w, h) = out.dims();
    match mode {
        Mode::Inference => {
            for y in 0..h {
                for x in 0..w {
                    if !mask.is_foreground(x, y) {
                        out.set_pixel(x, y, INFERENCE_BACKGROUND);
                    }
                }
            }
        }
        Mode::Training => {
            let mut sums = [0u64; 3];
            for (px, &m) in sample.image.pixels().zip(mask.as_slice()) {
                if m == 0 {
                    for c in 0..3 {
                        sums[c] += px[c] as u64;
                    }
                }
            }
            let n = mask.background_count().max(1) as f64;
            let mean = sums.map(|s| s as f64 / n);
            for y in 0..h {
                for x in 0..w {
                    if mask.is_foreground(x, y) {
                        continue;
                    }
                    let px = sample.image.pixel(x, y);
                    let mut contracted = [0u8; 3];
                    for c in 0..3 {
                        let v = mean[c] + lambda * (px[c] as f64 - mean[c]);
                        contracted[c] = v.round().clamp(0.0, 255.0) as u8;
                    }
                    out.set_pixel(x, y, contracted);
                }
            }
        }
    }
    Ok(ControlImage {
        kind: ControlKind::Contrast,
        image: out,
        mode: Some(mode),
    })
}

/// Decodes an externally produced control image, replicating single-channel
/// input to RGB and bilinearly resizing it to the sample's size.
pub fn validate_control(image_path: &Path, kind: ControlKind, sample: &SampleRecord) -> Result<ControlImage> {
    if kind == ControlKind::Contrast {
        return Err(Error::Parse("contrast controls are computed, not loaded".into()));
    }
    let decoded = image::open(image_path).map_err(|e| Error::Decode {
        path: image_path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let mut rgb = decoded.to_rgb8();
    let (w, h) = sample.image.dims();
    if rgb.dimensions() != (w as u32, h as u32) {
        rgb = imageops::resize(&rgb, w as u32, h as u32, FilterType::Triangle);
    }
    let (rw, rh) = rgb.dimensions();
    Ok(ControlImage {
        kind,
        image: ImageBuffer::new(rw as usize, rh as usize, rgb.into_raw())?,
        mode: None,
    })
}
