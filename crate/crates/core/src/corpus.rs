//! Images, masks, and dataset manifests.
//!
//! A manifest is a JSON-lines file: one object per line with `id`,
//! `image_path`, `mask_path`, `subset` and an optional `reference_path`.
//! Relative paths resolve against the manifest's own directory. Blank lines
//! and lines starting with `#` are ignored.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Masks are binarized with `value >= MASK_THRESHOLD`.
pub const MASK_THRESHOLD: u8 = 128;

/// 8-bit RGB raster, row-major, interleaved.
#[derive(Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl fmt::Debug for ImageBuffer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImageBuffer")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if data.len() != width * height * 3 {
            return Err(Error::DimensionMismatch {
                what: "rgb buffer length",
                expected: (width * height * 3).to_string(),
                actual: data.len().to_string(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        Self::from_fn(width, height, |_, _| rgb)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Pixels in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    /// One colour plane (0 = R, 1 = G, 2 = B) in row-major order.
    pub fn channel(&self, c: usize) -> impl Iterator<Item = u8> + '_ {
        self.data.iter().skip(c).step_by(3).copied()
    }

    pub fn open(path: &Path) -> Result<Self> {
        let img = image::open(path).map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let rgb = img.to_rgb8();
        let (w, h) = rgb.dimensions();
        Self::new(w as usize, h as usize, rgb.into_raw())
    }

    pub fn to_rgb_image(&self) -> image::RgbImage {
        image::RgbImage::from_raw(self.width as u32, self.height as u32, self.data.clone())
            .expect("buffer length checked at construction")
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        self.to_rgb_image()
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| Error::Decode {
                path: path.to_path_buf(),
                reason: e.to_string(),
            })
    }
}

/// Binary foreground mask. `1` marks the target.
#[derive(Clone, PartialEq, Eq)]
pub struct RegionMask {
    width: usize,
    height: usize,
    data: Vec<u8>,
    foreground_count: usize,
}

impl fmt::Debug for RegionMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RegionMask")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("foreground_count", &self.foreground_count)
            .finish_non_exhaustive()
    }
}

impl RegionMask {
    /// Any non-zero value counts as foreground.
    pub fn from_binary(width: usize, height: usize, values: &[u8]) -> Result<Self> {
        Self::from_fn_checked(width, height, values, |v| v != 0)
    }

    /// Binarizes an 8-bit grayscale raster at [`MASK_THRESHOLD`].
    pub fn from_gray(width: usize, height: usize, values: &[u8]) -> Result<Self> {
        Self::from_fn_checked(width, height, values, |v| v >= MASK_THRESHOLD)
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y) as u8);
            }
        }
        Self::from_binary(width, height, &values)
    }

    pub fn full(width: usize, height: usize) -> Result<Self> {
        Self::from_fn(width, height, |_, _| true)
    }

    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Self::from_fn(width, height, |_, _| false)
    }

    fn from_fn_checked(width: usize, height: usize, values: &[u8], pred: impl Fn(u8) -> bool) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if values.len() != width * height {
            return Err(Error::DimensionMismatch {
                what: "mask buffer length",
                expected: (width * height).to_string(),
                actual: values.len().to_string(),
            });
        }
        let data: Vec<u8> = values.iter().map(|&v| pred(v) as u8).collect();
        let foreground_count = data.iter().filter(|&&v| v == 1).count();
        Ok(Self {
            width,
            height,
            data,
            foreground_count,
        })
    }

    pub fn open(path: &Path) -> Result<Self> {
        let (w, h, gray) = open_gray(path)?;
        Self::from_gray(w, h, &gray)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn foreground_count(&self) -> usize {
        self.foreground_count
    }

    pub fn background_count(&self) -> usize {
        self.pixel_count() - self.foreground_count
    }

    pub fn is_foreground(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] == 1
    }

    /// Row-major `{0, 1}` values.
    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    pub fn inverted(&self) -> Self {
        let data: Vec<u8> = self.data.iter().map(|&v| 1 - v).collect();
        Self {
            width: self.width,
            height: self.height,
            foreground_count: self.pixel_count() - self.foreground_count,
            data,
        }
    }

    /// Writes the mask as a {0, 255} grayscale PNG.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let raw: Vec<u8> = self.data.iter().map(|&v| v * 255).collect();
        image::GrayImage::from_raw(self.width as u32, self.height as u32, raw)
            .expect("dimensions match")
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| Error::Decode {
                path: path.to_path_buf(),
                reason: e.to_string(),
            })
    }
}

pub(crate) fn open_gray(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let img = image::open(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let gray = img.to_luma8();
    let (w, h) = gray.dimensions();
    if w == 0 || h == 0 {
        return Err(Error::EmptyImage);
    }
    Ok((w as usize, h as usize, gray.into_raw()))
}

/// Nearest-neighbour resampling of a single-channel raster. Destination pixel
/// centres map back to `floor((d + 0.5) * src / dst)`.
pub fn resize_nearest(src: &[u8], src_w: usize, src_h: usize, dst_w: usize, dst_h: usize) -> Vec<u8> {
    let xs: Vec<usize> = (0..dst_w).map(|x| nearest_index(x, src_w, dst_w)).collect();
    let mut out = Vec::with_capacity(dst_w * dst_h);
    for y in 0..dst_h {
        let sy = nearest_index(y, src_h, dst_h);
        let row = &src[sy * src_w..(sy + 1) * src_w];
        out.extend(xs.iter().map(|&sx| row[sx]));
    }
    out
}

fn nearest_index(dst: usize, src_len: usize, dst_len: usize) -> usize {
    (((2 * dst + 1) * src_len) / (2 * dst_len)).min(src_len - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    Camouflaged,
    Salient,
    General,
}

impl Subset {
    pub const ALL: [Subset; 3] = [Subset::Camouflaged, Subset::Salient, Subset::General];

    pub fn as_str(self) -> &'static str {
        match self {
            Subset::Camouflaged => "camouflaged",
            Subset::Salient => "salient",
            Subset::General => "general",
        }
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub image_path: PathBuf,
    pub mask_path: PathBuf,
    pub subset: Subset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_path: Option<PathBuf>,
    /// Externally produced depth control, validated by `controls`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_path: Option<PathBuf>,
    /// Externally produced HED control, validated by `controls`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hed_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_path: Option<PathBuf>,
}

impl ManifestEntry {
    pub fn new(id: impl Into<String>, image_path: impl Into<PathBuf>, mask_path: impl Into<PathBuf>, subset: Subset) -> Self {
        Self {
            id: id.into(),
            image_path: image_path.into(),
            mask_path: mask_path.into(),
            subset,
            reference_path: None,
            depth_path: None,
            hed_path: None,
            control_path: None,
        }
    }

    pub fn with_reference(mut self, path: impl Into<PathBuf>) -> Self {
        self.reference_path = Some(path.into());
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetManifest {
    /// Directory that relative entry paths resolve against.
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn new(root: impl Into<PathBuf>, entries: Vec<ManifestEntry>) -> Self {
        Self {
            root: root.into(),
            entries,
        }
    }

    pub fn parse(text: &str, root: impl Into<PathBuf>) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let entry: ManifestEntry = serde_json::from_str(line)
                .map_err(|e| Error::Parse(format!("manifest line {}: {e}", lineno + 1)))?;
            entries.push(entry);
        }
        Ok(Self::new(root, entries))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, root)
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for entry in &self.entries {
            out.push_str(&serde_json::to_string(entry)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_jsonl()?)?;
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.root.join(path)
        }
    }

    pub fn load_entry(&self, entry: &ManifestEntry) -> Result<SampleRecord> {
        let mut record = load_sample(&self.resolve(&entry.image_path), &self.resolve(&entry.mask_path))?;
        record.id = entry.id.clone();
        record.subset = entry.subset;
        Ok(record)
    }

    pub fn get(&self, id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.id == id)
    }
}

/// A decoded image with its aligned mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleRecord {
    pub id: String,
    pub image: ImageBuffer,
    pub mask: RegionMask,
    pub subset: Subset,
}

impl SampleRecord {
    pub fn new(id: impl Into<String>, image: ImageBuffer, mask: RegionMask, subset: Subset) -> Result<Self> {
        if image.dims() != mask.dims() {
            return Err(Error::dims("mask vs image", image.dims(), mask.dims()));
        }
        Ok(Self {
            id: id.into(),
            image,
            mask,
            subset,
        })
    }
}

/// Decodes an image and its mask. A mask whose size differs from the image is
/// nearest-neighbour resized to the image size before binarization. The id
/// defaults to the image file stem and the subset to `general`.
pub fn load_sample(image_path: &Path, mask_path: &Path) -> Result<SampleRecord> {
    let image = ImageBuffer::open(image_path)?;
    let (mw, mh, mut gray) = open_gray(mask_path)?;
    let (w, h) = image.dims();
    if (mw, mh) != (w, h) {
        gray = resize_nearest(&gray, mw, mh, w, h);
    }
    let mask = RegionMask::from_gray(w, h, &gray)?;
    let id = image_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    SampleRecord::new(id, image, mask, Subset::General)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetCounts {
    pub camouflaged: usize,
    pub salient: usize,
    pub general: usize,
}

impl SubsetCounts {
    pub fn bump(&mut self, subset: Subset) {
        *self.get_mut(subset) += 1;
    }

    pub fn get(&self, subset: Subset) -> usize {
        match subset {
            Subset::Camouflaged => self.camouflaged,
            Subset::Salient => self.salient,
            Subset::General => self.general,
        }
    }

    fn get_mut(&mut self, subset: Subset) -> &mut usize {
        match subset {
            Subset::Camouflaged => &mut self.camouflaged,
            Subset::Salient => &mut self.salient,
            Subset::General => &mut self.general,
        }
    }

    pub fn total(&self) -> usize {
        self.camouflaged + self.salient + self.general
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryFailure {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub total: usize,
    pub valid: usize,
    /// Valid entries per subset.
    pub subsets: SubsetCounts,
    pub failures: Vec<EntryFailure>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks every entry: unique id, files present and decodable, reference
/// image (if any) the same size as the image.
pub fn validate_manifest(manifest: &DatasetManifest) -> ValidationReport {
    let mut seen = HashSet::new();
    let duplicate: Vec<bool> = manifest
        .entries
        .iter()
        .map(|e| !seen.insert(e.id.as_str()))
        .collect();

    let checks: Vec<Option<String>> = manifest
        .entries
        .par_iter()
        .zip(duplicate.par_iter())
        .map(|(entry, &dup)| {
            if dup {
                return Some("duplicate id".to_string());
            }
            check_entry(manifest, entry).err()
        })
        .collect();

    let mut report = ValidationReport {
        total: manifest.entries.len(),
        ..Default::default()
    };
    for (entry, check) in manifest.entries.iter().zip(checks) {
        match check {
            None => {
                report.valid += 1;
                report.subsets.bump(entry.subset);
            }
            Some(reason) => report.failures.push(EntryFailure {
                id: entry.id.clone(),
                reason,
            }),
        }
    }
    report
}

fn check_entry(manifest: &DatasetManifest, entry: &ManifestEntry) -> Result<(), String> {
    let image_path = manifest.resolve(&entry.image_path);
    let mask_path = manifest.resolve(&entry.mask_path);
    if !image_path.is_file() {
        return Err("image not found".into());
    }
    if !mask_path.is_file() {
        return Err("mask not found".into());
    }
    let record = load_sample(&image_path, &mask_path).map_err(|e| e.to_string())?;
    if let Some(reference) = &entry.reference_path {
        let path = manifest.resolve(reference);
        if !path.is_file() {
            return Err("reference not found".into());
        }
        let reference = ImageBuffer::open(&path).map_err(|e| e.to_string())?;
        if reference.dims() != record.image.dims() {
            return Err(Error::dims("reference vs image", record.image.dims(), reference.dims()).to_string());
        }
    }
    Ok(())
}
