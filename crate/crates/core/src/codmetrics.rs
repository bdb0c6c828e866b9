//! Camouflaged/salient object detection scores: MAE, S-measure, mean
//! E-measure, adaptive F-measure and weighted F-measure.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{open_gray, RegionMask};
use crate::error::{Error, Result};

/// β² for the adaptive F-measure.
pub const F_BETA2: f64 = 0.3;
/// β² for the weighted F-measure.
pub const WF_BETA2: f64 = 1.0;
/// Balance between the object and region terms of the S-measure.
pub const S_ALPHA: f64 = 0.5;
pub const E_THRESHOLDS: usize = 256;
pub const WF_KERNEL_SIZE: usize = 7;
pub const WF_KERNEL_SIGMA: f64 = 5.0;
/// Background errors are amplified by `2 - exp(WF_DECAY * distance)`.
pub const WF_DECAY: f64 = -std::f64::consts::LN_2 / 5.0;

const EPS: f64 = f64::EPSILON;

/// Soft prediction in [0, 1], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl PredictionMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if values.len() != width * height {
            return Err(Error::DimensionMismatch {
                what: "prediction length",
                expected: (width * height).to_string(),
                actual: values.len().to_string(),
            });
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Parse(format!("prediction value {v} outside [0, 1]")));
        }
        Ok(Self { width, height, values })
    }

    /// 8-bit grayscale, divided by 255.
    pub fn from_gray(width: usize, height: usize, gray: &[u8]) -> Result<Self> {
        Self::new(width, height, gray.iter().map(|&v| v as f64 / 255.0).collect())
    }

    pub fn from_mask(mask: &RegionMask) -> Self {
        Self {
            width: mask.width(),
            height: mask.height(),
            values: mask.as_slice().iter().map(|&v| v as f64).collect(),
        }
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

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn complement(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|v| 1.0 - v).collect(),
        }
    }

    fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

fn check(pred: &PredictionMap, gt: &RegionMask) -> Result<()> {
    if pred.dims() != gt.dims() {
        return Err(Error::dims("prediction vs ground truth", gt.dims(), pred.dims()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodScores {
    pub mae: f64,
    pub s_alpha: f64,
    pub e_phi: f64,
    pub f_beta: f64,
    pub f_beta_w: f64,
}

pub fn mae(pred: &PredictionMap, gt: &RegionMask) -> Result<f64> {
    check(pred, gt)?;
    let sum: f64 = pred
        .values
        .iter()
        .zip(gt.as_slice())
        .map(|(p, &g)| (p - g as f64).abs())
        .sum();
    Ok(sum / pred.values.len() as f64)
}

/// F-measure after binarizing at `min(1, 2 * mean(pred))`. Zero-valued
/// pixels never count as positive, so an all-zero map scores 0.
pub fn f_measure(pred: &PredictionMap, gt: &RegionMask) -> Result<f64> {
    check(pred, gt)?;
    if gt.foreground_count() == 0 {
        return Err(Error::EmptyGroundTruth);
    }
    let threshold = (2.0 * pred.mean()).min(1.0);
    let (mut tp, mut positives) = (0usize, 0usize);
    for (&p, &g) in pred.values.iter().zip(gt.as_slice()) {
        if p >= threshold && p > 0.0 {
            positives += 1;
            tp += g as usize;
        }
    }
    if tp == 0 {
        return Ok(0.0);
    }
    let precision = tp as f64 / positives as f64;
    let recall = tp as f64 / gt.foreground_count() as f64;
    Ok((1.0 + F_BETA2) * precision * recall / (F_BETA2 * precision + recall))
}

/// Structure measure: object-aware and region-aware similarity.
pub fn s_measure(pred: &PredictionMap, gt: &RegionMask) -> Result<f64> {
    check(pred, gt)?;
    let fg = gt.foreground_count();
    if fg == 0 {
        return Ok(1.0 - pred.mean());
    }
    if fg == gt.pixel_count() {
        return Ok(pred.mean());
    }
    let score = S_ALPHA * s_object(pred, gt) + (1.0 - S_ALPHA) * s_region(pred, gt);
    Ok(score.max(0.0))
}

fn s_object(pred: &PredictionMap, gt: &RegionMask) -> f64 {
    let u = gt.foreground_count() as f64 / gt.pixel_count() as f64;
    let mut fg = Vec::with_capacity(gt.foreground_count());
    let mut bg = Vec::with_capacity(gt.background_count());
    for (&p, &g) in pred.values.iter().zip(gt.as_slice()) {
        if g == 1 {
            fg.push(p);
        } else {
            bg.push(1.0 - p);
        }
    }
    u * object_similarity(&fg) + (1.0 - u) * object_similarity(&bg)
}

fn object_similarity(values: &[f64]) -> f64 {
    let x = values.iter().sum::<f64>() / values.len() as f64;
    let sigma = sample_variance(values, x).sqrt();
    2.0 * x / (x * x + 1.0 + sigma + EPS)
}

/// `N - 1` variance; a single sample has zero spread.
fn sample_variance(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (values.len() - 1) as f64
}

/// Foreground centroid as 1-based (col, row), rounded half away from zero.
fn centroid(gt: &RegionMask) -> (usize, usize) {
    let (w, h) = gt.dims();
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0.0);
    for y in 0..h {
        for x in 0..w {
            if gt.is_foreground(x, y) {
                sx += x as f64;
                sy += y as f64;
                n += 1.0;
            }
        }
    }
    ((sx / n).round() as usize + 1, (sy / n).round() as usize + 1)
}

fn s_region(pred: &PredictionMap, gt: &RegionMask) -> f64 {
    let (w, h) = gt.dims();
    let (cx, cy) = centroid(gt);
    let area = (w * h) as f64;
    let quadrants = [(0, cx, 0, cy), (cx, w, 0, cy), (0, cx, cy, h), (cx, w, cy, h)];
    let mut score = 0.0;
    for (x0, x1, y0, y1) in quadrants {
        let n = (x1 - x0) * (y1 - y0);
        if n == 0 {
            continue;
        }
        let mut p = Vec::with_capacity(n);
        let mut g = Vec::with_capacity(n);
        for y in y0..y1 {
            for x in x0..x1 {
                p.push(pred.values[y * w + x]);
                g.push(gt.is_foreground(x, y) as u8 as f64);
            }
        }
        score += n as f64 / area * region_ssim(&p, &g);
    }
    score
}

fn region_ssim(pred: &[f64], gt: &[f64]) -> f64 {
    let n = pred.len() as f64;
    let x = pred.iter().sum::<f64>() / n;
    let y = gt.iter().sum::<f64>() / n;
    let (sxx, syy, sxy) = if pred.len() < 2 {
        (0.0, 0.0, 0.0)
    } else {
        let mut acc = (0.0, 0.0, 0.0);
        for (p, g) in pred.iter().zip(gt) {
            acc.0 += (p - x) * (p - x);
            acc.1 += (g - y) * (g - y);
            acc.2 += (p - x) * (g - y);
        }
        (acc.0 / (n - 1.0), acc.1 / (n - 1.0), acc.2 / (n - 1.0))
    };
    let alpha = 4.0 * x * y * sxy;
    let beta = (x * x + y * y) * (sxx + syy);
    if alpha != 0.0 {
        alpha / (beta + EPS)
    } else if beta == 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Mean enhanced-alignment score over the thresholds `t / 255`, `t = 0..=255`
/// (a pixel is positive when its 8-bit value exceeds `t`).
///
/// Within one threshold every pixel falls into one of four (prediction, truth)
/// classes with a constant alignment value, so each threshold costs O(1) after
/// a cumulative histogram.
pub fn e_measure(pred: &PredictionMap, gt: &RegionMask) -> Result<f64> {
    check(pred, gt)?;
    let n = gt.pixel_count() as f64;
    let g = gt.foreground_count() as f64;

    // histograms of quantized prediction values inside / outside the truth
    let mut fg_hist = [0u64; 256];
    let mut bg_hist = [0u64; 256];
    for (&p, &m) in pred.values.iter().zip(gt.as_slice()) {
        let q = quantize(p);
        if m == 1 {
            fg_hist[q] += 1;
        } else {
            bg_hist[q] += 1;
        }
    }
    // fg_ge[t]: count of values >= t
    let mut fg_ge = [0u64; 257];
    let mut bg_ge = [0u64; 257];
    for t in (0..256).rev() {
        fg_ge[t] = fg_ge[t + 1] + fg_hist[t];
        bg_ge[t] = bg_ge[t + 1] + bg_hist[t];
    }

    let mut total = 0.0;
    for t in 0..E_THRESHOLDS {
        let tp = fg_ge[t + 1] as f64;
        let fp = bg_ge[t + 1] as f64;
        let score = if g == 0.0 {
            (n - tp - fp) / n
        } else if g == n {
            (tp + fp) / n
        } else {
            let mean_fm = (tp + fp) / n;
            let mean_gt = g / n;
            let enhanced = |fm: f64, gtv: f64| {
                let a = fm - mean_fm;
                let b = gtv - mean_gt;
                let phi = 2.0 * a * b / (a * a + b * b + EPS);
                (phi + 1.0) * (phi + 1.0) / 4.0
            };
            let fn_ = g - tp;
            let tn = n - g - fp;
            (tp * enhanced(1.0, 1.0) + fp * enhanced(1.0, 0.0) + fn_ * enhanced(0.0, 1.0) + tn * enhanced(0.0, 0.0)) / n
        };
        total += score;
    }
    Ok(total / E_THRESHOLDS as f64)
}

/// Maps [0, 1] back onto 8-bit levels.
pub fn quantize(p: f64) -> usize {
    (p * 255.0).round().clamp(0.0, 255.0) as usize
}

/// Weighted F-measure with dependency and location weighting of errors.
pub fn weighted_f(pred: &PredictionMap, gt: &RegionMask) -> Result<f64> {
    check(pred, gt)?;
    if gt.foreground_count() == 0 {
        return Err(Error::EmptyGroundTruth);
    }
    let (w, h) = gt.dims();
    let m = gt.as_slice();
    let err: Vec<f64> = pred
        .values
        .iter()
        .zip(m)
        .map(|(p, &g)| (p - g as f64).abs())
        .collect();

    let (dist2, nearest) = distance_transform(m, w, h);
    // background pixels take the error of their nearest foreground pixel
    let propagated: Vec<f64> = (0..w * h)
        .map(|i| if m[i] == 1 { err[i] } else { err[nearest[i]] })
        .collect();
    let blurred = correlate_same(&propagated, w, h, &gaussian_kernel(WF_KERNEL_SIZE, WF_KERNEL_SIGMA));

    let (mut sum_fg_ew, mut sum_bg_ew) = (0.0, 0.0);
    for i in 0..w * h {
        if m[i] == 1 {
            let e = if blurred[i] < err[i] { blurred[i] } else { err[i] };
            sum_fg_ew += e;
        } else {
            let importance = 2.0 - (WF_DECAY * dist2[i].sqrt()).exp();
            sum_bg_ew += err[i] * importance;
        }
    }
    let fg = gt.foreground_count() as f64;
    let tp_w = fg - sum_fg_ew;
    let recall = 1.0 - sum_fg_ew / fg;
    let precision = tp_w / (EPS + tp_w + sum_bg_ew);
    Ok((1.0 + WF_BETA2) * recall * precision / (EPS + recall + WF_BETA2 * precision))
}

/// Normalized `size x size` Gaussian taps, row-major.
fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let mut k: Vec<f64> = (0..size * size)
        .map(|i| {
            let dy = (i / size) as f64 - c;
            let dx = (i % size) as f64 - c;
            (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Same-size 2-D correlation with zero padding.
fn correlate_same(src: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let size = (kernel.len() as f64).sqrt() as usize;
    let r = (size / 2) as isize;
    let mut out = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for ky in -r..=r {
                let sy = y + ky;
                if sy < 0 || sy >= h as isize {
                    continue;
                }
                for kx in -r..=r {
                    let sx = x + kx;
                    if sx < 0 || sx >= w as isize {
                        continue;
                    }
                    acc += kernel[((ky + r) as usize) * size + (kx + r) as usize] * src[sy as usize * w + sx as usize];
                }
            }
            out[y as usize * w + x as usize] = acc;
        }
    }
    out
}

/// Exact squared Euclidean distance from every pixel to the nearest
/// foreground pixel, and that pixel's flat index. Separable lower-envelope
/// algorithm; requires at least one foreground pixel. Among equidistant
/// foreground pixels the smallest column wins, then the smallest row.
pub fn distance_transform(mask: &[u8], w: usize, h: usize) -> (Vec<f64>, Vec<usize>) {
    // column pass: nearest foreground row within each column
    let mut col_d2 = vec![f64::INFINITY; w * h];
    let mut col_row = vec![usize::MAX; w * h];
    for x in 0..w {
        let mut last: Option<usize> = None;
        for y in 0..h {
            if mask[y * w + x] == 1 {
                last = Some(y);
            }
            if let Some(r) = last {
                col_row[y * w + x] = r;
                col_d2[y * w + x] = ((y - r) * (y - r)) as f64;
            }
        }
        let mut next: Option<usize> = None;
        for y in (0..h).rev() {
            if mask[y * w + x] == 1 {
                next = Some(y);
            }
            if let Some(r) = next {
                let d2 = ((r - y) * (r - y)) as f64;
                if d2 < col_d2[y * w + x] {
                    col_d2[y * w + x] = d2;
                    col_row[y * w + x] = r;
                }
            }
        }
    }

    // row pass: lower envelope of parabolas f(q) + (x - q)^2 over finite columns
    let mut dist2 = vec![0.0; w * h];
    let mut nearest = vec![0usize; w * h];
    let mut v = vec![0usize; w];
    let mut z = vec![0.0f64; w + 1];
    for y in 0..h {
        let f = |q: usize| col_d2[y * w + q];
        let mut k: isize = -1;
        for q in 0..w {
            if !f(q).is_finite() {
                continue;
            }
            loop {
                if k < 0 {
                    k = 0;
                    v[0] = q;
                    z[0] = f64::NEG_INFINITY;
                    z[1] = f64::INFINITY;
                    break;
                }
                let p = v[k as usize];
                let s = ((f(q) + (q * q) as f64) - (f(p) + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
                if s <= z[k as usize] {
                    k -= 1;
                    continue;
                }
                k += 1;
                v[k as usize] = q;
                z[k as usize] = s;
                z[k as usize + 1] = f64::INFINITY;
                break;
            }
        }
        let mut j = 0usize;
        for x in 0..w {
            while z[j + 1] < x as f64 {
                j += 1;
            }
            let q = v[j];
            let dx = x as f64 - q as f64;
            dist2[y * w + x] = dx * dx + f(q);
            nearest[y * w + x] = col_row[y * w + q] * w + q;
        }
    }
    (dist2, nearest)
}

pub fn cod_scores(pred: &PredictionMap, gt: &RegionMask) -> Result<CodScores> {
    Ok(CodScores {
        mae: mae(pred, gt)?,
        s_alpha: s_measure(pred, gt)?,
        e_phi: e_measure(pred, gt)?,
        f_beta: f_measure(pred, gt)?,
        f_beta_w: weighted_f(pred, gt)?,
    })
}

/// Arithmetic means of the per-pair scores.
pub fn cod_evaluate(pairs: &[(PredictionMap, RegionMask)]) -> Result<CodScores> {
    if pairs.is_empty() {
        return Err(Error::EmptyList);
    }
    let scores = pairs
        .iter()
        .map(|(p, g)| cod_scores(p, g))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean_scores(&scores))
}

pub fn mean_scores(scores: &[CodScores]) -> CodScores {
    let n = scores.len() as f64;
    let avg = |f: fn(&CodScores) -> f64| scores.iter().map(f).sum::<f64>() / n;
    CodScores {
        mae: avg(|s| s.mae),
        s_alpha: avg(|s| s.s_alpha),
        e_phi: avg(|s| s.e_phi),
        f_beta: avg(|s| s.f_beta),
        f_beta_w: avg(|s| s.f_beta_w),
    }
}
