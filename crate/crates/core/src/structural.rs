//! Gaussian-windowed SSIM on luminance.
//!
//! Only windows that lie fully inside the image are scored (no padding), and
//! the reported value is the mean of the SSIM map.

use serde::{Deserialize, Serialize};

use crate::corpus::ImageBuffer;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimConfig {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 255.0,
        }
    }
}

impl SsimConfig {
    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }

    /// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
    pub fn kernel(&self) -> Vec<f64> {
        let center = (self.window as f64 - 1.0) / 2.0;
        let taps: Vec<f64> = (0..self.window)
            .map(|i| {
                let d = i as f64 - center;
                (-d * d / (2.0 * self.sigma * self.sigma)).exp()
            })
            .collect();
        let sum: f64 = taps.iter().sum();
        taps.into_iter().map(|t| t / sum).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimResult {
    pub mean_ssim: f64,
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

/// Rec. 601 luma, `0.299 R + 0.587 G + 0.114 B`, as a row-major plane.
pub fn luminance(image: &ImageBuffer) -> Vec<f64> {
    image
        .pixels()
        .map(|[r, g, b]| 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64)
        .collect()
}

pub fn ssim(a: &ImageBuffer, b: &ImageBuffer) -> Result<SsimResult> {
    ssim_with(a, b, &SsimConfig::default())
}

pub fn ssim_with(a: &ImageBuffer, b: &ImageBuffer, cfg: &SsimConfig) -> Result<SsimResult> {
    if a.dims() != b.dims() {
        return Err(Error::dims("ssim operands", a.dims(), b.dims()));
    }
    let (w, h) = a.dims();
    if w.min(h) < cfg.window {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            window: cfg.window,
        });
    }
    let la = luminance(a);
    let lb = luminance(b);
    let map = ssim_map(&la, &lb, w, h, cfg);
    let mean_ssim = map.iter().sum::<f64>() / map.len() as f64;
    Ok(SsimResult {
        mean_ssim,
        window: cfg.window,
        sigma: cfg.sigma,
        k1: cfg.k1,
        k2: cfg.k2,
        dynamic_range: cfg.dynamic_range,
    })
}

/// Per-window SSIM over the valid region, `(w - win + 1) x (h - win + 1)`.
pub fn ssim_map(a: &[f64], b: &[f64], w: usize, h: usize, cfg: &SsimConfig) -> Vec<f64> {
    let kernel = cfg.kernel();
    let win = kernel.len();
    let ow = w - win + 1;
    let oh = h - win + 1;

    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let aa: Vec<f64> = a.iter().map(|x| x * x).collect();
    let bb: Vec<f64> = b.iter().map(|x| x * x).collect();

    let mu_a = filter_valid(a, w, h, &kernel);
    let mu_b = filter_valid(b, w, h, &kernel);
    let e_aa = filter_valid(&aa, w, h, &kernel);
    let e_bb = filter_valid(&bb, w, h, &kernel);
    let e_ab = filter_valid(&ab, w, h, &kernel);

    let (c1, c2) = (cfg.c1(), cfg.c2());
    (0..ow * oh)
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = e_aa[i] - ma * ma;
            let vb = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
        })
        .collect()
}

/// Separable valid-mode correlation with a symmetric kernel.
fn filter_valid(src: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let win = kernel.len();
    let ow = w - win + 1;
    let oh = h - win + 1;
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        let line = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            rows[y * ow + x] = kernel.iter().zip(&line[x..x + win]).map(|(k, v)| k * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = kernel
                .iter()
                .enumerate()
                .map(|(i, k)| k * rows[(y + i) * ow + x])
                .sum();
        }
    }
    out
}
