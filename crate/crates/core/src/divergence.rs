//! Background/foreground pixel-distribution divergence (KL_BF).
//!
//! For each colour channel the pixels inside the background and inside the
//! foreground are histogrammed separately, smoothed so no bin is empty, and
//! compared with `KL(background || foreground)`. The three channel values are
//! averaged. Lower is better camouflage.

use serde::{Deserialize, Serialize};

use crate::corpus::{ImageBuffer, RegionMask};
use crate::error::{Error, Result};
use crate::stats::Summary;

pub const DEFAULT_BINS: usize = 256;
pub const DEFAULT_EPSILON: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramConfig {
    /// Number of equal-width bins over 0..=255. Must be in 1..=256.
    pub bins: usize,
    /// Added to every normalized bin before renormalizing.
    pub epsilon: f64,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        Self {
            bins: DEFAULT_BINS,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl HistogramConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=256).contains(&self.bins) {
            return Err(Error::Parse(format!("bins must be in 1..=256, got {}", self.bins)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Parse(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }

    #[inline]
    fn bin_of(&self, value: u8) -> usize {
        value as usize * self.bins / 256
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Foreground,
    Background,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    R,
    G,
    B,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::R, Channel::G, Channel::B];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Smoothed probability distribution of one channel over a region.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelHistogram {
    bins: Vec<f64>,
    sample_count: usize,
}

impl ChannelHistogram {
    /// Normalizes raw counts, adds `epsilon` to every bin, and renormalizes.
    pub fn from_counts(counts: &[u64], epsilon: f64) -> Self {
        let n: u64 = counts.iter().sum();
        let norm = 1.0 + counts.len() as f64 * epsilon;
        let bins = counts
            .iter()
            .map(|&c| {
                let freq = if n == 0 { 0.0 } else { c as f64 / n as f64 };
                (freq + epsilon) / norm
            })
            .collect();
        Self {
            bins,
            sample_count: n as usize,
        }
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }
}

pub fn region_histogram(image: &ImageBuffer, mask: &RegionMask, region: Region, channel: Channel) -> Result<ChannelHistogram> {
    region_histogram_with(image, mask, region, channel, &HistogramConfig::default())
}

pub fn region_histogram_with(
    image: &ImageBuffer,
    mask: &RegionMask,
    region: Region,
    channel: Channel,
    cfg: &HistogramConfig,
) -> Result<ChannelHistogram> {
    cfg.validate()?;
    check_dims(image, mask)?;
    let want = (region == Region::Foreground) as u8;
    let mut counts = vec![0u64; cfg.bins];
    for (v, &m) in image.channel(channel.index()).zip(mask.as_slice()) {
        if m == want {
            counts[cfg.bin_of(v)] += 1;
        }
    }
    if counts.iter().all(|&c| c == 0) {
        return Err(Error::EmptyRegion(region_name(region)));
    }
    Ok(ChannelHistogram::from_counts(&counts, cfg.epsilon))
}

fn region_name(region: Region) -> &'static str {
    match region {
        Region::Foreground => "foreground",
        Region::Background => "background",
    }
}

fn check_dims(image: &ImageBuffer, mask: &RegionMask) -> Result<()> {
    if image.dims() != mask.dims() {
        return Err(Error::dims("mask vs image", image.dims(), mask.dims()));
    }
    Ok(())
}

/// `sum_i p_i ln(p_i / q_i)` in nats.
///
/// Both histograms must come from the same [`HistogramConfig`]; smoothing
/// guarantees every bin is positive, so the result is finite.
pub fn kl_divergence(p: &ChannelHistogram, q: &ChannelHistogram) -> f64 {
    assert_eq!(p.bins.len(), q.bins.len(), "histograms over different supports");
    p.bins
        .iter()
        .zip(&q.bins)
        .map(|(&pi, &qi)| if pi == qi { 0.0 } else { pi * (pi / qi).ln() })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlbfResult {
    pub kl_r: f64,
    pub kl_g: f64,
    pub kl_b: f64,
    pub kl_bf: f64,
    pub foreground_pixels: usize,
    pub background_pixels: usize,
}

impl KlbfResult {
    pub fn from_channels(kl: [f64; 3], foreground_pixels: usize, background_pixels: usize) -> Self {
        Self {
            kl_r: kl[0],
            kl_g: kl[1],
            kl_b: kl[2],
            kl_bf: (kl[0] + kl[1] + kl[2]) / 3.0,
            foreground_pixels,
            background_pixels,
        }
    }
}

pub fn klbf(image: &ImageBuffer, mask: &RegionMask) -> Result<KlbfResult> {
    klbf_with(image, mask, &HistogramConfig::default())
}

/// KL_BF with an explicit histogram configuration.
pub fn klbf_with(image: &ImageBuffer, mask: &RegionMask, cfg: &HistogramConfig) -> Result<KlbfResult> {
    cfg.validate()?;
    check_dims(image, mask)?;
    if mask.foreground_count() == 0 {
        return Err(Error::EmptyRegion("foreground"));
    }
    if mask.background_count() == 0 {
        return Err(Error::EmptyRegion("background"));
    }

    // [region][channel][bin], one pass over the image
    let mut counts = vec![[vec![0u64; cfg.bins], vec![0u64; cfg.bins], vec![0u64; cfg.bins]], [
        vec![0u64; cfg.bins],
        vec![0u64; cfg.bins],
        vec![0u64; cfg.bins],
    ]];
    for (px, &m) in image.pixels().zip(mask.as_slice()) {
        let region = &mut counts[m as usize];
        for c in 0..3 {
            region[c][cfg.bin_of(px[c])] += 1;
        }
    }

    let mut kl = [0.0; 3];
    for (c, slot) in kl.iter_mut().enumerate() {
        let background = ChannelHistogram::from_counts(&counts[0][c], cfg.epsilon);
        let foreground = ChannelHistogram::from_counts(&counts[1][c], cfg.epsilon);
        *slot = kl_divergence(&background, &foreground);
    }
    Ok(KlbfResult::from_channels(kl, mask.foreground_count(), mask.background_count()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlbfAggregate {
    pub count: usize,
    pub kl_r: Summary,
    pub kl_g: Summary,
    pub kl_b: Summary,
    pub kl_bf: Summary,
}

pub fn klbf_aggregate(results: &[KlbfResult]) -> Result<KlbfAggregate> {
    if results.is_empty() {
        return Err(Error::EmptyList);
    }
    let column = |f: fn(&KlbfResult) -> f64| {
        let values: Vec<f64> = results.iter().map(f).collect();
        Summary::of(&values).expect("non-empty")
    };
    Ok(KlbfAggregate {
        count: results.len(),
        kl_r: column(|r| r.kl_r),
        kl_g: column(|r| r.kl_g),
        kl_b: column(|r| r.kl_b),
        kl_bf: column(|r| r.kl_bf),
    })
}
