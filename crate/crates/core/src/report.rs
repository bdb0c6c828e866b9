//! Report documents written by the batch commands.
//!
//! Every report is a JSON object with a `header` (toolkit version and
//! wall-clock timestamp) and a `body`. Bodies are deterministic for identical
//! inputs and configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::codmetrics::{self, CodScores};
use crate::controls::CONTRAST_LAMBDA;
use crate::corpus::{EntryFailure, Subset, MASK_THRESHOLD};
use crate::divergence::HistogramConfig;
use crate::error::Result;
use crate::featstats::{KernelConfig, FID_JITTER, SQRT_RESIDUAL_LIMIT};
use crate::retrieval::COVERAGE_THRESHOLD;
use crate::stats;
use crate::structural::SsimConfig;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub toolkit_version: String,
    /// Seconds since the Unix epoch.
    pub generated_at: u64,
}

impl ReportHeader {
    pub fn now() -> Self {
        Self {
            toolkit_version: TOOLKIT_VERSION.to_string(),
            generated_at: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<B> {
    pub header: ReportHeader,
    pub body: B,
}

impl<B: Serialize> Report<B> {
    pub fn new(body: B) -> Self {
        Self {
            header: ReportHeader::now(),
            body,
        }
    }

    pub fn body_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.body)?)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Every parameter that affects a reported number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSnapshot {
    pub histogram: HistogramConfig,
    pub kl_log_base: String,
    pub mask_threshold: u8,
    pub ssim: SsimConfig,
    pub ssim_input: String,
    pub kid: KernelConfig,
    pub fid_jitter: f64,
    pub fid_sqrt_residual_limit: f64,
    pub coverage_threshold: f64,
    pub contrast_lambda: f64,
    pub cod: CodParams,
    pub notes: Vec<String>,
}

impl ConfigSnapshot {
    pub fn new(histogram: HistogramConfig, kid: KernelConfig) -> Self {
        Self {
            histogram,
            kl_log_base: "e".into(),
            mask_threshold: MASK_THRESHOLD,
            ssim: SsimConfig::default(),
            ssim_input: "luminance 0.299R+0.587G+0.114B, valid windows only".into(),
            kid,
            fid_jitter: FID_JITTER,
            fid_sqrt_residual_limit: SQRT_RESIDUAL_LIMIT,
            coverage_threshold: COVERAGE_THRESHOLD,
            contrast_lambda: CONTRAST_LAMBDA,
            cod: CodParams::default(),
            notes: vec![
                "masks binarized at >= 128 (soft masks are not used)".into(),
                "KL_BF = mean over RGB of KL(background || foreground), per-region histograms".into(),
                "KID is the unbiased MMD^2 estimate and may be negative; not clamped".into(),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodParams {
    pub f_beta2: f64,
    pub f_threshold: String,
    pub e_measure: String,
    pub wf_beta2: f64,
    pub wf_kernel: usize,
    pub wf_sigma: f64,
    pub s_alpha: f64,
}

impl Default for CodParams {
    fn default() -> Self {
        Self {
            f_beta2: codmetrics::F_BETA2,
            f_threshold: "adaptive min(1, 2*mean), zero never positive".into(),
            e_measure: "mean over 256 thresholds (value > t/255)".into(),
            wf_beta2: codmetrics::WF_BETA2,
            wf_kernel: codmetrics::WF_KERNEL_SIZE,
            wf_sigma: codmetrics::WF_KERNEL_SIGMA,
            s_alpha: codmetrics::S_ALPHA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRow {
    pub id: String,
    pub subset: Subset,
    pub ok: bool,
    pub kl_r: Option<f64>,
    pub kl_g: Option<f64>,
    pub kl_b: Option<f64>,
    pub kl_bf: Option<f64>,
    pub ssim: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureProvenance {
    pub path: PathBuf,
    pub sha256: String,
    pub count: usize,
    pub dim: usize,
    pub preprocessing: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SetMetrics {
    pub real_count: usize,
    pub gen_count: usize,
    pub fid: Option<f64>,
    pub fid_jittered: bool,
    pub kid_mean: Option<f64>,
    pub kid_stddev: Option<f64>,
    pub kid_block_size: Option<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub images: usize,
    pub failed: usize,
    pub kl_bf_mean: Option<f64>,
    pub ssim_mean: Option<f64>,
    pub ssim_count: usize,
    pub features: Option<SetMetrics>,
}

impl Aggregate {
    /// Row-derived fields, folded in row order.
    pub fn from_rows<'a>(rows: impl Iterator<Item = &'a ImageRow>) -> Self {
        let mut agg = Aggregate::default();
        let mut kl = Vec::new();
        let mut ssim = Vec::new();
        for row in rows {
            agg.images += 1;
            if !row.ok {
                agg.failed += 1;
            }
            kl.extend(row.kl_bf);
            ssim.extend(row.ssim);
        }
        agg.kl_bf_mean = stats::mean(&kl);
        agg.ssim_mean = stats::mean(&ssim);
        agg.ssim_count = ssim.len();
        agg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSection {
    pub manifest: PathBuf,
    pub features_real: Option<FeatureProvenance>,
    pub features_gen: Option<FeatureProvenance>,
    pub rows: Vec<ImageRow>,
    /// Keyed by subset name, in reporting order.
    pub subsets: BTreeMap<String, Aggregate>,
    pub overall: Aggregate,
    pub failures: Vec<EntryFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodRow {
    pub id: String,
    pub subset: Subset,
    pub scores: Option<CodScores>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodAggregate {
    pub images: usize,
    pub failed: usize,
    pub means: Option<CodScores>,
}

impl CodAggregate {
    pub fn from_rows<'a>(rows: impl Iterator<Item = &'a CodRow>) -> Self {
        let mut images = 0;
        let mut scores = Vec::new();
        for row in rows {
            images += 1;
            scores.extend(row.scores);
        }
        CodAggregate {
            images,
            failed: images - scores.len(),
            means: (!scores.is_empty()).then(|| codmetrics::mean_scores(&scores)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodSection {
    pub pred_dir: PathBuf,
    pub rows: Vec<CodRow>,
    pub subsets: BTreeMap<String, CodAggregate>,
    pub overall: CodAggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalBody {
    pub config: ConfigSnapshot,
    pub generation: Option<GenerationSection>,
    pub cod: Option<CodSection>,
}

impl EvalBody {
    pub fn failed_rows(&self) -> usize {
        let gen = self.generation.as_ref().map_or(0, |g| g.overall.failed);
        let cod = self.cod.as_ref().map_or(0, |c| c.overall.failed);
        gen + cod
    }
}

pub type EvalReport = Report<EvalBody>;

/// Subset keys prefixed so they sort in reporting order.
pub fn subset_key(subset: Subset) -> String {
    let rank = Subset::ALL.iter().position(|s| *s == subset).unwrap_or(0);
    format!("{}_{}", rank + 1, subset)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// Per-image rows as CSV.
pub fn write_rows_csv(path: &Path, rows: &[ImageRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["id", "subset", "ok", "kl_r", "kl_g", "kl_b", "kl_bf", "ssim", "error"])?;
    for r in rows {
        w.write_record([
            r.id.clone(),
            r.subset.to_string(),
            r.ok.to_string(),
            fmt_opt(r.kl_r),
            fmt_opt(r.kl_g),
            fmt_opt(r.kl_b),
            fmt_opt(r.kl_bf),
            fmt_opt(r.ssim),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One line per subset plus `overall`, FID / KID / SSIM / KL_BF columns.
pub fn write_summary_csv(path: &Path, section: &GenerationSection) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["subset", "images", "failed", "fid", "kid_mean", "kid_stddev", "ssim_mean", "kl_bf_mean"])?;
    let named = section
        .subsets
        .iter()
        .map(|(k, v)| (k.split_once('_').map_or(k.as_str(), |(_, n)| n), v))
        .chain(std::iter::once(("overall", &section.overall)));
    for (name, agg) in named {
        let f = agg.features.as_ref();
        w.write_record([
            name.to_string(),
            agg.images.to_string(),
            agg.failed.to_string(),
            fmt_opt(f.and_then(|m| m.fid)),
            fmt_opt(f.and_then(|m| m.kid_mean)),
            fmt_opt(f.and_then(|m| m.kid_stddev)),
            fmt_opt(agg.ssim_mean),
            fmt_opt(agg.kl_bf_mean),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_cod_csv(path: &Path, rows: &[CodRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["id", "subset", "mae", "s_alpha", "e_phi", "f_beta", "f_beta_w", "error"])?;
    for r in rows {
        let s = r.scores.as_ref();
        w.write_record([
            r.id.clone(),
            r.subset.to_string(),
            fmt_opt(s.map(|s| s.mae)),
            fmt_opt(s.map(|s| s.s_alpha)),
            fmt_opt(s.map(|s| s.e_phi)),
            fmt_opt(s.map(|s| s.f_beta)),
            fmt_opt(s.map(|s| s.f_beta_w)),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
