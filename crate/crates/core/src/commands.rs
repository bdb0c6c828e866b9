//! Batch commands behind the `camoval` binary. Each takes an options struct,
//! writes its outputs, and returns the report it wrote.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cemb::{CembIndex, CembTensor, IndexedCemb};
use crate::codmetrics::{cod_scores, PredictionMap};
use crate::controls::{contrast_control, validate_control, ControlKind};
use crate::corpus::{validate_manifest, DatasetManifest, EntryFailure, ImageBuffer, Subset, ValidationReport};
use crate::divergence::{klbf_with, HistogramConfig};
use crate::error::{Error, Result};
use crate::featstats::{frechet_distance_detailed, gaussian_stats, kid_mmd2, FeatureSet, KernelConfig};
use crate::fusion::{assemble_prompt, fuse_visual, TokenSequence};
use crate::report::{
    subset_key, write_cod_csv, write_rows_csv, write_summary_csv, Aggregate, CodAggregate, CodRow, CodSection,
    ConfigSnapshot, EvalBody, EvalReport, FeatureProvenance, GenerationSection, ImageRow, Report, SetMetrics,
};
use crate::retrieval::{global_avg_pool, masked_avg_pool, retrieve_topk, KnowledgeBase, RetrievalResult};
use crate::structural::ssim;
use crate::corpus::RegionMask;
use crate::Mode;

pub const WORKERS_ENV: &str = "CAMOVAL_WORKERS";
pub const DEFAULT_K: usize = 3;

/// Runs `f` on a pool of `workers` threads (default: logical cores).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers.filter(|&n| n > 0) {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Parse(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// `<out>` with its extension replaced, e.g. `report.json` -> `report.csv`.
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}{suffix}"))
}

fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

#[derive(Debug, Clone)]
pub struct EvalGenOptions {
    pub manifest: PathBuf,
    pub features_real: Option<PathBuf>,
    pub features_gen: Option<PathBuf>,
    pub out: PathBuf,
    pub histogram: HistogramConfig,
    pub kernel: KernelConfig,
    pub workers: Option<usize>,
}

impl EvalGenOptions {
    pub fn new(manifest: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            manifest: manifest.into(),
            features_real: None,
            features_gen: None,
            out: out.into(),
            histogram: HistogramConfig::default(),
            kernel: KernelConfig::default(),
            workers: None,
        }
    }
}

/// KL_BF and SSIM per image, FID and KID per subset and overall. Writes the
/// JSON report to `out`, rows to `<stem>.csv` and the summary table to
/// `<stem>.summary.csv`.
pub fn cmd_eval_gen(opts: &EvalGenOptions) -> Result<EvalReport> {
    opts.histogram.validate()?;
    let manifest = DatasetManifest::load(&opts.manifest)?;
    let rows = with_workers(opts.workers, || {
        manifest
            .entries
            .par_iter()
            .map(|entry| evaluate_row(&manifest, entry, &opts.histogram))
            .collect::<Vec<_>>()
    })?;

    let mut subsets = BTreeMap::new();
    for subset in Subset::ALL {
        subsets.insert(subset_key(subset), Aggregate::from_rows(rows.iter().filter(|r| r.subset == subset)));
    }
    let mut overall = Aggregate::from_rows(rows.iter());

    let (features_real, features_gen) = match (&opts.features_real, &opts.features_gen) {
        (Some(real), Some(gen)) => {
            let real_file = IndexedCemb::load(real)?;
            let gen_file = IndexedCemb::load(gen)?;
            if real_file.tensor.record_len() != gen_file.tensor.record_len() {
                return Err(Error::DimensionMismatch {
                    what: "feature dim (real vs generated)",
                    expected: real_file.tensor.record_len().to_string(),
                    actual: gen_file.tensor.record_len().to_string(),
                });
            }
            let subset_of: HashMap<&str, Subset> = manifest.entries.iter().map(|e| (e.id.as_str(), e.subset)).collect();
            let real_groups = group_features(&real_file, &subset_of)?;
            let gen_groups = group_features(&gen_file, &subset_of)?;
            for subset in Subset::ALL {
                if let (Some(r), Some(g)) = (real_groups.get(&Some(subset)), gen_groups.get(&Some(subset))) {
                    subsets.get_mut(&subset_key(subset)).unwrap().features = Some(set_metrics(r, g, &opts.kernel));
                }
            }
            overall.features = Some(set_metrics(&real_groups[&None], &gen_groups[&None], &opts.kernel));
            (Some(provenance(real, &real_file)?), Some(provenance(gen, &gen_file)?))
        }
        (None, None) => (None, None),
        _ => return Err(Error::Parse("--features-real and --features-gen must be given together".into())),
    };

    let failures = rows
        .iter()
        .filter(|r| !r.ok)
        .map(|r| EntryFailure {
            id: r.id.clone(),
            reason: r.error.clone().unwrap_or_default(),
        })
        .collect();
    let section = GenerationSection {
        manifest: opts.manifest.clone(),
        features_real,
        features_gen,
        rows,
        subsets,
        overall,
        failures,
    };

    let report = Report::new(EvalBody {
        config: ConfigSnapshot::new(opts.histogram, opts.kernel),
        generation: Some(section),
        cod: None,
    });
    report.save_json(&opts.out)?;
    let section = report.body.generation.as_ref().unwrap();
    write_rows_csv(&sibling(&opts.out, ".csv"), &section.rows)?;
    write_summary_csv(&sibling(&opts.out, ".summary.csv"), section)?;
    info!("eval-gen: {} rows, {} failed", section.rows.len(), section.overall.failed);
    Ok(report)
}

fn evaluate_row(manifest: &DatasetManifest, entry: &crate::corpus::ManifestEntry, cfg: &HistogramConfig) -> ImageRow {
    let mut row = ImageRow {
        id: entry.id.clone(),
        subset: entry.subset,
        ok: true,
        kl_r: None,
        kl_g: None,
        kl_b: None,
        kl_bf: None,
        ssim: None,
        error: None,
    };
    let mut errors = Vec::new();
    match manifest.load_entry(entry) {
        Ok(sample) => {
            match klbf_with(&sample.image, &sample.mask, cfg) {
                Ok(kl) => {
                    row.kl_r = Some(kl.kl_r);
                    row.kl_g = Some(kl.kl_g);
                    row.kl_b = Some(kl.kl_b);
                    row.kl_bf = Some(kl.kl_bf);
                }
                Err(e) => errors.push(format!("kl_bf: {e}")),
            }
            if let Some(reference) = &entry.reference_path {
                let result = ImageBuffer::open(&manifest.resolve(reference)).and_then(|r| ssim(&sample.image, &r));
                match result {
                    Ok(s) => row.ssim = Some(s.mean_ssim),
                    Err(e) => errors.push(format!("ssim: {e}")),
                }
            }
        }
        Err(e) => errors.push(format!("load: {e}")),
    }
    if !errors.is_empty() {
        row.ok = false;
        row.error = Some(errors.join("; "));
        warn!("{}: {}", entry.id, row.error.as_deref().unwrap_or_default());
    }
    row
}

/// Feature rows grouped by subset (`None` = every row used overall). Without
/// a sidecar index only the overall group exists.
fn group_features(file: &IndexedCemb, subset_of: &HashMap<&str, Subset>) -> Result<HashMap<Option<Subset>, FeatureSet>> {
    let all = file.tensor.to_feature_set()?;
    let mut groups = HashMap::new();
    let Some(index) = &file.index else {
        groups.insert(None, all);
        return Ok(groups);
    };
    let mut by_subset: HashMap<Option<Subset>, Vec<usize>> = HashMap::new();
    for (i, id) in index.ids.iter().enumerate() {
        if let Some(&s) = subset_of.get(id.as_str()) {
            by_subset.entry(Some(s)).or_default().push(i);
            by_subset.entry(None).or_default().push(i);
        }
    }
    if by_subset.is_empty() {
        // ids don't match the manifest; fall back to the whole file
        groups.insert(None, all);
        return Ok(groups);
    }
    for (k, idx) in by_subset {
        groups.insert(k, all.select(&idx));
    }
    Ok(groups)
}

fn set_metrics(real: &FeatureSet, gen: &FeatureSet, kernel: &KernelConfig) -> SetMetrics {
    let mut m = SetMetrics {
        real_count: real.count(),
        gen_count: gen.count(),
        ..Default::default()
    };
    let mut errors = Vec::new();
    match gaussian_stats(real).and_then(|a| gaussian_stats(gen).and_then(|b| frechet_distance_detailed(&a, &b))) {
        Ok(f) => {
            m.fid = Some(f.distance);
            m.fid_jittered = f.jittered;
        }
        Err(e) => errors.push(format!("fid: {e}")),
    }
    match kid_mmd2(real, gen, kernel) {
        Ok(k) => {
            m.kid_mean = Some(k.mean);
            m.kid_stddev = Some(k.stddev);
            m.kid_block_size = Some(k.block_size);
        }
        Err(e) => errors.push(format!("kid: {e}")),
    }
    if !errors.is_empty() {
        m.error = Some(errors.join("; "));
    }
    m
}

fn provenance(path: &Path, file: &IndexedCemb) -> Result<FeatureProvenance> {
    Ok(FeatureProvenance {
        path: path.to_path_buf(),
        sha256: sha256_file(path)?,
        count: file.tensor.count,
        dim: file.tensor.record_len(),
        preprocessing: file
            .index
            .as_ref()
            .and_then(|i| i.metadata.get("preprocessing").cloned()),
    })
}

#[derive(Debug, Clone)]
pub struct EvalCodOptions {
    pub manifest: PathBuf,
    pub pred_dir: PathBuf,
    pub out: PathBuf,
    pub workers: Option<usize>,
}

/// Scores `<pred_dir>/<id>.png` against every manifest mask.
pub fn cmd_eval_cod(opts: &EvalCodOptions) -> Result<EvalReport> {
    let manifest = DatasetManifest::load(&opts.manifest)?;
    let pred_path = |id: &str| opts.pred_dir.join(format!("{id}.png"));
    let missing: Vec<String> = manifest
        .entries
        .iter()
        .filter(|e| !pred_path(&e.id).is_file())
        .map(|e| e.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingPrediction(missing));
    }

    let rows = with_workers(opts.workers, || {
        manifest
            .entries
            .par_iter()
            .map(|entry| {
                let scored = RegionMask::open(&manifest.resolve(&entry.mask_path))
                    .and_then(|gt| PredictionMap::open(&pred_path(&entry.id)).map(|p| (p, gt)))
                    .and_then(|(p, gt)| cod_scores(&p, &gt));
                match scored {
                    Ok(s) => CodRow {
                        id: entry.id.clone(),
                        subset: entry.subset,
                        scores: Some(s),
                        error: None,
                    },
                    Err(e) => CodRow {
                        id: entry.id.clone(),
                        subset: entry.subset,
                        scores: None,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect::<Vec<_>>()
    })?;

    let subsets = Subset::ALL
        .into_iter()
        .map(|s| (subset_key(s), CodAggregate::from_rows(rows.iter().filter(|r| r.subset == s))))
        .collect();
    let overall = CodAggregate::from_rows(rows.iter());
    let report = Report::new(EvalBody {
        config: ConfigSnapshot::new(HistogramConfig::default(), KernelConfig::default()),
        generation: None,
        cod: Some(CodSection {
            pred_dir: opts.pred_dir.clone(),
            rows,
            subsets,
            overall,
        }),
    });
    report.save_json(&opts.out)?;
    write_cod_csv(&sibling(&opts.out, ".csv"), &report.body.cod.as_ref().unwrap().rows)?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct RetrieveOptions {
    /// CEMB holding the target's token grid.
    pub target: PathBuf,
    pub target_record: usize,
    /// Foreground mask for masked pooling; without it the grid is pooled globally.
    pub mask: Option<PathBuf>,
    /// Knowledge-base CEMB; grids larger than 1x1 are pooled globally.
    pub base: PathBuf,
    pub k: usize,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalBody {
    pub k: usize,
    pub target: PathBuf,
    pub target_pooling: String,
    pub base: PathBuf,
    pub base_sha256: String,
    pub base_size: usize,
    pub result: RetrievalResult,
}

pub fn cmd_retrieve(opts: &RetrieveOptions) -> Result<Report<RetrievalBody>> {
    let target = CembTensor::load(&opts.target)?.grid(opts.target_record)?;
    let (query, pooling) = match &opts.mask {
        Some(path) => (masked_avg_pool(&target, &RegionMask::open(path)?)?, "masked"),
        None => (global_avg_pool(&target), "global"),
    };
    let base_file = IndexedCemb::load(&opts.base)?;
    let ids = base_file.ids();
    let base = if base_file.tensor.is_pooled() {
        KnowledgeBase::new(ids, base_file.tensor.embeddings()?)?
    } else {
        KnowledgeBase::from_grids(ids, &base_file.tensor.grids()?)?
    };
    let result = retrieve_topk(&query, &base, opts.k)?;
    let report = Report::new(RetrievalBody {
        k: opts.k,
        target: opts.target.clone(),
        target_pooling: pooling.into(),
        base: opts.base.clone(),
        base_sha256: sha256_file(&opts.base)?,
        base_size: base.len(),
        result,
    });
    report.save_json(&opts.out)?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct FuseOptions {
    /// CEMB with the target grid (record 0).
    pub target: PathBuf,
    /// CEMB with one grid per retrieved sample.
    pub retrieved: PathBuf,
    pub mask: PathBuf,
    pub mode: Mode,
    pub out: PathBuf,
    /// Textual tokens (one pooled record per token, or a single 1xN grid).
    pub text: Option<PathBuf>,
    /// Class token (one pooled record).
    pub class_token: Option<PathBuf>,
    /// Where to write the assembled prompt; requires `text` and `class_token`.
    pub prompt_out: Option<PathBuf>,
}

/// Writes the fused visual grid (and optionally the full prompt) as CEMB.
pub fn cmd_fuse(opts: &FuseOptions) -> Result<PathBuf> {
    let target = CembTensor::load(&opts.target)?.grid(0)?;
    let retrieved = CembTensor::load(&opts.retrieved)?.grids()?;
    let mask = RegionMask::open(&opts.mask)?;
    let fused = fuse_visual(&target, &retrieved, &mask, opts.mode)?;
    CembTensor::from_grids(std::slice::from_ref(&fused))?.save(&opts.out)?;

    if let Some(prompt_out) = &opts.prompt_out {
        let (Some(text), Some(class_token)) = (&opts.text, &opts.class_token) else {
            return Err(Error::Parse("prompt output needs --text and --class-token".into()));
        };
        let text = CembTensor::load(text)?;
        let tokens = if text.is_pooled() {
            text.embeddings()?
        } else {
            let g = text.grid(0)?;
            g.cells().map(|c| c.to_vec().into()).collect()
        };
        let class = CembTensor::load(class_token)?
            .embeddings()?
            .into_iter()
            .next()
            .ok_or_else(|| Error::Cemb("class token file is empty".into()))?;
        let prompt = assemble_prompt(&TokenSequence::textual(tokens)?, &class, &fused)?;
        let file = IndexedCemb {
            tensor: CembTensor::from_grids(&[prompt.to_grid()?])?,
            index: Some(CembIndex {
                ids: vec!["prompt".into()],
                gaps: vec![],
                metadata: BTreeMap::from([("origins".to_string(), prompt.origin_tags())]),
            }),
        };
        file.save(prompt_out)?;
    }
    Ok(opts.out.clone())
}

#[derive(Debug, Clone)]
pub struct ControlsOptions {
    pub manifest: PathBuf,
    pub mode: Mode,
    pub out_dir: PathBuf,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlRow {
    pub id: String,
    pub ok: bool,
    pub contrast: Option<PathBuf>,
    pub depth: Option<PathBuf>,
    pub hed: Option<PathBuf>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlsBody {
    pub mode: Mode,
    pub contrast_lambda: f64,
    pub note: String,
    pub manifest: PathBuf,
    pub rows: Vec<ControlRow>,
}

/// Writes `<id>_contrast.png` (plus validated `<id>_depth.png` / `<id>_hed.png`
/// when the manifest names them), `controls.jsonl` with a `control_path`
/// column, and `controls_report.json`.
pub fn cmd_controls(opts: &ControlsOptions) -> Result<Report<ControlsBody>> {
    let manifest = DatasetManifest::load(&opts.manifest)?;
    fs::create_dir_all(&opts.out_dir)?;
    let rows = with_workers(opts.workers, || {
        manifest
            .entries
            .par_iter()
            .map(|entry| {
                control_row(&manifest, entry, opts).unwrap_or_else(|e| ControlRow {
                    id: entry.id.clone(),
                    ok: false,
                    contrast: None,
                    depth: None,
                    hed: None,
                    error: Some(e.to_string()),
                })
            })
            .collect::<Vec<_>>()
    })?;

    let mut emitted = Vec::new();
    for (entry, row) in manifest.entries.iter().zip(&rows) {
        if !row.ok {
            continue;
        }
        let mut e = entry.clone();
        e.image_path = absolute(&manifest.resolve(&entry.image_path));
        e.mask_path = absolute(&manifest.resolve(&entry.mask_path));
        e.reference_path = entry.reference_path.as_ref().map(|p| absolute(&manifest.resolve(p)));
        e.control_path = row.contrast.clone();
        e.depth_path = row.depth.clone();
        e.hed_path = row.hed.clone();
        emitted.push(e);
    }
    DatasetManifest::new(&opts.out_dir, emitted).save(&opts.out_dir.join("controls.jsonl"))?;

    let report = Report::new(ControlsBody {
        mode: opts.mode,
        contrast_lambda: crate::controls::CONTRAST_LAMBDA,
        note: "contrast control is an approximation: mean-directed contraction (training), white background (inference)".into(),
        manifest: opts.manifest.clone(),
        rows,
    });
    report.save_json(&opts.out_dir.join("controls_report.json"))?;
    Ok(report)
}

fn absolute(p: &Path) -> PathBuf {
    fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf())
}

fn control_row(manifest: &DatasetManifest, entry: &crate::corpus::ManifestEntry, opts: &ControlsOptions) -> Result<ControlRow> {
    let sample = manifest.load_entry(entry)?;
    let contrast = contrast_control(&sample, opts.mode)?;
    let name = format!("{}_contrast.png", entry.id);
    contrast.image.save_png(&opts.out_dir.join(&name))?;

    let external = |path: &Option<PathBuf>, kind: ControlKind| -> Result<Option<PathBuf>> {
        let Some(path) = path else { return Ok(None) };
        let control = validate_control(&manifest.resolve(path), kind, &sample)?;
        let name = format!("{}_{}.png", entry.id, kind.as_str());
        control.image.save_png(&opts.out_dir.join(&name))?;
        Ok(Some(PathBuf::from(name)))
    };
    let depth = external(&entry.depth_path, ControlKind::Depth)?;
    let hed = external(&entry.hed_path, ControlKind::Hed)?;
    Ok(ControlRow {
        id: entry.id.clone(),
        ok: true,
        contrast: Some(PathBuf::from(name)),
        depth,
        hed,
        error: None,
    })
}

pub fn cmd_validate(manifest: &Path, out: Option<&Path>, workers: Option<usize>) -> Result<Report<ValidationReport>> {
    let manifest = DatasetManifest::load(manifest)?;
    let report = Report::new(with_workers(workers, || validate_manifest(&manifest))?);
    if let Some(out) = out {
        report.save_json(out)?;
    }
    Ok(report)
}
