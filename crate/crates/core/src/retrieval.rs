//! Texture-oriented background retrieval.
//!
//! The target's encoder token grid is pooled under its foreground mask, every
//! knowledge-base candidate is pooled globally, and candidates are ranked by
//! cosine similarity to the target.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{RegionMask, SampleRecord};
use crate::error::{Error, Result};

/// A cell is treated as foreground when its mask coverage exceeds this.
pub const COVERAGE_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|v| v * factor).collect())
    }
}

impl From<Vec<f64>> for EmbeddingVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// `grid_h x grid_w` cells of `dim` values each, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    grid_h: usize,
    grid_w: usize,
    dim: usize,
    data: Vec<f64>,
}

impl FeatureGrid {
    pub fn new(grid_h: usize, grid_w: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if grid_h == 0 || grid_w == 0 {
            return Err(Error::Parse("feature grid must have at least one cell".into()));
        }
        if data.len() != grid_h * grid_w * dim {
            return Err(Error::DimensionMismatch {
                what: "feature grid length",
                expected: (grid_h * grid_w * dim).to_string(),
                actual: data.len().to_string(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse("feature grid contains non-finite values".into()));
        }
        Ok(Self {
            grid_h,
            grid_w,
            dim,
            data,
        })
    }

    pub fn from_fn(grid_h: usize, grid_w: usize, dim: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(grid_h * grid_w * dim);
        for r in 0..grid_h {
            for c in 0..grid_w {
                for d in 0..dim {
                    data.push(f(r, c, d));
                }
            }
        }
        Self::new(grid_h, grid_w, dim, data)
    }

    pub fn grid_h(&self) -> usize {
        self.grid_h
    }

    pub fn grid_w(&self) -> usize {
        self.grid_w
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cell_count(&self) -> usize {
        self.grid_h * self.grid_w
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.grid_h, self.grid_w, self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Cell by flat row-major index.
    pub fn cell(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn cell_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn cells(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.cell_count()).map(move |i| self.cell(i))
    }
}

/// Fraction of each grid cell covered by foreground pixels, row-major.
///
/// Cells tile the image exactly; a pixel straddling a cell boundary
/// contributes in proportion to the overlapping area. Overlaps are computed in
/// integer units of `1/grid` pixels, so a full mask yields exactly 1.0.
pub fn mask_coverage(mask: &RegionMask, grid_h: usize, grid_w: usize) -> Vec<f64> {
    let (w, h) = mask.dims();
    let rows = overlaps(h, grid_h);
    let cols = overlaps(w, grid_w);
    let m = mask.as_slice();

    // per pixel row, weighted foreground per grid column
    let mut row_sums = vec![0u64; h * grid_w];
    for y in 0..h {
        let line = &m[y * w..(y + 1) * w];
        for (j, spans) in cols.iter().enumerate() {
            row_sums[y * grid_w + j] = spans.iter().map(|&(x, o)| o * line[x] as u64).sum();
        }
    }
    let area = (w * h) as f64;
    let mut out = Vec::with_capacity(grid_h * grid_w);
    for spans in &rows {
        for j in 0..grid_w {
            let num: u64 = spans.iter().map(|&(y, o)| o * row_sums[y * grid_w + j]).sum();
            out.push(num as f64 / area);
        }
    }
    out
}

/// For each of `cells` intervals over `len` pixels, the pixels it touches and
/// the overlap length in units of `1/cells` pixel.
fn overlaps(len: usize, cells: usize) -> Vec<Vec<(usize, u64)>> {
    (0..cells)
        .map(|i| {
            let lo = i * len;
            let hi = (i + 1) * len;
            let first = lo / cells;
            let last = (hi - 1) / cells;
            (first..=last)
                .filter_map(|p| {
                    let a = (p * cells).max(lo);
                    let b = ((p + 1) * cells).min(hi);
                    (b > a).then(|| (p, (b - a) as u64))
                })
                .collect()
        })
        .collect()
}

/// Cells whose coverage exceeds [`COVERAGE_THRESHOLD`].
pub fn foreground_cells(mask: &RegionMask, grid_h: usize, grid_w: usize) -> Vec<bool> {
    mask_coverage(mask, grid_h, grid_w)
        .into_iter()
        .map(|c| c > COVERAGE_THRESHOLD)
        .collect()
}

fn mean_of_cells(grid: &FeatureGrid, cells: impl Iterator<Item = usize>) -> EmbeddingVector {
    let mut sum = vec![0.0; grid.dim];
    let mut n = 0usize;
    for i in cells {
        for (s, v) in sum.iter_mut().zip(grid.cell(i)) {
            *s += v;
        }
        n += 1;
    }
    EmbeddingVector(sum.into_iter().map(|s| s / n as f64).collect())
}

pub fn global_avg_pool(grid: &FeatureGrid) -> EmbeddingVector {
    mean_of_cells(grid, 0..grid.cell_count())
}

/// Mean of the cells more than half covered by the mask. When no cell passes
/// the threshold, falls back to the coverage-weighted mean of every touched
/// cell.
pub fn masked_avg_pool(grid: &FeatureGrid, mask: &RegionMask) -> Result<EmbeddingVector> {
    if mask.foreground_count() == 0 {
        return Err(Error::EmptyMask);
    }
    let coverage = mask_coverage(mask, grid.grid_h, grid.grid_w);
    let selected: Vec<usize> = (0..coverage.len())
        .filter(|&i| coverage[i] > COVERAGE_THRESHOLD)
        .collect();
    if !selected.is_empty() {
        return Ok(mean_of_cells(grid, selected.into_iter()));
    }

    let mut sum = vec![0.0; grid.dim];
    let mut weight = 0.0;
    for (i, &c) in coverage.iter().enumerate().filter(|(_, &c)| c > 0.0) {
        for (s, v) in sum.iter_mut().zip(grid.cell(i)) {
            *s += c * v;
        }
        weight += c;
    }
    Ok(EmbeddingVector(sum.into_iter().map(|s| s / weight).collect()))
}

/// `a.b / (|a| |b|)`, clamped to [-1, 1].
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            what: "embedding dim",
            expected: a.dim().to_string(),
            actual: b.dim().to_string(),
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector(None));
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeBase {
    ids: Vec<String>,
    embeddings: Vec<EmbeddingVector>,
}

impl KnowledgeBase {
    pub fn new(ids: Vec<String>, embeddings: Vec<EmbeddingVector>) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::InvalidKnowledgeBase("no candidates".into()));
        }
        if ids.len() != embeddings.len() {
            return Err(Error::InvalidKnowledgeBase(format!(
                "{} ids for {} embeddings",
                ids.len(),
                embeddings.len()
            )));
        }
        let dim = embeddings[0].dim();
        if embeddings.iter().any(|e| e.dim() != dim) {
            return Err(Error::InvalidKnowledgeBase("embeddings differ in dim".into()));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(Error::InvalidKnowledgeBase(format!("duplicate id {dup}")));
        }
        Ok(Self { ids, embeddings })
    }

    /// Pools each candidate's full token grid globally.
    pub fn from_grids(ids: Vec<String>, grids: &[FeatureGrid]) -> Result<Self> {
        Self::new(ids, grids.iter().map(global_avg_pool).collect())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.embeddings[0].dim()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn embeddings(&self) -> &[EmbeddingVector] {
        &self.embeddings
    }

    /// Cosine score of every candidate against `target`, in base order.
    pub fn scores(&self, target: &EmbeddingVector) -> Result<Vec<f64>> {
        if target.norm() == 0.0 {
            return Err(Error::ZeroVector(Some("target".into())));
        }
        self.ids
            .par_iter()
            .zip(self.embeddings.par_iter())
            .map(|(id, e)| {
                cosine_similarity(target, e).map_err(|err| match err {
                    Error::ZeroVector(_) => Error::ZeroVector(Some(id.clone())),
                    other => other,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub ranked: Vec<RankedCandidate>,
}

impl RetrievalResult {
    pub fn ids(&self) -> Vec<&str> {
        self.ranked.iter().map(|r| r.id.as_str()).collect()
    }
}

/// The `k` best candidates by descending cosine score; equal scores are
/// ordered by ascending id.
pub fn retrieve_topk(target: &EmbeddingVector, base: &KnowledgeBase, k: usize) -> Result<RetrievalResult> {
    if k < 1 || k > base.len() {
        return Err(Error::KOutOfRange { k, available: base.len() });
    }
    let scores = base.scores(target)?;
    let mut order: Vec<usize> = (0..base.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| base.ids[a].cmp(&base.ids[b]))
    });
    Ok(RetrievalResult {
        ranked: order
            .into_iter()
            .take(k)
            .map(|i| RankedCandidate {
                id: base.ids[i].clone(),
                score: scores[i],
            })
            .collect(),
    })
}

/// Target embedding for a sample: its token grid pooled under its mask.
pub fn build_target_embedding(sample: &SampleRecord, grid: &FeatureGrid) -> Result<EmbeddingVector> {
    masked_avg_pool(grid, &sample.mask)
}
