//! Textual-visual condition assembly.
//!
//! The visual condition keeps the target's own tokens on foreground cells and
//! replaces background cells with an average that includes the retrieved
//! samples' tokens. The prompt is the textual tokens, the class token, and the
//! visual cells, in that order.

use serde::{Deserialize, Serialize};

use crate::corpus::RegionMask;
use crate::error::{Error, Result};
use crate::retrieval::{foreground_cells, EmbeddingVector, FeatureGrid};
use crate::Mode;

pub type VisualTokenGrid = FeatureGrid;

const TASK_DESCRIPTION: &str = "A realistic image of an object blending into its surroundings, where the background shares similar colors, textures, and patterns with the object, making it hard to distinguish. Natural lighting, photorealistic, seamless camouflage, high detail.";

/// The unified task description used as the textual condition.
pub fn canonical_task_description() -> &'static str {
    TASK_DESCRIPTION
}

/// Fuses the target grid with retrieved grids under `mask`, which is reduced
/// to per-cell foreground flags by area coverage.
pub fn fuse_visual(
    target: &VisualTokenGrid,
    retrieved: &[VisualTokenGrid],
    mask: &RegionMask,
    mode: Mode,
) -> Result<VisualTokenGrid> {
    let cells = foreground_cells(mask, target.grid_h(), target.grid_w());
    fuse_visual_cells(target, retrieved, &cells, mode)
}

/// Same as [`fuse_visual`] with the per-cell foreground flags given directly.
pub fn fuse_visual_cells(
    target: &VisualTokenGrid,
    retrieved: &[VisualTokenGrid],
    foreground: &[bool],
    mode: Mode,
) -> Result<VisualTokenGrid> {
    if retrieved.is_empty() {
        return Err(Error::EmptyRetrievalList);
    }
    let shape = target.shape();
    if let Some(bad) = retrieved.iter().find(|g| g.shape() != shape) {
        return Err(Error::DimensionMismatch {
            what: "retrieved grid shape",
            expected: format!("{:?}", shape),
            actual: format!("{:?}", bad.shape()),
        });
    }
    if foreground.len() != target.cell_count() {
        return Err(Error::DimensionMismatch {
            what: "foreground cell flags",
            expected: target.cell_count().to_string(),
            actual: foreground.len().to_string(),
        });
    }

    let k = retrieved.len() as f64;
    let mut out = target.clone();
    for (i, &is_fg) in foreground.iter().enumerate() {
        if is_fg {
            continue;
        }
        let cell = out.cell_mut(i);
        let mut sum = match mode {
            Mode::Training => target.cell(i).to_vec(),
            Mode::Inference => vec![0.0; cell.len()],
        };
        for g in retrieved {
            for (s, v) in sum.iter_mut().zip(g.cell(i)) {
                *s += v;
            }
        }
        let denom = match mode {
            Mode::Training => k + 1.0,
            Mode::Inference => k,
        };
        for (dst, s) in cell.iter_mut().zip(sum) {
            *dst = s / denom;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenOrigin {
    Textual,
    Class,
    Visual,
}

impl TokenOrigin {
    pub fn tag(self) -> char {
        match self {
            TokenOrigin::Textual => 't',
            TokenOrigin::Class => 'c',
            TokenOrigin::Visual => 'v',
        }
    }

    pub fn from_tag(c: char) -> Option<Self> {
        match c {
            't' => Some(TokenOrigin::Textual),
            'c' => Some(TokenOrigin::Class),
            'v' => Some(TokenOrigin::Visual),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenSequence {
    tokens: Vec<EmbeddingVector>,
    origins: Vec<TokenOrigin>,
}

impl TokenSequence {
    pub fn new(tokens: Vec<EmbeddingVector>, origins: Vec<TokenOrigin>) -> Result<Self> {
        if tokens.len() != origins.len() {
            return Err(Error::Parse(format!("{} tokens but {} origin tags", tokens.len(), origins.len())));
        }
        if let Some(first) = tokens.first() {
            if tokens.iter().any(|t| t.dim() != first.dim()) {
                return Err(Error::DimensionMismatch {
                    what: "token dim",
                    expected: first.dim().to_string(),
                    actual: "mixed".into(),
                });
            }
        }
        Ok(Self { tokens, origins })
    }

    pub fn textual(tokens: Vec<EmbeddingVector>) -> Result<Self> {
        let origins = vec![TokenOrigin::Textual; tokens.len()];
        Self::new(tokens, origins)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.tokens.first().map(EmbeddingVector::dim)
    }

    pub fn tokens(&self) -> &[EmbeddingVector] {
        &self.tokens
    }

    pub fn origins(&self) -> &[TokenOrigin] {
        &self.origins
    }

    pub fn origin_tags(&self) -> String {
        self.origins.iter().map(|o| o.tag()).collect()
    }

    /// Tokens of one origin, in sequence order.
    pub fn part(&self, origin: TokenOrigin) -> Vec<EmbeddingVector> {
        self.tokens
            .iter()
            .zip(&self.origins)
            .filter(|(_, &o)| o == origin)
            .map(|(t, _)| t.clone())
            .collect()
    }

    /// As a single 1 x len CEMB grid.
    pub fn to_grid(&self) -> Result<FeatureGrid> {
        let dim = self.dim().unwrap_or(0);
        let data = self.tokens.iter().flat_map(|t| t.as_slice().iter().copied()).collect();
        FeatureGrid::new(1, self.len(), dim, data)
    }

    pub fn from_grid(grid: &FeatureGrid, tags: &str) -> Result<Self> {
        let origins = tags
            .chars()
            .map(|c| TokenOrigin::from_tag(c).ok_or_else(|| Error::Parse(format!("unknown origin tag {c:?}"))))
            .collect::<Result<Vec<_>>>()?;
        let tokens = grid.cells().map(|c| EmbeddingVector::new(c.to_vec())).collect();
        Self::new(tokens, origins)
    }
}

/// `[textual..., class, visual cells in row-major order]`.
pub fn assemble_prompt(c_txt: &TokenSequence, c_cls: &EmbeddingVector, c_vis: &VisualTokenGrid) -> Result<TokenSequence> {
    if c_vis.cell_count() == 0 || c_vis.dim() == 0 {
        return Err(Error::Parse("visual condition grid is empty".into()));
    }
    let dim = c_cls.dim();
    for (what, d) in [("visual token dim", c_vis.dim()), ("textual token dim", c_txt.dim().unwrap_or(dim))] {
        if d != dim {
            return Err(Error::DimensionMismatch {
                what,
                expected: dim.to_string(),
                actual: d.to_string(),
            });
        }
    }
    let mut tokens = Vec::with_capacity(c_txt.len() + 1 + c_vis.cell_count());
    let mut origins = Vec::with_capacity(tokens.capacity());
    tokens.extend(c_txt.tokens.iter().cloned());
    origins.extend(std::iter::repeat(TokenOrigin::Textual).take(c_txt.len()));
    tokens.push(c_cls.clone());
    origins.push(TokenOrigin::Class);
    tokens.extend(c_vis.cells().map(|c| EmbeddingVector::new(c.to_vec())));
    origins.extend(std::iter::repeat(TokenOrigin::Visual).take(c_vis.cell_count()));
    TokenSequence::new(tokens, origins)
}
