//! Distribution distances over externally extracted feature vectors: the
//! Fréchet distance between Gaussian fits (FID) and the unbiased polynomial
//! kernel MMD² (KID).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative asymmetry tolerated by [`matrix_sqrt_psd`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;
/// Reconstruction residual above which FID retries with jittered covariances.
pub const SQRT_RESIDUAL_LIMIT: f64 = 1e-4;
pub const FID_JITTER: f64 = 1e-6;

/// `count` feature vectors of length `dim`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    count: usize,
    dim: usize,
    data: Vec<f64>,
}

impl FeatureSet {
    pub fn new(count: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != count * dim {
            return Err(Error::DimensionMismatch {
                what: "feature buffer length",
                expected: (count * dim).to_string(),
                actual: data.len().to_string(),
            });
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse(format!("non-finite feature value at row {}", bad / dim.max(1))));
        }
        Ok(Self { count, dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    what: "feature row length",
                    expected: dim.to_string(),
                    actual: row.len().to_string(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), dim, data)
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1)).take(self.count)
    }

    /// Keeps the rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            count: indices.len(),
            dim: self.dim,
            data,
        }
    }

    fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.count, self.dim, &self.data)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl GaussianStats {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Sample mean and unbiased (`N - 1`) covariance, symmetrized.
pub fn gaussian_stats(features: &FeatureSet) -> Result<GaussianStats> {
    if features.count < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: features.count,
        });
    }
    let x = features.to_matrix();
    let n = features.count as f64;
    let mean: DVector<f64> = x.row_sum().transpose() / n;
    let mut centered = x;
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = centered.tr_mul(&centered) / (n - 1.0);
    Ok(GaussianStats {
        covariance: symmetrize(&cov),
        mean,
    })
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Principal square root of a symmetric positive semi-definite matrix via its
/// eigendecomposition. Negative eigenvalues (numerical noise) clamp to zero.
pub fn matrix_sqrt_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::dims("matrix_sqrt_psd operand", (m.nrows(), m.nrows()), (m.nrows(), m.ncols())));
    }
    let asym = max_abs(&(m - m.transpose()));
    if asym > SYMMETRY_TOLERANCE * max_abs(m).max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (mut col, r) in scaled.column_iter_mut().zip(roots.iter()) {
        col *= *r;
    }
    Ok(symmetrize(&(scaled * v.transpose())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrechetOutcome {
    pub distance: f64,
    /// True when the covariances were jittered by `FID_JITTER * I`.
    pub jittered: bool,
}

/// `|mu1 - mu2|^2 + Tr(S1 + S2 - 2 (S1 S2)^(1/2))`, clamped at zero.
pub fn frechet_distance(s1: &GaussianStats, s2: &GaussianStats) -> Result<f64> {
    frechet_distance_detailed(s1, s2).map(|o| o.distance)
}

pub fn frechet_distance_detailed(s1: &GaussianStats, s2: &GaussianStats) -> Result<FrechetOutcome> {
    if s1.dim() != s2.dim() || s1.covariance.nrows() != s1.dim() || s2.covariance.nrows() != s2.dim() {
        return Err(Error::DimensionMismatch {
            what: "gaussian stats dim",
            expected: s1.dim().to_string(),
            actual: s2.dim().to_string(),
        });
    }
    let mean_term = (&s1.mean - &s2.mean).norm_squared();

    let (mut cross, residual) = trace_sqrt_product(&s1.covariance, &s2.covariance)?;
    let mut jittered = false;
    let mut c1 = s1.covariance.clone();
    let mut c2 = s2.covariance.clone();
    if residual > SQRT_RESIDUAL_LIMIT {
        let jitter = DMatrix::identity(s1.dim(), s1.dim()) * FID_JITTER;
        c1 += &jitter;
        c2 += &jitter;
        cross = trace_sqrt_product(&c1, &c2)?.0;
        jittered = true;
    }
    let distance = mean_term + c1.trace() + c2.trace() - 2.0 * cross;
    Ok(FrechetOutcome {
        distance: distance.max(0.0),
        jittered,
    })
}

/// `Tr((A B)^(1/2))` through the similar symmetric matrix `A^(1/2) B A^(1/2)`,
/// plus the relative reconstruction residual of that square root.
fn trace_sqrt_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(f64, f64)> {
    let ra = matrix_sqrt_psd(a)?;
    let inner = symmetrize(&(&ra * b * &ra));
    let root = matrix_sqrt_psd(&inner)?;
    let residual = max_abs(&(&root * &root - &inner)) / max_abs(&inner).max(1.0);
    Ok((root.trace(), residual))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub degree: u32,
    /// `None` means `1 / dim`.
    pub gamma: Option<f64>,
    pub coef0: f64,
    /// `None` means `min(1000, |x|, |y|)`.
    pub block_size: Option<usize>,
    pub blocks: usize,
    pub seed: u64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            degree: 3,
            gamma: None,
            coef0: 1.0,
            block_size: None,
            blocks: 10,
            seed: 0,
        }
    }
}

impl KernelConfig {
    pub fn gamma_for(&self, dim: usize) -> f64 {
        self.gamma.unwrap_or(1.0 / dim.max(1) as f64)
    }

    pub fn block_size_for(&self, nx: usize, ny: usize) -> usize {
        self.block_size.unwrap_or_else(|| 1000.min(nx).min(ny))
    }

    /// `(gamma * a.b + coef0)^degree`
    pub fn kernel(&self, a: &[f64], b: &[f64], gamma: f64) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        (gamma * dot + self.coef0).powi(self.degree as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KidResult {
    pub mean: f64,
    /// Population standard deviation across blocks.
    pub stddev: f64,
    pub block_size: usize,
    pub blocks: usize,
    pub seed: u64,
}

/// Block-averaged unbiased MMD² under a polynomial kernel. May be negative.
pub fn kid_mmd2(x: &FeatureSet, y: &FeatureSet, cfg: &KernelConfig) -> Result<KidResult> {
    if x.dim != y.dim {
        return Err(Error::DimensionMismatch {
            what: "feature dim",
            expected: x.dim.to_string(),
            actual: y.dim.to_string(),
        });
    }
    if cfg.degree < 1 {
        return Err(Error::InvalidKernel("degree must be >= 1".into()));
    }
    if cfg.blocks < 1 {
        return Err(Error::InvalidKernel("blocks must be >= 1".into()));
    }
    let m = cfg.block_size_for(x.count, y.count);
    if m < 2 {
        return Err(Error::InvalidKernel(format!("block size must be >= 2, got {m}")));
    }
    let available = x.count.min(y.count);
    if m > available {
        return Err(Error::BlockTooLarge { block: m, available });
    }
    let gamma = cfg.gamma_for(x.dim);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut draw = |n: usize| -> Vec<usize> {
        if m == n {
            (0..n).collect()
        } else {
            index::sample(&mut rng, n, m).into_vec()
        }
    };

    let mut values = Vec::with_capacity(cfg.blocks);
    for _ in 0..cfg.blocks {
        let bx = x.select(&draw(x.count));
        let by = y.select(&draw(y.count));
        values.push(unbiased_mmd2(&bx, &by, cfg, gamma));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(KidResult {
        mean,
        stddev: var.sqrt(),
        block_size: m,
        blocks: cfg.blocks,
        seed: cfg.seed,
    })
}

fn unbiased_mmd2(x: &FeatureSet, y: &FeatureSet, cfg: &KernelConfig, gamma: f64) -> f64 {
    let xm = x.to_matrix();
    let ym = y.to_matrix();
    let apply = |gram: DMatrix<f64>| gram.map(|d| (gamma * d + cfg.coef0).powi(cfg.degree as i32));
    let kxx = apply(&xm * xm.transpose());
    let kyy = apply(&ym * ym.transpose());
    let kxy = apply(&xm * ym.transpose());

    let m = x.count as f64;
    let n = y.count as f64;
    let off_diag = |k: &DMatrix<f64>| k.sum() - k.trace();
    off_diag(&kxx) / (m * (m - 1.0)) + off_diag(&kyy) / (n * (n - 1.0)) - 2.0 * kxy.sum() / (m * n)
}
