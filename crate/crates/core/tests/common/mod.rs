//! Independent reference implementations and fixture builders shared by the
//! integration tests. The oracles favour the most literal formulation of each
//! formula (nested loops, two-pass moments, dense 2-D windows) over speed.
#![allow(dead_code)]

pub mod suites;

use std::path::{Path, PathBuf};

use camoval::cemb::{CembIndex, CembTensor, IndexedCemb};
use camoval::corpus::{DatasetManifest, ImageBuffer, ManifestEntry, RegionMask, Subset};
use camoval::retrieval::EmbeddingVector;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- fixtures

pub fn random_image(w: usize, h: usize, rng: &mut ChaCha8Rng) -> ImageBuffer {
    let data = (0..w * h * 3).map(|_| rng.gen()).collect();
    ImageBuffer::new(w, h, data).unwrap()
}

/// Random binary mask with at least one pixel on each side.
pub fn random_mask(w: usize, h: usize, rng: &mut ChaCha8Rng) -> RegionMask {
    assert!(w * h >= 2);
    loop {
        let bits: Vec<u8> = (0..w * h).map(|_| rng.gen_range(0..2)).collect();
        let fg = bits.iter().filter(|&&b| b == 1).count();
        if fg > 0 && fg < w * h {
            return RegionMask::from_binary(w, h, &bits).unwrap();
        }
    }
}

pub fn random_prediction(w: usize, h: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    // 8-bit levels, as decoded from PNG
    (0..w * h).map(|_| rng.gen_range(0..=255u8) as f64 / 255.0).collect()
}

pub fn mask_bits(mask: &RegionMask) -> Vec<bool> {
    mask.as_slice().iter().map(|&v| v == 1).collect()
}

/// A textured scene with a disc-shaped object. A camouflaged object reuses
/// the background palette; otherwise its palette is shifted far away.
pub fn scene(size: usize, camouflaged: bool, rng: &mut ChaCha8Rng) -> (ImageBuffer, RegionMask) {
    let c = size as f64 / 2.0;
    let r = size as f64 * (0.2 + 0.1 * rng.gen::<f64>());
    let mask = RegionMask::from_fn(size, size, |x, y| {
        let (dx, dy) = (x as f64 - c, y as f64 - c);
        dx * dx + dy * dy < r * r
    })
    .unwrap();
    let bg_base = [rng.gen_range(40..160u8), rng.gen_range(40..160u8), rng.gen_range(40..160u8)];
    let fg_base = if camouflaged {
        bg_base.map(|v| v.saturating_add(rng.gen_range(0..6)))
    } else {
        bg_base.map(|v| v.wrapping_add(rng.gen_range(90..140)))
    };
    let spread = 40u8;
    let image = ImageBuffer::from_fn(size, size, |x, y| {
        let base = if mask.is_foreground(x, y) { fg_base } else { bg_base };
        let mut px = [0u8; 3];
        for ch in 0..3 {
            let n = ((x * 31 + y * 17 + ch * 7) % 13) as u8 + (rng_hash(x, y, ch) % spread as u64) as u8;
            px[ch] = base[ch].saturating_add(n);
        }
        px
    })
    .unwrap();
    (image, mask)
}

fn rng_hash(x: usize, y: usize, c: usize) -> u64 {
    let mut h = (x as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (y as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F) ^ c as u64;
    h ^= h >> 29;
    h = h.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    h ^ (h >> 32)
}

pub struct Dataset {
    pub dir: PathBuf,
    pub manifest: PathBuf,
    pub real: PathBuf,
    pub gen: PathBuf,
    pub ids: Vec<String>,
}

/// Writes `n` scenes cycling through the three subsets, each with itself as
/// reference, plus real/generated feature files keyed by id.
pub fn write_dataset(dir: &Path, n: usize, seed: u64) -> Dataset {
    let mut rng = rng(seed);
    let mut entries = Vec::new();
    for i in 0..n {
        let subset = Subset::ALL[i % 3];
        let id = format!("s{i:03}");
        let (image, mask) = scene(32, subset == Subset::Camouflaged, &mut rng);
        image.save_png(&dir.join(format!("{id}.png"))).unwrap();
        mask.save_png(&dir.join(format!("{id}_m.png"))).unwrap();
        entries.push(ManifestEntry::new(&id, format!("{id}.png"), format!("{id}_m.png"), subset).with_reference(format!("{id}.png")));
    }
    let ids: Vec<String> = entries.iter().map(|e| e.id.clone()).collect();
    let manifest = dir.join("manifest.jsonl");
    DatasetManifest::new(dir, entries).save(&manifest).unwrap();
    let real = dir.join("real.cemb");
    let gen = dir.join("gen.cemb");
    write_features(&real, &ids, 0.0, &mut rng);
    write_features(&gen, &ids, 0.25, &mut rng);
    Dataset { dir: dir.to_path_buf(), manifest, real, gen, ids }
}

pub fn write_features(path: &Path, ids: &[String], shift: f64, rng: &mut ChaCha8Rng) {
    let vectors: Vec<EmbeddingVector> = ids
        .iter()
        .map(|_| EmbeddingVector::new((0..5).map(|_| shift + rng.gen_range(-1.0..1.0f32) as f64).collect()))
        .collect();
    IndexedCemb {
        tensor: CembTensor::from_embeddings(&vectors).unwrap(),
        index: Some(CembIndex::from_ids(ids.to_vec())),
    }
    .save(path)
    .unwrap();
}

// ------------------------------------------------------------------ KL_BF

/// Per-channel KL(background || foreground) and their mean, straight from
/// the pixel list.
pub fn klbf_oracle(image: &ImageBuffer, mask: &[bool], bins: usize, eps: f64) -> [f64; 4] {
    let mut out = [0.0; 4];
    for c in 0..3 {
        let mut fg = vec![0.0f64; bins];
        let mut bg = vec![0.0f64; bins];
        let (mut nf, mut nb) = (0.0, 0.0);
        for (i, px) in image.pixels().enumerate() {
            let b = px[c] as usize * bins / 256;
            if mask[i] {
                fg[b] += 1.0;
                nf += 1.0;
            } else {
                bg[b] += 1.0;
                nb += 1.0;
            }
        }
        let mut kl = 0.0;
        for b in 0..bins {
            let p = (bg[b] / nb + eps) / (1.0 + bins as f64 * eps);
            let q = (fg[b] / nf + eps) / (1.0 + bins as f64 * eps);
            kl += p * (p / q).ln();
        }
        out[c] = kl;
    }
    out[3] = (out[0] + out[1] + out[2]) / 3.0;
    out
}

// ------------------------------------------------------------------- SSIM

pub fn luma(image: &ImageBuffer) -> Vec<f64> {
    image
        .pixels()
        .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
        .collect()
}

/// Dense 2-D Gaussian window, two-pass moments at every valid position.
pub fn ssim_oracle(a: &[f64], b: &[f64], w: usize, h: usize, win: usize, sigma: f64) -> f64 {
    let c1 = (0.01f64 * 255.0).powi(2);
    let c2 = (0.03f64 * 255.0).powi(2);
    let center = (win as f64 - 1.0) / 2.0;
    let mut kernel = vec![0.0; win * win];
    for i in 0..win {
        for j in 0..win {
            let (di, dj) = (i as f64 - center, j as f64 - center);
            kernel[i * win + j] = (-(di * di + dj * dj) / (2.0 * sigma * sigma)).exp();
        }
    }
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);

    let mut sum = 0.0;
    let mut count = 0.0;
    for y0 in 0..=h - win {
        for x0 in 0..=w - win {
            let at = |img: &[f64], i: usize, j: usize| img[(y0 + i) * w + x0 + j];
            let (mut mx, mut my) = (0.0, 0.0);
            for i in 0..win {
                for j in 0..win {
                    mx += kernel[i * win + j] * at(a, i, j);
                    my += kernel[i * win + j] * at(b, i, j);
                }
            }
            let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
            for i in 0..win {
                for j in 0..win {
                    let k = kernel[i * win + j];
                    let (dx, dy) = (at(a, i, j) - mx, at(b, i, j) - my);
                    vx += k * dx * dx;
                    vy += k * dy * dy;
                    cxy += k * dx * dy;
                }
            }
            sum += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1.0;
        }
    }
    sum / count
}

// ------------------------------------------------------------ COD metrics

const EPS: f64 = f64::EPSILON;

pub fn mae_oracle(pred: &[f64], gt: &[bool]) -> f64 {
    let mut s = 0.0;
    for i in 0..pred.len() {
        s += (pred[i] - if gt[i] { 1.0 } else { 0.0 }).abs();
    }
    s / pred.len() as f64
}

pub fn f_oracle(pred: &[f64], gt: &[bool]) -> f64 {
    let mean = pred.iter().sum::<f64>() / pred.len() as f64;
    let thr = (2.0 * mean).min(1.0);
    let bin: Vec<bool> = pred.iter().map(|&p| p > 0.0 && p >= thr).collect();
    let tp = (0..pred.len()).filter(|&i| bin[i] && gt[i]).count() as f64;
    let fp = (0..pred.len()).filter(|&i| bin[i] && !gt[i]).count() as f64;
    let fneg = (0..pred.len()).filter(|&i| !bin[i] && gt[i]).count() as f64;
    if tp == 0.0 {
        return 0.0;
    }
    let p = tp / (tp + fp);
    let r = tp / (tp + fneg);
    1.3 * p * r / (0.3 * p + r)
}

/// Per threshold: binarize, centre both maps, elementwise alignment.
pub fn e_oracle(pred: &[f64], gt: &[bool]) -> f64 {
    let n = pred.len() as f64;
    let q: Vec<u32> = pred.iter().map(|&p| (p * 255.0).round() as u32).collect();
    let g: Vec<f64> = gt.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect();
    let gsum: f64 = g.iter().sum();
    let mut total = 0.0;
    for t in 0..256u32 {
        let fm: Vec<f64> = q.iter().map(|&v| if v > t { 1.0 } else { 0.0 }).collect();
        let enhanced: Vec<f64> = if gsum == 0.0 {
            fm.iter().map(|v| 1.0 - v).collect()
        } else if gsum == n {
            fm.clone()
        } else {
            let mf = fm.iter().sum::<f64>() / n;
            let mg = gsum / n;
            fm.iter()
                .zip(&g)
                .map(|(f, gv)| {
                    let (a, b) = (f - mf, gv - mg);
                    let align = 2.0 * a * b / (a * a + b * b + EPS);
                    (align + 1.0).powi(2) / 4.0
                })
                .collect()
        };
        total += enhanced.iter().sum::<f64>() / n;
    }
    total / 256.0
}

fn sub_block(v: &[f64], w: usize, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Vec<f64> {
    let mut out = Vec::new();
    for r in rows {
        for c in cols.clone() {
            out.push(v[r * w + c]);
        }
    }
    out
}

fn mean_std1(v: &[f64]) -> (f64, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    } else {
        0.0
    };
    (m, var)
}

fn block_ssim(p: &[f64], g: &[f64]) -> f64 {
    let (x, sx) = mean_std1(p);
    let (y, sy) = mean_std1(g);
    let sxy = if p.len() > 1 {
        p.iter().zip(g).map(|(a, b)| (a - x) * (b - y)).sum::<f64>() / (p.len() - 1) as f64
    } else {
        0.0
    };
    let alpha = 4.0 * x * y * sxy;
    let beta = (x * x + y * y) * (sx + sy);
    if alpha != 0.0 {
        alpha / (beta + EPS)
    } else if beta == 0.0 {
        1.0
    } else {
        0.0
    }
}

fn round_half_away(v: f64) -> f64 {
    if v >= 0.0 {
        (v + 0.5).floor()
    } else {
        -((-v + 0.5).floor())
    }
}

pub fn s_oracle(pred: &[f64], gt: &[bool], w: usize, h: usize) -> f64 {
    let g: Vec<f64> = gt.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect();
    let n = (w * h) as f64;
    let u = g.iter().sum::<f64>() / n;
    if u == 0.0 {
        return 1.0 - pred.iter().sum::<f64>() / n;
    }
    if u == 1.0 {
        return pred.iter().sum::<f64>() / n;
    }
    // object term
    let obj = |vals: Vec<f64>| {
        let (x, var) = mean_std1(&vals);
        2.0 * x / (x * x + 1.0 + var.sqrt() + EPS)
    };
    let fg: Vec<f64> = (0..w * h).filter(|&i| gt[i]).map(|i| pred[i]).collect();
    let bg: Vec<f64> = (0..w * h).filter(|&i| !gt[i]).map(|i| 1.0 - pred[i]).collect();
    let s_obj = u * obj(fg) + (1.0 - u) * obj(bg);

    // region term, split at the 1-based rounded centroid
    let (mut sx, mut sy, mut cnt) = (0.0, 0.0, 0.0);
    for r in 0..h {
        for c in 0..w {
            if gt[r * w + c] {
                sx += (c + 1) as f64;
                sy += (r + 1) as f64;
                cnt += 1.0;
            }
        }
    }
    let cx = round_half_away(sx / cnt) as usize;
    let cy = round_half_away(sy / cnt) as usize;
    let mut s_reg = 0.0;
    for (rows, cols) in [(0..cy, 0..cx), (0..cy, cx..w), (cy..h, 0..cx), (cy..h, cx..w)] {
        let area = rows.len() * cols.len();
        if area == 0 {
            continue;
        }
        let p = sub_block(pred, w, rows.clone(), cols.clone());
        let gg = sub_block(&g, w, rows, cols);
        s_reg += area as f64 / n * block_ssim(&p, &gg);
    }
    (0.5 * s_obj + 0.5 * s_reg).max(0.0)
}

/// Nearest foreground pixel by brute force: smallest squared distance, then
/// smallest column, then smallest row.
pub fn nearest_foreground(gt: &[bool], w: usize, h: usize) -> (Vec<f64>, Vec<usize>) {
    let mut d2 = vec![0.0; w * h];
    let mut idx = vec![0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut best: Option<(usize, usize, usize)> = None;
            for fy in 0..h {
                for fx in 0..w {
                    if !gt[fy * w + fx] {
                        continue;
                    }
                    let d = (fx as isize - x as isize).pow(2) as usize + (fy as isize - y as isize).pow(2) as usize;
                    let key = (d, fx, fy);
                    if best.map_or(true, |b| key < b) {
                        best = Some(key);
                    }
                }
            }
            let (d, fx, fy) = best.unwrap();
            d2[y * w + x] = d as f64;
            idx[y * w + x] = fy * w + fx;
        }
    }
    (d2, idx)
}

/// Weighted F-measure in its original formulation, zero-padded 7x7 blur.
pub fn wf_oracle(pred: &[f64], gt: &[bool], w: usize, h: usize) -> f64 {
    let e: Vec<f64> = (0..w * h).map(|i| (pred[i] - if gt[i] { 1.0 } else { 0.0 }).abs()).collect();
    let (d2, idx) = nearest_foreground(gt, w, h);
    let et: Vec<f64> = (0..w * h).map(|i| if gt[i] { e[i] } else { e[idx[i]] }).collect();

    let mut k = [[0.0f64; 7]; 7];
    let mut ks = 0.0;
    for (i, row) in k.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - 3.0, j as f64 - 3.0);
            *v = (-(di * di + dj * dj) / 50.0).exp();
            ks += *v;
        }
    }
    let mut ea = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for i in 0..7isize {
                for j in 0..7isize {
                    let (sy, sx) = (y + i - 3, x + j - 3);
                    if sy >= 0 && sx >= 0 && sy < h as isize && sx < w as isize {
                        acc += k[i as usize][j as usize] / ks * et[sy as usize * w + sx as usize];
                    }
                }
            }
            ea[y as usize * w + x as usize] = acc;
        }
    }

    let mut min_e = e.clone();
    for i in 0..w * h {
        if gt[i] && ea[i] < e[i] {
            min_e[i] = ea[i];
        }
    }
    let ew: Vec<f64> = (0..w * h)
        .map(|i| {
            let b = if gt[i] { 1.0 } else { 2.0 - ((0.5f64).ln() / 5.0 * d2[i].sqrt()).exp() };
            min_e[i] * b
        })
        .collect();
    let nfg = gt.iter().filter(|&&v| v).count() as f64;
    let tpw = nfg - (0..w * h).filter(|&i| gt[i]).map(|i| ew[i]).sum::<f64>();
    let fpw: f64 = (0..w * h).filter(|&i| !gt[i]).map(|i| ew[i]).sum();
    let r = 1.0 - (0..w * h).filter(|&i| gt[i]).map(|i| ew[i]).sum::<f64>() / nfg;
    let p = tpw / (EPS + tpw + fpw);
    2.0 * r * p / (EPS + r + p)
}

// ------------------------------------------------------ feature statistics

/// Two-pass mean and `N - 1` covariance.
pub fn gaussian_oracle(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = rows.len();
    let d = rows[0].len();
    let mut mean = vec![0.0; d];
    for r in rows {
        for j in 0..d {
            mean[j] += r[j];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = vec![vec![0.0; d]; d];
    for r in rows {
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    for row in cov.iter_mut() {
        row.iter_mut().for_each(|v| *v /= (n - 1) as f64);
    }
    (mean, cov)
}

fn cholesky(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                assert!(d > 0.0, "cholesky oracle needs a positive definite matrix");
                l[i][j] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    l
}

/// Cyclic Jacobi eigenvalues of a symmetric matrix.
pub fn jacobi_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j] * m[i][j]).sum();
        let scale: f64 = (0..n).map(|i| m[i][i] * m[i][i]).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[i][i]).collect()
}

/// Frechet distance with `Tr sqrt(S1 S2)` taken from the eigenvalues of the
/// similar matrix `L^T S2 L`, `S1 = L L^T`. Needs `S1` positive definite.
pub fn fid_oracle(m1: &[f64], s1: &[Vec<f64>], m2: &[f64], s2: &[Vec<f64>]) -> f64 {
    let n = m1.len();
    let l = cholesky(s1);
    let mut inner = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for a in 0..n {
                for b in 0..n {
                    acc += l[a][i] * s2[a][b] * l[b][j];
                }
            }
            inner[i][j] = acc;
        }
    }
    let tr_sqrt: f64 = jacobi_eigenvalues(&inner).iter().map(|&v| v.max(0.0).sqrt()).sum();
    let mean_term: f64 = (0..n).map(|i| (m1[i] - m2[i]).powi(2)).sum();
    let tr: f64 = (0..n).map(|i| s1[i][i] + s2[i][i]).sum();
    (mean_term + tr - 2.0 * tr_sqrt).max(0.0)
}

pub fn poly_kernel(a: &[f64], b: &[f64], gamma: f64, coef0: f64, degree: i32) -> f64 {
    let mut dot = 0.0;
    for i in 0..a.len() {
        dot += a[i] * b[i];
    }
    (gamma * dot + coef0).powi(degree)
}

/// Unbiased MMD² by explicit double sums.
pub fn mmd2_oracle(x: &[Vec<f64>], y: &[Vec<f64>], gamma: f64, coef0: f64, degree: i32) -> f64 {
    let (m, n) = (x.len() as f64, y.len() as f64);
    let mut kxx = 0.0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            if i != j {
                kxx += poly_kernel(&x[i], &x[j], gamma, coef0, degree);
            }
        }
    }
    let mut kyy = 0.0;
    for i in 0..y.len() {
        for j in 0..y.len() {
            if i != j {
                kyy += poly_kernel(&y[i], &y[j], gamma, coef0, degree);
            }
        }
    }
    let mut kxy = 0.0;
    for a in x {
        for b in y {
            kxy += poly_kernel(a, b, gamma, coef0, degree);
        }
    }
    kxx / (m * (m - 1.0)) + kyy / (n * (n - 1.0)) - 2.0 * kxy / (m * n)
}

/// Block-averaged KID using the same seeded index draws as the library
/// (ChaCha8, `index::sample`, x before y in each block).
pub fn kid_oracle(x: &[Vec<f64>], y: &[Vec<f64>], block: usize, blocks: usize, seed: u64, degree: i32, coef0: f64) -> (f64, f64) {
    let gamma = 1.0 / x[0].len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vals = Vec::new();
    for _ in 0..blocks {
        let ix: Vec<usize> = if block == x.len() { (0..x.len()).collect() } else { index::sample(&mut rng, x.len(), block).into_vec() };
        let iy: Vec<usize> = if block == y.len() { (0..y.len()).collect() } else { index::sample(&mut rng, y.len(), block).into_vec() };
        let bx: Vec<Vec<f64>> = ix.iter().map(|&i| x[i].clone()).collect();
        let by: Vec<Vec<f64>> = iy.iter().map(|&i| y[i].clone()).collect();
        vals.push(mmd2_oracle(&bx, &by, gamma, coef0, degree));
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
    (mean, var.sqrt())
}

pub fn random_rows(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

// -------------------------------------------------------------- retrieval

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for i in 0..a.len() {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Repeatedly take the most similar remaining candidate and remove it.
pub fn argmax_remove(target: &[f64], ids: &[String], base: &[Vec<f64>], k: usize) -> Vec<String> {
    let mut pool: Vec<usize> = (0..ids.len()).collect();
    let mut out = Vec::new();
    for _ in 0..k {
        let mut best = 0;
        for p in 1..pool.len() {
            if cosine(target, &base[pool[p]]) > cosine(target, &base[pool[best]]) {
                best = p;
            }
        }
        out.push(ids[pool[best]].clone());
        pool.remove(best);
    }
    out
}
