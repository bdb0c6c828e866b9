//! Oracle-equivalence suites. Each panics on the first mismatch and returns
//! a one-line summary otherwise; they back both the regular tests and the
//! acceptance report.
#![allow(dead_code)]

use camoval::codmetrics::{e_measure, f_measure, mae, s_measure, weighted_f, PredictionMap};
use camoval::corpus::{ImageBuffer, RegionMask};
use camoval::divergence::{klbf_with, HistogramConfig};
use camoval::featstats::{kid_mmd2, FeatureSet, KernelConfig};
use camoval::structural::{ssim_with, SsimConfig};
use rand::Rng;

use super::*;

fn max_rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

pub fn klbf_suite() -> String {
    let mut rng = rng(101);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for _ in 0..3000 {
        let w = rng.gen_range(1..=8);
        let h = rng.gen_range(1..=8);
        if w * h < 2 {
            continue;
        }
        // narrow palettes make bins collide, wide ones spread them out
        let span: u8 = if rng.gen_bool(0.5) { 4 } else { 255 };
        let image = ImageBuffer::from_fn(w, h, |_, _| [rng.gen_range(0..=span), rng.gen_range(0..=span), rng.gen()]).unwrap();
        let mask = random_mask(w, h, &mut rng);
        let bins = *[256usize, 64, 16, 1].get(rng.gen_range(0..4)).unwrap();
        let cfg = HistogramConfig { bins, epsilon: 1e-10 };
        let got = klbf_with(&image, &mask, &cfg).unwrap();
        let want = klbf_oracle(&image, &mask_bits(&mask), bins, 1e-10);
        for (g, o) in [got.kl_r, got.kl_g, got.kl_b, got.kl_bf].into_iter().zip(want) {
            let err = max_rel(g, o);
            assert!(err <= 1e-9, "klbf {w}x{h} bins {bins}: {g} vs oracle {o}");
            worst = worst.max(err);
        }
        cases += 1;
    }
    format!("{cases} random images up to 8x8, max rel err {worst:.1e}")
}

pub fn ssim_suite() -> String {
    let mut rng = rng(202);
    let mut worst = 0.0f64;
    // default window on 64x64
    for _ in 0..3 {
        let a = random_image(64, 64, &mut rng);
        let b = ImageBuffer::from_fn(64, 64, |x, y| a.pixel(x, y).map(|v| v.saturating_add(rng.gen_range(0..60)))).unwrap();
        let got = ssim_with(&a, &b, &SsimConfig::default()).unwrap().mean_ssim;
        let want = ssim_oracle(&luma(&a), &luma(&b), 64, 64, 11, 1.5);
        assert!((got - want).abs() <= 1e-7, "ssim 64x64: {got} vs {want}");
        worst = worst.max((got - want).abs());
    }
    // small windows on small images
    let mut small = 0;
    for _ in 0..500 {
        let win = *[3usize, 5].get(rng.gen_range(0..2)).unwrap();
        let w = rng.gen_range(win..=8);
        let h = rng.gen_range(win..=8);
        let a = random_image(w, h, &mut rng);
        let b = random_image(w, h, &mut rng);
        let cfg = SsimConfig { window: win, sigma: 1.0, ..SsimConfig::default() };
        let got = ssim_with(&a, &b, &cfg).unwrap().mean_ssim;
        let want = ssim_oracle(&luma(&a), &luma(&b), w, h, win, 1.0);
        assert!((got - want).abs() <= 1e-7, "ssim {w}x{h} win {win}: {got} vs {want}");
        worst = worst.max((got - want).abs());
        small += 1;
    }
    format!("3 images 64x64 (11x11) + {small} up to 8x8 (3x3/5x5), max abs err {worst:.1e}")
}

struct CodCheck {
    worst_sum: f64,
    worst_wf: f64,
}

impl CodCheck {
    fn compare(&mut self, pred: &[f64], gt: &RegionMask, w: usize, h: usize, weighted: bool) {
        let p = PredictionMap::new(w, h, pred.to_vec()).unwrap();
        let g = mask_bits(gt);
        let pairs = [
            ("mae", mae(&p, gt).unwrap(), mae_oracle(pred, &g)),
            ("s", s_measure(&p, gt).unwrap(), s_oracle(pred, &g, w, h)),
            ("e", e_measure(&p, gt).unwrap(), e_oracle(pred, &g)),
        ];
        for (name, got, want) in pairs {
            assert!((got - want).abs() <= 1e-9, "{name} {w}x{h}: {got} vs {want} (pred {pred:?}, gt {g:?})");
            self.worst_sum = self.worst_sum.max((got - want).abs());
        }
        if weighted && gt.foreground_count() > 0 {
            let got = f_measure(&p, gt).unwrap();
            let want = f_oracle(pred, &g);
            assert!((got - want).abs() <= 1e-9, "f {w}x{h}: {got} vs {want}");
            self.worst_sum = self.worst_sum.max((got - want).abs());
            let got = weighted_f(&p, gt).unwrap();
            let want = wf_oracle(pred, &g, w, h);
            assert!((got - want).abs() <= 1e-6, "wf {w}x{h}: {got} vs {want} (pred {pred:?}, gt {g:?})");
            self.worst_wf = self.worst_wf.max((got - want).abs());
        }
    }
}

fn binary_mask(w: usize, h: usize, bits: u32) -> RegionMask {
    RegionMask::from_fn(w, h, |x, y| bits >> (y * w + x) & 1 == 1).unwrap()
}

fn binary_pred(w: usize, h: usize, bits: u32) -> Vec<f64> {
    (0..w * h).map(|i| (bits >> i & 1) as f64).collect()
}

/// Random soft maps up to 8x8, every 3x3 binary pair, and every 4x4 ground
/// truth against a handful of predictions.
pub fn cod_suite() -> String {
    let mut rng = rng(303);
    let mut check = CodCheck { worst_sum: 0.0, worst_wf: 0.0 };

    let mut random_cases = 0;
    for _ in 0..1500 {
        let w = rng.gen_range(2..=8);
        let h = rng.gen_range(2..=8);
        let gt = match rng.gen_range(0..10) {
            0 => RegionMask::empty(w, h).unwrap(),
            1 => RegionMask::full(w, h).unwrap(),
            _ => random_mask(w, h, &mut rng),
        };
        let pred = random_prediction(w, h, &mut rng);
        check.compare(&pred, &gt, w, h, true);
        random_cases += 1;
    }

    // exhaustive 3x3: all five metrics, plus F and weighted F reach 1 exactly when pred = gt
    let mut pairs3 = 0;
    for gbits in 0..512u32 {
        let gt = binary_mask(3, 3, gbits);
        for pbits in 0..512u32 {
            let pred = binary_pred(3, 3, pbits);
            check.compare(&pred, &gt, 3, 3, true);
            if gbits != 0 {
                let p = PredictionMap::new(3, 3, pred.clone()).unwrap();
                let f1 = f_measure(&p, &gt).unwrap() >= 1.0 - 1e-12;
                let wf1 = weighted_f(&p, &gt).unwrap() >= 1.0 - 1e-12;
                assert_eq!(f1, pbits == gbits, "f = 1 iff exact, gt {gbits:09b} pred {pbits:09b}");
                assert_eq!(wf1, pbits == gbits, "wf = 1 iff exact, gt {gbits:09b} pred {pbits:09b}");
            }
            pairs3 += 1;
        }
    }

    // every 4x4 ground truth against its own map, its complement and two random binaries
    let mut pairs4 = 0;
    for gbits in 0..65536u32 {
        let gt = binary_mask(4, 4, gbits);
        for pbits in [gbits, !gbits & 0xFFFF, rng.gen_range(0..65536), rng.gen_range(0..65536)] {
            let pred = binary_pred(4, 4, pbits);
            let p = PredictionMap::new(4, 4, pred.clone()).unwrap();
            let g = mask_bits(&gt);
            let (es, eo) = (e_measure(&p, &gt).unwrap(), e_oracle(&pred, &g));
            let (ss, so) = (s_measure(&p, &gt).unwrap(), s_oracle(&pred, &g, 4, 4));
            assert!((es - eo).abs() <= 1e-9, "e 4x4 gt {gbits:016b} pred {pbits:016b}: {es} vs {eo}");
            assert!((ss - so).abs() <= 1e-9, "s 4x4 gt {gbits:016b} pred {pbits:016b}: {ss} vs {so}");
            check.worst_sum = check.worst_sum.max((es - eo).abs()).max((ss - so).abs());
            pairs4 += 1;
        }
    }

    format!(
        "{random_cases} random soft maps, {pairs3} 3x3 binary pairs, {pairs4} 4x4 pairs; max err {:.1e} (wF {:.1e})",
        check.worst_sum, check.worst_wf
    )
}

pub fn kid_suite() -> String {
    let mut rng = rng(404);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for _ in 0..120 {
        let d = rng.gen_range(1..=16);
        let nx = rng.gen_range(2..=24);
        let ny = rng.gen_range(2..=24);
        let x = random_rows(nx, d, &mut rng);
        let y = random_rows(ny, d, &mut rng);
        let block = rng.gen_range(2..=nx.min(ny));
        let blocks = rng.gen_range(1..=6);
        let seed = rng.gen();
        let degree = rng.gen_range(1..=3);
        let coef0 = if rng.gen_bool(0.5) { 1.0 } else { 0.0 };
        let cfg = KernelConfig {
            degree,
            coef0,
            block_size: Some(block),
            blocks,
            seed,
            ..KernelConfig::default()
        };
        let got = kid_mmd2(&FeatureSet::from_rows(&x).unwrap(), &FeatureSet::from_rows(&y).unwrap(), &cfg).unwrap();
        let (mean, std) = kid_oracle(&x, &y, block, blocks, seed, degree as i32, coef0);
        for (g, o) in [(got.mean, mean), (got.stddev, std)] {
            let err = max_rel(g, o);
            assert!(err <= 1e-9, "kid d={d} {nx}/{ny} block {block}: {g} vs {o}");
            worst = worst.max(err);
        }
        cases += 1;
    }
    format!("{cases} random set pairs up to 16-dim, max rel err {worst:.1e}")
}
