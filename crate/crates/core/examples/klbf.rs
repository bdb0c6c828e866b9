//! Foreground/background color divergence on a synthetic scene.
//!
//! A disc is pasted onto a background twice: once with colors close to the
//! background and once with a saturated, unrelated palette. The camouflaged
//! version should have the lower KL_BF.

use camoval::corpus::{ImageBuffer, RegionMask};
use camoval::divergence::{klbf, klbf_with, HistogramConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> camoval::Result<()> {
    let (w, h) = (96, 96);
    let mask = RegionMask::from_fn(w, h, |x, y| {
        let (dx, dy) = (x as f64 - 48.0, y as f64 - 48.0);
        dx * dx + dy * dy < 24.0 * 24.0
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut texture = |base: [u8; 3], spread: u8| -> [u8; 3] {
        base.map(|c| c.saturating_add(rng.gen_range(0..=spread)))
    };
    let background: Vec<[u8; 3]> = (0..w * h).map(|_| texture([90, 110, 60], 50)).collect();

    let camo = ImageBuffer::from_fn(w, h, |x, y| {
        if mask.is_foreground(x, y) {
            let [r, g, b] = background[(x * 7 + y * 13) % background.len()];
            [r.saturating_add(5), g, b]
        } else {
            background[y * w + x]
        }
    })?;
    let salient = ImageBuffer::from_fn(w, h, |x, y| {
        if mask.is_foreground(x, y) {
            [230, 20 + (x % 16) as u8, 40]
        } else {
            background[y * w + x]
        }
    })?;

    for (name, image) in [("camouflaged", &camo), ("salient", &salient)] {
        let r = klbf(image, &mask)?;
        println!(
            "{name:<12} KL_R={:.4} KL_G={:.4} KL_B={:.4} KL_BF={:.4}",
            r.kl_r, r.kl_g, r.kl_b, r.kl_bf
        );
    }

    let coarse = HistogramConfig { bins: 32, ..HistogramConfig::default() };
    let r = klbf_with(&camo, &mask, &coarse)?;
    println!("camouflaged with 32 bins: KL_BF={:.4}", r.kl_bf);
    Ok(())
}
