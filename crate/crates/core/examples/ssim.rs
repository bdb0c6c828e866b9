//! Structural similarity between an image and progressively degraded copies.

use camoval::corpus::ImageBuffer;
use camoval::structural::{ssim, ssim_with, SsimConfig};

fn main() -> camoval::Result<()> {
    let (w, h) = (64, 48);
    let original = ImageBuffer::from_fn(w, h, |x, y| {
        let v = ((x as f64 / 5.0).sin() * (y as f64 / 7.0).cos() * 100.0 + 128.0) as u8;
        [v, v / 2 + 40, 255 - v]
    })?;

    println!("identical      {:.6}", ssim(&original, &original)?.mean_ssim);
    for shift in [8u8, 32, 96] {
        let brighter = ImageBuffer::from_fn(w, h, |x, y| original.pixel(x, y).map(|c| c.saturating_add(shift)))?;
        println!("brighter +{shift:<3}  {:.6}", ssim(&original, &brighter)?.mean_ssim);
    }
    let flat = ImageBuffer::filled(w, h, [128, 104, 127])?;
    println!("flat           {:.6}", ssim(&original, &flat)?.mean_ssim);

    let small_window = SsimConfig { window: 7, sigma: 1.0, ..SsimConfig::default() };
    let r = ssim_with(&original, &flat, &small_window)?;
    println!("flat, 7x7 window sigma 1.0: {:.6}", r.mean_ssim);
    Ok(())
}
