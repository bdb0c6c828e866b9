//! The five detection metrics on a ground-truth blob and a few predictions.

use camoval::codmetrics::{cod_scores, PredictionMap};
use camoval::corpus::RegionMask;

fn main() -> camoval::Result<()> {
    let (w, h) = (64, 64);
    let inside = |x: usize, y: usize, r: f64| {
        let (dx, dy) = (x as f64 - 30.0, y as f64 - 34.0);
        dx * dx + dy * dy < r * r
    };
    let gt = RegionMask::from_fn(w, h, |x, y| inside(x, y, 16.0))?;

    let perfect = PredictionMap::from_mask(&gt);
    let soft = PredictionMap::new(w, h, (0..w * h).map(|i| {
        let (x, y) = (i % w, i / w);
        let d = ((x as f64 - 30.0).powi(2) + (y as f64 - 34.0).powi(2)).sqrt();
        (1.0 / (1.0 + ((d - 16.0) / 2.0).exp())).clamp(0.0, 1.0)
    }).collect())?;
    let shrunk = PredictionMap::from_mask(&RegionMask::from_fn(w, h, |x, y| inside(x, y, 10.0))?);
    let zeros = PredictionMap::new(w, h, vec![0.0; w * h])?;

    println!("{:<8} {:>7} {:>7} {:>7} {:>7} {:>7}", "pred", "MAE", "S", "E", "F", "wF");
    for (name, pred) in [("perfect", &perfect), ("soft", &soft), ("shrunk", &shrunk), ("zeros", &zeros)] {
        let s = cod_scores(pred, &gt)?;
        println!(
            "{name:<8} {:>7.4} {:>7.4} {:>7.4} {:>7.4} {:>7.4}",
            s.mae, s.s_alpha, s.e_phi, s.f_beta, s.f_beta_w
        );
    }
    Ok(())
}
