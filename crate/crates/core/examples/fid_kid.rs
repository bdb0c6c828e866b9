//! Frechet distance and kernel distance between Gaussian feature clouds.

use camoval::featstats::{frechet_distance, gaussian_stats, kid_mmd2, FeatureSet, KernelConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn cloud(n: usize, dim: usize, shift: f64, scale: f64, seed: u64) -> camoval::Result<FeatureSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            shift + scale * z
        })
        .collect();
    FeatureSet::new(n, dim, data)
}

fn main() -> camoval::Result<()> {
    let dim = 16;
    let real = cloud(400, dim, 0.0, 1.0, 1)?;
    let real_stats = gaussian_stats(&real)?;
    let cfg = KernelConfig { block_size: Some(100), ..KernelConfig::default() };

    println!("{:<22} {:>10} {:>12} {:>10}", "generated set", "FID", "KID mean", "KID std");
    for (name, shift, scale, seed) in [
        ("same distribution", 0.0, 1.0, 2),
        ("shifted by 0.5", 0.5, 1.0, 3),
        ("widened x1.5", 0.0, 1.5, 4),
    ] {
        let gen = cloud(400, dim, shift, scale, seed)?;
        let fid = frechet_distance(&real_stats, &gaussian_stats(&gen)?)?;
        let kid = kid_mmd2(&real, &gen, &cfg)?;
        println!("{name:<22} {fid:>10.4} {:>12.6} {:>10.6}", kid.mean, kid.stddev);
    }
    Ok(())
}
