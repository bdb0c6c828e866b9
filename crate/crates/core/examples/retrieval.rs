//! Texture-oriented retrieval over a small knowledge base of token grids.
//!
//! Each base entry is a 4x4 grid of 8-dim tokens generated around one of
//! three "texture" directions. The target's masked pool is built from its
//! background cells, so the nearest entries share its background texture.

use camoval::cemb::{CembIndex, CembTensor, IndexedCemb};
use camoval::corpus::RegionMask;
use camoval::retrieval::{masked_avg_pool, retrieve_topk, FeatureGrid, KnowledgeBase};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DIM: usize = 8;

fn textured_grid(texture: usize, rng: &mut ChaCha8Rng) -> camoval::Result<FeatureGrid> {
    FeatureGrid::from_fn(4, 4, DIM, |_, _, d| {
        let base = if d % 3 == texture { 1.0 } else { 0.1 };
        base + rng.gen_range(-0.05..0.05)
    })
}

fn main() -> camoval::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut ids = Vec::new();
    let mut grids = Vec::new();
    for i in 0..12 {
        let texture = i % 3;
        ids.push(format!("base_{i:02}_t{texture}"));
        grids.push(textured_grid(texture, &mut rng)?);
    }

    // persist and reload through the binary format with its id sidecar
    let dir = std::env::temp_dir().join("camoval_retrieval_example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("base.cemb");
    IndexedCemb {
        tensor: CembTensor::from_grids(&grids)?,
        index: Some(CembIndex::from_ids(ids.clone())),
    }
    .save(&path)?;
    let loaded = IndexedCemb::load(&path)?;
    let base = KnowledgeBase::from_grids(loaded.ids(), &loaded.tensor.grids()?)?;

    let target = textured_grid(1, &mut rng)?;
    // 32x32 mask whose foreground covers the two top rows of cells
    let mask = RegionMask::from_fn(32, 32, |_, y| y < 16)?;
    let query = masked_avg_pool(&target, &mask)?;
    let result = retrieve_topk(&query, &base, 4)?;
    for (rank, c) in result.ranked.iter().enumerate() {
        println!("{}. {:<12} {:.6}", rank + 1, c.id, c.score);
    }
    Ok(())
}
