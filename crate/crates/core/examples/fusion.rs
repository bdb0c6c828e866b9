//! Visual condition fusion and prompt assembly.

use camoval::corpus::RegionMask;
use camoval::fusion::{assemble_prompt, canonical_task_description, fuse_visual, TokenOrigin, TokenSequence};
use camoval::retrieval::{EmbeddingVector, FeatureGrid};
use camoval::Mode;

fn constant_grid(value: f64) -> camoval::Result<FeatureGrid> {
    FeatureGrid::from_fn(2, 2, 3, |_, _, _| value)
}

fn main() -> camoval::Result<()> {
    let target = FeatureGrid::from_fn(2, 2, 3, |r, c, _| (r * 2 + c) as f64)?;
    let retrieved = [constant_grid(10.0)?, constant_grid(20.0)?];
    // foreground is the left column of cells
    let mask = RegionMask::from_fn(8, 8, |x, _| x < 4)?;

    for mode in [Mode::Training, Mode::Inference] {
        let fused = fuse_visual(&target, &retrieved, &mask, mode)?;
        let cells: Vec<f64> = fused.cells().map(|c| c[0]).collect();
        println!("{mode:?}: first channel per cell {cells:?}");
    }

    let text = TokenSequence::textual(vec![EmbeddingVector::new(vec![0.5; 3]); 4])?;
    let class = EmbeddingVector::new(vec![-1.0; 3]);
    let fused = fuse_visual(&target, &retrieved, &mask, Mode::Inference)?;
    let prompt = assemble_prompt(&text, &class, &fused)?;
    println!("prompt tokens: {} ({})", prompt.len(), prompt.origin_tags());
    println!("visual part:   {} tokens", prompt.part(TokenOrigin::Visual).len());
    println!("task description: {}", canonical_task_description());
    Ok(())
}
