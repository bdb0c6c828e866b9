//! End-to-end batch evaluation on a synthetic dataset: writes images, masks,
//! a manifest and feature files, then runs the generation and detection
//! reports exactly as the command-line tool would.

use std::path::Path;

use camoval::cemb::{CembIndex, CembTensor, IndexedCemb};
use camoval::commands::{cmd_eval_cod, cmd_eval_gen, EvalCodOptions, EvalGenOptions};
use camoval::corpus::{DatasetManifest, ImageBuffer, ManifestEntry, RegionMask, Subset};
use camoval::retrieval::EmbeddingVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn write_dataset(dir: &Path, rng: &mut ChaCha8Rng) -> camoval::Result<Vec<ManifestEntry>> {
    let mut entries = Vec::new();
    for i in 0..9 {
        let subset = Subset::ALL[i % 3];
        let id = format!("img{i}");
        let r = 8 + i;
        let mask = RegionMask::from_fn(40, 40, |x, y| x.abs_diff(20) < r && y.abs_diff(20) < r)?;
        let fg = match subset {
            Subset::Camouflaged => [100, 120, 70],
            Subset::Salient => [240, 30, 30],
            Subset::General => [170, 140, 90],
        };
        let image = ImageBuffer::from_fn(40, 40, |x, y| {
            let base = if mask.is_foreground(x, y) { fg } else { [95, 115, 75] };
            base.map(|c: u8| c.saturating_add(rng.gen_range(0..20)))
        })?;
        image.save_png(&dir.join(format!("{id}.png")))?;
        mask.save_png(&dir.join(format!("{id}_mask.png")))?;
        // the prediction for detection scoring is the mask itself
        std::fs::create_dir_all(dir.join("pred"))?;
        mask.save_png(&dir.join("pred").join(format!("{id}.png")))?;
        entries.push(
            ManifestEntry::new(&id, format!("{id}.png"), format!("{id}_mask.png"), subset).with_reference(format!("{id}.png")),
        );
    }
    Ok(entries)
}

fn write_features(path: &Path, ids: &[String], shift: f64, rng: &mut ChaCha8Rng) -> camoval::Result<()> {
    let vectors: Vec<EmbeddingVector> = ids
        .iter()
        .map(|_| EmbeddingVector::new((0..6).map(|_| shift + rng.gen_range(-1.0..1.0)).collect()))
        .collect();
    let mut index = CembIndex::from_ids(ids.to_vec());
    index.metadata.insert("preprocessing".into(), "synthetic".into());
    IndexedCemb { tensor: CembTensor::from_embeddings(&vectors)?, index: Some(index) }.save(path)
}

fn main() -> camoval::Result<()> {
    let dir = std::env::temp_dir().join("camoval_pipeline_example");
    std::fs::create_dir_all(&dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let entries = write_dataset(&dir, &mut rng)?;
    let ids: Vec<String> = entries.iter().map(|e| e.id.clone()).collect();
    DatasetManifest::new(&dir, entries).save(&dir.join("manifest.jsonl"))?;
    write_features(&dir.join("real.cemb"), &ids, 0.0, &mut rng)?;
    write_features(&dir.join("gen.cemb"), &ids, 0.3, &mut rng)?;

    let mut opts = EvalGenOptions::new(dir.join("manifest.jsonl"), dir.join("report.json"));
    opts.features_real = Some(dir.join("real.cemb"));
    opts.features_gen = Some(dir.join("gen.cemb"));
    let report = cmd_eval_gen(&opts)?;
    let gen = report.body.generation.as_ref().expect("generation section");
    for (subset, agg) in &gen.subsets {
        println!("{subset:<14} images={} kl_bf={:?} ssim={:?}", agg.images, agg.kl_bf_mean, agg.ssim_mean);
    }
    if let Some(f) = &gen.overall.features {
        println!("overall        fid={:?} kid={:?}", f.fid, f.kid_mean);
    }

    let cod = cmd_eval_cod(&EvalCodOptions {
        manifest: dir.join("manifest.jsonl"),
        pred_dir: dir.join("pred"),
        out: dir.join("cod.json"),
        workers: None,
    })?;
    println!("detection means: {:?}", cod.body.cod.as_ref().and_then(|c| c.overall.means.clone()));
    println!("reports in {}", dir.display());
    Ok(())
}
