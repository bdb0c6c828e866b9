//! Contrast control images for both modes, written next to the system temp dir.

use camoval::controls::contrast_control;
use camoval::corpus::{ImageBuffer, RegionMask, SampleRecord, Subset};
use camoval::Mode;

fn main() -> camoval::Result<()> {
    let (w, h) = (48, 32);
    let mask = RegionMask::from_fn(w, h, |x, y| (16..32).contains(&x) && (8..24).contains(&y))?;
    let image = ImageBuffer::from_fn(w, h, |x, y| {
        if mask.is_foreground(x, y) {
            [200, 60, 40]
        } else {
            [(x * 5) as u8, (y * 7) as u8, 90]
        }
    })?;
    let sample = SampleRecord::new("demo", image, mask, Subset::General)?;

    let dir = std::env::temp_dir().join("camoval_controls_example");
    std::fs::create_dir_all(&dir)?;
    for mode in [Mode::Training, Mode::Inference] {
        let control = contrast_control(&sample, mode)?;
        let path = dir.join(format!("demo_{mode:?}.png").to_lowercase());
        control.image.save_png(&path)?;
        println!("{mode:?}: corner pixel {:?} -> {:?}, written to {}", sample.image.pixel(0, 31), control.image.pixel(0, 31), path.display());
    }
    Ok(())
}
