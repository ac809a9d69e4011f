//! Noises whose generated image is misclassified, with images dumped as PGM.

use std::path::Path;

use gmrobust::estimator::SamplingConfig;
use gmrobust::experiments::{mine_outliers, write_outlier_images};
use gmrobust::model_io::read_model;

fn main() -> gmrobust::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let g = read_model(dir.join("planar_a_generator.nnw"))?;
    let c = read_model(dir.join("planar_a_classifier.nnw"))?;
    let cfg = SamplingConfig::new(2_000, 3);

    let outliers = mine_outliers(&c, &g, 0, &cfg)?;
    println!("{} of {} samples are not category 0", outliers.len(), cfg.n);
    let mut by_class = vec![0usize; c.output_dim()];
    for o in &outliers {
        by_class[o.prediction.category] += 1;
    }
    println!("predicted instead: {by_class:?}");
    for o in outliers.iter().take(3) {
        println!("  sample {}: noise {:.3?}, logits {:.3?}", o.index, o.noise.data(), o.prediction.logits);
    }

    let out = std::env::temp_dir().join("gmrobust-outliers");
    let written = write_outlier_images(&out, &outliers[..outliers.len().min(10)], &g, (2, 2))?;
    println!("wrote {} images to {}", written.len(), out.display());
    Ok(())
}
