//! Regenerates the seeded fixture files and, optionally, the MNIST-shaped
//! skeleton models.
//!
//! ```text
//! cargo run --example write_fixtures -- crates/core/fixtures
//! cargo run --example write_fixtures -- /tmp/skeleton --skeleton
//! ```

use std::path::PathBuf;

use gmrobust::fixtures;
use gmrobust::model_io::write_model;

fn main() -> gmrobust::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "fixtures".into()));
    let skeleton = args.any(|a| a == "--skeleton");
    std::fs::create_dir_all(&dir).expect("create output directory");

    for (i, (g, c)) in fixtures::planar_pairs().iter().enumerate() {
        let tag = (b'a' + i as u8) as char;
        write_model(dir.join(format!("planar_{tag}_generator.nnw")), g)?;
        write_model(dir.join(format!("planar_{tag}_classifier.nnw")), c)?;
    }

    if skeleton {
        // Random weights with the real layer shapes, for timing the pipeline.
        let g = fixtures::mnist_shaped_generator(fixtures::SKELETON_LATENT_DIM, 1);
        let c = fixtures::mnist_shaped_classifier(2);
        write_model(dir.join("skeleton_generator.nnw"), &g)?;
        write_model(dir.join("skeleton_classifier.nnw"), &c)?;
    }
    println!("wrote fixtures to {}", dir.display());
    Ok(())
}
