//! Random walk in noise space, written as PGM frames.
//!
//! ```text
//! cargo run --example random_walk -- /tmp/walk
//! ```

use gmrobust::experiments::{random_walk_path, write_frames, WalkConfig};
use gmrobust::fixtures;

fn main() -> gmrobust::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "walk".into());
    // random weights, real shapes: 28x28 tanh images
    let g = fixtures::mnist_shaped_generator(fixtures::SKELETON_LATENT_DIM, 3);
    let cfg = WalkConfig {
        sigma: 0.1,
        ..WalkConfig::new(24, 11, (28, 28))
    };
    let walk = random_walk_path(&g, &cfg)?;
    for (i, pair) in walk.frames.windows(2).enumerate().take(5) {
        println!("step {i}: image moved {:.4} (linf)", pair[1].linf_distance(&pair[0])?);
    }
    let paths = write_frames(&out, &walk.frames, cfg.frame_shape, g.output_activation())?;
    println!("{} frames in {out}", paths.len());
    Ok(())
}
