//! Certified / falsified / unknown counts over ε-balls in noise space, and
//! the resulting bracket on global robustness.

use std::path::Path;

use gmrobust::attacks::FalsifyBudget;
use gmrobust::estimator::{estimate_global_robustness, SamplingConfig};
use gmrobust::model_io::read_model;

fn main() -> gmrobust::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let g = read_model(dir.join("planar_a_generator.nnw"))?;
    let c = read_model(dir.join("planar_a_classifier.nnw"))?;
    let cfg = SamplingConfig::new(5_000, 1);
    let budget = FalsifyBudget { n_step: 16, restarts: 4 };

    println!("{:>6} {:>9} {:>9} {:>8}   bracket", "eps", "certified", "falsified", "unknown");
    for eps in [0.0, 0.01, 0.05, 0.1, 0.2, 0.5] {
        let r = estimate_global_robustness(&c, &g, 2, eps, &cfg, budget)?;
        println!(
            "{eps:>6} {:>9} {:>9} {:>8}   [{:.4}, {:.4}]",
            r.certified, r.falsified, r.unknown, r.lower_bound, r.upper_bound
        );
    }
    Ok(())
}
