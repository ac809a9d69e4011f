//! Monte Carlo estimate of P(C(G(x)) = c) with a Wilson interval, on the
//! 1-D threshold model where the true value is exactly 0.5.

use std::path::Path;

use gmrobust::estimator::{estimate_global_correctness, SamplingConfig};
use gmrobust::model_io::read_model;

fn main() -> gmrobust::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let g = read_model(dir.join("identity_generator_1d.nnw"))?;
    let c = read_model(dir.join("threshold_classifier.nnw"))?;

    for n in [100, 1_000, 10_000, 100_000] {
        let report = estimate_global_correctness(&c, &g, 1, &SamplingConfig::new(n, 42))?;
        let (lo, hi) = report.confidence_interval;
        println!("n = {n:>6}: estimate {:.4}, 95% CI [{lo:.4}, {hi:.4}]", report.point_estimate);
    }

    let report = estimate_global_correctness(&c, &g, 1, &SamplingConfig::new(10_000, 42).with_level(0.99))?;
    print!("\n{}", report.to_toml());
    Ok(())
}
