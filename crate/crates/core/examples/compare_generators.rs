//! One classifier measured against several generators with shared seeds.

use gmrobust::estimator::SamplingConfig;
use gmrobust::experiments::compare_generators;
use gmrobust::fixtures::{identity_generator, random_net, tiny_classifier};
use gmrobust::{Activation, Role};

fn main() -> gmrobust::Result<()> {
    let generators = vec![
        identity_generator(2),
        random_net(Role::Generator, &[2, 8, 2], &[Activation::Relu, Activation::Identity], 1),
        random_net(Role::Generator, &[2, 8, 2], &[Activation::Relu, Activation::Identity], 2),
        random_net(Role::Generator, &[3, 2], &[Activation::Tanh], 3),
    ];
    let report = compare_generators(&tiny_classifier(), &generators, 2, &SamplingConfig::new(10_000, 9))?;
    for (label, e) in report.generator_labels.iter().zip(&report.rows[0].estimates) {
        let (lo, hi) = e.confidence_interval;
        println!("{label}: {:.4} [{lo:.4}, {hi:.4}]", e.point_estimate);
    }
    println!("max discrepancy {:.4}", report.rows[0].max_discrepancy);
    print!("\n{}", report.to_toml());
    Ok(())
}
