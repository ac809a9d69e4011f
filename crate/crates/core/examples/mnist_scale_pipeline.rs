//! Every stage at the layer shapes of a real MNIST setup (100-d noise,
//! 784-pixel tanh images, a (32, 64, 200) classifier), with random weights.
//! Useful for timing; the numbers say nothing about trained models.

use std::time::Instant;

use gmrobust::attacks::{white_box_attack, AttackParams, FalsifyBudget};
use gmrobust::estimator::{estimate_global_correctness, estimate_global_robustness, SamplingConfig};
use gmrobust::fixtures::{mnist_shaped_classifier, mnist_shaped_generator, SKELETON_LATENT_DIM};
use gmrobust::{compose, RngStream, Tensor};

fn main() -> gmrobust::Result<()> {
    let g = mnist_shaped_generator(SKELETON_LATENT_DIM, 1);
    let c = mnist_shaped_classifier(2);
    let net = compose(&g, &c)?;

    // Use the most common category of this random pair as "the" category.
    let mut counts = [0usize; 10];
    let mut rng = RngStream::new(0, 0);
    for _ in 0..200 {
        let x = Tensor::vector(rng.normal_vec(SKELETON_LATENT_DIM, 1.0))?;
        counts[net.classify(&x)?.category] += 1;
    }
    let category = (0..10).max_by_key(|&k| counts[k]).unwrap();
    println!("category {category} ({} of 200 pilot samples)", counts[category]);

    let t = Instant::now();
    let r = estimate_global_correctness(&c, &g, category, &SamplingConfig::new(10_000, 1))?;
    println!(
        "correctness: {:.4} [{:.4}, {:.4}] in {:.2?}",
        r.point_estimate, r.confidence_interval.0, r.confidence_interval.1, t.elapsed()
    );

    let t = Instant::now();
    let r = estimate_global_robustness(&c, &g, category, 0.001, &SamplingConfig::new(200, 1), FalsifyBudget::default())?;
    println!(
        "robustness at eps 0.001: certified {}, falsified {}, unknown {} in {:.2?}",
        r.certified, r.falsified, r.unknown, t.elapsed()
    );

    let t = Instant::now();
    let target = (category + 1) % 10;
    let params = AttackParams::new(0.1, target, category, 3).with_restarts(20);
    match white_box_attack(&net, &params)? {
        Some(adv) => println!(
            "white-box attack: {} -> {} at distance {:.4} in {:.2?}",
            adv.category_x, adv.category_x_prime, adv.linf_distance, t.elapsed()
        ),
        None => println!("white-box attack: nothing in 20 restarts ({:.2?})", t.elapsed()),
    }
    Ok(())
}
