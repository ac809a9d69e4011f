//! Black-box search for a realistic adversarial example: two ε-close noises
//! whose generated images are classified differently. Only logits are used.

use std::path::Path;

use gmrobust::attacks::{black_box_attack, black_box_search, verify_adv_example, AttackParams, CountingOracle};
use gmrobust::compose;
use gmrobust::model_io::read_model;

fn main() -> gmrobust::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let net = compose(
        &read_model(dir.join("identity_generator_2d.nnw"))?,
        &read_model(dir.join("tiny_classifier.nnw"))?,
    )?;
    // push toward category 0 from wherever the start point lands
    let params = AttackParams::new(0.3, 0, 2, 5);

    match black_box_attack(&net, &params)? {
        Some(adv) => {
            println!("x  = {:?} -> category {}", adv.x.data(), adv.category_x);
            println!("x' = {:?} -> category {}", adv.x_prime.data(), adv.category_x_prime);
            println!("linf distance {} (eps {})", adv.linf_distance, params.epsilon);
            println!("re-verified: {}", verify_adv_example(&adv, &net, params.epsilon));
        }
        None => println!("nothing found in {} restarts", params.max_restarts),
    }

    let counter = CountingOracle::new(&net);
    black_box_search(&counter, &params)?;
    println!("network evaluations: {}", counter.evaluations());
    Ok(())
}
