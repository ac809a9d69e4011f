//! White-box search: projected ascent along the gradient of the target
//! logit. Compared with the black-box search on the same seeds.

use std::path::Path;

use gmrobust::attacks::{black_box_search, white_box_attack, white_box_search, AttackParams, CountingOracle};
use gmrobust::compose;
use gmrobust::model_io::read_model;

fn main() -> gmrobust::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let net = compose(
        &read_model(dir.join("identity_generator_2d.nnw"))?,
        &read_model(dir.join("linear_boundary_classifier.nnw"))?,
    )?;

    let params = AttackParams::new(0.5, 0, 1, 0);
    if let Some(adv) = white_box_attack(&net, &params)? {
        println!(
            "seed 0: {:?} (cat {}) -> {:?} (cat {}), distance {}",
            adv.x.data(),
            adv.category_x,
            adv.x_prime.data(),
            adv.category_x_prime,
            adv.linf_distance
        );
    }

    let (mut found, mut evals) = ([0; 2], [0; 2]);
    for seed in 0..200 {
        let p = AttackParams::new(0.5, 0, 1, seed).with_restarts(1);
        let w = CountingOracle::new(&net);
        let b = CountingOracle::new(&net);
        found[0] += white_box_search(&w, &p)?.is_some() as usize;
        found[1] += black_box_search(&b, &p)?.is_some() as usize;
        evals[0] += w.evaluations();
        evals[1] += b.evaluations();
    }
    println!("200 single-restart runs");
    println!("  white-box: {} found, {} evaluations", found[0], evals[0]);
    println!("  black-box: {} found, {} evaluations", found[1], evals[1]);
    Ok(())
}
