//! Load a generator and a classifier, wire them together and classify a few
//! noises. Also shows what the generator produced for each noise.

use std::path::Path;

use gmrobust::model_io::read_model;
use gmrobust::{compose, sample_gaussian, RngStream};

fn main() -> gmrobust::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let g = read_model(fixtures.join("planar_a_generator.nnw"))?;
    let c = read_model(fixtures.join("planar_a_classifier.nnw"))?;
    let net = compose(&g, &c)?;
    println!("composed: {} layers, noise dim {}, {} categories", net.layers().len(), net.input_dim(), net.output_dim());

    let mut rng = RngStream::new(7, 0);
    for x in sample_gaussian(&mut rng, net.input_dim(), 5) {
        let image = net.generate(&x)?;
        let p = net.classify(&x)?;
        println!(
            "x = {:>7.3?}  G(x) = {:>7.3?}  category {} (score {:.3}, runner-up {})",
            x.data(),
            image.data(),
            p.category,
            p.score,
            p.runner_up()
        );
    }
    Ok(())
}
