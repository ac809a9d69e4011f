//! Local robustness of one noise: interval bounds, the certified margin as ε
//! grows, and the exhaustive grid oracle as a cross-check.

use std::path::Path;

use gmrobust::model_io::read_model;
use gmrobust::verifier::{certified_margin, certify, grid_falsify, ibp_propagate, IntervalVector, Verdict};
use gmrobust::{compose, Tensor};

fn main() -> gmrobust::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let net = compose(
        &read_model(dir.join("planar_c_generator.nnw"))?,
        &read_model(dir.join("planar_c_classifier.nnw"))?,
    )?;
    let x = Tensor::vector(vec![0.4, -0.9])?;
    let c = net.classify(&x)?.category;
    println!("x = {:?} is category {c}", x.data());

    let out = ibp_propagate(&net, &IntervalVector::ball(x.data(), 0.05))?;
    println!("logit bounds at eps 0.05:");
    for (k, (lo, hi)) in out.lo().iter().zip(out.hi()).enumerate() {
        println!("  {k}: [{lo:.4}, {hi:.4}]");
    }

    for eps in [0.01, 0.05, 0.1, 0.2, 0.4, 0.8] {
        let margin = certified_margin(&net, &x, eps, c)?;
        let verdict = match certify(&net, &x, eps, c)? {
            Verdict::Certified { .. } => "certified".to_string(),
            _ => match grid_falsify(&net, &x, eps, c, 200)? {
                Some(p) => format!("not robust, e.g. {:.4?} is category {}", p.data(), net.classify(&p)?.category),
                None => "unknown (grid found nothing)".to_string(),
            },
        };
        println!("eps {eps:<5} margin {margin:>8.4}  {verdict}");
    }
    Ok(())
}
