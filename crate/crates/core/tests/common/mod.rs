#![allow(dead_code)]

use std::path::PathBuf;

use gmrobust::model_io::read_model;
use gmrobust::{compose, Network};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn load(name: &str) -> Network {
    read_model(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Identity generator on R^1 composed with the threshold classifier, both
/// read from the checked-in files.
pub fn threshold_model() -> Network {
    compose(&load("identity_generator_1d.nnw"), &load("threshold_classifier.nnw")).unwrap()
}

pub fn linear_boundary_model() -> Network {
    compose(&load("identity_generator_2d.nnw"), &load("linear_boundary_classifier.nnw")).unwrap()
}

pub fn planar_models() -> Vec<Network> {
    ["a", "b", "c"]
        .iter()
        .map(|t| {
            compose(
                &load(&format!("planar_{t}_generator.nnw")),
                &load(&format!("planar_{t}_classifier.nnw")),
            )
            .unwrap()
        })
        .collect()
}

/// Standard normal CDF.
pub fn phi(x: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}
