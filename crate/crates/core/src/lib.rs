//! Measuring how well an image classifier holds up against the images a
//! generative model produces.
//!
//! Composing a generator `G: R^p -> R^d` with a classifier `C: R^d -> R^k`
//! gives a network from latent noise to categories. This crate estimates, by
//! Monte Carlo over `x ~ N(0, 1)^p`:
//!
//! * **global correctness**: the probability that `C(G(x))` is the category
//!   `G` was trained on ([`estimator::estimate_global_correctness`]);
//! * **global robustness**: the probability that the whole ε-ball (infinity
//!   norm) around `x` stays in that category, with each ball certified by
//!   interval bound propagation, falsified by projected gradient ascent, or
//!   left unknown ([`estimator::estimate_global_robustness`]).
//!
//! It also searches for realistic adversarial examples, i.e. pairs of ε-close
//! noises classified differently ([`attacks`]), and provides the random walk,
//! outlier and generator comparison instruments in [`experiments`].
//!
//! Networks are read from a plain-text model format ([`model_io`]).

pub mod attacks;
pub mod cli;
mod doc;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod fixtures;
pub mod model_io;
pub mod network;
pub mod rng;
pub mod tensor;
pub mod verifier;

pub use error::{Error, Result};
pub use network::{compose, Layer, Network, Prediction, Role};
pub use rng::{sample_gaussian, RngStream};
pub use tensor::{activate, affine, Activation, Tensor};
