//! Hand-built networks with known behavior, shared by tests, examples and the
//! checked-in fixture files under `fixtures/`.

use crate::network::{compose, Layer, Network, Role};
use crate::rng::RngStream;
use crate::tensor::Activation;

/// Latent size used for the MNIST-shaped generator skeleton.
pub const SKELETON_LATENT_DIM: usize = 100;

fn single(role: Role, layer: Layer) -> Network {
    Network::new(role, vec![layer]).expect("fixture layer is well formed")
}

fn identity_layer(n: usize) -> Layer {
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        w[i * n + i] = 1.0;
    }
    Layer::dense(n, n, w, vec![0.0; n], Activation::Identity).expect("identity layer")
}

/// `G(x) = x` on `R^n`.
pub fn identity_generator(n: usize) -> Network {
    single(Role::Generator, identity_layer(n))
}

/// Logits equal to the input on `R^n`, `n >= 2`.
pub fn identity_classifier(n: usize) -> Network {
    single(Role::Classifier, identity_layer(n))
}

/// 1-D classifier with logits `(-y, y)`: category 1 iff `y > 0`, and
/// category 0 at `y = 0` by the tie rule.
pub fn threshold_classifier() -> Network {
    single(
        Role::Classifier,
        Layer::dense(2, 1, vec![-1.0, 1.0], vec![0.0, 0.0], Activation::Identity).unwrap(),
    )
}

/// Identity generator on `R^1` composed with [`threshold_classifier`].
pub fn threshold_model() -> Network {
    compose(&identity_generator(1), &threshold_classifier()).unwrap()
}

/// 2-D classifier with logits `(-(y1 + y2), y1 + y2)`; the boundary is the
/// line `y1 + y2 = 0` and the gradient of either logit is `±(1, 1)`.
pub fn linear_boundary_classifier() -> Network {
    single(
        Role::Classifier,
        Layer::dense(
            2,
            2,
            vec![-1.0, -1.0, 1.0, 1.0],
            vec![0.0, 0.0],
            Activation::Identity,
        )
        .unwrap(),
    )
}

pub fn linear_boundary_model() -> Network {
    compose(&identity_generator(2), &linear_boundary_classifier()).unwrap()
}

/// Hand-built 2-D classifier with three categories. The hidden relu layer
/// splits each coordinate into positive and negative parts `(y1+, y2+, y1-, y2-)`;
/// the logits are `(y1+, y2+, 0.5 * (y1- + y2-) + 0.25)`.
pub fn tiny_classifier() -> Network {
    Network::new(
        Role::Classifier,
        vec![
            Layer::dense(
                4,
                2,
                vec![1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0],
                vec![0.0; 4],
                Activation::Relu,
            )
            .unwrap(),
            Layer::dense(
                3,
                4,
                vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.5, 0.5],
                vec![0.0, 0.0, 0.25],
                Activation::Identity,
            )
            .unwrap(),
        ],
    )
    .unwrap()
}

/// Zero weights with a one-hot bias, so every input lands in `category`.
pub fn constant_classifier(input_dim: usize, classes: usize, category: usize) -> Network {
    let mut bias = vec![0.0; classes];
    bias[category] = 1.0;
    single(
        Role::Classifier,
        Layer::dense(
            classes,
            input_dim,
            vec![0.0; classes * input_dim],
            bias,
            Activation::Identity,
        )
        .unwrap(),
    )
}

/// Dense network with Gaussian weights scaled by `1/sqrt(fan_in)` and small
/// Gaussian biases. `dims` lists every width including input and output;
/// `activations` has one entry per layer.
pub fn random_net(role: Role, dims: &[usize], activations: &[Activation], seed: u64) -> Network {
    assert_eq!(dims.len(), activations.len() + 1, "one activation per layer");
    let mut rng = RngStream::new(seed, 0);
    let layers = dims
        .windows(2)
        .zip(activations)
        .map(|(pair, &act)| {
            let (cols, rows) = (pair[0], pair[1]);
            let scale = 1.0 / (cols as f64).sqrt();
            let w = rng.normal_vec(rows * cols, scale);
            let b = rng.normal_vec(rows, 0.1);
            Layer::dense(rows, cols, w, b, act).unwrap()
        })
        .collect();
    Network::new(role, layers).unwrap()
}

/// Generator with the widths `latent -> 256 -> 512 -> 1024 -> 784`, relu
/// hidden layers and a tanh output, filled with random weights.
pub fn mnist_shaped_generator(latent_dim: usize, seed: u64) -> Network {
    use Activation::*;
    random_net(
        Role::Generator,
        &[latent_dim, 256, 512, 1024, 784],
        &[Relu, Relu, Relu, Tanh],
        seed,
    )
}

/// Classifier with hidden widths `(32, 64, 200)` on 28x28 inputs, 10 logits.
pub fn mnist_shaped_classifier(seed: u64) -> Network {
    use Activation::*;
    random_net(
        Role::Classifier,
        &[784, 32, 64, 200, 10],
        &[Relu, Relu, Relu, Identity],
        seed,
    )
}

/// Generator and classifier pairs on 2-D noise with nonlinear decision
/// boundaries; checked in as `fixtures/planar_*.nnw`.
pub fn planar_pairs() -> Vec<(Network, Network)> {
    use Activation::*;
    vec![
        (
            random_net(Role::Generator, &[2, 6, 4], &[Tanh, Identity], 101),
            random_net(Role::Classifier, &[4, 8, 3], &[Relu, Identity], 102),
        ),
        (
            random_net(Role::Generator, &[2, 5], &[Sigmoid], 201),
            random_net(Role::Classifier, &[5, 6, 6, 2], &[Tanh, Relu, Identity], 202),
        ),
        (
            identity_generator(2),
            random_net(Role::Classifier, &[2, 10, 4], &[Relu, Identity], 302),
        ),
    ]
}

/// [`planar_pairs`], composed.
pub fn planar_models() -> Vec<Network> {
    planar_pairs()
        .iter()
        .map(|(g, c)| compose(g, c).unwrap())
        .collect()
}

/// Networks used for gradient checks: every activation kind appears.
pub fn gradient_check_nets() -> Vec<Network> {
    use Activation::*;
    vec![
        random_net(Role::Classifier, &[3, 5, 2], &[Tanh, Identity], 1),
        random_net(Role::Classifier, &[4, 8, 8, 3], &[Relu, Relu, Identity], 2),
        random_net(Role::Classifier, &[2, 6, 4], &[Sigmoid, Identity], 3),
        compose(
            &random_net(Role::Generator, &[3, 7, 6], &[Relu, Tanh], 4),
            &random_net(Role::Classifier, &[6, 5, 4], &[Sigmoid, Identity], 5),
        )
        .unwrap(),
        compose(
            &random_net(Role::Generator, &[5, 16, 9], &[Tanh, Sigmoid], 6),
            &random_net(Role::Classifier, &[9, 12, 10], &[Relu, Identity], 7),
        )
        .unwrap(),
    ]
}
