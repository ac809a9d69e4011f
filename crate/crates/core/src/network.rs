//! Feedforward dense networks: evaluation, classification, composition of a
//! generator with a classifier, and reverse-mode input gradients.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tensor::{affine_into, Activation, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Generator,
    Classifier,
    Composed,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Generator => "generator",
            Role::Classifier => "classifier",
            Role::Composed => "composed",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "generator" => Ok(Role::Generator),
            "classifier" => Ok(Role::Classifier),
            "composed" => Ok(Role::Composed),
            other => Err(Error::Config(format!("unknown network role {other:?}"))),
        }
    }
}

/// One dense layer: `activation(W x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    weights: Tensor,
    bias: Tensor,
    activation: Activation,
}

impl Layer {
    pub fn new(weights: Tensor, bias: Tensor, activation: Activation) -> Result<Self> {
        if weights.shape().len() != 2 {
            return Err(Error::dim(
                "layer weights",
                "rank 2",
                format!("shape {:?}", weights.shape()),
            ));
        }
        if bias.shape() != [weights.rows()] {
            return Err(Error::dim(
                "layer bias against weight rows",
                format!("[{}]", weights.rows()),
                format!("{:?}", bias.shape()),
            ));
        }
        Ok(Layer {
            weights,
            bias,
            activation,
        })
    }

    /// Convenience constructor from row-major weights.
    pub fn dense(
        rows: usize,
        cols: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        Layer::new(
            Tensor::matrix(rows, cols, weights)?,
            Tensor::vector(bias)?,
            activation,
        )
    }

    pub fn weights(&self) -> &Tensor {
        &self.weights
    }

    pub fn bias(&self) -> &Tensor {
        &self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
    input_dim: usize,
    output_dim: usize,
    role: Role,
    /// Number of leading layers that came from the generator (composed nets only).
    generator_depth: Option<usize>,
    meta: BTreeMap<String, String>,
}

impl Network {
    /// Builds a generator or classifier. Composed networks come from [`compose`].
    pub fn new(role: Role, layers: Vec<Layer>) -> Result<Self> {
        if role == Role::Composed {
            return Err(Error::Role(
                "composed networks are built with compose(), not directly".into(),
            ));
        }
        Network::assemble(role, layers, None)
    }

    fn assemble(role: Role, layers: Vec<Layer>, generator_depth: Option<usize>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::invariant(None, "network has no layers"))?;
        let input_dim = first.input_dim();
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::invariant(
                    Some(i + 1),
                    format!(
                        "input dim {} does not match previous layer output dim {}",
                        pair[1].input_dim(),
                        pair[0].output_dim()
                    ),
                ));
            }
        }
        let output_dim = layers[layers.len() - 1].output_dim();
        Ok(Network {
            layers,
            input_dim,
            output_dim,
            role,
            generator_depth,
            meta: BTreeMap::new(),
        })
    }

    pub fn with_meta(mut self, meta: BTreeMap<String, String>) -> Self {
        self.meta = meta;
        self
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }

    pub fn output_activation(&self) -> Activation {
        self.layers[self.layers.len() - 1].activation
    }

    /// Activation of the layer that produces images: the last generator layer
    /// of a composed net, or the final layer otherwise.
    pub fn image_activation(&self) -> Activation {
        match self.generator_depth {
            Some(depth) => self.layers[depth - 1].activation,
            None => self.output_activation(),
        }
    }

    fn check_input(&self, x: &Tensor, context: &str) -> Result<()> {
        if x.shape() != [self.input_dim] {
            return Err(Error::dim(
                format!("{context} input of {} network", self.role),
                format!("[{}]", self.input_dim),
                format!("{:?}", x.shape()),
            ));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x, "forward")?;
        let out = self.forward_slice(x.data());
        finite_or(&out, "forward")?;
        Ok(Tensor::from_parts_unchecked(vec![self.output_dim], out))
    }

    /// Forward pass on a raw slice; the caller guarantees the length.
    pub(crate) fn forward_slice(&self, x: &[f64]) -> Vec<f64> {
        run_layers(&self.layers, x)
    }

    /// Evaluates `inputs.len() / input_dim` row-major inputs, layer by layer.
    /// Each row is bitwise identical to [`Network::forward`] on that row.
    pub fn forward_batch(&self, inputs: &[f64]) -> Result<Vec<f64>> {
        if !inputs.len().is_multiple_of(self.input_dim) {
            return Err(Error::dim(
                "forward_batch input buffer",
                format!("a multiple of {}", self.input_dim),
                inputs.len(),
            ));
        }
        let batch = inputs.len() / self.input_dim;
        let mut current = inputs.to_vec();
        let mut width = self.input_dim;
        for layer in &self.layers {
            let out_w = layer.output_dim();
            let mut next = vec![0.0; batch * out_w];
            for (x, out) in current.chunks_exact(width).zip(next.chunks_exact_mut(out_w)) {
                affine_into(layer.weights.data(), layer.bias.data(), x, out);
                for v in out.iter_mut() {
                    *v = layer.activation.apply(*v);
                }
            }
            current = next;
            width = out_w;
        }
        finite_or(&current, "forward_batch")?;
        Ok(current)
    }

    /// Generated image for noise `x`: runs only the generator layers of a
    /// composed network, or the whole network for a generator.
    pub fn generate(&self, x: &Tensor) -> Result<Tensor> {
        let depth = match (self.role, self.generator_depth) {
            (Role::Composed, Some(d)) => d,
            (Role::Generator, _) => self.layers.len(),
            _ => {
                return Err(Error::Role(format!(
                    "cannot generate images with a {} network",
                    self.role
                )))
            }
        };
        self.check_input(x, "generate")?;
        let out = run_layers(&self.layers[..depth], x.data());
        finite_or(&out, "generate")?;
        Ok(Tensor::from_parts_unchecked(vec![out.len()], out))
    }

    fn check_classifies(&self) -> Result<()> {
        if self.role == Role::Generator {
            return Err(Error::Role("classify requires a classifier or composed network".into()));
        }
        if self.output_dim < 2 {
            return Err(Error::Config(format!(
                "a classifier needs at least 2 categories, this one has {}",
                self.output_dim
            )));
        }
        Ok(())
    }

    pub fn classify(&self, x: &Tensor) -> Result<Prediction> {
        self.check_classifies()?;
        let logits = self.forward(x)?;
        Ok(Prediction::from_logits(logits.into_data()))
    }

    /// `d logit[class_idx] / d x` by reverse-mode accumulation.
    pub fn gradient(&self, x: &Tensor, class_idx: usize) -> Result<Tensor> {
        self.check_input(x, "gradient")?;
        if class_idx >= self.output_dim {
            return Err(Error::Index {
                what: "network output",
                index: class_idx,
                len: self.output_dim,
            });
        }
        let g = self.gradient_slice(x.data(), class_idx);
        finite_or(&g, "gradient")?;
        Ok(Tensor::from_parts_unchecked(vec![self.input_dim], g))
    }

    pub(crate) fn gradient_slice(&self, x: &[f64], class_idx: usize) -> Vec<f64> {
        // Forward pass keeping every preactivation.
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = x.to_vec();
        for layer in &self.layers {
            let mut z = vec![0.0; layer.output_dim()];
            affine_into(layer.weights.data(), layer.bias.data(), &a, &mut z);
            a = z.iter().map(|&v| layer.activation.apply(v)).collect();
            pre.push(z);
        }

        let mut upstream = vec![0.0; self.output_dim];
        upstream[class_idx] = 1.0;
        for (layer, z) in self.layers.iter().zip(&pre).rev() {
            let cols = layer.input_dim();
            let w = layer.weights.data();
            let mut down = vec![0.0; cols];
            for (i, (&u, &zi)) in upstream.iter().zip(z).enumerate() {
                let delta = u * layer.activation.derivative(zi);
                if delta == 0.0 {
                    continue;
                }
                for (d, wij) in down.iter_mut().zip(&w[i * cols..(i + 1) * cols]) {
                    *d += delta * wij;
                }
            }
            upstream = down;
        }
        upstream
    }
}

fn run_layers(layers: &[Layer], x: &[f64]) -> Vec<f64> {
    let mut a = x.to_vec();
    for layer in layers {
        let mut z = vec![0.0; layer.output_dim()];
        affine_into(layer.weights.data(), layer.bias.data(), &a, &mut z);
        for v in z.iter_mut() {
            *v = layer.activation.apply(*v);
        }
        a = z;
    }
    a
}

fn finite_or(values: &[f64], context: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(context.into()))
    }
}

/// Wires the generator's output into the classifier's input.
pub fn compose(generator: &Network, classifier: &Network) -> Result<Network> {
    if generator.role != Role::Generator {
        return Err(Error::Role(format!(
            "first operand of compose must be a generator, got {}",
            generator.role
        )));
    }
    if classifier.role != Role::Classifier {
        return Err(Error::Role(format!(
            "second operand of compose must be a classifier, got {}",
            classifier.role
        )));
    }
    if generator.output_dim != classifier.input_dim {
        return Err(Error::Composition {
            generator_dim: generator.output_dim,
            classifier_dim: classifier.input_dim,
        });
    }
    let layers = generator
        .layers
        .iter()
        .chain(&classifier.layers)
        .cloned()
        .collect();
    Network::assemble(Role::Composed, layers, Some(generator.layers.len()))
}

/// Index of the largest logit; ties go to the lowest index.
pub(crate) fn argmax(logits: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate().skip(1) {
        if v > logits[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub logits: Vec<f64>,
    pub category: usize,
    pub score: f64,
}

impl Prediction {
    /// Argmax with ties going to the lowest index.
    pub fn from_logits(logits: Vec<f64>) -> Self {
        let category = argmax(&logits);
        let score = logits[category];
        Prediction {
            logits,
            category,
            score,
        }
    }

    /// Index of the largest logit other than `category` (lowest index on ties).
    pub fn runner_up(&self) -> usize {
        let mut best: Option<usize> = None;
        for (i, &v) in self.logits.iter().enumerate() {
            if i == self.category {
                continue;
            }
            match best {
                Some(b) if self.logits[b] >= v => {}
                _ => best = Some(i),
            }
        }
        best.unwrap_or(0)
    }
}
