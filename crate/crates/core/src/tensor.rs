//! Dense `f64` tensors and the two primitives every network is built from:
//! the affine map `Wx + b` and elementwise activations.
//!
//! Storage is a flat row-major buffer with an explicit shape. Tensors built
//! from external data are checked for finiteness at construction.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor, rejecting shape/length disagreement, zero-sized axes
    /// and non-finite entries.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::Config(format!(
                "tensor shape must be a nonempty list of positive integers, got {shape:?}"
            )));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::dim("tensor construction", expected, data.len()));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("tensor entry {i}")));
        }
        Ok(Tensor { shape, data })
    }

    pub fn vector(data: Vec<f64>) -> Result<Self> {
        let n = data.len();
        Tensor::new(vec![n], data)
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Tensor::new(vec![rows, cols], data)
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let n = shape.iter().product();
        Tensor::new(shape, vec![0.0; n])
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Tensor::matrix(n, n, data)
    }

    /// Internal constructor for buffers already known to be well formed.
    pub(crate) fn from_parts_unchecked(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Tensor { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        if self.shape.len() > 1 {
            self.shape[1]
        } else {
            1
        }
    }

    /// Infinity-norm distance to another tensor of the same length.
    pub fn linf_distance(&self, other: &Tensor) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::dim("linf distance", self.len(), other.len()));
        }
        Ok(linf(&self.data, &other.data))
    }
}

impl fmt::Display for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor{:?}{:?}", self.shape, self.data)
    }
}

pub(crate) fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Elementwise nonlinearity. All supported kinds are monotone nondecreasing,
/// which interval propagation relies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    pub const ALL: [Activation; 4] = [
        Activation::Identity,
        Activation::Relu,
        Activation::Tanh,
        Activation::Sigmoid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
        }
    }

    #[inline]
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Identity => v,
            Activation::Relu => {
                if v > 0.0 {
                    v
                } else {
                    0.0
                }
            }
            Activation::Tanh => v.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-v).exp()),
        }
    }

    /// Derivative at preactivation `z`. The relu subgradient at 0 is 0.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Sigmoid => {
                let s = Activation::Sigmoid.apply(z);
                s * (1.0 - s)
            }
        }
    }

    /// Fixed output range, if the activation has one.
    pub fn range(self) -> Option<(f64, f64)> {
        match self {
            Activation::Tanh => Some((-1.0, 1.0)),
            Activation::Sigmoid => Some((0.0, 1.0)),
            Activation::Identity | Activation::Relu => None,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Activation::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unsupported activation {s:?} (expected identity, relu, tanh or sigmoid)"
                ))
            })
    }
}

/// `out[i] = (sum_j w[i, j] * x[j]) + b[i]`, accumulating left to right.
///
/// Interval propagation mirrors this exact summation order, so keep the two
/// in sync.
#[inline]
pub(crate) fn affine_into(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (i, o) in out.iter_mut().enumerate() {
        let row = &w[i * cols..(i + 1) * cols];
        let mut acc = 0.0;
        for (wij, xj) in row.iter().zip(x) {
            acc += wij * xj;
        }
        *o = acc + b[i];
    }
}

/// Dense layer primitive: returns `Wx + b`.
pub fn affine(w: &Tensor, b: &Tensor, x: &Tensor) -> Result<Tensor> {
    if w.shape().len() != 2 {
        return Err(Error::dim("affine: W", "rank 2", format!("shape {:?}", w.shape())));
    }
    let (q, p) = (w.shape()[0], w.shape()[1]);
    if b.shape() != [q] {
        return Err(Error::dim(
            "affine: b against W rows",
            format!("[{q}]"),
            format!("{:?}", b.shape()),
        ));
    }
    if x.shape() != [p] {
        return Err(Error::dim(
            "affine: x against W columns",
            format!("[{p}]"),
            format!("{:?}", x.shape()),
        ));
    }
    let mut out = vec![0.0; q];
    affine_into(w.data(), b.data(), x.data(), &mut out);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("affine".into()));
    }
    Ok(Tensor::from_parts_unchecked(vec![q], out))
}

/// Elementwise activation; shape preserved.
pub fn activate(kind: Activation, x: &Tensor) -> Tensor {
    let data = x.data().iter().map(|&v| kind.apply(v)).collect();
    Tensor::from_parts_unchecked(x.shape().to_vec(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(d: &[f64]) -> Tensor {
        Tensor::vector(d.to_vec()).unwrap()
    }

    #[test]
    fn affine_identity() {
        let w = Tensor::identity(2).unwrap();
        let out = affine(&w, &v(&[0.0, 0.0]), &v(&[3.0, -1.0])).unwrap();
        assert_eq!(out.data(), &[3.0, -1.0]);
    }

    #[test]
    fn affine_hand_arithmetic() {
        let w = Tensor::matrix(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let out = affine(&w, &v(&[1.0, 1.0]), &v(&[1.0, 1.0])).unwrap();
        assert_eq!(out.data(), &[4.0, 8.0]);
    }

    #[test]
    fn affine_zero_weights() {
        let w = Tensor::zeros(vec![2, 2]).unwrap();
        let out = affine(&w, &v(&[5.0, 6.0]), &v(&[-7.5, 1e3])).unwrap();
        assert_eq!(out.data(), &[5.0, 6.0]);
    }

    #[test]
    fn affine_shape_errors_name_operand() {
        let w = Tensor::identity(2).unwrap();
        let err = affine(&w, &v(&[0.0]), &v(&[1.0, 2.0])).unwrap_err();
        assert!(err.to_string().contains("b against W rows"), "{err}");
        let err = affine(&w, &v(&[0.0, 0.0]), &v(&[1.0])).unwrap_err();
        assert!(err.to_string().contains("x against W columns"), "{err}");
    }

    #[test]
    fn affine_overflow_is_reported() {
        let w = Tensor::matrix(1, 1, vec![1e300]).unwrap();
        let err = affine(&w, &v(&[0.0]), &v(&[1e300])).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(Tensor::new(vec![2, 2], vec![1.0; 3]).is_err());
        assert!(Tensor::new(vec![0], vec![]).is_err());
        assert!(matches!(
            Tensor::vector(vec![1.0, f64::NAN]),
            Err(Error::NonFinite(_))
        ));
        assert!(Tensor::vector(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn activation_examples() {
        assert_eq!(activate(Activation::Relu, &v(&[-1.0, 0.0, 2.0])).data(), &[0.0, 0.0, 2.0]);
        assert_eq!(activate(Activation::Identity, &v(&[7.0, -7.0])).data(), &[7.0, -7.0]);
        assert_eq!(activate(Activation::Sigmoid, &v(&[0.0])).data(), &[0.5]);
    }

    #[test]
    fn unknown_activation_is_config_error() {
        assert!(matches!("softmax".parse::<Activation>(), Err(Error::Config(_))));
        for a in Activation::ALL {
            assert_eq!(a.name().parse::<Activation>().unwrap(), a);
        }
    }

    fn naive_affine(w: &[f64], b: &[f64], x: &[f64], q: usize, p: usize) -> Vec<f64> {
        let mut out = vec![0.0; q];
        for i in 0..q {
            let mut s = b[i];
            for j in 0..p {
                s += w[i * p + j] * x[j];
            }
            out[i] = s;
        }
        out
    }

    proptest! {
        #[test]
        fn affine_matches_naive_loop(
            (q, p, w, b, x) in (1usize..6, 1usize..6).prop_flat_map(|(q, p)| (
                Just(q), Just(p),
                prop::collection::vec(-10.0f64..10.0, q * p),
                prop::collection::vec(-10.0f64..10.0, q),
                prop::collection::vec(-10.0f64..10.0, p),
            ))
        ) {
            let got = affine(
                &Tensor::matrix(q, p, w.clone()).unwrap(),
                &Tensor::vector(b.clone()).unwrap(),
                &Tensor::vector(x.clone()).unwrap(),
            ).unwrap();
            let want = naive_affine(&w, &b, &x, q, p);
            let scale: f64 = w.iter().map(|v| v.abs()).sum::<f64>() * 10.0
                + b.iter().map(|v| v.abs()).sum::<f64>() + 1.0;
            for (g, e) in got.data().iter().zip(&want) {
                prop_assert!((g - e).abs() <= 1e-12 * scale.max(e.abs()));
            }
        }

        #[test]
        fn relu_and_identity_are_idempotent(x in prop::collection::vec(-1e3f64..1e3, 1..20)) {
            let t = Tensor::vector(x).unwrap();
            for k in [Activation::Relu, Activation::Identity] {
                let once = activate(k, &t);
                prop_assert_eq!(activate(k, &once), once);
            }
        }

        #[test]
        fn activations_are_monotone(a in -50.0f64..50.0, b in -50.0f64..50.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            for k in Activation::ALL {
                prop_assert!(k.apply(lo) <= k.apply(hi));
            }
        }
    }
}
