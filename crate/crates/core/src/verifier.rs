//! Local robustness in noise space.
//!
//! [`certify`] is sound but incomplete: interval bounds are pushed through
//! every layer and the ball is certified only when the target logit's lower
//! bound strictly beats every other logit's upper bound. [`grid_falsify`] is
//! the exhaustive low-dimensional oracle used to cross-check it.
//!
//! Affine bounds are accumulated in the same left-to-right order as the
//! forward pass (`lo' = sum(w+ * lo + w- * hi) + b`), and rounding is
//! monotone, so the bounds contain the floating-point forward output itself
//! and not just the real-valued one.

use crate::error::{Error, Result};
use crate::network::{argmax, Network};
use crate::tensor::Tensor;

/// Per-coordinate box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalVector {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl IntervalVector {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::dim("interval bounds", lo.len(), hi.len()));
        }
        if let Some(i) = lo.iter().zip(&hi).position(|(l, h)| !(l <= h)) {
            return Err(Error::Config(format!(
                "interval coordinate {i} has lo {} > hi {}",
                lo[i], hi[i]
            )));
        }
        Ok(IntervalVector { lo, hi })
    }

    /// Infinity-norm ball `[x - eps, x + eps]`.
    pub fn ball(center: &[f64], epsilon: f64) -> Self {
        IntervalVector {
            lo: center.iter().map(|c| c - epsilon).collect(),
            hi: center.iter().map(|c| c + epsilon).collect(),
        }
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.len()
            && x
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (l, h))| l <= v && v <= h)
    }

    /// True if `self` lies inside `other`.
    pub fn is_subset_of(&self, other: &IntervalVector) -> bool {
        self.len() == other.len()
            && (0..self.len()).all(|i| other.lo[i] <= self.lo[i] && self.hi[i] <= other.hi[i])
    }
}

/// Output bounds of `net` over every input in `input`.
pub fn ibp_propagate(net: &Network, input: &IntervalVector) -> Result<IntervalVector> {
    if input.len() != net.input_dim() {
        return Err(Error::dim("ibp input box", net.input_dim(), input.len()));
    }
    let mut lo = input.lo.clone();
    let mut hi = input.hi.clone();
    for layer in net.layers() {
        let cols = layer.input_dim();
        let w = layer.weights().data();
        let b = layer.bias().data();
        let act = layer.activation();
        let mut next_lo = vec![0.0; layer.output_dim()];
        let mut next_hi = vec![0.0; layer.output_dim()];
        for i in 0..layer.output_dim() {
            let (mut acc_lo, mut acc_hi) = (0.0, 0.0);
            for (j, &wij) in w[i * cols..(i + 1) * cols].iter().enumerate() {
                if wij >= 0.0 {
                    acc_lo += wij * lo[j];
                    acc_hi += wij * hi[j];
                } else {
                    acc_lo += wij * hi[j];
                    acc_hi += wij * lo[j];
                }
            }
            next_lo[i] = act.apply(acc_lo + b[i]);
            next_hi[i] = act.apply(acc_hi + b[i]);
        }
        lo = next_lo;
        hi = next_hi;
    }
    if lo.iter().chain(&hi).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("interval propagation".into()));
    }
    Ok(IntervalVector { lo, hi })
}

/// A falsifying pair: `x_prime` lies in the ball around `x` and is not
/// classified as the ball's category.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub x: Tensor,
    pub x_prime: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// Every point of the ball is classified correctly; `margin > 0` is the
    /// certified logit gap.
    Certified { margin: f64 },
    Falsified { witness: Witness },
    Unknown,
}

impl Verdict {
    pub fn kind(&self) -> VerdictKind {
        match self {
            Verdict::Certified { .. } => VerdictKind::Certified,
            Verdict::Falsified { .. } => VerdictKind::Falsified,
            Verdict::Unknown => VerdictKind::Unknown,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VerdictKind {
    Certified,
    Falsified,
    Unknown,
}

impl VerdictKind {
    /// One-letter code used in report verdict logs.
    pub fn code(self) -> char {
        match self {
            VerdictKind::Certified => 'C',
            VerdictKind::Falsified => 'F',
            VerdictKind::Unknown => 'U',
        }
    }
}

fn check_ball(net: &Network, x: &Tensor, epsilon: f64, category: usize) -> Result<()> {
    if x.shape() != [net.input_dim()] {
        return Err(Error::dim(
            "ball center",
            format!("[{}]", net.input_dim()),
            format!("{:?}", x.shape()),
        ));
    }
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::Config(format!("epsilon must be finite and >= 0, got {epsilon}")));
    }
    if category >= net.output_dim() {
        return Err(Error::Index {
            what: "categories",
            index: category,
            len: net.output_dim(),
        });
    }
    Ok(())
}

/// `min over c' != c of (lo[c] - hi[c'])` on the ball; positive means certified.
pub fn certified_margin(net: &Network, x: &Tensor, epsilon: f64, category: usize) -> Result<f64> {
    check_ball(net, x, epsilon, category)?;
    let out = ibp_propagate(net, &IntervalVector::ball(x.data(), epsilon))?;
    Ok((0..net.output_dim())
        .filter(|&k| k != category)
        .map(|k| out.lo[category] - out.hi[k])
        .fold(f64::INFINITY, f64::min))
}

/// Certifies the ε-ball around `x`, or returns `Unknown`. Never falsifies.
pub fn certify(net: &Network, x: &Tensor, epsilon: f64, category: usize) -> Result<Verdict> {
    let margin = certified_margin(net, x, epsilon, category)?;
    Ok(if margin > 0.0 {
        Verdict::Certified { margin }
    } else {
        Verdict::Unknown
    })
}

/// Grid size above which [`grid_falsify`] refuses to run.
pub const GRID_LIMIT: u64 = 10_000_000;

/// Exhaustive search over a regular grid of the ε-box (endpoints included).
/// Returns the first grid point, in odometer order over the coordinates,
/// whose category differs from `category`.
pub fn grid_falsify(
    net: &Network,
    x: &Tensor,
    epsilon: f64,
    category: usize,
    points_per_dim: usize,
) -> Result<Option<Tensor>> {
    check_ball(net, x, epsilon, category)?;
    if points_per_dim < 2 {
        return Err(Error::Config("points_per_dim must be at least 2".into()));
    }
    let dim = net.input_dim();
    let m = if epsilon == 0.0 { 1 } else { points_per_dim };
    let total = (m as f64).powi(dim as i32);
    if total > GRID_LIMIT as f64 {
        return Err(Error::GridTooLarge {
            points: total,
            limit: GRID_LIMIT,
        });
    }
    let ball = IntervalVector::ball(x.data(), epsilon);
    let axes: Vec<Vec<f64>> = (0..dim)
        .map(|d| {
            let (lo, hi) = (ball.lo[d], ball.hi[d]);
            if m == 1 {
                return vec![x.data()[d]];
            }
            (0..m)
                .map(|k| {
                    if k == m - 1 {
                        hi
                    } else {
                        (lo + (hi - lo) * (k as f64 / (m - 1) as f64)).clamp(lo, hi)
                    }
                })
                .collect()
        })
        .collect();

    const CHUNK: usize = 1024;
    let out_dim = net.output_dim();
    let mut idx = vec![0usize; dim];
    let mut point: Vec<f64> = axes.iter().map(|a| a[0]).collect();
    let mut buffer = Vec::with_capacity(CHUNK * dim);
    let mut exhausted = false;
    while !exhausted {
        buffer.clear();
        while buffer.len() < CHUNK * dim && !exhausted {
            buffer.extend_from_slice(&point);
            // odometer increment
            let mut d = 0;
            loop {
                if d == dim {
                    exhausted = true;
                    break;
                }
                idx[d] += 1;
                if idx[d] < m {
                    point[d] = axes[d][idx[d]];
                    break;
                }
                idx[d] = 0;
                point[d] = axes[d][0];
                d += 1;
            }
        }
        let logits = net.forward_batch(&buffer)?;
        let hit = logits
            .chunks_exact(out_dim)
            .position(|row| argmax(row) != category);
        if let Some(k) = hit {
            return Ok(Some(Tensor::vector(buffer[k * dim..(k + 1) * dim].to_vec())?));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::network::{Layer, Role};
    use crate::tensor::Activation;

    fn v(d: &[f64]) -> Tensor {
        Tensor::vector(d.to_vec()).unwrap()
    }

    #[test]
    fn identity_network_keeps_box() {
        let net = fixtures::identity_generator(2);
        let ball = IntervalVector::ball(&[0.3, -1.2], 0.25);
        assert_eq!(ibp_propagate(&net, &ball).unwrap(), ball);
    }

    #[test]
    fn single_affine_layer_box() {
        let net = Network::new(
            Role::Classifier,
            vec![Layer::dense(1, 2, vec![1.0, -1.0], vec![0.0], Activation::Identity).unwrap()],
        )
        .unwrap();
        let out = ibp_propagate(&net, &IntervalVector::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap()).unwrap();
        assert_eq!((out.lo(), out.hi()), (&[-2.0][..], &[2.0][..]));
    }

    #[test]
    fn relu_clamps_negative_box() {
        let net = Network::new(
            Role::Classifier,
            vec![Layer::dense(1, 1, vec![1.0], vec![0.0], Activation::Relu).unwrap()],
        )
        .unwrap();
        let out = ibp_propagate(&net, &IntervalVector::new(vec![-3.0], vec![-1.0]).unwrap()).unwrap();
        assert_eq!((out.lo(), out.hi()), (&[0.0][..], &[0.0][..]));
    }

    #[test]
    fn invalid_boxes_rejected() {
        assert!(IntervalVector::new(vec![1.0], vec![0.0]).is_err());
        assert!(IntervalVector::new(vec![0.0], vec![0.0, 1.0]).is_err());
        let net = fixtures::identity_generator(2);
        assert!(ibp_propagate(&net, &IntervalVector::ball(&[0.0], 1.0)).is_err());
    }

    #[test]
    fn point_ball_margin_is_logit_gap() {
        let net = fixtures::planar_models().remove(0);
        let x = v(&[0.4, -0.9]);
        let pred = net.classify(&x).unwrap();
        let gap = pred.score - pred.logits[pred.runner_up()];
        match certify(&net, &x, 0.0, pred.category).unwrap() {
            Verdict::Certified { margin } => assert_eq!(margin, gap),
            other => panic!("expected certification, got {other:?}"),
        }
    }

    #[test]
    fn constant_classifier_certifies_any_ball() {
        let net = crate::network::compose(
            &fixtures::identity_generator(3),
            &fixtures::constant_classifier(3, 4, 1),
        )
        .unwrap();
        for eps in [0.0, 0.5, 10.0, 1e6] {
            assert!(matches!(certify(&net, &v(&[1.0, 2.0, 3.0]), eps, 1).unwrap(), Verdict::Certified { .. }));
        }
    }

    #[test]
    fn threshold_model_certify_and_grid() {
        let net = fixtures::threshold_model();
        assert!(matches!(certify(&net, &v(&[0.5]), 0.2, 1).unwrap(), Verdict::Certified { .. }));
        assert_eq!(certify(&net, &v(&[0.1]), 0.2, 1).unwrap(), Verdict::Unknown);
        // grid oracle at resolution 1e-3 over [-0.1, 0.3]
        let witness = grid_falsify(&net, &v(&[0.1]), 0.2, 1, 401).unwrap().expect("violation exists");
        assert!(witness.data()[0] <= 0.0);
        assert!(grid_falsify(&net, &v(&[0.5]), 0.2, 1, 401).unwrap().is_none());
    }

    #[test]
    fn zero_radius_grid_is_center() {
        let net = fixtures::threshold_model();
        assert!(grid_falsify(&net, &v(&[0.5]), 0.0, 1, 50).unwrap().is_none());
        assert_eq!(grid_falsify(&net, &v(&[-0.5]), 0.0, 1, 50).unwrap(), Some(v(&[-0.5])));
    }

    #[test]
    fn grid_size_guard() {
        let net = fixtures::identity_classifier(4);
        let err = grid_falsify(&net, &v(&[0.0; 4]), 0.1, 0, 100).unwrap_err();
        assert!(matches!(err, Error::GridTooLarge { .. }));
        assert!(grid_falsify(&net, &v(&[0.0; 4]), 0.1, 0, 1).is_err());
    }

    #[test]
    fn category_out_of_range() {
        let net = fixtures::threshold_model();
        assert!(matches!(certify(&net, &v(&[0.5]), 0.1, 2), Err(Error::Index { .. })));
        assert!(certify(&net, &v(&[0.5]), -0.1, 1).is_err());
    }
}
