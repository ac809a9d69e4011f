//! Searching for realistic adversarial examples: two noises within ε of each
//! other (infinity norm) whose generated images the classifier puts in
//! different categories.
//!
//! Both searches start each restart from `x0 ~ N(0, 1)^p` and take
//! `n_step` moves of scale `α = ε / n_step`, pushing up the logit of
//! `target_class` on the composed network:
//!
//! * black-box: at each step try `n_dir` Gaussian directions with standard
//!   deviation `α` and keep the best one if it beats the current score;
//! * white-box: step along `+α · ∇ logit[target]`.
//!
//! After every move the iterate is projected back onto the ε-ball around
//! `x0`, and the search stops as soon as its category differs from that of
//! `x0`. The returned pair `(x0, x')` therefore always satisfies both
//! clauses of the definition; [`verify_adv_example`] rechecks them.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};
use crate::network::{Network, Prediction, Role};
use crate::rng::RngStream;
use crate::tensor::{linf, Tensor};
use crate::verifier::Witness;

pub const DEFAULT_N_STEP: usize = 16;
pub const DEFAULT_N_DIR: usize = 10;
pub const DEFAULT_MAX_RESTARTS: usize = 100;

/// Forward-only access to a network. The black-box search is written
/// against this trait alone.
pub trait ScoreOracle {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn logits(&self, x: &[f64]) -> Vec<f64>;

    fn category(&self, x: &[f64]) -> usize {
        Prediction::from_logits(self.logits(x)).category
    }
}

pub trait GradientOracle: ScoreOracle {
    fn gradient(&self, x: &[f64], class_idx: usize) -> Vec<f64>;
}

impl ScoreOracle for Network {
    fn input_dim(&self) -> usize {
        Network::input_dim(self)
    }

    fn output_dim(&self) -> usize {
        Network::output_dim(self)
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.forward_slice(x)
    }
}

impl GradientOracle for Network {
    fn gradient(&self, x: &[f64], class_idx: usize) -> Vec<f64> {
        self.gradient_slice(x, class_idx)
    }
}

/// Wraps a network and counts forward and gradient calls.
#[derive(Debug)]
pub struct CountingOracle<'a> {
    net: &'a Network,
    forward_calls: AtomicUsize,
    gradient_calls: AtomicUsize,
}

impl<'a> CountingOracle<'a> {
    pub fn new(net: &'a Network) -> Self {
        CountingOracle {
            net,
            forward_calls: AtomicUsize::new(0),
            gradient_calls: AtomicUsize::new(0),
        }
    }

    pub fn forward_calls(&self) -> usize {
        self.forward_calls.load(Ordering::Relaxed)
    }

    pub fn gradient_calls(&self) -> usize {
        self.gradient_calls.load(Ordering::Relaxed)
    }

    /// Network evaluations, counting each gradient as one forward pass.
    pub fn evaluations(&self) -> usize {
        self.forward_calls() + self.gradient_calls()
    }
}

impl ScoreOracle for CountingOracle<'_> {
    fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    fn output_dim(&self) -> usize {
        self.net.output_dim()
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.forward_calls.fetch_add(1, Ordering::Relaxed);
        self.net.forward_slice(x)
    }
}

impl GradientOracle for CountingOracle<'_> {
    fn gradient(&self, x: &[f64], class_idx: usize) -> Vec<f64> {
        self.gradient_calls.fetch_add(1, Ordering::Relaxed);
        self.net.gradient_slice(x, class_idx)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackParams {
    pub n_step: usize,
    /// Directions tried per step (black-box only).
    pub n_dir: usize,
    pub epsilon: f64,
    /// α, the per-step scale; `epsilon / n_step` unless overridden.
    pub step_scale: f64,
    /// Class whose logit the search pushes up.
    pub target_class: usize,
    /// Class the generator is meant to produce.
    pub source_class: usize,
    pub max_restarts: usize,
    pub seed: u64,
    /// Fixed starting noise for every restart instead of a fresh draw.
    pub init: Option<Tensor>,
}

impl AttackParams {
    pub fn new(epsilon: f64, target_class: usize, source_class: usize, seed: u64) -> Self {
        AttackParams {
            n_step: DEFAULT_N_STEP,
            n_dir: DEFAULT_N_DIR,
            epsilon,
            step_scale: epsilon / DEFAULT_N_STEP as f64,
            target_class,
            source_class,
            max_restarts: DEFAULT_MAX_RESTARTS,
            seed,
            init: None,
        }
    }

    /// Sets `n_step` and rescales α to `epsilon / n_step`.
    pub fn with_steps(mut self, n_step: usize) -> Self {
        self.n_step = n_step;
        self.step_scale = self.epsilon / n_step.max(1) as f64;
        self
    }

    pub fn with_restarts(mut self, max_restarts: usize) -> Self {
        self.max_restarts = max_restarts;
        self
    }

    pub fn with_directions(mut self, n_dir: usize) -> Self {
        self.n_dir = n_dir;
        self
    }

    pub fn with_init(mut self, init: Tensor) -> Self {
        self.init = Some(init);
        self
    }

    pub fn validate(&self, input_dim: usize, output_dim: usize) -> Result<()> {
        if self.n_step < 1 || self.n_dir < 1 {
            return Err(Error::Config("n_step and n_dir must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if !(self.step_scale > 0.0 && self.step_scale.is_finite()) {
            return Err(Error::Config(format!("step scale must be > 0, got {}", self.step_scale)));
        }
        for (what, c) in [("target_class", self.target_class), ("source_class", self.source_class)] {
            if c >= output_dim {
                return Err(Error::Index {
                    what,
                    index: c,
                    len: output_dim,
                });
            }
        }
        if self.target_class == self.source_class {
            return Err(Error::Config("target_class must differ from source_class".into()));
        }
        if let Some(init) = &self.init {
            if init.shape() != [input_dim] {
                return Err(Error::dim(
                    "attack init",
                    format!("[{input_dim}]"),
                    format!("{:?}", init.shape()),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealisticAdvExample {
    pub x: Tensor,
    pub x_prime: Tensor,
    pub category_x: usize,
    pub category_x_prime: usize,
    pub image_x: Tensor,
    pub image_x_prime: Tensor,
    pub linf_distance: f64,
}

/// Clamps `x` into the ε-box around `center`, nudging by ulps where the
/// rounded distance would otherwise exceed ε.
pub(crate) fn project(x: &mut [f64], center: &[f64], epsilon: f64) {
    for (v, &c) in x.iter_mut().zip(center) {
        let mut p = v.clamp(c - epsilon, c + epsilon);
        while (p - c).abs() > epsilon {
            p = if p > c { p.next_down() } else { p.next_up() };
        }
        *v = p;
    }
}

fn start_point(params: &AttackParams, rng: &mut RngStream, dim: usize) -> Vec<f64> {
    match &params.init {
        Some(t) => t.data().to_vec(),
        None => rng.normal_vec(dim, 1.0),
    }
}

/// Local random search. Returns the first witness pair found, scanning
/// restarts in index order; restart `r` draws from stream `r` of `params.seed`.
pub fn black_box_search<O: ScoreOracle>(oracle: &O, params: &AttackParams) -> Result<Option<Witness>> {
    params.validate(oracle.input_dim(), oracle.output_dim())?;
    let dim = oracle.input_dim();
    let (t, alpha, eps) = (params.target_class, params.step_scale, params.epsilon);
    for restart in 0..params.max_restarts {
        let mut rng = RngStream::new(params.seed, restart as u64);
        let x0 = start_point(params, &mut rng, dim);
        let class0 = oracle.category(&x0);
        let mut xi = x0.clone();
        for _ in 0..params.n_step {
            let mut s_max = oracle.logits(&xi)[t];
            let mut next = xi.clone();
            for _ in 0..params.n_dir {
                let cand: Vec<f64> = xi.iter().zip(rng.normal_vec(dim, alpha)).map(|(a, d)| a + d).collect();
                let s = oracle.logits(&cand)[t];
                if s > s_max {
                    s_max = s;
                    next = cand;
                }
            }
            project(&mut next, &x0, eps);
            if oracle.category(&next) != class0 {
                return Ok(Some(Witness {
                    x: Tensor::vector(x0)?,
                    x_prime: Tensor::vector(next)?,
                }));
            }
            xi = next;
        }
    }
    Ok(None)
}

/// Projected gradient ascent on `logit[target]` from `start`, staying in the
/// ε-ball around `center`. Returns the first iterate whose category is not
/// `class0`.
fn ascend<O: GradientOracle>(
    oracle: &O,
    center: &[f64],
    start: Vec<f64>,
    class0: usize,
    target: usize,
    alpha: f64,
    epsilon: f64,
    n_step: usize,
) -> Option<Vec<f64>> {
    let mut xi = start;
    for _ in 0..n_step {
        let g = oracle.gradient(&xi, target);
        let mut next: Vec<f64> = xi.iter().zip(&g).map(|(a, gi)| a + alpha * gi).collect();
        project(&mut next, center, epsilon);
        if oracle.category(&next) != class0 {
            return Some(next);
        }
        xi = next;
    }
    None
}

/// Gradient-guided search with the same restart and success contract as
/// [`black_box_search`].
pub fn white_box_search<O: GradientOracle>(oracle: &O, params: &AttackParams) -> Result<Option<Witness>> {
    params.validate(oracle.input_dim(), oracle.output_dim())?;
    let dim = oracle.input_dim();
    for restart in 0..params.max_restarts {
        let mut rng = RngStream::new(params.seed, restart as u64);
        let x0 = start_point(params, &mut rng, dim);
        let class0 = oracle.category(&x0);
        let found = ascend(
            oracle,
            &x0,
            x0.clone(),
            class0,
            params.target_class,
            params.step_scale,
            params.epsilon,
            params.n_step,
        );
        if let Some(x_prime) = found {
            return Ok(Some(Witness {
                x: Tensor::vector(x0)?,
                x_prime: Tensor::vector(x_prime)?,
            }));
        }
    }
    Ok(None)
}

fn require_composed(net: &Network) -> Result<()> {
    if net.role() != Role::Composed {
        return Err(Error::Role(format!(
            "attacks run on a composed network, got a {}",
            net.role()
        )));
    }
    Ok(())
}

fn realize(composed: &Network, witness: Witness) -> Result<RealisticAdvExample> {
    let category_x = composed.classify(&witness.x)?.category;
    let category_x_prime = composed.classify(&witness.x_prime)?.category;
    Ok(RealisticAdvExample {
        image_x: composed.generate(&witness.x)?,
        image_x_prime: composed.generate(&witness.x_prime)?,
        linf_distance: witness.x.linf_distance(&witness.x_prime)?,
        category_x,
        category_x_prime,
        x: witness.x,
        x_prime: witness.x_prime,
    })
}

pub fn black_box_attack(composed: &Network, params: &AttackParams) -> Result<Option<RealisticAdvExample>> {
    require_composed(composed)?;
    black_box_search(composed, params)?
        .map(|w| realize(composed, w))
        .transpose()
}

pub fn white_box_attack(composed: &Network, params: &AttackParams) -> Result<Option<RealisticAdvExample>> {
    require_composed(composed)?;
    white_box_search(composed, params)?
        .map(|w| realize(composed, w))
        .transpose()
}

/// Recomputes both categories and the distance; true iff the pair is within
/// ε and classified differently.
pub fn verify_adv_example(candidate: &RealisticAdvExample, composed: &Network, epsilon: f64) -> bool {
    verify_pair(&candidate.x, &candidate.x_prime, composed, epsilon)
}

pub fn verify_pair(x: &Tensor, x_prime: &Tensor, composed: &Network, epsilon: f64) -> bool {
    let dim = composed.input_dim();
    if x.shape() != [dim] || x_prime.shape() != [dim] {
        return false;
    }
    if linf(x.data(), x_prime.data()) > epsilon {
        return false;
    }
    match (composed.classify(x), composed.classify(x_prime)) {
        (Ok(a), Ok(b)) => a.category != b.category,
        _ => false,
    }
}

/// Effort bounds for falsifying one ε-ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FalsifyBudget {
    pub n_step: usize,
    /// Ascent runs; the first starts at the center, later ones at uniform
    /// random points of the ball.
    pub restarts: usize,
}

impl Default for FalsifyBudget {
    fn default() -> Self {
        FalsifyBudget {
            n_step: DEFAULT_N_STEP,
            restarts: 1,
        }
    }
}

/// Looks for a point of the ε-ball around `center` not classified as
/// `category`, by projected ascent on the logit of the strongest competing
/// class. A misclassified center is its own witness.
pub fn falsify_ball<O: GradientOracle>(
    oracle: &O,
    center: &[f64],
    epsilon: f64,
    category: usize,
    budget: FalsifyBudget,
    rng: &mut RngStream,
) -> Result<Option<Witness>> {
    let witness = |p: Vec<f64>| -> Result<Option<Witness>> {
        Ok(Some(Witness {
            x: Tensor::vector(center.to_vec())?,
            x_prime: Tensor::vector(p)?,
        }))
    };
    let pred = Prediction::from_logits(oracle.logits(center));
    if pred.category != category {
        return witness(center.to_vec());
    }
    if epsilon == 0.0 {
        return Ok(None);
    }
    let target = pred.runner_up();
    let alpha = epsilon / budget.n_step.max(1) as f64;
    for r in 0..budget.restarts {
        let start = if r == 0 {
            center.to_vec()
        } else {
            let mut s: Vec<f64> = center.iter().map(|&c| rng.uniform_in(c - epsilon, c + epsilon)).collect();
            project(&mut s, center, epsilon);
            if oracle.category(&s) != category {
                return witness(s);
            }
            s
        };
        if let Some(p) = ascend(oracle, center, start, category, target, alpha, epsilon, budget.n_step) {
            return witness(p);
        }
    }
    Ok(None)
}
