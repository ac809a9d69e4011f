//! Monte Carlo estimates of global correctness and global robustness.
//!
//! Sample `i` always uses noise drawn from stream `i` of the run's seed, and
//! per-sample results are aggregated in index order, so reports do not depend
//! on batch size or on the number of worker threads.

use rayon::prelude::*;

use crate::attacks::{falsify_ball, FalsifyBudget};
use crate::doc::DocWriter;
use crate::error::{Error, Result};
use crate::network::{argmax, compose, Network};
use crate::rng::RngStream;
use crate::tensor::Tensor;
use crate::verifier::{certify, VerdictKind};

pub const DEFAULT_SAMPLES: usize = 10_000;
pub const DEFAULT_LEVEL: f64 = 0.95;
pub const DEFAULT_BATCH: usize = 256;

/// Two-sided normal quantiles for the supported confidence levels.
fn z_value(level: f64) -> Result<f64> {
    const TABLE: [(f64, f64); 3] = [
        (0.90, 1.644_853_626_951_472_2),
        (0.95, 1.959_963_984_540_054),
        (0.99, 2.575_829_303_548_900_4),
    ];
    TABLE
        .iter()
        .find(|(l, _)| (l - level).abs() < 1e-12)
        .map(|&(_, z)| z)
        .ok_or_else(|| Error::Config(format!("confidence level must be 0.9, 0.95 or 0.99, got {level}")))
}

/// Wilson score interval for `k` successes out of `n`, clamped to `[0, 1]`.
pub fn confidence_interval(k: usize, n: usize, level: f64) -> Result<(f64, f64)> {
    let z = z_value(level)?;
    if n == 0 || k > n {
        return Err(Error::Config(format!("need 0 <= k <= n and n >= 1, got k={k}, n={n}")));
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let lo = if k == 0 { 0.0 } else { (center - half).clamp(0.0, p) };
    let hi = if k == n { 1.0 } else { (center + half).clamp(p, 1.0) };
    Ok((lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingConfig {
    pub n: usize,
    pub seed: u64,
    pub level: f64,
    pub batch_size: usize,
}

impl SamplingConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        SamplingConfig {
            n,
            seed,
            level: DEFAULT_LEVEL,
            batch_size: DEFAULT_BATCH,
        }
    }

    pub fn with_level(mut self, level: f64) -> Self {
        self.level = level;
        self
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("sample count n must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        z_value(self.level).map(|_| ())
    }
}

/// Noise for sample `index` of a run seeded with `seed`.
pub fn sample_noise(seed: u64, index: usize, dim: usize) -> Vec<f64> {
    RngStream::new(seed, index as u64).normal_vec(dim, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub category: usize,
    pub n: usize,
    pub successes: usize,
    pub point_estimate: f64,
    pub level: f64,
    pub confidence_interval: (f64, f64),
    pub seed: u64,
    /// δ such that the interval supports correctness `>= 1 - δ`.
    pub delta_claim: Option<f64>,
}

impl EstimateReport {
    fn from_counts(category: usize, successes: usize, cfg: &SamplingConfig) -> Result<Self> {
        let ci = confidence_interval(successes, cfg.n, cfg.level)?;
        Ok(EstimateReport {
            category,
            n: cfg.n,
            successes,
            point_estimate: successes as f64 / cfg.n as f64,
            level: cfg.level,
            confidence_interval: ci,
            seed: cfg.seed,
            delta_claim: Some(1.0 - ci.0),
        })
    }

    pub fn to_toml(&self) -> String {
        let mut w = DocWriter::new();
        w.str("format", "gmrobust-correctness-report")
            .int("version", 1)
            .uint("category", self.category)
            .uint("n", self.n)
            .uint("successes", self.successes)
            .float("point_estimate", self.point_estimate)
            .float("confidence_level", self.level)
            .float("ci_lo", self.confidence_interval.0)
            .float("ci_hi", self.confidence_interval.1)
            .str("seed", &self.seed.to_string());
        if let Some(d) = self.delta_claim {
            w.float("delta_claim", d);
        }
        w.finish()
    }
}

fn check_category(net: &Network, category: usize) -> Result<()> {
    if category >= net.output_dim() {
        return Err(Error::Index {
            what: "categories",
            index: category,
            len: net.output_dim(),
        });
    }
    Ok(())
}

/// Predicted category of every sample, in sample order.
pub fn sample_categories(composed: &Network, cfg: &SamplingConfig) -> Result<Vec<usize>> {
    cfg.validate()?;
    let dim = composed.input_dim();
    let starts: Vec<usize> = (0..cfg.n).step_by(cfg.batch_size).collect();
    let chunks = starts
        .par_iter()
        .map(|&start| {
            let end = (start + cfg.batch_size).min(cfg.n);
            let mut inputs = Vec::with_capacity((end - start) * dim);
            for i in start..end {
                inputs.extend(sample_noise(cfg.seed, i, dim));
            }
            let logits = composed.forward_batch(&inputs)?;
            Ok(logits
                .chunks_exact(composed.output_dim())
                .map(argmax)
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(chunks.concat())
}

/// Correctness estimate for an already composed network.
pub fn estimate_composed_correctness(
    composed: &Network,
    category: usize,
    cfg: &SamplingConfig,
) -> Result<EstimateReport> {
    check_category(composed, category)?;
    let successes = sample_categories(composed, cfg)?
        .into_iter()
        .filter(|&c| c == category)
        .count();
    EstimateReport::from_counts(category, successes, cfg)
}

/// Fraction of noises `x ~ N(0, 1)^p` with `C(G(x)) = category`.
pub fn estimate_global_correctness(
    classifier: &Network,
    generator: &Network,
    category: usize,
    cfg: &SamplingConfig,
) -> Result<EstimateReport> {
    estimate_composed_correctness(&compose(generator, classifier)?, category, cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessReport {
    pub category: usize,
    pub epsilon: f64,
    pub n: usize,
    pub seed: u64,
    pub level: f64,
    pub certified: usize,
    pub falsified: usize,
    pub unknown: usize,
    /// Wilson lower bound of `certified / n`.
    pub lower_bound: f64,
    /// Wilson upper bound of `(certified + unknown) / n`.
    pub upper_bound: f64,
    /// Verdict of sample `i` at position `i`.
    pub verdicts: Vec<VerdictKind>,
}

impl RobustnessReport {
    pub fn to_toml(&self) -> String {
        let log: String = self.verdicts.iter().map(|v| v.code()).collect();
        DocWriter::new()
            .str("format", "gmrobust-robustness-report")
            .int("version", 1)
            .uint("category", self.category)
            .float("epsilon", self.epsilon)
            .uint("n", self.n)
            .str("seed", &self.seed.to_string())
            .float("confidence_level", self.level)
            .uint("certified", self.certified)
            .uint("falsified", self.falsified)
            .uint("unknown", self.unknown)
            .float("lower_bound", self.lower_bound)
            .float("upper_bound", self.upper_bound)
            .str("verdicts", &log)
            .finish()
    }
}

/// Verdict for the ε-ball around one sampled noise: certify first, then try
/// to falsify with projected ascent.
fn judge(
    composed: &Network,
    x: Vec<f64>,
    epsilon: f64,
    category: usize,
    budget: FalsifyBudget,
    rng: &mut RngStream,
) -> Result<VerdictKind> {
    let center = Tensor::vector(x)?;
    if certify(composed, &center, epsilon, category)?.kind() == VerdictKind::Certified {
        return Ok(VerdictKind::Certified);
    }
    Ok(match falsify_ball(composed, center.data(), epsilon, category, budget, rng)? {
        Some(_) => VerdictKind::Falsified,
        None => VerdictKind::Unknown,
    })
}

pub fn estimate_composed_robustness(
    composed: &Network,
    category: usize,
    epsilon: f64,
    cfg: &SamplingConfig,
    budget: FalsifyBudget,
) -> Result<RobustnessReport> {
    cfg.validate()?;
    check_category(composed, category)?;
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::Config(format!("epsilon must be finite and >= 0, got {epsilon}")));
    }
    if budget.restarts == 0 || budget.n_step == 0 {
        return Err(Error::Config("falsification budget must be positive".into()));
    }
    let dim = composed.input_dim();
    let verdicts = (0..cfg.n)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(cfg.seed, i as u64);
            let x = rng.normal_vec(dim, 1.0);
            judge(composed, x, epsilon, category, budget, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;

    let count = |k: VerdictKind| verdicts.iter().filter(|&&v| v == k).count();
    let certified = count(VerdictKind::Certified);
    let falsified = count(VerdictKind::Falsified);
    let unknown = count(VerdictKind::Unknown);
    let (lower_bound, _) = confidence_interval(certified, cfg.n, cfg.level)?;
    let (_, upper_bound) = confidence_interval(certified + unknown, cfg.n, cfg.level)?;
    Ok(RobustnessReport {
        category,
        epsilon,
        n: cfg.n,
        seed: cfg.seed,
        level: cfg.level,
        certified,
        falsified,
        unknown,
        lower_bound,
        upper_bound,
        verdicts,
    })
}

/// Fraction of noises whose whole ε-ball maps to `category`, bracketed by
/// certified (sound) and not-falsified counts.
pub fn estimate_global_robustness(
    classifier: &Network,
    generator: &Network,
    category: usize,
    epsilon: f64,
    cfg: &SamplingConfig,
    budget: FalsifyBudget,
) -> Result<RobustnessReport> {
    estimate_composed_robustness(&compose(generator, classifier)?, category, epsilon, cfg, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn z_values_match_normal_quantiles() {
        use statrs::distribution::{ContinuousCDF, Normal};
        let n = Normal::new(0.0, 1.0).unwrap();
        for level in [0.9, 0.95, 0.99] {
            let z = n.inverse_cdf(0.5 + level / 2.0);
            assert!((z_value(level).unwrap() - z).abs() < 1e-9, "{level}");
        }
        assert!(z_value(0.8).is_err());
    }

    #[test]
    fn interval_boundaries() {
        let (lo, hi) = confidence_interval(50, 50, 0.95).unwrap();
        assert_eq!(hi, 1.0);
        assert!(lo < 1.0);
        let (lo, hi) = confidence_interval(0, 1, 0.95).unwrap();
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0);
    }

    #[test]
    fn interval_errors() {
        assert!(matches!(confidence_interval(1, 10, 0.8), Err(Error::Config(_))));
        assert!(confidence_interval(11, 10, 0.95).is_err());
        assert!(confidence_interval(0, 0, 0.95).is_err());
    }

    #[test]
    fn wilson_half_width_at_99_percent_correct() {
        let (lo, hi) = confidence_interval(9900, 10_000, 0.95).unwrap();
        assert!(((hi - lo) / 2.0 - 0.002).abs() < 1e-4);
        assert!(lo <= 0.99 && 0.99 <= hi);
    }

    #[test]
    fn constant_classifier_is_always_correct() {
        let g = fixtures::identity_generator(3);
        let c = fixtures::constant_classifier(3, 4, 2);
        let r = estimate_global_correctness(&c, &g, 2, &SamplingConfig::new(500, 1)).unwrap();
        assert_eq!((r.successes, r.point_estimate), (500, 1.0));
        let r = estimate_global_robustness(&c, &g, 2, 0.7, &SamplingConfig::new(200, 1), FalsifyBudget::default()).unwrap();
        assert_eq!(r.certified, 200);
    }

    #[test]
    fn zero_radius_reduces_to_classification() {
        let composed = fixtures::planar_models().remove(1);
        let cfg = SamplingConfig::new(300, 4);
        let cats = sample_categories(&composed, &cfg).unwrap();
        let r = estimate_composed_robustness(&composed, 0, 0.0, &cfg, FalsifyBudget::default()).unwrap();
        assert_eq!(r.unknown, 0);
        for (cat, v) in cats.iter().zip(&r.verdicts) {
            let expected = if *cat == 0 { VerdictKind::Certified } else { VerdictKind::Falsified };
            assert_eq!(*v, expected);
        }
    }

    #[test]
    fn batch_size_does_not_change_results() {
        let composed = fixtures::planar_models().remove(0);
        let a = estimate_composed_correctness(&composed, 1, &SamplingConfig::new(1000, 3)).unwrap();
        let b = estimate_composed_correctness(&composed, 1, &SamplingConfig::new(1000, 3).with_batch_size(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn input_errors() {
        let composed = fixtures::threshold_model();
        assert!(estimate_composed_correctness(&composed, 2, &SamplingConfig::new(10, 0)).is_err());
        assert!(estimate_composed_correctness(&composed, 1, &SamplingConfig::new(0, 0)).is_err());
        let zero_budget = FalsifyBudget { n_step: 16, restarts: 0 };
        assert!(estimate_composed_robustness(&composed, 1, 0.1, &SamplingConfig::new(10, 0), zero_budget).is_err());
        assert!(estimate_composed_robustness(&composed, 1, -0.1, &SamplingConfig::new(10, 0), FalsifyBudget::default()).is_err());
        let g = fixtures::identity_generator(3);
        assert!(matches!(
            estimate_global_correctness(&fixtures::threshold_classifier(), &g, 0, &SamplingConfig::new(5, 0)),
            Err(Error::Composition { .. })
        ));
    }

    #[test]
    fn report_text_parses() {
        let r = estimate_composed_correctness(&fixtures::threshold_model(), 1, &SamplingConfig::new(100, u64::MAX)).unwrap();
        let t: toml::Table = toml::from_str(&r.to_toml()).unwrap();
        assert_eq!(t["n"].as_integer(), Some(100));
        assert_eq!(t["seed"].as_str(), Some("18446744073709551615"));
    }
}
