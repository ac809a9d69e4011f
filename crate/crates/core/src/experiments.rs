//! Exploratory instruments on top of the estimator: random walks in noise
//! space, outlier mining, and comparing several generators against the same
//! classifier.

use std::path::{Path, PathBuf};

use crate::doc::DocWriter;
use crate::error::{Error, Result};
use crate::estimator::{estimate_composed_correctness, sample_categories, sample_noise, EstimateReport, SamplingConfig};
use crate::network::{compose, Network, Prediction, Role};
use crate::rng::RngStream;
use crate::tensor::{Activation, Tensor};

pub const DEFAULT_WALK_SIGMA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkConfig {
    pub steps: usize,
    /// Standard deviation of each isotropic step.
    pub sigma: f64,
    pub seed: u64,
    /// `(height, width)` of the rendered frames.
    pub frame_shape: (usize, usize),
}

impl WalkConfig {
    pub fn new(steps: usize, seed: u64, frame_shape: (usize, usize)) -> Self {
        WalkConfig {
            steps,
            sigma: DEFAULT_WALK_SIGMA,
            seed,
            frame_shape,
        }
    }

    fn validate(&self, generator: &Network) -> Result<()> {
        if self.steps < 1 {
            return Err(Error::Config("walk needs at least one step".into()));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::Config(format!("sigma must be finite and >= 0, got {}", self.sigma)));
        }
        let (h, w) = self.frame_shape;
        if h * w != generator.output_dim() {
            return Err(Error::dim(
                "walk frame shape",
                format!("height x width = {}", generator.output_dim()),
                format!("{h} x {w}"),
            ));
        }
        Ok(())
    }
}

/// Noises `x_0 .. x_steps` and the images generated from them.
#[derive(Debug, Clone, PartialEq)]
pub struct Walk {
    pub noises: Vec<Tensor>,
    pub frames: Vec<Tensor>,
}

/// `x_0 ~ N(0, 1)^p`, `x_{i+1} = x_i + N(0, sigma^2)^p`, all drawn from
/// stream 0 of `cfg.seed`.
pub fn random_walk_path(generator: &Network, cfg: &WalkConfig) -> Result<Walk> {
    if generator.role() != Role::Generator {
        return Err(Error::Role(format!("random walk needs a generator, got a {}", generator.role())));
    }
    cfg.validate(generator)?;
    let dim = generator.input_dim();
    let mut rng = RngStream::new(cfg.seed, 0);
    let mut x = rng.normal_vec(dim, 1.0);
    let mut noises = Vec::with_capacity(cfg.steps + 1);
    let mut frames = Vec::with_capacity(cfg.steps + 1);
    for step in 0..=cfg.steps {
        if step > 0 {
            for (xi, eta) in x.iter_mut().zip(rng.normal_vec(dim, cfg.sigma)) {
                *xi += eta;
            }
        }
        let noise = Tensor::vector(x.clone())?;
        frames.push(generator.forward(&noise)?);
        noises.push(noise);
    }
    Ok(Walk { noises, frames })
}

/// Frames `G(x_0) .. G(x_steps)` of a random walk.
pub fn random_walk(generator: &Network, cfg: &WalkConfig) -> Result<Vec<Tensor>> {
    random_walk_path(generator, cfg).map(|w| w.frames)
}

/// Binary greyscale PGM (P5). Pixels are `round((v - lo) / (hi - lo) * 255)`
/// clamped to `0..=255`, with `(lo, hi)` from `range` or, when absent, the
/// image's own min and max (a constant image renders black).
pub fn encode_pgm(image: &[f64], height: usize, width: usize, range: Option<(f64, f64)>) -> Result<Vec<u8>> {
    if height * width != image.len() {
        return Err(Error::dim("pgm image", height * width, image.len()));
    }
    let (lo, hi) = range.unwrap_or_else(|| {
        let lo = image.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = image.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    });
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(image.iter().map(|&v| {
        if hi > lo {
            ((v - lo) / (hi - lo) * 255.0).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    }));
    Ok(out)
}

/// Writes `frame_0000.pgm`, `frame_0001.pgm`, ... into `dir`.
pub fn write_frames(
    dir: impl AsRef<Path>,
    frames: &[Tensor],
    frame_shape: (usize, usize),
    output_activation: Activation,
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    frames
        .iter()
        .enumerate()
        .map(|(i, frame)| {
            let path = dir.join(format!("frame_{i:04}.pgm"));
            write_pgm(&path, frame, frame_shape, output_activation)?;
            Ok(path)
        })
        .collect()
}

pub fn write_pgm(path: &Path, image: &Tensor, shape: (usize, usize), activation: Activation) -> Result<()> {
    let bytes = encode_pgm(image.data(), shape.0, shape.1, activation.range())?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// A sampled noise whose generated image is not classified as the target
/// category.
#[derive(Debug, Clone, PartialEq)]
pub struct Outlier {
    /// Sample index (stream id) within the run.
    pub index: usize,
    pub noise: Tensor,
    pub prediction: Prediction,
}

/// Every sample the composed network misclassifies, drawn exactly as in
/// [`crate::estimator::estimate_global_correctness`] with the same config.
pub fn mine_outliers(
    classifier: &Network,
    generator: &Network,
    category: usize,
    cfg: &SamplingConfig,
) -> Result<Vec<Outlier>> {
    let composed = compose(generator, classifier)?;
    if category >= composed.output_dim() {
        return Err(Error::Index {
            what: "categories",
            index: category,
            len: composed.output_dim(),
        });
    }
    let dim = composed.input_dim();
    sample_categories(&composed, cfg)?
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c != category)
        .map(|(index, _)| {
            let noise = Tensor::vector(sample_noise(cfg.seed, index, dim))?;
            let prediction = composed.classify(&noise)?;
            Ok(Outlier {
                index,
                noise,
                prediction,
            })
        })
        .collect()
}

/// Writes `outlier_<index>_pred<category>.pgm` per outlier.
pub fn write_outlier_images(
    dir: impl AsRef<Path>,
    outliers: &[Outlier],
    generator: &Network,
    frame_shape: (usize, usize),
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    outliers
        .iter()
        .map(|o| {
            let path = dir.join(format!("outlier_{:06}_pred{}.pgm", o.index, o.prediction.category));
            write_pgm(&path, &generator.forward(&o.noise)?, frame_shape, generator.output_activation())?;
            Ok(path)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierRow {
    pub label: String,
    /// One estimate per generator, in generator order.
    pub estimates: Vec<EstimateReport>,
    /// Largest difference between two generators' point estimates.
    pub max_discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub category: usize,
    pub generator_labels: Vec<String>,
    pub rows: Vec<ClassifierRow>,
}

impl ComparisonReport {
    pub fn to_toml(&self) -> String {
        let mut w = DocWriter::new();
        w.str("format", "gmrobust-comparison-report")
            .int("version", 1)
            .uint("category", self.category)
            .strs("generators", &self.generator_labels);
        if let Some(first) = self.rows.first().and_then(|r| r.estimates.first()) {
            w.uint("n", first.n)
                .str("seed", &first.seed.to_string())
                .float("confidence_level", first.level);
        }
        for row in &self.rows {
            let pick = |f: fn(&EstimateReport) -> f64| row.estimates.iter().map(f).collect::<Vec<_>>();
            w.array_table("classifiers")
                .str("label", &row.label)
                .float("max_discrepancy", row.max_discrepancy)
                .uints("successes", &row.estimates.iter().map(|e| e.successes).collect::<Vec<_>>())
                .floats("point_estimates", &pick(|e| e.point_estimate))
                .floats("ci_lo", &pick(|e| e.confidence_interval.0))
                .floats("ci_hi", &pick(|e| e.confidence_interval.1));
        }
        w.finish()
    }
}

/// Correctness of every classifier against every generator, all with the same
/// seed so that generator `j` sees the same noises for every classifier.
pub fn compare_grid(
    classifiers: &[(String, Network)],
    generators: &[(String, Network)],
    category: usize,
    cfg: &SamplingConfig,
) -> Result<ComparisonReport> {
    if generators.is_empty() {
        return Err(Error::Config("compare needs at least one generator".into()));
    }
    if classifiers.is_empty() {
        return Err(Error::Config("compare needs at least one classifier".into()));
    }
    let rows = classifiers
        .iter()
        .map(|(label, classifier)| {
            let estimates = generators
                .iter()
                .map(|(g_label, g)| {
                    let composed = compose(g, classifier).map_err(|e| e.within(format!("generator {g_label}")))?;
                    estimate_composed_correctness(&composed, category, cfg)
                })
                .collect::<Result<Vec<_>>>()?;
            let hi = estimates.iter().map(|e| e.point_estimate).fold(f64::NEG_INFINITY, f64::max);
            let lo = estimates.iter().map(|e| e.point_estimate).fold(f64::INFINITY, f64::min);
            Ok(ClassifierRow {
                label: label.clone(),
                estimates,
                max_discrepancy: hi - lo,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonReport {
        category,
        generator_labels: generators.iter().map(|(l, _)| l.clone()).collect(),
        rows,
    })
}

/// [`compare_grid`] for a single classifier; generators are labelled by index.
pub fn compare_generators(
    classifier: &Network,
    generators: &[Network],
    category: usize,
    cfg: &SamplingConfig,
) -> Result<ComparisonReport> {
    let labelled: Vec<(String, Network)> = generators
        .iter()
        .enumerate()
        .map(|(i, g)| (format!("#{i}"), g.clone()))
        .collect();
    compare_grid(&[("classifier".to_string(), classifier.clone())], &labelled, category, cfg)
}
