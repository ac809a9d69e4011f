//! `gmrobust` command line.
//!
//! Exit status: 0 on success, 1 on domain errors (unreadable or invalid
//! model, dimension mismatch, a pair that fails re-verification), 2 on usage
//! errors. Every run prints its fully resolved configuration, including a
//! freshly drawn seed when `--seed` was omitted, so it can be replayed.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::attacks::{
    black_box_attack, verify_pair, white_box_attack, AttackParams, FalsifyBudget, RealisticAdvExample,
    DEFAULT_MAX_RESTARTS, DEFAULT_N_DIR, DEFAULT_N_STEP,
};
use crate::doc::DocWriter;
use crate::error::{Error, Result};
use crate::estimator::{
    estimate_global_correctness, estimate_global_robustness, SamplingConfig, DEFAULT_BATCH, DEFAULT_LEVEL,
    DEFAULT_SAMPLES,
};
use crate::experiments::{
    compare_grid, mine_outliers, random_walk, write_frames, write_outlier_images, write_pgm, WalkConfig,
    DEFAULT_WALK_SIGMA,
};
use crate::model_io::{read_model, read_tensor, write_tensor};
use crate::network::{compose, Network};

fn non_negative(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be a finite number >= 0, got {s}"))
    }
}

fn positive(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        Ok(_) => Err("must be at least 1".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn level(s: &str) -> std::result::Result<f64, String> {
    match s {
        "0.9" | "0.90" => Ok(0.9),
        "0.95" => Ok(0.95),
        "0.99" => Ok(0.99),
        _ => Err(format!("must be one of 0.9, 0.95, 0.99, got {s}")),
    }
}

fn frame_shape(s: &str) -> std::result::Result<(usize, usize), String> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected HEIGHTxWIDTH, got {s}"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t}: {e}"));
    Ok((parse(h)?, parse(w)?))
}

#[derive(Debug, Parser)]
#[command(
    name = "gmrobust",
    version,
    about = "Global correctness and robustness of image classifiers against generative models"
)]
struct Cli {
    /// Worker threads (results do not depend on it). Defaults to all cores.
    #[arg(long, global = true, env = "GMROBUST_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo estimate of P(C(G(x)) = category).
    Correctness(SamplingArgs),
    /// Certified / falsified / unknown counts for ε-balls around sampled noises.
    Robustness(RobustnessArgs),
    /// Black-box local search for a realistic adversarial example.
    AttackBb(AttackArgs),
    /// White-box gradient ascent for a realistic adversarial example.
    AttackWb(AttackArgs),
    /// Random walk in noise space, written as PGM frames.
    Walk(WalkArgs),
    /// Sampled noises whose generated image is misclassified.
    Outliers(OutlierArgs),
    /// Correctness of one or more classifiers against several generators.
    Compare(CompareArgs),
    /// Re-verify a pair written by attack-bb or attack-wb.
    VerifyPair(VerifyArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Generator model file.
    #[arg(long)]
    generator: PathBuf,
    /// Classifier model file.
    #[arg(long)]
    classifier: PathBuf,
    /// Seed; a fresh one is drawn and printed when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SamplingArgs {
    #[command(flatten)]
    common: Common,
    /// Category the generator is meant to produce.
    #[arg(long)]
    category: usize,
    #[arg(long, default_value_t = DEFAULT_SAMPLES, value_parser = positive)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_LEVEL, value_parser = level)]
    level: f64,
    #[arg(long, default_value_t = DEFAULT_BATCH, value_parser = positive)]
    batch_size: usize,
}

#[derive(Debug, Args)]
struct RobustnessArgs {
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Infinity-norm radius in noise space.
    #[arg(long, value_parser = non_negative)]
    epsilon: f64,
    /// Falsification restarts per sample.
    #[arg(long, default_value_t = 1, value_parser = positive)]
    budget: usize,
    #[arg(long, default_value_t = DEFAULT_N_STEP, value_parser = positive)]
    n_step: usize,
}

#[derive(Debug, Args)]
struct AttackArgs {
    #[command(flatten)]
    common: Common,
    /// Category of the generator (source class).
    #[arg(long)]
    category: usize,
    /// Class whose score is maximised.
    #[arg(long)]
    target: usize,
    #[arg(long, value_parser = non_negative)]
    epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_N_STEP, value_parser = positive)]
    n_step: usize,
    #[arg(long, default_value_t = DEFAULT_N_DIR, value_parser = positive)]
    n_dir: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_RESTARTS)]
    max_restarts: usize,
    /// Image shape for the PGM dumps, e.g. 28x28.
    #[arg(long, value_parser = frame_shape)]
    frame_shape: Option<(usize, usize)>,
}

#[derive(Debug, Args)]
struct WalkArgs {
    #[arg(long)]
    generator: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 16, value_parser = positive)]
    steps: usize,
    #[arg(long, default_value_t = DEFAULT_WALK_SIGMA, value_parser = non_negative)]
    sigma: f64,
    #[arg(long, value_parser = frame_shape)]
    frame_shape: Option<(usize, usize)>,
}

#[derive(Debug, Args)]
struct OutlierArgs {
    #[command(flatten)]
    sampling: SamplingArgs,
    #[arg(long, value_parser = frame_shape)]
    frame_shape: Option<(usize, usize)>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Generator model files (repeat the flag).
    #[arg(long = "generator", required = true)]
    generators: Vec<PathBuf>,
    /// Classifier model files (repeat the flag).
    #[arg(long = "classifier", required = true)]
    classifiers: Vec<PathBuf>,
    #[arg(long)]
    category: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SAMPLES, value_parser = positive)]
    n: usize,
    #[arg(long, default_value_t = DEFAULT_LEVEL, value_parser = level)]
    level: f64,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    generator: PathBuf,
    #[arg(long)]
    classifier: PathBuf,
    /// Directory written by an attack run.
    #[arg(long)]
    pair_dir: PathBuf,
    /// Radius to check against; defaults to the one recorded by the attack.
    #[arg(long, value_parser = non_negative)]
    epsilon: Option<f64>,
}

/// Every setting a run used, after defaults and seed resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub subcommand: String,
    pub classifiers: Vec<PathBuf>,
    pub generators: Vec<PathBuf>,
    pub category: Option<usize>,
    pub target: Option<usize>,
    pub epsilon: Option<f64>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub level: Option<f64>,
    pub batch_size: Option<usize>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub n_step: Option<usize>,
    pub n_dir: Option<usize>,
    pub max_restarts: Option<usize>,
    pub budget: Option<usize>,
    pub steps: Option<usize>,
    pub sigma: Option<f64>,
    pub frame_shape: Option<(usize, usize)>,
    pub pair_dir: Option<PathBuf>,
}

impl RunConfig {
    fn new(subcommand: &str, threads: Option<usize>) -> Self {
        RunConfig {
            subcommand: subcommand.into(),
            classifiers: vec![],
            generators: vec![],
            category: None,
            target: None,
            epsilon: None,
            n: None,
            seed: None,
            level: None,
            batch_size: None,
            threads,
            out: None,
            n_step: None,
            n_dir: None,
            max_restarts: None,
            budget: None,
            steps: None,
            sigma: None,
            frame_shape: None,
            pair_dir: None,
        }
    }

    pub fn to_toml(&self) -> String {
        let paths = |ps: &[PathBuf]| ps.iter().map(|p| p.display().to_string()).collect::<Vec<_>>();
        let mut w = DocWriter::new();
        w.str("subcommand", &self.subcommand);
        if !self.classifiers.is_empty() {
            w.strs("classifiers", &paths(&self.classifiers));
        }
        if !self.generators.is_empty() {
            w.strs("generators", &paths(&self.generators));
        }
        let uints = [
            ("category", self.category),
            ("target", self.target),
            ("n", self.n),
            ("batch_size", self.batch_size),
            ("threads", self.threads),
            ("n_step", self.n_step),
            ("n_dir", self.n_dir),
            ("max_restarts", self.max_restarts),
            ("budget", self.budget),
            ("steps", self.steps),
        ];
        for (k, v) in uints {
            if let Some(v) = v {
                w.uint(k, v);
            }
        }
        for (k, v) in [("epsilon", self.epsilon), ("level", self.level), ("sigma", self.sigma)] {
            if let Some(v) = v {
                w.float(k, v);
            }
        }
        if let Some(s) = self.seed {
            w.str("seed", &s.to_string());
        }
        if let Some((h, wd)) = self.frame_shape {
            w.uints("frame_shape", &[h, wd]);
        }
        for (k, v) in [("out", &self.out), ("pair_dir", &self.pair_dir)] {
            if let Some(p) = v {
                w.str(k, &p.display().to_string());
            }
        }
        w.finish()
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if cli.threads == Some(0) {
        eprintln!("error: --threads must be at least 1");
        return 2;
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        builder = builder.num_threads(t);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return 1;
        }
    };
    match pool.install(|| execute(cli.command, cli.threads)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(rand::random)
}

fn default_frame_shape(dim: usize) -> (usize, usize) {
    let side = (dim as f64).sqrt().round() as usize;
    if side * side == dim {
        (side, side)
    } else {
        (1, dim)
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn announce(cfg: &RunConfig) {
    println!("# resolved configuration\n{}", cfg.to_toml());
}

fn sampling_config(args: &SamplingArgs, seed: u64) -> SamplingConfig {
    SamplingConfig::new(args.n, seed)
        .with_level(args.level)
        .with_batch_size(args.batch_size)
}

fn base_config(name: &str, threads: Option<usize>, common: &Common, seed: u64) -> RunConfig {
    let mut cfg = RunConfig::new(name, threads);
    cfg.classifiers = vec![common.classifier.clone()];
    cfg.generators = vec![common.generator.clone()];
    cfg.seed = Some(seed);
    cfg.out = Some(common.out.clone());
    cfg
}

fn fill_sampling(cfg: &mut RunConfig, args: &SamplingArgs) {
    cfg.category = Some(args.category);
    cfg.n = Some(args.n);
    cfg.level = Some(args.level);
    cfg.batch_size = Some(args.batch_size);
}

fn load_pair(generator: &Path, classifier: &Path) -> Result<(Network, Network)> {
    Ok((read_model(generator)?, read_model(classifier)?))
}

fn execute(command: Command, threads: Option<usize>) -> Result<i32> {
    match command {
        Command::Correctness(args) => {
            let seed = resolve_seed(args.common.seed);
            let mut cfg = base_config("correctness", threads, &args.common, seed);
            fill_sampling(&mut cfg, &args);
            announce(&cfg);
            let (g, c) = load_pair(&args.common.generator, &args.common.classifier)?;
            let report = estimate_global_correctness(&c, &g, args.category, &sampling_config(&args, seed))?;
            create_dir(&args.common.out)?;
            let path = args.common.out.join("correctness.toml");
            write_text(&path, &report.to_toml())?;
            println!(
                "category {}: {}/{} correct, estimate {:.4}, {}% CI [{:.4}, {:.4}] -> {}",
                report.category,
                report.successes,
                report.n,
                report.point_estimate,
                report.level * 100.0,
                report.confidence_interval.0,
                report.confidence_interval.1,
                path.display()
            );
            Ok(0)
        }
        Command::Robustness(args) => {
            let s = &args.sampling;
            let seed = resolve_seed(s.common.seed);
            let mut cfg = base_config("robustness", threads, &s.common, seed);
            fill_sampling(&mut cfg, s);
            cfg.epsilon = Some(args.epsilon);
            cfg.budget = Some(args.budget);
            cfg.n_step = Some(args.n_step);
            announce(&cfg);
            let (g, c) = load_pair(&s.common.generator, &s.common.classifier)?;
            let budget = FalsifyBudget {
                n_step: args.n_step,
                restarts: args.budget,
            };
            let report = estimate_global_robustness(&c, &g, s.category, args.epsilon, &sampling_config(s, seed), budget)?;
            create_dir(&s.common.out)?;
            let path = s.common.out.join("robustness.toml");
            write_text(&path, &report.to_toml())?;
            println!(
                "category {} eps {}: certified {}, falsified {}, unknown {}; robustness in [{:.4}, {:.4}] -> {}",
                report.category,
                report.epsilon,
                report.certified,
                report.falsified,
                report.unknown,
                report.lower_bound,
                report.upper_bound,
                path.display()
            );
            Ok(0)
        }
        Command::AttackBb(args) => attack(args, threads, false),
        Command::AttackWb(args) => attack(args, threads, true),
        Command::Walk(args) => {
            let seed = resolve_seed(args.seed);
            let g = read_model(&args.generator)?;
            let shape = args.frame_shape.unwrap_or_else(|| default_frame_shape(g.output_dim()));
            let mut cfg = RunConfig::new("walk", threads);
            cfg.generators = vec![args.generator.clone()];
            cfg.seed = Some(seed);
            cfg.out = Some(args.out.clone());
            cfg.steps = Some(args.steps);
            cfg.sigma = Some(args.sigma);
            cfg.frame_shape = Some(shape);
            announce(&cfg);
            let walk = WalkConfig {
                steps: args.steps,
                sigma: args.sigma,
                seed,
                frame_shape: shape,
            };
            let frames = random_walk(&g, &walk)?;
            let paths = write_frames(&args.out, &frames, shape, g.output_activation())?;
            println!("wrote {} frames to {}", paths.len(), args.out.display());
            Ok(0)
        }
        Command::Outliers(args) => {
            let s = &args.sampling;
            let seed = resolve_seed(s.common.seed);
            let (g, c) = load_pair(&s.common.generator, &s.common.classifier)?;
            let shape = args.frame_shape.unwrap_or_else(|| default_frame_shape(g.output_dim()));
            let mut cfg = base_config("outliers", threads, &s.common, seed);
            fill_sampling(&mut cfg, s);
            cfg.frame_shape = Some(shape);
            announce(&cfg);
            let outliers = mine_outliers(&c, &g, s.category, &sampling_config(s, seed))?;
            write_outlier_images(&s.common.out, &outliers, &g, shape)?;
            let mut w = DocWriter::new();
            w.str("format", "gmrobust-outlier-report")
                .int("version", 1)
                .uint("category", s.category)
                .uint("n", s.n)
                .str("seed", &seed.to_string())
                .uint("outliers", outliers.len())
                .uints("indices", &outliers.iter().map(|o| o.index).collect::<Vec<_>>())
                .uints("predicted", &outliers.iter().map(|o| o.prediction.category).collect::<Vec<_>>());
            let path = s.common.out.join("outliers.toml");
            write_text(&path, &w.finish())?;
            println!("{} of {} samples misclassified -> {}", outliers.len(), s.n, path.display());
            Ok(0)
        }
        Command::Compare(args) => {
            let seed = resolve_seed(args.seed);
            let mut cfg = RunConfig::new("compare", threads);
            cfg.classifiers = args.classifiers.clone();
            cfg.generators = args.generators.clone();
            cfg.category = Some(args.category);
            cfg.n = Some(args.n);
            cfg.level = Some(args.level);
            cfg.seed = Some(seed);
            cfg.out = Some(args.out.clone());
            announce(&cfg);
            let load_all = |paths: &[PathBuf]| {
                paths
                    .iter()
                    .map(|p| Ok((p.display().to_string(), read_model(p)?)))
                    .collect::<Result<Vec<_>>>()
            };
            let classifiers = load_all(&args.classifiers)?;
            let generators = load_all(&args.generators)?;
            let sampling = SamplingConfig::new(args.n, seed).with_level(args.level);
            let report = compare_grid(&classifiers, &generators, args.category, &sampling)?;
            create_dir(&args.out)?;
            let path = args.out.join("comparison.toml");
            write_text(&path, &report.to_toml())?;
            for row in &report.rows {
                println!("{}: max discrepancy {:.4}", row.label, row.max_discrepancy);
            }
            println!("-> {}", path.display());
            Ok(0)
        }
        Command::VerifyPair(args) => {
            let mut cfg = RunConfig::new("verify-pair", threads);
            cfg.classifiers = vec![args.classifier.clone()];
            cfg.generators = vec![args.generator.clone()];
            cfg.pair_dir = Some(args.pair_dir.clone());
            cfg.epsilon = args.epsilon;
            announce(&cfg);
            let (g, c) = load_pair(&args.generator, &args.classifier)?;
            let composed = compose(&g, &c)?;
            let epsilon = match args.epsilon {
                Some(e) => e,
                None => recorded_epsilon(&args.pair_dir.join("attack.toml"))?,
            };
            let x = read_tensor(args.pair_dir.join("x.toml"))?;
            let x_prime = read_tensor(args.pair_dir.join("x_prime.toml"))?;
            let valid = verify_pair(&x, &x_prime, &composed, epsilon);
            println!("valid = {valid}");
            Ok(if valid { 0 } else { 1 })
        }
    }
}

fn recorded_epsilon(path: &Path) -> Result<f64> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let table: toml::Table = toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    table
        .get("epsilon")
        .and_then(|v| v.as_float())
        .ok_or_else(|| Error::Parse(format!("{}: missing float field `epsilon`", path.display())))
}

fn attack(args: AttackArgs, threads: Option<usize>, white_box: bool) -> Result<i32> {
    let name = if white_box { "attack-wb" } else { "attack-bb" };
    let seed = resolve_seed(args.common.seed);
    let (g, c) = load_pair(&args.common.generator, &args.common.classifier)?;
    let shape = args.frame_shape.unwrap_or_else(|| default_frame_shape(g.output_dim()));
    let mut cfg = base_config(name, threads, &args.common, seed);
    cfg.category = Some(args.category);
    cfg.target = Some(args.target);
    cfg.epsilon = Some(args.epsilon);
    cfg.n_step = Some(args.n_step);
    if !white_box {
        cfg.n_dir = Some(args.n_dir);
    }
    cfg.max_restarts = Some(args.max_restarts);
    cfg.frame_shape = Some(shape);
    announce(&cfg);

    let composed = compose(&g, &c)?;
    let params = AttackParams::new(args.epsilon, args.target, args.category, seed)
        .with_steps(args.n_step)
        .with_directions(args.n_dir)
        .with_restarts(args.max_restarts);
    let found = if white_box {
        white_box_attack(&composed, &params)?
    } else {
        black_box_attack(&composed, &params)?
    };

    let out = &args.common.out;
    create_dir(out)?;
    let mut w = DocWriter::new();
    w.str("format", "gmrobust-attack-report")
        .int("version", 1)
        .str("algorithm", if white_box { "white-box" } else { "black-box" })
        .str("seed", &seed.to_string())
        .float("epsilon", args.epsilon)
        .uint("source_class", args.category)
        .uint("target_class", args.target)
        .uint("n_step", args.n_step)
        .uint("max_restarts", args.max_restarts)
        .bool("found", found.is_some());
    if let Some(adv) = &found {
        write_example(out, adv, shape, &composed)?;
        w.uint("category_x", adv.category_x)
            .uint("category_x_prime", adv.category_x_prime)
            .float("linf_distance", adv.linf_distance);
        println!(
            "found: categories {} -> {}, linf distance {} (eps {}) -> {}",
            adv.category_x,
            adv.category_x_prime,
            adv.linf_distance,
            args.epsilon,
            out.display()
        );
    } else {
        println!("no realistic adversarial example within {} restarts", args.max_restarts);
    }
    write_text(&out.join("attack.toml"), &w.finish())?;
    Ok(0)
}

fn write_example(dir: &Path, adv: &RealisticAdvExample, shape: (usize, usize), composed: &Network) -> Result<()> {
    write_tensor(dir.join("x.toml"), &adv.x)?;
    write_tensor(dir.join("x_prime.toml"), &adv.x_prime)?;
    let act = composed.image_activation();
    write_pgm(&dir.join("image_x.pgm"), &adv.image_x, shape, act)?;
    write_pgm(&dir.join("image_x_prime.pgm"), &adv.image_x_prime, shape, act)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_shape_parsing() {
        assert_eq!(frame_shape("28x28"), Ok((28, 28)));
        assert!(frame_shape("28").is_err());
        assert_eq!(default_frame_shape(784), (28, 28));
        assert_eq!(default_frame_shape(5), (1, 5));
    }

    #[test]
    fn level_parsing() {
        assert_eq!(level("0.99"), Ok(0.99));
        assert!(level("0.5").is_err());
        assert!(non_negative("-1").is_err());
        assert!(non_negative("nan").is_err());
    }

    #[test]
    fn missing_flag_is_usage_error() {
        assert_eq!(run(["gmrobust", "correctness", "--classifier", "c.nnw", "--category", "3"]), 2);
        assert_eq!(run(["gmrobust", "frobnicate"]), 2);
    }

    #[test]
    fn help_exits_cleanly() {
        assert_eq!(run(["gmrobust", "--help"]), 0);
    }
}
