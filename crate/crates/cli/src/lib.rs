//! Command implementations behind the `hxai` binary.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use hxai_core::game::{BaselineMode, EvalCounter, ValueFunction};
use hxai_core::hierarchy_tools::{check_t_property, TPropertyReport};
use hxai_core::metrics::{aopc, evaluate_metrics, AopcParams, BBox, GroundTruthMask, MetricsReport};
use hxai_core::models::{make_synthetic_game, rect_pixels, GameSpec, ToyImageGame, ToyScorer};
use hxai_core::owen::{
    cost_summary, full_pass_eval_count, owen_feature_value, owen_multilevel, OwenOptions, PartitionHierarchy,
};
use hxai_core::raster::{normalize_to_u8, read_image, write_pgm, Grid, Image};
use hxai_core::segmentation::{
    build_hierarchy, BuiltHierarchy, CannyConfig, EpsilonPolicy, HierarchyConfig, PixelExpansion,
};
use hxai_core::shapley::{exact_shapley, permutation_shapley, Attribution, DEFAULT_EXACT_LIMIT};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_T_PROPERTY: u8 = 3;

/// Bad user input; maps to exit code 2.
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Invalid(msg.into()))
}

/// Exit code for an error returned by a command.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Invalid>().is_some() {
        return EXIT_INVALID;
    }
    match err.downcast_ref::<hxai_core::Error>() {
        Some(hxai_core::Error::InvalidInput(_))
        | Some(hxai_core::Error::InvalidHierarchy(_))
        | Some(hxai_core::Error::Capacity { .. }) => EXIT_INVALID,
        _ => EXIT_FAILURE,
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "hxai",
    version,
    about = "Shapley and hierarchical Owen attributions for images"
)]
pub struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Segment an image into a coalition hierarchy.
    Segment(SegmentArgs),
    /// Attribute a scorer's output to pixels.
    Explain(ExplainArgs),
    /// Check a hierarchy for the positive threshold property.
    CheckT(CheckTArgs),
    /// Score an attribution map against a ground-truth mask.
    Metrics(MetricsArgs),
    /// Compare predicted and measured evaluation counts for Shapley and Owen.
    CompareCost(CompareCostArgs),
    /// Time segmentation and attribution over a range of image sizes.
    Bench(BenchArgs),
}

/// Options shared by the commands that read an image and score it.
#[derive(Args, Debug, Clone)]
pub struct RunConfig {
    #[arg(long)]
    pub input: PathBuf,
    /// Built-in scorer (`template`, `template:x0,y0,x1,y1`, `mean`, `retained-mean`,
    /// `group-and:x0,y0,x1,y1;...`) or a JSON scorer file.
    #[arg(long, default_value = "template")]
    pub scorer: String,
    #[arg(long, value_enum, default_value_t = Baseline::Mean)]
    pub baseline: Baseline,
    #[arg(long, default_value_t = 75.0)]
    pub pct_lower: f64,
    #[arg(long, default_value_t = 90.0)]
    pub pct_upper: f64,
    /// Side of the square dilation element.
    #[arg(long, default_value_t = 2)]
    pub dilate: usize,
    #[arg(long, default_value_t = 5)]
    pub fanout: usize,
    #[arg(long, default_value_t = 6)]
    pub max_depth: usize,
    /// `median` or a non-negative real.
    #[arg(long, default_value = "median")]
    pub epsilon: String,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub tau: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// How segments are split down to pixels: `flat` or `bisect[:N]`.
    #[arg(long)]
    pub pixel_split: Option<String>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Baseline {
    Mean,
    Zero,
}

impl From<Baseline> for BaselineMode {
    fn from(b: Baseline) -> Self {
        match b {
            Baseline::Mean => BaselineMode::Mean,
            Baseline::Zero => BaselineMode::Zero,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExplainMethod {
    Shapley,
    Owen,
}

#[derive(Args, Debug, Clone)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub config: RunConfig,
}

#[derive(Args, Debug, Clone)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub config: RunConfig,
    #[arg(long, value_enum, default_value_t = ExplainMethod::Owen)]
    pub method: ExplainMethod,
    /// Permutation samples for Monte Carlo Shapley.
    #[arg(long)]
    pub mc: Option<usize>,
    /// Use this hierarchy instead of segmenting the image.
    #[arg(long)]
    pub hierarchy: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct CheckTArgs {
    #[command(flatten)]
    pub config: RunConfig,
    /// Hierarchy JSON to check; segments the image when omitted.
    #[arg(long)]
    pub hierarchy: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct MetricsArgs {
    /// Attribution CSV, one image row per line.
    #[arg(long)]
    pub attr: PathBuf,
    /// Ground-truth mask image; nonzero pixels are positive.
    #[arg(long)]
    pub mask: PathBuf,
    /// `x0,y0,x1,y1`, inclusive.
    #[arg(long)]
    pub bbox: Option<String>,
    /// Image and scorer for AOPC; skipped when no image is given.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "template")]
    pub scorer: String,
    #[arg(long, value_enum, default_value_t = Baseline::Mean)]
    pub baseline: Baseline,
    #[arg(long, default_value_t = 0.1)]
    pub max_fraction: f64,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct CompareCostArgs {
    /// Must equal the product of the fan-outs when given.
    #[arg(long)]
    pub n_features: Option<usize>,
    /// Fan-out per level, e.g. `2,5,5`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub fanout: Vec<usize>,
    /// Repeat a single fan-out this many times.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Run instrumented passes up to this many evaluations.
    #[arg(long, default_value_t = 5_000_000)]
    pub measure_limit: u128,
}

#[derive(Args, Debug, Clone)]
pub struct BenchArgs {
    /// Image sides to run, e.g. `4,8,16,32`.
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value = "template")]
    pub scorer: String,
    #[arg(long, default_value = "bisect:4")]
    pub pixel_split: String,
    #[arg(long, default_value_t = 5)]
    pub fanout: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> anyhow::Result<u8> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(invalid("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Segment(a) => cmd_segment(&a.config).map(|_| EXIT_OK),
        Command::Explain(a) => cmd_explain(&a).map(|_| EXIT_OK),
        Command::CheckT(a) => cmd_check_t(&a).map(|r| if r.pass { EXIT_OK } else { EXIT_T_PROPERTY }),
        Command::Metrics(a) => cmd_metrics(&a).map(|_| EXIT_OK),
        Command::CompareCost(a) => {
            let rows = cmd_compare_cost(&a)?;
            print!("{}", cost_table_csv(&rows));
            Ok(EXIT_OK)
        }
        Command::Bench(a) => {
            let rows = cmd_bench(&a)?;
            print!("{}", fs::read_to_string(a.out.join("bench.csv"))?);
            eprintln!(
                "log-log slope of Owen evaluations vs pixels: {:.3}",
                loglog_slope(&rows)
            );
            Ok(EXIT_OK)
        }
    }
}

/// Resolves a scorer argument against an image.
pub fn resolve_scorer(spec: &str, image: &Image) -> anyhow::Result<ToyScorer> {
    let (w, h) = (image.width(), image.height());
    let n = w * h;
    let rect = |s: &str| -> anyhow::Result<Vec<usize>> {
        let b: BBox = s.parse().map_err(|e: hxai_core::Error| invalid(e.to_string()))?;
        if b.x0 > b.x1 || b.y0 > b.y1 || b.x1 >= w || b.y1 >= h {
            return Err(invalid(format!("rectangle {s} is empty or outside the {w}x{h} image")));
        }
        Ok(rect_pixels(w, b.x0, b.y0, b.x1, b.y1))
    };
    let scorer = match spec {
        "template" => ToyScorer::TemplateMean {
            region: rect_pixels(
                w,
                w / 4,
                h / 4,
                (3 * w / 4).max(w / 4 + 1) - 1,
                (3 * h / 4).max(h / 4 + 1) - 1,
            ),
        },
        "mean" => ToyScorer::PixelSumWeighted {
            weights: vec![1.0 / n as f64; n],
        },
        "retained-mean" => ToyScorer::RetainedMean,
        s if s.starts_with("template:") => ToyScorer::TemplateMean {
            region: rect(&s["template:".len()..])?,
        },
        s if s.starts_with("group-and:") => ToyScorer::GroupAnd {
            regions: s["group-and:".len()..]
                .split(';')
                .map(rect)
                .collect::<anyhow::Result<_>>()?,
        },
        path => {
            let text = fs::read_to_string(path).map_err(|_| invalid(format!("unknown scorer {path:?}")))?;
            serde_json::from_str(&text).map_err(|e| invalid(format!("scorer file {path}: {e}")))?
        }
    };
    Ok(scorer)
}

fn load_game(config: &RunConfig) -> anyhow::Result<(Image, ToyImageGame)> {
    let image = read_image(&config.input)?;
    let scorer = resolve_scorer(&config.scorer, &image)?;
    let game = ToyImageGame::new(&image, config.baseline.into(), scorer)?;
    Ok((image, game))
}

/// Segmentation settings from the command line; `default_split` applies when
/// `--pixel-split` is absent.
pub fn hierarchy_config(config: &RunConfig, default_split: PixelExpansion) -> anyhow::Result<HierarchyConfig> {
    if !(0.0..=100.0).contains(&config.pct_lower)
        || !(0.0..=100.0).contains(&config.pct_upper)
        || config.pct_lower >= config.pct_upper
    {
        return Err(invalid(format!(
            "percentiles must satisfy 0 <= lower < upper <= 100, got {} and {}",
            config.pct_lower, config.pct_upper
        )));
    }
    let epsilon: EpsilonPolicy = config.epsilon.parse()?;
    let pixel_expansion = match &config.pixel_split {
        Some(s) => s.parse()?,
        None => default_split,
    };
    Ok(HierarchyConfig {
        canny: CannyConfig {
            pct_lower: config.pct_lower,
            pct_upper: config.pct_upper,
            ..CannyConfig::default()
        },
        dilate: config.dilate,
        epsilon,
        fanout: config.fanout,
        max_depth: config.max_depth,
        pixel_expansion,
        ..HierarchyConfig::default()
    })
}

fn create_out(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Writes `hierarchy.json`, `edges.pgm` and `level_<l>.pgm` for every segment level.
pub fn cmd_segment(config: &RunConfig) -> anyhow::Result<BuiltHierarchy> {
    let cfg = hierarchy_config(config, PixelExpansion::Flat)?;
    let (image, game) = load_game(config)?;
    let built = build_hierarchy(&image, &game, &cfg)?;
    create_out(&config.out)?;
    built.document.save(config.out.join("hierarchy.json"))?;
    write_pgm(
        config.out.join("edges.pgm"),
        &built.edges.edges.map(|&e| if e { 255 } else { 0 }),
    )?;
    for (l, map) in built.label_maps().iter().enumerate() {
        write_pgm(config.out.join(format!("level_{}.pgm", l + 1)), map)?;
    }
    Ok(built)
}

/// Attribution CSV: one line per image row, values in shortest round-trip form.
pub fn attribution_csv(scores: &[f64], width: usize) -> String {
    let mut out = String::new();
    for row in scores.chunks(width) {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn read_attribution_csv(path: &Path) -> anyhow::Result<Grid<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|_| invalid(format!("bad number {c:?} in {}", path.display())))
                })
                .collect()
        })
        .collect::<anyhow::Result<_>>()?;
    let width = rows.first().map_or(0, Vec::len);
    if width == 0 || rows.iter().any(|r| r.len() != width) {
        return Err(invalid(format!("{} is not a rectangular grid", path.display())));
    }
    let height = rows.len();
    Ok(Grid::from_vec(width, height, rows.concat())?)
}

pub struct ExplainOutput {
    pub attribution: Attribution<f64>,
    pub stats: serde_json::Value,
}

/// Writes `attribution.csv`, `heatmap.pgm` and `stats.json`.
pub fn cmd_explain(args: &ExplainArgs) -> anyhow::Result<ExplainOutput> {
    let config = &args.config;
    let (image, game) = load_game(config)?;
    let n = image.pixel_count();
    let counter = EvalCounter::new(&game);
    let start = Instant::now();
    let mut stats = json!({
        "method": match args.method { ExplainMethod::Shapley => "shapley", ExplainMethod::Owen => "owen" },
        "width": image.width(),
        "height": image.height(),
        "n_features": n,
        "scorer": config.scorer,
        "baseline": BaselineMode::from(config.baseline),
        "seed": config.seed,
    });
    let attribution = match args.method {
        ExplainMethod::Shapley => match args.mc {
            Some(samples) => {
                stats["mc_samples"] = json!(samples);
                stats["predicted_eval_count"] = json!(samples as u128 * (n as u128 + 1));
                permutation_shapley(&counter, samples, config.seed)?
            }
            None => {
                if n > DEFAULT_EXACT_LIMIT {
                    return Err(invalid(format!(
                        "exact Shapley over {n} pixels needs 2^{n} evaluations; limit is {DEFAULT_EXACT_LIMIT} pixels (use --mc)"
                    )));
                }
                stats["predicted_eval_count"] = json!(1u64 << n);
                exact_shapley(&counter)?
            }
        },
        ExplainMethod::Owen => {
            let hierarchy = match &args.hierarchy {
                Some(path) => PartitionHierarchy::load(path)?,
                None => {
                    let cfg = hierarchy_config(config, PixelExpansion::Bisect { max_block: 4 })?;
                    stats["segmentation"] = json!(cfg);
                    build_hierarchy(&image, &game, &cfg)?.hierarchy
                }
            };
            if hierarchy.n_features() != n {
                return Err(invalid(format!(
                    "hierarchy covers {} features, image has {n} pixels",
                    hierarchy.n_features()
                )));
            }
            let cost = cost_summary(&hierarchy);
            stats["hierarchy_levels"] = json!(cost.levels);
            stats["predicted_eval_exponent"] = json!(cost.predicted_exponent);
            stats["predicted_eval_count"] = json!(count_json(hxai_core::owen::predicted_eval_count(&hierarchy)));
            stats["pair_eval_exponent"] = json!(cost.pair_exponent);
            stats["full_pass_eval_count"] = json!(count_json(cost.full_pass_evaluations));
            owen_multilevel(&counter, &hierarchy)?
        }
    };
    let wall = start.elapsed().as_secs_f64();
    let counts = counter.stats();
    stats["distinct_evals"] = json!(counts.distinct_calls);
    stats["total_requests"] = json!(counts.total_requests);
    let surplus =
        game.evaluate(&hxai_core::CoalitionMask::full(n)) - game.evaluate(&hxai_core::CoalitionMask::empty(n));
    stats["efficiency_gap"] = json!(surplus - attribution.scores.iter().sum::<f64>());
    stats["wall_time_s"] = json!(wall);

    create_out(&config.out)?;
    let csv = attribution_csv(&attribution.scores, image.width());
    fs::write(config.out.join("attribution.csv"), csv)?;
    let grid = Grid::from_vec(image.width(), image.height(), attribution.scores.clone())?;
    write_pgm(config.out.join("heatmap.pgm"), &normalize_to_u8(&grid))?;
    write_json(&config.out.join("stats.json"), &stats)?;
    Ok(ExplainOutput { attribution, stats })
}

/// Counts beyond `u64` are written as strings.
fn count_json(c: Option<u128>) -> serde_json::Value {
    match c {
        Some(v) if v <= u64::MAX as u128 => json!(v as u64),
        Some(v) => json!(v.to_string()),
        None => serde_json::Value::Null,
    }
}

/// Writes `t_property.json`.
pub fn cmd_check_t(args: &CheckTArgs) -> anyhow::Result<TPropertyReport> {
    let config = &args.config;
    if config.tau.is_nan() {
        return Err(invalid("--tau must be a number"));
    }
    let (image, game) = load_game(config)?;
    let hierarchy = match &args.hierarchy {
        Some(path) => PartitionHierarchy::load(path)?,
        None => {
            let cfg = hierarchy_config(config, PixelExpansion::Flat)?;
            build_hierarchy(&image, &game, &cfg)?.hierarchy
        }
    };
    let report = check_t_property(&hierarchy, &game, config.tau)?;
    create_out(&config.out)?;
    write_json(&config.out.join("t_property.json"), &report)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(report)
}

/// Writes `metrics.json` and `metrics.csv`.
pub fn cmd_metrics(args: &MetricsArgs) -> anyhow::Result<MetricsReport> {
    let attr = read_attribution_csv(&args.attr)?;
    let bbox = args.bbox.as_deref().map(str::parse::<BBox>).transpose()?;
    let truth = GroundTruthMask::load(&args.mask, bbox)?;
    let mut report = evaluate_metrics(&attr, &truth)?;
    if let Some(input) = &args.input {
        let image = read_image(input)?;
        if image.width() != attr.width() || image.height() != attr.height() {
            return Err(invalid("image and attribution sizes differ"));
        }
        let game = ToyImageGame::new(&image, args.baseline.into(), resolve_scorer(&args.scorer, &image)?)?;
        let params = AopcParams {
            max_fraction: args.max_fraction,
            steps: args.steps,
        };
        report.aopc = Some(aopc(&game, attr.data(), &params)?);
        report.aopc_params = Some(params);
    }
    create_out(&args.out)?;
    write_json(&args.out.join("metrics.json"), &report)?;
    fs::write(
        args.out.join("metrics.csv"),
        format!("{}\n{}\n", MetricsReport::CSV_HEADER, report.csv_row()),
    )?;
    println!("{}", report.to_json()?);
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct CostRow {
    pub method: &'static str,
    pub n_features: usize,
    pub hierarchy: String,
    pub predicted: Option<u128>,
    pub measured_single_feature: Option<u64>,
    pub measured_full_pass: Option<u64>,
}

pub fn cmd_compare_cost(args: &CompareCostArgs) -> anyhow::Result<Vec<CostRow>> {
    let fanouts: Vec<usize> = match (args.depth, args.fanout.as_slice()) {
        (Some(d), [f]) => vec![*f; d],
        (Some(_), _) => return Err(invalid("--depth needs a single --fanout value")),
        (None, list) => list.to_vec(),
    };
    if fanouts.is_empty() || fanouts.contains(&0) {
        return Err(invalid("fan-outs must be positive"));
    }
    let n = fanouts
        .iter()
        .try_fold(1usize, |a, &f| a.checked_mul(f))
        .ok_or_else(|| invalid("too many features"))?;
    if let Some(want) = args.n_features {
        if want != n {
            return Err(invalid(format!("fan-outs {fanouts:?} give {n} features, not {want}")));
        }
    }
    let h = PartitionHierarchy::balanced(&fanouts)?;
    let label = fanouts.iter().map(usize::to_string).collect::<Vec<_>>().join("x");
    let weights: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
    let game = make_synthetic_game(GameSpec::Additive { weights })?;
    let limit = args.measure_limit;

    let shapley_predicted = (n < 128).then(|| 1u128 << n);
    let measured_shapley = match shapley_predicted {
        Some(p) if p <= limit && n <= DEFAULT_EXACT_LIMIT => {
            let counter = EvalCounter::new(&game);
            let _: Attribution<f64> = exact_shapley(&counter)?;
            Some(counter.stats().distinct_calls)
        }
        _ => None,
    };
    let opts = OwenOptions::default();
    let single = if (1u128 << cost_summary(&h).pair_exponent.min(127)) <= limit {
        let counter = EvalCounter::new(&game);
        let _: f64 = owen_feature_value(&counter, &h, 0, &opts)?;
        Some(counter.stats().distinct_calls)
    } else {
        None
    };
    let full = match full_pass_eval_count(&h) {
        Some(c) if c <= limit => {
            let counter = EvalCounter::new(&game);
            let _: Attribution<f64> = owen_multilevel(&counter, &h)?;
            Some(counter.stats().distinct_calls)
        }
        _ => None,
    };
    Ok(vec![
        CostRow {
            method: "shapley",
            n_features: n,
            hierarchy: "flat".into(),
            predicted: shapley_predicted,
            measured_single_feature: measured_shapley,
            measured_full_pass: measured_shapley,
        },
        CostRow {
            method: "owen",
            n_features: n,
            hierarchy: label,
            predicted: hxai_core::owen::predicted_eval_count(&h),
            measured_single_feature: single,
            measured_full_pass: full,
        },
    ])
}

pub fn cost_table_csv(rows: &[CostRow]) -> String {
    let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
    let mut out = String::from(
        "method,n_features,hierarchy,predicted,predicted_sci,measured_single_feature,measured_full_pass\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.method,
            r.n_features,
            r.hierarchy,
            opt(r.predicted.map(|p| p.to_string())),
            opt(r.predicted.map(|p| format!("{:.3e}", p as f64))),
            opt(r.measured_single_feature.map(|m| m.to_string())),
            opt(r.measured_full_pass.map(|m| m.to_string())),
        ));
    }
    out
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct BenchRow {
    pub size: usize,
    pub pixels: usize,
    pub levels: usize,
    pub owen_distinct_evals: u64,
    pub owen_seconds: f64,
    pub shapley_evals: Option<u64>,
    pub shapley_seconds: Option<f64>,
}

/// Square-on-gradient test image of side `size`.
pub fn bench_image(size: usize) -> Image {
    let lo = size / 4;
    let hi = (3 * size / 4).max(lo + 1);
    Image::gray_from_fn(size, size, |x, y| {
        let ramp = 40.0 + 60.0 * x as f64 / size as f64;
        if (lo..hi).contains(&x) && (lo..hi).contains(&y) {
            ramp + 120.0
        } else {
            ramp
        }
    })
    .expect("positive size")
}

/// Writes `bench.csv`.
pub fn cmd_bench(args: &BenchArgs) -> anyhow::Result<Vec<BenchRow>> {
    if args.sizes.is_empty() || args.sizes.contains(&0) {
        return Err(invalid("sizes must be positive"));
    }
    let split: PixelExpansion = args.pixel_split.parse()?;
    let mut rows = Vec::new();
    for &size in &args.sizes {
        let image = bench_image(size);
        let game = ToyImageGame::new(&image, BaselineMode::Mean, resolve_scorer(&args.scorer, &image)?)?;
        let cfg = HierarchyConfig {
            fanout: args.fanout,
            pixel_expansion: split,
            ..HierarchyConfig::default()
        };
        let start = Instant::now();
        let built = build_hierarchy(&image, &game, &cfg)?;
        let counter = EvalCounter::new(&game);
        let _: Attribution<f64> = owen_multilevel(&counter, &built.hierarchy)?;
        let owen_seconds = start.elapsed().as_secs_f64();
        let (shapley_evals, shapley_seconds) = if image.pixel_count() <= DEFAULT_EXACT_LIMIT {
            let counter = EvalCounter::new(&game);
            let start = Instant::now();
            let _: Attribution<f64> = exact_shapley(&counter)?;
            (
                Some(counter.stats().distinct_calls),
                Some(start.elapsed().as_secs_f64()),
            )
        } else {
            (None, None)
        };
        rows.push(BenchRow {
            size,
            pixels: image.pixel_count(),
            levels: built.hierarchy.levels(),
            owen_distinct_evals: counter.stats().distinct_calls,
            owen_seconds,
            shapley_evals,
            shapley_seconds,
        });
    }
    create_out(&args.out)?;
    let mut csv = String::from("size,pixels,levels,owen_distinct_evals,owen_seconds,shapley_evals,shapley_seconds\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{:.6},{},{}\n",
            r.size,
            r.pixels,
            r.levels,
            r.owen_distinct_evals,
            r.owen_seconds,
            r.shapley_evals.map_or("infeasible".into(), |e| e.to_string()),
            r.shapley_seconds.map_or("infeasible".into(), |s| format!("{s:.6}")),
        ));
    }
    fs::write(args.out.join("bench.csv"), csv)?;
    Ok(rows)
}

/// Least-squares slope of `ln(evals)` against `ln(pixels)`.
pub fn loglog_slope(rows: &[BenchRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.owen_distinct_evals > 0)
        .map(|r| ((r.pixels as f64).ln(), (r.owen_distinct_evals as f64).ln()))
        .collect();
    slope(&pts)
}

pub fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
