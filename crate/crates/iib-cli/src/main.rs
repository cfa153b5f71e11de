//! Command-line surface over the descriptor library: extraction, matching,
//! training, evaluation, synthetic pair generation and a micro-benchmark.
//!
//! Every run is deterministic for a fixed seed and worker count; errors go
//! to stderr one per line prefixed with `error:` and flip the exit code.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use iib::descriptor::{DEFAULT_GRANULARITY, DEFAULT_RADIUS};
use iib::evaluation::DEFAULT_EPSILON;
use iib::image::{compute_channels, ChannelKind, ChannelStack, GrayImage};
use iib::io;
use iib::{
    adaboost_train, apply_mask, brute_force_mutual, build_training_set, extract_batch,
    extract_with_ops, grid_keypoints, hierarchical_match, natural_texture, pr_sweep,
    precision_recall, select_top_m, synth_pair, BinaryDescriptor, DescriptorConfig, Homography,
    Keypoint, MatchPair, MatchStats, Mapping, OpCounts, SelectionMask, SynthSpec, TrainingScene,
};

fn version_string() -> String {
    format!(
        "{} (IIBD container v{}; fingerprint schema: granularity, mapping id, overlap, channel ids, radius)",
        env!("CARGO_PKG_VERSION"),
        io::IIBD_VERSION
    )
}

#[derive(Parser)]
#[command(
    name = "iib",
    version = version_string(),
    about = "Quadtree binary descriptors: extract, match, train, evaluate"
)]
struct Cli {
    /// Worker threads; 0 uses all cores, 1 gives a serial reproducibility
    /// audit.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute descriptors for one image and write an IIBD container.
    Extract(ExtractArgs),
    /// Mutually match two descriptor files; CSV on stdout, MC on stderr.
    Match(MatchArgs),
    /// Score image pairs against homography ground truth.
    Eval(EvalArgs),
    /// Train boosted quadruple selection and write a reduction mask.
    TrainSelect(TrainSelectArgs),
    /// Generate the second image of a synthetic evaluation pair.
    Synth(SynthArgs),
    /// Measure per-descriptor operation counts and throughput.
    Bench(BenchArgs),
}

/// Descriptor configuration flags shared by the extraction-driven
/// subcommands. Defaults match the library defaults: G=4, mean mapping,
/// disjoint quadruples, channels gx,gy,go,gi, radius 32.
#[derive(Args, Clone)]
struct ConfigArgs {
    /// Quadtree depth G.
    #[arg(long, default_value_t = DEFAULT_GRANULARITY)]
    granularity: u8,

    /// Bit mapping: mean, max, min, quartile or sort.
    #[arg(long, default_value = "mean", value_parser = parse_mapping)]
    mapping: Mapping,

    /// Slide quadruple windows at stride one instead of tiling.
    #[arg(long)]
    overlap: bool,

    /// Comma-separated channels: gx, gy, go, gi, or names passed to
    /// --extra.
    #[arg(long, default_value = "gx,gy,go,gi")]
    channels: String,

    /// Region-of-support half side for keypoints that do not carry one.
    #[arg(long, default_value_t = DEFAULT_RADIUS)]
    radius: f64,

    /// Honor keypoint angles via rotated resampling.
    #[arg(long)]
    rotation: bool,
}

impl ConfigArgs {
    fn to_config(&self, extra_names: &[String]) -> Result<DescriptorConfig> {
        let channels = self
            .channels
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|token| match token {
                "gx" => Ok(ChannelKind::GradX),
                "gy" => Ok(ChannelKind::GradY),
                "go" => Ok(ChannelKind::GradOrientation),
                "gi" => Ok(ChannelKind::Intensity),
                name => extra_names
                    .iter()
                    .position(|n| n == name)
                    .map(|slot| ChannelKind::Extra(slot as u8))
                    .ok_or_else(|| {
                        anyhow!("channel `{name}` is not built in and not registered via --extra")
                    }),
            })
            .collect::<Result<Vec<_>>>()?;
        let config = DescriptorConfig {
            granularity: self.granularity,
            mapping: self.mapping,
            overlap: self.overlap,
            channels,
            rotation_enabled: self.rotation,
            radius: self.radius,
        };
        config.validate()?;
        Ok(config)
    }
}

fn parse_mapping(s: &str) -> std::result::Result<Mapping, String> {
    s.parse()
}

fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (rows, cols) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("grid `{s}` must look like ROWSxCOLS, e.g. 10x20"))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| format!("grid `{s}` needs positive integers"))
    };
    Ok((parse(rows)?, parse(cols)?))
}

fn parse_extra(s: &str) -> std::result::Result<(String, PathBuf), String> {
    let (name, path) = s
        .split_once('=')
        .ok_or_else(|| format!("extra channel `{s}` must look like name=path"))?;
    if name.trim().is_empty() {
        return Err(format!("extra channel `{s}` has an empty name"));
    }
    Ok((name.trim().to_string(), PathBuf::from(path)))
}

#[derive(Args)]
struct ExtractArgs {
    /// Input image; grayscale passes through, color converts to luma.
    #[arg(long)]
    image: PathBuf,

    /// Keypoint CSV: x,y[,radius[,angle_rad]] per line.
    #[arg(long, conflicts_with = "grid")]
    keypoints: Option<PathBuf>,

    /// Synthesize an interior keypoint grid instead, e.g. --grid 10x20.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,

    /// Extra channel registration name=path; repeatable.
    #[arg(long = "extra", value_parser = parse_extra)]
    extras: Vec<(String, PathBuf)>,

    /// Reduction mask (JSON) to apply before writing.
    #[arg(long)]
    mask: Option<PathBuf>,

    /// Output descriptor container.
    #[arg(long, short)]
    output: PathBuf,

    #[command(flatten)]
    config: ConfigArgs,
}

fn grid_margin(radius: f64) -> f64 {
    radius.ceil() + 2.0
}

fn run_extract(args: &ExtractArgs) -> Result<()> {
    let extra_names: Vec<String> = args.extras.iter().map(|(n, _)| n.clone()).collect();
    let config = args.config.to_config(&extra_names)?;
    let img = io::load_gray_image(&args.image)?;
    let extras = io::load_extra_channels(&args.extras)?;
    let stack = compute_channels(&img, &extras)?;

    let keypoints = match (&args.keypoints, args.grid) {
        (Some(path), None) => io::read_keypoints(path, config.radius)?,
        (None, Some((rows, cols))) => grid_keypoints(
            img.width(),
            img.height(),
            rows,
            cols,
            grid_margin(config.radius),
            config.radius,
        ),
        (None, None) => bail!("provide keypoints via --keypoints <csv> or --grid RxC"),
        (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
    };

    let outcome = extract_batch(&stack, &keypoints, &config)?;
    for skip in &outcome.skipped {
        eprintln!(
            "skip keypoint {} at ({}, {}): {}",
            skip.index, skip.keypoint.x, skip.keypoint.y, skip.reason
        );
    }
    let mut descriptors = outcome.descriptors;
    if descriptors.is_empty() {
        bail!("no descriptors extracted (all {} keypoints skipped)", keypoints.len());
    }

    if let Some(mask_path) = &args.mask {
        let mask = io::read_mask(mask_path)?;
        if mask.fingerprint != config.fingerprint() {
            bail!(
                "mask fingerprint conflicts with extraction config: {} vs {}",
                mask.fingerprint,
                config.fingerprint()
            );
        }
        descriptors = descriptors
            .iter()
            .map(|d| apply_mask(d, &mask))
            .collect::<iib::Result<_>>()?;
    }

    io::write_descriptors(&args.output, &descriptors)?;
    eprintln!(
        "wrote {} descriptors of {} bits to {}",
        descriptors.len(),
        descriptors[0].len(),
        args.output.display()
    );
    Ok(())
}

#[derive(Args)]
struct MatchArgs {
    /// Query-side descriptor container.
    #[arg(long)]
    queries: PathBuf,

    /// Train-side descriptor container.
    #[arg(long)]
    trains: PathBuf,

    /// brute scans every pair; hier prunes by granularity segments.
    #[arg(long, default_value = "hier", value_parser = ["brute", "hier"])]
    mode: String,

    /// Hierarchical pruning threshold t in (0, 1]; 1.0 never prunes.
    #[arg(long, default_value_t = 1.0)]
    threshold: f64,

    /// Mask that produced reduced containers, to restore segment bounds.
    #[arg(long)]
    mask: Option<PathBuf>,

    /// Write the match CSV here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn load_with_mask(path: &Path, mask: Option<&SelectionMask>) -> Result<Vec<BinaryDescriptor>> {
    Ok(io::read_descriptors(path, mask)?)
}

fn matches_csv(matches: &[MatchPair]) -> String {
    let mut out = String::from("query_idx,train_idx,distance\n");
    for m in matches {
        out.push_str(&format!("{},{},{}\n", m.query, m.train, m.distance));
    }
    out
}

fn write_text(target: Option<&PathBuf>, text: &str) -> Result<()> {
    match target {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run_match(args: &MatchArgs) -> Result<()> {
    let mask = args.mask.as_ref().map(|p| io::read_mask(p)).transpose()?;
    let queries = load_with_mask(&args.queries, mask.as_ref())?;
    let trains = load_with_mask(&args.trains, mask.as_ref())?;
    let (matches, stats): (Vec<MatchPair>, MatchStats) = match args.mode.as_str() {
        "brute" => brute_force_mutual(&queries, &trains)?,
        _ => hierarchical_match(&queries, &trains, args.threshold)?,
    };
    write_text(args.output.as_ref(), &matches_csv(&matches))?;
    eprintln!("MC={}", stats.match_cost);
    eprintln!(
        "matches={} bits_compared={} bruteforce_bits={}",
        matches.len(),
        stats.bit_comparisons_hierarchical,
        stats.bit_comparisons_bruteforce
    );
    Ok(())
}

/// One manifest entry: images and ground-truth homography for a pair.
struct PairSpec {
    id: String,
    reference: PathBuf,
    test: PathBuf,
    homography: PathBuf,
}

/// Manifest CSV: `pair_id,ref_image,test_image,homography_file` per line,
/// `#` comments allowed, relative paths resolved against the manifest.
fn read_pair_manifest(path: &Path) -> Result<Vec<PairSpec>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading pair manifest {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            bail!(
                "{}:{}: expected pair_id,ref_image,test_image,homography",
                path.display(),
                lineno + 1
            );
        }
        pairs.push(PairSpec {
            id: fields[0].to_string(),
            reference: base.join(fields[1]),
            test: base.join(fields[2]),
            homography: base.join(fields[3]),
        });
    }
    if pairs.is_empty() {
        bail!("{}: manifest lists no pairs", path.display());
    }
    Ok(pairs)
}

#[derive(Args)]
struct EvalArgs {
    /// Pair manifest CSV (see `iib eval --help` for the line format).
    #[arg(long)]
    pairs: PathBuf,

    /// Interior keypoint grid per image.
    #[arg(long, value_parser = parse_grid, default_value = "10x20")]
    grid: (usize, usize),

    /// Reprojection tolerance in pixels.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,

    /// brute or hier matching for the operating point.
    #[arg(long, default_value = "hier", value_parser = ["brute", "hier"])]
    mode: String,

    /// Hierarchical pruning threshold.
    #[arg(long, default_value_t = 1.0)]
    threshold: f64,

    /// Reduction mask applied to every descriptor before matching.
    #[arg(long)]
    mask: Option<PathBuf>,

    /// Write the report CSV here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,

    /// Also write per-threshold plot data (1-precision, recall) to this
    /// CSV.
    #[arg(long)]
    plot_data: Option<PathBuf>,

    /// Sweep thresholds for --plot-data, as fractions of descriptor bits.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5"
    )]
    plot_thresholds: Vec<f64>,

    #[command(flatten)]
    config: ConfigArgs,
}

struct PairOutcome {
    id: String,
    putative: usize,
    correct: usize,
    correspondences: usize,
    precision: f64,
    recall: f64,
    match_cost: f64,
    plot_rows: Vec<(f64, f64, f64)>,
}

fn grid_descriptors(
    img: &GrayImage,
    stack: &ChannelStack,
    grid: (usize, usize),
    config: &DescriptorConfig,
) -> Result<Vec<BinaryDescriptor>> {
    let kps = grid_keypoints(
        img.width(),
        img.height(),
        grid.0,
        grid.1,
        grid_margin(config.radius),
        config.radius,
    );
    let outcome = extract_batch(stack, &kps, config)?;
    for skip in &outcome.skipped {
        eprintln!("skip keypoint {}: {}", skip.index, skip.reason);
    }
    Ok(outcome.descriptors)
}

fn eval_pair(
    spec: &PairSpec,
    args: &EvalArgs,
    config: &DescriptorConfig,
    mask: Option<&SelectionMask>,
) -> Result<PairOutcome> {
    let ref_img = io::load_gray_image(&spec.reference)?;
    let test_img = io::load_gray_image(&spec.test)?;
    let h = io::read_homography(&spec.homography)?;
    let ref_stack = compute_channels(&ref_img, &[])?;
    let test_stack = compute_channels(&test_img, &[])?;
    let mut q = grid_descriptors(&ref_img, &ref_stack, args.grid, config)?;
    let mut t = grid_descriptors(&test_img, &test_stack, args.grid, config)?;
    if let Some(mask) = mask {
        q = q.iter().map(|d| apply_mask(d, mask)).collect::<iib::Result<_>>()?;
        t = t.iter().map(|d| apply_mask(d, mask)).collect::<iib::Result<_>>()?;
    }
    let ref_kps: Vec<Keypoint> = q.iter().map(|d| d.keypoint).collect();
    let test_kps: Vec<Keypoint> = t.iter().map(|d| d.keypoint).collect();
    let corr = iib::correspondences(&ref_kps, &test_kps, &h, args.epsilon)?;

    let (matches, stats) = match args.mode.as_str() {
        "brute" => brute_force_mutual(&q, &t)?,
        _ => hierarchical_match(&q, &t, args.threshold)?,
    };
    let pr = precision_recall(&matches, &corr, &ref_kps, &test_kps, &h, args.epsilon)?;

    let mut plot_rows = Vec::new();
    if args.plot_data.is_some() && !q.is_empty() {
        let m = q[0].len();
        let mut thresholds: Vec<u32> = args
            .plot_thresholds
            .iter()
            .map(|f| (f * m as f64).round() as u32)
            .collect();
        thresholds.sort_unstable();
        thresholds.dedup();
        for point in pr_sweep(&q, &t, &corr, &thresholds, &h, args.epsilon)? {
            plot_rows.push((point.threshold, 1.0 - point.precision, point.recall));
        }
    }

    Ok(PairOutcome {
        id: spec.id.clone(),
        putative: pr.putative,
        correct: pr.correct,
        correspondences: corr.len(),
        precision: pr.precision,
        recall: pr.recall,
        match_cost: stats.match_cost,
        plot_rows,
    })
}

fn run_eval(args: &EvalArgs) -> Result<()> {
    let config = args.config.to_config(&[])?;
    let mask = args.mask.as_ref().map(|p| io::read_mask(p)).transpose()?;
    let pairs = read_pair_manifest(&args.pairs)?;

    let outcomes: Vec<PairOutcome> = pairs
        .par_iter()
        .map(|spec| {
            eval_pair(spec, args, &config, mask.as_ref())
                .with_context(|| format!("pair `{}`", spec.id))
        })
        .collect::<Result<_>>()?;

    let mut report = String::from("pair_id,putative,correct,correspondences,precision,recall,MC\n");
    for o in &outcomes {
        report.push_str(&format!(
            "{},{},{},{},{:.6},{:.6},{:.6}\n",
            o.id, o.putative, o.correct, o.correspondences, o.precision, o.recall, o.match_cost
        ));
    }
    let n = outcomes.len() as f64;
    let mean = |f: fn(&PairOutcome) -> f64| outcomes.iter().map(f).sum::<f64>() / n;
    report.push_str(&format!(
        "aggregate,{},{},{},{:.6},{:.6},{:.6}\n",
        outcomes.iter().map(|o| o.putative).sum::<usize>(),
        outcomes.iter().map(|o| o.correct).sum::<usize>(),
        outcomes.iter().map(|o| o.correspondences).sum::<usize>(),
        mean(|o| o.precision),
        mean(|o| o.recall),
        mean(|o| o.match_cost),
    ));
    write_text(args.output.as_ref(), &report)?;

    if let Some(plot_path) = &args.plot_data {
        let mut plot = String::from("pair_id,threshold_bits,one_minus_precision,recall\n");
        for o in &outcomes {
            for &(thr, omp, recall) in &o.plot_rows {
                plot.push_str(&format!("{},{},{:.6},{:.6}\n", o.id, thr as u32, omp, recall));
            }
        }
        std::fs::write(plot_path, plot)
            .with_context(|| format!("writing {}", plot_path.display()))?;
    }
    Ok(())
}

#[derive(Args)]
struct TrainSelectArgs {
    /// Pair manifest CSV, same format as `eval --pairs`.
    #[arg(long)]
    pairs: PathBuf,

    /// Interior keypoint grid per reference image.
    #[arg(long, value_parser = parse_grid, default_value = "6x6")]
    grid: (usize, usize),

    /// Boosting rounds.
    #[arg(long, default_value_t = 64)]
    rounds: usize,

    /// Reduced descriptor size in bits; must be whole quadruples.
    #[arg(long, default_value_t = 512)]
    target_bits: usize,

    /// Minimum same-point pairs required to train.
    #[arg(long, default_value_t = 16)]
    min_positives: usize,

    /// Seed for negative-pair sampling.
    #[arg(long, default_value_t = 7)]
    seed: u64,

    /// Output mask JSON.
    #[arg(long, short)]
    output: PathBuf,

    /// Also write the trained booster (rounds and weights) as JSON.
    #[arg(long)]
    model_out: Option<PathBuf>,

    #[command(flatten)]
    config: ConfigArgs,
}

fn run_train_select(args: &TrainSelectArgs) -> Result<()> {
    let config = args.config.to_config(&[])?;
    let pairs = read_pair_manifest(&args.pairs)?;
    let scenes: Vec<TrainingScene> = pairs
        .par_iter()
        .map(|spec| -> Result<TrainingScene> {
            let ref_img = io::load_gray_image(&spec.reference)?;
            let test_img = io::load_gray_image(&spec.test)?;
            let keypoints = grid_keypoints(
                ref_img.width(),
                ref_img.height(),
                args.grid.0,
                args.grid.1,
                grid_margin(config.radius),
                config.radius,
            );
            Ok(TrainingScene {
                stack_a: compute_channels(&ref_img, &[])?,
                stack_b: compute_channels(&test_img, &[])?,
                homography: io::read_homography(&spec.homography)?,
                keypoints,
            })
        })
        .collect::<Result<_>>()?;

    let training = build_training_set(&scenes, &config, args.min_positives, args.seed)?;
    let positives = training.iter().filter(|p| p.label).count();
    let model = adaboost_train(&training, args.rounds)?;
    let mask = select_top_m(&model.weights, &config, args.target_bits)?;
    io::write_mask(&args.output, &mask)?;
    if let Some(model_path) = &args.model_out {
        io::write_model(model_path, &model)?;
    }
    eprintln!(
        "trained {} rounds on {} positive + {} negative pairs; kept {} of {} quadruples ({} bits) in {}",
        model.rounds.len(),
        positives,
        training.len() - positives,
        mask.quadruples.len(),
        config.total_quadruples(),
        mask.selected_bits,
        args.output.display()
    );
    Ok(())
}

#[derive(Args)]
struct SynthArgs {
    /// Input image.
    #[arg(long)]
    image: PathBuf,

    /// Output image (binary portable graymap).
    #[arg(long, short)]
    output: PathBuf,

    /// Photometric gain a in 255*(a*I/255 + b)^gamma.
    #[arg(long, default_value_t = 1.0)]
    gain: f64,

    /// Photometric bias b in normalized units.
    #[arg(long, default_value_t = 0.0)]
    bias: f64,

    /// Photometric exponent.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,

    /// Homography file to warp by; identity when omitted.
    #[arg(long)]
    homography: Option<PathBuf>,

    /// Write the homography that maps input to output coordinates here.
    #[arg(long)]
    emit_homography: Option<PathBuf>,
}

fn run_synth(args: &SynthArgs) -> Result<()> {
    let img = io::load_gray_image(&args.image)?;
    let homography = match &args.homography {
        Some(path) => io::read_homography(path)?,
        None => Homography::identity(),
    };
    let spec = SynthSpec {
        gain: args.gain,
        bias: args.bias,
        gamma: args.gamma,
        homography,
    };
    let (out, used) = synth_pair(&img, &spec)?;
    io::write_pgm(&args.output, &out)?;
    if let Some(h_path) = &args.emit_homography {
        io::write_homography(h_path, &used)?;
    }
    eprintln!(
        "synthesized {}x{} pair image at {}",
        out.width(),
        out.height(),
        args.output.display()
    );
    Ok(())
}

#[derive(Args)]
struct BenchArgs {
    /// Keypoints to measure.
    #[arg(long, default_value_t = 1000)]
    count: usize,

    /// Benchmark image; a generated texture when omitted.
    #[arg(long)]
    image: Option<PathBuf>,

    /// Seed for the generated texture.
    #[arg(long, default_value_t = 5)]
    seed: u64,

    #[command(flatten)]
    config: ConfigArgs,
}

fn run_bench(args: &BenchArgs) -> Result<()> {
    let config = args.config.to_config(&[])?;
    let img = match &args.image {
        Some(path) => io::load_gray_image(path)?,
        None => natural_texture(512, 512, args.seed),
    };
    let stack = compute_channels(&img, &[])?;
    let cols = (args.count as f64).sqrt().ceil() as usize;
    let rows = args.count.div_ceil(cols);
    let mut keypoints = grid_keypoints(
        img.width(),
        img.height(),
        rows,
        cols,
        grid_margin(config.radius),
        config.radius,
    );
    keypoints.truncate(args.count);

    let m = config.descriptor_size() as u64;
    let mut totals = OpCounts::default();
    for kp in &keypoints {
        let mut ops = OpCounts::default();
        extract_with_ops(&stack, kp, &config, &mut ops)?;
        if ops.algebraic > 4 * m {
            bail!(
                "algebraic ops {} exceed the 4*M bound {} for one descriptor",
                ops.algebraic,
                4 * m
            );
        }
        if ops.relational != m {
            bail!(
                "relational ops {} differ from M = {} for one descriptor",
                ops.relational,
                m
            );
        }
        totals.algebraic += ops.algebraic;
        totals.relational += ops.relational;
        totals.setup_algebraic += ops.setup_algebraic;
    }

    let start = Instant::now();
    let outcome = extract_batch(&stack, &keypoints, &config)?;
    let elapsed = start.elapsed().as_secs_f64();
    let n = keypoints.len() as u64;
    println!("descriptors: {}", outcome.descriptors.len());
    println!("bits per descriptor: {m}");
    println!(
        "algebraic ops per descriptor: {} (bound {})",
        totals.algebraic / n,
        4 * m
    );
    println!(
        "relational ops per descriptor: {} (bound {})",
        totals.relational / n,
        m
    );
    println!(
        "setup algebraic ops per descriptor: {}",
        totals.setup_algebraic / n
    );
    println!("total algebraic ops: {}", totals.algebraic);
    println!("total relational ops: {}", totals.relational);
    println!(
        "throughput: {:.0} descriptors/sec",
        outcome.descriptors.len() as f64 / elapsed
    );
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Extract(args) => run_extract(args),
        Command::Match(args) => run_match(args),
        Command::Eval(args) => run_eval(args),
        Command::TrainSelect(args) => run_train_select(args),
        Command::Synth(args) => run_synth(args),
        Command::Bench(args) => run_bench(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if cli.workers > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
        {
            eprintln!("error: setting worker count: {e}");
            std::process::exit(1);
        }
    }
    if let Err(e) = run(&cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
