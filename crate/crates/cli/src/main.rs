//! `mlc`: generate synthetic data, train, predict, evaluate, fuse and
//! inspect augmentations from the command line.
//!
//! Exit status: 0 on success, 2 on a usage error, 1 on any runtime error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use mlc_core::augment::{augment_sample, mixup_batch, AugmentConfig, AugmentMode};
use mlc_core::fusion::{fuse_in, FusionDomain};
use mlc_core::io::manifest::{load_manifest, write_manifest, DatasetManifest, ManifestEntry};
use mlc_core::io::matrix_csv::{
    read_labels_csv, read_scores_csv, write_labels_csv, write_scores_csv,
};
use mlc_core::io::ppm::write_ppm;
use mlc_core::metrics::{evaluate, DEFAULT_K};
use mlc_core::model::checkpoint::{read_checkpoint, write_checkpoint};
use mlc_core::synth::{generate, image_file_name, SynthConfig, LABELS_FILE, MANIFEST_FILE};
use mlc_core::trainer::{predict_manifest, train_with_observer, MixupPhase, TrainConfig};
use mlc_core::RngState;

const DEFAULT_FLIP_PROBABILITY: f64 = 0.5;
const MIXUP_STREAM: u64 = 1 << 32;

#[derive(Parser, Debug)]
#[command(
    name = "mlc",
    version,
    about = "Multi-label image classification toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic shapes dataset (PPM images, manifest, label CSV).
    Gen(GenArgs),
    /// Train a classifier on a manifest and write a parameter checkpoint.
    Train(TrainArgs),
    /// Score every image of a manifest with a trained checkpoint.
    Predict(PredictArgs),
    /// Compute mAP and top-k precision/recall/F1 for a score matrix.
    Evaluate(EvaluateArgs),
    /// Average score matrices elementwise.
    Fuse(FuseArgs),
    /// Write augmented copies of a manifest's images for inspection.
    Augment(AugmentArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    num_images: usize,
    #[arg(long, num_args = 2, value_names = ["H", "W"], default_values_t = [64, 64])]
    size: Vec<usize>,
    #[arg(long, default_value_t = 6)]
    classes: usize,
    #[arg(long, default_value_t = 1)]
    min_concepts: usize,
    #[arg(long, default_value_t = 3)]
    max_concepts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write train_/test_ manifests and label files, the first N
    /// images forming the training split.
    #[arg(long, value_name = "N")]
    train_count: Option<usize>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// M1 (flip), M2 (flip + random-resized-crop) or M3 (M2 + alternating mixup).
    #[arg(long)]
    mode: AugmentMode,
    /// Training input size.
    #[arg(long, num_args = 2, value_names = ["H", "W"], default_values_t = [64, 64])]
    size: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Checkpoint path.
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch training log (epoch, rates, mixup flag, mean loss).
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, default_value_t = TrainConfig::DEFAULT_EPOCHS)]
    epochs: usize,
    #[arg(long, default_value_t = TrainConfig::DEFAULT_BATCH_SIZE)]
    batch_size: usize,
    /// Rate for the output layer.
    #[arg(long, default_value_t = TrainConfig::DEFAULT_LR_HEAD)]
    lr_head: f64,
    /// Rate for the hidden layer.
    #[arg(long, default_value_t = TrainConfig::DEFAULT_LR_BODY)]
    lr_body: f64,
    #[arg(long, default_value_t = TrainConfig::DEFAULT_LR_DECAY_FACTOR)]
    lr_decay_factor: f64,
    #[arg(long, default_value_t = TrainConfig::DEFAULT_LR_DECAY_EPOCH)]
    lr_decay_epoch: usize,
    /// Epoch parity on which mixup runs in M3: even or odd.
    #[arg(long, default_value_t = MixupPhase::Even)]
    mixup_phase: MixupPhase,
    #[arg(long, default_value_t = TrainConfig::DEFAULT_HIDDEN)]
    hidden: usize,
    #[arg(long, num_args = 2, value_names = ["GH", "GW"],
          default_values_t = [TrainConfig::DEFAULT_POOL_GRID.0, TrainConfig::DEFAULT_POOL_GRID.1])]
    pool_grid: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_FLIP_PROBABILITY)]
    flip_probability: f64,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    /// Images are resized to this size before scoring.
    #[arg(long, num_args = 2, value_names = ["H", "W"], default_values_t = [64, 64])]
    size: Vec<usize>,
    /// Score CSV path (one row of logits per image).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
}

#[derive(Args, Debug)]
struct FuseArgs {
    /// Member score CSV files.
    #[arg(required = true)]
    members: Vec<PathBuf>,
    #[arg(short, long)]
    out: PathBuf,
    /// Map scores through the logistic function before averaging.
    #[arg(long)]
    sigmoid_first: bool,
}

#[derive(Args, Debug)]
struct AugmentArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    mode: AugmentMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, num_args = 2, value_names = ["H", "W"], default_values_t = [64, 64])]
    size: Vec<usize>,
    /// M3 only: images are mixed in pairs within batches of this size.
    #[arg(long, default_value_t = TrainConfig::DEFAULT_BATCH_SIZE)]
    batch_size: usize,
    #[arg(long, default_value_t = DEFAULT_FLIP_PROBABILITY)]
    flip_probability: f64,
}

fn pair(v: &[usize]) -> (usize, usize) {
    (v[0], v[1])
}

fn base_dir(manifest: &Path) -> &Path {
    manifest.parent().unwrap_or(Path::new("."))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run_gen(args: GenArgs) -> Result<()> {
    let mut cfg = SynthConfig::new(args.num_images, args.seed);
    cfg.image_size = pair(&args.size);
    cfg.num_classes = args.classes;
    cfg.min_concepts = args.min_concepts;
    cfg.max_concepts = args.max_concepts;
    let manifest = generate(&cfg, &args.out_dir)?;
    println!(
        "wrote {} images, {} and {} to {}",
        manifest.len(),
        MANIFEST_FILE,
        LABELS_FILE,
        args.out_dir.display()
    );
    if let Some(n) = args.train_count {
        anyhow::ensure!(
            n <= manifest.len(),
            "--train-count {n} exceeds {} images",
            manifest.len()
        );
        for (prefix, part) in [
            ("train", manifest.slice(0, n)),
            ("test", manifest.slice(n, manifest.len())),
        ] {
            write_text(
                &args.out_dir.join(format!("{prefix}_{MANIFEST_FILE}")),
                &write_manifest(&part),
            )?;
            write_text(
                &args.out_dir.join(format!("{prefix}_{LABELS_FILE}")),
                &write_labels_csv(&part.label_matrix()?),
            )?;
            println!("{prefix}: {} images", part.len());
        }
    }
    Ok(())
}

fn run_train(args: TrainArgs) -> Result<()> {
    let mut cfg = TrainConfig::new(args.mode, pair(&args.size), args.seed);
    cfg.epochs = args.epochs;
    cfg.batch_size = args.batch_size;
    cfg.lr_head = args.lr_head;
    cfg.lr_body = args.lr_body;
    cfg.lr_decay_factor = args.lr_decay_factor;
    cfg.lr_decay_epoch = args.lr_decay_epoch;
    cfg.mixup_phase = args.mixup_phase;
    cfg.hidden = args.hidden;
    cfg.pool_grid = pair(&args.pool_grid);
    cfg.augment.flip_probability = args.flip_probability;
    cfg.validate()?;

    let manifest = load_manifest(&args.manifest)?;
    let samples = manifest.load_samples(base_dir(&args.manifest))?;
    let report = train_with_observer(&samples, &cfg, |e| {
        eprintln!(
            "epoch {:3}  lr {}/{}  mixup {}  loss {:.6}",
            e.epoch, e.lr_head, e.lr_body, e.mixup as u8, e.mean_loss
        );
    })?;
    write_text(&args.out, &write_checkpoint(&report.params))?;
    if let Some(log) = &args.log {
        write_text(log, &report.log_text())?;
    }
    println!(
        "trained {} on {} images for {} epochs in {:.1}s -> {}",
        cfg.mode,
        samples.len(),
        cfg.epochs,
        report.wall_seconds,
        args.out.display()
    );
    Ok(())
}

fn run_predict(args: PredictArgs) -> Result<()> {
    let params = read_checkpoint(&read_text(&args.params)?)?;
    let manifest = load_manifest(&args.manifest)?;
    let scores = predict_manifest(
        &params,
        &manifest,
        base_dir(&args.manifest),
        pair(&args.size),
    )?;
    write_text(&args.out, &write_scores_csv(&scores))?;
    println!("scored {} images -> {}", scores.rows(), args.out.display());
    Ok(())
}

fn run_evaluate(args: EvaluateArgs) -> Result<()> {
    let scores = read_scores_csv(&read_text(&args.scores)?)?;
    let labels = read_labels_csv(&read_text(&args.labels)?)?;
    let report = evaluate(&scores, &labels, args.k)?;
    println!("{report}");
    println!("map,lp,lr,lf1,op,or,of1");
    println!("{}", report.csv_line());
    Ok(())
}

fn run_fuse(args: FuseArgs) -> Result<()> {
    let members = args
        .members
        .iter()
        .map(|p| Ok(read_scores_csv(&read_text(p)?)?))
        .collect::<Result<Vec<_>>>()?;
    let domain = if args.sigmoid_first {
        FusionDomain::SigmoidFirst
    } else {
        FusionDomain::Raw
    };
    let fused = fuse_in(&members, domain)?;
    write_text(&args.out, &write_scores_csv(&fused))?;
    println!("fused {} members -> {}", members.len(), args.out.display());
    Ok(())
}

fn run_augment(args: AugmentArgs) -> Result<()> {
    anyhow::ensure!(args.batch_size >= 1, "--batch-size must be at least 1");
    let mut cfg = AugmentConfig::new(pair(&args.size));
    cfg.flip_probability = args.flip_probability;
    cfg.validate()?;

    let manifest = load_manifest(&args.manifest)?;
    let samples = manifest.load_samples(base_dir(&args.manifest))?;
    let root = RngState::new(args.seed);
    let mut out: Vec<_> = samples
        .iter()
        .enumerate()
        .map(|(i, s)| augment_sample(s, args.mode, &cfg, &mut root.split(i as u64)))
        .collect();
    if args.mode == AugmentMode::M3 {
        let mixup_rng = root.split(MIXUP_STREAM);
        let mut mixed = Vec::with_capacity(out.len().div_ceil(2));
        for (b, chunk) in out.chunks(args.batch_size).enumerate() {
            mixed.extend(mixup_batch(chunk.to_vec(), &mut mixup_rng.split(b as u64))?);
        }
        out = mixed;
    }

    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let mut entries = Vec::with_capacity(out.len());
    for (i, s) in out.iter().enumerate() {
        let name = image_file_name(i);
        fs::write(args.out_dir.join(&name), write_ppm(&s.image))
            .with_context(|| format!("writing {name}"))?;
        entries.push(ManifestEntry {
            image_path: name,
            labels: s.labels.indices(),
        });
    }
    let augmented = DatasetManifest::new(manifest.num_classes(), entries)?;
    write_text(
        &args.out_dir.join(MANIFEST_FILE),
        &write_manifest(&augmented),
    )?;
    println!(
        "wrote {} {} samples to {}",
        augmented.len(),
        args.mode,
        args.out_dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests print to stdout and succeed;
            // everything else is a usage error (exit 2).
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Gen(a) => run_gen(a),
        Command::Train(a) => run_train(a),
        Command::Predict(a) => run_predict(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Fuse(a) => run_fuse(a),
        Command::Augment(a) => run_augment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
