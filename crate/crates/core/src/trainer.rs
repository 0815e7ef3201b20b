//! Mini-batch SGD on the summed sigmoid cross-entropy, with the M1/M2/M3
//! augmentation regimes, alternating mixup and a single step decay of the
//! learning rate.
//!
//! Randomness is organised as a tree of [`RngState`] streams rooted at the
//! configured seed: one stream for parameter initialisation and, per epoch,
//! separate streams for the batch permutation, per-sample augmentation and
//! mixup pairing. Per-sample streams are keyed by sample index, so parallel
//! augmentation cannot change the result, and gradients are summed in batch
//! order.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::augment::{augment_sample, mixup_batch, resize_bilinear, AugmentConfig, AugmentMode};
use crate::error::{Error, Result};
use crate::io::manifest::DatasetManifest;
use crate::model::{backward, forward, Gradients, ModelParams};
use crate::rng::RngState;
use crate::types::{Image, Sample, ScoreMatrix};

const INIT_STREAM: u64 = 0;
const EPOCH_STREAM_BASE: u64 = 1 << 32;
const SHUFFLE_STREAM: u64 = 0;
const AUGMENT_STREAM: u64 = 1;
const MIXUP_STREAM: u64 = 2;

/// Epoch parity on which mixup is active in mode M3.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum MixupPhase {
    /// Epochs 0, 2, 4, ...
    #[default]
    Even,
    /// Epochs 1, 3, 5, ...
    Odd,
}

impl MixupPhase {
    pub fn is_active(self, epoch: usize) -> bool {
        match self {
            MixupPhase::Even => epoch.is_multiple_of(2),
            MixupPhase::Odd => epoch % 2 == 1,
        }
    }
}

impl fmt::Display for MixupPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MixupPhase::Even => "even",
            MixupPhase::Odd => "odd",
        })
    }
}

impl FromStr for MixupPhase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "even" => Ok(MixupPhase::Even),
            "odd" => Ok(MixupPhase::Odd),
            _ => Err(Error::InvalidConfig(format!("unknown mixup phase {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Rate for the output layer (`w2`, `b2`).
    pub lr_head: f64,
    /// Rate for the hidden layer (`w1`, `b1`).
    pub lr_body: f64,
    pub lr_decay_factor: f64,
    /// First epoch trained at the decayed rate.
    pub lr_decay_epoch: usize,
    pub mode: AugmentMode,
    pub mixup_phase: MixupPhase,
    pub seed: u64,
    pub hidden: usize,
    pub pool_grid: (usize, usize),
    /// `augment.target_size` is the training input size.
    pub augment: AugmentConfig,
}

impl TrainConfig {
    pub const DEFAULT_EPOCHS: usize = 40;
    pub const DEFAULT_BATCH_SIZE: usize = 16;
    pub const DEFAULT_LR_HEAD: f64 = 0.1;
    pub const DEFAULT_LR_BODY: f64 = 0.01;
    pub const DEFAULT_LR_DECAY_FACTOR: f64 = 0.1;
    pub const DEFAULT_LR_DECAY_EPOCH: usize = 20;
    pub const DEFAULT_HIDDEN: usize = 256;
    pub const DEFAULT_POOL_GRID: (usize, usize) = (16, 16);

    pub fn new(mode: AugmentMode, input_size: (usize, usize), seed: u64) -> Self {
        Self {
            epochs: Self::DEFAULT_EPOCHS,
            batch_size: Self::DEFAULT_BATCH_SIZE,
            lr_head: Self::DEFAULT_LR_HEAD,
            lr_body: Self::DEFAULT_LR_BODY,
            lr_decay_factor: Self::DEFAULT_LR_DECAY_FACTOR,
            lr_decay_epoch: Self::DEFAULT_LR_DECAY_EPOCH,
            mode,
            mixup_phase: MixupPhase::Even,
            seed,
            hidden: Self::DEFAULT_HIDDEN,
            pool_grid: Self::DEFAULT_POOL_GRID,
            augment: AugmentConfig::new(input_size),
        }
    }

    pub fn input_size(&self) -> (usize, usize) {
        self.augment.target_size
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        for (name, v) in [
            ("lr_head", self.lr_head),
            ("lr_body", self.lr_body),
            ("lr_decay_factor", self.lr_decay_factor),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.lr_decay_epoch >= self.epochs {
            return bad(format!(
                "decay epoch {} must be below epochs {}",
                self.lr_decay_epoch, self.epochs
            ));
        }
        if self.hidden == 0 {
            return bad("hidden width must be at least 1".into());
        }
        let (gh, gw) = self.pool_grid;
        let (h, w) = self.input_size();
        if gh == 0 || gw == 0 || gh > h || gw > w {
            return bad(format!(
                "pool grid {:?} does not fit input size {:?}",
                self.pool_grid,
                (h, w)
            ));
        }
        self.augment.validate()
    }

    /// Multiplier applied to both base rates at `epoch`.
    pub fn lr_scale(&self, epoch: usize) -> f64 {
        if epoch >= self.lr_decay_epoch {
            self.lr_decay_factor
        } else {
            1.0
        }
    }

    pub fn mixup_active(&self, epoch: usize) -> bool {
        self.mode == AugmentMode::M3 && self.mixup_phase.is_active(epoch)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochSummary {
    pub epoch: usize,
    pub lr_head: f64,
    pub lr_body: f64,
    pub mixup: bool,
    /// Mean per-example loss over the examples seen this epoch.
    pub mean_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub epochs: Vec<EpochSummary>,
    pub params: ModelParams,
    pub wall_seconds: f64,
}

impl TrainReport {
    pub fn epoch_losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.mean_loss).collect()
    }

    /// Tab-separated `epoch, lr_head, lr_body, mixup, mean_loss` lines.
    pub fn log_text(&self) -> String {
        let mut out = String::from("epoch\tlr_head\tlr_body\tmixup\tmean_loss\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{:.6}\n",
                e.epoch, e.lr_head, e.lr_body, e.mixup as u8, e.mean_loss
            ));
        }
        out
    }
}

pub fn train(samples: &[Sample], cfg: &TrainConfig) -> Result<TrainReport> {
    train_with_observer(samples, cfg, |_| {})
}

/// Loads the manifest's images (relative to `base_dir`) and trains.
pub fn train_manifest(
    manifest: &DatasetManifest,
    base_dir: &Path,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    let samples = manifest.load_samples(base_dir)?;
    train(&samples, cfg)
}

/// Like [`train`], calling `observer` after every epoch.
pub fn train_with_observer(
    samples: &[Sample],
    cfg: &TrainConfig,
    mut observer: impl FnMut(&EpochSummary),
) -> Result<TrainReport> {
    cfg.validate()?;
    let classes = samples
        .first()
        .map(|s| s.labels.num_classes())
        .ok_or(Error::EmptyInput)?;
    if let Some(s) = samples.iter().find(|s| s.labels.num_classes() != classes) {
        return Err(Error::ShapeMismatch {
            expected: (1, classes),
            actual: (1, s.labels.num_classes()),
        });
    }

    let start = Instant::now();
    let root = RngState::new(cfg.seed);
    let mut params = ModelParams::init(
        cfg.pool_grid,
        cfg.hidden,
        classes,
        &mut root.split(INIT_STREAM),
    )?;
    let mut summaries = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let scale = cfg.lr_scale(epoch);
        let (lr_head, lr_body) = (cfg.lr_head * scale, cfg.lr_body * scale);
        let mixup = cfg.mixup_active(epoch);
        let epoch_rng = root.split(EPOCH_STREAM_BASE + epoch as u64);
        let augment_rng = epoch_rng.split(AUGMENT_STREAM);
        let mixup_rng = epoch_rng.split(MIXUP_STREAM);

        let mut order: Vec<usize> = (0..samples.len()).collect();
        order.shuffle(&mut epoch_rng.split(SHUFFLE_STREAM));

        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let mut batch: Vec<Sample> = chunk
                .par_iter()
                .map(|&i| {
                    let mut rng = augment_rng.split(i as u64);
                    augment_sample(&samples[i], cfg.mode, &cfg.augment, &mut rng)
                })
                .collect();
            if mixup {
                batch = mixup_batch(batch, &mut mixup_rng.split(b as u64))?;
            }
            let results: Vec<(f64, Gradients)> = batch
                .par_iter()
                .map(|s| backward(&params, &s.image, &s.labels))
                .collect::<Result<_>>()?;
            let mut grads = params.zeros_like();
            for (loss, g) in &results {
                loss_sum += loss;
                grads.add_assign(g);
            }
            seen += results.len();
            grads.scale(1.0 / results.len() as f64);
            params.sgd_step(&grads, lr_body, lr_head);
        }

        let mean_loss = loss_sum / seen as f64;
        if !mean_loss.is_finite() || params.values().any(|v| !v.is_finite()) {
            return Err(Error::DivergedLoss {
                epoch,
                loss: mean_loss,
            });
        }
        let summary = EpochSummary {
            epoch,
            lr_head,
            lr_body,
            mixup,
            mean_loss,
        };
        observer(&summary);
        summaries.push(summary);
    }

    Ok(TrainReport {
        epochs: summaries,
        params,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Raw logits for each image after a plain resize to `input_size`.
pub fn predict(
    params: &ModelParams,
    images: &[Image],
    input_size: (usize, usize),
) -> Result<ScoreMatrix> {
    let (h, w) = input_size;
    let rows: Vec<Vec<f64>> = images
        .par_iter()
        .map(|img| forward(params, &resize_bilinear(img, h, w)?))
        .collect::<Result<_>>()?;
    let data = rows.concat();
    ScoreMatrix::new(images.len(), params.classes, data)
}

pub fn predict_manifest(
    params: &ModelParams,
    manifest: &DatasetManifest,
    base_dir: &Path,
    input_size: (usize, usize),
) -> Result<ScoreMatrix> {
    if manifest.num_classes() != params.classes {
        return Err(Error::ShapeMismatch {
            expected: (manifest.len(), params.classes),
            actual: (manifest.len(), manifest.num_classes()),
        });
    }
    let images = manifest.load_images(base_dir)?;
    predict(params, &images, input_size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::LabelVector;

    fn toy_samples(n: usize) -> Vec<Sample> {
        // Class 0 <=> bright red left half; class 1 <=> bright blue right half.
        (0..n)
            .map(|i| {
                let (a, b) = (i % 2 == 0, i % 3 == 0);
                let mut data = Vec::with_capacity(8 * 8 * 3);
                for _ in 0..8 {
                    for c in 0..8 {
                        let px = match (c < 4, a, b) {
                            (true, true, _) => [0.9, 0.1, 0.1],
                            (false, _, true) => [0.1, 0.1, 0.9],
                            _ => [0.5, 0.5, 0.5],
                        };
                        data.extend_from_slice(&px);
                    }
                }
                let mut idx = vec![];
                if a {
                    idx.push(0);
                }
                if b {
                    idx.push(1);
                }
                Sample::new(
                    Image::new(8, 8, data).unwrap(),
                    LabelVector::from_indices(2, &idx).unwrap(),
                )
            })
            .collect()
    }

    fn small_config(mode: AugmentMode) -> TrainConfig {
        let mut cfg = TrainConfig::new(mode, (8, 8), 11);
        cfg.epochs = 6;
        cfg.lr_decay_epoch = 4;
        cfg.batch_size = 4;
        cfg.hidden = 8;
        cfg.pool_grid = (2, 2);
        cfg
    }

    #[test]
    fn defaults_follow_training_protocol() {
        let cfg = TrainConfig::new(AugmentMode::M1, (64, 64), 0);
        assert_eq!(cfg.epochs, 40);
        assert_eq!(cfg.batch_size, 16);
        assert_eq!(cfg.lr_head, 0.1);
        assert_eq!(cfg.lr_body, 0.01);
        assert_eq!(cfg.lr_decay_factor, 0.1);
        assert_eq!(cfg.lr_decay_epoch, 20);
        assert_eq!(cfg.mixup_phase, MixupPhase::Even);
        cfg.validate().unwrap();
    }

    #[test]
    fn config_invariants() {
        let mut cfg = small_config(AugmentMode::M1);
        cfg.epochs = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = small_config(AugmentMode::M1);
        cfg.lr_decay_epoch = cfg.epochs;
        assert!(cfg.validate().is_err());
        let mut cfg = small_config(AugmentMode::M1);
        cfg.lr_head = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = small_config(AugmentMode::M1);
        cfg.batch_size = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = small_config(AugmentMode::M1);
        cfg.pool_grid = (9, 1);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn schedule_is_reported_to_observer() {
        let cfg = small_config(AugmentMode::M3);
        let mut seen = Vec::new();
        train_with_observer(&toy_samples(10), &cfg, |e| seen.push(e.clone())).unwrap();
        assert_eq!(seen.len(), cfg.epochs);
        for e in &seen {
            let scale = if e.epoch >= cfg.lr_decay_epoch {
                0.1
            } else {
                1.0
            };
            assert_eq!(e.lr_head, 0.1 * scale);
            assert_eq!(e.lr_body, 0.01 * scale);
            assert_eq!(e.mixup, e.epoch % 2 == 0);
        }
    }

    #[test]
    fn m1_never_mixes() {
        let cfg = small_config(AugmentMode::M1);
        let report = train(&toy_samples(10), &cfg).unwrap();
        assert!(report.epochs.iter().all(|e| !e.mixup));
        assert_eq!(report.epoch_losses().len(), cfg.epochs);
        assert!(report.log_text().lines().count() == cfg.epochs + 1);
    }

    #[test]
    fn training_is_replayable() {
        let cfg = small_config(AugmentMode::M3);
        let samples = toy_samples(12);
        let a = train(&samples, &cfg).unwrap();
        let b = train(&samples, &cfg).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.epoch_losses(), b.epoch_losses());
    }

    #[test]
    fn m3_without_active_epochs_equals_m2() {
        let samples = toy_samples(12);
        let mut m2 = small_config(AugmentMode::M2);
        m2.epochs = 1;
        m2.lr_decay_epoch = 0;
        let mut m3 = m2.clone();
        m3.mode = AugmentMode::M3;
        m3.mixup_phase = MixupPhase::Odd;
        assert_eq!(
            train(&samples, &m2).unwrap().params,
            train(&samples, &m3).unwrap().params
        );
    }

    #[test]
    fn predict_shapes_and_duplicates() {
        let samples = toy_samples(4);
        let mut images: Vec<Image> = samples.iter().map(|s| s.image.clone()).collect();
        images.push(images[1].clone());
        let params = ModelParams::init((2, 2), 4, 2, &mut RngState::new(0)).unwrap();
        let scores = predict(&params, &images, (6, 6)).unwrap();
        assert_eq!(scores.shape(), (5, 2));
        assert_eq!(scores.row(1), scores.row(4));

        let zero = ModelParams::from_parts(
            (2, 2),
            4,
            2,
            vec![0.0; 48],
            vec![0.0; 4],
            vec![0.0; 8],
            vec![0.3, -0.2],
        )
        .unwrap();
        let scores = predict(&zero, &images, (8, 8)).unwrap();
        for r in 0..5 {
            assert_eq!(scores.row(r), &[0.3, -0.2]);
        }
    }

    #[test]
    fn empty_training_set() {
        assert!(matches!(
            train(&[], &small_config(AugmentMode::M1)),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn divergence_is_reported() {
        let mut cfg = small_config(AugmentMode::M1);
        cfg.lr_head = 1e300;
        cfg.lr_body = 1e300;
        assert!(matches!(
            train(&toy_samples(8), &cfg),
            Err(Error::DivergedLoss { .. })
        ));
    }
}
