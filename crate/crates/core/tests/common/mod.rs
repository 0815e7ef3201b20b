//! Shared oracles, fixtures and generators for the integration tests.
//!
//! The metric oracles are written from the definitions, independently of the
//! library code: ranks are counted pairwise instead of by sorting, and top-k
//! selection repeatedly takes the arg-max instead of sorting rows.
#![allow(dead_code)]

use std::path::Path;

use rand::Rng;

use mlc_core::augment::AugmentMode;
use mlc_core::fusion::fuse;
use mlc_core::io::manifest::DatasetManifest;
use mlc_core::metrics::{evaluate, MetricsReport, DEFAULT_K};
use mlc_core::model::pool::adaptive_avg_pool;
use mlc_core::model::{backward, bce_loss, forward, write_checkpoint, ModelParams};
use mlc_core::synth::{generate, SynthConfig, PALETTE};
use mlc_core::trainer::{predict, train, TrainConfig};
use mlc_core::{Image, LabelMatrix, LabelVector, RngState, ScoreMatrix};

/// Published `(O-P, O-R, O-F1)` results in percent for every
/// dataset / backbone / mode / input size of the main results table.
pub const REFERENCE_OVERALL_TRIPLES: [(&str, f64, f64, f64); 54] = [
    ("NUS/V/M1/384", 54.0, 66.5, 59.6),
    ("NUS/V/M1/448", 53.9, 66.3, 59.5),
    ("NUS/V/M1/512", 54.3, 66.9, 59.9),
    ("NUS/V/M2/384", 55.9, 68.9, 61.7),
    ("NUS/V/M2/448", 55.9, 68.9, 61.7),
    ("NUS/V/M2/512", 55.9, 68.8, 61.7),
    ("NUS/V/M3/384", 55.9, 68.8, 61.7),
    ("NUS/V/M3/448", 55.9, 68.8, 61.7),
    ("NUS/V/M3/512", 55.9, 68.8, 61.6),
    ("NUS/R/M1/384", 56.3, 69.3, 62.1),
    ("NUS/R/M1/448", 56.4, 69.4, 62.2),
    ("NUS/R/M1/512", 56.4, 69.4, 62.2),
    ("NUS/R/M2/384", 56.1, 69.0, 61.9),
    ("NUS/R/M2/448", 56.2, 69.2, 62.0),
    ("NUS/R/M2/512", 56.1, 69.0, 61.9),
    ("NUS/R/M3/384", 56.2, 69.2, 62.0),
    ("NUS/R/M3/448", 56.2, 69.2, 62.0),
    ("NUS/R/M3/512", 56.2, 69.2, 62.0),
    ("COCO/V/M1/384", 62.6, 64.7, 63.6),
    ("COCO/V/M1/448", 62.5, 64.6, 63.5),
    ("COCO/V/M1/512", 63.0, 65.1, 64.0),
    ("COCO/V/M2/384", 64.6, 66.7, 65.7),
    ("COCO/V/M2/448", 65.0, 67.1, 66.0),
    ("COCO/V/M2/512", 65.0, 67.2, 66.1),
    ("COCO/V/M3/384", 64.7, 66.9, 65.8),
    ("COCO/V/M3/448", 65.0, 67.1, 66.1),
    ("COCO/V/M3/512", 65.0, 67.1, 66.1),
    ("COCO/R/M1/384", 66.7, 68.9, 67.8),
    ("COCO/R/M1/448", 66.9, 69.1, 68.0),
    ("COCO/R/M1/512", 67.1, 69.3, 68.1),
    ("COCO/R/M2/384", 67.2, 69.4, 68.2),
    ("COCO/R/M2/448", 67.7, 69.9, 68.8),
    ("COCO/R/M2/512", 67.9, 70.2, 69.0),
    ("COCO/R/M3/384", 67.2, 69.4, 68.3),
    ("COCO/R/M3/448", 67.8, 70.0, 68.9),
    ("COCO/R/M3/512", 67.9, 70.1, 69.0),
    ("VOC/V/M1/384", 44.1, 93.5, 59.9),
    ("VOC/V/M1/448", 44.1, 93.4, 59.9),
    ("VOC/V/M1/512", 44.1, 93.4, 59.9),
    ("VOC/V/M2/384", 44.2, 93.7, 60.1),
    ("VOC/V/M2/448", 44.3, 93.9, 60.2),
    ("VOC/V/M2/512", 44.3, 93.8, 60.2),
    ("VOC/V/M3/384", 44.5, 94.2, 60.4),
    ("VOC/V/M3/448", 44.5, 94.3, 60.5),
    ("VOC/V/M3/512", 44.4, 94.2, 60.4),
    ("VOC/R/M1/384", 45.1, 95.6, 61.3),
    ("VOC/R/M1/448", 45.5, 96.3, 61.8),
    ("VOC/R/M1/512", 45.5, 96.3, 61.8),
    ("VOC/R/M2/384", 45.1, 95.5, 61.2),
    ("VOC/R/M2/448", 45.1, 95.5, 61.2),
    ("VOC/R/M2/512", 45.3, 96.0, 61.6),
    ("VOC/R/M3/384", 45.2, 95.8, 61.5),
    ("VOC/R/M3/448", 45.3, 96.1, 61.6),
    ("VOC/R/M3/512", 45.5, 96.4, 61.8),
];

/// AP from its definition: the mean, over positives, of the precision at the
/// positive's rank. Rank = 1 + the number of items with a higher score, or an
/// equal score and a lower index. Terms are summed in rank order.
pub fn brute_force_ap(scores: &[f64], truth: &[bool]) -> Option<f64> {
    let n = scores.len();
    let rank = |i: usize| {
        1 + (0..n)
            .filter(|&j| scores[j] > scores[i] || (scores[j] == scores[i] && j < i))
            .count()
    };
    let mut positive_ranks: Vec<usize> = (0..n).filter(|&i| truth[i]).map(rank).collect();
    if positive_ranks.is_empty() {
        return None;
    }
    positive_ranks.sort_unstable();
    let mut sum = 0.0;
    for &r in &positive_ranks {
        let hits = positive_ranks.iter().filter(|&&q| q <= r).count();
        sum += hits as f64 / r as f64;
    }
    Some(sum / positive_ranks.len() as f64)
}

/// Indices of the `k` largest entries, taking the lowest index among equals.
pub fn top_k_by_argmax(row: &[f64], k: usize) -> Vec<usize> {
    let mut taken = vec![false; row.len()];
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best: Option<usize> = None;
        for j in 0..row.len() {
            if !taken[j] && best.is_none_or(|b| row[j] > row[b]) {
                best = Some(j);
            }
        }
        let b = best.expect("k <= row length");
        taken[b] = true;
        out.push(b);
    }
    out
}

fn safe_div(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

fn f1(p: f64, r: f64) -> f64 {
    safe_div(2.0 * p * r, p + r)
}

/// `[map, lp, lr, lf1, op, or, of1]` computed from the definitions.
pub fn oracle_panel(scores: &[Vec<f64>], truth: &[Vec<bool>], k: usize) -> [f64; 7] {
    let n = scores.len();
    let c = scores[0].len();
    let predicted: Vec<Vec<bool>> = scores
        .iter()
        .map(|row| {
            let mut p = vec![false; c];
            for j in top_k_by_argmax(row, k) {
                p[j] = true;
            }
            p
        })
        .collect();

    let (mut lp, mut lr, mut lf1) = (0.0, 0.0, 0.0);
    let (mut tp_all, mut pos_all) = (0.0, 0.0);
    let mut aps = Vec::new();
    for j in 0..c {
        let tp = (0..n).filter(|&i| predicted[i][j] && truth[i][j]).count() as f64;
        let pred = (0..n).filter(|&i| predicted[i][j]).count() as f64;
        let pos = (0..n).filter(|&i| truth[i][j]).count() as f64;
        let (p, r) = (safe_div(tp, pred), safe_div(tp, pos));
        lp += p;
        lr += r;
        lf1 += f1(p, r);
        tp_all += tp;
        pos_all += pos;
        let column: Vec<f64> = scores.iter().map(|row| row[j]).collect();
        let labels: Vec<bool> = truth.iter().map(|row| row[j]).collect();
        if let Some(ap) = brute_force_ap(&column, &labels) {
            aps.push(ap);
        }
    }
    let cf = c as f64;
    let op = tp_all / (n * k) as f64;
    let or = safe_div(tp_all, pos_all);
    let map = aps.iter().sum::<f64>() / aps.len() as f64;
    [map, lp / cf, lr / cf, lf1 / cf, op, or, f1(op, or)]
}

pub fn random_image(rng: &mut RngState, h: usize, w: usize) -> Image {
    let data = (0..h * w * 3).map(|_| rng.random::<f64>()).collect();
    Image::new(h, w, data).unwrap()
}

pub fn random_labels(rng: &mut RngState, classes: usize, p: f64) -> LabelVector {
    LabelVector::new((0..classes).map(|_| rng.random_bool(p)).collect()).unwrap()
}

/// Hidden pre-activations, recomputed outside the library.
pub fn pre_activations(params: &ModelParams, image: &Image) -> Vec<f64> {
    let x = adaptive_avg_pool(image, params.pool_grid.0, params.pool_grid.1).unwrap();
    let h = params.hidden;
    (0..h)
        .map(|j| {
            params.b1[j]
                + x.iter()
                    .enumerate()
                    .map(|(i, v)| v * params.w1[i * h + j])
                    .sum::<f64>()
        })
        .collect()
}

/// A small random model with an image and labels. Draws whose hidden
/// pre-activations come within `kink_margin` of zero are redrawn, so a
/// finite-difference step cannot cross the relu kink.
pub fn random_model_instance(
    rng: &mut RngState,
    kink_margin: f64,
) -> (ModelParams, Image, LabelVector) {
    loop {
        let hidden = rng.random_range(1..=8);
        let g = rng.random_range(1..=3);
        let classes = rng.random_range(1..=5);
        let (h, w) = (rng.random_range(g..=6), rng.random_range(g..=6));
        let mut params = ModelParams::init((g, g), hidden, classes, rng).unwrap();
        for v in params.values_mut() {
            *v *= 2.0;
        }
        let image = random_image(rng, h, w);
        let labels = random_labels(rng, classes, 0.5);
        if pre_activations(&params, &image)
            .iter()
            .all(|z| z.abs() > kink_margin)
        {
            return (params, image, labels);
        }
    }
}

/// Largest relative error between analytic and central-difference gradients
/// over every parameter. The denominator is floored at `floor` so that
/// components which are zero analytically compare in absolute terms.
pub fn max_gradient_error(
    params: &ModelParams,
    image: &Image,
    labels: &LabelVector,
    eps: f64,
    floor: f64,
) -> f64 {
    let (_, grads) = backward(params, image, labels).unwrap();
    let analytic: Vec<f64> = grads.values().copied().collect();
    let loss_at = |p: &ModelParams| bce_loss(&forward(p, image).unwrap(), labels);
    let mut worst: f64 = 0.0;
    for (idx, &a) in analytic.iter().enumerate() {
        let mut plus = params.clone();
        *plus.values_mut().nth(idx).unwrap() += eps;
        let mut minus = params.clone();
        *minus.values_mut().nth(idx).unwrap() -= eps;
        let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * eps);
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
        worst = worst.max(err);
    }
    worst
}

/// Per-class pixel counts: pixels within `tolerance` (max-channel distance)
/// of each palette colour.
pub fn color_census(image: &Image, classes: usize, tolerance: f64) -> Vec<usize> {
    let mut counts = vec![0; classes];
    for r in 0..image.height() {
        for c in 0..image.width() {
            let px = image.pixel(r, c);
            for (j, color) in PALETTE.iter().take(classes).enumerate() {
                if (0..3).all(|ch| (px[ch] - color[ch]).abs() <= tolerance) {
                    counts[j] += 1;
                }
            }
        }
    }
    counts
}

pub const EXPERIMENT_SEED: u64 = 7;
pub const EXPERIMENT_TRAIN: usize = 500;
pub const EXPERIMENT_TEST: usize = 200;
pub const EXPERIMENT_SIZE: (usize, usize) = (64, 64);

/// Outcome of one run of the synthetic end-to-end experiment.
pub struct ExperimentRun {
    /// `(mode, checkpoint text, test report)` for M1, M2, M3.
    pub members: Vec<(AugmentMode, String, MetricsReport)>,
    /// Report of the M2 + M3 score average.
    pub distr_ensemble: MetricsReport,
    pub seconds: f64,
}

/// Generates 700 synthetic images (the first 500 train, the rest test),
/// trains M1/M2/M3 with the default schedule, scores the test split and
/// fuses the M2 and M3 scores.
pub fn run_synthetic_experiment(dir: &Path) -> ExperimentRun {
    let start = std::time::Instant::now();
    let cfg = SynthConfig::new(EXPERIMENT_TRAIN + EXPERIMENT_TEST, EXPERIMENT_SEED);
    let manifest: DatasetManifest = generate(&cfg, dir).unwrap();
    let train_set = manifest
        .slice(0, EXPERIMENT_TRAIN)
        .load_samples(dir)
        .unwrap();
    let test_manifest = manifest.slice(EXPERIMENT_TRAIN, manifest.len());
    let test_images = test_manifest.load_images(dir).unwrap();
    let truth: LabelMatrix = test_manifest.label_matrix().unwrap();

    let mut members = Vec::new();
    let mut scores: Vec<ScoreMatrix> = Vec::new();
    for mode in [AugmentMode::M1, AugmentMode::M2, AugmentMode::M3] {
        let tc = TrainConfig::new(mode, EXPERIMENT_SIZE, EXPERIMENT_SEED);
        let report = train(&train_set, &tc).unwrap();
        let s = predict(&report.params, &test_images, EXPERIMENT_SIZE).unwrap();
        let metrics = evaluate(&s, &truth, DEFAULT_K).unwrap();
        members.push((mode, write_checkpoint(&report.params), metrics));
        scores.push(s);
    }
    let fused = fuse(&scores[1..]).unwrap();
    let distr_ensemble = evaluate(&fused, &truth, DEFAULT_K).unwrap();
    ExperimentRun {
        members,
        distr_ensemble,
        seconds: start.elapsed().as_secs_f64(),
    }
}
