//! Image-space augmentation: horizontal flip, bilinear resize,
//! random-resized-crop and multi-label mixup.
//!
//! Randomized operations are pure functions of their inputs and the
//! [`RngState`] they are handed.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::RngState;
use crate::types::{Image, Sample, CHANNELS};

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentConfig {
    pub flip_probability: f64,
    /// Crop area as a fraction of the source area.
    pub crop_scale_range: (f64, f64),
    /// Crop width / height.
    pub crop_aspect_range: (f64, f64),
    pub crop_attempts: usize,
    /// `(height, width)` of every augmented output.
    pub target_size: (usize, usize),
}

impl AugmentConfig {
    pub fn new(target_size: (usize, usize)) -> Self {
        Self {
            flip_probability: 0.5,
            crop_scale_range: (0.08, 1.0),
            crop_aspect_range: (3.0 / 4.0, 4.0 / 3.0),
            crop_attempts: 10,
            target_size,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(0.0..=1.0).contains(&self.flip_probability) {
            return bad(format!(
                "flip probability {} not in [0, 1]",
                self.flip_probability
            ));
        }
        for (name, (lo, hi)) in [
            ("crop scale", self.crop_scale_range),
            ("crop aspect", self.crop_aspect_range),
        ] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return bad(format!(
                    "{name} range ({lo}, {hi}) must satisfy 0 < low <= high"
                ));
            }
        }
        if self.crop_scale_range.1 > 1.0 {
            return bad(format!(
                "crop scale upper bound {} exceeds 1",
                self.crop_scale_range.1
            ));
        }
        if self.target_size.0 == 0 || self.target_size.1 == 0 {
            return bad(format!(
                "target size {:?} must be positive",
                self.target_size
            ));
        }
        Ok(())
    }
}

/// Training-time augmentation regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AugmentMode {
    /// Random horizontal flip only.
    M1,
    /// Flip plus random-resized-crop.
    M2,
    /// The M2 pipeline plus mixup on alternate epochs.
    M3,
}

impl fmt::Display for AugmentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AugmentMode::M1 => "M1",
            AugmentMode::M2 => "M2",
            AugmentMode::M3 => "M3",
        })
    }
}

impl FromStr for AugmentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "M1" => Ok(AugmentMode::M1),
            "M2" => Ok(AugmentMode::M2),
            "M3" => Ok(AugmentMode::M3),
            _ => Err(Error::InvalidConfig(format!(
                "unknown mode {s:?} (expected M1, M2 or M3)"
            ))),
        }
    }
}

pub fn flip_horizontal(image: &Image) -> Image {
    let (h, w) = image.dims();
    let src = image.data();
    let mut data = Vec::with_capacity(src.len());
    for r in 0..h {
        for c in (0..w).rev() {
            let i = (r * w + c) * CHANNELS;
            data.extend_from_slice(&src[i..i + CHANNELS]);
        }
    }
    Image::from_raw(h, w, data)
}

/// Bilinear resize with half-pixel-centre alignment.
///
/// Source coordinate of output index `i` is `(i + 0.5) * in / out - 0.5`,
/// clamped to the border.
pub fn resize_bilinear(image: &Image, out_h: usize, out_w: usize) -> Result<Image> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::InvalidDimensions(format!(
            "resize target {out_h}x{out_w} must be positive"
        )));
    }
    let (in_h, in_w) = image.dims();
    if (in_h, in_w) == (out_h, out_w) {
        return Ok(image.clone());
    }
    let rows = sample_positions(in_h, out_h);
    let cols = sample_positions(in_w, out_w);
    let mut data = Vec::with_capacity(out_h * out_w * CHANNELS);
    for &(r0, r1, fr) in &rows {
        for &(c0, c1, fc) in &cols {
            for ch in 0..CHANNELS {
                let top = lerp(image.get(r0, c0, ch), image.get(r0, c1, ch), fc);
                let bottom = lerp(image.get(r1, c0, ch), image.get(r1, c1, ch), fc);
                data.push(lerp(top, bottom, fr));
            }
        }
    }
    Ok(Image::from_raw(out_h, out_w, data))
}

fn sample_positions(input: usize, output: usize) -> Vec<(usize, usize, f64)> {
    let scale = input as f64 / output as f64;
    let last = (input - 1) as f64;
    (0..output)
        .map(|i| {
            let x = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, last);
            let x0 = x.floor() as usize;
            let x1 = (x0 + 1).min(input - 1);
            (x0, x1, x - x0 as f64)
        })
        .collect()
}

/// Convex combination, clamped so rounding never leaves `[min(a,b), max(a,b)]`.
#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    (a + (b - a) * t).clamp(a.min(b), a.max(b))
}

/// Copies the `height × width` window whose top-left corner is `(top, left)`.
pub fn crop(image: &Image, top: usize, left: usize, height: usize, width: usize) -> Result<Image> {
    let (h, w) = image.dims();
    if height == 0 || width == 0 || top + height > h || left + width > w {
        return Err(Error::InvalidDimensions(format!(
            "crop {height}x{width} at ({top}, {left}) does not fit in {h}x{w}"
        )));
    }
    let mut data = Vec::with_capacity(height * width * CHANNELS);
    for r in top..top + height {
        let start = (r * w + left) * CHANNELS;
        data.extend_from_slice(&image.data()[start..start + width * CHANNELS]);
    }
    Ok(Image::from_raw(height, width, data))
}

/// A crop window: `(top, left, height, width)`.
pub type CropWindow = (usize, usize, usize, usize);

/// Samples a crop window the way torchvision's `RandomResizedCrop` does.
pub fn sample_crop_window(
    (h, w): (usize, usize),
    cfg: &AugmentConfig,
    rng: &mut RngState,
) -> CropWindow {
    let area = (h * w) as f64;
    let (s_lo, s_hi) = cfg.crop_scale_range;
    let (log_lo, log_hi) = (cfg.crop_aspect_range.0.ln(), cfg.crop_aspect_range.1.ln());
    for _ in 0..cfg.crop_attempts {
        let target_area = area * (s_lo + (s_hi - s_lo) * rng.random::<f64>());
        let aspect = (log_lo + (log_hi - log_lo) * rng.random::<f64>()).exp();
        let cw = (target_area * aspect).sqrt().round() as usize;
        let ch = (target_area / aspect).sqrt().round() as usize;
        if cw > 0 && ch > 0 && cw <= w && ch <= h {
            let top = rng.random_range(0..=h - ch);
            let left = rng.random_range(0..=w - cw);
            return (top, left, ch, cw);
        }
    }
    // Fallback: largest centred crop whose aspect is the image's own, clipped
    // into the allowed range.
    let in_ratio = w as f64 / h as f64;
    let (ch, cw) = if in_ratio < cfg.crop_aspect_range.0 {
        let ch = ((w as f64 / cfg.crop_aspect_range.0).round() as usize).clamp(1, h);
        (ch, w)
    } else if in_ratio > cfg.crop_aspect_range.1 {
        let cw = ((h as f64 * cfg.crop_aspect_range.1).round() as usize).clamp(1, w);
        (h, cw)
    } else {
        (h, w)
    };
    ((h - ch) / 2, (w - cw) / 2, ch, cw)
}

pub fn random_resized_crop(image: &Image, cfg: &AugmentConfig, rng: &mut RngState) -> Image {
    let (top, left, ch, cw) = sample_crop_window(image.dims(), cfg, rng);
    let window = crop(image, top, left, ch, cw).expect("sampled window fits");
    let (th, tw) = cfg.target_size;
    resize_bilinear(&window, th, tw).expect("validated target size")
}

/// Pixel-wise average of the images and elementwise OR of the labels.
pub fn mixup_pair(a: &Sample, b: &Sample) -> Result<Sample> {
    if a.image.dims() != b.image.dims() {
        return Err(Error::DimensionMismatch {
            a: a.image.dims(),
            b: b.image.dims(),
        });
    }
    let labels = a.labels.union(&b.labels)?;
    let data = a
        .image
        .data()
        .iter()
        .zip(b.image.data())
        .map(|(x, y)| (x + y) / 2.0)
        .collect();
    let (h, w) = a.image.dims();
    Ok(Sample::new(Image::from_raw(h, w, data), labels))
}

/// Shuffles `batch`, then mixes element `2k` with `2k + 1`. An odd leftover
/// passes through unmixed, so `n` inputs yield `ceil(n / 2)` outputs.
pub fn mixup_batch(batch: Vec<Sample>, rng: &mut RngState) -> Result<Vec<Sample>> {
    let mut batch = batch;
    batch.shuffle(rng);
    let mut out = Vec::with_capacity(batch.len().div_ceil(2));
    let mut iter = batch.into_iter();
    while let Some(a) = iter.next() {
        match iter.next() {
            Some(b) => out.push(mixup_pair(&a, &b)?),
            None => out.push(a),
        }
    }
    Ok(out)
}

/// Per-sample pipeline for `mode`. The flip happens first; M2/M3 then crop
/// and resize, M1 only resizes. Mixup is a batch-level step, see
/// [`mixup_batch`].
pub fn augment_sample(
    sample: &Sample,
    mode: AugmentMode,
    cfg: &AugmentConfig,
    rng: &mut RngState,
) -> Sample {
    let flipped;
    let image = if rng.random::<f64>() < cfg.flip_probability {
        flipped = flip_horizontal(&sample.image);
        &flipped
    } else {
        &sample.image
    };
    let (th, tw) = cfg.target_size;
    let image = match mode {
        AugmentMode::M1 => resize_bilinear(image, th, tw).expect("validated target size"),
        AugmentMode::M2 | AugmentMode::M3 => random_resized_crop(image, cfg, rng),
    };
    Sample::new(image, sample.labels.clone())
}
