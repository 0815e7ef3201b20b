//! Deterministic synthetic multi-label dataset.
//!
//! Every class has its own saturated colour and a fixed shape (square, disk
//! or triangle, cycling with the class index). An image shows between
//! `min_concepts` and `max_concepts` distinct classes, drawn in random
//! z-order over a mid-gray background with mild uniform noise. Placements are
//! redrawn until every drawn class keeps at least [`MIN_VISIBLE_PIXELS`]
//! unoccluded pixels, so labels can be recovered from a colour census.
//!
//! Image `i` depends only on `(seed, i)`.

use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::manifest::{write_manifest, DatasetManifest, ManifestEntry};
use crate::io::matrix_csv::write_labels_csv;
use crate::io::ppm::write_ppm;
use crate::rng::RngState;
use crate::types::{Image, LabelVector, Sample};

/// RGB cube corners other than black and white.
pub const PALETTE: [[f64; 3]; 6] = [
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [1.0, 1.0, 0.0],
    [1.0, 0.0, 1.0],
    [0.0, 1.0, 1.0],
];
pub const BACKGROUND: [f64; 3] = [0.5, 0.5, 0.5];
pub const NOISE_AMPLITUDE: f64 = 0.03;
pub const MIN_VISIBLE_PIXELS: usize = 12;
const MAX_PLACEMENT_ATTEMPTS: usize = 200;
/// Shape side as a fraction of the shorter image side.
const SIZE_RANGE: (f64, f64) = (0.4, 0.6);

pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const LABELS_FILE: &str = "labels.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Square,
    Disk,
    Triangle,
}

impl Shape {
    pub fn for_class(class: usize) -> Shape {
        match class % 3 {
            0 => Shape::Square,
            1 => Shape::Disk,
            _ => Shape::Triangle,
        }
    }

    /// Whether pixel `(r, c)` of a `size`-sided box lies inside the shape.
    fn covers(self, r: usize, c: usize, size: usize) -> bool {
        let s = size as f64;
        let (y, x) = (r as f64 + 0.5, c as f64 + 0.5);
        match self {
            Shape::Square => true,
            Shape::Disk => {
                let h = s / 2.0;
                (y - h).powi(2) + (x - h).powi(2) <= h * h
            }
            // Apex at the top centre, base along the bottom edge.
            Shape::Triangle => (x - s / 2.0).abs() <= y / 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthConfig {
    pub num_images: usize,
    pub image_size: (usize, usize),
    pub num_classes: usize,
    pub min_concepts: usize,
    pub max_concepts: usize,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(num_images: usize, seed: u64) -> Self {
        Self {
            num_images,
            image_size: (64, 64),
            num_classes: PALETTE.len(),
            min_concepts: 1,
            max_concepts: 3,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.num_classes == 0 || self.num_classes > PALETTE.len() {
            return bad(format!(
                "num_classes must be in 1..={}, got {}",
                PALETTE.len(),
                self.num_classes
            ));
        }
        if !(1 <= self.min_concepts
            && self.min_concepts <= self.max_concepts
            && self.max_concepts <= self.num_classes)
        {
            return bad(format!(
                "need 1 <= min ({}) <= max ({}) <= classes ({})",
                self.min_concepts, self.max_concepts, self.num_classes
            ));
        }
        if self.image_size.0 < 16 || self.image_size.1 < 16 {
            return bad(format!("image size {:?} below 16x16", self.image_size));
        }
        Ok(())
    }
}

/// A placed shape: class, top-left corner and side length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Placement {
    class: usize,
    top: usize,
    left: usize,
    size: usize,
}

/// Concept subset of image `index`, in drawing (z) order, back to front.
fn sample_concepts(cfg: &SynthConfig, rng: &mut RngState) -> Vec<usize> {
    let count = rng.random_range(cfg.min_concepts..=cfg.max_concepts);
    let classes: Vec<usize> = (0..cfg.num_classes).collect();
    let mut chosen: Vec<usize> = classes.choose_multiple(rng, count).copied().collect();
    chosen.shuffle(rng);
    chosen
}

/// Classes drawn in image `index`, sorted.
pub fn concepts(cfg: &SynthConfig, index: usize) -> Vec<usize> {
    let mut rng = RngState::new(cfg.seed).split(index as u64);
    let mut c = sample_concepts(cfg, &mut rng);
    c.sort_unstable();
    c
}

fn rasterize(placements: &[Placement], (h, w): (usize, usize)) -> Vec<Option<usize>> {
    let mut owner = vec![None; h * w];
    for p in placements {
        let shape = Shape::for_class(p.class);
        for r in 0..p.size {
            for c in 0..p.size {
                if shape.covers(r, c, p.size) {
                    owner[(p.top + r) * w + p.left + c] = Some(p.class);
                }
            }
        }
    }
    owner
}

/// Renders image `index` together with its label vector.
pub fn render(cfg: &SynthConfig, index: usize) -> Result<Sample> {
    cfg.validate()?;
    let mut rng = RngState::new(cfg.seed).split(index as u64);
    let order = sample_concepts(cfg, &mut rng);
    let (h, w) = cfg.image_size;
    let short = h.min(w) as f64;
    let lo = ((SIZE_RANGE.0 * short).round() as usize).max(4);
    let hi = ((SIZE_RANGE.1 * short).round() as usize).max(lo);

    let mut owner = None;
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let placements: Vec<Placement> = order
            .iter()
            .map(|&class| {
                let size = rng.random_range(lo..=hi);
                Placement {
                    class,
                    top: rng.random_range(0..=h - size),
                    left: rng.random_range(0..=w - size),
                    size,
                }
            })
            .collect();
        let map = rasterize(&placements, (h, w));
        let visible = order
            .iter()
            .all(|&class| map.iter().filter(|&&o| o == Some(class)).count() >= MIN_VISIBLE_PIXELS);
        if visible {
            owner = Some(map);
            break;
        }
    }
    let owner = owner.ok_or_else(|| {
        Error::Generation(format!(
            "image {index}: no placement kept every shape visible after {MAX_PLACEMENT_ATTEMPTS} attempts"
        ))
    })?;

    let mut data = Vec::with_capacity(h * w * 3);
    for o in owner {
        let base = o.map_or(BACKGROUND, |class| PALETTE[class]);
        for v in base {
            let noise = rng.random_range(-NOISE_AMPLITUDE..=NOISE_AMPLITUDE);
            data.push((v + noise).clamp(0.0, 1.0));
        }
    }
    let image = Image::new(h, w, data)?;
    let labels = LabelVector::from_indices(cfg.num_classes, &order)?;
    Ok(Sample::new(image, labels))
}

pub fn image_file_name(index: usize) -> String {
    format!("img{index:05}.ppm")
}

/// Writes `img#####.ppm` files, `manifest.tsv` and `labels.csv` into
/// `out_dir` and returns the manifest.
pub fn generate(cfg: &SynthConfig, out_dir: &Path) -> Result<DatasetManifest> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let entries = (0..cfg.num_images)
        .into_par_iter()
        .map(|i| {
            let sample = render(cfg, i)?;
            let name = image_file_name(i);
            std::fs::write(out_dir.join(&name), write_ppm(&sample.image))?;
            Ok(ManifestEntry {
                image_path: name,
                labels: sample.labels.indices(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = DatasetManifest::new(cfg.num_classes, entries)?;
    std::fs::write(out_dir.join(MANIFEST_FILE), write_manifest(&manifest))?;
    std::fs::write(
        out_dir.join(LABELS_FILE),
        write_labels_csv(&manifest.label_matrix()?),
    )?;
    Ok(manifest)
}
