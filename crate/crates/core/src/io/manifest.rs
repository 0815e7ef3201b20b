//! Dataset manifests.
//!
//! ```text
//! #classes=3
//! img0.ppm<TAB>0 2
//! img1.ppm<TAB>
//! ```
//!
//! Entry order defines row order of every matrix derived from the manifest.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io::ppm::load_ppm;
use crate::types::{Image, LabelMatrix, LabelVector, Sample};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub image_path: String,
    /// Sorted, duplicate-free.
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    num_classes: usize,
    entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn new(num_classes: usize, entries: Vec<ManifestEntry>) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::InvalidDimensions(
                "manifest needs at least one class".into(),
            ));
        }
        let mut normalized = Vec::with_capacity(entries.len());
        for mut entry in entries {
            if entry.image_path.is_empty() {
                return Err(Error::InvalidConfig(
                    "manifest entry with empty path".into(),
                ));
            }
            entry.labels.sort_unstable();
            entry.labels.dedup();
            if let Some(&index) = entry.labels.iter().find(|&&i| i >= num_classes) {
                return Err(Error::IndexOutOfRange {
                    index,
                    classes: num_classes,
                });
            }
            normalized.push(entry);
        }
        Ok(Self {
            num_classes,
            entries: normalized,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn label_vector(&self, index: usize) -> LabelVector {
        // Indices were range-checked on construction.
        LabelVector::from_indices(self.num_classes, &self.entries[index].labels)
            .expect("validated manifest")
    }

    pub fn label_matrix(&self) -> Result<LabelMatrix> {
        let mut data = vec![false; self.len() * self.num_classes];
        for (r, entry) in self.entries.iter().enumerate() {
            for &j in &entry.labels {
                data[r * self.num_classes + j] = true;
            }
        }
        LabelMatrix::new(self.len(), self.num_classes, data)
    }

    /// Manifest restricted to entries `start..end`, keeping order.
    pub fn slice(&self, start: usize, end: usize) -> DatasetManifest {
        DatasetManifest {
            num_classes: self.num_classes,
            entries: self.entries[start..end].to_vec(),
        }
    }

    /// Loads every image, resolving relative paths against `base_dir`.
    pub fn load_images(&self, base_dir: &Path) -> Result<Vec<Image>> {
        use rayon::prelude::*;
        self.entries
            .par_iter()
            .map(|e| load_ppm(&resolve(base_dir, &e.image_path)))
            .collect()
    }

    pub fn load_samples(&self, base_dir: &Path) -> Result<Vec<Sample>> {
        let images = self.load_images(base_dir)?;
        Ok(images
            .into_iter()
            .enumerate()
            .map(|(i, image)| Sample::new(image, self.label_vector(i)))
            .collect())
    }
}

fn resolve(base_dir: &Path, path: &str) -> PathBuf {
    let p = Path::new(path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base_dir.join(p)
    }
}

pub fn read_manifest(text: &str) -> Result<DatasetManifest> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::MissingClassHeader)?;
    let num_classes: usize = header
        .strip_prefix("#classes=")
        .ok_or(Error::MissingClassHeader)?
        .trim()
        .parse()
        .map_err(|_| Error::Parse {
            line: 1,
            message: format!("bad class count in {header:?}"),
        })?;

    let mut entries = Vec::new();
    for (line, text) in lines {
        let (path, indices) = text.split_once('\t').unwrap_or((text, ""));
        if path.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty image path".into(),
            });
        }
        let labels = indices
            .split_ascii_whitespace()
            .map(|tok| {
                tok.parse::<usize>().map_err(|_| Error::Parse {
                    line,
                    message: format!("bad label index {tok:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        entries.push(ManifestEntry {
            image_path: path.to_string(),
            labels,
        });
    }
    DatasetManifest::new(num_classes, entries)
}

pub fn write_manifest(manifest: &DatasetManifest) -> String {
    let mut out = format!("#classes={}\n", manifest.num_classes);
    for entry in &manifest.entries {
        out.push_str(&entry.image_path);
        out.push('\t');
        let idx: Vec<String> = entry.labels.iter().map(usize::to_string).collect();
        out.push_str(&idx.join(" "));
        out.push('\n');
    }
    out
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::DataLoad {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    read_manifest(&text)
}
