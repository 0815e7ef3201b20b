//! File formats: PPM images, CSV matrices, dataset manifests.

pub mod manifest;
pub mod matrix_csv;
pub mod ppm;

pub use manifest::{load_manifest, read_manifest, write_manifest, DatasetManifest, ManifestEntry};
pub use matrix_csv::{
    read_csv_matrix, read_labels_csv, read_scores_csv, write_labels_csv, write_scores_csv,
    CsvMatrix, MatrixKind,
};
pub use ppm::{load_ppm, read_ppm, save_ppm, write_ppm};
