//! Multi-label image classification baseline toolkit.
//!
//! - [`types`]: images, label and score matrices
//! - [`io`]: PPM, CSV matrices, dataset manifests
//! - [`augment`]: flip, resize, random-resized-crop, multi-label mixup
//! - [`model`]: adaptive pooling + MLP classifier, sigmoid cross-entropy, gradients, checkpoints
//! - [`trainer`]: SGD with M1/M2/M3 augmentation regimes and step decay
//! - [`metrics`]: top-k P/R/F1 (label-centric and overall), AP, mAP
//! - [`fusion`]: score-level ensembles
//! - [`synth`]: synthetic shapes dataset

pub mod augment;
pub mod error;
pub mod fusion;
pub mod io;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod synth;
pub mod trainer;
pub mod types;

pub use error::{Error, Result};
pub use rng::RngState;
pub use types::{validate_pair, Image, LabelMatrix, LabelVector, Sample, ScoreMatrix};
