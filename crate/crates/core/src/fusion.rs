//! Score-level ensembling: the fused matrix is the elementwise arithmetic
//! mean of the member score matrices.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::io::matrix_csv::read_scores_csv;
use crate::model::sigmoid;
use crate::types::ScoreMatrix;

/// Which domain member scores are averaged in.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum FusionDomain {
    /// Average the scores exactly as given (logits for this crate's models).
    #[default]
    Raw,
    /// Map every score through the logistic function first.
    SigmoidFirst,
}

/// Elementwise mean of `matrices`.
///
/// Each element is accumulated over the member values in ascending order,
/// offset by their minimum, so the result does not depend on member order,
/// `m` identical members reproduce the input bit for bit, and the mean never
/// leaves the members' `[min, max]` interval.
pub fn fuse(matrices: &[ScoreMatrix]) -> Result<ScoreMatrix> {
    let first = matrices.first().ok_or(Error::EmptyInput)?;
    let shape = first.shape();
    for m in &matrices[1..] {
        if m.shape() != shape {
            return Err(Error::ShapeMismatch {
                expected: shape,
                actual: m.shape(),
            });
        }
    }
    let count = matrices.len() as f64;
    let mut column = Vec::with_capacity(matrices.len());
    let data = (0..first.data().len())
        .map(|i| {
            column.clear();
            column.extend(matrices.iter().map(|m| m.data()[i]));
            column.sort_by(f64::total_cmp);
            let lo = column[0];
            let hi = column[column.len() - 1];
            let spread: f64 = column.iter().map(|v| v - lo).sum();
            (lo + spread / count).clamp(lo, hi)
        })
        .collect();
    ScoreMatrix::new(shape.0, shape.1, data)
}

pub fn fuse_in(matrices: &[ScoreMatrix], domain: FusionDomain) -> Result<ScoreMatrix> {
    match domain {
        FusionDomain::Raw => fuse(matrices),
        FusionDomain::SigmoidFirst => {
            let mapped = matrices
                .iter()
                .map(|m| m.map(sigmoid))
                .collect::<Result<Vec<_>>>()?;
            fuse(&mapped)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleKind {
    /// Members differ in training input size.
    ScaleEn,
    /// Members differ in augmentation regime.
    DistrEn,
    Custom,
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnsembleKind::ScaleEn => "ScaleEn",
            EnsembleKind::DistrEn => "DistrEn",
            EnsembleKind::Custom => "Custom",
        })
    }
}

impl FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "scaleen" => Ok(EnsembleKind::ScaleEn),
            "distren" => Ok(EnsembleKind::DistrEn),
            "custom" => Ok(EnsembleKind::Custom),
            _ => Err(Error::InvalidConfig(format!("unknown ensemble kind {s:?}"))),
        }
    }
}

/// A named ensemble of at least two score files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnsembleSpec {
    kind: EnsembleKind,
    members: Vec<PathBuf>,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, members: Vec<PathBuf>) -> Result<Self> {
        if members.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "an ensemble needs at least two members, got {}",
                members.len()
            )));
        }
        Ok(Self { kind, members })
    }

    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    pub fn members(&self) -> &[PathBuf] {
        &self.members
    }

    pub fn load_and_fuse(&self, domain: FusionDomain) -> Result<ScoreMatrix> {
        let matrices = self
            .members
            .iter()
            .map(|p| {
                let text = std::fs::read_to_string(p).map_err(|e| Error::DataLoad {
                    path: p.clone(),
                    message: e.to_string(),
                })?;
                read_scores_csv(&text)
            })
            .collect::<Result<Vec<_>>>()?;
        fuse_in(&matrices, domain)
    }
}
