//! Header-less comma-separated matrices.
//!
//! Scores are written with Rust's shortest round-trip float formatting, so a
//! write/read cycle reproduces every `f64` bit for bit.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::types::{LabelMatrix, ScoreMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Scores,
    Labels,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CsvMatrix {
    Scores(ScoreMatrix),
    Labels(LabelMatrix),
}

pub fn read_csv_matrix(text: &str, kind: MatrixKind) -> Result<CsvMatrix> {
    Ok(match kind {
        MatrixKind::Scores => CsvMatrix::Scores(read_scores_csv(text)?),
        MatrixKind::Labels => CsvMatrix::Labels(read_labels_csv(text)?),
    })
}

pub fn read_scores_csv(text: &str) -> Result<ScoreMatrix> {
    let (rows, cols, values) = parse_numbers(text)?;
    ScoreMatrix::new(rows, cols, values)
}

pub fn read_labels_csv(text: &str) -> Result<LabelMatrix> {
    let (rows, cols, values) = parse_numbers(text)?;
    LabelMatrix::from_values(rows, cols, &values)
}

/// Blank lines are skipped; line numbers in errors are 1-based.
fn parse_numbers(text: &str) -> Result<(usize, usize, Vec<f64>)> {
    let mut cols = None;
    let mut rows = 0;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let before = values.len();
        for field in line.split(',') {
            let field = field.trim();
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("not a number: {field:?}"),
            })?;
            values.push(v);
        }
        let found = values.len() - before;
        match cols {
            None => cols = Some(found),
            Some(expected) if expected != found => {
                return Err(Error::RaggedRows {
                    line: i + 1,
                    expected,
                    found,
                })
            }
            Some(_) => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or(Error::EmptyInput)?;
    Ok((rows, cols, values))
}

pub fn write_scores_csv(scores: &ScoreMatrix) -> String {
    let mut out = String::new();
    for r in 0..scores.rows() {
        for (j, v) in scores.row(r).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

pub fn write_labels_csv(labels: &LabelMatrix) -> String {
    let mut out = String::with_capacity(labels.rows() * labels.cols() * 2);
    for r in 0..labels.rows() {
        for (j, &b) in labels.row(r).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push(if b { '1' } else { '0' });
        }
        out.push('\n');
    }
    out
}
