//! Shared domain types.
//!
//! Every constructor validates its invariants, so a value of any of these
//! types is always well formed. Pixels are `f64` in `[0, 1]`; quantization
//! to 8 bits happens only at the file boundary (see [`crate::io::ppm`]).

use crate::error::{Error, Result};

/// Channels per pixel. Only RGB is supported.
pub const CHANNELS: usize = 3;

/// Dense RGB raster, row-major with interleaved channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidDimensions(format!(
                "image must be at least 1x1, got {height}x{width}"
            )));
        }
        let expected = height * width * CHANNELS;
        if data.len() != expected {
            return Err(Error::InvalidDimensions(format!(
                "{height}x{width} image needs {expected} values, got {}",
                data.len()
            )));
        }
        for (index, &value) in data.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::PixelOutOfRange { index, value });
            }
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    /// Image with every pixel set to `rgb`.
    pub fn filled(height: usize, width: usize, rgb: [f64; 3]) -> Result<Self> {
        let data = rgb.repeat(height * width);
        Self::new(height, width, data)
    }

    /// Callers guarantee the invariants (value-preserving or convex ops).
    pub(crate) fn from_raw(height: usize, width: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), height * width * CHANNELS);
        debug_assert!(data.iter().all(|v| (0.0..=1.0).contains(v)));
        Self {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.data[(row * self.width + col) * CHANNELS + channel]
    }

    pub fn pixel(&self, row: usize, col: usize) -> [f64; 3] {
        let i = (row * self.width + col) * CHANNELS;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }
}

/// Binary presence vector over `C` concepts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelVector(Vec<bool>);

impl LabelVector {
    pub fn new(entries: Vec<bool>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidDimensions(
                "label vector needs at least one class".into(),
            ));
        }
        Ok(Self(entries))
    }

    /// Parses 0/1 numeric values.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let entries = values
            .iter()
            .enumerate()
            .map(|(index, &v)| binary_value(index, v))
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }

    pub fn from_indices(num_classes: usize, indices: &[usize]) -> Result<Self> {
        let mut entries = vec![false; num_classes];
        for &index in indices {
            if index >= num_classes {
                return Err(Error::IndexOutOfRange {
                    index,
                    classes: num_classes,
                });
            }
            entries[index] = true;
        }
        Self::new(entries)
    }

    pub fn num_classes(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn indices(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Elementwise logical OR.
    pub fn union(&self, other: &LabelVector) -> Result<LabelVector> {
        if self.num_classes() != other.num_classes() {
            return Err(Error::ShapeMismatch {
                expected: (1, self.num_classes()),
                actual: (1, other.num_classes()),
            });
        }
        Ok(LabelVector(
            self.0.iter().zip(&other.0).map(|(&a, &b)| a || b).collect(),
        ))
    }
}

fn binary_value(index: usize, value: f64) -> Result<bool> {
    if value == 0.0 {
        Ok(false)
    } else if value == 1.0 {
        Ok(true)
    } else {
        Err(Error::NonBinaryLabel { index, value })
    }
}

/// `n × C` binary matrix. Also used for top-k predictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMatrix {
    rows: usize,
    cols: usize,
    data: Vec<bool>,
}

impl LabelMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<bool>) -> Result<Self> {
        if cols == 0 {
            return Err(Error::InvalidDimensions(
                "label matrix needs at least one class".into(),
            ));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidDimensions(format!(
                "{rows}x{cols} label matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_values(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        let data = values
            .iter()
            .enumerate()
            .map(|(index, &v)| binary_value(index, v))
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows, cols, data)
    }

    pub fn from_rows(rows: &[LabelVector]) -> Result<Self> {
        let cols = rows
            .first()
            .map(LabelVector::num_classes)
            .ok_or(Error::EmptyInput)?;
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.num_classes() != cols {
                return Err(Error::ShapeMismatch {
                    expected: (rows.len(), cols),
                    actual: (rows.len(), row.num_classes()),
                });
            }
            data.extend_from_slice(row.as_slice());
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[bool] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<bool> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    pub fn row_vector(&self, row: usize) -> LabelVector {
        LabelVector(self.row(row).to_vec())
    }
}

/// `n × C` matrix of finite confidence scores (logits or probabilities).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ScoreMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if cols == 0 {
            return Err(Error::InvalidDimensions(
                "score matrix needs at least one class".into(),
            ));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidDimensions(format!(
                "{rows}x{cols} score matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map(Vec::len).ok_or(Error::EmptyInput)?;
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::ShapeMismatch {
                    expected: (rows.len(), cols),
                    actual: (rows.len(), row.len()),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    /// Applies `f` elementwise; the result must stay finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<ScoreMatrix> {
        ScoreMatrix::new(
            self.rows,
            self.cols,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }
}

/// One training example.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub image: Image,
    pub labels: LabelVector,
}

impl Sample {
    pub fn new(image: Image, labels: LabelVector) -> Self {
        Self { image, labels }
    }
}

/// Checks that `scores` and `labels` can be evaluated together.
///
/// Finiteness and binarity are already guaranteed by construction, so only
/// the shapes are compared here.
pub fn validate_pair(scores: &ScoreMatrix, labels: &LabelMatrix) -> Result<()> {
    if scores.shape() != labels.shape() {
        return Err(Error::ShapeMismatch {
            expected: labels.shape(),
            actual: scores.shape(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_pair_accepts_matching_shapes() {
        let s = ScoreMatrix::new(2, 3, vec![0.1, 0.2, 0.3, -1.0, 2.0, 0.0]).unwrap();
        let y = LabelMatrix::from_values(2, 3, &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0]).unwrap();
        validate_pair(&s, &y).unwrap();
    }

    #[test]
    fn validate_pair_rejects_row_mismatch() {
        let s = ScoreMatrix::new(2, 3, vec![0.0; 6]).unwrap();
        let y = LabelMatrix::new(3, 3, vec![false; 9]).unwrap();
        assert!(matches!(
            validate_pair(&s, &y),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn nan_scores_are_rejected() {
        let err = ScoreMatrix::new(2, 3, vec![0.0, f64::NAN, 0.0, 0.0, 0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 1 }));
        let err = ScoreMatrix::new(1, 1, vec![f64::INFINITY]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 0 }));
    }

    #[test]
    fn labels_must_be_binary() {
        let err = LabelMatrix::from_values(1, 3, &[1.0, 0.5, 0.0]).unwrap_err();
        assert!(matches!(err, Error::NonBinaryLabel { index: 1, .. }));
    }

    #[test]
    fn image_invariants() {
        assert!(Image::new(1, 1, vec![0.0, 0.5, 1.0]).is_ok());
        assert!(matches!(
            Image::new(1, 1, vec![0.0, 1.5, 1.0]),
            Err(Error::PixelOutOfRange { index: 1, .. })
        ));
        assert!(matches!(
            Image::new(1, 1, vec![0.0, f64::NAN, 1.0]),
            Err(Error::NonFinite { index: 1 })
        ));
        assert!(Image::new(2, 2, vec![0.0; 11]).is_err());
        assert!(Image::new(0, 2, vec![]).is_err());
    }

    #[test]
    fn label_vector_from_indices() {
        let v = LabelVector::from_indices(4, &[0, 2]).unwrap();
        assert_eq!(v.as_slice(), &[true, false, true, false]);
        assert_eq!(v.indices(), vec![0, 2]);
        assert!(matches!(
            LabelVector::from_indices(3, &[3]),
            Err(Error::IndexOutOfRange {
                index: 3,
                classes: 3
            })
        ));
    }

    #[test]
    fn ragged_label_rows_rejected() {
        let rows = vec![
            LabelVector::new(vec![true, false]).unwrap(),
            LabelVector::new(vec![true]).unwrap(),
        ];
        assert!(LabelMatrix::from_rows(&rows).is_err());
    }
}
