use crate::error::{Error, Result};
use crate::types::{Image, CHANNELS};

/// Adaptive average pooling to a fixed `grid_h × grid_w` grid.
///
/// Bin `(i, j)` averages rows `floor(i*H/gh) .. ceil((i+1)*H/gh)` and the
/// analogous column range, so bins may overlap but every pixel is covered.
/// Output layout is `[(i * grid_w + j) * 3 + channel]`.
pub fn adaptive_avg_pool(image: &Image, grid_h: usize, grid_w: usize) -> Result<Vec<f64>> {
    let (h, w) = image.dims();
    if grid_h == 0 || grid_w == 0 || grid_h > h || grid_w > w {
        return Err(Error::GridTooLarge {
            grid: (grid_h, grid_w),
            image: (h, w),
        });
    }
    let rows: Vec<(usize, usize)> = (0..grid_h).map(|i| bin_bounds(i, h, grid_h)).collect();
    let cols: Vec<(usize, usize)> = (0..grid_w).map(|j| bin_bounds(j, w, grid_w)).collect();
    let mut out = Vec::with_capacity(grid_h * grid_w * CHANNELS);
    for &(r0, r1) in &rows {
        for &(c0, c1) in &cols {
            let mut acc = [0.0; CHANNELS];
            for r in r0..r1 {
                for c in c0..c1 {
                    let px = image.pixel(r, c);
                    for ch in 0..CHANNELS {
                        acc[ch] += px[ch];
                    }
                }
            }
            let count = ((r1 - r0) * (c1 - c0)) as f64;
            out.extend(acc.iter().map(|a| a / count));
        }
    }
    Ok(out)
}

/// Half-open bin `[floor(i*len/bins), ceil((i+1)*len/bins))`.
pub fn bin_bounds(i: usize, len: usize, bins: usize) -> (usize, usize) {
    let start = i * len / bins;
    let end = ((i + 1) * len).div_ceil(bins);
    (start, end)
}
