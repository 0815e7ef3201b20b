//! Binary PPM (P6, maxval 255) codec.
//!
//! Header grammar: `P6`, width, height, maxval as ASCII decimals separated by
//! whitespace (`#` comments allowed between tokens), then exactly one
//! whitespace byte, then `width * height * 3` raw bytes.

use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{Image, CHANNELS};

pub fn read_ppm(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 2 || &bytes[..2] != b"P6" {
        return Err(Error::BadMagic);
    }
    let mut pos = 2;
    let width = next_header_value(bytes, &mut pos, "width")?;
    let height = next_header_value(bytes, &mut pos, "height")?;
    let maxval = next_header_value(bytes, &mut pos, "maxval")?;
    if maxval != 255 {
        return Err(Error::UnsupportedMaxval(maxval));
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::BadHeader("expected whitespace after maxval".into())),
    }
    if width == 0 || height == 0 {
        return Err(Error::BadHeader(format!("zero dimension {width}x{height}")));
    }
    let (width, height) = (width as usize, height as usize);
    let expected = width * height * CHANNELS;
    let raster = &bytes[pos..];
    if raster.len() < expected {
        return Err(Error::TruncatedPixelData {
            expected,
            found: raster.len(),
        });
    }
    let data = raster[..expected]
        .iter()
        .map(|&b| f64::from(b) / 255.0)
        .collect();
    Ok(Image::from_raw(height, width, data))
}

fn next_header_value(bytes: &[u8], pos: &mut usize, what: &str) -> Result<u32> {
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while let Some(&b) = bytes.get(*pos) {
                    *pos += 1;
                    if b == b'\n' {
                        break;
                    }
                }
            }
            Some(_) => break,
            None => return Err(Error::BadHeader(format!("missing {what}"))),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::BadHeader(format!("{what} is not a decimal number")));
    }
    // Digits only, so from_utf8 cannot fail.
    let text = std::str::from_utf8(&bytes[start..*pos]).unwrap_or_default();
    text.parse()
        .map_err(|_| Error::BadHeader(format!("{what} out of range: {text}")))
}

/// Quantizes each channel with `round(v * 255)`, halves rounded away from zero.
pub fn write_ppm(image: &Image) -> Vec<u8> {
    let header = format!("P6\n{} {}\n255\n", image.width(), image.height());
    let mut out = Vec::with_capacity(header.len() + image.data().len());
    out.extend_from_slice(header.as_bytes());
    out.extend(image.data().iter().map(|&v| quantize(v)));
    out
}

#[inline]
pub fn quantize(value: f64) -> u8 {
    (value * 255.0).round().clamp(0.0, 255.0) as u8
}

pub fn load_ppm(path: &Path) -> Result<Image> {
    let bytes = std::fs::read(path).map_err(|e| Error::DataLoad {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    read_ppm(&bytes).map_err(|e| Error::DataLoad {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn save_ppm(image: &Image, path: &Path) -> Result<()> {
    std::fs::write(path, write_ppm(image))?;
    Ok(())
}
