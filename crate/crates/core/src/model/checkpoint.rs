//! Plain-text parameter checkpoints.
//!
//! ```text
//! mlc-params v1
//! pool_grid <gh> <gw>
//! hidden <H>
//! classes <C>
//! w1 <rows> <cols>
//! <rows lines of comma-separated values>
//! b1 1 <H>
//! ...
//! ```
//!
//! Values use shortest round-trip formatting, so reading a written
//! checkpoint restores every weight bit for bit.

use std::fmt::Write as _;

use super::ModelParams;
use crate::error::{Error, Result};

const HEADER: &str = "mlc-params v1";

pub fn write_checkpoint(params: &ModelParams) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(
        out,
        "pool_grid {} {}",
        params.pool_grid.0, params.pool_grid.1
    );
    let _ = writeln!(out, "hidden {}", params.hidden);
    let _ = writeln!(out, "classes {}", params.classes);
    let blocks: [(&str, &[f64], usize, usize); 4] = [
        ("w1", &params.w1, params.inputs(), params.hidden),
        ("b1", &params.b1, 1, params.hidden),
        ("w2", &params.w2, params.hidden, params.classes),
        ("b2", &params.b2, 1, params.classes),
    ];
    for (name, values, rows, cols) in blocks {
        let _ = writeln!(out, "{name} {rows} {cols}");
        for row in values.chunks(cols) {
            let line: Vec<String> = row.iter().map(f64::to_string).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
    }
    out
}

pub fn read_checkpoint(text: &str) -> Result<ModelParams> {
    let mut lines = text
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.trim().is_empty());
    let bad = |msg: String| Error::Checkpoint(msg);

    match lines.next() {
        Some(HEADER) => {}
        other => return Err(bad(format!("expected header {HEADER:?}, found {other:?}"))),
    }
    let pool = keyed_numbers(lines.next(), "pool_grid", 2)?;
    let hidden = keyed_numbers(lines.next(), "hidden", 1)?[0];
    let classes = keyed_numbers(lines.next(), "classes", 1)?[0];

    let mut block = |name: &str| -> Result<Vec<f64>> {
        let dims = keyed_numbers(lines.next(), name, 2)?;
        let (rows, cols) = (dims[0], dims[1]);
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| bad(format!("{name}: missing row {r}")))?;
            let before = values.len();
            for field in line.split(',') {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("{name} row {r}: bad value {field:?}")))?;
                values.push(v);
            }
            if values.len() - before != cols {
                return Err(bad(format!(
                    "{name} row {r}: expected {cols} values, found {}",
                    values.len() - before
                )));
            }
        }
        Ok(values)
    };
    let w1 = block("w1")?;
    let b1 = block("b1")?;
    let w2 = block("w2")?;
    let b2 = block("b2")?;
    ModelParams::from_parts((pool[0], pool[1]), hidden, classes, w1, b1, w2, b2)
}

fn keyed_numbers(line: Option<&str>, key: &str, count: usize) -> Result<Vec<usize>> {
    let line = line.ok_or_else(|| Error::Checkpoint(format!("missing {key} line")))?;
    let mut parts = line.split_ascii_whitespace();
    if parts.next() != Some(key) {
        return Err(Error::Checkpoint(format!(
            "expected {key:?} line, found {line:?}"
        )));
    }
    let nums = parts
        .map(|p| p.parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::Checkpoint(format!("bad integer in {line:?}")))?;
    if nums.len() != count {
        return Err(Error::Checkpoint(format!(
            "{key}: expected {count} integers, found {}",
            nums.len()
        )));
    }
    Ok(nums)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngState;
    use proptest::prelude::*;

    #[test]
    fn header_is_first_line() {
        let p = ModelParams::zeros((1, 2), 3, 2).unwrap();
        let text = write_checkpoint(&p);
        assert!(text.starts_with("mlc-params v1\npool_grid 1 2\nhidden 3\nclasses 2\nw1 6 3\n"));
    }

    #[test]
    fn rejects_wrong_header_and_truncation() {
        assert!(read_checkpoint("mlc-params v2\n").is_err());
        let p = ModelParams::zeros((1, 1), 2, 2).unwrap();
        let text = write_checkpoint(&p);
        let cut = &text[..text.len() - 5];
        assert!(matches!(read_checkpoint(cut), Err(Error::Checkpoint(_))));
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(seed in any::<u64>(), gh in 1usize..4, gw in 1usize..4, h in 1usize..6, c in 1usize..5) {
            let p = ModelParams::init((gh, gw), h, c, &mut RngState::new(seed)).unwrap();
            let back = read_checkpoint(&write_checkpoint(&p)).unwrap();
            let bits = |m: &ModelParams| m.values().map(|v| v.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&back), bits(&p));
            prop_assert_eq!(back, p);
        }
    }
}
