//! 16-bit binary PGM export for frames and residual images.
//!
//! A value `v` maps to `round(65535 * (v - lo) / (hi - lo))`, clamped to the
//! code range. The `lo`/`hi` pair is recorded in a `# range` comment so that
//! [`read_pgm`] can invert the mapping; exporting a re-imported frame with
//! the same range reproduces the file byte for byte.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{CakeError, Result};

pub const MAX_CODE: u16 = u16::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityMap {
    pub lo: f64,
    pub hi: f64,
}

impl IntensityMap {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(CakeError::InvalidArgument(format!("intensity range [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    /// Range spanning the data; a flat image gets a unit-wide range.
    pub fn fit<'a>(values: impl IntoIterator<Item = &'a f64>) -> Self {
        let (lo, hi) = values
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if !(lo.is_finite() && hi.is_finite()) {
            return Self { lo: 0.0, hi: 1.0 };
        }
        if hi > lo {
            Self { lo, hi }
        } else {
            Self { lo, hi: lo + 1.0 }
        }
    }

    pub fn encode(&self, v: f64) -> u16 {
        let x = (v - self.lo) / (self.hi - self.lo) * MAX_CODE as f64;
        x.round().clamp(0.0, MAX_CODE as f64) as u16
    }

    pub fn decode(&self, code: u16) -> f64 {
        self.lo + code as f64 / MAX_CODE as f64 * (self.hi - self.lo)
    }
}

pub fn encode_pgm(frame: &Array2<f64>, map: IntensityMap) -> Vec<u8> {
    let (rows, cols) = frame.dim();
    let mut out = format!(
        "P5\n# range {:e} {:e}\n{cols} {rows}\n{MAX_CODE}\n",
        map.lo, map.hi
    )
    .into_bytes();
    for &v in frame.iter() {
        out.extend_from_slice(&map.encode(v).to_be_bytes());
    }
    out
}

/// Parses a file written by [`encode_pgm`], returning the decoded frame
/// and the mapping that produced it.
pub fn decode_pgm(bytes: &[u8]) -> Result<(Array2<f64>, IntensityMap)> {
    let bad = |m: &str| CakeError::Format(format!("pgm: {m}"));
    let mut pos = 0;
    let mut line = || -> Result<&str> {
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| bad("truncated header"))?;
        let s = std::str::from_utf8(&bytes[pos..pos + end]).map_err(|_| bad("non-utf8 header"))?;
        pos += end + 1;
        Ok(s)
    };
    if line()? != "P5" {
        return Err(bad("not a binary graymap"));
    }
    let range: Vec<f64> = line()?
        .strip_prefix("# range ")
        .ok_or_else(|| bad("missing range comment"))?
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| bad("range")))
        .collect::<Result<_>>()?;
    let dims: Vec<usize> = line()?
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| bad("dimensions")))
        .collect::<Result<_>>()?;
    if line()? != MAX_CODE.to_string() || range.len() != 2 || dims.len() != 2 {
        return Err(bad("unsupported header"));
    }
    let map = IntensityMap::new(range[0], range[1])?;
    let (cols, rows) = (dims[0], dims[1]);
    let body = &bytes[pos..];
    if body.len() != rows * cols * 2 {
        return Err(bad("payload length"));
    }
    let vals = body
        .chunks_exact(2)
        .map(|c| map.decode(u16::from_be_bytes([c[0], c[1]])))
        .collect();
    Ok((Array2::from_shape_vec((rows, cols), vals).unwrap(), map))
}

pub fn write_pgm(frame: &Array2<f64>, map: IntensityMap, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_pgm(frame, map))?;
    Ok(())
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<(Array2<f64>, IntensityMap)> {
    decode_pgm(&fs::read(path)?)
}

/// Magnitude image of a signed frame, on `[0, max |v|]`.
pub fn magnitude_frame(frame: &Array2<f64>) -> (Array2<f64>, IntensityMap) {
    let mag = frame.mapv(f64::abs);
    let top = mag.iter().cloned().fold(0.0, f64::max);
    let map = IntensityMap {
        lo: 0.0,
        hi: if top > 0.0 { top } else { 1.0 },
    };
    (mag, map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reimport_is_lossless_at_16_bits() {
        let frame = Array2::from_shape_fn((5, 7), |(i, j)| ((i * 7 + j) as f64 * 0.37).sin());
        let map = IntensityMap::fit(frame.iter());
        let bytes = encode_pgm(&frame, map);
        let (back, map2) = decode_pgm(&bytes).unwrap();
        assert_eq!(map2, map);
        assert_eq!(encode_pgm(&back, map2), bytes);
        let step = (map.hi - map.lo) / MAX_CODE as f64;
        assert!(back.iter().zip(frame.iter()).all(|(a, b)| (a - b).abs() <= 0.5 * step + 1e-15));
    }

    #[test]
    fn endpoints_map_to_extreme_codes() {
        let map = IntensityMap::new(-1.0, 3.0).unwrap();
        assert_eq!(map.encode(-1.0), 0);
        assert_eq!(map.encode(3.0), MAX_CODE);
        assert_eq!(map.encode(10.0), MAX_CODE);
        assert_eq!(map.encode(1.0), 32768);
    }

    #[test]
    fn flat_frame_gets_a_valid_range() {
        let map = IntensityMap::fit(Array2::from_elem((2, 2), 0.5).iter());
        assert!(map.hi > map.lo);
    }

    #[test]
    fn magnitude_folds_sign() {
        let (mag, map) = magnitude_frame(&ndarray::array![[-2.0, 1.0], [0.0, 2.0]]);
        assert_eq!(mag, ndarray::array![[2.0, 1.0], [0.0, 2.0]]);
        assert_eq!(map.hi, 2.0);
    }
}
