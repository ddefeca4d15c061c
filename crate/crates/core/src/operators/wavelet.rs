//! Orthonormal 2-D Daubechies wavelet transform (4-tap filter) with periodic
//! boundaries.
//!
//! Coefficients are stored in the usual Mallat layout: after each level the
//! approximation occupies the top-left quarter of the active region.

use ndarray::{Array2, Array3, Axis};

use crate::error::{CakeError, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Low-pass analysis taps.
pub fn d4_lowpass() -> [f64; 4] {
    let s = 4.0 * std::f64::consts::SQRT_2;
    [(1.0 + SQRT3) / s, (3.0 + SQRT3) / s, (3.0 - SQRT3) / s, (1.0 - SQRT3) / s]
}

/// Quadrature-mirror high-pass taps `g_i = (-1)^i h_{3-i}`.
pub fn d4_highpass() -> [f64; 4] {
    let h = d4_lowpass();
    [h[3], -h[2], h[1], -h[0]]
}

fn analyze_1d(x: &[f64], out: &mut [f64]) {
    let len = x.len();
    let half = len / 2;
    let (h, g) = (d4_lowpass(), d4_highpass());
    for k in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        for i in 0..4 {
            let v = x[(2 * k + i) % len];
            a += h[i] * v;
            d += g[i] * v;
        }
        out[k] = a;
        out[half + k] = d;
    }
}

fn synthesize_1d(c: &[f64], out: &mut [f64]) {
    let len = c.len();
    let half = len / 2;
    let (h, g) = (d4_lowpass(), d4_highpass());
    out.iter_mut().for_each(|v| *v = 0.0);
    for k in 0..half {
        let (a, d) = (c[k], c[half + k]);
        for i in 0..4 {
            out[(2 * k + i) % len] += h[i] * a + g[i] * d;
        }
    }
}

fn trailing_twos(mut n: usize) -> usize {
    let mut k = 0;
    while n > 1 && n % 2 == 0 {
        n /= 2;
        k += 1;
    }
    k
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WaveletTransform {
    rows: usize,
    cols: usize,
    levels: usize,
}

impl WaveletTransform {
    /// Deepest decomposition allowed for a frame size.
    pub fn max_levels(rows: usize, cols: usize) -> usize {
        trailing_twos(rows).min(trailing_twos(cols))
    }

    pub fn new(rows: usize, cols: usize, levels: usize) -> Result<Self> {
        let max = Self::max_levels(rows, cols);
        if levels > max {
            return Err(CakeError::Dimension(format!(
                "{rows}x{cols} frame supports at most {max} dyadic levels, {levels} requested"
            )));
        }
        Ok(Self { rows, cols, levels })
    }

    pub fn with_max_levels(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            levels: Self::max_levels(rows, cols),
        }
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    fn check(&self, x: &Array2<f64>) -> Result<()> {
        if x.dim() != (self.rows, self.cols) {
            return Err(CakeError::ShapeMismatch {
                expected: format!("{:?}", (self.rows, self.cols)),
                actual: format!("{:?}", x.dim()),
            });
        }
        Ok(())
    }

    pub fn forward(&self, frame: &Array2<f64>) -> Result<Array2<f64>> {
        self.check(frame)?;
        Ok(self.forward_unchecked(frame))
    }

    pub fn inverse(&self, coeffs: &Array2<f64>) -> Result<Array2<f64>> {
        self.check(coeffs)?;
        Ok(self.inverse_unchecked(coeffs))
    }

    fn forward_unchecked(&self, frame: &Array2<f64>) -> Array2<f64> {
        let mut c = frame.to_owned();
        let (mut r, mut q) = (self.rows, self.cols);
        let mut buf = vec![0.0; r.max(q)];
        let mut out = vec![0.0; r.max(q)];
        for _ in 0..self.levels {
            for i in 0..r {
                for j in 0..q {
                    buf[j] = c[[i, j]];
                }
                analyze_1d(&buf[..q], &mut out[..q]);
                for j in 0..q {
                    c[[i, j]] = out[j];
                }
            }
            for j in 0..q {
                for i in 0..r {
                    buf[i] = c[[i, j]];
                }
                analyze_1d(&buf[..r], &mut out[..r]);
                for i in 0..r {
                    c[[i, j]] = out[i];
                }
            }
            r /= 2;
            q /= 2;
        }
        c
    }

    fn inverse_unchecked(&self, coeffs: &Array2<f64>) -> Array2<f64> {
        let mut c = coeffs.to_owned();
        let mut buf = vec![0.0; self.rows.max(self.cols)];
        let mut out = vec![0.0; self.rows.max(self.cols)];
        for level in (0..self.levels).rev() {
            let (r, q) = (self.rows >> level, self.cols >> level);
            for j in 0..q {
                for i in 0..r {
                    buf[i] = c[[i, j]];
                }
                synthesize_1d(&buf[..r], &mut out[..r]);
                for i in 0..r {
                    c[[i, j]] = out[i];
                }
            }
            for i in 0..r {
                for j in 0..q {
                    buf[j] = c[[i, j]];
                }
                synthesize_1d(&buf[..q], &mut out[..q]);
                for j in 0..q {
                    c[[i, j]] = out[j];
                }
            }
        }
        c
    }

    /// Frame-by-frame analysis of a cube.
    pub fn forward_cube(&self, cube: &Array3<f64>) -> Array3<f64> {
        self.map_cube(cube, |f| self.forward_unchecked(f))
    }

    pub fn inverse_cube(&self, cube: &Array3<f64>) -> Array3<f64> {
        self.map_cube(cube, |f| self.inverse_unchecked(f))
    }

    fn map_cube(&self, cube: &Array3<f64>, f: impl Fn(&Array2<f64>) -> Array2<f64> + Sync) -> Array3<f64> {
        assert_eq!((cube.len_of(Axis(1)), cube.len_of(Axis(2))), (self.rows, self.cols));
        let frames = crate::par::map_indices(cube.len_of(Axis(0)), |t| f(&cube.index_axis(Axis(0), t).to_owned()));
        crate::video::frame_stack(frames)
    }
}
