//! Two-dimensional DFT on row-major frames.
//!
//! Convention: the forward transform is unnormalized and the inverse carries
//! the `1/(rows*cols)` factor, so `ifft2(fft2(x)) == x` and the transform of
//! a circular convolution is the product of the transforms.

use std::sync::Arc;

use ndarray::{Array2, ArrayView2, Axis};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Cached row and column plans for one frame size.
#[derive(Clone)]
pub struct Fft2 {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish()
    }
}

impl Fft2 {
    pub fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            rows,
            cols,
            row_fwd: planner.plan_fft_forward(cols),
            row_inv: planner.plan_fft_inverse(cols),
            col_fwd: planner.plan_fft_forward(rows),
            col_inv: planner.plan_fft_inverse(rows),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn transform(&self, buf: &mut Array2<Complex64>, inverse: bool) {
        debug_assert_eq!(buf.dim(), (self.rows, self.cols));
        let (row_plan, col_plan) = if inverse {
            (&self.row_inv, &self.col_inv)
        } else {
            (&self.row_fwd, &self.col_fwd)
        };
        for mut row in buf.axis_iter_mut(Axis(0)) {
            row_plan.process(row.as_slice_mut().expect("row-major frame"));
        }
        let mut scratch = vec![Complex64::default(); self.rows];
        for mut col in buf.axis_iter_mut(Axis(1)) {
            for (s, v) in scratch.iter_mut().zip(col.iter()) {
                *s = *v;
            }
            col_plan.process(&mut scratch);
            for (v, s) in col.iter_mut().zip(scratch.iter()) {
                *v = *s;
            }
        }
        if inverse {
            let scale = 1.0 / (self.rows * self.cols) as f64;
            buf.mapv_inplace(|v| v * scale);
        }
    }

    pub fn forward_complex(&self, buf: &mut Array2<Complex64>) {
        self.transform(buf, false);
    }

    pub fn inverse_complex(&self, buf: &mut Array2<Complex64>) {
        self.transform(buf, true);
    }

    pub fn forward(&self, frame: ArrayView2<f64>) -> Array2<Complex64> {
        let mut buf = frame.mapv(|v| Complex64::new(v, 0.0));
        if !buf.is_standard_layout() {
            buf = buf.as_standard_layout().to_owned();
        }
        self.transform(&mut buf, false);
        buf
    }

    /// Inverse transform keeping only the real part.
    pub fn inverse_real(&self, mut spectrum: Array2<Complex64>) -> Array2<f64> {
        self.transform(&mut spectrum, true);
        spectrum.mapv(|v| v.re)
    }

    /// Inverse transform returning the full complex result.
    pub fn inverse(&self, mut spectrum: Array2<Complex64>) -> Array2<Complex64> {
        self.transform(&mut spectrum, true);
        spectrum
    }
}
