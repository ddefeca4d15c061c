use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

use crate::error::{CakeError, Result};
use crate::fft::Fft2;

/// Circular 2-D convolution `frame * kernel` through the DFT.
pub fn bccb_convolve(frame: ArrayView2<f64>, kernel: ArrayView2<f64>) -> Result<Array2<f64>> {
    if frame.dim() != kernel.dim() {
        return Err(CakeError::ShapeMismatch {
            expected: format!("{:?}", frame.dim()),
            actual: format!("{:?}", kernel.dim()),
        });
    }
    let (r, c) = frame.dim();
    let fft = Fft2::new(r, c);
    let transfer = fft.forward(kernel);
    Ok(convolve_with_transfer(&fft, frame, &transfer))
}

pub(crate) fn convolve_with_transfer(
    fft: &Fft2,
    frame: ArrayView2<f64>,
    transfer: &Array2<Complex64>,
) -> Array2<f64> {
    let mut spec = fft.forward(frame);
    spec.zip_mut_with(transfer, |a, b| *a *= b);
    fft.inverse_real(spec)
}

/// Circular cross-correlation, the adjoint of convolution with the same kernel.
pub(crate) fn correlate_with_transfer(
    fft: &Fft2,
    frame: ArrayView2<f64>,
    transfer: &Array2<Complex64>,
) -> Array2<f64> {
    let mut spec = fft.forward(frame);
    spec.zip_mut_with(transfer, |a, b| *a *= b.conj());
    fft.inverse_real(spec)
}

/// Direct `O(n^2)` circular convolution: `out[i] = sum_j kernel[i - j] frame[j]`.
pub fn circular_convolve_direct(frame: ArrayView2<f64>, kernel: ArrayView2<f64>) -> Array2<f64> {
    let (r, c) = frame.dim();
    Array2::from_shape_fn((r, c), |(i1, i2)| {
        let mut acc = 0.0;
        for j1 in 0..r {
            for j2 in 0..c {
                acc += kernel[[(i1 + r - j1) % r, (i2 + c - j2) % c]] * frame[[j1, j2]];
            }
        }
        acc
    })
}
