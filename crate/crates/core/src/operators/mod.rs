//! Linear maps of the sensing model and the transforms used by the solvers.

mod cake;
mod conv;
mod diff;
mod downsample;
mod tv;
mod wavelet;

use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use cake::{CakeOperator, DenseOperator, IdentityOperator, SensingOperator, DENSE_ENTRY_LIMIT};
pub use conv::{bccb_convolve, circular_convolve_direct};
pub use diff::{diff_to_frames, diff_to_frames_adjoint, frames_to_diff};
pub use downsample::{
    integrate_adjoint, integrate_downsample, random_demod_adjoint, random_demod_downsample, subsample,
    subsample_adjoint, Downsampler, SignSequence,
};
pub use tv::{gradient as tv_gradient, gradient_adjoint as tv_gradient_adjoint, tv_norm, ProxStats, TvProx};
pub use wavelet::{d4_highpass, d4_lowpass, WaveletTransform};

/// Largest eigenvalue of a symmetric positive semidefinite map `x -> K x`
/// by power iteration from a seeded random start.
pub fn power_iteration(
    shape: (usize, usize, usize),
    iterations: usize,
    seed: u64,
    normal: impl Fn(&Array3<f64>) -> Array3<f64>,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array3::from_shape_simple_fn(shape, || rng.random::<f64>() - 0.5);
    let norm = x.mapv(|v| v * v).sum().sqrt();
    x /= norm;
    let mut estimate = 0.0;
    for _ in 0..iterations {
        let y = normal(&x);
        let ny = y.mapv(|v| v * v).sum().sqrt();
        if ny == 0.0 {
            return 0.0;
        }
        estimate = (&x * &y).sum();
        x = y / ny;
    }
    estimate
}

/// Power-iteration estimate of `||A||^2`.
pub fn operator_norm_sq(op: &dyn SensingOperator, iterations: usize, seed: u64) -> f64 {
    power_iteration(op.scene_shape(), iterations, seed, |x| op.adjoint(&op.forward(x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SamplingGeometry;
    use crate::masks::gen_rademacher;

    #[test]
    fn power_iteration_on_diagonal() {
        let d = Array3::from_shape_fn((1, 2, 3), |(_, i, j)| (i * 3 + j + 1) as f64);
        let est = power_iteration((1, 2, 3), 200, 0, |x| x * &d);
        assert!((est - 6.0).abs() < 1e-6);
    }

    #[test]
    fn operator_norm_is_reproducible() {
        let g = SamplingGeometry::new(16, 16, 4, 2, 2, 2).unwrap();
        let op = CakeOperator::with_subsampling(&gen_rademacher(&g, 1)).unwrap();
        let a = operator_norm_sq(&op, 50, 3);
        let b = operator_norm_sq(&op, 50, 3);
        assert_eq!(a, b);
        assert!(a.is_finite() && a > 0.0);
        let dense = DenseOperator::assemble(&op).unwrap();
        let exact = dense.matrix.singular_values().max();
        assert!(a <= exact * exact * (1.0 + 1e-9));
        assert!(a >= 0.9 * exact * exact);
    }
}
