//! Difference-frame transform `theta_1 = f_1, theta_t = f_t - f_{t-1}` and
//! its inverse `f = (L (x) I) theta`, a cumulative sum over time.

use ndarray::{Array3, Axis, Zip};

pub fn frames_to_diff(frames: &Array3<f64>) -> Array3<f64> {
    let mut theta = frames.clone();
    let nf = frames.len_of(Axis(0));
    for t in 1..nf {
        let mut cur = theta.index_axis_mut(Axis(0), t);
        cur -= &frames.index_axis(Axis(0), t - 1);
    }
    theta
}

/// `f_t = sum_{i <= t} theta_i`.
pub fn diff_to_frames(theta: &Array3<f64>) -> Array3<f64> {
    let mut f = theta.clone();
    let nf = theta.len_of(Axis(0));
    for t in 1..nf {
        let (head, mut tail) = f.view_mut().split_at(Axis(0), t);
        let prev = head.index_axis(Axis(0), t - 1);
        let mut cur = tail.index_axis_mut(Axis(0), 0);
        Zip::from(&mut cur).and(&prev).for_each(|c, &p| *c += p);
    }
    f
}

/// Transpose of [`diff_to_frames`]: `out_t = sum_{i >= t} z_i`.
pub fn diff_to_frames_adjoint(z: &Array3<f64>) -> Array3<f64> {
    let mut out = z.clone();
    let nf = z.len_of(Axis(0));
    for t in (0..nf.saturating_sub(1)).rev() {
        let (mut head, tail) = out.view_mut().split_at(Axis(0), t + 1);
        let next = tail.index_axis(Axis(0), 0);
        let mut cur = head.index_axis_mut(Axis(0), t);
        Zip::from(&mut cur).and(&next).for_each(|c, &n| *c += n);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(seed: u64) -> Array3<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array3::from_shape_simple_fn((5, 3, 4), || rng.random::<f64>() - 0.5)
    }

    #[test]
    fn static_video_has_single_nonzero_difference() {
        let frame = Array2::from_shape_fn((3, 4), |(i, j)| (i + 2 * j) as f64);
        let f = Array3::from_shape_fn((4, 3, 4), |(_, i, j)| frame[[i, j]]);
        let theta = frames_to_diff(&f);
        assert_eq!(theta.index_axis(Axis(0), 0), frame);
        assert!(theta.slice(ndarray::s![1.., .., ..]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn first_difference_propagates() {
        let mut theta = Array3::zeros((4, 2, 2));
        theta.index_axis_mut(Axis(0), 0).assign(&ndarray::array![[1.0, 2.0], [3.0, 4.0]]);
        let f = diff_to_frames(&theta);
        for t in 0..4 {
            assert_eq!(f.index_axis(Axis(0), t), theta.index_axis(Axis(0), 0));
        }
    }

    #[test]
    fn round_trips() {
        let x = random(1);
        let a = diff_to_frames(&frames_to_diff(&x));
        let b = frames_to_diff(&diff_to_frames(&x));
        for ((u, v), w) in a.iter().zip(b.iter()).zip(x.iter()) {
            assert!((u - w).abs() < 1e-12 && (v - w).abs() < 1e-12);
        }
    }

    #[test]
    fn adjoint_identity() {
        let x = random(2);
        let z = random(3);
        let lhs = (&diff_to_frames(&x) * &z).sum();
        let rhs = (&x * &diff_to_frames_adjoint(&z)).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
