//! Coarse-to-fine Horn–Schunck optical flow with circular boundaries.
//!
//! The flow `(v1, v2)` (horizontal, vertical) is defined on the grid of the
//! second frame and satisfies `next(x) ~ prev(x - v(x))`, the same
//! convention used by the motion operator.

use ndarray::Array2;

use crate::error::{CakeError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HsParams {
    /// Weight of the smoothness term relative to the brightness residual.
    pub smoothness: f64,
    /// Fixed-point iterations per pyramid level.
    pub iterations: usize,
    pub levels: usize,
    /// Re-linearizations (warps) per level.
    pub warps: usize,
}

impl Default for HsParams {
    fn default() -> Self {
        Self {
            smoothness: 0.1,
            iterations: 100,
            levels: 3,
            warps: 1,
        }
    }
}

/// Samples `img` at fractional `(row, col)` with bilinear weights, wrapping.
pub(crate) fn bilinear_weights(r: f64, c: f64, rows: usize, cols: usize) -> [(usize, f64); 4] {
    let (r0, c0) = (r.floor(), c.floor());
    let (fr, fc) = (r - r0, c - c0);
    let i0 = (r0 as i64).rem_euclid(rows as i64) as usize;
    let j0 = (c0 as i64).rem_euclid(cols as i64) as usize;
    let i1 = (i0 + 1) % rows;
    let j1 = (j0 + 1) % cols;
    [
        (i0 * cols + j0, (1.0 - fr) * (1.0 - fc)),
        (i0 * cols + j1, (1.0 - fr) * fc),
        (i1 * cols + j0, fr * (1.0 - fc)),
        (i1 * cols + j1, fr * fc),
    ]
}

/// `out(x) = img(x - v(x))`.
pub fn warp_backward(img: &Array2<f64>, v1: &Array2<f64>, v2: &Array2<f64>) -> Array2<f64> {
    let (rows, cols) = img.dim();
    let flat = img.as_standard_layout();
    let flat = flat.as_slice().expect("standard layout");
    Array2::from_shape_fn((rows, cols), |(i, j)| {
        bilinear_weights(i as f64 - v2[[i, j]], j as f64 - v1[[i, j]], rows, cols)
            .iter()
            .map(|&(k, w)| w * flat[k])
            .sum()
    })
}

fn smooth_121(img: &Array2<f64>) -> Array2<f64> {
    let (r, c) = img.dim();
    let h = Array2::from_shape_fn((r, c), |(i, j)| {
        0.25 * img[[i, (j + c - 1) % c]] + 0.5 * img[[i, j]] + 0.25 * img[[i, (j + 1) % c]]
    });
    Array2::from_shape_fn((r, c), |(i, j)| {
        0.25 * h[[(i + r - 1) % r, j]] + 0.5 * h[[i, j]] + 0.25 * h[[(i + 1) % r, j]]
    })
}

fn decimate(img: &Array2<f64>) -> Array2<f64> {
    let s = smooth_121(img);
    let (r, c) = s.dim();
    Array2::from_shape_fn((r / 2, c / 2), |(i, j)| s[[2 * i, 2 * j]])
}

/// Bilinear upsampling of a flow component onto a grid twice as large,
/// scaling displacements by two.
fn expand_flow(v: &Array2<f64>, rows: usize, cols: usize) -> Array2<f64> {
    let (r, c) = v.dim();
    let flat = v.as_standard_layout();
    let flat = flat.as_slice().expect("standard layout");
    Array2::from_shape_fn((rows, cols), |(i, j)| {
        2.0 * bilinear_weights(i as f64 / 2.0, j as f64 / 2.0, r, c)
            .iter()
            .map(|&(k, w)| w * flat[k])
            .sum::<f64>()
    })
}

/// Horn–Schunck neighborhood average (1/6 edge, 1/12 corner neighbors).
fn hs_average(v: &Array2<f64>) -> Array2<f64> {
    let (r, c) = v.dim();
    Array2::from_shape_fn((r, c), |(i, j)| {
        let (u, d) = ((i + r - 1) % r, (i + 1) % r);
        let (l, rt) = ((j + c - 1) % c, (j + 1) % c);
        (v[[u, j]] + v[[d, j]] + v[[i, l]] + v[[i, rt]]) / 6.0
            + (v[[u, l]] + v[[u, rt]] + v[[d, l]] + v[[d, rt]]) / 12.0
    })
}

fn central_differences(img: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let (r, c) = img.dim();
    let ix = Array2::from_shape_fn((r, c), |(i, j)| 0.5 * (img[[i, (j + 1) % c]] - img[[i, (j + c - 1) % c]]));
    let iy = Array2::from_shape_fn((r, c), |(i, j)| 0.5 * (img[[(i + 1) % r, j]] - img[[(i + r - 1) % r, j]]));
    (ix, iy)
}

fn refine(
    prev: &Array2<f64>,
    next: &Array2<f64>,
    v1: &mut Array2<f64>,
    v2: &mut Array2<f64>,
    params: &HsParams,
) {
    for _ in 0..params.warps.max(1) {
        let warped = warp_backward(prev, v1, v2);
        let mean = (&warped + next) * 0.5;
        let (ix, iy) = central_differences(&mean);
        let it = next - &warped;
        let (u0, w0) = (v1.clone(), v2.clone());
        let denom = (&ix * &ix) + (&iy * &iy) + params.smoothness;
        for _ in 0..params.iterations {
            let ub = hs_average(v1);
            let vb = hs_average(v2);
            let mut nu = ub.clone();
            let mut nv = vb.clone();
            ndarray::Zip::indexed(&mut nu).and(&mut nv).for_each(|idx, a, b| {
                let r = ix[idx] * (ub[idx] - u0[idx]) + iy[idx] * (vb[idx] - w0[idx]) + it[idx];
                let k = r / denom[idx];
                *a -= ix[idx] * k;
                *b -= iy[idx] * k;
            });
            *v1 = nu;
            *v2 = nv;
        }
    }
}

/// Flow from `prev` to `next`.
pub fn estimate_flow(prev: &Array2<f64>, next: &Array2<f64>, params: &HsParams) -> Result<(Array2<f64>, Array2<f64>)> {
    if prev.dim() != next.dim() {
        return Err(CakeError::ShapeMismatch {
            expected: format!("{:?}", prev.dim()),
            actual: format!("{:?}", next.dim()),
        });
    }
    if !(params.smoothness > 0.0) {
        return Err(CakeError::InvalidArgument("smoothness weight must be positive".into()));
    }
    let mut pyramid = vec![(prev.clone(), next.clone())];
    while pyramid.len() < params.levels.max(1) {
        let (p, n) = pyramid.last().expect("non-empty");
        let (r, c) = p.dim();
        if r % 2 != 0 || c % 2 != 0 || r < 8 || c < 8 {
            break;
        }
        let coarser = (decimate(p), decimate(n));
        pyramid.push(coarser);
    }
    let (r, c) = pyramid.last().expect("non-empty").0.dim();
    let mut v1 = Array2::zeros((r, c));
    let mut v2 = Array2::zeros((r, c));
    for (level, (p, n)) in pyramid.iter().enumerate().rev() {
        let (r, c) = p.dim();
        if v1.dim() != (r, c) {
            v1 = expand_flow(&v1, r, c);
            v2 = expand_flow(&v2, r, c);
        }
        refine(p, n, &mut v1, &mut v2, params);
        let _ = level;
    }
    Ok((v1, v2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    pub(crate) fn texture(r: usize, c: usize) -> Array2<f64> {
        Array2::from_shape_fn((r, c), |(i, j)| {
            let (x, y) = (j as f64 / c as f64, i as f64 / r as f64);
            0.5 + 0.2 * (2.0 * PI * (2.0 * x + y)).sin() + 0.15 * (2.0 * PI * (3.0 * y - x)).cos()
                + 0.1 * (2.0 * PI * (5.0 * x + 4.0 * y)).sin()
        })
    }

    fn shift(img: &Array2<f64>, dy: usize, dx: usize) -> Array2<f64> {
        let (r, c) = img.dim();
        Array2::from_shape_fn((r, c), |(i, j)| img[[(i + r - dy) % r, (j + c - dx) % c]])
    }

    fn mean(a: &Array2<f64>) -> f64 {
        a.mean().unwrap()
    }

    #[test]
    fn identical_frames_give_zero_flow() {
        let a = texture(32, 32);
        let (v1, v2) = estimate_flow(&a, &a, &HsParams::default()).unwrap();
        assert!(v1.iter().chain(v2.iter()).all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn constant_frames_give_zero_flow() {
        let a = Array2::from_elem((16, 16), 0.3);
        let b = Array2::from_elem((16, 16), 0.7);
        let (v1, v2) = estimate_flow(&a, &b, &HsParams::default()).unwrap();
        assert!(v1.iter().chain(v2.iter()).all(|&v| v == 0.0));
    }

    #[test]
    fn recovers_unit_translation() {
        let a = texture(32, 32);
        let b = shift(&a, 0, 1);
        let (v1, v2) = estimate_flow(&a, &b, &HsParams::default()).unwrap();
        let (m1, m2) = (mean(&v1), mean(&v2.mapv(f64::abs)));
        assert!((0.75..=1.25).contains(&m1), "{m1}");
        assert!(m2 < 0.25, "{m2}");
    }

    #[test]
    fn brightness_change_characterization() {
        // A global gain is not motion; the estimate stays well below a pixel.
        let a = texture(32, 32);
        let b = &a * 1.1;
        let (v1, v2) = estimate_flow(&a, &b, &HsParams::default()).unwrap();
        let mag = (&v1 * &v1 + &v2 * &v2).mapv(f64::sqrt);
        assert!(mag.mean().unwrap() < 0.5, "{}", mag.mean().unwrap());
    }

    #[test]
    fn translation_equivariance() {
        let params = HsParams { levels: 2, iterations: 40, ..HsParams::default() };
        let a = texture(16, 16);
        let b = warp_backward(&a, &Array2::from_elem((16, 16), 0.6), &Array2::from_elem((16, 16), -0.3));
        let (u1, u2) = estimate_flow(&a, &b, &params).unwrap();
        let (s1, s2) = estimate_flow(&shift(&a, 2, 4), &shift(&b, 2, 4), &params).unwrap();
        let (e1, e2) = (shift(&u1, 2, 4), shift(&u2, 2, 4));
        for (x, y) in s1.iter().zip(e1.iter()).chain(s2.iter().zip(e2.iter())) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn warp_with_integer_flow_is_shift() {
        let a = texture(8, 8);
        let w = warp_backward(&a, &Array2::from_elem((8, 8), 2.0), &Array2::from_elem((8, 8), 1.0));
        assert_eq!(w, shift(&a, 1, 2));
    }
}
