//! Separable natural cubic spline upsampling of low-rate, low-resolution
//! cubes back to the scene grid.
//!
//! Each coarse sample sits at the center of the fine block it summarizes:
//! coarse index `l` maps to fine coordinate `l*d + (d-1)/2` along an axis
//! with factor `d`, and exposure block `k` maps to frame `k*B + (B-1)/2`.
//! Outside the sampled span the spline continues linearly, which is the
//! natural end condition's own extension.

use ndarray::{Array2, Array3, Axis};

use crate::error::{CakeError, Result};
use crate::geometry::SamplingGeometry;
use crate::video::{check_shape, VideoCube};

/// Second derivatives of the natural cubic spline through `(x, y)`.
fn natural_second_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let s = x.len();
    let mut m = vec![0.0; s];
    if s < 3 {
        return m;
    }
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let k = s - 2;
    let mut diag = vec![0.0; k];
    let mut upper = vec![0.0; k];
    let mut rhs = vec![0.0; k];
    for i in 1..=k {
        diag[i - 1] = 2.0 * (h[i - 1] + h[i]);
        upper[i - 1] = h[i];
        rhs[i - 1] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
    }
    // Thomas algorithm; the lower diagonal entry of row i is h[i].
    for i in 1..k {
        let w = h[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    m[k] = rhs[k - 1] / diag[k - 1];
    for i in (1..k).rev() {
        m[i] = (rhs[i - 1] - upper[i - 1] * m[i + 1]) / diag[i - 1];
    }
    m
}

/// Evaluates the natural cubic spline through `(x, y)` at `q`.
pub fn natural_spline_eval(x: &[f64], y: &[f64], q: f64) -> f64 {
    let s = x.len();
    match s {
        0 => return 0.0,
        1 => return y[0],
        _ => {}
    }
    let m = natural_second_derivatives(x, y);
    if q <= x[0] {
        let h = x[1] - x[0];
        let slope = (y[1] - y[0]) / h - (2.0 * m[0] + m[1]) * h / 6.0;
        return y[0] + slope * (q - x[0]);
    }
    if q >= x[s - 1] {
        let h = x[s - 1] - x[s - 2];
        let slope = (y[s - 1] - y[s - 2]) / h + (m[s - 2] + 2.0 * m[s - 1]) * h / 6.0;
        return y[s - 1] + slope * (q - x[s - 1]);
    }
    let i = x.partition_point(|&v| v <= q).saturating_sub(1).min(s - 2);
    let h = x[i + 1] - x[i];
    let (a, b) = (x[i + 1] - q, q - x[i]);
    m[i] * a.powi(3) / (6.0 * h)
        + m[i + 1] * b.powi(3) / (6.0 * h)
        + (y[i] - m[i] * h * h / 6.0) * a / h
        + (y[i + 1] - m[i + 1] * h * h / 6.0) * b / h
}

/// Linear map from samples at `x` to spline values at `queries`.
pub fn spline_matrix(x: &[f64], queries: &[f64]) -> Array2<f64> {
    let s = x.len();
    let mut p = Array2::zeros((queries.len(), s));
    let mut e = vec![0.0; s];
    for j in 0..s {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        for (qi, &q) in queries.iter().enumerate() {
            p[[qi, j]] = natural_spline_eval(x, &e, q);
        }
    }
    p
}

fn centers(count: usize, factor: usize) -> Vec<f64> {
    (0..count).map(|l| (l * factor) as f64 + (factor as f64 - 1.0) / 2.0).collect()
}

fn grid(count: usize) -> Vec<f64> {
    (0..count).map(|i| i as f64).collect()
}

/// Applies `p` along `axis` of a cube.
fn apply_along(cube: &Array3<f64>, axis: usize, p: &Array2<f64>) -> Array3<f64> {
    let mut shape = [cube.shape()[0], cube.shape()[1], cube.shape()[2]];
    shape[axis] = p.nrows();
    let mut out = Array3::zeros(shape);
    for (mut o, i) in out.lanes_mut(Axis(axis)).into_iter().zip(cube.lanes(Axis(axis))) {
        o.assign(&p.dot(&i));
    }
    out
}

/// Cubic-spline interpolation of a `M x m1 x m2` cube to `N x n1 x n2`.
///
/// With a single exposure block the temporal interpolation reduces to
/// replication.
pub fn upsample_coarse(coarse: &VideoCube, geometry: &SamplingGeometry) -> Result<VideoCube> {
    check_shape(&coarse.data, geometry.measurement_shape())?;
    if coarse.data.is_empty() {
        return Err(CakeError::InvalidArgument("empty coarse cube".into()));
    }
    let g = geometry;
    let pt = spline_matrix(&centers(g.blocks(), g.block_len), &grid(g.frames));
    let pr = spline_matrix(&centers(g.m1(), g.d1), &grid(g.n1));
    let pc = spline_matrix(&centers(g.m2(), g.d2), &grid(g.n2));
    let up = apply_along(&coarse.data, 0, &pt);
    let up = apply_along(&up, 1, &pr);
    let up = apply_along(&up, 2, &pc);
    Ok(VideoCube::scene(up, g.block_len))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    /// Natural spline from the full 4(s-1) coefficient system.
    fn dense_spline(x: &[f64], y: &[f64], q: f64) -> f64 {
        let s = x.len();
        let k = s - 1;
        let mut a = DMatrix::<f64>::zeros(4 * k, 4 * k);
        let mut b = DVector::<f64>::zeros(4 * k);
        let mut row = 0;
        // Piece i: c0 + c1 (q - x_i) + c2 (q - x_i)^2 + c3 (q - x_i)^3.
        for i in 0..k {
            let h = x[i + 1] - x[i];
            a[(row, 4 * i)] = 1.0;
            b[row] = y[i];
            row += 1;
            for p in 0..4 {
                a[(row, 4 * i + p)] = h.powi(p as i32);
            }
            b[row] = y[i + 1];
            row += 1;
            if i + 1 < k {
                a[(row, 4 * i + 1)] = 1.0;
                a[(row, 4 * i + 2)] = 2.0 * h;
                a[(row, 4 * i + 3)] = 3.0 * h * h;
                a[(row, 4 * (i + 1) + 1)] = -1.0;
                row += 1;
                a[(row, 4 * i + 2)] = 2.0;
                a[(row, 4 * i + 3)] = 6.0 * h;
                a[(row, 4 * (i + 1) + 2)] = -2.0;
                row += 1;
            }
        }
        a[(row, 2)] = 2.0;
        row += 1;
        let h = x[k] - x[k - 1];
        a[(row, 4 * (k - 1) + 2)] = 2.0;
        a[(row, 4 * (k - 1) + 3)] = 6.0 * h;
        let c = a.lu().solve(&b).unwrap();
        let (i, dx) = if q <= x[0] {
            // Linear continuation with the end slope.
            return y[0] + c[1] * (q - x[0]);
        } else if q >= x[k] {
            let h = x[k] - x[k - 1];
            let slope = c[4 * (k - 1) + 1] + 2.0 * c[4 * (k - 1) + 2] * h + 3.0 * c[4 * (k - 1) + 3] * h * h;
            return y[k] + slope * (q - x[k]);
        } else {
            let i = (0..k).rev().find(|&i| x[i] <= q).unwrap();
            (i, q - x[i])
        };
        c[4 * i] + c[4 * i + 1] * dx + c[4 * i + 2] * dx * dx + c[4 * i + 3] * dx.powi(3)
    }

    #[test]
    fn matches_dense_spline_oracle() {
        let x = [0.5, 2.5, 4.5, 6.5, 8.5, 10.5];
        let y = [0.1, 0.9, -0.3, 0.4, 0.4, 1.2];
        for i in 0..12 {
            let q = i as f64 - 0.25;
            let a = natural_spline_eval(&x, &y, q);
            let b = dense_spline(&x, &y, q);
            assert!((a - b).abs() < 1e-12, "q={q}: {a} vs {b}");
        }
    }

    #[test]
    fn reproduces_linear_functions() {
        let x = [1.5, 5.5, 9.5, 13.5];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.3 * v).collect();
        for q in [0.0, 3.0, 7.7, 15.0] {
            assert!((natural_spline_eval(&x, &y, q) - (2.0 - 0.3 * q)).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_cube_stays_constant() {
        let g = SamplingGeometry::new(8, 12, 8, 2, 3, 4).unwrap();
        let coarse = VideoCube::measurement(Array3::from_elem(g.measurement_shape(), 0.42), 4);
        let up = upsample_coarse(&coarse, &g).unwrap();
        assert_eq!(up.data.dim(), g.scene_shape());
        assert!(up.data.iter().all(|v| (v - 0.42).abs() < 1e-12));
    }

    #[test]
    fn bilinear_ramp_is_reproduced() {
        let g = SamplingGeometry::new(8, 8, 4, 2, 2, 2).unwrap();
        let f = |y: f64, x: f64| 0.2 + 0.05 * x - 0.03 * y + 0.01 * x * y;
        let coarse = Array3::from_shape_fn(g.measurement_shape(), |(_, l1, l2)| {
            f(l1 as f64 * 2.0 + 0.5, l2 as f64 * 2.0 + 0.5)
        });
        let up = upsample_coarse(&VideoCube::measurement(coarse, 2), &g).unwrap();
        for ((_, i, j), v) in up.data.indexed_iter() {
            assert!((v - f(i as f64, j as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn single_block_replicates_in_time() {
        let g = SamplingGeometry::new(4, 4, 3, 2, 2, 3).unwrap();
        let coarse = Array3::from_shape_fn(g.measurement_shape(), |(_, i, j)| (i + 2 * j) as f64);
        let up = upsample_coarse(&VideoCube::measurement(coarse, 3), &g).unwrap();
        for t in 1..3 {
            assert_eq!(up.data.index_axis(Axis(0), t), up.data.index_axis(Axis(0), 0));
        }
    }

    #[test]
    fn moving_square_matches_pointwise_oracle() {
        let g = SamplingGeometry::new(8, 8, 8, 2, 2, 2).unwrap();
        let coarse = Array3::from_shape_fn(g.measurement_shape(), |(k, i, j)| {
            if j == k && (1..3).contains(&i) {
                1.0
            } else {
                0.0
            }
        });
        let up = upsample_coarse(&VideoCube::measurement(coarse.clone(), 2), &g).unwrap();
        let xs = |count: usize, f: usize| centers(count, f);
        // Oracle: evaluate the tensor spline pointwise with the dense solver.
        for &(t, i, j) in &[(0usize, 0usize, 0usize), (3, 2, 5), (5, 7, 1), (7, 4, 6)] {
            let mut tmp_t = vec![0.0; 4];
            for l2 in 0..4 {
                let mut tmp_r = vec![0.0; 4];
                for l1 in 0..4 {
                    let series: Vec<f64> = (0..4).map(|k| coarse[[k, l1, l2]]).collect();
                    tmp_r[l1] = dense_spline(&xs(4, 2), &series, t as f64);
                }
                tmp_t[l2] = dense_spline(&xs(4, 2), &tmp_r, i as f64);
            }
            let expect = dense_spline(&xs(4, 2), &tmp_t, j as f64);
            assert!((up.data[[t, i, j]] - expect).abs() < 1e-12);
        }
    }
}
