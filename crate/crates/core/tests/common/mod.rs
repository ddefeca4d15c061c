//! Dense reference implementations shared by the integration tests.
//!
//! Everything here is written against plain matrices built from the mask
//! definitions, so it shares no code path with the FFT operators or the
//! library solvers it checks.

#![allow(dead_code)]

use cake_core::flow::{FlowField, MotionOperator};
use cake_core::geometry::SamplingGeometry;
use cake_core::masks::{MaskFamily, MaskSequence};
use cake_core::operators::{frames_to_diff, CakeOperator, SensingOperator, WaveletTransform};
use cake_core::solvers::{
    reconstruct_optical_flow, reconstruct_tv_l1, FlowConstrainedParams, LinearMap, StackedFlowMap, TvL1Params,
};
use cake_core::video::VideoCube;
use nalgebra::{DMatrix, DVector};
use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sensing matrix with one row per detector pixel and one column per scene
/// pixel (frame-major). Detector pixel `(k, l1, l2)` reads the circular
/// convolution `h_t * f_t` at `(l1 d1 + d1 - 1, l2 d2 + d2 - 1)`, summed over
/// the frames `t` of block `k`.
pub fn dense_cake_matrix(masks: &MaskSequence) -> DMatrix<f64> {
    let g = &masks.geometry;
    let (n1, n2, m1, m2) = (g.n1, g.n2, g.m1(), g.m2());
    let mut a = DMatrix::zeros(g.blocks() * m1 * m2, g.frames * n1 * n2);
    for t in 0..g.frames {
        let k = t / g.block_len;
        let h = &masks.masks[t];
        for l1 in 0..m1 {
            for l2 in 0..m2 {
                let x1 = l1 * g.d1 + g.d1 - 1;
                let x2 = l2 * g.d2 + g.d2 - 1;
                let row = (k * m1 + l1) * m2 + l2;
                for u1 in 0..n1 {
                    for u2 in 0..n2 {
                        let col = (t * n1 + u1) * n2 + u2;
                        a[(row, col)] = h[[(x1 + n1 - u1) % n1, (x2 + n2 - u2) % n2]];
                    }
                }
            }
        }
    }
    a
}

/// Circulant matrix of a 2-D kernel: `[H]_{x,u} = h[x - u]`.
pub fn dense_circulant(h: &ndarray::Array2<f64>) -> DMatrix<f64> {
    let (r, c) = h.dim();
    DMatrix::from_fn(r * c, r * c, |x, u| {
        let (x1, x2, u1, u2) = (x / c, x % c, u / c, u % c);
        h[[(x1 + r - u1) % r, (x2 + c - u2) % c]]
    })
}

/// Difference-frame objective on a dense problem.
pub struct DenseTvL1 {
    pub a: DMatrix<f64>,
    pub y: DVector<f64>,
    pub frames: usize,
    pub rows: usize,
    pub cols: usize,
    pub tau_tv: f64,
    pub tau_l1: f64,
}

impl DenseTvL1 {
    fn plane(&self) -> usize {
        self.rows * self.cols
    }

    /// Running sum over frames.
    fn frames_of(&self, theta: &DVector<f64>) -> DVector<f64> {
        let p = self.plane();
        let mut f = theta.clone();
        for k in p..f.len() {
            f[k] += f[k - p];
        }
        f
    }

    fn gradient_at(&self, x: &[f64], i: usize, j: usize) -> (f64, f64) {
        let (r, c) = (self.rows, self.cols);
        let v = x[i * c + j];
        (x[i * c + (j + 1) % c] - v, x[((i + 1) % r) * c + j] - v)
    }

    pub fn objective(&self, theta: &DVector<f64>) -> f64 {
        let r = &self.a * self.frames_of(theta) - &self.y;
        let first = &theta.as_slice()[..self.plane()];
        let mut tv = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let (h, v) = self.gradient_at(first, i, j);
                tv += (h * h + v * v).sqrt();
            }
        }
        let l1: f64 = theta.as_slice()[self.plane()..].iter().map(|v| v.abs()).sum();
        0.5 * r.norm_squared() + self.tau_tv * tv + self.tau_l1 * l1
    }

    pub fn subgradient(&self, theta: &DVector<f64>) -> DVector<f64> {
        let p = self.plane();
        let (r, c) = (self.rows, self.cols);
        let gf = self.a.transpose() * (&self.a * self.frames_of(theta) - &self.y);
        // Transpose of the running sum: suffix sums.
        let mut g = gf.clone();
        for k in (0..g.len() - p).rev() {
            g[k] += g[k + p];
        }
        let first = &theta.as_slice()[..p];
        for i in 0..r {
            for j in 0..c {
                let (h, v) = self.gradient_at(first, i, j);
                let n = (h * h + v * v).sqrt();
                if n > 0.0 {
                    let (h, v) = (self.tau_tv * h / n, self.tau_tv * v / n);
                    g[i * c + (j + 1) % c] += h;
                    g[((i + 1) % r) * c + j] += v;
                    g[i * c + j] -= h + v;
                }
            }
        }
        for k in p..g.len() {
            g[k] += self.tau_l1 * theta[k].signum() * (theta[k] != 0.0) as u8 as f64;
        }
        g
    }

    /// Best objective seen by subgradient descent with square-summable steps,
    /// started from zero.
    pub fn subgradient_oracle(&self, iterations: usize) -> (f64, DVector<f64>) {
        let lipschitz = {
            let s = self.a.clone().svd(false, false).singular_values;
            let top = s.max();
            top * top * (self.frames * self.frames) as f64
        };
        let mut theta = DVector::zeros(self.a.ncols());
        let mut best = (self.objective(&theta), theta.clone());
        for k in 0..iterations {
            let g = self.subgradient(&theta);
            let step = 1.0 / (lipschitz * (1.0 + k as f64 / 1000.0).powf(0.75));
            theta -= g * step;
            let f = self.objective(&theta);
            if f < best.0 {
                best = (f, theta.clone());
            }
        }
        best
    }
}

/// `min ||c||_1 s.t. ||Phi c - b|| <= sigma` by a primal log-barrier method
/// on the split form `-u <= c <= u`, with Newton steps reduced to the `c`
/// block. Returns the optimal value and point.
pub fn barrier_bpdn(phi: &DMatrix<f64>, b: &DVector<f64>, sigma: f64) -> (f64, DVector<f64>) {
    let n = phi.ncols();
    // Strictly feasible start: the minimum-norm exact fit.
    let gram = phi * phi.transpose();
    let c0 = phi.transpose() * gram.cholesky().expect("full row rank").solve(b);
    let mut c = c0;
    let mut u = c.map(|v| v.abs() + 1.0);
    let barrier = |c: &DVector<f64>, u: &DVector<f64>, t: f64| -> f64 {
        let r = phi * c - b;
        let s = sigma * sigma - r.norm_squared();
        if s <= 0.0 {
            return f64::INFINITY;
        }
        let mut v = t * u.sum() - s.ln();
        for i in 0..n {
            let (p, q) = (u[i] - c[i], u[i] + c[i]);
            if p <= 0.0 || q <= 0.0 {
                return f64::INFINITY;
            }
            v -= p.ln() + q.ln();
        }
        v
    };
    let mut t = 1.0;
    let constraints = (2 * n + 1) as f64;
    while constraints / t > 1e-11 {
        for _ in 0..200 {
            let r = phi * &c - b;
            let s = sigma * sigma - r.norm_squared();
            let ptr = phi.transpose() * &r;
            let a = u.zip_map(&c, |u, c| 1.0 / (u - c));
            let bb = u.zip_map(&c, |u, c| 1.0 / (u + c));
            let gc = &a - &bb + &ptr * (2.0 / s);
            let gu = a.zip_map(&bb, |a, b| t - a - b);
            let d1 = a.zip_map(&bb, |a, b| a * a + b * b);
            let d2 = a.zip_map(&bb, |a, b| b * b - a * a);
            let mut h = phi.transpose() * phi * (2.0 / s) + &ptr * ptr.transpose() * (4.0 / (s * s));
            for i in 0..n {
                h[(i, i)] += d1[i] - d2[i] * d2[i] / d1[i];
            }
            let rhs = -&gc + d2.component_mul(&gu).component_div(&d1);
            let dc = h.cholesky().expect("barrier Hessian is positive definite").solve(&rhs);
            let du = (-&gu - d2.component_mul(&dc)).component_div(&d1);
            let decrement = -(gc.dot(&dc) + gu.dot(&du));
            if decrement / 2.0 < 1e-14 {
                break;
            }
            let f0 = barrier(&c, &u, t);
            let mut step = 1.0;
            loop {
                let (cn, un) = (&c + &dc * step, &u + &du * step);
                let f1 = barrier(&cn, &un, t);
                if f1 <= f0 - 0.25 * step * decrement {
                    c = cn;
                    u = un;
                    break;
                }
                step *= 0.5;
                if step < 1e-20 {
                    break;
                }
            }
            if step < 1e-20 {
                break;
            }
        }
        t *= 8.0;
    }
    (c.lp_norm(1), c)
}

/// 8x8 scene, four frames, 2x2 blocks, two frames per exposure.
pub fn toy_geometry() -> SamplingGeometry {
    SamplingGeometry::new(8, 8, 4, 2, 2, 2).unwrap()
}

/// A bright square moving one pixel per frame over a flat background, with
/// a little uniform noise.
pub fn toy_scene(g: &SamplingGeometry, seed: u64) -> Array3<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = Array3::from_shape_fn(g.scene_shape(), |(t, i, j)| {
        if (2..5).contains(&i) && (1 + t..4 + t).contains(&j) {
            0.9
        } else {
            0.3
        }
    });
    base + Array3::from_shape_simple_fn(g.scene_shape(), || 0.02 * (rng.random::<f64>() - 0.5))
}

pub fn flat(a: &Array3<f64>) -> DVector<f64> {
    DVector::from_iterator(a.len(), a.iter().copied())
}

/// Runs the TV-l1 solver on the toy problem to high precision.
/// Returns `(solver objective, oracle objective)`.
pub fn tv_l1_toy_objectives() -> (f64, f64) {
    let g = toy_geometry();
    let masks = MaskSequence::generate(MaskFamily::Rademacher, &g, 3, (0.6, 0.8)).unwrap();
    let op = CakeOperator::with_subsampling(&masks).unwrap();
    let y = op.forward(&toy_scene(&g, 1));
    let params = TvL1Params {
        tau_tv: 1e-2,
        tau_l1: 2e-2,
        max_iters: 20_000,
        tol: 1e-13,
        prox_iters: 300,
        prox_gap: 1e-13,
        ..Default::default()
    };
    let (f, report) = reconstruct_tv_l1(&op, &VideoCube::measurement(y.clone(), 2), &params).unwrap();
    let dense = DenseTvL1 {
        a: dense_cake_matrix(&masks),
        y: flat(&y),
        frames: 4,
        rows: 8,
        cols: 8,
        tau_tv: params.tau_tv,
        tau_l1: params.tau_l1,
    };
    let solver = dense.objective(&flat(&frames_to_diff(&f.data)));
    assert!((solver - report.final_objective()).abs() < 1e-10 * solver.max(1.0));
    let (oracle, _) = dense.subgradient_oracle(100_000);
    (solver, oracle)
}

/// Runs the flow-constrained solver on the toy problem with a uniform
/// one-pixel flow and compares its stacked objective with the barrier
/// oracle on the explicitly assembled stacked matrix.
/// Returns `(solver objective, oracle objective)`.
pub fn flow_toy_objectives() -> (f64, f64) {
    let g = toy_geometry();
    let masks = MaskSequence::generate(MaskFamily::Rademacher, &g, 4, (0.6, 0.8)).unwrap();
    let op = CakeOperator::with_subsampling(&masks).unwrap();
    let motion = MotionOperator::new(&FlowField::uniform(3, 8, 8, (1.0, 0.0))).unwrap();
    let wavelet = WaveletTransform::with_max_levels(8, 8);
    let y = op.forward(&toy_scene(&g, 2));
    let params = FlowConstrainedParams {
        eps_data: 2e-2,
        eps_flow: 2e-2,
        max_iters: 50_000,
        gap_tol: 1e-9,
        residual_tol: 1e-9,
        ..Default::default()
    };
    let (_, report) =
        reconstruct_optical_flow(&op, &VideoCube::measurement(y.clone(), 2), &motion, &wavelet, &params).unwrap();

    let weight = params.eps_data / params.eps_flow;
    let map = StackedFlowMap::new(&op, &motion, &wavelet, weight).unwrap();
    let n = map.domain_len();
    let columns: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            map.apply(&e)
        })
        .collect();
    let phi = DMatrix::from_fn(columns[0].len(), n, |i, j| columns[j][i]);
    let mut b = DVector::zeros(phi.nrows());
    b.rows_mut(0, y.len()).copy_from(&flat(&y));
    let (oracle, _) = barrier_bpdn(&phi, &b, std::f64::consts::SQRT_2 * params.eps_data);
    let stacked = report.extra.iter().find(|(k, _)| k == "stacked_objective").unwrap();
    (stacked.1.parse().unwrap(), oracle)
}
