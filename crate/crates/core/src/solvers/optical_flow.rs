use ndarray::Array3;

use super::report::{SolverReport, Stopwatch};
use super::spgl1::{norm1, norm2, solve_bpdn, BpdnOptions, LinearMap};
use crate::error::{CakeError, Result};
use crate::flow::MotionOperator;
use crate::operators::{diff_to_frames, diff_to_frames_adjoint, frames_to_diff, SensingOperator, WaveletTransform};
use crate::video::{check_shape, VideoCube};

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConstrainedParams {
    /// Bound on `||A f - y||`.
    pub eps_data: f64,
    /// Bound on `||V f||`.
    pub eps_flow: f64,
    /// Spectral projected gradient iterations across all Pareto subproblems.
    pub max_iters: usize,
    pub gap_tol: f64,
    pub residual_tol: f64,
    /// Rounds of minimum-norm corrections allowed in the final feasibility pass.
    pub polish_iters: usize,
    /// Accepted violation factor on each original constraint.
    pub slack: f64,
}

impl Default for FlowConstrainedParams {
    fn default() -> Self {
        Self {
            eps_data: 4.3e-2,
            eps_flow: 4.3e3,
            max_iters: 1000,
            gap_tol: 1e-4,
            residual_tol: 1e-4,
            polish_iters: 20,
            slack: 1.05,
        }
    }
}

impl FlowConstrainedParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eps_data", self.eps_data),
            ("eps_flow", self.eps_flow),
            ("gap_tol", self.gap_tol),
            ("residual_tol", self.residual_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CakeError::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.slack < 1.0 || self.max_iters == 0 {
            return Err(CakeError::InvalidArgument("slack must be >= 1 and max_iters positive".into()));
        }
        Ok(())
    }
}

/// `c -> [A L W c ; weight V L W c]` on wavelet coefficients of the
/// difference frames.
pub struct StackedFlowMap<'a> {
    pub op: &'a dyn SensingOperator,
    pub motion: &'a MotionOperator,
    pub wavelet: &'a WaveletTransform,
    pub weight: f64,
    scene_shape: (usize, usize, usize),
    data_len: usize,
}

impl<'a> StackedFlowMap<'a> {
    pub fn new(
        op: &'a dyn SensingOperator,
        motion: &'a MotionOperator,
        wavelet: &'a WaveletTransform,
        weight: f64,
    ) -> Result<Self> {
        let scene_shape = op.scene_shape();
        let (nf, r, c) = scene_shape;
        if motion.frames() != nf || motion.frame_shape() != (r, c) {
            return Err(CakeError::ShapeMismatch {
                expected: format!("motion operator for {scene_shape:?}"),
                actual: format!("{} frames of {:?}", motion.frames(), motion.frame_shape()),
            });
        }
        let (mf, mr, mc) = op.measurement_shape();
        Ok(Self {
            op,
            motion,
            wavelet,
            weight,
            scene_shape,
            data_len: mf * mr * mc,
        })
    }

    pub fn frames(&self, coeffs: &[f64]) -> Array3<f64> {
        let c = Array3::from_shape_vec(self.scene_shape, coeffs.to_vec()).expect("coefficient length");
        diff_to_frames(&self.wavelet.inverse_cube(&c))
    }

    /// `(A f, V f)` for coefficients `c`.
    pub fn parts(&self, coeffs: &[f64]) -> (Array3<f64>, Array3<f64>) {
        let f = self.frames(coeffs);
        (self.op.forward(&f), self.motion.apply(&f))
    }

    /// `W^T L^T (A^T u + w V^T v)`.
    pub fn adjoint_parts(&self, u: &Array3<f64>, v: &Array3<f64>, w: f64) -> Vec<f64> {
        let g = self.op.adjoint(u) + self.motion.adjoint(v) * w;
        self.wavelet.forward_cube(&diff_to_frames_adjoint(&g)).into_iter().collect()
    }

    fn split(&self, r: &[f64]) -> (Array3<f64>, Array3<f64>) {
        let (nf, rows, cols) = self.scene_shape;
        let u = Array3::from_shape_vec(self.op.measurement_shape(), r[..self.data_len].to_vec()).unwrap();
        let v = Array3::from_shape_vec((nf - 1, rows, cols), r[self.data_len..].to_vec()).unwrap();
        (u, v)
    }
}

impl LinearMap for StackedFlowMap<'_> {
    fn domain_len(&self) -> usize {
        self.scene_shape.0 * self.scene_shape.1 * self.scene_shape.2
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let (a, v) = self.parts(x);
        a.into_iter().chain(v.into_iter().map(|e| e * self.weight)).collect()
    }

    fn adjoint(&self, r: &[f64]) -> Vec<f64> {
        let (u, v) = self.split(r);
        self.adjoint_parts(&u, &v, self.weight)
    }
}

fn norm(a: &Array3<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Fraction of a bound the polish aims for, leaving room for CG error.
const POLISH_TARGET: f64 = 0.99;
const CG_MAX_ITERS: usize = 300;
const CG_TOL: f64 = 1e-6;

/// Part of the residual `r` to remove so that it lands inside the ball of
/// radius `eps`; zero when `r` is already within `bound`.
fn shrink_target(r: &Array3<f64>, eps: f64, bound: f64) -> Array3<f64> {
    let n = norm(r);
    if n <= bound {
        Array3::zeros(r.dim())
    } else {
        r * (1.0 - POLISH_TARGET * eps / n)
    }
}

/// Least-squares `min ||M x - b||` by CGLS from `x = 0`, which keeps the
/// iterates in the row space of `M` and so tends to the minimum-norm
/// solution. The residual decreases monotonically.
fn cgls(
    forward: impl Fn(&Array3<f64>) -> Vec<f64>,
    adjoint: impl Fn(&[f64]) -> Array3<f64>,
    b: &[f64],
) -> (Array3<f64>, usize) {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut r = b.to_vec();
    let mut s = adjoint(&r);
    let mut x = Array3::zeros(s.dim());
    let mut p = s.clone();
    let mut gamma = s.iter().map(|v| v * v).sum::<f64>();
    let stop = CG_TOL * dot(b, b).sqrt();
    let mut it = 0;
    while it < CG_MAX_ITERS && dot(&r, &r).sqrt() > stop && gamma > 0.0 {
        let q = forward(&p);
        let qq = dot(&q, &q);
        if qq <= 0.0 {
            break;
        }
        let alpha = gamma / qq;
        x.scaled_add(alpha, &p);
        r.iter_mut().zip(&q).for_each(|(r, q)| *r -= alpha * q);
        s = adjoint(&r);
        let next = s.iter().map(|v| v * v).sum::<f64>();
        p = &s + &(p * (next / gamma));
        gamma = next;
        it += 1;
    }
    (x, it)
}

/// Flow-constrained reconstruction: minimizes `||W^T theta||_1` subject to
/// `||A L theta - y|| <= eps_data` and `||V L theta|| <= eps_flow`.
///
/// The two balls are merged into `||[A L theta - y ; (eps_data / eps_flow) V L theta]||
/// <= sqrt(2) eps_data`. Any residual excess over `slack` times either original
/// bound is then removed by minimum-norm frame corrections, each a CGLS
/// solve with `M = [A ; V]`.
pub fn reconstruct_optical_flow(
    op: &dyn SensingOperator,
    measurement: &VideoCube,
    motion: &MotionOperator,
    wavelet: &WaveletTransform,
    params: &FlowConstrainedParams,
) -> Result<(VideoCube, SolverReport)> {
    params.validate()?;
    check_shape(&measurement.data, op.measurement_shape())?;
    let clock = Stopwatch::start();
    let weight = params.eps_data / params.eps_flow;
    let map = StackedFlowMap::new(op, motion, wavelet, weight)?;
    let y = &measurement.data;
    let (nf, rows, cols) = map.scene_shape;
    let b: Vec<f64> = y.iter().copied().chain(std::iter::repeat_n(0.0, (nf - 1) * rows * cols)).collect();
    let sigma = std::f64::consts::SQRT_2 * params.eps_data;
    let opts = BpdnOptions {
        max_iters: params.max_iters,
        gap_tol: params.gap_tol,
        residual_tol: params.residual_tol,
        ..Default::default()
    };
    let out = solve_bpdn(&map, &b, sigma, &opts);
    let stacked_objective = norm1(&out.x);
    let stacked_residual = norm2(&out.residual);
    let mut coeffs = out.x;
    let mut trace = out.trace;
    let mut iterations = out.iterations;

    let bound_data = params.slack * params.eps_data;
    let bound_flow = params.slack * params.eps_flow;
    let mut f = map.frames(&coeffs);
    let mut r1 = op.forward(&f) - y;
    let mut r2 = motion.apply(&f);
    let mut polish_steps = 0;
    let mut cg_iterations = 0;
    if norm(&r1) > bound_data || norm(&r2) > bound_flow {
        let (data_dim, flow_dim) = (r1.dim(), r2.dim());
        let data_len = r1.len();
        let split = |z: &[f64]| {
            let u = Array3::from_shape_vec(data_dim, z[..data_len].to_vec()).expect("data block");
            let v = Array3::from_shape_vec(flow_dim, z[data_len..].to_vec()).expect("flow block");
            op.adjoint(&u) + motion.adjoint(&v)
        };
        let stacked = |g: &Array3<f64>| -> Vec<f64> { op.forward(g).into_iter().chain(motion.apply(g)).collect() };
        let (split, stacked) = (&split, &stacked);
        while polish_steps < params.polish_iters {
            polish_steps += 1;
            // Smallest frame change that scales each violated residual back
            // inside its ball while leaving the other residual untouched.
            let rhs: Vec<f64> = shrink_target(&r1, params.eps_data, bound_data)
                .into_iter()
                .chain(shrink_target(&r2, params.eps_flow, bound_flow))
                .collect();
            let (delta, it) = cgls(stacked, split, &rhs);
            f -= &delta;
            cg_iterations += it;
            r1 = op.forward(&f) - y;
            r2 = motion.apply(&f);
            coeffs = wavelet.forward_cube(&frames_to_diff(&f)).into_iter().collect();
            iterations += 1;
            trace.push(norm1(&coeffs));
            if norm(&r1) <= bound_data && norm(&r2) <= bound_flow {
                break;
            }
        }
        if norm(&r1) > bound_data || norm(&r2) > bound_flow {
            return Err(CakeError::Infeasible {
                iterations,
                data_residual: norm(&r1),
                data_bound: params.eps_data,
                flow_residual: norm(&r2),
                flow_bound: params.eps_flow,
            });
        }
    }
    if let Some(bad) = trace.iter().find(|v| !v.is_finite()) {
        return Err(CakeError::Divergence { iteration: iterations, objective: *bad, step: 0.0 });
    }

    let estimate = f;
    let data_residual = norm(&(op.forward(&estimate) - y));
    let flow_residual = norm(&motion.apply(&estimate));
    let report = SolverReport {
        method: "of".into(),
        iterations,
        objective_trace: trace,
        data_residual,
        flow_residual: Some(flow_residual),
        wall_time: clock.elapsed(),
        converged: out.converged,
        extra: vec![
            ("tau".into(), format!("{:.17e}", out.tau)),
            ("newton_steps".into(), out.newton_steps.to_string()),
            ("stacked_objective".into(), format!("{stacked_objective:.17e}")),
            ("stacked_residual".into(), format!("{stacked_residual:.17e}")),
            ("stacked_bound".into(), format!("{sigma:.17e}")),
            ("polish_steps".into(), polish_steps.to_string()),
            ("polish_cg_iterations".into(), cg_iterations.to_string()),
        ],
    };
    Ok((VideoCube::scene(estimate, measurement.block_len), report))
}
