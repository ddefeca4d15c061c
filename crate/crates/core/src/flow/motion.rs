//! Flow fields and the block-bidiagonal motion operator built from them.

use ndarray::{Array2, Array3, Axis};

use super::horn_schunck::{bilinear_weights, estimate_flow, HsParams};
use crate::error::{CakeError, Result};
use crate::video::VideoCube;

/// Per-transition displacement `(v1, v2)` (horizontal, vertical) mapping
/// frame `t` onto frame `t + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub v1: Array3<f64>,
    pub v2: Array3<f64>,
}

impl FlowField {
    pub fn zeros(transitions: usize, rows: usize, cols: usize) -> Self {
        Self {
            v1: Array3::zeros((transitions, rows, cols)),
            v2: Array3::zeros((transitions, rows, cols)),
        }
    }

    /// Same displacement everywhere and at every transition.
    pub fn uniform(transitions: usize, rows: usize, cols: usize, v: (f64, f64)) -> Self {
        Self {
            v1: Array3::from_elem((transitions, rows, cols), v.0),
            v2: Array3::from_elem((transitions, rows, cols), v.1),
        }
    }

    pub fn transitions(&self) -> usize {
        self.v1.len_of(Axis(0))
    }

    pub fn frame_shape(&self) -> (usize, usize) {
        (self.v1.len_of(Axis(1)), self.v1.len_of(Axis(2)))
    }

    pub fn validate(&self) -> Result<()> {
        if self.v1.dim() != self.v2.dim() {
            return Err(CakeError::InvalidFlow(format!(
                "component shapes differ: {:?} vs {:?}",
                self.v1.dim(),
                self.v2.dim()
            )));
        }
        if let Some(bad) = self.v1.iter().chain(self.v2.iter()).find(|v| !v.is_finite()) {
            return Err(CakeError::InvalidFlow(format!("non-finite displacement {bad}")));
        }
        Ok(())
    }
}

/// Estimates the flow between every pair of consecutive frames.
pub fn estimate_flow_field(cube: &VideoCube, params: &HsParams) -> Result<FlowField> {
    let nf = cube.frames();
    let (r, c) = (cube.rows(), cube.cols());
    let transitions = nf.saturating_sub(1);
    let fields = crate::par::map_indices(transitions, |t| {
        estimate_flow(&cube.frame(t).to_owned(), &cube.frame(t + 1).to_owned(), params)
    });
    let mut flow = FlowField::zeros(transitions, r, c);
    for (t, res) in fields.into_iter().enumerate() {
        let (a, b) = res?;
        flow.v1.index_axis_mut(Axis(0), t).assign(&a);
        flow.v2.index_axis_mut(Axis(0), t).assign(&b);
    }
    Ok(flow)
}

type Stencil = [(usize, f64); 4];

/// `V` with blocks `[V_t, -I]` on each row: `(V f)_t = V_t f_t - f_{t+1}`,
/// where `V_t` samples `f_t` bilinearly at `x - v_t(x)`.
#[derive(Debug, Clone)]
pub struct MotionOperator {
    rows: usize,
    cols: usize,
    warps: Vec<Vec<Stencil>>,
}

impl MotionOperator {
    pub fn new(flow: &FlowField) -> Result<Self> {
        flow.validate()?;
        let (rows, cols) = flow.frame_shape();
        let warps = (0..flow.transitions())
            .map(|t| {
                let mut st = Vec::with_capacity(rows * cols);
                for i in 0..rows {
                    for j in 0..cols {
                        let (a, b) = (flow.v1[[t, i, j]], flow.v2[[t, i, j]]);
                        st.push(bilinear_weights(i as f64 - b, j as f64 - a, rows, cols));
                    }
                }
                st
            })
            .collect();
        Ok(Self { rows, cols, warps })
    }

    pub fn transitions(&self) -> usize {
        self.warps.len()
    }

    pub fn frames(&self) -> usize {
        self.warps.len() + 1
    }

    pub fn frame_shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Sparse row `(column, weight)` entries of `V_t` for one output pixel.
    pub fn row(&self, t: usize, pixel: usize) -> &[(usize, f64); 4] {
        &self.warps[t][pixel]
    }

    /// `V_t f`.
    pub fn warp(&self, t: usize, frame: &Array2<f64>) -> Array2<f64> {
        let flat = frame.as_standard_layout();
        let flat = flat.as_slice().expect("standard layout");
        let vals: Vec<f64> = self.warps[t]
            .iter()
            .map(|st| st.iter().map(|&(k, w)| w * flat[k]).sum())
            .collect();
        Array2::from_shape_vec((self.rows, self.cols), vals).expect("shape")
    }

    /// `V_t^T r`.
    pub fn warp_adjoint(&self, t: usize, residual: &Array2<f64>) -> Array2<f64> {
        let mut out = vec![0.0; self.rows * self.cols];
        for (st, &r) in self.warps[t].iter().zip(residual.iter()) {
            for &(k, w) in st {
                out[k] += w * r;
            }
        }
        Array2::from_shape_vec((self.rows, self.cols), out).expect("shape")
    }

    /// Stacked residuals `V_t f_t - f_{t+1}` for `t = 0..N-1`.
    pub fn apply(&self, f: &Array3<f64>) -> Array3<f64> {
        let parts = crate::par::map_indices(self.transitions(), |t| {
            let w = self.warp(t, &f.index_axis(Axis(0), t).to_owned());
            w - &f.index_axis(Axis(0), t + 1)
        });
        crate::video::frame_stack(parts)
    }

    pub fn adjoint(&self, r: &Array3<f64>) -> Array3<f64> {
        let mut out = Array3::zeros((self.frames(), self.rows, self.cols));
        let parts = crate::par::map_indices(self.transitions(), |t| {
            self.warp_adjoint(t, &r.index_axis(Axis(0), t).to_owned())
        });
        for (t, p) in parts.into_iter().enumerate() {
            let mut dst = out.index_axis_mut(Axis(0), t);
            dst += &p;
            let mut nxt = out.index_axis_mut(Axis(0), t + 1);
            nxt -= &r.index_axis(Axis(0), t);
        }
        out
    }
}
