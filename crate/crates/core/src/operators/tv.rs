//! Isotropic total variation with circular first differences, and its
//! proximal operator by projected gradient on the dual.

use ndarray::{Array2, Zip};

/// Forward differences `(x[i, j+1] - x[i, j], x[i+1, j] - x[i, j])`, wrapping
/// at the frame edges.
pub fn gradient(x: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let (r, c) = x.dim();
    let dh = Array2::from_shape_fn((r, c), |(i, j)| x[[i, (j + 1) % c]] - x[[i, j]]);
    let dv = Array2::from_shape_fn((r, c), |(i, j)| x[[(i + 1) % r, j]] - x[[i, j]]);
    (dh, dv)
}

/// Transpose of [`gradient`] (the negative divergence).
pub fn gradient_adjoint(dh: &Array2<f64>, dv: &Array2<f64>) -> Array2<f64> {
    let (r, c) = dh.dim();
    Array2::from_shape_fn((r, c), |(i, j)| {
        dh[[i, (j + c - 1) % c]] - dh[[i, j]] + dv[[(i + r - 1) % r, j]] - dv[[i, j]]
    })
}

pub fn tv_norm(x: &Array2<f64>) -> f64 {
    let (dh, dv) = gradient(x);
    let mut acc = 0.0;
    Zip::from(&dh).and(&dv).for_each(|&h, &v| acc += (h * h + v * v).sqrt());
    acc
}

/// Outcome of one proximal evaluation.
#[derive(Debug, Clone, Copy)]
pub struct ProxStats {
    pub iterations: usize,
    pub gap: f64,
}

/// `argmin_x 0.5 ||x - b||^2 + lambda TV(x)`, solved by accelerated
/// projected gradient on the dual field `p` with `|p_ij| <= 1`.
///
/// The dual field persists between calls so that successive evaluations on
/// nearby inputs start warm.
#[derive(Debug, Clone)]
pub struct TvProx {
    ph: Array2<f64>,
    pv: Array2<f64>,
    pub max_iters: usize,
    pub gap_tol: f64,
}

impl TvProx {
    pub fn new(rows: usize, cols: usize, max_iters: usize, gap_tol: f64) -> Self {
        Self {
            ph: Array2::zeros((rows, cols)),
            pv: Array2::zeros((rows, cols)),
            max_iters,
            gap_tol,
        }
    }

    /// Current dual field, a subgradient certificate `G^T p` for the last output.
    pub fn dual(&self) -> (&Array2<f64>, &Array2<f64>) {
        (&self.ph, &self.pv)
    }

    fn primal(b: &Array2<f64>, lambda: f64, ph: &Array2<f64>, pv: &Array2<f64>) -> Array2<f64> {
        b - &(gradient_adjoint(ph, pv) * lambda)
    }

    fn project(ph: &mut Array2<f64>, pv: &mut Array2<f64>) {
        Zip::from(ph).and(pv).for_each(|h, v| {
            let n = (*h * *h + *v * *v).sqrt();
            if n > 1.0 {
                *h /= n;
                *v /= n;
            }
        });
    }

    fn gap(b: &Array2<f64>, x: &Array2<f64>, lambda: f64) -> f64 {
        let primal = 0.5 * (x - b).mapv(|v| v * v).sum() + lambda * tv_norm(x);
        let dual = 0.5 * b.mapv(|v| v * v).sum() - 0.5 * x.mapv(|v| v * v).sum();
        primal - dual
    }

    pub fn prox(&mut self, b: &Array2<f64>, lambda: f64) -> (Array2<f64>, ProxStats) {
        if lambda <= 0.0 {
            return (b.clone(), ProxStats { iterations: 0, gap: 0.0 });
        }
        if self.ph.dim() != b.dim() {
            *self = Self::new(b.nrows(), b.ncols(), self.max_iters, self.gap_tol);
        }
        let step = 1.0 / (8.0 * lambda);
        let (mut rh, mut rv) = (self.ph.clone(), self.pv.clone());
        let mut t = 1.0f64;
        let mut x = Self::primal(b, lambda, &self.ph, &self.pv);
        let mut gap = Self::gap(b, &x, lambda);
        let mut iterations = 0;
        while iterations < self.max_iters && gap > self.gap_tol {
            iterations += 1;
            let xr = Self::primal(b, lambda, &rh, &rv);
            let (gh, gv) = gradient(&xr);
            let mut nh = &rh + &(gh * step);
            let mut nv = &rv + &(gv * step);
            Self::project(&mut nh, &mut nv);
            let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            let w = (t - 1.0) / t_next;
            rh = &nh + &((&nh - &self.ph) * w);
            rv = &nv + &((&nv - &self.pv) * w);
            self.ph = nh;
            self.pv = nv;
            t = t_next;
            x = Self::primal(b, lambda, &self.ph, &self.pv);
            gap = Self::gap(b, &x, lambda);
        }
        (x, ProxStats { iterations, gap })
    }
}
