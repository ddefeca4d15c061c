//! Video cubes, additive noise and reconstruction quality metrics.

use std::ops::Range;

use ndarray::{s, Array2, Array3, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{CakeError, Result};
use crate::geometry::SamplingGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CubeKind {
    /// High-rate, full-resolution frames (`N x n1 x n2`).
    Scene,
    /// Low-rate, low-resolution frames (`M x m1 x m2`).
    Measurement,
}

/// A stack of equally sized real frames, stored as `(frame, row, col)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoCube {
    pub kind: CubeKind,
    /// Number of high-rate frames per low-rate frame.
    pub block_len: usize,
    pub data: Array3<f64>,
}

impl VideoCube {
    pub fn new(kind: CubeKind, block_len: usize, data: Array3<f64>) -> Self {
        Self {
            kind,
            block_len,
            data,
        }
    }

    pub fn scene(data: Array3<f64>, block_len: usize) -> Self {
        Self::new(CubeKind::Scene, block_len, data)
    }

    pub fn measurement(data: Array3<f64>, block_len: usize) -> Self {
        Self::new(CubeKind::Measurement, block_len, data)
    }

    pub fn zeros_scene(geometry: &SamplingGeometry) -> Self {
        Self::scene(Array3::zeros(geometry.scene_shape()), geometry.block_len)
    }

    pub fn frames(&self) -> usize {
        self.data.len_of(Axis(0))
    }

    pub fn rows(&self) -> usize {
        self.data.len_of(Axis(1))
    }

    pub fn cols(&self) -> usize {
        self.data.len_of(Axis(2))
    }

    pub fn frame(&self, t: usize) -> ArrayView2<'_, f64> {
        self.data.index_axis(Axis(0), t)
    }

    /// Checks that this cube has the scene or measurement shape of `geometry`.
    pub fn check_geometry(&self, geometry: &SamplingGeometry) -> Result<()> {
        let expected = match self.kind {
            CubeKind::Scene => geometry.scene_shape(),
            CubeKind::Measurement => geometry.measurement_shape(),
        };
        check_shape(&self.data, expected)
    }
}

pub(crate) fn check_shape(data: &Array3<f64>, expected: (usize, usize, usize)) -> Result<()> {
    if data.dim() != expected {
        return Err(CakeError::ShapeMismatch {
            expected: format!("{expected:?}"),
            actual: format!("{:?}", data.dim()),
        });
    }
    Ok(())
}

/// Additive measurement noise.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum NoiseModel {
    #[default]
    None,
    /// White Gaussian noise with standard deviation `sigma`.
    Gaussian { sigma: f64, seed: u64 },
}

impl NoiseModel {
    pub fn gaussian(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(CakeError::InvalidArgument(format!(
                "noise sigma must be finite and non-negative, got {sigma}"
            )));
        }
        Ok(Self::Gaussian { sigma, seed })
    }

    pub fn apply(&self, data: &mut Array3<f64>) {
        if let NoiseModel::Gaussian { sigma, seed } = *self {
            if sigma == 0.0 {
                return;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let normal = Normal::new(0.0, sigma).expect("sigma validated at construction");
            for v in data.iter_mut() {
                *v += normal.sample(&mut rng);
            }
        }
    }
}

/// Axis-aligned pixel rectangle `rows x cols`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RectRegion {
    pub rows: Range<usize>,
    pub cols: Range<usize>,
}

impl RectRegion {
    pub fn full(rows: usize, cols: usize) -> Self {
        Self {
            rows: 0..rows,
            cols: 0..cols,
        }
    }
}

/// Frames scored by default: everything except the first and last
/// exposure block.
pub fn interior_frames(frames: usize, block_len: usize) -> Range<usize> {
    if frames > 2 * block_len {
        block_len..frames - block_len
    } else {
        0..frames
    }
}

/// Relative error `100 * ||estimate - truth|| / ||truth||` restricted to a
/// region and frame range.
pub fn rmse_percent(
    estimate: &VideoCube,
    truth: &VideoCube,
    roi: &RectRegion,
    frames: Range<usize>,
) -> Result<f64> {
    if estimate.data.dim() != truth.data.dim() {
        return Err(CakeError::ShapeMismatch {
            expected: format!("{:?}", truth.data.dim()),
            actual: format!("{:?}", estimate.data.dim()),
        });
    }
    let (nf, nr, nc) = truth.data.dim();
    if roi.rows.end > nr || roi.cols.end > nc || frames.end > nf || roi.rows.is_empty() || roi.cols.is_empty() || frames.is_empty() {
        return Err(CakeError::InvalidArgument(format!(
            "region rows {:?} cols {:?} frames {:?} outside cube {:?}",
            roi.rows, roi.cols, frames, truth.data.dim()
        )));
    }
    let sl = s![frames, roi.rows.clone(), roi.cols.clone()];
    let t = truth.data.slice(sl);
    let e = estimate.data.slice(sl);
    let mut num = 0.0;
    let mut den = 0.0;
    ndarray::Zip::from(&e).and(&t).for_each(|&a, &b| {
        num += (a - b) * (a - b);
        den += b * b;
    });
    if den == 0.0 {
        return Err(CakeError::Normalization);
    }
    Ok(100.0 * (num / den).sqrt())
}

pub(crate) fn frame_stack(frames: Vec<Array2<f64>>) -> Array3<f64> {
    let (r, c) = frames.first().map(|f| f.dim()).unwrap_or((0, 0));
    let mut out = Array3::zeros((frames.len(), r, c));
    for (mut dst, src) in out.outer_iter_mut().zip(frames) {
        dst.assign(&src);
    }
    out
}
