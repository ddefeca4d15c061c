//! The CAKE sensing operator `y_k = sum_{t in T_k} R(h_t * f_t)`, where `R`
//! is the detector downsampler.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, Array3, Axis};
use num_complex::Complex64;

use super::conv::{convolve_with_transfer, correlate_with_transfer};
use super::downsample::Downsampler;
use crate::error::{CakeError, Result};
use crate::fft::Fft2;
use crate::geometry::SamplingGeometry;
use crate::masks::MaskSequence;
use crate::par;
use crate::video::{check_shape, CubeKind, NoiseModel, VideoCube};

/// A linear map from scene cubes to measurement cubes with its transpose.
///
/// Implementations may panic if handed arrays of the wrong shape; callers
/// validate shapes at their public entry points.
pub trait SensingOperator: Sync {
    fn scene_shape(&self) -> (usize, usize, usize);
    fn measurement_shape(&self) -> (usize, usize, usize);
    fn forward(&self, scene: &Array3<f64>) -> Array3<f64>;
    fn adjoint(&self, measurement: &Array3<f64>) -> Array3<f64>;
}

#[derive(Debug, Clone)]
pub struct CakeOperator {
    geometry: SamplingGeometry,
    downsampler: Downsampler,
    fft: Fft2,
    /// Transfer functions `F h_t`.
    transfers: Vec<Array2<Complex64>>,
}

impl CakeOperator {
    pub fn new(masks: &MaskSequence, downsampler: Downsampler) -> Result<Self> {
        let g = masks.geometry;
        if masks.masks.len() != g.frames {
            return Err(CakeError::ShapeMismatch {
                expected: format!("{} masks", g.frames),
                actual: format!("{} masks", masks.masks.len()),
            });
        }
        match &downsampler {
            Downsampler::Subsample { phase } if phase.0 >= g.d1 || phase.1 >= g.d2 => {
                return Err(CakeError::InvalidArgument(format!(
                    "subsampling phase {phase:?} outside {}x{} block",
                    g.d1, g.d2
                )));
            }
            Downsampler::RandomDemod(s) => {
                s.validate()?;
                if s.values.dim() != (g.n1, g.n2) {
                    return Err(CakeError::ShapeMismatch {
                        expected: format!("{:?}", (g.n1, g.n2)),
                        actual: format!("{:?}", s.values.dim()),
                    });
                }
            }
            _ => {}
        }
        let fft = Fft2::new(g.n1, g.n2);
        let mut transfers = Vec::with_capacity(g.frames);
        for h in &masks.masks {
            if h.dim() != (g.n1, g.n2) {
                return Err(CakeError::ShapeMismatch {
                    expected: format!("{:?}", (g.n1, g.n2)),
                    actual: format!("{:?}", h.dim()),
                });
            }
            transfers.push(fft.forward(h.view()));
        }
        Ok(Self {
            geometry: g,
            downsampler,
            fft,
            transfers,
        })
    }

    /// Subsampling detector on the coarse-estimator lattice.
    pub fn with_subsampling(masks: &MaskSequence) -> Result<Self> {
        let g = masks.geometry;
        Self::new(masks, Downsampler::subsample_default(g.d1, g.d2))
    }

    pub fn geometry(&self) -> &SamplingGeometry {
        &self.geometry
    }

    pub fn downsampler(&self) -> &Downsampler {
        &self.downsampler
    }

    /// `A_t f_t` for one high-rate frame.
    pub fn frame_forward(&self, t: usize, frame: ndarray::ArrayView2<f64>) -> Array2<f64> {
        let g = &self.geometry;
        let conv = convolve_with_transfer(&self.fft, frame, &self.transfers[t]);
        self.downsampler
            .apply(conv.view(), g.d1, g.d2)
            .expect("operator shapes validated at construction")
    }

    /// `A_t^T z` for one high-rate frame.
    pub fn frame_adjoint(&self, t: usize, low: ndarray::ArrayView2<f64>) -> Array2<f64> {
        let g = &self.geometry;
        let up = self.downsampler.adjoint(low, g.d1, g.d2);
        correlate_with_transfer(&self.fft, up.view(), &self.transfers[t])
    }

    /// Simulated acquisition with additive noise after the exposure sum.
    pub fn cake_forward(&self, scene: &VideoCube, noise: &NoiseModel) -> Result<VideoCube> {
        if scene.kind != CubeKind::Scene {
            return Err(CakeError::InvalidArgument("forward operator needs a scene cube".into()));
        }
        check_shape(&scene.data, self.geometry.scene_shape())?;
        let mut y = self.forward(&scene.data);
        noise.apply(&mut y);
        Ok(VideoCube::measurement(y, self.geometry.block_len))
    }

    pub fn cake_adjoint(&self, measurement: &VideoCube) -> Result<VideoCube> {
        if measurement.kind != CubeKind::Measurement {
            return Err(CakeError::InvalidArgument("adjoint operator needs a measurement cube".into()));
        }
        check_shape(&measurement.data, self.geometry.measurement_shape())?;
        Ok(VideoCube::scene(self.adjoint(&measurement.data), self.geometry.block_len))
    }
}

impl SensingOperator for CakeOperator {
    fn scene_shape(&self) -> (usize, usize, usize) {
        self.geometry.scene_shape()
    }

    fn measurement_shape(&self) -> (usize, usize, usize) {
        self.geometry.measurement_shape()
    }

    fn forward(&self, scene: &Array3<f64>) -> Array3<f64> {
        let g = &self.geometry;
        let per_frame = par::map_indices(g.frames, |t| self.frame_forward(t, scene.index_axis(Axis(0), t)));
        let mut y = Array3::zeros(g.measurement_shape());
        // Fixed left-to-right reduction keeps results bit-reproducible.
        for (t, frame) in per_frame.iter().enumerate() {
            let mut dst = y.index_axis_mut(Axis(0), g.block_of(t));
            dst += frame;
        }
        y
    }

    fn adjoint(&self, measurement: &Array3<f64>) -> Array3<f64> {
        let g = &self.geometry;
        let per_frame = par::map_indices(g.frames, |t| {
            self.frame_adjoint(t, measurement.index_axis(Axis(0), g.block_of(t)))
        });
        let mut out = Array3::zeros(g.scene_shape());
        for (mut dst, src) in out.outer_iter_mut().zip(per_frame) {
            dst.assign(&src);
        }
        out
    }
}

/// Largest problem [`DenseOperator::assemble`] will materialize.
pub const DENSE_ENTRY_LIMIT: usize = 1 << 26;

/// An explicit matrix acting on row-major flattened cubes.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    pub matrix: DMatrix<f64>,
    scene_shape: (usize, usize, usize),
    measurement_shape: (usize, usize, usize),
}

impl DenseOperator {
    pub fn new(
        matrix: DMatrix<f64>,
        scene_shape: (usize, usize, usize),
        measurement_shape: (usize, usize, usize),
    ) -> Result<Self> {
        let rows = measurement_shape.0 * measurement_shape.1 * measurement_shape.2;
        let cols = scene_shape.0 * scene_shape.1 * scene_shape.2;
        if matrix.shape() != (rows, cols) {
            return Err(CakeError::ShapeMismatch {
                expected: format!("{rows}x{cols}"),
                actual: format!("{}x{}", matrix.nrows(), matrix.ncols()),
            });
        }
        Ok(Self {
            matrix,
            scene_shape,
            measurement_shape,
        })
    }

    /// Materializes any operator by applying it to every canonical basis vector.
    pub fn assemble(op: &dyn SensingOperator) -> Result<Self> {
        let ss = op.scene_shape();
        let ms = op.measurement_shape();
        let cols = ss.0 * ss.1 * ss.2;
        let rows = ms.0 * ms.1 * ms.2;
        if rows.saturating_mul(cols) > DENSE_ENTRY_LIMIT {
            return Err(CakeError::SizeGuard(format!("{rows}x{cols} matrix")));
        }
        let columns = par::map_indices(cols, |j| {
            let mut e = Array3::zeros(ss);
            e.as_slice_mut().expect("standard layout")[j] = 1.0;
            op.forward(&e)
        });
        let mut matrix = DMatrix::zeros(rows, cols);
        for (j, col) in columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                matrix[(i, j)] = *v;
            }
        }
        Ok(Self {
            matrix,
            scene_shape: ss,
            measurement_shape: ms,
        })
    }
}

fn to_dvector(a: &Array3<f64>) -> DVector<f64> {
    DVector::from_iterator(a.len(), a.iter().copied())
}

fn from_dvector(v: DVector<f64>, shape: (usize, usize, usize)) -> Array3<f64> {
    Array3::from_shape_vec(shape, v.as_slice().to_vec()).expect("length matches shape")
}

impl SensingOperator for DenseOperator {
    fn scene_shape(&self) -> (usize, usize, usize) {
        self.scene_shape
    }

    fn measurement_shape(&self) -> (usize, usize, usize) {
        self.measurement_shape
    }

    fn forward(&self, scene: &Array3<f64>) -> Array3<f64> {
        from_dvector(&self.matrix * to_dvector(scene), self.measurement_shape)
    }

    fn adjoint(&self, measurement: &Array3<f64>) -> Array3<f64> {
        from_dvector(self.matrix.tr_mul(&to_dvector(measurement)), self.scene_shape)
    }
}

/// Identity operator; the degenerate sensing model of full-rate,
/// full-resolution, uncoded capture.
#[derive(Debug, Clone, Copy)]
pub struct IdentityOperator {
    pub shape: (usize, usize, usize),
}

impl SensingOperator for IdentityOperator {
    fn scene_shape(&self) -> (usize, usize, usize) {
        self.shape
    }

    fn measurement_shape(&self) -> (usize, usize, usize) {
        self.shape
    }

    fn forward(&self, scene: &Array3<f64>) -> Array3<f64> {
        scene.clone()
    }

    fn adjoint(&self, measurement: &Array3<f64>) -> Array3<f64> {
        measurement.clone()
    }
}
