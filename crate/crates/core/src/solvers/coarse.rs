use ndarray::{Array3, Axis};

use crate::error::{CakeError, Result};
use crate::fft::Fft2;
use crate::masks::{MaskFamily, MaskSequence};
use crate::video::{check_shape, VideoCube};

/// Closed-form low-rate, low-resolution preview from dual-scale measurements.
///
/// Each measurement frame is circularly correlated with the size-`m` kernel
/// `F^-1 sigma_k` and scaled by `1 / (alpha B d)`. The measurements must come
/// from the subsampling detector on the last pixel of every block, where
/// `Sigma_k^T S HL_k D^T = d I` holds exactly.
pub fn coarse_estimate(measurement: &VideoCube, masks: &MaskSequence) -> Result<VideoCube> {
    let dsm = match (&masks.dsm, masks.family) {
        (Some(c), MaskFamily::DualScale) => c,
        _ => {
            return Err(CakeError::UnsupportedMask(format!(
                "coarse estimation needs dual-scale masks, got {}",
                masks.family.name()
            )))
        }
    };
    let g = &masks.geometry;
    check_shape(&measurement.data, g.measurement_shape())?;
    if dsm.alpha == 0.0 {
        return Err(CakeError::InvalidArgument(
            "coarse estimation needs a nonzero low-resolution weight".into(),
        ));
    }
    let fft = Fft2::new(g.m1(), g.m2());
    let scale = 1.0 / (dsm.alpha * g.block_len as f64 * g.d() as f64);
    let mut out = Array3::zeros(g.measurement_shape());
    for (k, y) in measurement.data.axis_iter(Axis(0)).enumerate() {
        let mut spec = fft.forward(y);
        spec.zip_mut_with(&dsm.spectra[k], |a, s| *a *= s.conj());
        let est = fft.inverse_real(spec);
        out.index_axis_mut(Axis(0), k).assign(&(est * scale));
    }
    Ok(VideoCube::measurement(out, g.block_len))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SamplingGeometry;
    use crate::masks::gen_dsm;
    use crate::operators::{CakeOperator, SensingOperator};

    #[test]
    fn zero_measurement_gives_zero_estimate() {
        let g = SamplingGeometry::new(8, 8, 4, 2, 2, 2).unwrap();
        let masks = gen_dsm(&g, 0.6, 0.8, 3).unwrap();
        let y = VideoCube::measurement(Array3::zeros(g.measurement_shape()), 2);
        assert!(coarse_estimate(&y, &masks).unwrap().data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_other_families() {
        let g = SamplingGeometry::new(8, 8, 4, 2, 2, 2).unwrap();
        let masks = MaskSequence::generate(MaskFamily::Rademacher, &g, 1, (0.0, 0.0)).unwrap();
        let y = VideoCube::measurement(Array3::zeros(g.measurement_shape()), 2);
        assert!(matches!(coarse_estimate(&y, &masks), Err(CakeError::UnsupportedMask(_))));
    }

    #[test]
    fn recovers_static_block_constant_scene_without_high_res_term() {
        let g = SamplingGeometry::new(16, 12, 6, 2, 2, 3).unwrap();
        let masks = gen_dsm(&g, 1.0, 0.0, 5).unwrap();
        let low = Array3::from_shape_fn(g.measurement_shape(), |(k, i, j)| {
            0.3 + 0.1 * k as f64 + ((i * 7 + j * 3) % 5) as f64 * 0.05
        });
        let scene = Array3::from_shape_fn(g.scene_shape(), |(t, i, j)| low[[g.block_of(t), i / 2, j / 2]]);
        let op = CakeOperator::with_subsampling(&masks).unwrap();
        let y = VideoCube::measurement(op.forward(&scene), g.block_len);
        let est = coarse_estimate(&y, &masks).unwrap();
        let err = (&est.data - &low).mapv(|v| v * v).sum().sqrt() / low.mapv(|v| v * v).sum().sqrt();
        assert!(err < 1e-12, "relative error {err}");
    }
}
