use ndarray::Array3;

use crate::error::Result;
use crate::flow::upsample_coarse;
use crate::geometry::SamplingGeometry;
use crate::video::{check_shape, CubeKind, NoiseModel, VideoCube};

/// A conventional camera with the same measurement budget: the mean over
/// every `d1 x d2 x B` block, plus noise.
pub fn conventional_baseline(scene: &VideoCube, geometry: &SamplingGeometry, noise: &NoiseModel) -> Result<VideoCube> {
    check_shape(&scene.data, geometry.scene_shape())?;
    let (d1, d2, b) = (geometry.d1, geometry.d2, geometry.block_len);
    let mut out = Array3::zeros(geometry.measurement_shape());
    for ((t, i, j), &v) in scene.data.indexed_iter() {
        out[[t / b, i / d1, j / d2]] += v;
    }
    out /= (geometry.d() * b) as f64;
    noise.apply(&mut out);
    Ok(VideoCube::new(CubeKind::Measurement, b, out))
}

/// Spline upsampling of a block-averaged cube back to full rate and resolution.
pub fn spline_baseline(coarse: &VideoCube, geometry: &SamplingGeometry) -> Result<VideoCube> {
    upsample_coarse(coarse, geometry)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_scene_is_recovered_exactly() {
        let g = SamplingGeometry::new(8, 8, 8, 2, 2, 4).unwrap();
        let scene = VideoCube::scene(Array3::from_elem(g.scene_shape(), 0.4), 4);
        let coarse = conventional_baseline(&scene, &g, &NoiseModel::None).unwrap();
        assert!(coarse.data.iter().all(|&v| (v - 0.4).abs() < 1e-15));
        let est = spline_baseline(&coarse, &g).unwrap();
        assert!(est.data.iter().all(|&v| (v - 0.4).abs() < 1e-12));
    }

    #[test]
    fn block_means_by_hand() {
        let g = SamplingGeometry::new(2, 2, 2, 2, 2, 2).unwrap();
        let scene = VideoCube::scene(Array3::from_shape_fn((2, 2, 2), |(t, i, j)| (t * 4 + i * 2 + j) as f64), 2);
        let coarse = conventional_baseline(&scene, &g, &NoiseModel::None).unwrap();
        assert_eq!(coarse.data[[0, 0, 0]], 3.5);
    }
}
