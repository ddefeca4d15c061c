//! WebAssembly bindings behind `www/index.html`.
//!
//! Images cross the boundary as row-major `Float64Array`s; the page owns
//! the colour mapping.

use cake_core::flow::upsample_coarse;
use cake_core::masks::{DsmComponents, MaskFamily, MaskSequence};
use cake_core::operators::CakeOperator;
use cake_core::scene::{synth_scene, SceneSpec};
use cake_core::solvers::{coarse_estimate, reconstruct_tv_l1, TvL1Params};
use cake_core::video::rmse_percent;
use cake_core::{NoiseModel, RectRegion, SamplingGeometry, VideoCube};
use ndarray::{Array2, Axis};
use wasm_bindgen::prelude::*;

fn js(e: cake_core::CakeError) -> JsError {
    JsError::new(&e.to_string())
}

fn flat(a: &Array2<f64>) -> Vec<f64> {
    a.iter().copied().collect()
}

fn frame(cube: &VideoCube, t: usize) -> Result<Vec<f64>, JsError> {
    if t >= cube.frames() {
        return Err(JsError::new(&format!(
            "frame {t} out of range 0..{}",
            cube.frames()
        )));
    }
    Ok(cube.data.index_axis(Axis(0), t).iter().copied().collect())
}

/// One dual-scale mask sequence, split into its low- and high-resolution
/// parts.
#[wasm_bindgen]
pub struct MaskExplorer {
    masks: MaskSequence,
}

#[wasm_bindgen]
impl MaskExplorer {
    #[wasm_bindgen(constructor)]
    /// Masks for two exposure blocks of an `n x n` scene.
    pub fn new(
        n: usize,
        d: usize,
        block_len: usize,
        alpha: f64,
        beta: f64,
        seed: u64,
    ) -> Result<MaskExplorer, JsError> {
        let g = SamplingGeometry::new(n, n, 2 * block_len, d, d, block_len).map_err(js)?;
        let masks =
            MaskSequence::generate(MaskFamily::DualScale, &g, seed, (alpha, beta)).map_err(js)?;
        Ok(Self { masks })
    }

    pub fn count(&self) -> usize {
        self.masks.masks.len()
    }

    /// Weights after normalization onto the unit circle.
    pub fn weights(&self) -> Vec<f64> {
        vec![self.components().alpha, self.components().beta]
    }

    pub fn mask(&self, t: usize) -> Vec<f64> {
        flat(&self.masks.masks[t])
    }

    pub fn measured_side(&self) -> usize {
        self.masks.geometry.m1()
    }

    /// Low-resolution part shared by the block containing frame `t`.
    pub fn low_res(&self, t: usize) -> Vec<f64> {
        flat(&self.components().low_res[self.masks.geometry.block_of(t)])
    }

    pub fn high_res(&self, t: usize) -> Vec<f64> {
        flat(&self.components().high_res[t])
    }

    /// Real low-resolution kernel of the block containing frame `t`, at
    /// detector resolution.
    pub fn low_res_kernel(&self, t: usize) -> Vec<f64> {
        flat(
            &self
                .components()
                .low_res_kernel(self.masks.geometry.block_of(t)),
        )
    }
}

impl MaskExplorer {
    fn components(&self) -> &DsmComponents {
        self.masks
            .dsm
            .as_ref()
            .expect("dual-scale masks carry their components")
    }
}

/// A synthetic scene, its dual-scale CAKE measurements and estimates
/// recovered from them.
#[wasm_bindgen]
pub struct Session {
    geometry: SamplingGeometry,
    masks: MaskSequence,
    scene: VideoCube,
    measurement: VideoCube,
    coarse: VideoCube,
    recon: Option<VideoCube>,
}

#[wasm_bindgen]
impl Session {
    /// Renders an `n x n x frames` scene and simulates the measurement with
    /// noise of standard deviation `sigma`.
    #[wasm_bindgen(constructor)]
    pub fn new(
        n: usize,
        frames: usize,
        d: usize,
        block_len: usize,
        sigma: f64,
        seed: u64,
    ) -> Result<Session, JsError> {
        let geometry = SamplingGeometry::new(n, n, frames, d, d, block_len).map_err(js)?;
        let scene = synth_scene(&SceneSpec::translating_objects(n, n, seed), &geometry);
        let masks = MaskSequence::generate(
            MaskFamily::DualScale,
            &geometry,
            seed ^ 0x9e37_79b9,
            (0.383, 0.924),
        )
        .map_err(js)?;
        let noise = if sigma > 0.0 {
            NoiseModel::gaussian(sigma, seed.wrapping_add(1)).map_err(js)?
        } else {
            NoiseModel::None
        };
        let op = CakeOperator::with_subsampling(&masks).map_err(js)?;
        let measurement = op.cake_forward(&scene, &noise).map_err(js)?;
        let coarse = upsample_coarse(
            &coarse_estimate(&measurement, &masks).map_err(js)?,
            &geometry,
        )
        .map_err(js)?;
        Ok(Self {
            geometry,
            masks,
            scene,
            measurement,
            coarse,
            recon: None,
        })
    }

    pub fn frames(&self) -> usize {
        self.geometry.frames
    }

    pub fn blocks(&self) -> usize {
        self.geometry.blocks()
    }

    pub fn measured_side(&self) -> usize {
        self.geometry.m1()
    }

    pub fn scene_frame(&self, t: usize) -> Result<Vec<f64>, JsError> {
        frame(&self.scene, t)
    }

    pub fn measurement(&self, k: usize) -> Result<Vec<f64>, JsError> {
        frame(&self.measurement, k)
    }

    /// Closed-form preview, spline-upsampled to full rate.
    pub fn coarse_frame(&self, t: usize) -> Result<Vec<f64>, JsError> {
        frame(&self.coarse, t)
    }

    pub fn coarse_rmse(&self) -> Result<f64, JsError> {
        self.rmse(&self.coarse)
    }

    /// Runs TV-l1 reconstruction and returns its RMSE in percent.
    pub fn reconstruct(
        &mut self,
        tau_tv: f64,
        tau_l1: f64,
        max_iters: usize,
    ) -> Result<f64, JsError> {
        let params = TvL1Params {
            tau_tv,
            tau_l1,
            max_iters,
            ..TvL1Params::default()
        };
        let op = CakeOperator::with_subsampling(&self.masks).map_err(js)?;
        let (est, _) = reconstruct_tv_l1(&op, &self.measurement, &params).map_err(js)?;
        let err = self.rmse(&est)?;
        self.recon = Some(est);
        Ok(err)
    }

    pub fn recon_frame(&self, t: usize) -> Result<Vec<f64>, JsError> {
        match &self.recon {
            Some(cube) => frame(cube, t),
            None => Err(JsError::new("no reconstruction yet")),
        }
    }

    fn rmse(&self, est: &VideoCube) -> Result<f64, JsError> {
        let g = &self.geometry;
        rmse_percent(est, &self.scene, &RectRegion::full(g.n1, g.n2), 0..g.frames).map_err(js)
    }
}
