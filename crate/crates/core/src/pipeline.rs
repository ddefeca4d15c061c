//! The simulated comparison: one scene acquired by a conventional camera
//! and by CAKE with random and dual-scale masks, then reconstructed by
//! spline upsampling, TV-l1 and the flow-constrained program.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::flow::{estimate_flow_field, upsample_coarse, FlowField, HsParams, MotionOperator};
use crate::geometry::SamplingGeometry;
use crate::masks::{MaskFamily, MaskSequence};
use crate::operators::{CakeOperator, WaveletTransform};
use crate::scene::{synth_scene, SceneSpec};
use crate::solvers::{
    coarse_estimate, conventional_baseline, reconstruct_optical_flow, reconstruct_tv_l1, spline_baseline,
    FlowConstrainedParams, SolverReport, TvL1Params,
};
use crate::video::{interior_frames, rmse_percent, NoiseModel, RectRegion, VideoCube};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub geometry: SamplingGeometry,
    /// Dual-scale weights `(alpha, beta)`.
    pub weights: (f64, f64),
    pub noise_sigma: f64,
    pub tvl1: TvL1Params,
    pub flow_constrained: FlowConstrainedParams,
    pub horn_schunck: HsParams,
    /// Wavelet depth for the flow-constrained program; `None` is the maximum.
    pub wavelet_levels: Option<usize>,
    /// Scoring region; `None` is the whole frame.
    pub roi: Option<RectRegion>,
    /// Exposure blocks dropped at each end of the sequence when scoring.
    pub discount_blocks: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            geometry: SamplingGeometry::new(64, 64, 32, 2, 2, 4).expect("valid default geometry"),
            weights: (0.383, 0.924),
            noise_sigma: 4e-4,
            tvl1: TvL1Params::default(),
            flow_constrained: FlowConstrainedParams::default(),
            horn_schunck: HsParams::default(),
            wavelet_levels: None,
            roi: None,
            discount_blocks: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn roi(&self) -> RectRegion {
        self.roi.clone().unwrap_or_else(|| RectRegion::full(self.geometry.n1, self.geometry.n2))
    }

    pub fn scored_frames(&self) -> std::ops::Range<usize> {
        let g = &self.geometry;
        if self.discount_blocks == 0 {
            0..g.frames
        } else {
            interior_frames(g.frames, self.discount_blocks * g.block_len)
        }
    }

    pub fn wavelet(&self) -> Result<WaveletTransform> {
        let g = &self.geometry;
        match self.wavelet_levels {
            Some(l) => WaveletTransform::new(g.n1, g.n2, l),
            None => Ok(WaveletTransform::with_max_levels(g.n1, g.n2)),
        }
    }
}

/// Seeds of every random stage of one trial, derived from a single seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSeeds {
    pub scene: u64,
    pub cake_masks: u64,
    pub dsm_masks: u64,
    pub cake_noise: u64,
    pub dsm_noise: u64,
    pub conventional_noise: u64,
}

impl TrialSeeds {
    pub fn derive(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            scene: rng.random(),
            cake_masks: rng.random(),
            dsm_masks: rng.random(),
            cake_noise: rng.random(),
            dsm_noise: rng.random(),
            conventional_noise: rng.random(),
        }
    }
}

/// Everything a trial measures.
#[derive(Debug, Clone)]
pub struct Acquisition {
    pub scene: VideoCube,
    pub cake_masks: MaskSequence,
    pub dsm_masks: MaskSequence,
    pub cake_measurement: VideoCube,
    pub dsm_measurement: VideoCube,
    pub conventional: VideoCube,
}

pub fn noise(config: &ExperimentConfig, seed: u64) -> Result<NoiseModel> {
    if config.noise_sigma == 0.0 {
        Ok(NoiseModel::None)
    } else {
        NoiseModel::gaussian(config.noise_sigma, seed)
    }
}

pub fn acquire(config: &ExperimentConfig, seeds: &TrialSeeds) -> Result<Acquisition> {
    let g = &config.geometry;
    let scene = synth_scene(&SceneSpec::translating_objects(g.n1, g.n2, seeds.scene), g);
    let cake_masks = MaskSequence::generate(MaskFamily::Rademacher, g, seeds.cake_masks, config.weights)?;
    let dsm_masks = MaskSequence::generate(MaskFamily::DualScale, g, seeds.dsm_masks, config.weights)?;
    let cake_measurement =
        CakeOperator::with_subsampling(&cake_masks)?.cake_forward(&scene, &noise(config, seeds.cake_noise)?)?;
    let dsm_measurement =
        CakeOperator::with_subsampling(&dsm_masks)?.cake_forward(&scene, &noise(config, seeds.dsm_noise)?)?;
    let conventional = conventional_baseline(&scene, g, &noise(config, seeds.conventional_noise)?)?;
    Ok(Acquisition {
        scene,
        cake_masks,
        dsm_masks,
        cake_measurement,
        dsm_measurement,
        conventional,
    })
}

/// Coarse preview, its full-rate upsampling, and the flow estimated on it.
#[derive(Debug, Clone)]
pub struct FlowStage {
    pub coarse: VideoCube,
    pub upsampled: VideoCube,
    pub flow: FlowField,
}

pub fn flow_stage(config: &ExperimentConfig, acq: &Acquisition) -> Result<FlowStage> {
    let coarse = coarse_estimate(&acq.dsm_measurement, &acq.dsm_masks)?;
    let upsampled = upsample_coarse(&coarse, &config.geometry)?;
    let flow = estimate_flow_field(&upsampled, &config.horn_schunck)?;
    Ok(FlowStage {
        coarse,
        upsampled,
        flow,
    })
}

pub const METHODS: [&str; 4] = ["spline", "CAKE", "DSM-CAKE", "OF-CAKE"];

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub seeds: TrialSeeds,
    /// Estimates in [`METHODS`] order.
    pub estimates: Vec<VideoCube>,
    /// RMSE (%) in [`METHODS`] order.
    pub rmse: Vec<f64>,
    pub reports: Vec<SolverReport>,
    pub flow: FlowStage,
}

pub fn run_trial(config: &ExperimentConfig, seed: u64) -> Result<TrialOutcome> {
    let g = &config.geometry;
    let seeds = TrialSeeds::derive(seed);
    let acq = acquire(config, &seeds)?;
    let spline = spline_baseline(&acq.conventional, g)?;

    let cake_op = CakeOperator::with_subsampling(&acq.cake_masks)?;
    let (cake, cake_report) = reconstruct_tv_l1(&cake_op, &acq.cake_measurement, &config.tvl1)?;

    let dsm_op = CakeOperator::with_subsampling(&acq.dsm_masks)?;
    let (dsm, dsm_report) = reconstruct_tv_l1(&dsm_op, &acq.dsm_measurement, &config.tvl1)?;

    let flow = flow_stage(config, &acq)?;
    let motion = MotionOperator::new(&flow.flow)?;
    let wavelet = config.wavelet()?;
    let (of, of_report) =
        reconstruct_optical_flow(&dsm_op, &acq.dsm_measurement, &motion, &wavelet, &config.flow_constrained)?;

    let estimates = vec![spline, cake, dsm, of];
    let roi = config.roi();
    let frames = config.scored_frames();
    let rmse = estimates
        .iter()
        .map(|e| rmse_percent(e, &acq.scene, &roi, frames.clone()))
        .collect::<Result<_>>()?;
    Ok(TrialOutcome {
        seeds,
        estimates,
        rmse,
        reports: vec![cake_report, dsm_report, of_report],
        flow,
    })
}
