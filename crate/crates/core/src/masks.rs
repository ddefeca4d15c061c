//! Coded-aperture mask sequences.
//!
//! Three families are supported:
//! * Rademacher: iid entries `±sqrt(d/n)`.
//! * Phase-shift: real kernels whose transfer function has unit-modulus,
//!   conjugate-symmetric random phases.
//! * Dual-scale (DSM): `h_t = alpha * hL_k + beta * hH_t`, where `hL_k` is a
//!   block-replicated low-resolution phase-shift kernel shared by every frame
//!   of exposure block `k`, and `hH_t` is a high-resolution binary pattern
//!   whose every `d1 x d2` block sums to zero.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CakeError, Result};
use crate::fft::Fft2;
use crate::geometry::SamplingGeometry;

/// Tolerance on `alpha^2 + beta^2` before the weights are renormalized.
pub const WEIGHT_SPHERE_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MaskFamily {
    Rademacher,
    PhaseShift,
    DualScale,
}

impl MaskFamily {
    pub fn code(self) -> u32 {
        match self {
            MaskFamily::Rademacher => 0,
            MaskFamily::PhaseShift => 1,
            MaskFamily::DualScale => 2,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(MaskFamily::Rademacher),
            1 => Some(MaskFamily::PhaseShift),
            2 => Some(MaskFamily::DualScale),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MaskFamily::Rademacher => "rademacher",
            MaskFamily::PhaseShift => "phase_shift",
            MaskFamily::DualScale => "dsm",
        }
    }
}

impl std::str::FromStr for MaskFamily {
    type Err = CakeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rademacher" => Ok(MaskFamily::Rademacher),
            "phase_shift" | "phase-shift" => Ok(MaskFamily::PhaseShift),
            "dsm" | "dual_scale" => Ok(MaskFamily::DualScale),
            other => Err(CakeError::InvalidArgument(format!("unknown mask family {other:?}"))),
        }
    }
}

/// The two scales of a dual-scale mask sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct DsmComponents {
    /// Weights after renormalization onto the unit circle.
    pub alpha: f64,
    pub beta: f64,
    /// One `m1 x m2` unit-modulus transfer function per exposure block.
    pub spectra: Vec<Array2<Complex64>>,
    /// `hL_k`, block-replicated to `n1 x n2`.
    pub low_res: Vec<Array2<f64>>,
    /// `hH_t`, one per high-rate frame.
    pub high_res: Vec<Array2<f64>>,
}

impl DsmComponents {
    /// Real kernel `F^{-1} sigma_k` at measurement resolution.
    pub fn low_res_kernel(&self, k: usize) -> Array2<f64> {
        let (r, c) = self.spectra[k].dim();
        Fft2::new(r, c).inverse_real(self.spectra[k].clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskSequence {
    pub geometry: SamplingGeometry,
    pub family: MaskFamily,
    pub seed: u64,
    /// `h_t` for every high-rate frame, at reconstruction resolution.
    pub masks: Vec<Array2<f64>>,
    pub dsm: Option<DsmComponents>,
}

impl MaskSequence {
    pub fn generate(
        family: MaskFamily,
        geometry: &SamplingGeometry,
        seed: u64,
        weights: (f64, f64),
    ) -> Result<Self> {
        match family {
            MaskFamily::Rademacher => Ok(gen_rademacher(geometry, seed)),
            MaskFamily::PhaseShift => Ok(gen_phase_shift_sequence(geometry, seed)),
            MaskFamily::DualScale => gen_dsm(geometry, weights.0, weights.1, seed),
        }
    }

    /// Identity masks (Kronecker delta at the origin) for every frame.
    pub fn delta(geometry: &SamplingGeometry) -> Self {
        let mut delta = Array2::zeros((geometry.n1, geometry.n2));
        delta[[0, 0]] = 1.0;
        Self {
            geometry: *geometry,
            family: MaskFamily::Rademacher,
            seed: 0,
            masks: vec![delta; geometry.frames],
            dsm: None,
        }
    }

    pub fn amplitude(&self) -> f64 {
        binary_amplitude(&self.geometry)
    }
}

/// Magnitude `sqrt(d/n)` of the binary mask entries.
pub fn binary_amplitude(geometry: &SamplingGeometry) -> f64 {
    (geometry.d() as f64 / geometry.n() as f64).sqrt()
}

pub fn gen_rademacher(geometry: &SamplingGeometry, seed: u64) -> MaskSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = binary_amplitude(geometry);
    let masks = (0..geometry.frames)
        .map(|_| {
            Array2::from_shape_simple_fn((geometry.n1, geometry.n2), || {
                if rng.random::<bool>() {
                    a
                } else {
                    -a
                }
            })
        })
        .collect();
    MaskSequence {
        geometry: *geometry,
        family: MaskFamily::Rademacher,
        seed,
        masks,
        dsm: None,
    }
}

/// Random unit-modulus transfer function with conjugate symmetry
/// `sigma[-l] = conj(sigma[l])`.
///
/// Self-conjugate bins (DC, and the Nyquist rows/columns for even sizes) get
/// a random sign; every other bin pair shares one uniform phase.
pub fn random_phase_spectrum<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Array2<Complex64> {
    let mut sigma = Array2::<Complex64>::zeros((rows, cols));
    for i in 0..rows {
        for j in 0..cols {
            let (pi, pj) = ((rows - i) % rows, (cols - j) % cols);
            let here = i * cols + j;
            let partner = pi * cols + pj;
            if partner == here {
                sigma[[i, j]] = if rng.random::<bool>() {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(-1.0, 0.0)
                };
            } else if partner > here {
                let phi = rng.random::<f64>() * 2.0 * PI;
                let v = Complex64::from_polar(1.0, phi);
                sigma[[i, j]] = v;
                sigma[[pi, pj]] = v.conj();
            }
        }
    }
    sigma
}

/// A phase-shift kernel together with its transfer function.
#[derive(Debug, Clone)]
pub struct PhaseShiftKernel {
    pub kernel: Array2<f64>,
    pub spectrum: Array2<Complex64>,
}

/// Real kernel `h = F^{-1} sigma` with a random phase spectrum.
pub fn gen_phase_shift(rows: usize, cols: usize, seed: u64) -> PhaseShiftKernel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spectrum = random_phase_spectrum(rows, cols, &mut rng);
    let kernel = Fft2::new(rows, cols).inverse_real(spectrum.clone());
    PhaseShiftKernel { kernel, spectrum }
}

/// Phase-shift masks for every frame, scaled by `sqrt(d)` so that
/// `||h_t||^2 = n/m` like the other families.
pub fn gen_phase_shift_sequence(geometry: &SamplingGeometry, seed: u64) -> MaskSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fft = Fft2::new(geometry.n1, geometry.n2);
    let scale = (geometry.d() as f64).sqrt();
    let masks = (0..geometry.frames)
        .map(|_| {
            let sigma = random_phase_spectrum(geometry.n1, geometry.n2, &mut rng);
            fft.inverse_real(sigma) * scale
        })
        .collect();
    MaskSequence {
        geometry: *geometry,
        family: MaskFamily::PhaseShift,
        seed,
        masks,
        dsm: None,
    }
}

/// Replicates each low-resolution pixel over its `d1 x d2` block.
pub(crate) fn replicate_blocks(low: &Array2<f64>, d1: usize, d2: usize) -> Array2<f64> {
    let (m1, m2) = low.dim();
    Array2::from_shape_fn((m1 * d1, m2 * d2), |(i, j)| low[[i / d1, j / d2]])
}

/// Checks `alpha^2 + beta^2 = 1` up to [`WEIGHT_SPHERE_TOLERANCE`] and
/// projects the pair onto the unit circle.
pub fn normalize_weights(alpha: f64, beta: f64) -> Result<(f64, f64)> {
    let norm = alpha * alpha + beta * beta;
    if !norm.is_finite() || (norm - 1.0).abs() > WEIGHT_SPHERE_TOLERANCE {
        return Err(CakeError::InvalidWeights { alpha, beta, norm });
    }
    let r = norm.sqrt();
    Ok((alpha / r, beta / r))
}

pub fn gen_dsm(geometry: &SamplingGeometry, alpha: f64, beta: f64, seed: u64) -> Result<MaskSequence> {
    let d = geometry.d();
    if d % 2 != 0 {
        return Err(CakeError::BlockParity(d));
    }
    let (alpha, beta) = normalize_weights(alpha, beta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m1, m2) = (geometry.m1(), geometry.m2());
    let low_fft = Fft2::new(m1, m2);

    let spectra: Vec<_> = (0..geometry.blocks())
        .map(|_| random_phase_spectrum(m1, m2, &mut rng))
        .collect();
    // Unit-modulus spectrum with the 1/m inverse gives ||g||^2 = 1, so the
    // replicated kernel already has ||hL||^2 = d = n/m.
    let low_res: Vec<_> = spectra
        .iter()
        .map(|s| replicate_blocks(&low_fft.inverse_real(s.clone()), geometry.d1, geometry.d2))
        .collect();

    let a = binary_amplitude(geometry);
    let mut signs: Vec<f64> = (0..d).map(|q| if q < d / 2 { a } else { -a }).collect();
    let high_res: Vec<_> = (0..geometry.frames)
        .map(|_| {
            let mut h = Array2::zeros((geometry.n1, geometry.n2));
            for bi in 0..m1 {
                for bj in 0..m2 {
                    signs.shuffle(&mut rng);
                    for (q, &v) in signs.iter().enumerate() {
                        h[[bi * geometry.d1 + q / geometry.d2, bj * geometry.d2 + q % geometry.d2]] = v;
                    }
                }
            }
            h
        })
        .collect();

    let masks = (0..geometry.frames)
        .map(|t| &low_res[geometry.block_of(t)] * alpha + &high_res[t] * beta)
        .collect();
    Ok(MaskSequence {
        geometry: *geometry,
        family: MaskFamily::DualScale,
        seed,
        masks,
        dsm: Some(DsmComponents {
            alpha,
            beta,
            spectra,
            low_res,
            high_res,
        }),
    })
}

/// A non-negative mask realizable by an open/closed aperture, with the
/// affine map back to the signed mask.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalMask {
    pub values: Array2<f64>,
    /// Signed amplitude `sqrt(d/n)` mapped to `[0, 1/n]`.
    pub amplitude: f64,
    pub pixels: usize,
}

impl PhysicalMask {
    /// `signed = scale * physical + offset`.
    pub fn affine(&self) -> (f64, f64) {
        (2.0 * self.amplitude * self.pixels as f64, -self.amplitude)
    }

    pub fn to_signed(&self) -> Array2<f64> {
        let (scale, offset) = self.affine();
        self.values.mapv(|p| scale * p + offset)
    }
}

/// Maps a binary `±sqrt(d/n)` mask affinely onto `[0, 1/n]`.
pub fn to_physical(mask: &Array2<f64>, geometry: &SamplingGeometry) -> Result<PhysicalMask> {
    let a = binary_amplitude(geometry);
    let tol = 1e-12 * a.max(1.0);
    if mask.dim() != (geometry.n1, geometry.n2) {
        return Err(CakeError::ShapeMismatch {
            expected: format!("{:?}", (geometry.n1, geometry.n2)),
            actual: format!("{:?}", mask.dim()),
        });
    }
    if let Some(bad) = mask.iter().find(|v| (v.abs() - a).abs() > tol) {
        return Err(CakeError::UnsupportedMask(format!(
            "entry {bad} is not ±{a}; only binary masks have a physical remap"
        )));
    }
    let n = geometry.n() as f64;
    Ok(PhysicalMask {
        values: mask.mapv(|v| (v + a) / (2.0 * a) / n),
        amplitude: a,
        pixels: geometry.n(),
    })
}
