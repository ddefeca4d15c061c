//! The three detector models mapping an `n1 x n2` image onto the
//! `m1 x m2` focal plane.

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CakeError, Result};

fn check_divisible(dim: (usize, usize), d1: usize, d2: usize) -> Result<()> {
    if d1 == 0 || d2 == 0 || dim.0 % d1 != 0 || dim.1 % d2 != 0 {
        return Err(CakeError::ShapeMismatch {
            expected: format!("multiples of ({d1}, {d2})"),
            actual: format!("{dim:?}"),
        });
    }
    Ok(())
}

/// Keeps the sample at offset `phase` inside every `d1 x d2` block.
pub fn subsample(image: ArrayView2<f64>, d1: usize, d2: usize, phase: (usize, usize)) -> Result<Array2<f64>> {
    check_divisible(image.dim(), d1, d2)?;
    if phase.0 >= d1 || phase.1 >= d2 {
        return Err(CakeError::InvalidArgument(format!(
            "subsampling phase {phase:?} outside {d1}x{d2} block"
        )));
    }
    let (n1, n2) = image.dim();
    Ok(Array2::from_shape_fn((n1 / d1, n2 / d2), |(l1, l2)| {
        image[[l1 * d1 + phase.0, l2 * d2 + phase.1]]
    }))
}

/// Transpose of [`subsample`]: scatters onto the kept lattice, zero elsewhere.
pub fn subsample_adjoint(low: ArrayView2<f64>, d1: usize, d2: usize, phase: (usize, usize)) -> Array2<f64> {
    let (m1, m2) = low.dim();
    let mut out = Array2::zeros((m1 * d1, m2 * d2));
    for ((l1, l2), &v) in low.indexed_iter() {
        out[[l1 * d1 + phase.0, l2 * d2 + phase.1]] = v;
    }
    out
}

/// Sums every `d1 x d2` block.
pub fn integrate_downsample(image: ArrayView2<f64>, d1: usize, d2: usize) -> Result<Array2<f64>> {
    check_divisible(image.dim(), d1, d2)?;
    let (n1, n2) = image.dim();
    let mut out = Array2::zeros((n1 / d1, n2 / d2));
    for ((i, j), &v) in image.indexed_iter() {
        out[[i / d1, j / d2]] += v;
    }
    Ok(out)
}

/// Transpose of [`integrate_downsample`]: replicates each value over its block.
pub fn integrate_adjoint(low: ArrayView2<f64>, d1: usize, d2: usize) -> Array2<f64> {
    let (m1, m2) = low.dim();
    Array2::from_shape_fn((m1 * d1, m2 * d2), |(i, j)| low[[i / d1, j / d2]])
}

/// Per-pixel modulation applied before integration downsampling.
#[derive(Debug, Clone, PartialEq)]
pub struct SignSequence {
    pub values: Array2<f64>,
    pub seed: u64,
    /// `{0, 1}` modulation instead of `{-1, +1}`.
    pub binary: bool,
}

impl SignSequence {
    pub fn generate(n1: usize, n2: usize, seed: u64, binary: bool) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let low = if binary { 0.0 } else { -1.0 };
        let values = Array2::from_shape_simple_fn((n1, n2), || if rng.random::<bool>() { 1.0 } else { low });
        Self { values, seed, binary }
    }

    pub fn validate(&self) -> Result<()> {
        let low = if self.binary { 0.0 } else { -1.0 };
        match self.values.iter().find(|&&v| v != 1.0 && v != low) {
            Some(bad) => Err(CakeError::InvalidArgument(format!(
                "modulation value {bad} not in {{{low}, 1}}"
            ))),
            None => Ok(()),
        }
    }
}

/// `D diag(s) x`: modulate by the sign sequence, then integrate.
pub fn random_demod_downsample(
    image: ArrayView2<f64>,
    signs: &SignSequence,
    d1: usize,
    d2: usize,
) -> Result<Array2<f64>> {
    signs.validate()?;
    if signs.values.dim() != image.dim() {
        return Err(CakeError::ShapeMismatch {
            expected: format!("{:?}", image.dim()),
            actual: format!("{:?}", signs.values.dim()),
        });
    }
    integrate_downsample((&image * &signs.values).view(), d1, d2)
}

pub fn random_demod_adjoint(low: ArrayView2<f64>, signs: &SignSequence, d1: usize, d2: usize) -> Array2<f64> {
    integrate_adjoint(low, d1, d2) * &signs.values
}

/// Detector model of a [`crate::operators::CakeOperator`].
#[derive(Debug, Clone, PartialEq)]
pub enum Downsampler {
    Subsample { phase: (usize, usize) },
    Integrate,
    RandomDemod(SignSequence),
}

impl Downsampler {
    /// Point subsampling at the last pixel of each block, the lattice on
    /// which the dual-scale coarse estimator is exact.
    pub fn subsample_default(d1: usize, d2: usize) -> Self {
        Downsampler::Subsample {
            phase: (d1 - 1, d2 - 1),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Downsampler::Subsample { .. } => "subsample",
            Downsampler::Integrate => "integrate",
            Downsampler::RandomDemod(s) if s.binary => "binary_demod",
            Downsampler::RandomDemod(_) => "random_demod",
        }
    }

    pub fn apply(&self, image: ArrayView2<f64>, d1: usize, d2: usize) -> Result<Array2<f64>> {
        match self {
            Downsampler::Subsample { phase } => subsample(image, d1, d2, *phase),
            Downsampler::Integrate => integrate_downsample(image, d1, d2),
            Downsampler::RandomDemod(s) => random_demod_downsample(image, s, d1, d2),
        }
    }

    pub fn adjoint(&self, low: ArrayView2<f64>, d1: usize, d2: usize) -> Array2<f64> {
        match self {
            Downsampler::Subsample { phase } => subsample_adjoint(low, d1, d2, *phase),
            Downsampler::Integrate => integrate_adjoint(low, d1, d2),
            Downsampler::RandomDemod(s) => random_demod_adjoint(low, s, d1, d2),
        }
    }
}
