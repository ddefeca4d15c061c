//! Shape arithmetic shared by every stage of the pipeline.

use crate::error::{CakeError, Result};

/// Scene and measurement dimensions for one acquisition.
///
/// `n1 x n2` is the reconstruction resolution, `frames` the number of
/// high-rate frames, `d1 x d2` the spatial downsampling factors and
/// `block_len` the number of high-rate frames summed into one measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SamplingGeometry {
    pub n1: usize,
    pub n2: usize,
    pub frames: usize,
    pub d1: usize,
    pub d2: usize,
    pub block_len: usize,
}

impl SamplingGeometry {
    pub fn new(
        n1: usize,
        n2: usize,
        frames: usize,
        d1: usize,
        d2: usize,
        block_len: usize,
    ) -> Result<Self> {
        let named = [
            ("n1", n1),
            ("n2", n2),
            ("N", frames),
            ("d1", d1),
            ("d2", d2),
            ("B", block_len),
        ];
        for (name, v) in named {
            if v == 0 {
                return Err(CakeError::Dimension(format!("{name} must be positive")));
            }
        }
        for (num, den, a, b) in [(n1, d1, "n1", "d1"), (n2, d2, "n2", "d2"), (frames, block_len, "N", "B")] {
            if num % den != 0 {
                return Err(CakeError::Dimension(format!(
                    "{b} = {den} does not divide {a} = {num}"
                )));
            }
        }
        // Guard the products used for buffer sizes.
        n1.checked_mul(n2)
            .and_then(|n| n.checked_mul(frames))
            .ok_or_else(|| CakeError::Dimension("n1 * n2 * N overflows".into()))?;
        Ok(Self {
            n1,
            n2,
            frames,
            d1,
            d2,
            block_len,
        })
    }

    pub fn m1(&self) -> usize {
        self.n1 / self.d1
    }

    pub fn m2(&self) -> usize {
        self.n2 / self.d2
    }

    /// Pixels per measurement frame.
    pub fn m(&self) -> usize {
        self.m1() * self.m2()
    }

    /// Pixels per scene frame.
    pub fn n(&self) -> usize {
        self.n1 * self.n2
    }

    /// Pixels per downsampling block.
    pub fn d(&self) -> usize {
        self.d1 * self.d2
    }

    /// Number of low-rate measurement frames.
    pub fn blocks(&self) -> usize {
        self.frames / self.block_len
    }

    /// Exposure block containing high-rate frame `t` (zero based).
    pub fn block_of(&self, t: usize) -> usize {
        t / self.block_len
    }

    /// Frames summed into measurement `k`.
    pub fn block_frames(&self, k: usize) -> std::ops::Range<usize> {
        k * self.block_len..(k + 1) * self.block_len
    }

    pub fn scene_shape(&self) -> (usize, usize, usize) {
        (self.frames, self.n1, self.n2)
    }

    pub fn measurement_shape(&self) -> (usize, usize, usize) {
        (self.blocks(), self.m1(), self.m2())
    }

    pub fn scene_len(&self) -> usize {
        self.n() * self.frames
    }

    pub fn measurement_len(&self) -> usize {
        self.m() * self.blocks()
    }

    /// Ratio of measured values to unknowns, `mM / nN`.
    pub fn compression_ratio(&self) -> f64 {
        self.measurement_len() as f64 / self.scene_len() as f64
    }
}
