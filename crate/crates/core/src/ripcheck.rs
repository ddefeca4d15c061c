//! Empirical checks of the restricted-isometry argument: entrywise Gram
//! concentration against Hoeffding bounds, Gersgorin disc localization of
//! the eigenvalues of `s x s` principal submatrices, and exact `delta_s` by
//! eigendecomposition at toy scale.

use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CakeError, Result};
use crate::geometry::SamplingGeometry;
use crate::masks::{MaskFamily, MaskSequence};
use crate::operators::{DenseOperator, SensingOperator};

/// Largest `nB` for which a Gram matrix is materialized.
pub const GRAM_SIZE_LIMIT: usize = 4096;
/// Supports enumerated exhaustively up to this count.
pub const EXHAUSTIVE_SUPPORT_LIMIT: usize = 100_000;

/// `A^T A` for an operator with at most [`GRAM_SIZE_LIMIT`] columns.
pub fn gram_matrix(op: &dyn SensingOperator) -> Result<DMatrix<f64>> {
    let (f, r, c) = op.scene_shape();
    let cols = f * r * c;
    if cols > GRAM_SIZE_LIMIT {
        return Err(CakeError::SizeGuard(format!("nB = {cols} exceeds {GRAM_SIZE_LIMIT}")));
    }
    let a = DenseOperator::assemble(op)?.matrix;
    Ok(a.transpose() * a)
}

/// Sensing matrix of the subsampling detector read straight off the masks:
/// `[A_t]_{l,k} = h_t[x_l - k]`, where `x_l` is the retained pixel of block `l`.
pub fn subsampled_matrix(masks: &MaskSequence, phase: (usize, usize)) -> DMatrix<f64> {
    let g = &masks.geometry;
    let (n1, n2, m1, m2) = (g.n1, g.n2, g.m1(), g.m2());
    let n = g.n();
    let mut a = DMatrix::zeros(g.measurement_len(), g.scene_len());
    for (t, h) in masks.masks.iter().enumerate() {
        let row0 = g.block_of(t) * m1 * m2;
        for l1 in 0..m1 {
            for l2 in 0..m2 {
                let (x1, x2) = (l1 * g.d1 + phase.0, l2 * g.d2 + phase.1);
                for k1 in 0..n1 {
                    for k2 in 0..n2 {
                        a[(row0 + l1 * m2 + l2, t * n + k1 * n2 + k2)] =
                            h[[(x1 + n1 - k1) % n1, (x2 + n2 - k2) % n2]];
                    }
                }
            }
        }
    }
    a
}

/// `2 exp(-2 n delta^2 / d)`.
pub fn diagonal_bound(n: usize, d: usize, delta: f64) -> f64 {
    2.0 * (-2.0 * n as f64 * delta * delta / d as f64).exp()
}

/// `4 exp(-n delta^2 / (4 d s^2))`, bounding `P(|G_pq| >= delta / s)`.
pub fn off_diagonal_bound(n: usize, d: usize, s: usize, delta: f64) -> f64 {
    4.0 * (-(n as f64) * delta * delta / (4.0 * d as f64 * (s * s) as f64)).exp()
}

/// Exceedance counts for one class of Gram entries.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClassStats {
    pub entries: u64,
    pub exceedances: u64,
    pub max_abs: f64,
}

impl ClassStats {
    fn record(&mut self, value: f64, threshold: f64) {
        self.entries += 1;
        if value >= threshold {
            self.exceedances += 1;
        }
        self.max_abs = self.max_abs.max(value);
    }

    fn merge(&mut self, other: &Self) {
        self.entries += other.entries;
        self.exceedances += other.exceedances;
        self.max_abs = self.max_abs.max(other.max_abs);
    }

    pub fn frequency(&self) -> f64 {
        if self.entries == 0 {
            0.0
        } else {
            self.exceedances as f64 / self.entries as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialMaxima {
    pub diagonal: f64,
    pub off_diagonal: f64,
}

/// Entrywise Gram statistics over independent mask draws.
///
/// Off-diagonal entries are split into the same-frame pairs whose pixel
/// offsets are multiples of the block size on both axes (`aligned`, where
/// the summands are dependent), the remaining same-frame pairs
/// (`unaligned`), and pairs from different frames (`cross_frame`).
#[derive(Debug, Clone, PartialEq)]
pub struct GramStats {
    pub geometry: SamplingGeometry,
    pub family: MaskFamily,
    pub trials: usize,
    pub sparsity: usize,
    pub delta_d: f64,
    pub delta_o: f64,
    /// `|G_qq - 1|` against `delta_d`.
    pub diagonal: ClassStats,
    /// `|G_pq|` against `delta_o / s`.
    pub aligned: ClassStats,
    pub unaligned: ClassStats,
    pub cross_frame: ClassStats,
    pub per_trial: Vec<TrialMaxima>,
}

impl GramStats {
    pub fn diagonal_bound(&self) -> f64 {
        diagonal_bound(self.geometry.n(), self.geometry.d(), self.delta_d)
    }

    pub fn off_diagonal_bound(&self) -> f64 {
        off_diagonal_bound(self.geometry.n(), self.geometry.d(), self.sparsity, self.delta_o)
    }

    pub fn off_diagonal(&self) -> ClassStats {
        let mut all = self.aligned;
        all.merge(&self.unaligned);
        all.merge(&self.cross_frame);
        all
    }

    /// Whether every empirical frequency is at most its analytic bound.
    pub fn within_bounds(&self) -> bool {
        self.diagonal.frequency() <= self.diagonal_bound()
            && [self.aligned, self.unaligned, self.cross_frame]
                .iter()
                .all(|c| c.frequency() <= self.off_diagonal_bound())
    }

    pub fn to_report(&self, per_trial: bool) -> String {
        let g = &self.geometry;
        let mut s = String::new();
        let _ = writeln!(s, "family={}", self.family.name());
        let _ = writeln!(s, "n={} d={} block_len={} nB={}", g.n(), g.d(), g.block_len, g.scene_len());
        let _ = writeln!(s, "trials={}", self.trials);
        let _ = writeln!(s, "s={} delta_d={} delta_o={}", self.sparsity, self.delta_d, self.delta_o);
        let _ = writeln!(s, "diagonal_bound={:.6e}", self.diagonal_bound());
        let _ = writeln!(s, "off_diagonal_bound={:.6e}", self.off_diagonal_bound());
        for (name, c) in [
            ("diagonal", self.diagonal),
            ("aligned", self.aligned),
            ("unaligned", self.unaligned),
            ("cross_frame", self.cross_frame),
        ] {
            let _ = writeln!(
                s,
                "{name}_entries={} {name}_exceedances={} {name}_frequency={:.6e} {name}_max={:.6}",
                c.entries,
                c.exceedances,
                c.frequency(),
                c.max_abs
            );
        }
        let _ = writeln!(s, "within_bounds={}", self.within_bounds());
        if per_trial {
            s.push_str("trial diagonal_max off_diagonal_max\n");
            for (k, t) in self.per_trial.iter().enumerate() {
                let _ = writeln!(s, "{k} {:.6} {:.6}", t.diagonal, t.off_diagonal);
            }
        }
        s
    }
}

/// Gram concentration over `trials` independent mask sequences.
///
/// Each trial draws masks for one exposure block (`frames = block_len`) with
/// seed `seed + trial` and reads the Gram matrix of the subsampling detector.
pub fn concentration_report(
    geometry: &SamplingGeometry,
    family: MaskFamily,
    trials: usize,
    delta_d: f64,
    delta_o: f64,
    sparsity: usize,
    seed: u64,
) -> Result<GramStats> {
    if trials < 100 {
        return Err(CakeError::InvalidArgument(format!("need at least 100 trials, got {trials}")));
    }
    if sparsity == 0 {
        return Err(CakeError::InvalidArgument("sparsity must be positive".into()));
    }
    let g = SamplingGeometry::new(geometry.n1, geometry.n2, geometry.block_len, geometry.d1, geometry.d2, geometry.block_len)?;
    if g.scene_len() > GRAM_SIZE_LIMIT {
        return Err(CakeError::SizeGuard(format!("nB = {} exceeds {GRAM_SIZE_LIMIT}", g.scene_len())));
    }
    let phase = (g.d1 - 1, g.d2 - 1);
    let weights = (0.383, 0.924);
    let threshold = delta_o / sparsity as f64;

    let per_trial = crate::par::map_indices(trials, |k| -> Result<_> {
        let masks = MaskSequence::generate(family, &g, seed.wrapping_add(k as u64), weights)?;
        let a = subsampled_matrix(&masks, phase);
        let gram = a.transpose() * &a;
        let mut diag = ClassStats::default();
        let mut classes = [ClassStats::default(); 3];
        let n = g.n();
        for q in 0..gram.ncols() {
            diag.record((gram[(q, q)] - 1.0).abs(), delta_d);
            for p in 0..q {
                let (tp, tq) = (p / n, q / n);
                let class = if tp != tq {
                    2
                } else {
                    let (pp, qq) = (p % n, q % n);
                    let dr = (pp / g.n2).abs_diff(qq / g.n2);
                    let dc = (pp % g.n2).abs_diff(qq % g.n2);
                    usize::from(!(dr % g.d1 == 0 && dc % g.d2 == 0))
                };
                classes[class].record(gram[(p, q)].abs(), threshold);
            }
        }
        Ok((diag, classes))
    });

    let mut stats = GramStats {
        geometry: g,
        family,
        trials,
        sparsity,
        delta_d,
        delta_o,
        diagonal: ClassStats::default(),
        aligned: ClassStats::default(),
        unaligned: ClassStats::default(),
        cross_frame: ClassStats::default(),
        per_trial: Vec::with_capacity(trials),
    };
    for res in per_trial {
        let (diag, classes) = res?;
        stats.diagonal.merge(&diag);
        stats.aligned.merge(&classes[0]);
        stats.unaligned.merge(&classes[1]);
        stats.cross_frame.merge(&classes[2]);
        stats.per_trial.push(TrialMaxima {
            diagonal: diag.max_abs,
            off_diagonal: classes.iter().map(|c| c.max_abs).fold(0.0, f64::max),
        });
    }
    Ok(stats)
}

fn binomial(n: usize, k: usize) -> Option<usize> {
    let k = k.min(n.saturating_sub(k));
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Every `s`-subset of `0..n` when there are at most
/// [`EXHAUSTIVE_SUPPORT_LIMIT`], otherwise `samples` random ones if allowed.
pub fn supports(n: usize, s: usize, sampling: Option<(usize, u64)>) -> Result<(Vec<Vec<usize>>, bool)> {
    if s == 0 || s > n {
        return Err(CakeError::InvalidArgument(format!("support size {s} for {n} columns")));
    }
    match binomial(n, s) {
        Some(count) if count <= EXHAUSTIVE_SUPPORT_LIMIT => {
            let mut out = Vec::with_capacity(count);
            let mut idx: Vec<usize> = (0..s).collect();
            loop {
                out.push(idx.clone());
                let mut i = s;
                while i > 0 && idx[i - 1] == n - s + i - 1 {
                    i -= 1;
                }
                if i == 0 {
                    break;
                }
                idx[i - 1] += 1;
                for j in i..s {
                    idx[j] = idx[j - 1] + 1;
                }
            }
            Ok((out, true))
        }
        _ => {
            let (samples, seed) = sampling.ok_or_else(|| {
                CakeError::SizeGuard(format!("too many {s}-subsets of {n} columns to enumerate"))
            })?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = (0..samples)
                .map(|_| {
                    let mut v = sample(&mut rng, n, s).into_vec();
                    v.sort_unstable();
                    v
                })
                .collect();
            Ok((out, false))
        }
    }
}

/// Disc bound on `max |lambda - 1|` for the principal submatrix on `support`.
pub fn gersgorin_delta(gram: &DMatrix<f64>, support: &[usize]) -> (f64, f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &j in support {
        let radius: f64 = support.iter().filter(|&&i| i != j).map(|&i| gram[(i, j)].abs()).sum();
        lo = lo.min(gram[(j, j)] - radius);
        hi = hi.max(gram[(j, j)] + radius);
    }
    (lo, hi, (1.0 - lo).max(hi - 1.0))
}

/// Exact `max(|lambda_max - 1|, |1 - lambda_min|)` for the principal submatrix.
pub fn exact_delta(gram: &DMatrix<f64>, support: &[usize]) -> f64 {
    let sub = DMatrix::from_fn(support.len(), support.len(), |i, j| gram[(support[i], support[j])]);
    let eig = SymmetricEigen::new(sub).eigenvalues;
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (hi - 1.0).abs().max((1.0 - lo).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenBounds {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Disc-based bound on `delta_s`.
    pub delta: f64,
    pub supports: usize,
    pub exhaustive: bool,
}

/// Gersgorin localization of the eigenvalues of every `s x s` principal
/// submatrix of `gram`.
pub fn gersgorin_eigen_bounds(gram: &DMatrix<f64>, s: usize, sampling: Option<(usize, u64)>) -> Result<EigenBounds> {
    let (list, exhaustive) = supports(gram.ncols(), s, sampling)?;
    let mut out = EigenBounds {
        lambda_min: f64::INFINITY,
        lambda_max: f64::NEG_INFINITY,
        delta: 0.0,
        supports: list.len(),
        exhaustive,
    };
    for sup in &list {
        let (lo, hi, d) = gersgorin_delta(gram, sup);
        out.lambda_min = out.lambda_min.min(lo);
        out.lambda_max = out.lambda_max.max(hi);
        out.delta = out.delta.max(d);
    }
    Ok(out)
}

/// `delta_s` of the columns of `a` by eigendecomposition over supports.
pub fn exact_rip_constant(a: &DMatrix<f64>, s: usize, sampling: Option<(usize, u64)>) -> Result<f64> {
    if a.ncols() > GRAM_SIZE_LIMIT {
        return Err(CakeError::SizeGuard(format!("{} columns exceeds {GRAM_SIZE_LIMIT}", a.ncols())));
    }
    let gram = a.transpose() * a;
    let (list, _) = supports(gram.ncols(), s, sampling)?;
    Ok(list.iter().map(|sup| exact_delta(&gram, sup)).fold(0.0, f64::max))
}
