//! Synthetic test scenes: moving rectangles and discs over an optional
//! smooth background, rendered with area-weighted coverage.
//!
//! Coordinates are continuous pixel units with pixel `(row, col)` covering
//! `[row, row + 1) x [col, col + 1)`. Objects that leave the frame wrap
//! around circularly, matching the circular sensing model.

use std::f64::consts::PI;

use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::SamplingGeometry;
use crate::video::VideoCube;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Rect { width: f64, height: f64 },
    Disc { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneObject {
    pub shape: Shape,
    /// Center at frame 0 as `(x, y)` = (column, row).
    pub center: (f64, f64),
    /// Displacement per frame as `(x, y)`.
    pub velocity: (f64, f64),
    pub intensity: f64,
}

/// Band-limited periodic texture `base + amplitude * mean_k cos(...)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Background {
    pub base: f64,
    pub amplitude: f64,
    pub components: usize,
    pub max_frequency: u32,
    pub seed: u64,
    /// Drift per frame as `(x, y)`.
    pub drift: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SceneSpec {
    pub objects: Vec<SceneObject>,
    pub background: Option<Background>,
}

impl SceneSpec {
    /// The default translating-objects scene, laid out relative to the frame size.
    pub fn translating_objects(n1: usize, n2: usize, seed: u64) -> Self {
        let (h, w) = (n1 as f64, n2 as f64);
        Self {
            objects: vec![
                SceneObject {
                    shape: Shape::Rect { width: 0.22 * w, height: 0.16 * h },
                    center: (0.25 * w, 0.3 * h),
                    velocity: (0.75, 0.25),
                    intensity: 0.9,
                },
                SceneObject {
                    shape: Shape::Disc { radius: 0.1 * w.min(h) },
                    center: (0.68 * w, 0.62 * h),
                    velocity: (-0.5, 0.4),
                    intensity: 0.75,
                },
                SceneObject {
                    shape: Shape::Rect { width: 0.1 * w, height: 0.1 * h },
                    center: (0.45 * w, 0.82 * h),
                    velocity: (1.0, -0.25),
                    intensity: 0.1,
                },
            ],
            background: Some(Background {
                base: 0.4,
                amplitude: 0.15,
                components: 4,
                max_frequency: 3,
                seed,
                drift: (0.0, 0.0),
            }),
        }
    }
}

struct Wave {
    fx: f64,
    fy: f64,
    phase: f64,
}

fn background_waves(bg: &Background) -> Vec<Wave> {
    let mut rng = ChaCha8Rng::seed_from_u64(bg.seed);
    (0..bg.components)
        .map(|_| {
            let fx = rng.random_range(0..=bg.max_frequency) as f64;
            let fy = rng.random_range(0..=bg.max_frequency) as f64;
            let phase = rng.random::<f64>() * 2.0 * PI;
            Wave { fx, fy, phase }
        })
        .collect()
}

/// Length of `[a, b]` inside `[lo, lo + 1)` on a circle of circumference `len`.
fn wrapped_overlap(a: f64, b: f64, lo: f64, len: f64) -> f64 {
    let mut total = 0.0;
    for shift in [-2.0, -1.0, 0.0, 1.0, 2.0] {
        let (s, e) = (a + shift * len, b + shift * len);
        total += (e.min(lo + 1.0) - s.max(lo)).max(0.0);
    }
    total.min(1.0)
}

fn wrapped_delta(x: f64, c: f64, len: f64) -> f64 {
    let d = (x - c).rem_euclid(len);
    if d > len / 2.0 {
        d - len
    } else {
        d
    }
}

const DISC_SUPERSAMPLE: usize = 8;

fn coverage(shape: &Shape, cx: f64, cy: f64, row: usize, col: usize, n1: usize, n2: usize) -> f64 {
    match *shape {
        Shape::Rect { width, height } => {
            let ox = wrapped_overlap(cx - width / 2.0, cx + width / 2.0, col as f64, n2 as f64);
            if ox == 0.0 {
                return 0.0;
            }
            ox * wrapped_overlap(cy - height / 2.0, cy + height / 2.0, row as f64, n1 as f64)
        }
        Shape::Disc { radius } => {
            let dx = wrapped_delta(col as f64 + 0.5, cx, n2 as f64);
            let dy = wrapped_delta(row as f64 + 0.5, cy, n1 as f64);
            let dist = (dx * dx + dy * dy).sqrt();
            let half_diag = std::f64::consts::FRAC_1_SQRT_2;
            if dist <= radius - half_diag {
                return 1.0;
            }
            if dist >= radius + half_diag {
                return 0.0;
            }
            let s = DISC_SUPERSAMPLE;
            let mut inside = 0usize;
            for a in 0..s {
                for b in 0..s {
                    let px = dx - 0.5 + (b as f64 + 0.5) / s as f64;
                    let py = dy - 0.5 + (a as f64 + 0.5) / s as f64;
                    if px * px + py * py <= radius * radius {
                        inside += 1;
                    }
                }
            }
            inside as f64 / (s * s) as f64
        }
    }
}

/// Renders frame `t` of a scene.
pub fn render_frame(spec: &SceneSpec, n1: usize, n2: usize, t: usize) -> Array2<f64> {
    let tf = t as f64;
    let mut frame = match &spec.background {
        Some(bg) => {
            let waves = background_waves(bg);
            let k = waves.len().max(1) as f64;
            Array2::from_shape_fn((n1, n2), |(i, j)| {
                let x = j as f64 + 0.5 - bg.drift.0 * tf;
                let y = i as f64 + 0.5 - bg.drift.1 * tf;
                let s: f64 = waves
                    .iter()
                    .map(|w| (2.0 * PI * (w.fx * x / n2 as f64 + w.fy * y / n1 as f64) + w.phase).cos())
                    .sum();
                bg.base + bg.amplitude * s / k
            })
        }
        None => Array2::zeros((n1, n2)),
    };
    for obj in &spec.objects {
        let cx = obj.center.0 + obj.velocity.0 * tf;
        let cy = obj.center.1 + obj.velocity.1 * tf;
        for ((i, j), v) in frame.indexed_iter_mut() {
            let c = coverage(&obj.shape, cx, cy, i, j, n1, n2);
            if c > 0.0 {
                *v = (1.0 - c) * *v + c * obj.intensity;
            }
        }
    }
    frame
}

/// Renders the full high-rate scene cube.
pub fn synth_scene(spec: &SceneSpec, geometry: &SamplingGeometry) -> VideoCube {
    let (nf, n1, n2) = geometry.scene_shape();
    let frames = crate::par::map_indices(nf, |t| render_frame(spec, n1, n2, t));
    let mut data = Array3::zeros((nf, n1, n2));
    for (mut dst, src) in data.outer_iter_mut().zip(frames) {
        dst.assign(&src);
    }
    VideoCube::scene(data, geometry.block_len)
}
