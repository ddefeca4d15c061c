//! Run configuration: line-based `key = value` pairs grouped under
//! `[section]` headers. `#` starts a comment. Every key is optional; absent
//! keys keep the defaults of the synthetic experiment.
//!
//! ```text
//! [run]       seed out
//! [geometry]  n1 n2 frames d1 d2 block_len
//! [masks]     alpha beta
//! [noise]     sigma
//! [tvl1]      tau_tv tau_l1 max_iters tol window backtrack power_iters
//!             prox_iters prox_gap
//! [of]        eps_data eps_flow max_iters gap_tol residual_tol
//!             polish_iters slack
//! [flow]      smoothness iterations levels warps
//! [wavelet]   levels            (integer or "max")
//! [metrics]   roi               ("full" or "row0 row1 col0 col1")
//!             discount_blocks
//! [ripcheck]  n1 n2 d1 d2 block_len trials delta_d delta_o sparsity
//!             instances
//! ```

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use cake_core::geometry::SamplingGeometry;
use cake_core::pipeline::ExperimentConfig;
use cake_core::video::RectRegion;

/// Geometry and sample sizes of the restricted-isometry report.
#[derive(Debug, Clone, PartialEq)]
pub struct RipConfig {
    pub n1: usize,
    pub n2: usize,
    pub d1: usize,
    pub d2: usize,
    pub block_len: usize,
    pub trials: usize,
    pub delta_d: f64,
    pub delta_o: f64,
    pub sparsity: usize,
    /// Toy instances (4x4 scene, one block of four frames) checked
    /// exhaustively against the disc bound.
    pub instances: usize,
}

impl Default for RipConfig {
    fn default() -> Self {
        Self {
            n1: 16,
            n2: 16,
            d1: 2,
            d2: 2,
            block_len: 2,
            trials: 1000,
            delta_d: 0.2,
            delta_o: 1.0,
            sparsity: 2,
            instances: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub experiment: ExperimentConfig,
    pub ripcheck: RipConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("out"),
            experiment: ExperimentConfig::default(),
            ripcheck: RipConfig::default(),
        }
    }
}

fn value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T, String> {
    raw.parse()
        .map_err(|_| format!("line {line}: cannot parse {key} = {raw:?}"))
}

fn parse_roi(line: usize, raw: &str) -> Result<Option<RectRegion>, String> {
    if raw == "full" {
        return Ok(None);
    }
    let parts: Vec<usize> = raw
        .split_whitespace()
        .map(|p| value(line, "roi", p))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [r0, r1, c0, c1] if r0 < r1 && c0 < c1 => Ok(Some(RectRegion {
            rows: r0..r1,
            cols: c0..c1,
        })),
        _ => Err(format!(
            "line {line}: roi needs \"full\" or four bounds row0 < row1 col0 < col1"
        )),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut cfg = Self::default();
        let d = SamplingGeometry::new(64, 64, 32, 2, 2, 4).expect("default geometry");
        let mut geo = [d.n1, d.n2, d.frames, d.d1, d.d2, d.block_len];
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (key, val) = content
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| format!("line {line}: expected key = value"))?;
            let e = &mut cfg.experiment;
            let r = &mut cfg.ripcheck;
            match (section.as_str(), key) {
                ("run", "seed") => cfg.seed = value(line, key, val)?,
                ("run", "out") => cfg.out = PathBuf::from(val),
                ("geometry", "n1") => geo[0] = value(line, key, val)?,
                ("geometry", "n2") => geo[1] = value(line, key, val)?,
                ("geometry", "frames") => geo[2] = value(line, key, val)?,
                ("geometry", "d1") => geo[3] = value(line, key, val)?,
                ("geometry", "d2") => geo[4] = value(line, key, val)?,
                ("geometry", "block_len") => geo[5] = value(line, key, val)?,
                ("masks", "alpha") => e.weights.0 = value(line, key, val)?,
                ("masks", "beta") => e.weights.1 = value(line, key, val)?,
                ("noise", "sigma") => e.noise_sigma = value(line, key, val)?,
                ("tvl1", "tau_tv") => e.tvl1.tau_tv = value(line, key, val)?,
                ("tvl1", "tau_l1") => e.tvl1.tau_l1 = value(line, key, val)?,
                ("tvl1", "max_iters") => e.tvl1.max_iters = value(line, key, val)?,
                ("tvl1", "tol") => e.tvl1.tol = value(line, key, val)?,
                ("tvl1", "window") => e.tvl1.window = value(line, key, val)?,
                ("tvl1", "backtrack") => e.tvl1.backtrack = value(line, key, val)?,
                ("tvl1", "power_iters") => e.tvl1.power_iters = value(line, key, val)?,
                ("tvl1", "prox_iters") => e.tvl1.prox_iters = value(line, key, val)?,
                ("tvl1", "prox_gap") => e.tvl1.prox_gap = value(line, key, val)?,
                ("of", "eps_data") => e.flow_constrained.eps_data = value(line, key, val)?,
                ("of", "eps_flow") => e.flow_constrained.eps_flow = value(line, key, val)?,
                ("of", "max_iters") => e.flow_constrained.max_iters = value(line, key, val)?,
                ("of", "gap_tol") => e.flow_constrained.gap_tol = value(line, key, val)?,
                ("of", "residual_tol") => e.flow_constrained.residual_tol = value(line, key, val)?,
                ("of", "polish_iters") => e.flow_constrained.polish_iters = value(line, key, val)?,
                ("of", "slack") => e.flow_constrained.slack = value(line, key, val)?,
                ("flow", "smoothness") => e.horn_schunck.smoothness = value(line, key, val)?,
                ("flow", "iterations") => e.horn_schunck.iterations = value(line, key, val)?,
                ("flow", "levels") => e.horn_schunck.levels = value(line, key, val)?,
                ("flow", "warps") => e.horn_schunck.warps = value(line, key, val)?,
                ("wavelet", "levels") => {
                    e.wavelet_levels = if val == "max" {
                        None
                    } else {
                        Some(value(line, key, val)?)
                    }
                }
                ("metrics", "roi") => e.roi = parse_roi(line, val)?,
                ("metrics", "discount_blocks") => e.discount_blocks = value(line, key, val)?,
                ("ripcheck", "n1") => r.n1 = value(line, key, val)?,
                ("ripcheck", "n2") => r.n2 = value(line, key, val)?,
                ("ripcheck", "d1") => r.d1 = value(line, key, val)?,
                ("ripcheck", "d2") => r.d2 = value(line, key, val)?,
                ("ripcheck", "block_len") => r.block_len = value(line, key, val)?,
                ("ripcheck", "trials") => r.trials = value(line, key, val)?,
                ("ripcheck", "delta_d") => r.delta_d = value(line, key, val)?,
                ("ripcheck", "delta_o") => r.delta_o = value(line, key, val)?,
                ("ripcheck", "sparsity") => r.sparsity = value(line, key, val)?,
                ("ripcheck", "instances") => r.instances = value(line, key, val)?,
                (s, k) => return Err(format!("line {line}: unknown key {k:?} in section [{s}]")),
            }
        }
        cfg.experiment.geometry =
            SamplingGeometry::new(geo[0], geo[1], geo[2], geo[3], geo[4], geo[5])
                .map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks everything that can be checked before any stage runs.
    pub fn validate(&self) -> Result<(), String> {
        let e = &self.experiment;
        let g = &e.geometry;
        cake_core::masks::normalize_weights(e.weights.0, e.weights.1).map_err(|e| e.to_string())?;
        if g.d() % 2 != 0 {
            return Err(format!(
                "dual-scale masks need an even block size, got d = {}",
                g.d()
            ));
        }
        if !(e.noise_sigma >= 0.0 && e.noise_sigma.is_finite()) {
            return Err(format!(
                "noise sigma must be non-negative, got {}",
                e.noise_sigma
            ));
        }
        e.tvl1.validate().map_err(|e| e.to_string())?;
        e.flow_constrained.validate().map_err(|e| e.to_string())?;
        e.wavelet().map_err(|e| e.to_string())?;
        if let Some(roi) = &e.roi {
            if roi.rows.end > g.n1 || roi.cols.end > g.n2 {
                return Err(format!("roi {roi:?} exceeds the {}x{} frame", g.n1, g.n2));
            }
        }
        if e.scored_frames().is_empty() {
            return Err("discount_blocks leaves no frames to score".into());
        }
        let r = &self.ripcheck;
        SamplingGeometry::new(r.n1, r.n2, r.block_len, r.d1, r.d2, r.block_len)
            .map_err(|e| e.to_string())?;
        if r.trials < 100 || r.sparsity == 0 {
            return Err("ripcheck needs at least 100 trials and a positive sparsity".into());
        }
        Ok(())
    }

    /// Canonical listing of every parameter, in the config syntax.
    pub fn to_text(&self) -> String {
        let e = &self.experiment;
        let g = &e.geometry;
        let (t, o, h, r) = (
            &e.tvl1,
            &e.flow_constrained,
            &e.horn_schunck,
            &self.ripcheck,
        );
        let mut s = String::new();
        let _ = writeln!(
            s,
            "[run]\nseed = {}\nout = {}",
            self.seed,
            self.out.display()
        );
        let _ = writeln!(
            s,
            "[geometry]\nn1 = {}\nn2 = {}\nframes = {}\nd1 = {}\nd2 = {}\nblock_len = {}",
            g.n1, g.n2, g.frames, g.d1, g.d2, g.block_len
        );
        let _ = writeln!(
            s,
            "[masks]\nalpha = {}\nbeta = {}",
            e.weights.0, e.weights.1
        );
        let _ = writeln!(s, "[noise]\nsigma = {}", e.noise_sigma);
        let _ = writeln!(
            s,
            "[tvl1]\ntau_tv = {}\ntau_l1 = {}\nmax_iters = {}\ntol = {}\nwindow = {}\nbacktrack = {}\npower_iters = {}\nprox_iters = {}\nprox_gap = {}",
            t.tau_tv, t.tau_l1, t.max_iters, t.tol, t.window, t.backtrack, t.power_iters, t.prox_iters, t.prox_gap
        );
        let _ = writeln!(
            s,
            "[of]\neps_data = {}\neps_flow = {}\nmax_iters = {}\ngap_tol = {}\nresidual_tol = {}\npolish_iters = {}\nslack = {}",
            o.eps_data, o.eps_flow, o.max_iters, o.gap_tol, o.residual_tol, o.polish_iters, o.slack
        );
        let _ = writeln!(
            s,
            "[flow]\nsmoothness = {}\niterations = {}\nlevels = {}\nwarps = {}",
            h.smoothness, h.iterations, h.levels, h.warps
        );
        let levels = e
            .wavelet_levels
            .map_or("max".to_string(), |l| l.to_string());
        let _ = writeln!(s, "[wavelet]\nlevels = {levels}");
        let roi = e.roi.as_ref().map_or("full".to_string(), |r| {
            format!(
                "{} {} {} {}",
                r.rows.start, r.rows.end, r.cols.start, r.cols.end
            )
        });
        let _ = writeln!(
            s,
            "[metrics]\nroi = {roi}\ndiscount_blocks = {}",
            e.discount_blocks
        );
        let _ = writeln!(
            s,
            "[ripcheck]\nn1 = {}\nn2 = {}\nd1 = {}\nd2 = {}\nblock_len = {}\ntrials = {}\ndelta_d = {}\ndelta_o = {}\nsparsity = {}\ninstances = {}",
            r.n1, r.n2, r.d1, r.d2, r.block_len, r.trials, r.delta_d, r.delta_o, r.sparsity, r.instances
        );
        s
    }
}
