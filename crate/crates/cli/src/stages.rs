//! One function per subcommand. Stages communicate only through files in
//! the output directory, and every random draw comes from seeds derived
//! from the single run seed, so any stage can be rerun on its own.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use cake_core::flow::{estimate_flow_field, upsample_coarse, MotionOperator};
use cake_core::geometry::SamplingGeometry;
use cake_core::io::{
    read_cube, read_flow, read_masks, write_cube_as, write_flow, write_masks, DType,
};
use cake_core::masks::{MaskFamily, MaskSequence};
use cake_core::operators::CakeOperator;
use cake_core::pgm::{magnitude_frame, write_pgm, IntensityMap};
use cake_core::pipeline::{noise, TrialSeeds};
use cake_core::ripcheck::{
    concentration_report, exact_rip_constant, gersgorin_eigen_bounds, subsampled_matrix,
};
use cake_core::scene::{synth_scene, SceneSpec};
use cake_core::solvers::{
    coarse_estimate, conventional_baseline, reconstruct_optical_flow, reconstruct_tv_l1,
    spline_baseline, SolverReport,
};
use cake_core::video::{rmse_percent, VideoCube};
use ndarray::{s, Array2, Axis};

use crate::config::RunConfig;
use crate::error::CliError;

pub const SCENE: &str = "scene.vcub";
pub const MASKS_CAKE: &str = "masks_cake.msks";
pub const MASKS_DSM: &str = "masks_dsm.msks";
pub const Y_CAKE: &str = "y_cake.vcub";
pub const Y_DSM: &str = "y_dsm.vcub";
pub const Y_CONVENTIONAL: &str = "y_conventional.vcub";
pub const COARSE: &str = "coarse.vcub";
pub const FLOW: &str = "flow.flow";
pub const UPSAMPLED: &str = "upsampled.vcub";
pub const METRICS: &str = "metrics.txt";
pub const RIPCHECK: &str = "ripcheck.txt";

/// Reconstruction methods, in metric-table order, with their table labels.
pub const METHODS: [(&str, &str); 4] = [
    ("spline", "spline"),
    ("cake", "CAKE"),
    ("dsm-cake", "DSM-CAKE"),
    ("of-cake", "OF-CAKE"),
];
pub const COARSE_ONLY: &str = "coarse-only";

pub fn estimate_file(method: &str) -> String {
    format!("est_{method}.vcub")
}

pub fn report_file(method: &str) -> String {
    format!("report_{method}.log")
}

/// Files a stage read and wrote, for the manifest.
#[derive(Debug, Default)]
pub struct StageFiles {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

struct Stage<'a> {
    cfg: &'a RunConfig,
    files: StageFiles,
}

impl<'a> Stage<'a> {
    fn new(cfg: &'a RunConfig) -> Result<Self, CliError> {
        fs::create_dir_all(&cfg.out)?;
        Ok(Self {
            cfg,
            files: StageFiles::default(),
        })
    }

    fn geometry(&self) -> &SamplingGeometry {
        &self.cfg.experiment.geometry
    }

    fn seeds(&self) -> TrialSeeds {
        TrialSeeds::derive(self.cfg.seed)
    }

    fn input(&mut self, name: &str) -> Result<PathBuf, CliError> {
        let path = self.cfg.out.join(name);
        if !path.is_file() {
            return Err(CliError::MissingArtifact(path));
        }
        self.files.inputs.push(path.clone());
        Ok(path)
    }

    fn output(&mut self, name: &str) -> PathBuf {
        let path = self.cfg.out.join(name);
        self.files.outputs.push(path.clone());
        path
    }

    fn read_cube(&mut self, name: &str) -> Result<VideoCube, CliError> {
        let path = self.input(name)?;
        let cube = read_cube(path)?;
        cube.check_geometry(self.geometry())
            .map_err(|e| CliError::Config(format!("{name}: {e}")))?;
        Ok(cube)
    }

    fn read_masks(&mut self, name: &str) -> Result<MaskSequence, CliError> {
        let path = self.input(name)?;
        let masks = read_masks(path)?;
        if masks.geometry != *self.geometry() {
            return Err(CliError::Config(format!(
                "{name} was generated for a different geometry"
            )));
        }
        Ok(masks)
    }

    fn write_cube(&mut self, name: &str, cube: &VideoCube) -> Result<(), CliError> {
        let path = self.output(name);
        write_cube_as(cube, path, DType::F64)?;
        Ok(())
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.output(name);
        fs::write(path, text)?;
        Ok(())
    }
}

pub fn synth(cfg: &RunConfig) -> Result<StageFiles, CliError> {
    let mut st = Stage::new(cfg)?;
    let g = *st.geometry();
    let scene = synth_scene(
        &SceneSpec::translating_objects(g.n1, g.n2, st.seeds().scene),
        &g,
    );
    st.write_cube(SCENE, &scene)?;
    Ok(st.files)
}

pub fn masks(cfg: &RunConfig) -> Result<StageFiles, CliError> {
    let mut st = Stage::new(cfg)?;
    let (g, seeds, w) = (*st.geometry(), st.seeds(), cfg.experiment.weights);
    let cake = MaskSequence::generate(MaskFamily::Rademacher, &g, seeds.cake_masks, w)?;
    let dsm = MaskSequence::generate(MaskFamily::DualScale, &g, seeds.dsm_masks, w)?;
    write_masks(&cake, st.output(MASKS_CAKE))?;
    write_masks(&dsm, st.output(MASKS_DSM))?;
    Ok(st.files)
}

pub fn acquire(cfg: &RunConfig) -> Result<StageFiles, CliError> {
    let mut st = Stage::new(cfg)?;
    let scene = st.read_cube(SCENE)?;
    let cake = st.read_masks(MASKS_CAKE)?;
    let dsm = st.read_masks(MASKS_DSM)?;
    let (g, seeds, e) = (*st.geometry(), st.seeds(), &cfg.experiment);
    let y_cake = CakeOperator::with_subsampling(&cake)?
        .cake_forward(&scene, &noise(e, seeds.cake_noise)?)?;
    let y_dsm =
        CakeOperator::with_subsampling(&dsm)?.cake_forward(&scene, &noise(e, seeds.dsm_noise)?)?;
    let conventional = conventional_baseline(&scene, &g, &noise(e, seeds.conventional_noise)?)?;
    st.write_cube(Y_CAKE, &y_cake)?;
    st.write_cube(Y_DSM, &y_dsm)?;
    st.write_cube(Y_CONVENTIONAL, &conventional)?;
    Ok(st.files)
}

pub fn coarse(cfg: &RunConfig) -> Result<StageFiles, CliError> {
    let mut st = Stage::new(cfg)?;
    let y = st.read_cube(Y_DSM)?;
    let masks = st.read_masks(MASKS_DSM)?;
    let est = coarse_estimate(&y, &masks)?;
    st.write_cube(COARSE, &est)?;
    Ok(st.files)
}

pub fn flow(cfg: &RunConfig) -> Result<StageFiles, CliError> {
    let mut st = Stage::new(cfg)?;
    let coarse = st.read_cube(COARSE)?;
    let g = *st.geometry();
    let upsampled = upsample_coarse(&coarse, &g)?;
    let field = estimate_flow_field(&upsampled, &cfg.experiment.horn_schunck)?;
    write_flow(&field, st.output(FLOW))?;
    st.write_cube(UPSAMPLED, &upsampled)?;
    Ok(st.files)
}

/// Expands a `--method` value into method keys.
pub fn resolve_methods(method: Option<&str>) -> Result<Vec<&'static str>, CliError> {
    let all: Vec<&'static str> = METHODS.iter().map(|m| m.0).collect();
    match method {
        None | Some("all") => Ok(all),
        Some("tvl1") => Ok(vec!["cake", "dsm-cake"]),
        Some("of") => Ok(vec!["of-cake"]),
        Some(COARSE_ONLY) => Ok(vec![COARSE_ONLY]),
        Some(m) => all
            .into_iter()
            .find(|k| *k == m)
            .map(|k| vec![k])
            .ok_or_else(|| {
                CliError::Config(format!(
                    "unknown method {m:?}; expected spline, cake, dsm-cake, of-cake, tvl1, of, coarse-only or all"
                ))
            }),
    }
}

pub fn recon(cfg: &RunConfig, method: Option<&str>) -> Result<StageFiles, CliError> {
    let methods = resolve_methods(method)?;
    let mut st = Stage::new(cfg)?;
    let g = *st.geometry();
    let e = &cfg.experiment;
    for m in methods {
        let (estimate, report): (VideoCube, Option<SolverReport>) = match m {
            "spline" => (spline_baseline(&st.read_cube(Y_CONVENTIONAL)?, &g)?, None),
            "cake" | "dsm-cake" => {
                let (y, masks) = if m == "cake" {
                    (Y_CAKE, MASKS_CAKE)
                } else {
                    (Y_DSM, MASKS_DSM)
                };
                let y = st.read_cube(y)?;
                let op = CakeOperator::with_subsampling(&st.read_masks(masks)?)?;
                let (f, r) = reconstruct_tv_l1(&op, &y, &e.tvl1)?;
                (f, Some(r))
            }
            "of-cake" => {
                let y = st.read_cube(Y_DSM)?;
                let op = CakeOperator::with_subsampling(&st.read_masks(MASKS_DSM)?)?;
                let field = read_flow(st.input(FLOW)?)?;
                let motion = MotionOperator::new(&field)?;
                let (f, r) =
                    reconstruct_optical_flow(&op, &y, &motion, &e.wavelet()?, &e.flow_constrained)?;
                (f, Some(r))
            }
            _ => (upsample_coarse(&st.read_cube(COARSE)?, &g)?, None),
        };
        st.write_cube(&estimate_file(m), &estimate)?;
        if let Some(r) = report {
            st.write_text(&report_file(m), &r.to_log())?;
        }
    }
    Ok(st.files)
}

/// The RMSE table: one row per method.
pub fn metrics_table(cfg: &RunConfig, rows: &[(&str, f64)]) -> String {
    let e = &cfg.experiment;
    let roi = e.roi();
    let frames = e.scored_frames();
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# rows {}..{} cols {}..{} frames {}..{}",
        roi.rows.start, roi.rows.end, roi.cols.start, roi.cols.end, frames.start, frames.end
    );
    let _ = writeln!(s, "{:<10} {:>12}", "method", "rmse_percent");
    for (label, v) in rows {
        let _ = writeln!(s, "{label:<10} {v:>12.4}");
    }
    s
}

pub fn metrics(cfg: &RunConfig) -> Result<(StageFiles, String), CliError> {
    let mut st = Stage::new(cfg)?;
    let truth = st.read_cube(SCENE)?;
    let e = &cfg.experiment;
    let mut rows = Vec::new();
    for (key, label) in METHODS {
        let est = st.read_cube(&estimate_file(key))?;
        rows.push((
            label,
            rmse_percent(&est, &truth, &e.roi(), e.scored_frames())?,
        ));
    }
    let table = metrics_table(cfg, &rows);
    st.write_text(METRICS, &table)?;
    Ok((st.files, table))
}

pub fn ripcheck(cfg: &RunConfig) -> Result<(StageFiles, String), CliError> {
    let mut st = Stage::new(cfg)?;
    let r = &cfg.ripcheck;
    let g = SamplingGeometry::new(r.n1, r.n2, r.block_len, r.d1, r.d2, r.block_len)?;
    let stats = concentration_report(
        &g,
        MaskFamily::Rademacher,
        r.trials,
        r.delta_d,
        r.delta_o,
        r.sparsity,
        cfg.seed,
    )?;
    let mut text = String::from("[concentration]\n");
    text.push_str(&stats.to_report(false));

    let toy = SamplingGeometry::new(4, 4, 4, 2, 2, 4)?;
    text.push_str("[gersgorin]\ninstance exact_delta disc_delta lambda_min lambda_max\n");
    let mut all_hold = true;
    for k in 0..r.instances {
        let masks = MaskSequence::generate(
            MaskFamily::Rademacher,
            &toy,
            cfg.seed.wrapping_add(k as u64),
            cfg.experiment.weights,
        )?;
        let a = subsampled_matrix(&masks, (toy.d1 - 1, toy.d2 - 1));
        let exact = exact_rip_constant(&a, r.sparsity, None)?;
        let disc = gersgorin_eigen_bounds(&(a.transpose() * &a), r.sparsity, None)?;
        all_hold &= exact <= disc.delta + 1e-12;
        let _ = writeln!(
            text,
            "{k} {exact:.6} {:.6} {:.6} {:.6}",
            disc.delta, disc.lambda_min, disc.lambda_max
        );
    }
    let _ = writeln!(text, "disc_bound_holds={all_hold}");
    st.write_text(RIPCHECK, &text)?;
    Ok((st.files, text))
}

/// Writes every frame of `cube` as a 16-bit PGM under `dir`, all with one
/// linear map fitted to the whole cube, and records the map.
fn export_frames(
    st: &mut Stage,
    dir: &str,
    frames: &[Array2<f64>],
    map: IntensityMap,
) -> Result<(), CliError> {
    fs::create_dir_all(st.cfg.out.join(dir))?;
    for (t, frame) in frames.iter().enumerate() {
        let path = st.output(&format!("{dir}/t{t:03}.pgm"));
        write_pgm(frame, map, path)?;
    }
    let note = format!(
        "# value = lo + code * (hi - lo) / 65535\nlo = {:.17e}\nhi = {:.17e}\n",
        map.lo, map.hi
    );
    st.write_text(&format!("{dir}/mapping.txt"), &note)
}

fn magnitude_frames(frames: Vec<Array2<f64>>) -> (Vec<Array2<f64>>, IntensityMap) {
    let top = frames
        .iter()
        .map(|f| magnitude_frame(f).1.hi)
        .fold(0.0, f64::max);
    let mags = frames.into_iter().map(|f| f.mapv(f64::abs)).collect();
    (
        mags,
        IntensityMap {
            lo: 0.0,
            hi: if top > 0.0 { top } else { 1.0 },
        },
    )
}

/// Frame dumps of every cube present in the output directory (or only
/// `only`), plus residual magnitudes `|estimate - scene|` and
/// difference-frame magnitudes `|f_t - f_{t-1}|` for the scene and each
/// estimate.
pub fn export(cfg: &RunConfig, only: Option<&str>) -> Result<StageFiles, CliError> {
    let mut st = Stage::new(cfg)?;
    let mut names: Vec<String> = [SCENE, Y_CAKE, Y_DSM, Y_CONVENTIONAL, COARSE, UPSAMPLED]
        .iter()
        .map(|s| s.to_string())
        .collect();
    names.extend(METHODS.iter().map(|m| estimate_file(m.0)));
    names.push(estimate_file(COARSE_ONLY));
    if let Some(o) = only {
        let wanted = if o.ends_with(".vcub") {
            o.to_string()
        } else {
            format!("{o}.vcub")
        };
        if !names.contains(&wanted) {
            return Err(CliError::Config(format!("unknown cube {o:?}")));
        }
        if !cfg.out.join(&wanted).is_file() {
            return Err(CliError::MissingArtifact(cfg.out.join(&wanted)));
        }
        names.retain(|n| *n == wanted);
    }
    let scene_path = cfg.out.join(SCENE);
    let scene = if scene_path.is_file() {
        Some(read_cube(&scene_path)?)
    } else {
        None
    };
    for name in names {
        if !cfg.out.join(&name).is_file() {
            continue;
        }
        let cube = st.read_cube_any(&name)?;
        let stem = name.trim_end_matches(".vcub").to_string();
        let frames: Vec<Array2<f64>> = cube.data.axis_iter(Axis(0)).map(|f| f.to_owned()).collect();
        let map = IntensityMap::fit(cube.data.iter());
        export_frames(&mut st, &format!("frames/{stem}"), &frames, map)?;

        let is_video = cube.data.dim() == cfg.experiment.geometry.scene_shape();
        if is_video && cube.frames() > 1 {
            let diffs = (1..cube.frames())
                .map(|t| &cube.data.slice(s![t, .., ..]) - &cube.data.slice(s![t - 1, .., ..]))
                .collect();
            let (mags, map) = magnitude_frames(diffs);
            export_frames(&mut st, &format!("difference/{stem}"), &mags, map)?;
        }
        if let (Some(truth), true, false) = (&scene, is_video, name == SCENE) {
            let res = (0..cube.frames())
                .map(|t| &cube.data.slice(s![t, .., ..]) - &truth.data.slice(s![t, .., ..]))
                .collect();
            let (mags, map) = magnitude_frames(res);
            export_frames(&mut st, &format!("residual/{stem}"), &mags, map)?;
        }
    }
    Ok(st.files)
}

impl Stage<'_> {
    /// Reads a cube of either scene or measurement shape.
    fn read_cube_any(&mut self, name: &str) -> Result<VideoCube, CliError> {
        let path = self.input(name)?;
        Ok(read_cube(path)?)
    }
}

/// Every stage in order, then the metric table.
pub fn run_all(cfg: &RunConfig) -> Result<(StageFiles, String), CliError> {
    let mut files = StageFiles::default();
    let parts = [
        synth(cfg)?,
        masks(cfg)?,
        acquire(cfg)?,
        coarse(cfg)?,
        flow(cfg)?,
        recon(cfg, None)?,
    ];
    let (last, table) = metrics(cfg)?;
    for part in parts.into_iter().chain([last]) {
        files.inputs.extend(part.inputs);
        files.outputs.extend(part.outputs);
    }
    // Inputs produced inside this run are already listed as outputs.
    let outputs = files.outputs.clone();
    files.inputs.retain(|p| !outputs.contains(p));
    Ok((files, table))
}

pub fn relative<'p>(cfg: &RunConfig, path: &'p Path) -> &'p Path {
    path.strip_prefix(&cfg.out).unwrap_or(path)
}
