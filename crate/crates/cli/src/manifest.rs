//! Per-command manifest: the command line, every parameter, the derived
//! seeds and a SHA-256 of every file read or written.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use cake_core::pipeline::TrialSeeds;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::stages::{relative, StageFiles};

pub fn sha256_hex(path: &Path) -> Result<String, CliError> {
    let digest = Sha256::digest(fs::read(path)?);
    Ok(digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    }))
}

pub fn render(
    cfg: &RunConfig,
    command: &str,
    method: Option<&str>,
    files: &StageFiles,
) -> Result<String, CliError> {
    let mut s = String::new();
    let _ = writeln!(s, "command = {command}");
    if let Some(m) = method {
        let _ = writeln!(s, "method = {m}");
    }
    let _ = writeln!(s, "version = {}", env!("CARGO_PKG_VERSION"));
    s.push_str(&cfg.to_text());
    let seeds = TrialSeeds::derive(cfg.seed);
    let _ = writeln!(
        s,
        "[seeds]\nscene = {}\ncake_masks = {}\ndsm_masks = {}\ncake_noise = {}\ndsm_noise = {}\nconventional_noise = {}",
        seeds.scene, seeds.cake_masks, seeds.dsm_masks, seeds.cake_noise, seeds.dsm_noise, seeds.conventional_noise
    );
    for (title, list) in [("inputs", &files.inputs), ("outputs", &files.outputs)] {
        let _ = writeln!(s, "[{title}]");
        let mut seen: Vec<&PathBuf> = Vec::new();
        for p in list {
            if seen.contains(&p) {
                continue;
            }
            seen.push(p);
            let _ = writeln!(s, "{}  {}", sha256_hex(p)?, relative(cfg, p).display());
        }
    }
    Ok(s)
}

/// Writes `manifest_<command>.txt` into the output directory.
pub fn write(
    cfg: &RunConfig,
    command: &str,
    method: Option<&str>,
    files: &StageFiles,
) -> Result<PathBuf, CliError> {
    let path = cfg.out.join(format!("manifest_{command}.txt"));
    fs::write(&path, render(cfg, command, method, files)?)?;
    Ok(path)
}
