use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = "\
[run]
seed = 11
[geometry]
n1 = 16
n2 = 16
frames = 8
d1 = 2
d2 = 2
block_len = 4
[tvl1]
max_iters = 40
[of]
max_iters = 40
polish_iters = 1
[flow]
iterations = 20
levels = 2
[metrics]
roi = full
discount_blocks = 0
[ripcheck]
trials = 100
instances = 3
";

fn cake(dir: &Path, args: &[&str]) -> Output {
    let config = dir.join("run.cfg");
    if !config.exists() {
        fs::write(&config, SMALL).unwrap();
    }
    Command::new(env!("CARGO_BIN_EXE_cake"))
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn full_run_prints_one_row_per_method() {
    let dir = TempDir::new().unwrap();
    let table = ok(cake(dir.path(), &["run"]));
    for label in ["spline", "CAKE", "DSM-CAKE", "OF-CAKE"] {
        let row = table
            .lines()
            .find(|l| l.split_whitespace().next() == Some(label))
            .unwrap_or_else(|| panic!("no {label} row in\n{table}"));
        let v: f64 = row.split_whitespace().nth(1).unwrap().parse().unwrap();
        assert!(v.is_finite() && v > 0.0);
    }
    assert_eq!(fs::read_to_string(dir.path().join("out/metrics.txt")).unwrap(), table);
}

#[test]
fn rerun_is_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    ok(cake(a.path(), &["run"]));
    ok(cake(b.path(), &["run"]));
    for f in ["metrics.txt", "scene.vcub", "y_dsm.vcub", "est_of-cake.vcub", "flow.flow"] {
        let x = fs::read(a.path().join("out").join(f)).unwrap();
        let y = fs::read(b.path().join("out").join(f)).unwrap();
        assert!(x == y, "{f} differs between runs");
    }
}

#[test]
fn stages_compose_like_run() {
    let staged = TempDir::new().unwrap();
    for cmd in ["synth", "masks", "acquire", "coarse", "flow", "recon"] {
        ok(cake(staged.path(), &[cmd]));
    }
    let table = ok(cake(staged.path(), &["metrics"]));
    let whole = TempDir::new().unwrap();
    assert_eq!(ok(cake(whole.path(), &["run"])), table);
}

#[test]
fn missing_artifact_exits_3() {
    let dir = TempDir::new().unwrap();
    let out = cake(dir.path(), &["acquire"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scene.vcub"));
}

#[test]
fn bad_config_exits_2() {
    let dir = TempDir::new().unwrap();
    for text in ["[geometry]\nn1 = 15\n", "[tvl1]\ntau_tv = -1\n", "[run]\nbogus = 1\n", "no section\n"] {
        fs::write(dir.path().join("run.cfg"), text).unwrap();
        let out = cake(dir.path(), &["synth"]);
        assert_eq!(out.status.code(), Some(2), "config {text:?}");
    }
    let out = Command::new(env!("CARGO_BIN_EXE_cake"))
        .args(["--config", "/nonexistent/run.cfg", "synth"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_method_exits_2() {
    let dir = TempDir::new().unwrap();
    assert_eq!(cake(dir.path(), &["recon", "--method", "magic"]).status.code(), Some(2));
}

#[test]
fn manifest_records_parameters_seeds_and_hashes() {
    let dir = TempDir::new().unwrap();
    ok(cake(dir.path(), &["synth"]));
    ok(cake(dir.path(), &["masks"]));
    let text = fs::read_to_string(dir.path().join("out/manifest_masks.txt")).unwrap();
    for key in [
        "command = masks",
        "seed = 11",
        "alpha = 0.383",
        "beta = 0.924",
        "sigma = 0.0004",
        "tau_tv = 0.01",
        "tau_l1 = 0.02",
        "eps_data = 0.043",
        "eps_flow = 4300",
        "smoothness = 0.1",
        "cake_masks = ",
        "masks_dsm.msks",
    ] {
        assert!(text.contains(key), "manifest lacks {key:?}:\n{text}");
    }
    let bytes = fs::read(dir.path().join("out/masks_dsm.msks")).unwrap();
    let hex: String = {
        use sha2::{Digest, Sha256};
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    };
    assert!(text.contains(&format!("{hex}  masks_dsm.msks")));
}

#[test]
fn seed_flag_changes_the_scene() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    ok(cake(a.path(), &["synth"]));
    ok(cake(b.path(), &["synth", "--seed", "12"]));
    assert_ne!(
        fs::read(a.path().join("out/scene.vcub")).unwrap(),
        fs::read(b.path().join("out/scene.vcub")).unwrap()
    );
}

fn read_pgm(path: &Path) -> (usize, usize, Vec<u16>) {
    let bytes = fs::read(path).unwrap();
    let mut fields = Vec::new();
    let mut i = 0;
    while fields.len() < 4 {
        while bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if bytes[i] == b'#' {
            while bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        while !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        fields.push(String::from_utf8(bytes[start..i].to_vec()).unwrap());
    }
    assert_eq!(fields[0], "P5");
    assert_eq!(fields[3], "65535");
    let (w, h): (usize, usize) = (fields[1].parse().unwrap(), fields[2].parse().unwrap());
    let px = bytes[i + 1..].chunks(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect::<Vec<_>>();
    assert_eq!(px.len(), w * h);
    (w, h, px)
}

#[test]
fn export_writes_requantizable_frames() {
    let dir = TempDir::new().unwrap();
    ok(cake(dir.path(), &["synth"]));
    ok(cake(dir.path(), &["export", "--method", "scene"]));
    let root = dir.path().join("out/frames/scene");
    let mapping = fs::read_to_string(root.join("mapping.txt")).unwrap();
    let value = |key: &str| -> f64 {
        mapping
            .lines()
            .find_map(|l| l.strip_prefix(key))
            .unwrap()
            .trim_start_matches([' ', '='])
            .trim()
            .parse()
            .unwrap()
    };
    let (lo, hi) = (value("lo"), value("hi"));
    assert!(hi > lo);

    let bytes = fs::read(dir.path().join("out/scene.vcub")).unwrap();
    let cube = cake_core::io::decode_cube(&bytes).unwrap();
    let step = (hi - lo) / 65535.0;
    for t in 0..8 {
        let (w, h, px) = read_pgm(&root.join(format!("t{t:03}.pgm")));
        assert_eq!((w, h), (16, 16));
        for (k, code) in px.iter().enumerate() {
            let back = lo + f64::from(*code) * step;
            let truth = cube.data[[t, k / 16, k % 16]];
            assert!((back - truth).abs() <= 0.5 * step + 1e-12, "t={t} k={k}");
        }
    }
    assert_eq!(cake(dir.path(), &["export", "--method", "est_cake"]).status.code(), Some(3));
}

#[test]
fn ripcheck_reports_disc_bound() {
    let dir = TempDir::new().unwrap();
    let text = ok(cake(dir.path(), &["ripcheck"]));
    assert!(text.contains("[concentration]"));
    assert!(text.contains("disc_bound_holds=true"), "{text}");
}
