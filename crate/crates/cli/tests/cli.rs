//! End-to-end runs of the `dfrc` binary.

use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
seed = 4

[waveform]
N = 8
tau_us = 1.0

[cpi]
P = 4
L = 12
Q = 8

[clutter]
Nc = 5

[[targets]]
angle_deg = 0.0
range_cell = 6
doppler_cell = 6
snr_db = 10.0

[processing]
methods = ["spc_mtd", "jrdmf", "ampc", "jrdap"]
"#;

fn dfrc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dfrc")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("scene.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn simulate_then_process_matches_one_shot_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let sim = dir.path().join("sim");
    let from_cube = dir.path().join("from_cube");
    let one_shot = dir.path().join("one_shot");

    let out = dfrc(&["simulate", "--config", &config, "--out", sim.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["dictionary.txt", "waveform.txt", "cube.bin", "manifest.toml"] {
        assert!(sim.join(f).exists(), "{f}");
    }

    let cube = sim.join("cube.bin");
    let out = dfrc(&[
        "process",
        "--config",
        &config,
        "--cube",
        cube.to_str().unwrap(),
        "--out",
        from_cube.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = dfrc(&["process", "--config", &config, "--out", one_shot.to_str().unwrap()]);
    assert!(out.status.success());

    for f in ["map_spc_mtd.txt", "map_jrdmf.txt", "map_ampc.txt", "map_jrdap.txt", "prior.txt"] {
        let a = std::fs::read_to_string(from_cube.join(f)).unwrap();
        let b = std::fs::read_to_string(one_shot.join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let map = std::fs::read_to_string(one_shot.join("map_jrdap.txt")).unwrap();
    assert!(map.contains("config_hash") && map.contains("seed"));
    let rows: Vec<&str> = map.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r.split(',').count() == 8));
    assert!(one_shot.join("convergence.txt").exists());
    assert!(one_shot.join("error_trace.txt").exists());
}

#[test]
fn seed_override_changes_the_cube() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let run = |seed: &str, name: &str| {
        let out_dir = dir.path().join(name);
        let out = dfrc(&["simulate", "--config", &config, "--seed", seed, "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success());
        std::fs::read(out_dir.join("cube.bin")).unwrap()
    };
    assert_eq!(run("9", "a"), run("9", "b"));
    assert_ne!(run("9", "c"), run("10", "d"));
}

#[test]
fn configuration_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), "[cpi]\nPP = 3\n");
    let out = dfrc(&["design", "--config", &unknown, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let bad_target = write_config(
        dir.path(),
        "[cpi]\nL = 10\n[[targets]]\nangle_deg = 0.0\nrange_cell = 11\ndoppler_cell = 0\nsnr_db = 0.0\n",
    );
    let out = dfrc(&["design", "--config", &bad_target, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("targets[0].range_cell"));

    let out = dfrc(&["process", "--methods", "spc_mtd,bogus", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn large_ampc_needs_explicit_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = dfrc(&["process", "--methods", "ampc", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("--allow-large-ampc") && stderr.contains("960"), "{stderr}");
}

#[test]
fn validate_writes_passing_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dfrc(&["validate", "--out", dir.path().to_str().unwrap()]);
    let report = std::fs::read_to_string(dir.path().join("validation.txt")).unwrap();
    assert!(out.status.success(), "{report}");
    assert!(report.starts_with("# config_hash: "));
    assert!(!report.contains("FAIL"));
}

#[test]
fn bench_reports_both_transmit_modes() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &format!("{SMALL}bench_repeats = 1\n"));
    let out = dfrc(&["bench", "--config", &config, "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.path().join("benchmark.txt")).unwrap();
    for row in ["cbm,ampc", "cbm,jrdap", "ncbm,ampc", "ncbm,jrdap"] {
        assert!(report.contains(row), "{report}");
    }
}

#[test]
fn shipped_configs_parse_and_validate() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let config = dfrc_cli::SceneConfig::load(&path).unwrap();
        config.validate().unwrap();
        count += 1;
    }
    assert!(count >= 3);
    let full = dfrc_cli::SceneConfig::load(Path::new(&format!("{dir}/full.toml"))).unwrap();
    assert_eq!(full, dfrc_cli::SceneConfig::default());
}
