use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn cellgan(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cellgan"))
        .args(args)
        .current_dir(dir)
        .env_remove("CELLGAN_SEED")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

const MINIMAL: &str = "[experiment]\ngrid_dim = 1\nseed = 3\noutput_dir = \"out\"\n[train]\nepochs = 3\nbatches_per_epoch = 2\n";

#[test]
fn minimal_run_writes_all_artifacts() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "c.toml", MINIMAL);
    let out = cellgan(&["run", &cfg], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let files = snapshot(&tmp.path().join("out"));
    for name in ["progress.csv", "cells.csv", "ensemble.json", "result.json", "summary.json"] {
        let body = String::from_utf8(files[name].clone()).unwrap();
        assert!(body.contains("\"seed\": 3") || body.contains("# seed: 3"), "{name} lacks provenance");
    }
}

#[test]
fn unknown_method_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "c.toml", "[experiment]\nmethod = \"wgan\"\n");
    let out = cellgan(&["run", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("experiment.method"));
}

#[test]
fn missing_config_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let out = cellgan(&["run", "nope.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn lockstep_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "c.toml",
        "[experiment]\ngrid_dim = 3\nseed = 5\nmethod = \"lipizzaner\"\n[train]\nepochs = 4\nbatches_per_epoch = 3\n",
    );
    let out_dir = tmp.path().join("out");
    assert!(cellgan(&["run", &cfg], tmp.path()).status.success());
    let first = snapshot(&out_dir);
    fs::remove_dir_all(&out_dir).unwrap();
    assert!(cellgan(&["run", &cfg], tmp.path()).status.success());
    assert_eq!(first, snapshot(&out_dir));
}

#[test]
fn seed_comes_from_the_environment() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "c.toml", MINIMAL);
    let out = Command::new(env!("CARGO_BIN_EXE_cellgan"))
        .args(["run", &cfg])
        .current_dir(tmp.path())
        .env("CELLGAN_SEED", "99")
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = fs::read_to_string(tmp.path().join("out/cells.csv")).unwrap();
    assert!(csv.contains("# seed: 99\n"));
}

#[test]
fn audit_passes_on_toy_grid() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "c.toml",
        "[experiment]\ngrid_dim = 3\n[train]\nepochs = 5\nbatches_per_epoch = 4\n",
    );
    let out = cellgan(&["audit", &cfg], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(tmp.path().join("out/audit.txt")).unwrap();
    assert!(!text.contains("MISMATCH"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 16);
}

fn heatmap_json(success: &str, axis: &str) -> String {
    let cfg = serde_json::to_string(&cellgan::config::ExperimentConfig::default()).unwrap();
    format!(
        "{{\"provenance\":{{\"command\":\"heatmap-mode\",\"seed\":0,\"config\":{cfg}}},\
         \"data\":{{\"axis\":{axis},\"success\":{success},\"repetitions\":1}}}}"
    )
}

fn pgm_pixels(path: &Path) -> (usize, usize, Vec<u32>) {
    cellgan::experiments::parse_pgm(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn render_all_ones_is_white() {
    let tmp = TempDir::new().unwrap();
    let input = write(tmp.path(), "h.json", &heatmap_json("[[1,1],[1,1]]", "[0,1]"));
    let out = cellgan(&["render", &input, "--cell-px", "3"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (w, h, px) = pgm_pixels(&tmp.path().join("h.pgm"));
    assert_eq!((w, h), (6, 6));
    assert!(px.iter().all(|&p| p == 255));
}

#[test]
fn render_checkerboard() {
    let tmp = TempDir::new().unwrap();
    let input = write(tmp.path(), "h.json", &heatmap_json("[[0,1],[1,0]]", "[0,1]"));
    assert!(cellgan(&["render", &input, "--cell-px", "1"], tmp.path()).status.success());
    let (w, h, px) = pgm_pixels(&tmp.path().join("h.pgm"));
    assert_eq!((w, h), (2, 2));
    assert_eq!(px, [255, 0, 0, 255]);
}

#[test]
fn render_rejects_malformed_input() {
    let tmp = TempDir::new().unwrap();
    let bad = write(tmp.path(), "bad.json", "{\"data\": 3}");
    assert_eq!(cellgan(&["render", &bad], tmp.path()).status.code(), Some(2));
    let ragged = write(tmp.path(), "r.json", &heatmap_json("[[0,1],[1]]", "[0,1]"));
    assert_eq!(cellgan(&["render", &ragged], tmp.path()).status.code(), Some(2));
    let text = write(tmp.path(), "t.json", "not json");
    assert_eq!(cellgan(&["render", &text], tmp.path()).status.code(), Some(2));
}

#[test]
fn heatmap_outputs_render() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        tmp.path(),
        "c.toml",
        "[heatmap_disc]\nrepetitions = 1\n[heatmap_disc.axis]\nmin = -1.0\nmax = 1.0\nstep = 2.0\n\
         [heatmap_disc.coevolution]\ngenerations = 3\n",
    );
    let out = cellgan(&["heatmap-disc", &cfg], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json = tmp.path().join("out/heatmap_disc.json");
    assert!(cellgan(&["render", json.to_str().unwrap()], tmp.path()).status.success());
    let (w, h, _) = pgm_pixels(&tmp.path().join("out/heatmap_disc.pgm"));
    assert_eq!((w, h), (16, 16));
}
