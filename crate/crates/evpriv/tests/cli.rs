use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use evpriv::formats::image::read_image;
use evpriv::formats::net::NetFile;
use evpriv::formats::voxel::{read_vox, write_vox};
use evpriv::formats::watermark::write_wmk;
use evpriv_core::events::VoxelGrid;
use evpriv_core::privacy::{protect, FilterParams, ProtectMode};
use evpriv_core::recon::{infuse, ConvNet, NoiseWatermark, DEFAULT_WIDTHS};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_evpriv"));
    c.env("EVPRIV_LOG", "info");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read(p: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

/// Synthesizes a small texture stream and voxelizes it with 50 bins.
fn voxel_fixture(dir: &Path) -> PathBuf {
    ok(dir, &["synth", "--scene", "texture", "--width", "32", "--height", "24", "--out", "s.csv"]);
    ok(dir, &["voxelize", "--in", "s.csv", "--bins", "50", "--out", "e.vox"]);
    dir.join("e.vox")
}

#[test]
fn synth_voxelize_protect_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let vox = voxel_fixture(dir);
    let grid = read_vox(&read(&vox)).unwrap();
    assert_eq!(grid.shape(), (50, 24, 32));

    let before = read(&vox);
    ok(dir, &["protect", "--in", "e.vox", "--out", "p.vox", "--kt", "13", "--ks", "23"]);
    assert_eq!(read(&vox), before, "protect modified its input");
    let got = read_vox(&read(dir.join("p.vox"))).unwrap();
    let want = protect(&grid, FilterParams { k_t: 13, k_s: 23 }, ProtectMode::Sparse);
    assert_eq!(got, want);
}

#[test]
fn metrics_on_identical_images() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["synth", "--width", "20", "--height", "16", "--out", "s.evs"]);
    ok(dir, &["represent", "--in", "s.evs", "--kind", "histogram", "--out", "h.img"]);
    let out = ok(dir, &["metrics", "h.img", "h.img"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["mae"], 0.0);
    assert_eq!(v["ssim"], 1.0);
    assert_eq!(v["psnr"], "inf");
    assert!(read_image(&read(dir.join("h.img"))).is_ok());
}

#[test]
fn error_categories_and_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("bad.vox"), b"NOPE0000").unwrap();
    let out = run(dir, &["protect", "--in", "bad.vox", "--out", "p.vox"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).lines().any(|l| l.starts_with("error: format:")), "{}", stderr(&out));

    assert_eq!(code(&run(dir, &["frobnicate"])), 2);
    assert_eq!(code(&run(dir, &["protect", "--bogus", "1"])), 2);
    assert_eq!(code(&run(dir, &[])), 2);
    assert_eq!(code(&run(dir, &["protect", "--in", "missing.vox", "--out", "p.vox"])), 2);
    assert_eq!(code(&run(dir, &["protect", "--out", "p.vox"])), 2);

    std::fs::write(dir.join("c.toml"), "[protect]\nkt = 3\nwindow = 4\n").unwrap();
    let out = run(dir, &["--config", "c.toml", "protect", "--in", "bad.vox", "--out", "p.vox"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("error: usage:"));
    std::fs::write(dir.join("d.toml"), "[protekt]\nkt = 3\n").unwrap();
    assert_eq!(code(&run(dir, &["--config", "d.toml", "metrics", "a", "b"])), 2);
    assert_eq!(code(&run(dir, &["--help"])), 0);
}

#[test]
fn flags_override_config_which_overrides_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["synth", "--width", "8", "--height", "6", "--out", "s.evs"]);
    std::fs::write(dir.join("c.toml"), "seed = 5\n[voxelize]\nbins = 7\nin = \"s.evs\"\n").unwrap();

    ok(dir, &["--config", "c.toml", "voxelize", "--out", "a.vox"]);
    assert_eq!(read_vox(&read(dir.join("a.vox"))).unwrap().bins(), 7);
    ok(dir, &["--config", "c.toml", "voxelize", "--bins", "9", "--out", "b.vox"]);
    assert_eq!(read_vox(&read(dir.join("b.vox"))).unwrap().bins(), 9);
    let out = ok(dir, &["voxelize", "--in", "s.evs", "--out", "c.vox"]);
    assert_eq!(read_vox(&read(dir.join("c.vox"))).unwrap().bins(), 50);

    // Defaulted values appear in the logged configuration.
    let log = stderr(&out);
    let line = log.lines().find(|l| l.contains("effective config")).expect("no effective config line");
    assert!(line.contains("\"bins\":50") && line.contains("\"polarity\":\"signed\""), "{line}");

    // Seed precedence: flag over file.
    std::fs::write(dir.join("s.toml"), "seed = 5\n").unwrap();
    ok(dir, &["--config", "s.toml", "synth", "--width", "8", "--height", "6", "--out", "f.evs"]);
    ok(dir, &["--seed", "5", "synth", "--width", "8", "--height", "6", "--out", "g.evs"]);
    ok(dir, &["--config", "s.toml", "--seed", "6", "synth", "--width", "8", "--height", "6", "--out", "h.evs"]);
    assert_eq!(read(dir.join("f.evs")), read(dir.join("g.evs")));
    assert_ne!(read(dir.join("f.evs")), read(dir.join("h.evs")));
}

#[test]
fn report_on_empty_and_missing_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::create_dir(dir.join("empty")).unwrap();
    ok(dir, &["report", "empty"]);
    let attacks = String::from_utf8(read(dir.join("empty/report_attacks.csv"))).unwrap();
    assert_eq!(attacks, "attack,depth,mae,psnr,ssim,n\n");
    let loc = String::from_utf8(read(dir.join("empty/report_localization.csv"))).unwrap();
    assert_eq!(loc, "split,median_t,median_r,accuracy,n\n");
    let filters = String::from_utf8(read(dir.join("empty/report_filters.csv"))).unwrap();
    assert_eq!(filters, "variant,property,grids,passed,pass_rate\n");
    let json: serde_json::Value = serde_json::from_slice(&read(dir.join("empty/report.json"))).unwrap();
    assert_eq!(json["missing"].as_array().unwrap().len(), 3);

    let out = run(dir, &["report", "nowhere"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn localize_replays_byte_for_byte() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let args = |out: &'static str| {
        vec!["--seed", "3", "localize", "--out-dir", out, "--n-points", "150", "--n-refs", "6", "--n-queries", "5"]
    };
    std::fs::create_dir(dir.join("a")).unwrap();
    std::fs::create_dir(dir.join("b")).unwrap();
    ok(dir, &args("a"));
    ok(dir, &args("b"));
    for f in ["map.map", "results_plain.csv", "results_protected.csv", "localization.csv"] {
        assert_eq!(read(dir.join("a").join(f)), read(dir.join("b").join(f)), "{f}");
    }
    let rows = String::from_utf8(read(dir.join("a/results_plain.csv"))).unwrap();
    assert_eq!(rows.lines().count(), 6);
}

#[test]
fn serve_and_client_over_loopback() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let net = ConvNet::<f32>::random(4, &DEFAULT_WIDTHS, (2, 4), 21).unwrap();
    let wm = NoiseWatermark::generate(22, (4, 10, 12));
    let grid = VoxelGrid::from_data(4, 10, 12, (0..480).map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0).collect()).unwrap();
    std::fs::write(dir.join("mid.net"), NetFile::middle(&net).to_bytes().unwrap()).unwrap();
    std::fs::write(dir.join("ends.net"), NetFile::ends(&net).to_bytes().unwrap()).unwrap();
    std::fs::write(dir.join("w.wmk"), write_wmk(&wm).unwrap()).unwrap();
    std::fs::write(dir.join("e.vox"), write_vox(&grid).unwrap()).unwrap();
    // The file holds f32 values; compare against what the client reads.
    let grid = read_vox(&read(dir.join("e.vox"))).unwrap();

    let mut server = bin()
        .current_dir(dir)
        .args(["serve", "--net", "mid.net", "--listen", "127.0.0.1:0", "--max-sessions", "1"])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(server.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ").expect("no address line").to_string();

    ok(dir, &["client", "--net", "ends.net", "--watermark", "w.wmk", "--voxel", "e.vox", "--connect", &addr, "--out", "r.img"]);
    assert!(server.wait().unwrap().success());
    let got = read_image(&read(dir.join("r.img"))).unwrap();
    assert_eq!(got, net.forward(&infuse(&grid, &wm).unwrap()).unwrap());
}
