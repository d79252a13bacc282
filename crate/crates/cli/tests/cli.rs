use std::path::Path;
use std::process::{Command, Output};

fn qcam(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcam"))
        .current_dir(dir)
        .env_remove("QCAM_OUT")
        .env("RUST_LOG", "warn")
        .args(args)
        .output()
        .expect("run qcam")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = qcam(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn write_pgm(path: &Path, side: usize, pixels: &[u8]) {
    let mut buf = format!("P5\n{side} {side}\n255\n").into_bytes();
    buf.extend_from_slice(pixels);
    std::fs::write(path, buf).unwrap();
}

fn pgm_pixels(path: &Path) -> Vec<u8> {
    let bytes = std::fs::read(path).unwrap();
    // Three header lines: magic, size, maxval.
    let mut newlines = 0;
    let start = bytes.iter().position(|&b| {
        newlines += usize::from(b == b'\n');
        newlines == 3
    });
    bytes[start.unwrap() + 1..].to_vec()
}

#[test]
fn encode_white_stays_white() {
    let dir = tempfile::tempdir().unwrap();
    write_pgm(&dir.path().join("white.pgm"), 2, &[255; 4]);
    ok(dir.path(), &["encode", "--image", "white.pgm", "--shots", "1000", "--out", "o"]);
    assert_eq!(pgm_pixels(&dir.path().join("o/measured.pgm")), vec![255; 4]);
    let hist = std::fs::read_to_string(dir.path().join("o/histogram.csv")).unwrap();
    let total: u64 = hist.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 1000);
    assert!(dir.path().join("o/manifest-encode.json").exists());
}

#[test]
fn seed_fixes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let px: Vec<u8> = (0..16).map(|i| (i * 16) as u8).collect();
    write_pgm(&dir.path().join("g.pgm"), 4, &px);
    for out in ["a", "b"] {
        ok(dir.path(), &["encode", "--image", "g.pgm", "--shots", "500", "--seed", "9", "--out", out]);
    }
    ok(dir.path(), &["encode", "--image", "g.pgm", "--shots", "500", "--seed", "10", "--out", "c"]);
    let read = |o: &str| std::fs::read(dir.path().join(o).join("histogram.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}

#[test]
fn explore_makes_four_panels_for_two_gates() {
    let dir = tempfile::tempdir().unwrap();
    let px: Vec<u8> = (0..256).map(|i| (i * 7 % 256) as u8).collect();
    write_pgm(&dir.path().join("g.pgm"), 16, &px);
    ok(dir.path(), &["explore", "--image", "g.pgm", "--gates", "crx:p3,crx:p7", "--shots", "0", "--out", "o"]);
    let panels = std::fs::read_to_string(dir.path().join("o/explore/panels.csv")).unwrap();
    let names: Vec<&str> = panels.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(names, ["none", "crx:p3", "crx:p7", "crx:p3+crx:p7"]);
    // With exact decoding the untouched panel is the input image.
    assert_eq!(pgm_pixels(&dir.path().join("o/explore/panel-00.pgm")), px);
    assert_ne!(pgm_pixels(&dir.path().join("o/explore/panel-03.pgm")), px);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"max_gates": 2, "seed": 5, "out": "from-file"}"#).unwrap();
    ok(dir.path(), &["--config", "c.json", "bench-depth"]);
    let csv = std::fs::read_to_string(dir.path().join("from-file/depth.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3);
    ok(dir.path(), &["--config", "c.json", "bench-depth", "--max-gates", "4", "--out", "flag"]);
    let csv = std::fs::read_to_string(dir.path().join("flag/depth.csv")).unwrap();
    let depths: Vec<usize> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(depths.len(), 5);
    assert!(depths.windows(2).all(|w| w[1] > w[0]));
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("flag/manifest-bench-depth.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 5);
    assert_eq!(m["config"]["max_gates"], 4);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| qcam(dir.path(), args).status.code();
    assert_eq!(code(&["no-such-command"]), Some(2));
    assert_eq!(code(&["encode", "--out", "o"]), Some(2));
    std::fs::write(dir.path().join("bad.json"), r#"{"shots": "lots"}"#).unwrap();
    assert_eq!(code(&["--config", "bad.json", "encode", "--image", "x.pgm"]), Some(2));
    assert_eq!(code(&["explore", "--image", "x.pgm", "--gates", "swap:p1"]), Some(2));
    assert_eq!(code(&["encode", "--image", "missing.pgm", "--out", "o"]), Some(1));
    for sub in ["encode", "explore", "prep-data", "train-cnn", "train-agent", "gen", "eval", "attack", "baselines", "bench-depth", "report"] {
        assert_eq!(code(&[sub, "--help"]), Some(0), "{sub}");
    }
}

#[test]
fn report_without_rows_has_chance_row() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["report", "--out", "o"]);
    let table = std::fs::read_to_string(dir.path().join("o/results_table.csv")).unwrap();
    assert!(table.lines().last().unwrap().starts_with("chance,0.5,,0.027777777777777776,"));
}

#[test]
fn pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = ["--out", "run", "--seed", "3"];
    let run = |args: &[&str]| ok(d, &[args, &o[..]].concat());
    run(&["prep-data", "--per-class", "6", "--train", "144", "--val", "0", "--test", "72"]);
    run(&["train-cnn", "--task", "public", "--epochs", "1", "--recipe", "clean"]);
    run(&["train-cnn", "--task", "private", "--epochs", "1", "--recipe", "clean"]);
    run(&[
        "train-agent", "--catalog", "reduced", "--steps", "60", "--hidden", "8", "--batch-size", "8", "--buffer-capacity", "100",
        "--target-sync", "10", "--log-every", "10", "--epsilon-decay", "40", "--learning-starts", "8", "--episode-len", "8",
    ]);
    run(&["gen"]);
    run(&["eval"]);
    run(&["attack", "--epochs", "1"]);
    run(&["baselines", "--finetune-epochs", "1"]);
    run(&["report"]);

    let r = d.join("run");
    let curves = std::fs::read_to_string(r.join("curves.csv")).unwrap();
    assert!(curves.starts_with("step,epsilon,reward,smoothed_reward,loss,q_online,q_target"));
    assert!(r.join("agent/final/online.qcam").exists());
    assert!(r.join("manifest-train-cnn-public.json").exists() && r.join("manifest-train-cnn-private.json").exists());

    let table = std::fs::read_to_string(r.join("results_table.csv")).unwrap();
    let labels: Vec<&str> = table.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(labels, ["gaussian-blur", "gaussian-noise", "public-private", "quantum-random", "chance"]);
    let policy_row: Vec<&str> = table.lines().find(|l| l.starts_with("public-private")).unwrap().split(',').collect();
    assert_eq!(policy_row[5], "60");
    assert!(policy_row.iter().all(|f| !f.is_empty()));

    // Generation is reproducible from the same inputs and seed.
    let before = std::fs::read(r.join("generated/images-idx3-ubyte")).unwrap();
    run(&["gen"]);
    assert_eq!(std::fs::read(r.join("generated/images-idx3-ubyte")).unwrap(), before);
}
