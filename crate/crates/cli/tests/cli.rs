use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lpbf_feedforward::thermal::snapshot::Snapshot;

fn lpbf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpbf")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = lpbf(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn slab(dir: &Path) {
    ok(&["--out-dir", p(dir), "gen-fixture", "overhang-slab", "--size", "small"]);
}

#[test]
fn schedule_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    slab(d);
    let cfg = d.join("overhang_slab.toml");
    let scan = d.join("overhang_slab.scan");
    for (name, threads) in [("a", "1"), ("b", "1"), ("c", "3")] {
        ok(&["--config", p(&cfg), "--threads", threads, "--out-dir", p(&d.join(name)), "schedule", p(&scan)]);
    }
    for file in ["schedule.csv", "layer_power.csv", "resolved_config.toml"] {
        let a = fs::read(d.join("a").join(file)).unwrap();
        assert_eq!(a, fs::read(d.join("b").join(file)).unwrap(), "{file}");
        assert_eq!(a, fs::read(d.join("c").join(file)).unwrap(), "{file}");
    }
    let text = fs::read_to_string(d.join("a/schedule.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# lpbf power schedule v1"));
    assert!(lines.next().unwrap().starts_with("layer,vector_id,"));
    assert!(lines.count() > 0);

    // The echoed config reproduces the run.
    let again = d.join("again");
    ok(&["--config", p(&d.join("a/resolved_config.toml")), "--out-dir", p(&again), "schedule", p(&scan)]);
    assert_eq!(fs::read(again.join("schedule.csv")).unwrap(), fs::read(d.join("a/schedule.csv")).unwrap());
}

#[test]
fn run_echoes_resolved_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["--material", "316LSS", "--out-dir", p(dir.path()), "gen-fixture", "single-tracks"]);
    let echo = String::from_utf8(out.stdout).unwrap();
    let text = fs::read_to_string(dir.path().join("resolved_config.toml")).unwrap();
    assert!(echo.contains(&text));
    for key in ["dt_s = ", "f = 2.5", "p_nominal_w = 290.0", "c1 = 256.0", "window_layers = 30", "dwell_time = 10.0"] {
        assert!(text.contains(key), "missing {key}");
    }
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let missing = lpbf(&["--out-dir", p(d), "schedule", p(&d.join("nope.scan"))]);
    assert_eq!(missing.status.code(), Some(2));

    let bad = lpbf(&["--material", "unobtainium", "--out-dir", p(d), "gen-fixture", "single-tracks"]);
    assert_eq!(bad.status.code(), Some(2));

    fs::write(d.join("bad.toml"), "[grid]\nhatch = 90\n").unwrap();
    let unknown = lpbf(&["--config", p(&d.join("bad.toml")), "--out-dir", p(d), "gen-fixture", "single-tracks"]);
    assert_eq!(unknown.status.code(), Some(2));

    fs::write(d.join("tracks.csv"), "P_W,v_mm_s,width_um,length_um,source\n100,500,90,40,camera\n").unwrap();
    let col = lpbf(&["--out-dir", p(d), "fit-meltpool", p(&d.join("tracks.csv"))]);
    assert_eq!(col.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&col.stderr).contains("Tb_C"));

    // The slab layer overheats; aborting there is a numeric failure.
    slab(d);
    let cfg = fs::read_to_string(d.join("overhang_slab.toml")).unwrap();
    assert!(cfg.contains("overheat = \"clamp-to-min\""));
    fs::write(d.join("abort.toml"), cfg.replace("clamp-to-min", "abort")).unwrap();
    let hot = lpbf(&[
        "--config",
        p(&d.join("abort.toml")),
        "--out-dir",
        p(&d.join("abort")),
        "schedule",
        p(&d.join("overhang_slab.scan")),
    ]);
    assert_eq!(hot.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&hot.stderr).contains("vector"));
}

#[test]
fn synthetic_tracks_fit_back() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("exact.toml"), "[tracks]\nnoise = 0.0\n").unwrap();
    ok(&["--config", p(&d.join("exact.toml")), "--out-dir", p(d), "gen-fixture", "tracks"]);
    let out = ok(&["--out-dir", p(d), "fit-meltpool", p(&d.join("tracks.csv"))]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("c1 = 261.000"));
    let report = fs::read_to_string(d.join("fit_report.csv")).unwrap();
    assert!(report.contains("\nc1,261.000000,1.000000,360,"));
    assert!(report.contains("\nc2,499.000000,1.000000,360,"));

    // Same seed, same noisy data.
    let a = d.join("a");
    let b = d.join("b");
    ok(&["--seed", "11", "--out-dir", p(&a), "gen-fixture", "tracks"]);
    ok(&["--seed", "11", "--out-dir", p(&b), "gen-fixture", "tracks"]);
    assert_eq!(fs::read(a.join("tracks.csv")).unwrap(), fs::read(b.join("tracks.csv")).unwrap());
    let c = d.join("c");
    ok(&["--seed", "12", "--out-dir", p(&c), "gen-fixture", "tracks"]);
    assert_ne!(fs::read(a.join("tracks.csv")).unwrap(), fs::read(c.join("tracks.csv")).unwrap());
}

#[test]
fn single_vector_schedule_has_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("one.scan"), "layer 0 z 0.04\nmark 0 0 2 0 1000\n").unwrap();
    ok(&["--out-dir", p(d), "schedule", p(&d.join("one.scan"))]);
    let text = fs::read_to_string(d.join("schedule.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].contains(",293.000000,0.0164000000,0"), "{}", rows[0]);
}

#[test]
fn zero_power_simulation_stays_at_plate_temperature() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    slab(d);
    let scan = d.join("overhang_slab.scan");
    let cfg = d.join("overhang_slab.toml");
    ok(&["--config", p(&cfg), "--out-dir", p(&d.join("s")), "schedule", p(&scan)]);
    let table = fs::read_to_string(d.join("s/schedule.csv")).unwrap();
    let zero: String = table
        .lines()
        .map(|l| {
            if l.starts_with('#') || l.starts_with("layer") {
                l.to_string()
            } else {
                let mut f: Vec<&str> = l.split(',').collect();
                f[7] = "0";
                f.join(",")
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    fs::write(d.join("zero.csv"), zero).unwrap();
    let sim = d.join("sim");
    ok(&["--config", p(&cfg), "--out-dir", p(&sim), "simulate", p(&scan), "--powers", p(&d.join("zero.csv"))]);
    let temps = fs::read_to_string(sim.join("layer_temperature.csv")).unwrap();
    let rows: Vec<&str> = temps.lines().skip(2).collect();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert!(r.ends_with(",293.000,293.000,293.000"), "{r}");
    }

    // Snapshots round-trip bit-exactly through the binary format.
    let bytes = fs::read(sim.join("snapshots/layer_0002.bin")).unwrap();
    let snap = Snapshot::read_from(bytes.as_slice()).unwrap();
    assert_eq!(snap.layer, 2);
    let mut again = Vec::new();
    snap.write_to(&mut again).unwrap();
    assert_eq!(again, bytes);

    // A power file that misses a vector is rejected.
    fs::write(d.join("short.csv"), "vector_id,power_W\n0,100\n").unwrap();
    let short = lpbf(&["--config", p(&cfg), "--out-dir", p(&sim), "simulate", p(&scan), "--powers", p(&d.join("short.csv"))]);
    assert_eq!(short.status.code(), Some(2));
}

#[test]
fn nominal_simulation_predicts_areas() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    slab(d);
    let out = d.join("sim");
    ok(&["--config", p(&d.join("overhang_slab.toml")), "--out-dir", p(&out), "simulate", p(&d.join("overhang_slab.scan"))]);
    let text = fs::read_to_string(out.join("predicted.csv")).unwrap();
    let first = text.lines().nth(2).unwrap();
    let f: Vec<&str> = first.split(',').collect();
    assert_eq!(f[7], "220.000000");
    assert!(f[9].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn one_point_tuning_grid_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut scan = String::from("layer 2 z 0.12\n");
    for n in 0..4 {
        let x = 0.045 + 0.09 * n as f64;
        let (y0, y1) = if n % 2 == 0 { (0.0, 1.0) } else { (1.0, 0.0) };
        if n > 0 {
            scan.push_str("jump 1.8\n");
        }
        scan.push_str(&format!("mark {x} {y0} {x} {y1} 1000\n"));
    }
    fs::write(d.join("mini.scan"), scan).unwrap();
    fs::write(
        d.join("tune.toml"),
        "[grid]\nsubstrate_layers = 2\n[tune]\nf_true = 3.0\nbulk_window_mm = [0.1, 0.3]\n",
    )
    .unwrap();
    ok(&[
        "--config",
        p(&d.join("tune.toml")),
        "--out-dir",
        p(d),
        "tune-f",
        "--scanpath",
        p(&d.join("mini.scan")),
        "--f-values",
        "3",
    ]);
    let report = fs::read_to_string(d.join("tuning_report.csv")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[1], "f,Ac_target_mm2,epsilon");
    assert!(lines[2].starts_with("3.000000,"));
    let eps: f64 = lines[2].rsplit(',').next().unwrap().parse().unwrap();
    assert!(eps < 1e-6, "{eps}");
    assert!(d.join("best_schedule.csv").is_file());

    let none = lpbf(&["--out-dir", p(d), "tune-f", "--scanpath", p(&d.join("mini.scan"))]);
    assert_eq!(none.status.code(), Some(2));
}
