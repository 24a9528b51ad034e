use std::f64::consts::FRAC_PI_2;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn drops2d(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drops2d"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Every artifact listed in the manifest carries its config hash.
fn assert_stamped(dir: &Path) {
    let m = json(&dir.join("manifest.json"));
    let hash = m["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    for a in m["artifacts"].as_array().unwrap() {
        let text = std::fs::read_to_string(dir.join(a.as_str().unwrap())).unwrap();
        assert!(text.contains(hash), "{a} lacks the config hash");
    }
}

#[test]
fn capacity_of_the_unit_disk() {
    let t = tempfile::tempdir().unwrap();
    let o = drops2d(
        &[
            "capacity",
            "--region",
            "disk:1,256",
            "--h",
            "0.03",
            "--refine",
            "--cells",
        ],
        t.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&t.path().join("capacity.json"));
    let i1 = r["result"]["equilibrium"]["I1"].as_f64().unwrap();
    assert!((i1 - FRAC_PI_2).abs() <= 0.01 * FRAC_PI_2, "I1 = {i1}");
    let cap = r["result"]["equilibrium"]["cap1"].as_f64().unwrap();
    assert!((cap * i1 - std::f64::consts::TAU).abs() < 1e-10);
    let m = json(&t.path().join("manifest.json"));
    assert_eq!(m["failed"], false);
    assert_eq!(m["subcommand"], "capacity");
    assert_eq!(m["outputs"], r["result"]);
    assert!(m["wall_seconds"].as_f64().unwrap() >= 0.0);
    assert!(m["versions"]["core"].is_string());
    let csv = std::fs::read_to_string(t.path().join("masses.csv")).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), "x,y,area,mass");
    assert_stamped(t.path());
}

#[test]
fn malformed_region_names_the_ring() {
    let t = tempfile::tempdir().unwrap();
    let bad = t.path().join("bad.json");
    // the hole (ring 1) crosses itself
    std::fs::write(
        &bad,
        r#"{"components":[{"outer":[[0,0],[4,0],[4,4],[0,4]],"holes":[[[1,1],[3,3],[3,1],[1,3]]]}]}"#,
    )
    .unwrap();
    let out = t.path().join("run");
    let o = drops2d(&["capacity", "--region", bad.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ring 1"), "{}", stderr(&o));
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["failed"], true);
    assert_eq!(m["exit_code"], 2);
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn validation_errors_exit_with_two() {
    let t = tempfile::tempdir().unwrap();
    for args in [
        vec!["minimize", "--lambda", "5", "--mass", "3.14159"],
        vec!["energy", "--region", "disk:1", "--lambda", "-1"],
        vec!["energy", "--region", "disk:1", "--lambda", "1", "--g", "cubic:1"],
        vec!["capacity", "--region", "disk:1", "--h", "0.6"],
        vec!["capacity", "--region", "no-such-file.json"],
        vec!["variation", "--region", "disk:1", "--field", "spin"],
        vec!["verify", "--criteria", "11"],
        vec!["capacity"],
    ] {
        let o = drops2d(&args, t.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
    let o = Command::new(env!("CARGO_BIN_EXE_drops2d"))
        .args(["capacity", "--region", "disk:1"])
        .arg("--out")
        .arg(t.path())
        .env("DROPS2D_THREADS", "none")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn grid_potentials_load_from_json() {
    let t = tempfile::tempdir().unwrap();
    // g(x, y) = x + 2 on [-2, 2]², which is exact under bilinear interpolation
    let values: Vec<f64> = (0..3).flat_map(|_| [0.0, 2.0, 4.0]).collect();
    let grid = t.path().join("g.json");
    let body = serde_json::json!({"lo": [-2.0, -2.0], "hi": [2.0, 2.0], "nx": 3, "ny": 3, "values": values});
    std::fs::write(&grid, body.to_string()).unwrap();
    let g = format!("grid:{}", grid.display());
    let out = t.path().join("run");
    let o = drops2d(
        &[
            "energy",
            "--region",
            "disk:1,128",
            "--h",
            "0.1",
            "--lambda",
            "1",
            "--g",
            &g,
        ],
        &out,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&out.join("energy.json"));
    let area = r["result"]["report"]["area"].as_f64().unwrap();
    let gi = r["result"]["report"]["g_integral"].as_f64().unwrap();
    assert!((gi - 2.0 * area).abs() < 1e-5 * area, "{gi}");
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);

    std::fs::write(&grid, r#"{"lo":[0,0],"hi":[1,1],"nx":2,"ny":2,"values":[1,2,3]}"#).unwrap();
    let o = drops2d(&["energy", "--region", "disk:1", "--lambda", "1", "--g", &g], &out);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn deterministic_runs_are_byte_identical() {
    let t = tempfile::tempdir().unwrap();
    let args = [
        "energy",
        "--region",
        "ellipse:1.3,0.8",
        "--h",
        "0.05",
        "--lambda",
        "2",
        "--g",
        "quadratic:1,0,0",
        "--compare-ball",
    ];
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    assert!(drops2d(&args, &a).status.success());
    let o = Command::new(env!("CARGO_BIN_EXE_drops2d"))
        .args(args)
        .arg("--out")
        .arg(&b)
        .env("DROPS2D_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
    let read = |d: &Path| std::fs::read(d.join("energy.json")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_eq!(json(&b.join("manifest.json"))["threads"], 1);
    let r = json(&a.join("energy.json"));
    let excess = r["result"]["relative_excess"].as_f64().unwrap();
    assert!(excess > 0.0, "the ball beats the ellipse");
}

#[test]
fn minimize_writes_history_region_and_filmstrip() {
    let t = tempfile::tempdir().unwrap();
    let args = [
        "minimize",
        "--lambda",
        "1",
        "--mass",
        "3.141592653589793",
        "--seed",
        "ellipse:1.2,1",
        "--max-iters",
        "4",
        "--frame-every",
        "2",
    ];
    let o = drops2d(&args, t.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let s = json(&t.path().join("summary.json"));
    assert_eq!(s["result"]["termination"], "budget");
    assert_eq!(s["result"]["iterations"], 4);
    let history = std::fs::read_to_string(t.path().join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 2 + 4);
    let energies: Vec<f64> = history
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(energies.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-6)));
    let region = drops2d::geometry::io::read_region(t.path().join("final_region.json")).unwrap();
    assert!((region.area() - std::f64::consts::PI).abs() < 1e-12 * std::f64::consts::PI);
    let svg = std::fs::read_to_string(t.path().join("filmstrip.svg")).unwrap();
    assert_eq!(svg.matches("<path").count(), 3);
    assert_stamped(t.path());

    // the manifest's config replays the run
    let mut cfg = json(&t.path().join("manifest.json"))["config"].clone();
    let replay = t.path().join("replay");
    cfg["out"] = Value::String(replay.to_str().unwrap().into());
    let cfg_path = t.path().join("config.json");
    std::fs::write(&cfg_path, cfg.to_string()).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_drops2d"))
        .arg("--config")
        .arg(&cfg_path)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["summary.json", "history.csv", "final_region.json"] {
        assert_eq!(
            std::fs::read(t.path().join(f)).unwrap(),
            std::fs::read(replay.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn el_residual_and_variation_on_the_unit_disk() {
    let t = tempfile::tempdir().unwrap();
    let o = drops2d(
        &[
            "el-residual",
            "--region",
            "disk:1,96",
            "--h",
            "0.03",
            "--refine",
            "--lambda",
            "1",
        ],
        t.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let s = json(&t.path().join("el_residual.json"));
    let p = s["result"]["multiplier"].as_f64().unwrap();
    assert!((p - 0.75).abs() <= 0.03 * 0.75, "p = {p}");
    let csv = std::fs::read_to_string(t.path().join("el_residual.csv")).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), "ring,s,x,y,kappa,D,g,R,flagged");
    assert_eq!(csv.lines().count(), 2 + 96);

    let v = t.path().join("v");
    let o = drops2d(&["variation", "--region", "disk:1,96", "--h", "0.03", "--refine"], &v);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&v.join("variation.json"));
    let predicted = r["result"]["I1"]["predicted"].as_f64().unwrap();
    assert!((predicted + FRAC_PI_2).abs() <= 0.02 * FRAC_PI_2, "{predicted}");
    assert!(r["result"]["cap1"]["chain_rule_error"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn relax_writes_table_and_svgs() {
    let t = tempfile::tempdir().unwrap();
    let o = drops2d(
        &[
            "relax",
            "--region",
            "disk:1,128",
            "--lambda",
            "9",
            "--h",
            "0.08",
            "--n",
            "2,4",
            "--big-r",
            "8",
            "--svg",
        ],
        t.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(t.path().join("relax.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2 + 2);
    for n in [2, 4] {
        let svg = std::fs::read_to_string(t.path().join(format!("omega_n{n}_R8.svg"))).unwrap();
        assert!(svg.contains("<svg"));
    }
    assert_stamped(t.path());
}

#[test]
fn verify_reports_tolerance_failures_with_exit_one() {
    let t = tempfile::tempdir().unwrap();
    let o = drops2d(&["verify", "--criteria", "10"], t.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("criterion 10 PASS"));

    let tight = t.path().join("tight");
    let o = drops2d(&["verify", "--criteria", "3", "--tolerance-scale", "0.01"], &tight);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let r = json(&tight.join("verify.json"));
    assert_eq!(r["result"]["results"][0]["outcome"], "fail_tolerance");
    assert_eq!(r["result"]["options"]["tolerance_scale"], 0.01);
    let m = json(&tight.join("manifest.json"));
    assert_eq!(m["failed"], false);
}
