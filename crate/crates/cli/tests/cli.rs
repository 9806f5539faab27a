use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn specshape(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specshape"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = specshape(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn crb_theta_sweep_has_179_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("crb.csv");
    ok(&[
        "crb",
        "--scenario",
        s(&scenario("los.json")),
        "--sweep",
        "theta:1:179:1",
        "--out",
        s(&out),
    ]);
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("theta_deg,crb_deg"));
    assert_eq!(lines.count(), 179);
    assert!(dir.path().join("crb.manifest.json").exists());
}

#[test]
fn noise_free_synth_has_600_samples() {
    let text = ok(&[
        "synth",
        "--scenario",
        s(&scenario("los.json")),
        "--noise-free",
    ]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("f_hz,z,mean_re,mean_im"));
    assert_eq!(lines.count(), 600);
}

#[test]
fn two_path_estimate_finds_both_angles() {
    let text = ok(&["estimate", "--scenario", s(&scenario("two_path.json"))]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let doas: Vec<f64> = serde_json::from_value(v["doas_deg"].clone()).unwrap();
    assert_eq!(doas.len(), 2, "{v}");
    assert!((doas[0] - 60.0).abs() < 0.5, "{doas:?}");
    assert!((doas[1] - 100.0).abs() < 0.5, "{doas:?}");
    let dist: Vec<f64> = serde_json::from_value(v["rel_distances_m"].clone()).unwrap();
    assert_eq!(dist.len(), 1);
    assert!((dist[0] - 0.5).abs() < 0.17);
}

#[test]
fn tx_pair_estimate_reports_aod() {
    let text = ok(&[
        "estimate",
        "--scenario",
        s(&scenario("tx_pair.json")),
        "--noise-free",
    ]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!((v["aod_deg"].as_f64().unwrap() - 120.0).abs() < 0.5);
    assert!((v["doas_deg"][0].as_f64().unwrap() - 60.0).abs() < 0.5);
}

#[test]
fn seeded_runs_are_byte_identical() {
    let a = ok(&[
        "synth",
        "--scenario",
        s(&scenario("los.json")),
        "--seed",
        "9",
    ]);
    let b = ok(&[
        "synth",
        "--scenario",
        s(&scenario("los.json")),
        "--seed",
        "9",
    ]);
    let c = ok(&[
        "synth",
        "--scenario",
        s(&scenario("los.json")),
        "--seed",
        "10",
    ]);
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn job_count_does_not_change_results() {
    let args = |jobs: &'static str| {
        ok(&[
            "--jobs",
            jobs,
            "rmse",
            "--scenario",
            s(&scenario("los.json")),
            "--trials",
            "200",
            "--estimator",
            "peak",
        ])
    };
    assert_eq!(args("1"), args("3"));
}

#[test]
fn manifest_reproduces_output() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("rmse.csv");
    ok(&[
        "rmse",
        "--scenario",
        s(&scenario("los.json")),
        "--seed",
        "4",
        "--trials",
        "150",
        "--estimator",
        "peak",
        "--sweep",
        "snr:0:10:5",
        "--out",
        s(&first),
    ]);
    let manifest = dir.path().join("rmse.manifest.json");
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m["config"]["scenario"]["seed"], 4);
    assert_eq!(m["outputs"][0], "rmse.csv");
    let second = dir.path().join("again.csv");
    ok(&["rmse", "--scenario", s(&manifest), "--out", s(&second)]);
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
}

#[test]
fn figure_runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["run-figure", "fig12", "--out", s(&a)]);
    ok(&["run-figure", "fig12", "--out", s(&b)]);
    let csv = fs::read_to_string(a.join("fig12.csv")).unwrap();
    assert_eq!(csv, fs::read_to_string(b.join("fig12.csv")).unwrap());
    assert!(a.join("fig12.manifest.json").exists());

    let rows: Vec<(f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let (t, e) = l.split_once(',').unwrap();
            (t.parse().unwrap(), e.parse().unwrap())
        })
        .collect();
    let local_max = |lo: f64, hi: f64| {
        rows.iter()
            .filter(|r| r.0 >= lo && r.0 <= hi)
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap()
            .0
    };
    assert!((local_max(40.0, 80.0) - 60.0).abs() < 1.0);
    assert!((local_max(85.0, 120.0) - 100.0).abs() < 1.0);
}

#[test]
fn figure_overrides_are_applied() {
    let dir = tempfile::tempdir().unwrap();
    let patch = dir.path().join("patch.json");
    fs::write(&patch, r#"{"d_m": 0.01}"#).unwrap();
    ok(&[
        "run-figure",
        "fig13",
        "--out",
        s(dir.path()),
        "--scenario",
        s(&patch),
    ]);
    let m: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("fig13_spectrum.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(m["config"]["scenario"]["d_m"], 0.01);
    assert_eq!(m["config"]["figure"], "fig13");
    assert!(dir.path().join("fig13_zeta.csv").exists());
}

#[test]
fn exit_codes() {
    let los = scenario("los.json");
    let code = |args: &[&str]| specshape(args).status.code();
    assert_eq!(
        code(&["crb", "--scenario", s(&los), "--sweep", "theta:1:179"]),
        Some(2)
    );
    assert_eq!(code(&["frobnicate"]), Some(2));
    assert_eq!(code(&["run-figure", "fig99"]), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        fs::read_to_string(&los).unwrap().replace("0.005", "-0.005"),
    )
    .unwrap();
    assert_eq!(code(&["crb", "--scenario", s(&bad)]), Some(3));
    assert_eq!(
        code(&["rmse", "--scenario", s(&los), "--trials", "5"]),
        Some(3)
    );
    assert_eq!(
        code(&["crb", "--scenario", s(&dir.path().join("missing.json"))]),
        Some(1)
    );

    let pair = scenario("tx_pair.json");
    let flat = dir.path().join("flat.json");
    let text = fs::read_to_string(&pair)
        .unwrap()
        .replace("\"snr_db\": 10.0", "\"snr_db\": -60.0");
    fs::write(&flat, text).unwrap();
    let peak = [
        "rmse",
        "--scenario",
        s(&flat),
        "--trials",
        "100",
        "--estimator",
        "peak",
    ];
    assert_eq!(code(&peak), Some(4));
}
