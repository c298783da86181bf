use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use flowtopo::flow_io::{write_flo, FlowField};
use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowtopo"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

#[test]
fn synth_reports_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), r#"{"shape": "klein_control", "points": 300}"#);
    let files = ["synth_report.json", "cloud.csv", "cloud.json"];
    let mut runs = Vec::new();
    for _ in 0..2 {
        let o = run(tmp.path(), &["synth", "--config", &cfg, "--seed", "9", "--out", "a"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        runs.push(files.map(|f| fs::read_to_string(tmp.path().join("a").join(f)).unwrap()));
    }
    assert!(runs[0] == runs[1], "outputs differ between runs");
    let r = report(&tmp.path().join("a"), "synth_report.json");
    assert_eq!(r["seed"], 9);
    assert_eq!(r["config"]["shape"], "klein_control");
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r["results"]["dim"], 4);

    run(tmp.path(), &["synth", "--config", &cfg, "--seed", "10", "--out", "c"]);
    assert!(runs[0][1] != fs::read_to_string(tmp.path().join("c/cloud.csv")).unwrap());
}

#[test]
fn ph_on_a_torus_cloud() {
    let tmp = TempDir::new().unwrap();
    let args = ["ph", "--out", "o", "points=1500", "--set", "primes=[2]"];
    let o = run(tmp.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let out = tmp.path().join("o");
    let r = report(&out, "ph_report.json");
    assert_eq!(r["passed"], true);
    assert_eq!(r["results"]["signatures"][0]["signature"], serde_json::json!([1, 2, 1]));
    for f in ["barcode_z2.json", "diagram_z2.csv", "diagram_z2.svg"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert!(fs::read_to_string(out.join("diagram_z2.csv")).unwrap().starts_with("dim,birth,death\n"));
    let first = fs::read_to_string(out.join("ph_report.json")).unwrap();
    run(tmp.path(), &args);
    assert!(first == fs::read_to_string(out.join("ph_report.json")).unwrap());
}

#[test]
fn ph_reads_a_cloud_csv() {
    let tmp = TempDir::new().unwrap();
    run(tmp.path(), &["synth", "--out", "s", "shape=circle", "points=60", "layout=grid", "noise_sigma=0"]);
    let o = run(
        tmp.path(),
        &["ph", "--out", "p", "complex=vr", "max_dim=2", "cloud_csv=s/cloud.csv", "primes=[3]"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&tmp.path().join("p"), "ph_report.json");
    assert_eq!(r["results"]["signatures"][0]["signature"], serde_json::json!([1, 1]));
    assert!(r["results"]["signatures"][0]["expected"].is_null());
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = TempDir::new().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["synth", "--set", "no_such_key=1"],
        vec!["synth", "q=1.5"],
        vec!["synth", "primes=[4]"],
        vec!["synth", "points=0"],
        vec!["synth", "notakeyvalue"],
        vec!["synth", "--config", "missing.json"],
        vec!["frobnicate"],
        vec!["ingest"],
        vec!["ingest", "input_dir=nowhere"],
        vec!["pipeline", "patch_csv=absent.csv"],
    ];
    for args in cases {
        let o = run(tmp.path(), &args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
    let cfg = write_config(tmp.path(), "{\"points\": ");
    assert_eq!(run(tmp.path(), &["synth", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn failed_check_exits_with_one() {
    let tmp = TempDir::new().unwrap();
    // 30 random points on a noisy circle: the loop does not clear the noise floor
    let o = run(
        tmp.path(),
        &["ph", "--out", "o", "shape=circle", "points=30", "complex=vr", "max_dim=2", "primes=[2]"],
    );
    let r = report(&tmp.path().join("o"), "ph_report.json");
    assert_eq!(r["passed"], false);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn ingest_then_pipeline() {
    let tmp = TempDir::new().unwrap();
    let flows = tmp.path().join("flows");
    fs::create_dir(&flows).unwrap();
    for (i, (w, h)) in [(12, 9), (7, 16)].into_iter().enumerate() {
        let field = FlowField::from_fn(w, h, |r, c| {
            let t = (r * 7 + c * 3 + i) as f32;
            [t.sin(), (0.3 * t).cos() + if r == 2 && c == 2 { 1e10 } else { 0.0 }]
        })
        .unwrap();
        fs::write(flows.join(format!("f{i}.flo")), write_flo(&field)).unwrap();
    }
    fs::write(flows.join("notes.txt"), "ignored").unwrap();

    let o = run(tmp.path(), &["ingest", "--out", "o", "input_dir=flows", "ingest_patches=400"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(tmp.path().join("o/patches.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 18);
    assert_eq!(lines.count(), 400);
    let r = report(&tmp.path().join("o"), "ingest_report.json");
    assert_eq!(r["results"]["fields"].as_array().unwrap().len(), 2);
    assert_eq!(r["results"]["fields"][1]["height"], 16);
    // the sentinel pixel never lands in a patch
    assert!(!csv.contains("10000000000"));

    let o = run(
        tmp.path(),
        &["pipeline", "--out", "p", "patch_csv=o/patches.csv", "bins=2", "k=5", "q=0.5", "landmarks=10"],
    );
    let code = o.status.code().unwrap();
    assert!(code == 0 || code == 1, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&tmp.path().join("p"), "pipeline_report.json");
    assert_eq!(r["passed"], code == 0);
    assert_eq!(r["results"]["input"], 400);
    assert_eq!(r["results"]["fibers"]["bins"].as_array().unwrap().len(), 2);
    let coeffs = fs::read_to_string(tmp.path().join("p/coefficients.csv")).unwrap();
    assert_eq!(coeffs.lines().next().unwrap().split(',').count(), 16);
    assert!(tmp.path().join("p/bin01_landmarks.csv").exists());
}

#[test]
fn zigzag_and_verify_report_their_verdicts() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["zigzag", "--out", "z", "patches=60000", "bins=4"]);
    let r = report(&tmp.path().join("z"), "zigzag_report.json");
    assert_eq!(o.status.code(), Some(if r["passed"] == true { 0 } else { 1 }));
    assert_eq!(r["results"]["node_ranks"].as_array().unwrap().len(), 8);
    let text = fs::read_to_string(tmp.path().join("z/zigzag.txt")).unwrap();
    assert!(text.contains("rank"));
    let bars: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("z/zigzag_barcode.json")).unwrap()).unwrap();
    for iv in bars.as_array().unwrap() {
        for key in ["dim", "start_node", "end_node", "multiplicity"] {
            assert!(iv.get(key).is_some(), "{key}");
        }
    }

    let o = run(
        tmp.path(),
        &["verify", "--out", "v", "verify_witnesses=3000", "oracle_clouds=10", "identification_grid=12"],
    );
    let r = report(&tmp.path().join("v"), "verify_report.json");
    assert_eq!(o.status.code(), Some(if r["passed"] == true { 0 } else { 1 }));
    assert_eq!(r["results"]["identification"]["passed"], true);
    assert_eq!(r["results"]["oracle"]["passed"], true);
    assert_eq!(r["results"]["torus"]["passed"], true);
}
