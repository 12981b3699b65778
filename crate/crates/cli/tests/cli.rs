use std::path::Path;
use std::process::{Command, Output};
use tetcut::mesh::{load_mesh, primitives, validate, write_obj};

fn tetcut(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tetcut")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn cube(dir: &Path) -> String {
    let p = dir.join("cube.obj");
    write_obj(&primitives::unit_cube(), &p).unwrap();
    p.to_str().unwrap().to_string()
}

fn value<'a>(report: &'a str, key: &str) -> Option<&'a str> {
    report.lines().find_map(|l| l.strip_prefix(key)?.strip_prefix('='))
}

#[test]
fn remesh_writes_watertight_output_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let input = cube(dir.path());
    let out = dir.path().join("out.obj");
    let o = tetcut(&["remesh", "--input", &input, "--output", out.to_str().unwrap(), "--resolution", "24"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(value(&text, "status"), Some("ok"));
    assert_eq!(value(&text, "boundary_edges"), Some("0"));
    assert!(validate(&load_mesh(&out).unwrap()).is_watertight());
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("out.obj.report.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["resolution"], 24);
    assert_eq!(json["validation"]["boundary_edge_count"], 0);
}

#[test]
fn flags_override_config_file_over_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let input = cube(dir.path());
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "resolution=16\nlambda_fill=50\n").unwrap();
    let out = dir.path().join("o.obj");
    let o = tetcut(&["remesh", "--input", &input, "--output", out.to_str().unwrap(), "--config", cfg.to_str().unwrap(), "--resolution", "20"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(value(&text, "resolution"), Some("20"));
    assert_eq!(value(&text, "lambda_fill"), Some("50"));
    assert_eq!(value(&text, "decimate_ratio"), Some("0.95"));
    assert_eq!(value(&text, "epsilon"), Some(&*format!("{}", 1.0 / 20.0)));
}

#[test]
fn stage_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.obj");
    let o = tetcut(&["remesh", "--input", "/nonexistent/in.obj", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("load"));
}

#[test]
fn bad_arguments_exit_1() {
    assert_eq!(tetcut(&["remesh"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let input = cube(dir.path());
    let o = tetcut(&["remesh", "--input", &input, "--output", "x.obj", "--lambda-fill", "0.1"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(tetcut(&["--help"]).status.code(), Some(0));
}

#[test]
fn synth_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let sphere = dir.path().join("sphere.obj");
    write_obj(&primitives::icosphere(1.0, 3), &sphere).unwrap();
    let out = dir.path().join("holes.obj");
    let args = ["synth", "--kind", "holes", "--count", "6", "--seed", "7", "--input", sphere.to_str().unwrap(), "--out", out.to_str().unwrap()];
    let o = tetcut(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(value(&stdout(&o), "boundary_loops"), Some("6"));
    let first = std::fs::read(&out).unwrap();
    assert!(tetcut(&args).status.success());
    assert_eq!(std::fs::read(&out).unwrap(), first);

    let v = tetcut(&["validate", "--input", out.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(1));
    assert_ne!(value(&stdout(&v), "boundary_edges"), Some("0"));
    let v = tetcut(&["validate", "--input", sphere.to_str().unwrap()]);
    assert!(v.status.success());
}

#[test]
fn scan_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let input = cube(dir.path());
    let ply = dir.path().join("gt.ply");
    let o = tetcut(&["scan-gt", "--input", &input, "--out", ply.to_str().unwrap(), "--views", "20", "--rays-per-view", "1024"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(ply.exists());
    let o = tetcut(&["metrics", "--pred", &input, "--gt", &input, "--samples", "100000", "--views", "42", "--rays-per-view", "16384"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let f1: f64 = value(&stdout(&o), "f1").unwrap().parse().unwrap();
    assert!(f1 > 90.0, "{f1}");
}

#[test]
fn ablate_no_unary_is_classified() {
    let dir = tempfile::tempdir().unwrap();
    let input = cube(dir.path());
    let o = tetcut(&["ablate", "--input", &input, "--mode", "no-unary", "--resolution", "16"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(value(&text, "ablated_outcome"), Some("trivial: no interior region"));
    assert_eq!(value(&text, "full_outcome"), Some("watertight"));
}

#[test]
fn bench_survives_bad_rows() {
    let dir = tempfile::tempdir().unwrap();
    cube(dir.path());
    let manifest = dir.path().join("manifest.tsv");
    std::fs::write(&manifest, "cube\tcube.obj\tcube.obj\nmissing\tnope.obj\tcube.obj\n").unwrap();
    let report = dir.path().join("bench.txt");
    let o = tetcut(&["bench", "--manifest", manifest.to_str().unwrap(), "--report", report.to_str().unwrap(), "--no-metrics", "--resolution", "16"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.contains("name=cube status=ok"));
    assert!(text.contains("name=missing status=failure"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("bench.txt.json")).unwrap()).unwrap();
    assert_eq!(json["summary"]["failures"], 1);
    assert_eq!(json["summary"]["boundary"], 0);
}

#[test]
fn output_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let input = cube(dir.path());
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(format!("out{threads}.obj"));
        let o = Command::new(env!("CARGO_BIN_EXE_tetcut"))
            .env("TETCUT_THREADS", threads)
            .args(["remesh", "--input", &input, "--output", out.to_str().unwrap(), "--resolution", "24"])
            .output()
            .unwrap();
        assert!(o.status.success());
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let o = Command::new(env!("CARGO_BIN_EXE_tetcut")).env("TETCUT_THREADS", "many").args(["validate", "--input", &input]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}
