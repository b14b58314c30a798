use std::path::Path;
use std::process::{Command, Output};

use flowlab::geometry::io::write_off;
use flowlab::geometry::{CatalogSpec, SimplicialMesh};
use serde_json::Value;

fn flowlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write_mesh(dir: &Path, name: &str, mesh: &SimplicialMesh) -> String {
    let path = dir.join(name);
    std::fs::write(&path, write_off(mesh)).unwrap();
    path.display().to_string()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn caloric_dim_prints_binomial() {
    let o = flowlab(&["caloric", "dim", "2", "2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "6");
}

#[test]
fn caloric_extend_prints_polynomial() {
    let o = flowlab(&["caloric", "extend", "4"]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "x1^4 + 12*t*x1^2 + 12*t^2");
}

#[test]
fn missing_mesh_is_a_validation_error() {
    let o = flowlab(&["flow", "--mesh", "definitely-missing.off"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unknown_flag_prints_usage() {
    let o = flowlab(&["flow", "--bogus"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn unknown_shrinker_is_a_validation_error() {
    let o = flowlab(&["shrinker", "verify", "dodecahedron"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn shrinker_verify_writes_report_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let o = flowlab(&["shrinker", "verify", "sphere2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&out.join("report.json"));
    let f = report["F"].as_f64().unwrap();
    assert!((f - 4.0 / std::f64::consts::E).abs() < 0.01 * f);
    assert!(report["shrinker_residual"].as_f64().unwrap() < 0.05);
    let manifest = read_json(&out.join("manifest.json"));
    for key in ["command", "flags", "seed", "stop_reason"] {
        assert!(manifest.get(key).is_some(), "{key}");
    }
    assert!(manifest.get("start_time").is_none());
    assert_eq!(manifest["command"], "shrinker verify");
}

#[test]
fn circle_flow_goes_extinct_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = write_mesh(dir.path(), "circle.off", &CatalogSpec::circle(1.0, 64).generate().unwrap());
    let out = dir.path().join("run");
    let args = ["flow", "--mesh", &mesh, "--out", out.to_str().unwrap(), "--dt", "2e-3"];
    let o = flowlab(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["stop_reason"], "extinct");
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(
        trace.lines().next().unwrap(),
        "time,volume,F,max_H,max_x,shrinker_residual,min_quality"
    );
    let report = read_json(&out.join("report.json"));
    let t = report["extinction_time"].as_f64().unwrap();
    assert!((t - 0.5).abs() < 0.01, "{t}");
    let snaps: Vec<_> = std::fs::read_dir(out.join("snapshots")).unwrap().collect();
    assert!(snaps.len() >= 2);

    let first: Vec<String> = ["trace.csv", "report.json", "manifest.json"]
        .iter()
        .map(|f| std::fs::read_to_string(out.join(f)).unwrap())
        .collect();
    assert_eq!(code(&flowlab(&args)), 0);
    for (f, before) in ["trace.csv", "report.json", "manifest.json"].iter().zip(first) {
        assert_eq!(std::fs::read_to_string(out.join(f)).unwrap(), before, "{f}");
    }
}

#[test]
fn flags_override_config_over_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = write_mesh(dir.path(), "c.off", &CatalogSpec::circle(1.0, 32).generate().unwrap());
    let config = dir.path().join("run.cfg");
    std::fs::write(&config, "dt = 5e-3\nhorizon = 0.05  # short\nsnapshot_every = 0\n").unwrap();
    let out = dir.path().join("out");
    let o = flowlab(&[
        "flow",
        "--mesh",
        &mesh,
        "--config",
        config.to_str().unwrap(),
        "--dt",
        "1e-3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = read_json(&out.join("manifest.json"));
    assert_eq!(m["flags"]["dt"].as_f64().unwrap(), 1e-3);
    assert_eq!(m["flags"]["horizon"].as_f64().unwrap(), 0.05);
    assert_eq!(m["flags"]["quality_ratio"].as_f64().unwrap(), 0.1);
    assert_eq!(m["stop_reason"], "horizon");
}

#[test]
fn bad_config_value_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = write_mesh(dir.path(), "c.off", &CatalogSpec::circle(1.0, 32).generate().unwrap());
    let config = dir.path().join("bad.cfg");
    std::fs::write(&config, "horizon = soon\n").unwrap();
    let o = flowlab(&["flow", "--mesh", &mesh, "--config", config.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn entropy_report_has_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let sphere = CatalogSpec::sphere(1.0, 3).generate().unwrap().scaled_translated(1.0, &[3.0, 0.0, 0.0]).unwrap();
    let mesh = write_mesh(dir.path(), "s.off", &sphere);
    let out = dir.path().join("e");
    let o = flowlab(&["entropy", "--mesh", &mesh, "--starts", "3", "--seed", "7", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out.join("report.json"));
    let lambda = r["lambda"].as_f64().unwrap();
    assert!((lambda - 4.0 / std::f64::consts::E).abs() < 0.01 * lambda);
    assert!((r["best_c"].as_f64().unwrap() - 2.0).abs() < 0.05);
    assert_eq!(r["best_x0"].as_array().unwrap().len(), 3);
    assert_eq!(read_json(&out.join("manifest.json"))["seed"], 7);
}

#[test]
fn stability_of_shrinking_sphere() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = write_mesh(dir.path(), "s2.off", &CatalogSpec::sphere(2.0, 3).generate().unwrap());
    let out = dir.path().join("st");
    let o = flowlab(&["stability", "--mesh", &mesh, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out.join("report.json"));
    assert_eq!(r["verdict"], "f_stable");
    let values = r["eigenvalues"].as_array().unwrap();
    let labels = r["labels"].as_array().unwrap();
    let positive: Vec<usize> = (0..values.len()).filter(|&i| values[i].as_f64().unwrap() > 0.0).collect();
    assert_eq!(positive.len(), 4);
    for i in positive {
        assert_ne!(labels[i], "generic");
    }
}

#[test]
fn plateau_spans_a_planar_circle() {
    let dir = tempfile::tempdir().unwrap();
    let poly: String = (0..40)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / 40.0;
            format!("{} {} 0\n", a.cos(), a.sin())
        })
        .collect();
    let path = dir.path().join("ring.txt");
    std::fs::write(&path, poly).unwrap();
    let out = dir.path().join("p");
    let o = flowlab(&["plateau", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out.join("report.json"));
    assert!(r["max_H"].as_f64().unwrap() < 1e-8);
    assert_eq!(r["spectrum"]["verdict"], "stable");
    assert!(out.join("film.off").exists());

    // one descent step cannot reach a tolerance of zero
    let o = flowlab(&["plateau", path.to_str().unwrap(), "--steps", "1", "--tol", "0"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn caloric_rank_of_planar_curve_in_r4() {
    let dir = tempfile::tempdir().unwrap();
    let c = CatalogSpec::circle(1.0, 24).generate().unwrap();
    let v: Vec<f64> = c.vertices().chunks(2).flat_map(|p| [p[0], 1.0, p[1], -3.0]).collect();
    let lifted = SimplicialMesh::new(1, 4, v, c.cells().to_vec(), None).unwrap();
    let mesh = write_mesh(dir.path(), "c4.off", &lifted);
    let o = flowlab(&["caloric", "rank", &mesh]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["affine_rank"], 2);
    assert_eq!(r["relations"].as_array().unwrap().len(), 2);
}

#[test]
fn unwritable_output_is_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out = blocker.join("sub");
    let o = flowlab(&["caloric", "dim", "1", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}
