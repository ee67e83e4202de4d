//! End-to-end tests of the `hdg2d` binary.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hdg2d"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

#[test]
fn solve_writes_summary_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"scenario": {"name": "coaxial"}, "order": 2,
            "outputs": {"summary": true, "vtk": true,
                        "lines": [{"name": "radial", "from": [0.001, 0.0],
                                   "to": [0.02, 0.0], "samples": 50}]}}"#,
    );
    let out_dir = dir.path().join("out");
    let out = run(&[
        "solve",
        cfg.to_str().unwrap(),
        "--output-dir",
        out_dir.to_str().unwrap(),
        "--quiet",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty(), "quiet run prints nothing");
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap())
            .unwrap();
    let conductors = summary["conductors"].as_array().unwrap();
    assert_eq!(conductors.len(), 1);
    // prescribed Q = 0 recovered
    assert!(conductors[0]["charge_computed"].as_f64().unwrap().abs() < 1e-12);
    assert!(out_dir.join("field.vtk").exists());
    let csv = std::fs::read_to_string(out_dir.join("radial.csv")).unwrap();
    assert!(csv.starts_with("s,x,y,phi,Ex,Ey,inside\n"));
    assert_eq!(csv.lines().count(), 51);
    // samples inside the floating tube are flagged
    assert!(csv.lines().any(|l| l.ends_with(",0")));
}

#[test]
fn rerun_is_byte_identical_except_timings() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"scenario": {"name": "slab"}, "order": 2}"#,
    );
    let read_summary = |out_dir: &Path| -> (String, String) {
        let text = std::fs::read_to_string(out_dir.join("summary.json")).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let timings = v.as_object_mut().unwrap().remove("timings").unwrap();
        (serde_json::to_string(&v).unwrap(), timings.to_string())
    };
    let (d1, d2) = (dir.path().join("o1"), dir.path().join("o2"));
    for d in [&d1, &d2] {
        let out = run(&[
            "solve",
            cfg.to_str().unwrap(),
            "--output-dir",
            d.to_str().unwrap(),
            "--quiet",
        ]);
        assert!(out.status.success());
    }
    let (s1, _) = read_summary(&d1);
    let (s2, _) = read_summary(&d2);
    assert_eq!(s1, s2, "summary identical apart from timings");
}

#[test]
fn unknown_config_key_exits_2_with_key_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"scenario": {"name": "slab"}, "solvr": {}}"#,
    );
    let out = run(&["solve", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("solvr"), "{err}");
}

#[test]
fn missing_config_exits_2() {
    let out = run(&["solve", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn convergence_requires_three_levels() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"scenario": {"name": "manufactured_square"}, "mesh": {"levels": 2}}"#,
    );
    let out = run(&["convergence", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("levels"));
}

#[test]
fn convergence_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"scenario": {"name": "manufactured_square"},
            "mesh": {"resolution": 2, "levels": 3}, "order": 2}"#,
    );
    let out_dir = dir.path().join("out");
    let out = run(&[
        "convergence",
        cfg.to_str().unwrap(),
        "--output-dir",
        out_dir.to_str().unwrap(),
        "--quiet",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("convergence.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "h,dof,err_phi_L2,err_E_L2,fpc_abs_err,observed_rate");
    assert_eq!(lines.len(), 4, "3 levels");
    // rates present on rows 2.. and close to p + 1 = 3
    for l in &lines[2..] {
        let rate: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert!(rate > 2.5, "{l}");
    }
}

#[test]
fn info_on_config_and_mesh_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"scenario": {"name": "manufactured_square"},
            "mesh": {"resolution": 2}, "order": 3}"#,
    );
    let out = run(&["info", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["elements"], 8);
    assert_eq!(v["order"], 3);
    // N_dof = N_f * N_fp + M
    let n_dof = v["trace_dofs"].as_u64().unwrap();
    assert_eq!(
        n_dof,
        v["interior_faces"].as_u64().unwrap() * v["nodes_per_face"].as_u64().unwrap()
    );
    assert!(v["ratio"].as_f64().unwrap() < 1.0);

    // raw mesh file path with --order
    let mesh = hdg2d::mesh::generate_unit_square(2).unwrap();
    let mesh_path = dir.path().join("square.mesh");
    hdg2d::mesh::save_mesh(&mesh, &mesh_path).unwrap();
    let out = run(&["info", mesh_path.to_str().unwrap(), "--order", "3"]);
    assert!(out.status.success());
    let v2: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v2["trace_dofs"], v["trace_dofs"]);
}

#[test]
fn dump_matrix_flag_writes_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"scenario": {"name": "manufactured_square"}, "mesh": {"resolution": 2}}"#,
    );
    let out_dir = dir.path().join("out");
    let out = run(&[
        "solve",
        cfg.to_str().unwrap(),
        "--output-dir",
        out_dir.to_str().unwrap(),
        "--quiet",
        "--dump-matrix",
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(out_dir.join("matrix.txt")).unwrap();
    let header: Vec<usize> = text
        .lines()
        .next()
        .unwrap()
        .split_whitespace()
        .map(|t| t.parse().unwrap())
        .collect();
    assert_eq!(header.len(), 2);
    assert_eq!(text.lines().count() - 1, header[1]);
}

#[test]
fn repo_example_configs_are_valid() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let out = run(&["info", path.to_str().unwrap()]);
            assert!(
                out.status.success(),
                "{}: {}",
                path.display(),
                String::from_utf8_lossy(&out.stderr)
            );
            seen += 1;
        }
    }
    assert!(seen >= 5, "found {seen} example configs");
}
