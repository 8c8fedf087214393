use std::path::{Path, PathBuf};
use std::process::Command;

fn lamfem() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lamfem"));
    c.env_remove("LAMFEM_OUT").env_remove("LAMFEM_THREADS");
    c
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

#[test]
fn simulate_writes_artifacts_and_honours_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = lamfem()
        .args(["simulate", "--method", "GPLA", "--mesh", "8x4", "--out"])
        .arg(dir.path())
        .arg(config("eigenstrain.json"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["method"], "GPLA");
    assert_eq!(summary["nx"], 8);
    assert_eq!(summary["ny"], 4);
    assert!(dir.path().join("load_curve.csv").is_file());
    assert!(dir.path().join("solution.vtk").is_file());
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let status = lamfem()
        .env("LAMFEM_OUT", dir.path())
        .env("LAMFEM_THREADS", "1")
        .args(["classify", "--mesh", "16"])
        .arg(config("composite_elastoplastic.json"))
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(dir.path().join("classification.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "element,x,y,class,eta,n1,n2");
    assert_eq!(csv.lines().count(), 1 + 256);
}

#[test]
fn invalid_method_exits_with_config_error() {
    let out = lamfem().args(["simulate", "--method", "XFEM"]).arg(config("eigenstrain.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("method"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"method": "LET", "mesh": {"nx": 4, "ny": 4}, "colour": "red"}"#).unwrap();
    let out = lamfem().arg("simulate").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn divergence_exits_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("crush.json");
    std::fs::write(
        &cfg,
        r#"{
            "method": "LET",
            "mesh": {"nx": 4, "ny": 4},
            "level_set": {"type": "circle", "center": [0.5, 0.5], "radius": 0.3},
            "materials": {
                "phase1": {"model": "neo_hookean", "mu": 1.0, "lambda": 1.0},
                "phase2": {"model": "neo_hookean", "mu": 5.0, "lambda": 5.0}
            },
            "boundary": {"type": "affine", "gradient": [[-1.5, 0.0], [0.0, -1.5]]},
            "solver": {"max_iter": 5, "max_halvings": 1},
            "output": "unused"
        }"#,
    )
    .unwrap();
    let out = lamfem().arg("simulate").arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("o/summary.json").is_file());
}

#[test]
fn laminate_path_and_study() {
    let dir = tempfile::tempdir().unwrap();
    let status =
        lamfem().arg("laminate-path").arg(config("laminate_path.json")).arg("--out").arg(dir.path()).status().unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(dir.path().join("laminate_path.csv")).unwrap();
    assert!(csv.starts_with("t,F11,"));
    assert_eq!(csv.lines().count(), 1 + 41);

    let status = lamfem()
        .args(["study", "--resolutions", "4,8", "--methods", "ELA,LET", "--out"])
        .arg(dir.path())
        .arg(config("planar_laminate.json"))
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(dir.path().join("convergence.json").is_file());
}

#[test]
fn bad_mesh_flag_is_rejected() {
    let out = lamfem().args(["simulate", "--mesh", "0x3"]).arg(config("eigenstrain.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
