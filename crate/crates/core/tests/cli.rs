use std::path::{Path, PathBuf};

use serde_json::Value;

use nlep::cli::{run_from, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE};

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name).display().to_string()
}

fn run(args: &[&str]) -> i32 {
    run_from(std::iter::once("nlep").chain(args.iter().copied()))
}

fn read_json(p: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))).unwrap()
}

#[test]
fn gershgorin_count_certifies_every_component() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let code = run(&["gershgorin", "--problem", &data("example2.json"), "--grid", "-3,3,-2,2,121,81", "--count", "--out", out]);
    assert_eq!(code, EXIT_OK);
    let comps = read_json(dir.path().join("components.json"));
    let rows = comps.as_array().unwrap();
    let total: i64 = rows.iter().filter_map(|r| r["n_t"].as_i64()).sum();
    assert_eq!(total, 3);
    for r in rows.iter().filter(|r| r["flagged"] == false) {
        assert_eq!(r["n_t"], r["n_reference"]);
    }
    let manifest = read_json(dir.path().join("manifest.json"));
    for f in manifest["outputs"].as_array().unwrap() {
        assert!(dir.path().join(f.as_str().unwrap()).exists(), "{f} listed but missing");
    }
    let csv = std::fs::read_to_string(dir.path().join("gershgorin.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 121 * 81);
}

#[test]
fn count_returns_multiplicity() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for method in ["arg-det", "trace"] {
        let code = run(&["count", "--problem", &data("zi2.json"), "--contour", "circle:0,0,1", "--method", method, "--out", out]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(read_json(dir.path().join("certificate.json"))["count"], 2, "{method}");
    }
}

#[test]
fn singular_point_on_contour_exits_numerical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let code = run(&["count", "--problem", &data("zi2.json"), "--contour", "circle:1,0,1", "--out", out]);
    assert_eq!(code, EXIT_NUMERICAL);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let p = data("example1.json");
    assert_eq!(run(&["gershgorin", "--problem", &p, "--grid", "1,0,0,1,10,10", "--out", out]), EXIT_USAGE);
    assert_eq!(run(&["gershgorin", "--problem", &p, "--grid", "-1,1,-1,1,10,10", "--alpha", "1.5", "--out", out]), EXIT_USAGE);
    assert_eq!(run(&["gershgorin", "--problem", "/nonexistent.json", "--grid", "-1,1,-1,1,10,10", "--out", out]), EXIT_USAGE);
    assert_eq!(run(&["count", "--problem", &p, "--contour", "triangle:1", "--out", out]), EXIT_USAGE);
    assert_eq!(run(&["pseudospectrum", "--problem", &p, "--grid", "-1,1,-1,1,10,10", "--eps", "-1", "--out", out]), EXIT_USAGE);
    assert_eq!(run(&["frobnicate"]), EXIT_USAGE);
}

#[test]
fn malformed_problem_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"n": 2, "terms": [{"scalar": {"kind": "polynomial", "coeffs": [[1, 0]]}, "matrix": [[[1, 0]]]}]}"#).unwrap();
    let out = dir.path().join("out");
    let code = run(&["count", "--problem", bad.to_str().unwrap(), "--contour", "circle:0,0,1", "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn pseudospectrum_writes_levels() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let code = run(&["pseudospectrum", "--problem", &data("example1.json"), "--grid", "-3,3,-3,3,41,41", "--eps", "0.1,0.5", "--out", out]);
    assert_eq!(code, EXIT_OK);
    let levels = read_json(dir.path().join("pseudospectrum_contours.json"));
    assert_eq!(levels.as_array().unwrap().len(), 2);
    assert!(dir.path().join("sigma_min.csv").exists());
}

#[test]
fn runs_are_byte_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let code = run(&["gershgorin", "--problem", &data("example3.json"), "--grid", "-2,2,-2,2,61,61", "--alpha", "0.5", "--out", d.path().to_str().unwrap()]);
        assert_eq!(code, EXIT_OK);
    }
    for f in ["gershgorin.csv", "gershgorin.json", "components.json", "contours.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn timedelay_demo_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(&["demo", "timedelay", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let delay = read_json(dir.path().join("delay.json"));
    assert_eq!(delay["count_near_3pi_i"]["count"], 2, "{}", delay["count_near_3pi_i"]);
    for f in ["second_bound.csv", "intersection.csv", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}
