use std::ffi::{c_char, CString};
use std::ptr;

use nlep_ffi::*;

const ZI2: &str = r#"{"n": 2, "terms": [{"scalar": {"kind": "polynomial", "coeffs": [[0, 0], [1, 0]]}, "matrix": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]}]}"#;

fn load(text: &str) -> (NlepStatus, *mut NlepMatFun) {
    let c = CString::new(text).unwrap();
    let mut h = ptr::null_mut();
    let s = unsafe { nlep_matfun_from_json(c.as_ptr(), &mut h) };
    (s, h)
}

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { nlep_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn load_eval_count_free() {
    let (s, h) = load(ZI2);
    assert_eq!(s, NlepStatus::Ok);
    unsafe {
        assert_eq!(nlep_matfun_dim(h), 2);
        let mut m = [0.0; 8];
        assert_eq!(nlep_matfun_eval(h, 0.5, -1.0, m.as_mut_ptr(), m.len()), NlepStatus::Ok);
        assert_eq!(m, [0.5, -1.0, 0.0, 0.0, 0.0, 0.0, 0.5, -1.0]);
        let mut sigma = 0.0;
        assert_eq!(nlep_sigma_min(h, 3.0, 4.0, &mut sigma), NlepStatus::Ok);
        assert!((sigma - 5.0).abs() < 1e-12);
        let mut count = -1;
        assert_eq!(nlep_count_circle(h, 0.0, 0.0, 1.0, 64, &mut count), NlepStatus::Ok);
        assert_eq!(count, 2);
        assert_eq!(nlep_count_circle(h, 3.0, 0.0, 1.0, 64, &mut count), NlepStatus::Ok);
        assert_eq!(count, 0);
        nlep_matfun_free(h);
    }
}

#[test]
fn errors_are_reported() {
    let (s, h) = load("{\"n\": 2,");
    assert_eq!(s, NlepStatus::Parse);
    assert!(h.is_null());
    assert!(last_error().contains("parse error"), "{}", last_error());

    let (_, h) = load(ZI2);
    unsafe {
        let mut small = [0.0; 4];
        assert_eq!(nlep_matfun_eval(h, 0.0, 0.0, small.as_mut_ptr(), small.len()), NlepStatus::BufferTooSmall);
        let mut count = 0;
        assert_eq!(nlep_count_circle(h, 1.0, 0.0, 1.0, 128, &mut count), NlepStatus::SingularOnContour);
        assert_eq!(nlep_count_circle(h, 0.0, 0.0, -1.0, 16, &mut count), NlepStatus::InvalidArgument);
        assert_eq!(nlep_sigma_min(ptr::null(), 0.0, 0.0, &mut 0.0), NlepStatus::NullPointer);
        assert_eq!(nlep_matfun_dim(ptr::null()), 0);
        nlep_matfun_free(h);
        nlep_matfun_free(ptr::null_mut());
    }
}

#[test]
fn lambert_branches() {
    let (mut re, mut im) = (0.0, 0.0);
    unsafe {
        assert_eq!(nlep_lambert_w(0, std::f64::consts::E, 0.0, &mut re, &mut im), NlepStatus::Ok);
        assert!((re - 1.0).abs() < 1e-14 && im.abs() < 1e-14);
        assert_eq!(nlep_lambert_w(-1, -0.1, 0.0, &mut re, &mut im), NlepStatus::Ok);
        let w = num_complex::Complex64::new(re, im);
        assert!((w * w.exp() - num_complex::Complex64::new(-0.1, 0.0)).norm() < 1e-14);
        assert_eq!(nlep_lambert_w(0, 1.0, 0.0, ptr::null_mut(), &mut im), NlepStatus::NullPointer);
    }
}

#[test]
fn error_message_truncates() {
    let _ = load("not json");
    let full = unsafe { nlep_last_error_message(ptr::null_mut(), 0) };
    let mut buf = [1 as c_char; 5];
    let n = unsafe { nlep_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert_eq!(n, full);
    assert!(n > 4);
    assert_eq!(buf[4], 0);
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/nlep.h")).unwrap();
    for f in [
        "nlep_last_error_message",
        "nlep_matfun_from_json",
        "nlep_matfun_free",
        "nlep_matfun_dim",
        "nlep_matfun_eval",
        "nlep_sigma_min",
        "nlep_count_circle",
        "nlep_lambert_w",
        "NLEP_STATUS_SINGULAR_ON_CONTOUR",
    ] {
        assert!(header.contains(f), "{f} missing from header");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"nlep.h\"\nint main(void) { NlepMatFun *h = 0; size_t n = nlep_matfun_dim(h); return (int)n + (int)NLEP_STATUS_OK; }\n",
    )
    .unwrap();
    let status = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", concat!(env!("CARGO_MANIFEST_DIR"), "/include")])
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if std::process::Command::new(cc).arg("--version").output().is_ok_and(|o| o.status.success()) {
            return Ok(cc);
        }
    }
    Err(())
}
