use std::ffi::{CStr, CString};
use std::ptr;

use emrt_ffi::*;

fn last_error() -> String {
    let p = emrt_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn isotropic_medium_frequencies() {
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(emrt_medium_isotropic(2.0, 2.0, &mut m), EmrtStatus::Ok);
        let mut n = 0usize;
        assert_eq!(emrt_medium_mode_count(m, &mut n), EmrtStatus::Ok);
        assert_eq!(n, 3);
        let x = [0.0; 3];
        let k = [0.0, 3.0, 4.0];
        let mut w = f64::NAN;
        assert_eq!(emrt_medium_frequency(m, 1, x.as_ptr(), k.as_ptr(), &mut w), EmrtStatus::Ok);
        assert!((w - 2.5).abs() < 1e-12);
        assert_eq!(emrt_medium_frequency(m, 2, x.as_ptr(), k.as_ptr(), &mut w), EmrtStatus::Ok);
        assert!((w + 2.5).abs() < 1e-12);
        emrt_medium_free(m);
    }
}

#[test]
fn chiral_out_of_range_sets_message() {
    let mut m = ptr::null_mut();
    let status = unsafe { emrt_medium_chiral(1.0, 1.0, 1.5, &mut m) };
    assert_eq!(status, EmrtStatus::InvalidArgument);
    assert!(m.is_null());
    assert!(last_error().contains("chirality"));
}

#[test]
fn null_pointers_are_rejected() {
    unsafe {
        assert_eq!(emrt_medium_isotropic(1.0, 1.0, ptr::null_mut()), EmrtStatus::NullPointer);
        let mut n = 0usize;
        assert_eq!(emrt_medium_mode_count(ptr::null(), &mut n), EmrtStatus::NullPointer);
        emrt_medium_free(ptr::null_mut());
        emrt_histogram_free(ptr::null_mut());
    }
    assert!(last_error().contains("null"));
}

#[test]
fn zero_wavevector_is_invalid() {
    let mut m = ptr::null_mut();
    unsafe {
        emrt_medium_isotropic(1.0, 1.0, &mut m);
        let z = [0.0; 3];
        let mut w = 0.0;
        assert_eq!(emrt_medium_frequency(m, 1, z.as_ptr(), z.as_ptr(), &mut w), EmrtStatus::InvalidArgument);
        emrt_medium_free(m);
    }
}

#[test]
fn lorentz_total_matches_library() {
    let mut out = 0.0;
    let status = unsafe { emrt_lorentz_total(1.0, 2.0, EmrtSpectrumKind::Gaussian, 0.7, 0.3, 0.2, 0.0, 64, &mut out) };
    assert_eq!(status, EmrtStatus::Ok);
    let g = emrt::media::Spectrum::Gaussian { length: 0.7 };
    let direct = emrt::scattering::lorentz_total(1.0, 2.0, |q| 0.3 * g.radial(q), |q| 0.2 * g.radial(q), |_| 0.0, 64);
    assert_eq!(out, direct);
    let bad = unsafe { emrt_lorentz_total(1.0, 2.0, EmrtSpectrumKind::Exponential, -1.0, 1.0, 1.0, 0.0, 8, &mut out) };
    assert_eq!(bad, EmrtStatus::InvalidArgument);
}

const SCENARIO: &str = r#"
[medium]
kind = "isotropic"

[spectrum]
kind = "lorentz"
amplitude = 0.5
first = { kind = "gaussian", length = 1.0 }
second = { kind = "gaussian", length = 1.0 }

[source]
particles = 400
direction = [0, 0, 1]

[numerics]
horizon = 1.0
theta_order = 12
phi_order = 12
batches = 8

[outputs]
x_cells = [2, 2, 2]
"#;

#[test]
fn rte_run_is_worker_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    std::fs::write(&path, SCENARIO).unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let run = |workers| unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(emrt_rte_run(cpath.as_ptr(), workers, &mut h), EmrtStatus::Ok, "{}", last_error());
        let mut n = 0usize;
        assert_eq!(emrt_histogram_len(h, &mut n), EmrtStatus::Ok);
        let mut buf = vec![0.0; n];
        assert_eq!(emrt_histogram_copy_trace(h, buf.as_mut_ptr(), n), EmrtStatus::Ok);
        assert_eq!(emrt_histogram_copy_trace(h, buf.as_mut_ptr(), n + 1), EmrtStatus::InvalidArgument);
        let (mut total, mut se) = (0.0, 0.0);
        assert_eq!(emrt_histogram_total(h, &mut total, &mut se), EmrtStatus::Ok);
        emrt_histogram_free(h);
        (buf, total)
    };
    let (a, ta) = run(1);
    let (b, tb) = run(3);
    assert_eq!(a, b);
    assert_eq!(ta, tb);
    assert!((ta - 1.0).abs() < 1e-9);
}

#[test]
fn rte_run_reports_config_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[medium]\nkind = \"chiral\"\nkappa = 2.0\n").unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let mut h = ptr::null_mut();
    let status = unsafe { emrt_rte_run(cpath.as_ptr(), 0, &mut h) };
    assert_eq!(status, EmrtStatus::ConfigInvalid);
    assert!(last_error().contains("medium.kappa"));
}

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { CStr::from_ptr(emrt_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/emrt.h")).unwrap();
    for name in [
        "emrt_last_error",
        "emrt_version",
        "emrt_medium_isotropic",
        "emrt_medium_chiral",
        "emrt_medium_free",
        "emrt_medium_mode_count",
        "emrt_medium_frequency",
        "emrt_lorentz_total",
        "emrt_rte_run",
        "emrt_histogram_free",
        "emrt_histogram_total",
        "emrt_histogram_len",
        "emrt_histogram_copy_trace",
    ] {
        assert!(header.contains(&format!("{name}(")), "{name} missing");
    }
    assert!(header.contains("typedef struct EmrtMedium EmrtMedium;"));
}
