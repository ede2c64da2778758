use std::ffi::{CStr, CString};
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::ptr;

use scatterlab_ffi::*;

fn last_error() -> String {
    let p = sl_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn gaussian(v0: f64, width: f64) -> *mut SlPotential {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { sl_potential_gaussian_well(v0, width, &mut p) }, SlStatus::Ok);
    p
}

#[test]
fn potential_handle_round_trip() {
    let p = gaussian(-1.5, 2.0);
    let mut v = 0.0;
    unsafe {
        assert_eq!(sl_potential_eval(p, 0.0, &mut v), SlStatus::Ok);
        assert_eq!(v, -1.5);
        assert_eq!(sl_potential_eval(p, 2.0, &mut v), SlStatus::Ok);
        assert!((v + 1.5 * (-1.0f64).exp()).abs() < 1e-15);
        sl_potential_free(p);
        sl_potential_free(ptr::null_mut());
    }
}

#[test]
fn invalid_arguments_and_nulls_are_reported() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { sl_potential_gaussian_well(1.0, -1.0, &mut p) }, SlStatus::InvalidArgument);
    assert!(p.is_null());
    assert!(last_error().contains("width"), "{}", last_error());
    assert_eq!(unsafe { sl_potential_zero(ptr::null_mut()) }, SlStatus::NullPointer);
    let mut v = 0.0;
    assert_eq!(unsafe { sl_potential_eval(ptr::null(), 1.0, &mut v) }, SlStatus::NullPointer);
    assert_eq!(unsafe { sl_hs_norm(ptr::null(), 1.0, &mut v) }, SlStatus::NullPointer);
}

#[test]
fn phase_table_matches_square_well() {
    let mut pot = ptr::null_mut();
    let mut t = ptr::null_mut();
    unsafe {
        assert_eq!(sl_potential_square_well(1.0, 1.0, &mut pot), SlStatus::Ok);
        assert_eq!(sl_phase_table_new(pot, 1.0, -1, &mut t), SlStatus::Ok);
        let mut n = 0usize;
        assert_eq!(sl_phase_table_len(t, &mut n), SlStatus::Ok);
        assert!(n >= 9);
        let mut small = vec![0.0; n - 1];
        assert_eq!(sl_phase_table_deltas(t, small.as_mut_ptr(), small.len()), SlStatus::BufferTooSmall);
        let mut d = vec![0.0; n];
        assert_eq!(sl_phase_table_deltas(t, d.as_mut_ptr(), n), SlStatus::Ok);
        // u'/u continuity at r = 1 with k' = sqrt(2): delta_0 = -1 + atan(tan(k')/k').
        let kp = 2f64.sqrt();
        let expect = -1.0 + (kp.tan() / kp).atan();
        assert!((d[0] - expect).abs() < 1e-6, "{} vs {expect}", d[0]);
        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(sl_phase_table_amplitude(t, 0.3, &mut re, &mut im), SlStatus::Ok);
        assert!(re.is_finite() && im > 0.0);
        assert_eq!(sl_phase_table_new(pot, 1.0, -2, &mut t), SlStatus::InvalidArgument);
        sl_phase_table_free(t);
        sl_potential_free(pot);
    }
}

#[test]
fn born_amplitude_of_yukawa() {
    let mut pot = ptr::null_mut();
    let (mut re, mut im) = (0.0, 0.0);
    unsafe {
        assert_eq!(sl_potential_yukawa(0.1, 1.0, &mut pot), SlStatus::Ok);
        assert_eq!(sl_born_amplitude(pot, 2.0, PI / 2.0, &mut re, &mut im), SlStatus::Ok);
        sl_potential_free(pot);
    }
    assert!((re + 0.1 / 9.0).abs() < 1e-9 && im == 0.0, "{re} {im}");
}

#[test]
fn hs_norm_and_domain_errors() {
    let p = gaussian(1.0, 1.0);
    let mut v = 0.0;
    unsafe {
        assert_eq!(sl_hs_norm(p, 1.0, &mut v), SlStatus::Ok);
        sl_potential_free(p);
    }
    assert!((v - PI.sqrt() / 8.0).abs() < 1e-3 * v);
    let mut slow = ptr::null_mut();
    unsafe {
        assert_eq!(sl_potential_power_tail(1.0, 2.0, &mut slow), SlStatus::Ok);
        assert_eq!(sl_hs_norm(slow, 1.0, &mut v), SlStatus::Divergence);
        sl_potential_free(slow);
    }
}

#[test]
fn time_domain_smatrix_free_is_one() {
    let mut z = ptr::null_mut();
    let (mut re, mut im) = (0.0, 0.0);
    unsafe {
        assert_eq!(sl_potential_zero(&mut z), SlStatus::Ok);
        assert_eq!(sl_time_domain_smatrix(z, 1.0, 5.0, &mut re, &mut im), SlStatus::Ok);
        sl_potential_free(z);
    }
    assert!((re - 1.0).abs() < 1e-6 && im.abs() < 1e-6, "{re} {im}");
}

#[test]
fn scenario_runs_through_the_abi() {
    let dir = tempfile::tempdir().unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let cfg = CString::new(r#"{"experiment":"phaseshift","id":"ps","potential":{"kind":"zero"},"k":[1.0]}"#).unwrap();
    let mut code = -1;
    assert_eq!(unsafe { sl_run_scenario(cfg.as_ptr(), out.as_ptr(), false, &mut code) }, SlStatus::Ok);
    assert_eq!(code, 0);
    assert!(dir.path().join("ps.csv").exists());
    let bad = CString::new(r#"{"experiment":"phaseshift","potentail":{}}"#).unwrap();
    assert_eq!(unsafe { sl_run_scenario(bad.as_ptr(), out.as_ptr(), false, &mut code) }, SlStatus::InvalidArgument);
    assert!(last_error().contains("potentail"));
}

#[test]
fn header_declares_every_export() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/scatterlab.h");
    let text = std::fs::read_to_string(&header).unwrap();
    let src = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(text.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(text.contains("SL_STATUS_OK = 0"));
    assert!(text.contains("typedef struct SlPotential SlPotential;"));
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/scatterlab.h");
    let Ok(status) = Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"]).arg(&header).status()
    else {
        eprintln!("no C compiler; skipped");
        return;
    };
    assert!(status.success());
}
