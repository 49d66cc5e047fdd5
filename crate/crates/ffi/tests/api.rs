use std::ffi::{CStr, CString};
use std::ptr;

use gwb_roe_ffi::*;

fn last_error() -> String {
    let p = gwb_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn tail_sum_matches_closed_form() {
    let mut out = 0.0;
    let status = unsafe { gwb_lattice_tail_sum(1, 1_000_000, [0.0].as_ptr(), 0.0, 1.0, &mut out) };
    assert_eq!(status, GwbStatus::Ok);
    let exact = std::f64::consts::PI / std::f64::consts::PI.tanh();
    assert!((out - exact).abs() < 1e-2);
    let mut c = 0.0;
    assert_eq!(unsafe { gwb_lemma_constant(1, 1.0, 0.5, 2.0, &mut c) }, GwbStatus::Ok);
    assert!(c > 0.0);
    assert_eq!(unsafe { gwb_lemma_constant(1, 0.4, 0.5, 2.0, &mut c) }, GwbStatus::Hypothesis);
}

#[test]
fn power_law_pipeline() {
    unsafe {
        let mut grid = ptr::null_mut();
        assert_eq!(gwb_grid_new(1, 12.0, 0.05, &mut grid), GwbStatus::Ok);
        assert_eq!(gwb_grid_len(grid), 480);
        let mut psi = ptr::null_mut();
        assert_eq!(gwb_family_power_law(grid, -8, 8, 2.0, &mut psi), GwbStatus::Ok);
        assert_eq!(gwb_family_len(psi), 17);

        let mut needed = 0;
        assert_eq!(gwb_family_centers(psi, ptr::null_mut(), 0, &mut needed), GwbStatus::Ok);
        let mut centers = vec![0.0; needed];
        assert_eq!(gwb_family_centers(psi, centers.as_mut_ptr(), needed, &mut needed), GwbStatus::Ok);
        assert_eq!(centers.first(), Some(&-8.0));

        let mut m = 0.0;
        assert_eq!(gwb_family_certify_s(psi, 1.2, &mut m), GwbStatus::Ok);
        assert!(m.is_finite() && m >= 1.0);
        assert_eq!(gwb_family_certify_s(psi, 2.0, &mut m), GwbStatus::NotLocalized);
        assert!(last_error().contains("not s-localized"));

        let mut v = ptr::null_mut();
        assert_eq!(gwb_intertwiner_new(psi, ptr::null(), &mut v), GwbStatus::Ok);
        let (mut a, mut b) = (1.0, 1.0);
        assert_eq!(gwb_intertwiner_mvn(v, &mut a, &mut b), GwbStatus::Ok);
        assert!(a <= 1e-8 && b <= 1e-8);
        let mut n1 = 0.0;
        let mut n4 = 0.0;
        assert_eq!(gwb_norm_of_difference(v, 1.0, &mut n1), GwbStatus::Ok);
        assert_eq!(gwb_norm_of_difference(v, 4.0, &mut n4), GwbStatus::Ok);
        assert!(n4 < n1);
        let cutoffs = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let mut fit = GwbDecayFit::default();
        assert_eq!(gwb_decay_fit(v, cutoffs.as_ptr(), cutoffs.len(), 1.2, &mut fit), GwbStatus::Ok);
        assert!(fit.pass && (fit.target + 0.7).abs() < 1e-12);

        gwb_intertwiner_free(v);
        gwb_family_free(psi);
        gwb_grid_free(grid);
    }
}

#[test]
fn kronig_penney_family() {
    unsafe {
        let mut grid = ptr::null_mut();
        assert_eq!(gwb_grid_new(1, 10.0, 1.0 / 32.0, &mut grid), GwbStatus::Ok);
        let mut fam = ptr::null_mut();
        assert_eq!(gwb_family_kronig_penney(grid, 100.0, 0.5, 5.0, 50.0, 60, 0, &mut fam), GwbStatus::Ok);
        assert_eq!(gwb_family_len(fam), 19);
        let mut m = 0.0;
        assert_eq!(gwb_family_certify_exponential(fam, 1.0, &mut m), GwbStatus::Ok);
        assert!(m > 1.0 && m < 2.0);
        gwb_family_free(fam);
        gwb_grid_free(grid);
    }
}

#[test]
fn errors_and_null_handles() {
    unsafe {
        let mut grid = ptr::null_mut();
        assert_eq!(gwb_grid_new(1, -1.0, 0.1, &mut grid), GwbStatus::InvalidArgument);
        assert!(grid.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(gwb_grid_new(1, 1.0, 0.1, ptr::null_mut()), GwbStatus::NullPointer);
        let mut m = 0.0;
        assert_eq!(gwb_family_certify_s(ptr::null_mut(), 1.0, &mut m), GwbStatus::NullPointer);
        assert_eq!(gwb_family_len(ptr::null()), 0);
        gwb_family_free(ptr::null_mut());
        let mut out = 0.0;
        assert_eq!(gwb_lattice_tail_sum(1, 10, ptr::null(), 0.0, 1.0, &mut out), GwbStatus::NullPointer);
        assert!(!gwb_last_error_message().is_null());
        assert_eq!(gwb_lattice_tail_sum(1, 10, [0.0].as_ptr(), 0.0, 1.0, &mut out), GwbStatus::Ok);
        assert!(gwb_last_error_message().is_null());
    }
}

#[test]
fn experiments_through_config() {
    let dir = tempfile::tempdir().unwrap();
    unsafe {
        let kind = CString::new("lemma-sweep").unwrap();
        let mut needed = 0;
        assert_eq!(gwb_default_config(kind.as_ptr(), ptr::null_mut(), 0, &mut needed), GwbStatus::Ok);
        let mut buf = vec![0u8; needed];
        assert_eq!(gwb_default_config(kind.as_ptr(), buf.as_mut_ptr().cast(), needed, &mut needed), GwbStatus::Ok);
        let text = CStr::from_bytes_with_nul(&buf).unwrap().to_str().unwrap();
        assert!(text.contains("kind = \"lemma-sweep\""));

        let path = dir.path().join("c.toml");
        std::fs::write(&path, text).unwrap();
        let path = CString::new(path.to_str().unwrap()).unwrap();
        let out = CString::new(dir.path().join("run").to_str().unwrap()).unwrap();
        let mut pass = false;
        assert_eq!(gwb_run_experiment(path.as_ptr(), out.as_ptr(), &mut pass), GwbStatus::Ok);
        assert!(pass);

        let bogus = CString::new("nope").unwrap();
        assert_eq!(gwb_default_config(bogus.as_ptr(), ptr::null_mut(), 0, &mut needed), GwbStatus::Config);
    }
    assert!(!gwb_version().is_null());
}
