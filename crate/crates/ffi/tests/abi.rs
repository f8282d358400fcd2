//! Calls through the C ABI exactly as a C client would.

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use qthermo_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { qt_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let s = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_string();
    assert_eq!(s.len(), n.min(255));
    s
}

#[test]
fn gibbs_state_of_two_n_model_is_stationary() {
    unsafe {
        let mut model = ptr::null_mut();
        assert_eq!(qt_model_two_n(3, 1.0, 1.0, 0.7, &mut model), QtStatus::Ok);
        assert_eq!(qt_model_dim(model), 6);
        let mut rho = ptr::null_mut();
        assert_eq!(qt_state_gibbs(model, 0.7, &mut rho), QtStatus::Ok);
        let mut later = ptr::null_mut();
        assert_eq!(qt_evolve(model, rho, 1e-3, 0.5, &mut later), QtStatus::Ok);
        let (mut a, mut b) = ([0.0; 36], [0.0; 36]);
        let (mut ai, mut bi) = ([0.0; 36], [0.0; 36]);
        assert_eq!(qt_state_copy(rho, a.as_mut_ptr(), ai.as_mut_ptr(), 36), QtStatus::Ok);
        assert_eq!(qt_state_copy(later, b.as_mut_ptr(), bi.as_mut_ptr(), 36), QtStatus::Ok);
        for k in 0..36 {
            assert!((a[k] - b[k]).abs() < 1e-10 && (ai[k] - bi[k]).abs() < 1e-10);
        }
        let (mut j, mut s, mut div) = (1.0, 1.0, 7);
        assert_eq!(qt_heat_current(model, rho, ptr::null(), &mut j), QtStatus::Ok);
        assert_eq!(qt_entropy_production(model, rho, &mut s, &mut div), QtStatus::Ok);
        assert!(j.abs() < 1e-12 && s.abs() < 1e-12);
        assert_eq!(div, 0);
        qt_state_free(later);
        qt_state_free(rho);
        qt_model_free(model);
    }
}

#[test]
fn tradeoff_holds_on_excited_qubit_pair() {
    unsafe {
        let mut model = ptr::null_mut();
        assert_eq!(qt_model_two_qubit(1.0, 1.0, 1.0, &mut model), QtStatus::Ok);
        let mut re = [0.0; 16];
        let im = [0.0; 16];
        // mostly |01⟩+|10⟩ and |11⟩, with full support
        for k in [0, 5, 10, 15] {
            re[k] = 0.05;
        }
        for k in [5, 6, 9, 10] {
            re[k] += 0.2;
        }
        re[15] += 0.4;
        let mut rho = ptr::null_mut();
        assert_eq!(qt_state_new(4, re.as_ptr(), im.as_ptr(), &mut rho), QtStatus::Ok);
        let mut t = QtTradeoff::default();
        assert_eq!(qt_tradeoff(model, rho, &mut t), QtStatus::Ok);
        assert_eq!((t.holds, t.divergent), (1, 0), "{t:?}");
        assert!(t.j < 0.0 && t.sigma_dot >= 0.0, "{t:?}");
        assert!(t.ratio <= 0.5 * (t.a_cl + t.a_qm) + 1e-9);
        qt_state_free(rho);
        qt_model_free(model);
    }
}

#[test]
fn model_text_parses_and_reports_line_on_error() {
    let good = CString::new("dim 2\nH 1 1 1\nbath B\nbeta 1\nchannel\nomega 1\nrate 1\nL 0 1 1\n").unwrap();
    let bad = CString::new("dim 2\nH 1 1 x\n").unwrap();
    unsafe {
        let mut model = ptr::null_mut();
        assert_eq!(qt_model_from_text(good.as_ptr(), &mut model), QtStatus::Ok);
        assert_eq!(qt_model_dim(model), 2);
        qt_model_free(model);
        let mut other = ptr::null_mut();
        assert_eq!(qt_model_from_text(bad.as_ptr(), &mut other), QtStatus::Parse);
        assert!(other.is_null());
        assert!(last_error().contains("line 2"));
    }
}

#[test]
fn errors_map_to_codes() {
    unsafe {
        let mut model = ptr::null_mut();
        assert_eq!(qt_model_two_n(0, 1.0, 1.0, 1.0, &mut model), QtStatus::InvalidArgument);
        assert!(!last_error().is_empty());
        assert_eq!(qt_model_two_n(2, 1.0, 1.0, 1.0, ptr::null_mut()), QtStatus::NullPointer);
        assert_eq!(qt_model_dim(ptr::null()), 0);
        let mut j = 0.0;
        assert_eq!(
            qt_heat_current(ptr::null(), ptr::null(), ptr::null(), &mut j),
            QtStatus::NullPointer
        );

        // not positive semidefinite
        let re = [1.5, 0.0, 0.0, -0.5];
        let im = [0.0; 4];
        let mut rho = ptr::null_mut();
        assert_eq!(
            qt_state_new(2, re.as_ptr(), im.as_ptr(), &mut rho),
            QtStatus::InvalidState
        );

        assert_eq!(qt_model_two_n(1, 1.0, 1.0, 1.0, &mut model), QtStatus::Ok);
        assert_eq!(qt_state_gibbs(model, 1.0, &mut rho), QtStatus::Ok);
        let (mut a, mut b) = ([0.0; 2], [0.0; 2]);
        assert_eq!(
            qt_state_copy(rho, a.as_mut_ptr(), b.as_mut_ptr(), 2),
            QtStatus::BufferTooSmall
        );
        let label = CString::new("nope").unwrap();
        assert_eq!(
            qt_heat_current(model, rho, label.as_ptr(), &mut j),
            QtStatus::InvalidArgument
        );
        assert!(last_error().contains("nope"));
        qt_state_free(rho);
        qt_model_free(model);

        // a successful call clears the message
        assert_eq!(qt_model_two_n(1, 1.0, 1.0, 1.0, &mut model), QtStatus::Ok);
        assert_eq!(last_error(), "");
        qt_model_free(model);
        qt_model_free(ptr::null_mut());
        qt_state_free(ptr::null_mut());
    }
}

#[test]
fn default_cycle_runs_through_the_abi() {
    unsafe {
        let mut p = std::mem::zeroed::<QtCycleParams>();
        assert_eq!(qt_cycle_params_default(&mut p), QtStatus::Ok);
        p.dt = 0.005;
        let mut r = QtCycleResult::default();
        assert_eq!(qt_run_cycle(&p, &mut r), QtStatus::Ok);
        assert_eq!(r.converged, 1);
        assert!((r.w - (r.q_h - r.q_c)).abs() < 1e-12);
        assert!(r.eta > 0.0 && r.eta < r.eta_car);
        assert!(r.p <= r.abar_cl + r.abar_qm);
        p.dt = -1.0;
        assert_eq!(qt_run_cycle(&p, &mut r), QtStatus::InvalidArgument);
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(qt_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// The generated header compiles as C and as C++ when a compiler is present.
#[test]
fn header_compiles() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/qthermo.h");
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let status = std::process::Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang, header])
            .status();
        match status {
            Ok(s) => assert!(s.success(), "{compiler} rejected the header"),
            Err(_) => eprintln!("{compiler} not found; skipping"),
        }
    }
}
