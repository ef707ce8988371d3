use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use pt_hybrid_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    unsafe { pt_last_error_message(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }
        .to_string_lossy()
        .into_owned()
}

fn gain(t: f64, k: f64, mu0: f64) -> *mut PtBlowUp {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { pt_blowup_new(t, k, mu0, &mut h) }, PT_OK);
    assert!(!h.is_null());
    h
}

fn signal(starts: &[f64], modes: &[usize], end: f64) -> *mut PtSignal {
    let stable = [1usize, 2];
    let mut h = ptr::null_mut();
    let rc = unsafe {
        pt_signal_new(
            starts.as_ptr(),
            modes.as_ptr(),
            starts.len(),
            end,
            stable.as_ptr(),
            stable.len(),
            ptr::null(),
            0,
            &mut h,
        )
    };
    assert_eq!(rc, PT_OK, "{}", last_error());
    h
}

#[test]
fn gain_and_dilation() {
    let h = gain(10.0, 2.0, 4.0);
    unsafe {
        let mut ups = 0.0;
        assert_eq!(pt_blowup_terminal_time(h, &mut ups), PT_OK);
        assert!((ups - 5.0).abs() < 1e-14);

        let mut mu = 0.0;
        assert_eq!(pt_blowup_gain(h, 3.0, &mut mu), PT_OK);
        assert!((mu - 25.0).abs() < 1e-12);

        // k = 2: s(t) = T²(1/(Υ−t) − 1/Υ)
        let mut s = 0.0;
        assert_eq!(pt_blowup_dilate(h, 3.0, &mut s), PT_OK);
        assert!((s - 100.0 * (0.5 - 0.2)).abs() < 1e-10);
        let mut t = 0.0;
        assert_eq!(pt_blowup_contract(h, s, &mut t), PT_OK);
        assert!((t - 3.0).abs() < 1e-12);

        assert_eq!(pt_blowup_gain(h, 6.0, &mut mu), PT_ERR_DOMAIN);
        assert!(!last_error().is_empty());
        pt_blowup_free(h);
    }
}

#[test]
fn null_and_invalid_arguments() {
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(pt_blowup_new(10.0, 0.5, 1.0, &mut h), PT_ERR_INVALID);
        assert!(last_error().contains('k'));
        assert_eq!(pt_blowup_new(10.0, 1.0, 1.0, ptr::null_mut()), PT_ERR_NULL);
        let mut x = 0.0;
        assert_eq!(pt_blowup_gain(ptr::null(), 0.0, &mut x), PT_ERR_NULL);
        assert_eq!(
            pt_signal_load(ptr::null(), &mut ptr::null_mut()),
            PT_ERR_NULL
        );
        let mut sig = ptr::null_mut();
        assert_eq!(
            pt_signal_new(
                ptr::null(),
                ptr::null(),
                0,
                1.0,
                ptr::null(),
                0,
                ptr::null(),
                0,
                &mut sig
            ),
            PT_ERR_INVALID
        );
        pt_blowup_free(ptr::null_mut());
        pt_signal_free(ptr::null_mut());
    }
}

#[test]
fn signal_classes() {
    let g = gain(10.0, 1.0, 1.0);
    unsafe {
        let quiet = signal(&[0.0, 2.0, 5.0], &[1, 2, 1], 9.0);
        let mut n = 0;
        assert_eq!(pt_signal_switch_count(quiet, &mut n), PT_OK);
        assert_eq!(n, 2);
        let mut rep = PtValidation {
            pass: false,
            min_slack: 0.0,
            witness_t1: 0.0,
            witness_t2: 0.0,
        };
        assert_eq!(pt_validate_bu_adt(g, quiet, 1.0, 1.0, &mut rep), PT_OK);
        assert!(rep.pass);

        let burst = signal(&[0.0, 2.0, 2.01, 2.02], &[1, 2, 1, 2], 9.0);
        assert_eq!(pt_validate_bu_adt(g, burst, 1.0, 1.0, &mut rep), PT_OK);
        assert!(!rep.pass);
        assert!(rep.min_slack < 0.0);
        assert!(rep.witness_t1 <= rep.witness_t2);

        // no unstable modes, so any budget passes
        assert_eq!(pt_validate_bu_aat(g, burst, 2.0, 0.5, &mut rep), PT_OK);
        assert!(rep.pass);

        let mut b = 0.0;
        assert_eq!(pt_bu_adt_bound(g, 1.0, 1.0, 0.0, 0.0, &mut b), PT_OK);
        assert_eq!(b, 1.0);
        // k = 1: T ln((Υ−t1)/(Υ−t2))/τ_d + N0
        assert_eq!(pt_bu_adt_bound(g, 2.0, 1.0, 0.0, 5.0, &mut b), PT_OK);
        assert!((b - (5.0 * 2f64.ln() + 1.0)).abs() < 1e-12);

        pt_signal_free(quiet);
        pt_signal_free(burst);
        pt_blowup_free(g);
    }
}

#[test]
fn load_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    std::fs::write(&csv, "start_time,mode\n0,1\n1.5,3\n2.0,1\n").unwrap();
    std::fs::write(
        dir.path().join("s.json"),
        r#"{"Q_s":[1],"Q_u":[3],"end_time":8.0}"#,
    )
    .unwrap();
    let g = gain(10.0, 1.0, 1.0);
    unsafe {
        let path = CString::new(csv.to_str().unwrap()).unwrap();
        let mut sig = ptr::null_mut();
        assert_eq!(
            pt_signal_load(path.as_ptr(), &mut sig),
            PT_OK,
            "{}",
            last_error()
        );
        let mut rep = std::mem::zeroed::<PtValidation>();
        assert_eq!(pt_validate_bu_aat(g, sig, 2.0, 1.0, &mut rep), PT_OK);
        assert!(rep.pass);
        // 0.5 s in the unstable mode costs more than a 0.1 budget
        assert_eq!(pt_validate_bu_aat(g, sig, 100.0, 0.1, &mut rep), PT_OK);
        assert!(!rep.pass);
        pt_signal_free(sig);

        let missing = CString::new(dir.path().join("nope.csv").to_str().unwrap()).unwrap();
        assert_eq!(pt_signal_load(missing.as_ptr(), &mut sig), PT_ERR_IO);
        assert!(last_error().contains("nope.csv"));
        pt_blowup_free(g);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(pt_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/pt_hybrid.h")
}

#[test]
fn header_declares_every_export() {
    let text = std::fs::read_to_string(header()).unwrap();
    for name in [
        "pt_version",
        "pt_last_error_message",
        "pt_clear_error",
        "pt_blowup_new",
        "pt_blowup_free",
        "pt_blowup_terminal_time",
        "pt_blowup_gain",
        "pt_blowup_dilate",
        "pt_blowup_contract",
        "pt_bu_adt_bound",
        "pt_signal_new",
        "pt_signal_load",
        "pt_signal_free",
        "pt_signal_switch_count",
        "pt_validate_bu_adt",
        "pt_validate_bu_aat",
        "PtValidation",
        "PT_ERR_PANIC",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let h = header();
    for (cc, lang) in [("cc", "c"), ("c++", "c++")] {
        let Ok(out) = Command::new(cc)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(&h)
            .output()
        else {
            eprintln!("{cc} not available; skipping");
            continue;
        };
        assert!(
            out.status.success(),
            "{cc}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}
