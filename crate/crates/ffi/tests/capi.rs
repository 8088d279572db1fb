use std::ffi::{c_char, CStr, CString};
use std::ptr;
use trizero_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(trz_last_error()) }
        .to_string_lossy()
        .into_owned()
}

fn take_string(p: *mut c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { trz_string_free(p) };
    s
}

#[test]
fn locus_values() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { trz_locus(1.0, 0.0, &mut p) }, TrzStatus::Ok);
    let mut v = TrzParamsValues::default();
    assert_eq!(unsafe { trz_params_get(p, &mut v) }, TrzStatus::Ok);
    assert!((v.tau0 - 2f64.sqrt()).abs() < 1e-15);
    assert!((v.kappa2 - 1.5 * 2f64.sqrt()).abs() < 1e-14);
    unsafe { trz_params_free(p) };
}

#[test]
fn domain_errors_carry_messages() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { trz_locus(-1.0, 0.0, &mut p) }, TrzStatus::Domain);
    assert!(p.is_null());
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { trz_locus(1.0, 0.0, ptr::null_mut()) }, TrzStatus::NullPointer);
}

#[test]
fn realize_reduce_roundtrip() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { trz_locus(2.0, 1.0, &mut p) }, TrzStatus::Ok);
    let text = CString::new("trizero-format 1\nA[2,0] = 1.0\nB[2,0] = 1.0\nB[3,1] = -0.25\n").unwrap();
    let mut target = ptr::null_mut();
    assert_eq!(
        unsafe { trz_normal_form_parse(text.as_ptr(), 0, &mut target) },
        TrzStatus::Ok
    );

    let mut fg = ptr::null_mut();
    assert_eq!(
        unsafe { trz_realize(p, target, &mut fg) },
        TrzStatus::Ok,
        "{}",
        last_error()
    );
    let mut fg_text = ptr::null_mut();
    assert_eq!(unsafe { trz_series_to_string(fg, &mut fg_text) }, TrzStatus::Ok);
    let fg_text = take_string(fg_text);
    assert!(fg_text.starts_with("trizero-format 1\nF = "));

    // through text and back
    let c = CString::new(fg_text).unwrap();
    let mut fg2 = ptr::null_mut();
    assert_eq!(unsafe { trz_series_parse(c.as_ptr(), &mut fg2) }, TrzStatus::Ok);
    let mut nf = ptr::null_mut();
    assert_eq!(
        unsafe { trz_reduce(p, fg2, 3, &mut nf) },
        TrzStatus::Ok,
        "{}",
        last_error()
    );

    let mut diff = f64::NAN;
    assert_eq!(
        unsafe { trz_normal_form_max_diff(nf, target, &mut diff) },
        TrzStatus::Ok
    );
    assert!(diff < 1e-8, "{diff}");
    let label = CString::new("B[3,1]").unwrap();
    let mut c31 = 0.0;
    assert_eq!(
        unsafe { trz_normal_form_coefficient(nf, label.as_ptr(), &mut c31) },
        TrzStatus::Ok
    );
    assert!((c31 + 0.25).abs() < 1e-8);

    let mut s = ptr::null_mut();
    assert_eq!(unsafe { trz_normal_form_to_string(nf, &mut s) }, TrzStatus::Ok);
    assert!(take_string(s).contains("B[3,1] = "));

    unsafe {
        trz_normal_form_free(nf);
        trz_series_free(fg2);
        trz_series_free(fg);
        trz_normal_form_free(target);
        trz_params_free(p);
    }
}

#[test]
fn parse_errors() {
    let bad = CString::new("trizero-format 1\nB[2,3] = 1\n").unwrap();
    let mut nf = ptr::null_mut();
    assert_eq!(
        unsafe { trz_normal_form_parse(bad.as_ptr(), 0, &mut nf) },
        TrzStatus::Parse
    );
    assert!(last_error().contains("B[2,3]"));
    assert!(nf.is_null());

    let invalid = [0x74u8, 0xff, 0x00];
    let mut fg = ptr::null_mut();
    assert_eq!(
        unsafe { trz_series_parse(invalid.as_ptr() as *const c_char, &mut fg) },
        TrzStatus::InvalidUtf8
    );
    assert_eq!(
        unsafe { trz_series_parse(ptr::null(), &mut fg) },
        TrzStatus::NullPointer
    );
}

#[test]
fn order_is_checked() {
    let mut p = ptr::null_mut();
    unsafe { trz_locus(1.0, 0.0, &mut p) };
    let c = CString::new("trizero-format 1\nF = z1^2\n").unwrap();
    let mut fg = ptr::null_mut();
    unsafe { trz_series_parse(c.as_ptr(), &mut fg) };
    let mut nf = ptr::null_mut();
    assert_eq!(unsafe { trz_reduce(p, fg, 9, &mut nf) }, TrzStatus::Validation);
    assert_eq!(unsafe { trz_reduce(p, fg, 2, &mut nf) }, TrzStatus::Ok);
    assert_eq!(last_error(), "");
    unsafe {
        trz_normal_form_free(nf);
        trz_series_free(fg);
        trz_params_free(p);
    }
}

#[test]
fn free_functions_accept_null() {
    unsafe {
        trz_params_free(ptr::null_mut());
        trz_series_free(ptr::null_mut());
        trz_normal_form_free(ptr::null_mut());
        trz_string_free(ptr::null_mut());
    }
}
