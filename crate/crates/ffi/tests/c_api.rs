use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use crr_ffi::*;

fn counter(k: u32, d: u64) -> *mut CrrModel {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { crr_model_counter(k, d, false, 0, &mut m) }, CrrStatus::Ok);
    m
}

fn kind(v: *const CrrVerdict) -> CrrVerdictKind {
    let mut k = CrrVerdictKind::ResourceOut;
    assert_eq!(unsafe { crr_verdict_kind(v, &mut k) }, CrrStatus::Ok);
    k
}

fn last_error() -> String {
    let p = crr_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn counter_check_and_json() {
    let m = counter(3, 3);
    assert_eq!(unsafe { crr_model_num_latches(m) }, 3);
    assert_eq!(unsafe { crr_model_num_inputs(m) }, 1);
    let mut v = ptr::null_mut();
    assert_eq!(unsafe { crr_check(m, 5, ptr::null(), &mut v) }, CrrStatus::Ok);
    assert_eq!(kind(v), CrrVerdictKind::Counterexample);
    assert_eq!(unsafe { crr_verdict_trace_len(v) }, 3);
    let mut idx = 0;
    assert_eq!(unsafe { crr_verdict_loop_index(v, &mut idx) }, CrrStatus::InvalidArgument);

    let mut s = ptr::null_mut();
    assert_eq!(unsafe { crr_verdict_to_json(v, &mut s) }, CrrStatus::Ok);
    let json: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(s) }.to_str().unwrap()).unwrap();
    assert_eq!(json["verdict"], "counterexample");
    assert_eq!(json["trace"].as_array().unwrap().len(), 3);
    unsafe {
        crr_string_free(s);
        crr_verdict_free(v);
    }

    let mut b = ptr::null_mut();
    let opts = crr_options_default();
    assert_eq!(unsafe { crr_bmc(m, 2, &opts, &mut b) }, CrrStatus::Ok);
    assert_eq!(kind(b), CrrVerdictKind::HoldsBounded);
    unsafe {
        crr_verdict_free(b);
        crr_model_free(m);
    }
}

#[test]
fn loop_verdict_from_text() {
    let text = CString::new("aag 1 0 1 1 0\n2 2\n0\n").unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { crr_model_from_aiger_str(text.as_ptr(), &mut m) }, CrrStatus::Ok);
    let mut v = ptr::null_mut();
    assert_eq!(unsafe { crr_check(m, 4, ptr::null(), &mut v) }, CrrStatus::Ok);
    assert_eq!(kind(v), CrrVerdictKind::HoldsByLoop);
    let mut idx = 99;
    assert_eq!(unsafe { crr_verdict_loop_index(v, &mut idx) }, CrrStatus::Ok);
    assert_eq!(idx, 0);
    unsafe {
        crr_verdict_free(v);
        crr_model_free(m);
    }
}

#[test]
fn error_codes() {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { crr_model_counter(2, 4, false, 0, &mut m) }, CrrStatus::InvalidArgument);
    assert!(last_error().contains("threshold"));
    assert!(m.is_null());

    let bad = CString::new("aag 1 0 1 1\n").unwrap();
    assert_eq!(unsafe { crr_model_from_aiger_str(bad.as_ptr(), &mut m) }, CrrStatus::Parse);
    assert!(last_error().contains("line"));

    let missing = CString::new("/nonexistent/model.aag").unwrap();
    assert_eq!(unsafe { crr_model_from_aiger_file(missing.as_ptr(), &mut m) }, CrrStatus::Io);
    assert_eq!(unsafe { crr_model_from_aiger_file(ptr::null(), &mut m) }, CrrStatus::NullPointer);
    assert_eq!(unsafe { crr_model_from_aiger_str(bad.as_ptr(), ptr::null_mut()) }, CrrStatus::NullPointer);

    let not_utf8 = [0xffu8, 0];
    assert_eq!(
        unsafe { crr_model_from_aiger_str(not_utf8.as_ptr().cast(), &mut m) },
        CrrStatus::InvalidUtf8
    );

    let mut v = ptr::null_mut();
    assert_eq!(unsafe { crr_check(ptr::null(), 3, ptr::null(), &mut v) }, CrrStatus::NullPointer);
    assert_eq!(unsafe { crr_verdict_trace_len(ptr::null()) }, 0);
    unsafe {
        crr_model_free(ptr::null_mut());
        crr_verdict_free(ptr::null_mut());
        crr_string_free(ptr::null_mut());
    }
}

#[test]
fn tiny_budget_is_resource_out() {
    let m = counter(3, 5);
    let opts = CrrOptions {
        pqe_max_queries: 1,
        ..crr_options_default()
    };
    let mut v = ptr::null_mut();
    assert_eq!(unsafe { crr_check(m, 6, &opts, &mut v) }, CrrStatus::Ok);
    assert_eq!(kind(v), CrrVerdictKind::ResourceOut);
    unsafe {
        crr_verdict_free(v);
        crr_model_free(m);
    }
}

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let header = manifest_dir().join("include/crr.h");
    assert!(header.exists());
    for (cc, lang) in [("cc", "c"), ("c++", "c++")] {
        let Ok(out) = Command::new(cc)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(&header)
            .output()
        else {
            eprintln!("{cc} not available; skipped");
            continue;
        };
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn c_program_links_against_static_library() {
    // target/<profile>/deps/<this test> -> target/<profile>/libcrr_ffi.a
    let exe = std::env::current_exe().unwrap();
    let lib = exe.parent().unwrap().parent().unwrap().join("libcrr_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipped", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let Ok(out) = Command::new("cc")
        .arg(manifest_dir().join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest_dir().join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
    else {
        eprintln!("cc not available; skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}
