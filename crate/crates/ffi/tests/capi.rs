use std::f64::consts::PI;
use std::ffi::{CStr, CString};
use std::ptr;

use zeno_witness_ffi::*;

fn last_error() -> String {
    let p = zw_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn qubit(theta: f64) -> *mut ZwModel {
    let mut model = ptr::null_mut();
    assert_eq!(
        unsafe { zw_model_qubit(1.0, theta, 0.1, &mut model) },
        ZwStatus::Ok
    );
    model
}

fn single_site(d: usize) -> *mut ZwDecomposition {
    let mut decomp = ptr::null_mut();
    assert_eq!(
        unsafe { zw_decomposition_single_site(d, &mut decomp) },
        ZwStatus::Ok
    );
    decomp
}

#[test]
fn oracle_on_qubit_matches_closed_form() {
    let (model, decomp) = (qubit(PI / 3.0), single_site(2));
    let mut report = ptr::null_mut();
    unsafe {
        assert_eq!(zw_oracle_report(model, decomp, &mut report), ZwStatus::Ok);
        assert_eq!(zw_report_n(report), 2);
        let mut omega = 0.0;
        assert_eq!(zw_report_omega(report, &mut omega), ZwStatus::Ok);
        assert!((omega - (PI / 3.0).sin()).abs() < 1e-12);
        let mut h12 = 0.0;
        assert_eq!(
            zw_report_coupling_norm(report, 0, 1, &mut h12),
            ZwStatus::Ok
        );
        assert!((h12 - 0.5 * (PI / 3.0).sin()).abs() < 1e-12);
        let (mut c00, mut c01) = (0.0, 0.0);
        zw_report_c_matrix(report, 0, 0, &mut c00);
        zw_report_c_matrix(report, 0, 1, &mut c01);
        assert!((c00 + c01).abs() < 1e-12);

        let mut spread = 0.0;
        assert_eq!(zw_spectral_spread(model, &mut spread), ZwStatus::Ok);
        assert!((spread - 1.0).abs() < 1e-12);
        let mut residual = 1.0;
        assert_eq!(
            zw_compatibility_residual(model, decomp, &mut residual),
            ZwStatus::Ok
        );
        assert!(residual < 1e-12);

        zw_report_free(report);
        zw_decomposition_free(decomp);
        zw_model_free(model);
    }
}

#[test]
fn smalltime_pipeline_agrees_with_oracle() {
    let (model, decomp) = (qubit(PI / 2.0), single_site(2));
    unsafe {
        let mut report = ptr::null_mut();
        let status = zw_run_pipeline(model, decomp, ZwRateMode::Smalltime, 0.0, 0, 7, &mut report);
        assert_eq!(status, ZwStatus::Ok, "{}", last_error());
        let mut omega = 0.0;
        zw_report_omega(report, &mut omega);
        assert!((omega - 1.0).abs() < 1e-8);
        zw_report_free(report);

        let status = zw_run_pipeline(model, decomp, ZwRateMode::Exact, 0.0, 0, 7, &mut report);
        assert_eq!(status, ZwStatus::Ok);
        zw_report_omega(report, &mut omega);
        assert!((omega - 1.0).abs() < 0.05);
        zw_report_free(report);
        zw_decomposition_free(decomp);
        zw_model_free(model);
    }
}

#[test]
fn raw_arrays_build_the_same_model_as_json() {
    // H = σ_x/2 plus decay √0.1·|0⟩⟨1|
    let h = [0.0, 0.5, 0.5, 0.0];
    let jump = [0.0, 0.1f64.sqrt(), 0.0, 0.0];
    let json = CString::new(
        r#"{"dim": 2, "hamiltonian": [[[0,0],[0.5,0]],[[0.5,0],[0,0]]], "jumps": [[[[0,0],[0.316227766016838,0]],[[0,0],[0,0]]]]}"#,
    )
    .unwrap();
    let blocks = CString::new(r#"{"blocks": [[1], [2]]}"#).unwrap();
    unsafe {
        let (mut a, mut b, mut decomp) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        assert_eq!(
            zw_model_new(
                2,
                h.as_ptr(),
                ptr::null(),
                1,
                jump.as_ptr(),
                ptr::null(),
                &mut a
            ),
            ZwStatus::Ok
        );
        assert_eq!(
            zw_model_from_json(json.as_ptr(), &mut b),
            ZwStatus::Ok,
            "{}",
            last_error()
        );
        assert_eq!(
            zw_decomposition_from_json(blocks.as_ptr(), &mut decomp),
            ZwStatus::Ok
        );
        assert_eq!(zw_model_dim(a), 2);
        assert_eq!(zw_decomposition_blocks(decomp), 2);
        let (mut ra, mut rb) = (ptr::null_mut(), ptr::null_mut());
        zw_oracle_report(a, decomp, &mut ra);
        zw_oracle_report(b, decomp, &mut rb);
        let (mut oa, mut ob) = (0.0, 0.0);
        zw_report_omega(ra, &mut oa);
        zw_report_omega(rb, &mut ob);
        assert!((oa - 1.0).abs() < 1e-12 && (oa - ob).abs() < 1e-12);
        for p in [ra, rb] {
            zw_report_free(p);
        }
        zw_model_free(a);
        zw_model_free(b);
        zw_decomposition_free(decomp);
    }
}

#[test]
fn spec_and_labels_build_chain_problems() {
    let spec = CString::new(
        r#"{"family": "rollercoaster", "params": {"n": 5, "j": 5.0}, "decomposition": "edges"}"#,
    )
    .unwrap();
    let labels = [0usize, 1, 1, 1, 1];
    unsafe {
        let (mut model, mut decomp, mut manual) =
            (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        assert_eq!(
            zw_model_from_spec(spec.as_ptr(), &mut model, &mut decomp),
            ZwStatus::Ok,
            "{}",
            last_error()
        );
        assert_eq!(zw_model_dim(model), 5);
        assert_eq!(zw_decomposition_blocks(decomp), 2);
        assert_eq!(
            zw_decomposition_new(5, labels.as_ptr(), &mut manual),
            ZwStatus::Ok
        );
        let (mut ra, mut rb) = (ptr::null_mut(), ptr::null_mut());
        zw_oracle_report(model, decomp, &mut ra);
        zw_oracle_report(model, manual, &mut rb);
        let (mut oa, mut ob) = (0.0, 0.0);
        zw_report_omega(ra, &mut oa);
        zw_report_omega(rb, &mut ob);
        assert!(oa > 0.0 && oa == ob);
        zw_report_free(ra);
        zw_report_free(rb);
        zw_model_free(model);
        zw_decomposition_free(decomp);
        zw_decomposition_free(manual);
    }
}

#[test]
fn report_serializes_to_json() {
    let (model, decomp) = (qubit(PI / 4.0), single_site(2));
    unsafe {
        let mut report = ptr::null_mut();
        zw_oracle_report(model, decomp, &mut report);
        let mut s = ptr::null_mut();
        assert_eq!(zw_report_to_json(report, &mut s), ZwStatus::Ok);
        let text = CStr::from_ptr(s).to_str().unwrap().to_owned();
        zw_string_free(s);
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!((value["omega"].as_f64().unwrap() - (PI / 4.0).sin()).abs() < 1e-12);
        zw_report_free(report);
        zw_decomposition_free(decomp);
        zw_model_free(model);
    }
}

#[test]
fn errors_are_reported_with_codes_and_messages() {
    unsafe {
        let mut model = ptr::null_mut();
        let bad = CString::new("{not json").unwrap();
        assert_eq!(
            zw_model_from_json(bad.as_ptr(), &mut model),
            ZwStatus::InvalidModel
        );
        assert!(model.is_null());
        assert!(!last_error().is_empty());

        // non-Hermitian H
        let h = [0.0, 1.0, 0.0, 0.0];
        let status = zw_model_new(
            2,
            h.as_ptr(),
            ptr::null(),
            0,
            ptr::null(),
            ptr::null(),
            &mut model,
        );
        assert_eq!(status, ZwStatus::InvalidModel);
        assert!(last_error().contains("Hermitian"), "{}", last_error());

        assert_eq!(
            zw_model_qubit(1.0, 0.5, 0.1, ptr::null_mut()),
            ZwStatus::NullPointer
        );
        let mut omega = 0.0;
        assert_eq!(
            zw_report_omega(ptr::null(), &mut omega),
            ZwStatus::NullPointer
        );

        let labels = [0usize, 2];
        let mut decomp = ptr::null_mut();
        assert_eq!(
            zw_decomposition_new(2, labels.as_ptr(), &mut decomp),
            ZwStatus::InvalidDecomposition
        );

        let (model, decomp) = (qubit(0.3), single_site(3));
        let mut report = ptr::null_mut();
        assert_eq!(
            zw_oracle_report(model, decomp, &mut report),
            ZwStatus::DimensionMismatch,
            "{}",
            last_error()
        );
        zw_decomposition_free(decomp);

        let decomp = single_site(2);
        zw_oracle_report(model, decomp, &mut report);
        assert_eq!(
            zw_report_coupling_norm(report, 0, 2, &mut omega),
            ZwStatus::OutOfRange
        );
        zw_report_free(report);
        zw_decomposition_free(decomp);
        zw_model_free(model);

        zw_model_free(ptr::null_mut());
        zw_string_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/include/zeno_witness.h"
    ))
    .unwrap();
    for name in [
        "typedef struct ZwModel ZwModel",
        "ZW_STATUS_OK = 0",
        "zw_run_pipeline",
        "zw_report_to_json",
        "zw_last_error",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}
