//! Exercises the C ABI from Rust exactly as a C caller would.

use std::ffi::{CStr, CString};
use std::ptr;

use eigenadc_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 512];
    unsafe {
        ea_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn small_config() -> *mut EaConfig {
    let text = CString::new("N = 64\nL_cp = 16\ntaps = 16\nsample_period_ns = 3.2\n").unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { ea_config_parse(text.as_ptr(), &mut cfg) }, EaStatus::Ok);
    assert!(!cfg.is_null());
    cfg
}

#[test]
fn full_pipeline_saturates_the_budget() {
    let cfg = small_config();
    unsafe {
        let mut ch = ptr::null_mut();
        assert_eq!(ea_channel_generate(cfg, 2, &mut ch), EaStatus::Ok);
        let mut modes = ptr::null_mut();
        assert_eq!(ea_modes_decompose(cfg, ch, &mut modes), EaStatus::Ok);
        let count = ea_modes_count(modes);
        assert_eq!(count, 128);
        let mut sv = vec![0.0; count];
        assert_eq!(ea_modes_singular_values(modes, sv.as_mut_ptr(), count), EaStatus::Ok);
        assert!(sv.iter().all(|d| *d > 0.0));
        for alloc in [EaAllocator::Eepa, EaAllocator::Aoepa, EaAllocator::Oepa] {
            let mut powers = vec![0.0; count];
            let mut converged = false;
            let status = ea_allocate(
                cfg,
                alloc,
                sv.as_ptr(),
                count,
                20.0,
                3,
                powers.as_mut_ptr(),
                &mut converged,
            );
            assert_eq!(status, EaStatus::Ok, "{}", last_error());
            assert!(converged);
            let total: f64 = powers.iter().sum();
            assert!((total - 128.0).abs() < 1e-9, "{alloc:?}: {total}");
            let (mut s, mut ber) = (0.0, 0.0);
            let status = ea_analytic_ber(powers.as_ptr(), sv.as_ptr(), count, 0.01, 16, 3, 0.1, &mut s, &mut ber);
            assert_eq!(status, EaStatus::Ok);
            assert!((ber - s).abs() < 1e-15 && (0.0..=0.5).contains(&ber));
        }
        ea_modes_free(modes);
        ea_channel_free(ch);
        ea_config_free(cfg);
    }
}

#[test]
fn channel_taps_report_required_size() {
    let cfg = small_config();
    unsafe {
        let mut ch = ptr::null_mut();
        assert_eq!(ea_channel_generate(cfg, 0, &mut ch), EaStatus::Ok);
        let mut taps = 0usize;
        let mut small = [0.0; 4];
        assert_eq!(
            ea_channel_taps(ch, 0, 1, small.as_mut_ptr(), small.len(), &mut taps),
            EaStatus::BufferTooSmall
        );
        assert_eq!(taps, 16);
        let mut buf = vec![0.0; 2 * taps];
        assert_eq!(
            ea_channel_taps(ch, 0, 1, buf.as_mut_ptr(), buf.len(), &mut taps),
            EaStatus::Ok
        );
        assert!(buf.iter().any(|x| *x != 0.0));
        assert_eq!(
            ea_channel_taps(ch, 2, 0, buf.as_mut_ptr(), buf.len(), &mut taps),
            EaStatus::InvalidArgument
        );
        ea_channel_free(ch);
        ea_config_free(cfg);
    }
}

#[test]
fn configuration_errors_are_reported() {
    unsafe {
        let cfg = ea_config_default();
        let key = CString::new("N").unwrap();
        let bad = CString::new("500").unwrap();
        assert_eq!(ea_config_set(cfg, key.as_ptr(), bad.as_ptr()), EaStatus::ConfigError);
        assert!(last_error().contains('N'));
        let unknown = CString::new("bogus").unwrap();
        assert_eq!(
            ea_config_set(cfg, unknown.as_ptr(), bad.as_ptr()),
            EaStatus::ConfigError
        );

        let mut fp = [0 as std::ffi::c_char; 17];
        assert_eq!(ea_config_fingerprint(cfg, fp.as_mut_ptr(), 8), EaStatus::BufferTooSmall);
        assert_eq!(ea_config_fingerprint(cfg, fp.as_mut_ptr(), fp.len()), EaStatus::Ok);
        let fp = CStr::from_ptr(fp.as_ptr()).to_str().unwrap();
        assert_eq!(fp, eigenadc::SimConfig::default().fingerprint());
        ea_config_free(cfg);

        let text = CString::new("N = 64\nfoo = 1\n").unwrap();
        let mut out = ptr::null_mut();
        assert_eq!(ea_config_parse(text.as_ptr(), &mut out), EaStatus::ConfigError);
        assert!(out.is_null());
    }
}

#[test]
fn null_pointers_are_rejected() {
    unsafe {
        assert_eq!(ea_quantize(0.3, 3, ptr::null_mut()), EaStatus::NullPointer);
        assert_eq!(ea_lambert_w0(1.0, ptr::null_mut()), EaStatus::NullPointer);
        assert_eq!(
            ea_config_parse(ptr::null(), &mut ptr::null_mut()),
            EaStatus::NullPointer
        );
        let mut ch = ptr::null_mut();
        assert_eq!(ea_channel_generate(ptr::null(), 0, &mut ch), EaStatus::NullPointer);
        assert_eq!(ea_modes_count(ptr::null()), 0);
        let mut p = [0.0; 2];
        let cfg = ea_config_default();
        assert_eq!(
            ea_allocate(
                cfg,
                EaAllocator::Eepa,
                ptr::null(),
                2,
                10.0,
                0,
                p.as_mut_ptr(),
                ptr::null_mut()
            ),
            EaStatus::NullPointer
        );
        ea_config_free(cfg);
        // freeing null is a no-op
        ea_config_free(ptr::null_mut());
        ea_channel_free(ptr::null_mut());
        ea_modes_free(ptr::null_mut());
    }
}

#[test]
fn scalar_functions_match_the_library() {
    unsafe {
        let mut q = 0.0;
        for &(x, b) in &[(0.3, 3), (1.5, 3), (-0.2, 1), (0.0, 8)] {
            assert_eq!(ea_quantize(x, b, &mut q), EaStatus::Ok);
            assert_eq!(q, eigenadc::quantizer::quantize(x, b));
        }
        assert_eq!(ea_quantize(0.3, 0, &mut q), EaStatus::InvalidArgument);
        assert_eq!(ea_quantize(0.3, 17, &mut q), EaStatus::InvalidArgument);

        let mut w = 0.0;
        assert_eq!(ea_lambert_w0(std::f64::consts::E, &mut w), EaStatus::Ok);
        assert!((w - 1.0).abs() < 1e-14);
        assert_eq!(ea_lambert_w0(-1.0, &mut w), EaStatus::InvalidArgument);
        assert!(!last_error().is_empty());

        assert!((ea_q_function(0.0) - 0.5).abs() < 1e-16);
    }
}

#[test]
fn error_message_truncates_and_reports_full_length() {
    unsafe {
        let mut w = 0.0;
        assert_eq!(ea_lambert_w0(f64::NAN, &mut w), EaStatus::InvalidArgument);
        let full = ea_last_error_message(ptr::null_mut(), 0);
        assert!(full > 4);
        let mut buf = [1 as std::ffi::c_char; 4];
        assert_eq!(ea_last_error_message(buf.as_mut_ptr(), buf.len()), full);
        assert_eq!(buf[3], 0);
    }
}

#[test]
fn generated_header_declares_every_entry_point() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/eigenadc.h")).unwrap();
    for name in [
        "ea_last_error_message",
        "ea_config_default",
        "ea_config_parse",
        "ea_config_set",
        "ea_config_fingerprint",
        "ea_config_free",
        "ea_channel_generate",
        "ea_channel_taps",
        "ea_channel_free",
        "ea_modes_decompose",
        "ea_modes_count",
        "ea_modes_singular_values",
        "ea_modes_free",
        "ea_allocate",
        "ea_quantize",
        "ea_lambert_w0",
        "ea_q_function",
        "ea_analytic_ber",
        "EA_STATUS_BUFFER_TOO_SMALL",
        "typedef struct EaConfig EaConfig",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

#[test]
fn generated_header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/eigenadc.h");
    let Ok(status) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header])
        .status()
    else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    assert!(status.success());
}
