use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use nccz_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 512];
    unsafe {
        nccz_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn ramp_field(n: usize) -> *mut NcczField {
    let cells = 16;
    let mut re = vec![0.0; cells * n * n];
    let mut im = vec![0.0; cells * n * n];
    for c in 0..cells {
        for i in 0..n {
            re[c * n * n + i * n + i] = (c + i) as f64;
        }
        if n > 1 {
            im[c * n * n + 1] = 0.5;
            im[c * n * n + n] = -0.5;
        }
    }
    let mut out = ptr::null_mut();
    let s = unsafe { nccz_field_new(1, 0, 4, n, re.as_ptr(), im.as_ptr(), re.len(), &mut out) };
    assert_eq!(s, NcczStatus::Ok, "{}", last_error());
    out
}

#[test]
fn values_round_trip() {
    let f = ramp_field(2);
    let (mut cells, mut n) = (0, 0);
    unsafe {
        assert_eq!(nccz_field_shape(f, &mut cells, &mut n), NcczStatus::Ok);
        assert_eq!((cells, n), (16, 2));
        let mut re = vec![0.0; 64];
        let mut im = vec![0.0; 64];
        assert_eq!(nccz_field_values(f, re.as_mut_ptr(), im.as_mut_ptr(), 64), NcczStatus::Ok);
        assert_eq!(re[4 * 5 + 3], 6.0);
        assert_eq!(im[4 * 5 + 1], 0.5);
        assert_eq!(nccz_field_values(f, re.as_mut_ptr(), im.as_mut_ptr(), 63), NcczStatus::DimensionMismatch);
        nccz_field_free(f);
    }
}

#[test]
fn status_codes() {
    unsafe {
        let mut x = 0.0;
        assert_eq!(nccz_field_norm(ptr::null(), 1.0, &mut x), NcczStatus::NullPointer);
        assert!(last_error().contains("field"));
        let mut k = ptr::null_mut();
        let bad = CString::new("nope").unwrap();
        assert_eq!(nccz_kernel_from_name(bad.as_ptr(), 1, &mut k), NcczStatus::InvalidArgument);
        let re = [1.0; 3];
        let mut f = ptr::null_mut();
        assert_eq!(nccz_field_new(1, 0, 1, 1, re.as_ptr(), ptr::null(), 3, &mut f), NcczStatus::DimensionMismatch);
        let missing = CString::new("/nonexistent/field.ndjson").unwrap();
        assert_eq!(nccz_field_load(missing.as_ptr(), &mut f), NcczStatus::Io);
        nccz_field_free(ptr::null_mut());
        nccz_kernel_free(ptr::null_mut());
    }
}

#[test]
fn operations_match_library() {
    let f = ramp_field(1);
    unsafe {
        let mut l1 = 0.0;
        assert_eq!(nccz_field_norm(f, 1.0, &mut l1), NcczStatus::Ok);
        // Σ_c c/16 over 16 cells
        assert!((l1 - 7.5).abs() < 1e-12);

        let name = CString::new("hilbert").unwrap();
        let mut k = ptr::null_mut();
        assert_eq!(nccz_kernel_from_name(name.as_ptr(), 1, &mut k), NcczStatus::Ok);
        let mut t = ptr::null_mut();
        assert_eq!(nccz_truncated_apply(k, f, 0.25, &mut t), NcczStatus::Ok);
        let mut via_ffi = vec![0.0; 16];
        assert_eq!(nccz_field_values(t, via_ffi.as_mut_ptr(), ptr::null_mut(), 16), NcczStatus::Ok);

        let g = nccz::dyadic::DyadicGrid::new(1, 0, 4).unwrap();
        let direct = nccz::dyadic::OperatorField::from_scalars(g, &(0..16).map(|c| c as f64).collect::<Vec<_>>()).unwrap();
        let expect = nccz::operators::truncated_czo(&nccz::kernels::Kernel::hilbert(), &direct, 0.25).unwrap();
        assert_eq!(via_ffi, expect.scalar_values());

        let fields = [f as *const NcczField, t as *const NcczField];
        let mut m = 0.0;
        assert_eq!(nccz_strong_max_norm(fields.as_ptr(), 2, f64::INFINITY, &mut m), NcczStatus::Ok);
        assert!(m >= 15.0);
        assert_eq!(nccz_strong_max_norm(fields.as_ptr(), 2, 3.0, &mut m), NcczStatus::InvalidArgument);

        let mut ok = 0;
        assert_eq!(nccz_cz_validate(f, 40.0, 0, &mut ok), NcczStatus::Ok);
        assert_eq!(ok, 1);
        // λ below the coarsest average
        assert_eq!(nccz_cz_validate(f, 1.0, 0, &mut ok), NcczStatus::InvalidArgument);

        let mut js = ptr::null_mut();
        assert_eq!(nccz_weak11_json(k, f, 40.0, &mut js), NcczStatus::Ok);
        let text = CStr::from_ptr(js).to_str().unwrap().to_owned();
        nccz_string_free(js);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["lambda"], 40.0);

        nccz_field_free(t);
        nccz_field_free(f);
        nccz_kernel_free(k);
    }
}

#[test]
fn save_and_load() {
    let f = ramp_field(2);
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("f.ndjson").to_str().unwrap()).unwrap();
    unsafe {
        assert_eq!(nccz_field_save(f, path.as_ptr()), NcczStatus::Ok);
        let mut g = ptr::null_mut();
        assert_eq!(nccz_field_load(path.as_ptr(), &mut g), NcczStatus::Ok);
        let (mut a, mut b) = (vec![0.0; 64], vec![0.0; 64]);
        nccz_field_values(f, a.as_mut_ptr(), ptr::null_mut(), 64);
        nccz_field_values(g, b.as_mut_ptr(), ptr::null_mut(), 64);
        assert_eq!(a, b);
        nccz_field_free(f);
        nccz_field_free(g);
    }
}

/// Compiles the C program against the generated header and the static library.
#[test]
fn c_program_links_and_runs() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let target = std::env::var_os("CARGO_TARGET_DIR").map(PathBuf::from).unwrap_or_else(|| root.join("../../target"));
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = [profile_dir.join("libnccz_ffi.a"), target.join("debug/libnccz_ffi.a")].into_iter().find(|p| p.exists());
    let lib = lib.expect("static library not built next to the test binary");
    let out = tempfile::tempdir().unwrap();
    let exe = out.path().join("smoke");
    let status = Command::new("cc")
        .arg(root.join("tests/c_smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler");
    assert!(status.success());
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("c smoke ok"));
}
