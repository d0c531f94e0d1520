use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use diproperm_ffi::*;

fn last_error() -> String {
    let p = dpp_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

/// Two separated clouds in 3 dimensions, 6 per class.
fn toy() -> (Vec<f64>, Vec<i8>) {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..12 {
        let s = if i < 6 { 1.0 } else { -1.0 };
        let t = i as f64 * 0.37;
        x.extend_from_slice(&[3.0 * s + t.sin(), t.cos(), (2.0 * t).sin()]);
        y.push(s as i8);
    }
    (x, y)
}

fn toy_dataset() -> *mut DppDataset {
    let (x, y) = toy();
    let mut ds = ptr::null_mut();
    let st = unsafe { dpp_dataset_new(x.as_ptr(), 12, 3, y.as_ptr(), &mut ds) };
    assert_eq!(st, DppStatus::Ok);
    ds
}

fn md_config() -> DppConfig {
    let mut cfg = dpp_config_default();
    cfg.classifier = DppClassifier::Md as u32;
    cfg.scheme = DppScheme::Unbalanced as u32;
    cfg.permutations = 200;
    cfg.seed = 4;
    cfg.workers = 2;
    cfg
}

#[test]
fn run_and_read_back() {
    let ds = toy_dataset();
    assert_eq!(unsafe { dpp_dataset_n_samples(ds) }, 12);
    assert_eq!(unsafe { dpp_dataset_n_features(ds) }, 3);
    let cfg = md_config();
    let mut res = ptr::null_mut();
    assert_eq!(unsafe { dpp_run(ds, &cfg, &mut res) }, DppStatus::Ok);

    let mut summary = DppSummary::default();
    assert_eq!(unsafe { dpp_result_summary(res, &mut summary) }, DppStatus::Ok);
    assert_eq!(summary.permutations, 200);
    assert!(summary.p_value <= 0.05);
    assert!(summary.has_z_score);

    let mut needed = 0usize;
    let st = unsafe { dpp_result_perm_statistics(res, ptr::null_mut(), 0, &mut needed) };
    assert_eq!(st, DppStatus::BufferTooSmall);
    assert_eq!(needed, 200);
    let mut stats = vec![0.0; needed];
    let st = unsafe { dpp_result_perm_statistics(res, stats.as_mut_ptr(), stats.len(), &mut needed) };
    assert_eq!(st, DppStatus::Ok);
    let above = stats.iter().filter(|&&s| s >= summary.statistic).count();
    assert_eq!(above as f64 / 200.0, summary.p_value);

    let mut w = [0.0; 3];
    let mut beta = f64::NAN;
    let st = unsafe { dpp_result_direction(res, w.as_mut_ptr(), 3, ptr::null_mut(), &mut beta) };
    assert_eq!(st, DppStatus::Ok);
    assert!((w.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(beta.is_finite());

    let mut idx = [0usize; 2];
    let mut val = [0.0; 2];
    assert_eq!(
        unsafe { dpp_result_loadings(res, 2, idx.as_mut_ptr(), val.as_mut_ptr()) },
        DppStatus::Ok
    );
    assert_eq!(idx[0], 1);
    assert!(val[0].abs() >= val[1].abs());
    assert_eq!(
        unsafe { dpp_result_loadings(res, 4, idx.as_mut_ptr(), val.as_mut_ptr()) },
        DppStatus::InvalidData
    );

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("r.json").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { dpp_result_write_json(res, path.as_ptr()) }, DppStatus::Ok);
    let text = std::fs::read_to_string(dir.path().join("r.json")).unwrap();
    assert!(text.contains("\"schema_version\""));

    unsafe {
        dpp_result_free(res);
        dpp_dataset_free(ds);
    }
}

#[test]
fn results_do_not_depend_on_workers() {
    let ds = toy_dataset();
    let mut out = Vec::new();
    for workers in [1, 3] {
        let mut cfg = md_config();
        cfg.workers = workers;
        let mut res = ptr::null_mut();
        assert_eq!(unsafe { dpp_run(ds, &cfg, &mut res) }, DppStatus::Ok);
        let mut stats = vec![0.0; 200];
        unsafe { dpp_result_perm_statistics(res, stats.as_mut_ptr(), 200, ptr::null_mut()) };
        out.push(stats);
        unsafe { dpp_result_free(res) };
    }
    assert_eq!(out[0], out[1]);
    unsafe { dpp_dataset_free(ds) };
}

#[test]
fn error_codes_and_messages() {
    let mut ds = ptr::null_mut();
    let st = unsafe { dpp_dataset_new(ptr::null(), 4, 1, ptr::null(), &mut ds) };
    assert_eq!(st, DppStatus::NullPointer);
    assert!(last_error().contains("features"));

    let x = [1.0, 2.0, 3.0, 4.0];
    let y = [1i8, 1, 0, -1];
    let st = unsafe { dpp_dataset_new(x.as_ptr(), 4, 1, y.as_ptr(), &mut ds) };
    assert_eq!(st, DppStatus::Parse);
    assert!(last_error().contains("recode"));

    let y = [1i8, 1, 1, 1];
    let st = unsafe { dpp_dataset_new(x.as_ptr(), 4, 1, y.as_ptr(), &mut ds) };
    assert_eq!(st, DppStatus::InvalidData);

    let missing = CString::new("/nonexistent/data.svm").unwrap();
    let st = unsafe { dpp_dataset_load_sparse(missing.as_ptr(), &mut ds) };
    assert_eq!(st, DppStatus::Io);

    let ok = toy_dataset();
    let mut cfg = md_config();
    cfg.permutations = 0;
    let mut res = ptr::null_mut();
    assert_eq!(unsafe { dpp_run(ok, &cfg, &mut res) }, DppStatus::InvalidArgument);
    assert!(last_error().contains('B'));
    cfg = md_config();
    cfg.classifier = 7;
    assert_eq!(unsafe { dpp_run(ok, &cfg, &mut res) }, DppStatus::InvalidArgument);
    assert!(res.is_null());
    assert_eq!(unsafe { dpp_run(ptr::null(), &cfg, &mut res) }, DppStatus::NullPointer);

    let mut summary = DppSummary::default();
    assert_eq!(
        unsafe { dpp_result_summary(ptr::null(), &mut summary) },
        DppStatus::NullPointer
    );
    unsafe {
        dpp_dataset_free(ok);
        dpp_dataset_free(ptr::null_mut());
        dpp_result_free(ptr::null_mut());
    }
}

#[test]
fn dense_loader() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    std::fs::write(&data, "a,b,label\n0,1,1\n1,0,-1\n2,2,1\n3,1,-1\n").unwrap();
    let path = CString::new(data.to_str().unwrap()).unwrap();
    let mut ds = ptr::null_mut();
    let st = unsafe { dpp_dataset_load_dense(path.as_ptr(), true, 2, ptr::null(), &mut ds) };
    assert_eq!(st, DppStatus::Ok, "{}", last_error());
    assert_eq!(unsafe { dpp_dataset_n_features(ds) }, 2);
    unsafe { dpp_dataset_free(ds) };
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(dpp_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(crate_dir().join("include/diproperm.h")).unwrap();
    for name in [
        "dpp_last_error_message",
        "dpp_version",
        "dpp_config_default",
        "dpp_dataset_new",
        "dpp_dataset_load_sparse",
        "dpp_dataset_load_dense",
        "dpp_dataset_free",
        "dpp_run",
        "dpp_result_summary",
        "dpp_result_perm_statistics",
        "dpp_result_direction",
        "dpp_result_loadings",
        "dpp_result_write_json",
        "dpp_result_free",
        "typedef struct DppDataset DppDataset",
        "typedef struct DppResult DppResult",
        "DPP_STATUS_BUFFER_TOO_SMALL = 9",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

/// Builds the static library, then compiles and runs a C client against it.
/// Skipped when no C compiler is on PATH.
#[test]
fn c_client_links_and_runs() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler");
        return;
    }
    // a private target dir keeps this build off the lock held by the outer cargo
    let target = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("ffi-staticlib");
    let status = Command::new(env!("CARGO"))
        .args(["build", "--quiet", "-p", "diproperm-ffi", "--lib", "--target-dir"])
        .arg(&target)
        .current_dir(crate_dir())
        .status()
        .unwrap();
    assert!(status.success());
    let lib = target.join("debug/libdiproperm_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("client");
    let status = Command::new("cc")
        .arg(crate_dir().join("tests/client.c"))
        .arg("-I")
        .arg(crate_dir().join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("p=0"), "{stdout}");
}
