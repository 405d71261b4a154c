use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use serde_json::Value;
use torifold_ffi::*;

fn last_error() -> String {
    let p = tf_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn take_json(p: *mut c_char) -> Value {
    assert!(!p.is_null());
    let v = serde_json::from_str(CStr::from_ptr(p).to_str().unwrap()).unwrap();
    tf_string_free(p);
    v
}

fn mesh(name: &str) -> *mut TfMesh {
    let name = CString::new(name).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { tf_mesh_builtin(name.as_ptr(), &mut m) }, TfStatus::Ok);
    m
}

fn system(name: &str) -> *mut TfSystem {
    let name = CString::new(name).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { tf_system_builtin(name.as_ptr(), &mut s) }, TfStatus::Ok);
    s
}

#[test]
fn betti_numbers_of_bundled_meshes() {
    for (name, p) in [("torus8", 2), ("klein8", 1), ("octahedron", 0)] {
        let m = mesh(name);
        let mut betti = 99;
        unsafe {
            assert_eq!(tf_mesh_betti(m, &mut betti), TfStatus::Ok);
            assert_eq!(betti, p, "{name}");
            let mut json = ptr::null_mut();
            assert_eq!(tf_mesh_cohomology(m, &mut json), TfStatus::Ok);
            assert_eq!(take_json(json)["betti"], p);
            tf_mesh_free(m);
        }
        assert!(tf_last_error().is_null());
    }
}

#[test]
fn fibrate_reports_covering_and_negative_verdicts() {
    let m = mesh("torus8");
    let two_dx = CString::new(torifold::catalog::form("torus8_2dx").unwrap()).unwrap();
    let dy = CString::new(torifold::catalog::form("torus8_dy").unwrap()).unwrap();
    unsafe {
        let forms = [two_dx.as_ptr(), dy.as_ptr()];
        let mut json = ptr::null_mut();
        assert_eq!(tf_fibrate(m, forms.as_ptr(), 2, 1e-4, 16, &mut json), TfStatus::Ok);
        assert_eq!(take_json(json)["covering"]["degree"], 2);

        let forms = [dy.as_ptr(), dy.as_ptr()];
        let mut json = ptr::null_mut();
        assert_eq!(tf_fibrate(m, forms.as_ptr(), 2, 1e-4, 16, &mut json), TfStatus::Negative);
        assert_eq!(take_json(json)["verdict"], "independence-failed");

        let mut json = ptr::null_mut();
        assert_eq!(tf_fibrate(m, forms.as_ptr(), 2, 2.0, 16, &mut json), TfStatus::InputError);
        assert!(json.is_null());
        assert!(last_error().contains("eps"));
        tf_mesh_free(m);
    }
}

#[test]
fn malformed_input_sets_last_error() {
    let bad = CString::new("{\"dimension\": 2}").unwrap();
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(tf_mesh_from_json(bad.as_ptr(), &mut m), TfStatus::InputError);
        assert!(m.is_null());
        assert!(last_error().contains("mesh"));
        assert_eq!(tf_mesh_from_json(ptr::null(), &mut m), TfStatus::NullPointer);
        assert_eq!(tf_mesh_betti(ptr::null(), ptr::null_mut()), TfStatus::NullPointer);
        let mut s = ptr::null_mut();
        assert_eq!(tf_system_from_json(bad.as_ptr(), &mut s), TfStatus::InputError);
        tf_mesh_free(ptr::null_mut());
        tf_system_free(ptr::null_mut());
        tf_string_free(ptr::null_mut());
    }
}

#[test]
fn system_calls() {
    let s = system("oscillator");
    unsafe {
        let (mut dim, mut integrals) = (0, 0);
        assert_eq!(tf_system_shape(s, &mut dim, &mut integrals), TfStatus::Ok);
        assert_eq!((dim, integrals), (4, 2));
        let x = [0.3, -0.2, 0.7, 1.1];
        let mut b = f64::NAN;
        assert_eq!(tf_system_bracket(s, 0, 1, x.as_ptr(), 4, &mut b), TfStatus::Ok);
        assert_eq!(b, 0.0);
        assert_eq!(tf_system_bracket(s, 0, 2, x.as_ptr(), 4, &mut b), TfStatus::InputError);
        assert_eq!(tf_system_bracket(s, 0, 1, x.as_ptr(), 3, &mut b), TfStatus::InputError);

        let mut json = ptr::null_mut();
        assert_eq!(tf_system_classify(s, 200, 0, &mut json), TfStatus::Ok);
        assert_eq!(take_json(json)["verdict"], "commutative Liouville");

        let level = [0.5, 0.5];
        let guess = [1.1, 0.9, 0.0, 0.0];
        let mut json = ptr::null_mut();
        assert_eq!(tf_detect_torus(s, level.as_ptr(), 2, guess.as_ptr(), 4, &mut json), TfStatus::Ok);
        assert_eq!(take_json(json)["verdict"], "torus T^2");

        let bad_guess = [1.1, 0.0, 0.9, 0.0];
        let mut json = ptr::null_mut();
        assert_eq!(tf_detect_torus(s, level.as_ptr(), 2, bad_guess.as_ptr(), 4, &mut json), TfStatus::Negative);
        tf_string_free(json);
        tf_system_free(s);
    }
    let s = system("broken_bivector");
    unsafe {
        let mut json = ptr::null_mut();
        assert_eq!(tf_system_classify(s, 100, 0, &mut json), TfStatus::Negative);
        tf_string_free(json);
        tf_system_free(s);
    }
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(tf_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/torifold.h")
}

#[test]
fn header_declares_every_entry_point() {
    let text = std::fs::read_to_string(header()).unwrap();
    for name in [
        "tf_last_error", "tf_version", "tf_string_free", "tf_mesh_from_json", "tf_mesh_builtin", "tf_mesh_free",
        "tf_mesh_shape", "tf_mesh_betti", "tf_mesh_cohomology", "tf_fibrate", "tf_system_from_json",
        "tf_system_builtin", "tf_system_free", "tf_system_shape", "tf_system_bracket", "tf_system_classify",
        "tf_detect_torus",
    ] {
        assert!(text.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(text.contains("typedef struct TfMesh TfMesh;"));
    assert!(text.contains("TF_STATUS_NEGATIVE = 1"));
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "torifold.h"

int main(void) {
    TfMesh *mesh = NULL;
    size_t betti = 0;
    if (tf_mesh_builtin("torus8", &mesh) != TF_STATUS_OK) return 10;
    if (tf_mesh_betti(mesh, &betti) != TF_STATUS_OK) return 11;
    tf_mesh_free(mesh);
    if (tf_mesh_from_json("[]", &mesh) != TF_STATUS_INPUT_ERROR || tf_last_error() == NULL) return 12;
    TfSystem *sys = NULL;
    if (tf_system_builtin("so3", &sys) != TF_STATUS_OK) return 13;
    char *json = NULL;
    if (tf_system_classify(sys, 100, 0, &json) != TF_STATUS_OK) return 14;
    tf_string_free(json);
    tf_system_free(sys);
    printf("betti %zu\n", betti);
    return 0;
}
"#;

/// Compiles a C program against the header and static library when a C compiler is present.
#[test]
fn c_program_links_against_static_library() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let target = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = target.join("libtorifold_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let status = Command::new(cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "betti 2\n");
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}
