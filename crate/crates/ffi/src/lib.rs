//! C ABI over torifold.
//!
//! Handles are opaque and owned by the caller until passed to the matching `*_free`.
//! Every call returns a [`TfStatus`]; on failure [`tf_last_error`] describes the cause.
//! Strings returned through `char **` out-parameters are JSON and must be released
//! with [`tf_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use torifold::catalog;
use torifold::cli::CliError;
use torifold::cohomology::{betti_from_coboundary_ranks, homology};
use torifold::geomech::SystemDefinition;
use torifold::io::{load_mesh, CochainDocument};
use torifold::mesh::SimplicialComplex;
use torifold::report::to_value;
use torifold::tischler::{fibrate, CertifyOptions, FibrateOptions};
use torifold::torus::{fiber_verdict, FiberOptions};

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfStatus {
    Ok = 0,
    /// The analysis ran and its verdict is negative; the result is still written.
    Negative = 1,
    InputError = 2,
    NumericalError = 3,
    NullPointer = 4,
    Panic = 5,
}

/// A validated simplicial mesh.
pub struct TfMesh {
    complex: SimplicialComplex,
}

/// A parsed Poisson system with its first integrals.
pub struct TfSystem {
    system: SystemDefinition,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure {
    status: TfStatus,
    message: String,
}

impl Failure {
    fn null(what: &str) -> Self {
        Failure { status: TfStatus::NullPointer, message: format!("{what} is null") }
    }

    fn input(message: impl Into<String>) -> Self {
        Failure { status: TfStatus::InputError, message: message.into() }
    }
}

impl<E: Into<CliError>> From<E> for Failure {
    fn from(e: E) -> Self {
        let e: CliError = e.into();
        let status = match e {
            CliError::Input(_) => TfStatus::InputError,
            CliError::Numerical(_) => TfStatus::NumericalError,
        };
        Failure { status, message: e.to_string() }
    }
}

fn guard(f: impl FnOnce() -> Result<TfStatus, Failure>) -> TfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => {
            clear_last_error();
            status
        }
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(_) => {
            set_last_error("internal panic");
            TfStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::input(format!("{what} is not UTF-8")))
}

unsafe fn read_slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_json(out: *mut *mut c_char, value: &serde_json::Value) -> Result<(), Failure> {
    let text = serde_json::to_string(value).map_err(|e| Failure::input(e.to_string()))?;
    *out = CString::new(text).map_err(|e| Failure::input(e.to_string()))?.into_raw();
    Ok(())
}

fn verdict_status(positive: bool) -> TfStatus {
    if positive {
        TfStatus::Ok
    } else {
        TfStatus::Negative
    }
}

/// Message for the last failed call on this thread, or null after a successful call.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn tf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn tf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a mesh document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tf_mesh_from_json(json: *const c_char, out: *mut *mut TfMesh) -> TfStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let complex = load_mesh(read_str(json, "json")?)?;
        *out = Box::into_raw(Box::new(TfMesh { complex }));
        Ok(TfStatus::Ok)
    })
}

/// Loads a bundled mesh such as `torus8`, `klein8` or `octahedron`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tf_mesh_builtin(name: *const c_char, out: *mut *mut TfMesh) -> TfStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let name = read_str(name, "name")?;
        let text = catalog::mesh(name).ok_or_else(|| Failure::input(format!("no bundled mesh named '{name}'")))?;
        *out = Box::into_raw(Box::new(TfMesh { complex: load_mesh(text)? }));
        Ok(TfStatus::Ok)
    })
}

/// # Safety
/// `mesh` must come from this library or be null, and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tf_mesh_free(mesh: *mut TfMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Vertex count and dimension of a mesh.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tf_mesh_shape(mesh: *const TfMesh, vertices: *mut usize, dimension: *mut usize) -> TfStatus {
    guard(|| {
        let m = mesh.as_ref().ok_or_else(|| Failure::null("mesh"))?;
        if vertices.is_null() || dimension.is_null() {
            return Err(Failure::null("out"));
        }
        *vertices = m.complex.vertex_count();
        *dimension = m.complex.dim();
        Ok(TfStatus::Ok)
    })
}

/// First Betti number over the rationals.
///
/// # Safety
/// `mesh` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tf_mesh_betti(mesh: *const TfMesh, out: *mut usize) -> TfStatus {
    guard(|| {
        let m = mesh.as_ref().ok_or_else(|| Failure::null("mesh"))?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let (_, basis) = homology(&m.complex)?;
        *out = basis.betti;
        Ok(TfStatus::Ok)
    })
}

/// Betti number, selected cycles, integral basis and its period matrix as JSON.
///
/// # Safety
/// `mesh` and `out_json` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tf_mesh_cohomology(mesh: *const TfMesh, out_json: *mut *mut c_char) -> TfStatus {
    guard(|| {
        let m = mesh.as_ref().ok_or_else(|| Failure::null("mesh"))?;
        if out_json.is_null() {
            return Err(Failure::null("out_json"));
        }
        let (cycles, basis) = homology(&m.complex)?;
        let value = serde_json::json!({
            "betti": basis.betti,
            "betti_from_coboundary_ranks": betti_from_coboundary_ranks(&m.complex),
            "orientable": m.complex.is_orientable(),
            "cycles": cycles.selected.iter().map(|z| &z.edges).collect::<Vec<_>>(),
            "basis": basis.integral.iter().map(|c| c.values()).collect::<Vec<_>>(),
            "basis_periods": basis.period_matrix,
        });
        write_json(out_json, &value)?;
        Ok(TfStatus::Ok)
    })
}

/// Builds and certifies the torus-valued map for `count` cochain documents.
/// Writes the full outcome as JSON; returns `Negative` when the verdict is not a
/// fibration or covering.
///
/// # Safety
/// `forms` must point to `count` NUL-terminated strings; `mesh` and `out_json` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tf_fibrate(
    mesh: *const TfMesh,
    forms: *const *const c_char,
    count: usize,
    eps: f64,
    bins: usize,
    out_json: *mut *mut c_char,
) -> TfStatus {
    guard(|| {
        let m = mesh.as_ref().ok_or_else(|| Failure::null("mesh"))?;
        if out_json.is_null() {
            return Err(Failure::null("out_json"));
        }
        if count > 0 && forms.is_null() {
            return Err(Failure::null("forms"));
        }
        if !(eps > 0.0 && eps < 1.0) || bins == 0 {
            return Err(Failure::input("eps must lie in (0, 1) and bins must be positive"));
        }
        let mut cochains = Vec::with_capacity(count);
        for i in 0..count {
            let text = read_str(*forms.add(i), "form")?;
            let c = CochainDocument::from_json(text)?.to_f64()?;
            m.complex.check_cochain(&c).map_err(|e| Failure::input(format!("form {i}: {e}")))?;
            cochains.push(c);
        }
        let options = FibrateOptions { eps0: eps, certify: CertifyOptions { bins, ..CertifyOptions::default() }, ..FibrateOptions::default() };
        let outcome = fibrate(&m.complex, &cochains, &options)?;
        write_json(out_json, &to_value(&outcome))?;
        Ok(verdict_status(outcome.verdict.is_positive()))
    })
}

/// Parses a system definition.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tf_system_from_json(json: *const c_char, out: *mut *mut TfSystem) -> TfStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let system = SystemDefinition::from_json(read_str(json, "json")?).map_err(|e| Failure::input(e.to_string()))?;
        *out = Box::into_raw(Box::new(TfSystem { system }));
        Ok(TfStatus::Ok)
    })
}

/// Loads a bundled system such as `oscillator` or `so3`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tf_system_builtin(name: *const c_char, out: *mut *mut TfSystem) -> TfStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let name = read_str(name, "name")?;
        let text = catalog::system(name).ok_or_else(|| Failure::input(format!("no bundled system named '{name}'")))?;
        let system = SystemDefinition::from_json(text).map_err(|e| Failure::input(e.to_string()))?;
        *out = Box::into_raw(Box::new(TfSystem { system }));
        Ok(TfStatus::Ok)
    })
}

/// # Safety
/// `system` must come from this library or be null, and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tf_system_free(system: *mut TfSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Phase-space dimension and number of first integrals.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tf_system_shape(system: *const TfSystem, dimension: *mut usize, integrals: *mut usize) -> TfStatus {
    guard(|| {
        let s = system.as_ref().ok_or_else(|| Failure::null("system"))?;
        if dimension.is_null() || integrals.is_null() {
            return Err(Failure::null("out"));
        }
        *dimension = s.system.dim;
        *integrals = s.system.integral_count();
        Ok(TfStatus::Ok)
    })
}

/// Poisson bracket `{f_i, f_j}` of two integrals at `x`.
///
/// # Safety
/// `x` must point to `len` doubles; `system` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tf_system_bracket(
    system: *const TfSystem,
    i: usize,
    j: usize,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> TfStatus {
    guard(|| {
        let s = system.as_ref().ok_or_else(|| Failure::null("system"))?;
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        let x = read_slice(x, len, "x")?;
        if len != s.system.dim {
            return Err(Failure::input(format!("point has {len} coordinates, the system dimension is {}", s.system.dim)));
        }
        let n = s.system.integral_count();
        if i >= n || j >= n {
            return Err(Failure::input(format!("integral index out of range (have {n})")));
        }
        *out = s.system.poisson_bracket(i, j, x)?;
        Ok(TfStatus::Ok)
    })
}

/// Runs the integrability classification; returns `Negative` for "not integrable".
///
/// # Safety
/// `system` and `out_json` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tf_system_classify(
    system: *const TfSystem,
    samples: usize,
    seed: u64,
    out_json: *mut *mut c_char,
) -> TfStatus {
    guard(|| {
        let s = system.as_ref().ok_or_else(|| Failure::null("system"))?;
        if out_json.is_null() {
            return Err(Failure::null("out_json"));
        }
        let v = s.system.classify(samples, seed);
        write_json(out_json, &to_value(&v))?;
        Ok(verdict_status(v.is_integrable()))
    })
}

/// Certifies the fibre through `level`, starting the projection from `guess`.
/// Returns `Negative` when the verdict is inconclusive.
///
/// # Safety
/// `level` must point to `level_len` doubles and `guess` to `guess_len` doubles;
/// `system` and `out_json` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tf_detect_torus(
    system: *const TfSystem,
    level: *const f64,
    level_len: usize,
    guess: *const f64,
    guess_len: usize,
    out_json: *mut *mut c_char,
) -> TfStatus {
    guard(|| {
        let s = system.as_ref().ok_or_else(|| Failure::null("system"))?;
        if out_json.is_null() {
            return Err(Failure::null("out_json"));
        }
        let level = read_slice(level, level_len, "level")?;
        let guess = read_slice(guess, guess_len, "guess")?;
        if level.len() != s.system.integral_count() || guess.len() != s.system.dim {
            return Err(Failure::input(format!(
                "level needs {} values and guess {} values",
                s.system.integral_count(),
                s.system.dim
            )));
        }
        let v = fiber_verdict(&s.system, level, &[guess.to_vec()], &FiberOptions::default());
        write_json(out_json, &to_value(&v))?;
        Ok(verdict_status(v.is_torus()))
    })
}
