//! C interface to `riesz-trace`.
//!
//! Meshes and pipelines are opaque handles created by `rt_*_generate`,
//! `rt_*_load` or `rt_*_build` and released with the matching `rt_*_free`.
//! Every fallible call returns an [`RtStatus`]; on failure a description is
//! available from [`rt_last_error_message`] on the same thread. Panics never
//! cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use riesz_trace::geometry::{generate_structured_mesh, load_mesh, Domain, Mesh};
use riesz_trace::pipeline::Pipeline;
use riesz_trace::riesz::riesz_bounds;
use riesz_trace::solver::very_weak_solve;
use riesz_trace::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The caller's output buffer is shorter than required.
    BufferTooSmall = 3,
    Parse = 4,
    InvalidMesh = 5,
    /// A factorization, consistency or spectral check failed.
    Numerical = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RtDomain {
    UnitSquare = 0,
    LShape = 1,
}

/// Triangulated domain.
pub struct RtMesh {
    mesh: Mesh,
}

/// Operators, spectrum and Riesz bases built on one mesh.
pub struct RtPipeline {
    pipeline: Pipeline,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> RtStatus {
    match e {
        Error::Parse { .. } => RtStatus::Parse,
        Error::InvalidMesh(_) | Error::DegenerateTriangle { .. } => RtStatus::InvalidMesh,
        Error::Dimension(_) | Error::InvalidArgument(_) | Error::Truncation { .. } => RtStatus::InvalidArgument,
        Error::Io(_) => RtStatus::Io,
        _ => RtStatus::Numerical,
    }
}

/// Runs `f`, recording any error or panic message.
fn guard(f: impl FnOnce() -> Result<(), (RtStatus, String)>) -> RtStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RtStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            RtStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (RtStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (RtStatus, String) {
    (RtStatus::NullPointer, format!("`{what}` is null"))
}

fn invalid(msg: String) -> (RtStatus, String) {
    (RtStatus::InvalidArgument, msg)
}

fn need(len: usize, required: usize, what: &str) -> Result<(), (RtStatus, String)> {
    if len < required {
        return Err((
            RtStatus::BufferTooSmall,
            format!("`{what}` holds {len} values, {required} required"),
        ));
    }
    Ok(())
}

/// Boxes `value` into `*out`.
///
/// # Safety
/// `out` must be null or valid for writes.
unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), (RtStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread, or an empty string. The
/// pointer stays valid until the next `rt_*` call on the same thread.
#[no_mangle]
pub extern "C" fn rt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Structured triangulation with `n` cells per unit length.
///
/// # Safety
/// `domain` must be one of the `RtDomain` values and `out` valid for writes.
/// On success `*out` owns a mesh to be released with [`rt_mesh_free`].
#[no_mangle]
pub unsafe extern "C" fn rt_mesh_generate(domain: RtDomain, n: usize, out: *mut *mut RtMesh) -> RtStatus {
    guard(|| {
        if n == 0 {
            return Err(invalid("n must be at least 1".into()));
        }
        let domain = match domain {
            RtDomain::UnitSquare => Domain::UnitSquare,
            RtDomain::LShape => Domain::LShape,
        };
        emit(
            out,
            RtMesh {
                mesh: generate_structured_mesh(domain, n),
            },
        )
    })
}

/// Reads and validates a mesh file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rt_mesh_load(path: *const c_char, out: *mut *mut RtMesh) -> RtStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| invalid("path is not UTF-8".into()))?;
        let loaded = load_mesh(path).map_err(lib_err)?;
        emit(out, RtMesh { mesh: loaded.mesh })
    })
}

/// # Safety
/// `mesh` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rt_mesh_free(mesh: *mut RtMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Node, triangle and boundary-node counts. Any output pointer may be null.
///
/// # Safety
/// `mesh` must be a live handle; non-null outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rt_mesh_counts(
    mesh: *const RtMesh,
    nodes: *mut usize,
    triangles: *mut usize,
    boundary_nodes: *mut usize,
) -> RtStatus {
    guard(|| {
        let m = &mesh.as_ref().ok_or_else(|| null("mesh"))?.mesh;
        for (ptr, v) in [
            (nodes, m.num_nodes()),
            (triangles, m.triangles().len()),
            (boundary_nodes, m.num_boundary_nodes()),
        ] {
            if !ptr.is_null() {
                *ptr = v;
            }
        }
        Ok(())
    })
}

/// Assembles the operators, diagonalizes the core operator and builds both
/// bases. `rank_tol` must lie in `(0, 1e-4]`.
///
/// # Safety
/// `mesh` must be a live handle and `out` valid for writes. On success
/// `*out` must be released with [`rt_pipeline_free`].
#[no_mangle]
pub unsafe extern "C" fn rt_pipeline_build(mesh: *const RtMesh, rank_tol: f64, out: *mut *mut RtPipeline) -> RtStatus {
    guard(|| {
        let m = &mesh.as_ref().ok_or_else(|| null("mesh"))?.mesh;
        if !(rank_tol > 0.0 && rank_tol <= 1e-4) {
            return Err(invalid(format!("rank_tol {rank_tol} is outside (0, 1e-4]")));
        }
        let pipeline = Pipeline::build(m, rank_tol).map_err(lib_err)?;
        emit(out, RtPipeline { pipeline })
    })
}

/// # Safety
/// `pipeline` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rt_pipeline_free(pipeline: *mut RtPipeline) {
    if !pipeline.is_null() {
        drop(Box::from_raw(pipeline));
    }
}

/// Number of modes, equal to the number of boundary nodes.
///
/// # Safety
/// `pipeline` must be a live handle and `count` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rt_pipeline_mode_count(pipeline: *const RtPipeline, count: *mut usize) -> RtStatus {
    guard(|| {
        let p = &pipeline.as_ref().ok_or_else(|| null("pipeline"))?.pipeline;
        if count.is_null() {
            return Err(null("count"));
        }
        *count = p.eigen.len();
        Ok(())
    })
}

/// Copies the singular values `κₙ` (nonincreasing) into `out[0..mode_count]`.
///
/// # Safety
/// `out` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn rt_pipeline_kappa(pipeline: *const RtPipeline, out: *mut f64, len: usize) -> RtStatus {
    guard(|| {
        let p = &pipeline.as_ref().ok_or_else(|| null("pipeline"))?.pipeline;
        if out.is_null() {
            return Err(null("out"));
        }
        let k = &p.eigen.kappa;
        need(len, k.len(), "out")?;
        std::ptr::copy_nonoverlapping(k.as_ptr(), out, k.len());
        Ok(())
    })
}

/// Very weak solution for boundary values `g` (one per boundary node, in
/// boundary-node order) from the first `truncation` terms of the expansion,
/// or all of them when `truncation` is 0. Writes nodal values to
/// `field[0..num_nodes]` and, if non-null, the `H_{1/2}` norm of the
/// truncated solution to `h_half_norm`.
///
/// # Safety
/// `g` must be valid for `g_len` reads, `field` for `field_len` writes and
/// `h_half_norm` null or valid for a write.
#[no_mangle]
pub unsafe extern "C" fn rt_pipeline_very_weak_solve(
    pipeline: *const RtPipeline,
    g: *const f64,
    g_len: usize,
    truncation: usize,
    field: *mut f64,
    field_len: usize,
    h_half_norm: *mut f64,
) -> RtStatus {
    guard(|| {
        let p = &pipeline.as_ref().ok_or_else(|| null("pipeline"))?.pipeline;
        if g.is_null() {
            return Err(null("g"));
        }
        if field.is_null() {
            return Err(null("field"));
        }
        let nb = p.pair.len();
        if g_len != nb {
            return Err(invalid(format!(
                "g has {g_len} values, the mesh has {nb} boundary nodes"
            )));
        }
        let nodes = p.mesh.num_nodes();
        need(field_len, nodes, "field")?;
        let data = nalgebra::DVector::from_column_slice(std::slice::from_raw_parts(g, g_len));
        let n = if truncation == 0 { nb } else { truncation };
        let sol = very_weak_solve(&data, n, &p.pair, &p.eigen).map_err(lib_err)?;
        std::ptr::copy_nonoverlapping(sol.field.as_ptr(), field, nodes);
        if !h_half_norm.is_null() {
            *h_half_norm = sol.h_half_norm;
        }
        Ok(())
    })
}

/// Optimal Riesz bounds `a_G, b_G` of `(gₙ)` and `a_Y, b_Y` of `(yₙ)` in
/// `L²(∂Ω)`. Any output pointer may be null.
///
/// # Safety
/// `pipeline` must be a live handle; non-null outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rt_pipeline_riesz_bounds(
    pipeline: *const RtPipeline,
    a_g: *mut f64,
    b_g: *mut f64,
    a_y: *mut f64,
    b_y: *mut f64,
) -> RtStatus {
    guard(|| {
        let p = &pipeline.as_ref().ok_or_else(|| null("pipeline"))?.pipeline;
        let space = &p.pair.boundary_space;
        let g = riesz_bounds(&p.pair.g_cols, space);
        let y = riesz_bounds(&p.pair.y_cols, space);
        for (ptr, v) in [(a_g, g.a), (b_g, g.b), (a_y, y.a), (b_y, y.b)] {
            if !ptr.is_null() {
                *ptr = v;
            }
        }
        Ok(())
    })
}
