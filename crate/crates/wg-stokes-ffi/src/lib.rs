//! C ABI for the wg-stokes solver.
//!
//! Conventions:
//! - Every fallible call returns a [`wg_status`]; `WG_OK` is zero.
//! - Objects cross the boundary as opaque handles created by `wg_*_new`-style
//!   constructors and released by the matching `wg_*_free`. `free` functions
//!   accept NULL.
//! - On failure, a thread-local message is readable via
//!   [`wg_last_error_message`] until the next failing call on that thread.
//! - Output buffers are caller-allocated; the `len` parameter is the buffer
//!   length in doubles and must match the documented size exactly.
//! - Panics are caught at the boundary and reported as `WG_STATUS_PANIC`.

#![allow(non_camel_case_types)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe, UnwindSafe};

use wg_stokes::analysis::error_norms;
use wg_stokes::assembly::solve_saddle;
use wg_stokes::divfree::{recover_pressure, solve_divfree};
use wg_stokes::mesh::{Diagonal, Mesh};
use wg_stokes::problems::StokesProblem;
use wg_stokes::vtk::write_vtk;
use wg_stokes::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum wg_status {
    WG_STATUS_OK = 0,
    /// A pointer argument that must not be NULL was NULL.
    WG_STATUS_NULL_POINTER = 1,
    /// A string argument was not valid UTF-8.
    WG_STATUS_INVALID_UTF8 = 2,
    /// Invalid configuration (unknown problem, bad tolerance, size
    /// mismatch, incompatible algorithm/problem pairing, ...).
    WG_STATUS_INVALID_ARGUMENT = 3,
    /// Mesh construction or import failed.
    WG_STATUS_MESH_ERROR = 4,
    /// The linear solver failed (stall, breakdown, indefiniteness).
    WG_STATUS_SOLVER_ERROR = 5,
    /// The operation is not supported for this input.
    WG_STATUS_UNSUPPORTED = 6,
    /// Filesystem I/O failed.
    WG_STATUS_IO_ERROR = 7,
    /// An internal panic was caught at the ABI boundary.
    WG_STATUS_PANIC = 8,
}

use wg_status::*;

/// A triangle mesh (opaque).
pub struct wg_mesh(Mesh);

/// A Stokes problem: domain, data, and optional exact solution (opaque).
pub struct wg_problem(StokesProblem);

struct Solution {
    cells: usize,
    velocity: wg_stokes::assembly::WeakField,
    pressure: Option<Vec<f64>>,
    iterations: usize,
    relative_residual: f64,
    /// (triple, l2 velocity, l2 pressure) against the exact solution, when
    /// the problem has one. Pressure entry is NaN without a pressure field.
    errors: Option<[f64; 3]>,
}

/// A computed discrete solution with its solve statistics (opaque).
pub struct wg_solution(Solution);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized: Vec<u8> = msg.bytes().map(|b| if b == 0 { b' ' } else { b }).collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(e: &Error) -> wg_status {
    match e {
        Error::MeshImport(_) | Error::InvalidMesh(_) => WG_STATUS_MESH_ERROR,
        Error::IncompatibleBoundaryData { .. } | Error::InvalidArgument(_) => {
            WG_STATUS_INVALID_ARGUMENT
        }
        Error::SolverStalled { .. }
        | Error::NotPositiveDefinite(_)
        | Error::Breakdown { .. }
        | Error::ConsistencyFailed { .. } => WG_STATUS_SOLVER_ERROR,
        Error::Unsupported(_) => WG_STATUS_UNSUPPORTED,
        Error::Io(_) => WG_STATUS_IO_ERROR,
    }
}

fn fail(e: &Error) -> wg_status {
    set_error(&e.to_string());
    status_of(e)
}

/// Run `body` with panics converted to `WG_STATUS_PANIC`.
fn guarded(body: impl FnOnce() -> wg_status + UnwindSafe) -> wg_status {
    match catch_unwind(body) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal panic: {msg}"));
            WG_STATUS_PANIC
        }
    }
}

macro_rules! nonnull {
    ($ptr:expr) => {
        match unsafe { $ptr.as_ref() } {
            Some(r) => r,
            None => {
                set_error(concat!(stringify!($ptr), " is NULL"));
                return WG_STATUS_NULL_POINTER;
            }
        }
    };
}

fn utf8<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, wg_status> {
    if ptr.is_null() {
        set_error(&format!("{what} is NULL"));
        return Err(WG_STATUS_NULL_POINTER);
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        set_error(&format!("{what} is not valid UTF-8"));
        WG_STATUS_INVALID_UTF8
    })
}

fn hand_out<T>(out: *mut *mut T, value: T) -> wg_status {
    if out.is_null() {
        set_error("out is NULL");
        return WG_STATUS_NULL_POINTER;
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    WG_STATUS_OK
}

/// Message describing the most recent failure on this thread. Never NULL;
/// empty when nothing failed yet. Valid until the next failing call on the
/// same thread.
#[no_mangle]
pub extern "C" fn wg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn wg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

// ---------------------------------------------------------------- mesh ----

/// Build a structured unit-square mesh with 2 n^2 triangles. `northeast`
/// selects the diagonal direction (nonzero: south-west to north-east).
#[no_mangle]
pub extern "C" fn wg_mesh_unit_square(
    n: usize,
    northeast: i32,
    out: *mut *mut wg_mesh,
) -> wg_status {
    guarded(AssertUnwindSafe(|| {
        let diagonal = if northeast != 0 { Diagonal::NorthEast } else { Diagonal::NorthWest };
        match Mesh::unit_square(n, diagonal) {
            Ok(m) => hand_out(out, wg_mesh(m)),
            Err(e) => fail(&e),
        }
    }))
}

/// Import a mesh from Triangle-format `.node` and `.ele` file contents.
#[no_mangle]
pub extern "C" fn wg_mesh_import_triangle(
    node_text: *const c_char,
    ele_text: *const c_char,
    out: *mut *mut wg_mesh,
) -> wg_status {
    guarded(AssertUnwindSafe(|| {
        let node = match utf8(node_text, "node_text") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let ele = match utf8(ele_text, "ele_text") {
            Ok(s) => s,
            Err(status) => return status,
        };
        match Mesh::import_triangle(node, ele) {
            Ok(m) => hand_out(out, wg_mesh(m)),
            Err(e) => fail(&e),
        }
    }))
}

/// Uniformly refine: every triangle splits into four.
#[no_mangle]
pub extern "C" fn wg_mesh_refine_uniform(mesh: *const wg_mesh, out: *mut *mut wg_mesh) -> wg_status {
    guarded(AssertUnwindSafe(|| {
        let mesh = nonnull!(mesh);
        hand_out(out, wg_mesh(mesh.0.refine_uniform()))
    }))
}

/// Number of triangles. NULL yields 0.
#[no_mangle]
pub extern "C" fn wg_mesh_triangles(mesh: *const wg_mesh) -> usize {
    unsafe { mesh.as_ref() }.map_or(0, |m| m.0.n_triangles())
}

/// Number of vertices. NULL yields 0.
#[no_mangle]
pub extern "C" fn wg_mesh_vertices(mesh: *const wg_mesh) -> usize {
    unsafe { mesh.as_ref() }.map_or(0, |m| m.0.n_vertices())
}

/// Number of edges. NULL yields 0.
#[no_mangle]
pub extern "C" fn wg_mesh_edges(mesh: *const wg_mesh) -> usize {
    unsafe { mesh.as_ref() }.map_or(0, |m| m.0.n_edges())
}

/// Longest edge length. NULL yields NaN.
#[no_mangle]
pub extern "C" fn wg_mesh_h_max(mesh: *const wg_mesh) -> f64 {
    unsafe { mesh.as_ref() }.map_or(f64::NAN, |m| m.0.h_max())
}

/// Copy vertex coordinates into `xy` as x0,y0,x1,y1,...; `len` must equal
/// `2 * wg_mesh_vertices(mesh)`.
#[no_mangle]
pub extern "C" fn wg_mesh_coordinates(mesh: *const wg_mesh, xy: *mut f64, len: usize) -> wg_status {
    guarded(AssertUnwindSafe(|| {
        let mesh = &nonnull!(mesh).0;
        if xy.is_null() {
            set_error("xy is NULL");
            return WG_STATUS_NULL_POINTER;
        }
        if len != 2 * mesh.n_vertices() {
            set_error(&format!("len = {len}, need {}", 2 * mesh.n_vertices()));
            return WG_STATUS_INVALID_ARGUMENT;
        }
        let out = unsafe { std::slice::from_raw_parts_mut(xy, len) };
        for v in 0..mesh.n_vertices() {
            let p = mesh.vertex(v);
            out[2 * v] = p[0];
            out[2 * v + 1] = p[1];
        }
        WG_STATUS_OK
    }))
}

/// Copy triangle vertex indices into `indices` (three per triangle, ccw);
/// `len` must equal `3 * wg_mesh_triangles(mesh)`.
#[no_mangle]
pub extern "C" fn wg_mesh_connectivity(
    mesh: *const wg_mesh,
    indices: *mut usize,
    len: usize,
) -> wg_status {
    guarded(AssertUnwindSafe(|| {
        let mesh = &nonnull!(mesh).0;
        if indices.is_null() {
            set_error("indices is NULL");
            return WG_STATUS_NULL_POINTER;
        }
        if len != 3 * mesh.n_triangles() {
            set_error(&format!("len = {len}, need {}", 3 * mesh.n_triangles()));
            return WG_STATUS_INVALID_ARGUMENT;
        }
        let out = unsafe { std::slice::from_raw_parts_mut(indices, len) };
        for t in 0..mesh.n_triangles() {
            let tri = mesh.triangle(t);
            out[3 * t..3 * t + 3].copy_from_slice(&tri);
        }
        WG_STATUS_OK
    }))
}

/// Release a mesh handle (NULL is a no-op).
#[no_mangle]
pub extern "C" fn wg_mesh_free(mesh: *mut wg_mesh) {
    if !mesh.is_null() {
        drop(unsafe { Box::from_raw(mesh) });
    }
}

// ------------------------------------------------------------- problem ----

/// Look up a built-in problem by id (`ex1` ... `ex6`). `reynolds` matters
/// only for `ex3` and must then be positive.
#[no_mangle]
pub extern "C" fn wg_problem_by_name(
    name: *const c_char,
    reynolds: f64,
    out: *mut *mut wg_problem,
) -> wg_status {
    guarded(AssertUnwindSafe(|| {
        let name = match utf8(name, "name") {
            Ok(s) => s,
            Err(status) => return status,
        };
        match StokesProblem::by_name(name, reynolds) {
            Ok(p) => hand_out(out, wg_problem(p)),
            Err(e) => fail(&e),
        }
    }))
}

/// Does the problem carry an exact solution (so discretization errors can
/// be measured)? NULL yields 0.
#[no_mangle]
pub extern "C" fn wg_problem_has_exact(problem: *const wg_problem) -> i32 {
    unsafe { problem.as_ref() }.map_or(0, |p| p.0.has_exact() as i32)
}

/// Release a problem handle (NULL is a no-op).
#[no_mangle]
pub extern "C" fn wg_problem_free(problem: *mut wg_problem) {
    if !problem.is_null() {
        drop(unsafe { Box::from_raw(problem) });
    }
}

// --------------------------------------------------------------- solve ----

fn finish_solution(
    mesh: &Mesh,
    problem: &StokesProblem,
    velocity: wg_stokes::assembly::WeakField,
    pressure: Option<Vec<f64>>,
    iterations: usize,
    relative_residual: f64,
    out: *mut *mut wg_solution,
) -> wg_status {
    let errors = if problem.has_exact() {
        match error_norms(mesh, &velocity, pressure.as_deref(), problem) {
            Ok(n) => Some([n.triple, n.l2_u0, n.l2_p.unwrap_or(f64::NAN)]),
            Err(e) => return fail(&e),
        }
    } else {
        None
    };
    hand_out(
        out,
        wg_solution(Solution {
            cells: mesh.n_triangles(),
            velocity,
            pressure,
            iterations,
            relative_residual,
            errors,
        }),
    )
}

/// Algorithm 1: preconditioned MINRES on the saddle-point system. Produces
/// velocity and pressure.
#[no_mangle]
pub extern "C" fn wg_solve_saddle(
    mesh: *const wg_mesh,
    problem: *const wg_problem,
    tol: f64,
    out: *mut *mut wg_solution,
) -> wg_status {
    guarded(AssertUnwindSafe(|| {
        let mesh = &nonnull!(mesh).0;
        let problem = &nonnull!(problem).0;
        match solve_saddle(mesh, problem, tol) {
            Ok(s) => finish_solution(
                mesh,
                problem,
                s.velocity,
                Some(s.pressure),
                s.report.iterations,
                s.report.relative_residual,
                out,
            ),
            Err(e) => fail(&e),
        }
    }))
}

/// Algorithm 2: CG on the divergence-free subspace (homogeneous problems
/// only). Recovers a pressure when `recover_pressure` is nonzero.
#[no_mangle]
pub extern "C" fn wg_solve_divfree(
    mesh: *const wg_mesh,
    problem: *const wg_problem,
    tol: f64,
    recover: i32,
    out: *mut *mut wg_solution,
) -> wg_status {
    guarded(AssertUnwindSafe(|| {
        let mesh = &nonnull!(mesh).0;
        let problem = &nonnull!(problem).0;
        match solve_divfree(mesh, problem, tol) {
            Ok((velocity, report)) => {
                let pressure = if recover != 0 {
                    match recover_pressure(mesh, problem, &velocity, tol) {
                        Ok((p, _)) => Some(p),
                        Err(e) => return fail(&e),
                    }
                } else {
                    None
                };
                finish_solution(
                    mesh,
                    problem,
                    velocity,
                    pressure,
                    report.iterations,
                    report.relative_residual,
                    out,
                )
            }
            Err(e) => fail(&e),
        }
    }))
}

// ------------------------------------------------------------ solution ----

/// Number of cells the solution lives on. NULL yields 0.
#[no_mangle]
pub extern "C" fn wg_solution_cells(solution: *const wg_solution) -> usize {
    unsafe { solution.as_ref() }.map_or(0, |s| s.0.cells)
}

/// Krylov iterations used. NULL yields 0.
#[no_mangle]
pub extern "C" fn wg_solution_iterations(solution: *const wg_solution) -> usize {
    unsafe { solution.as_ref() }.map_or(0, |s| s.0.iterations)
}

/// Final true relative residual of the solve. NULL yields NaN.
#[no_mangle]
pub extern "C" fn wg_solution_relative_residual(solution: *const wg_solution) -> f64 {
    unsafe { solution.as_ref() }.map_or(f64::NAN, |s| s.0.relative_residual)
}

/// Does the solution carry a pressure field? NULL yields 0.
#[no_mangle]
pub extern "C" fn wg_solution_has_pressure(solution: *const wg_solution) -> i32 {
    unsafe { solution.as_ref() }.map_or(0, |s| s.0.pressure.is_some() as i32)
}

/// Copy the cell velocity averages into `xy` as ux0,uy0,ux1,uy1,...; `len`
/// must equal `2 * wg_solution_cells(solution)`.
#[no_mangle]
pub extern "C" fn wg_solution_velocity(
    solution: *const wg_solution,
    xy: *mut f64,
    len: usize,
) -> wg_status {
    guarded(AssertUnwindSafe(|| {
        let s = &nonnull!(solution).0;
        if xy.is_null() {
            set_error("xy is NULL");
            return WG_STATUS_NULL_POINTER;
        }
        if len != 2 * s.cells {
            set_error(&format!("len = {len}, need {}", 2 * s.cells));
            return WG_STATUS_INVALID_ARGUMENT;
        }
        let out = unsafe { std::slice::from_raw_parts_mut(xy, len) };
        for (t, v) in s.velocity.cell.iter().enumerate() {
            out[2 * t] = v[0];
            out[2 * t + 1] = v[1];
        }
        WG_STATUS_OK
    }))
}

/// Copy the cell pressures into `p`; `len` must equal
/// `wg_solution_cells(solution)`. Fails with `WG_STATUS_UNSUPPORTED` when no
/// pressure was computed.
#[no_mangle]
pub extern "C" fn wg_solution_pressure(
    solution: *const wg_solution,
    p: *mut f64,
    len: usize,
) -> wg_status {
    guarded(AssertUnwindSafe(|| {
        let s = &nonnull!(solution).0;
        if p.is_null() {
            set_error("p is NULL");
            return WG_STATUS_NULL_POINTER;
        }
        let Some(pressure) = &s.pressure else {
            set_error("solution has no pressure field (divfree solve without recovery)");
            return WG_STATUS_UNSUPPORTED;
        };
        if len != s.cells {
            set_error(&format!("len = {len}, need {}", s.cells));
            return WG_STATUS_INVALID_ARGUMENT;
        }
        unsafe { std::slice::from_raw_parts_mut(p, len) }.copy_from_slice(pressure);
        WG_STATUS_OK
    }))
}

/// Discretization errors against the problem's exact solution: writes the
/// energy-norm velocity error, the L2 cell-velocity error, and the L2
/// pressure error (NaN without a pressure field). Fails with
/// `WG_STATUS_UNSUPPORTED` for problems without an exact solution.
#[no_mangle]
pub extern "C" fn wg_solution_errors(
    solution: *const wg_solution,
    triple: *mut f64,
    l2_velocity: *mut f64,
    l2_pressure: *mut f64,
) -> wg_status {
    guarded(AssertUnwindSafe(|| {
        let s = &nonnull!(solution).0;
        let Some([e_triple, e_u, e_p]) = s.errors else {
            set_error("problem has no exact solution; errors are unavailable");
            return WG_STATUS_UNSUPPORTED;
        };
        for (ptr, value) in [(triple, e_triple), (l2_velocity, e_u), (l2_pressure, e_p)] {
            if !ptr.is_null() {
                unsafe { *ptr = value };
            }
        }
        WG_STATUS_OK
    }))
}

/// Write the solution as a legacy ASCII VTK file. The mesh must be the one
/// the solution was computed on. Solutions without a pressure field write
/// zeros for pressure.
#[no_mangle]
pub extern "C" fn wg_solution_write_vtk(
    solution: *const wg_solution,
    mesh: *const wg_mesh,
    path: *const c_char,
) -> wg_status {
    guarded(AssertUnwindSafe(|| {
        let s = &nonnull!(solution).0;
        let mesh = &nonnull!(mesh).0;
        let path = match utf8(path, "path") {
            Ok(p) => p,
            Err(status) => return status,
        };
        if mesh.n_triangles() != s.cells {
            set_error(&format!(
                "mesh has {} cells but the solution has {}",
                mesh.n_triangles(),
                s.cells
            ));
            return WG_STATUS_INVALID_ARGUMENT;
        }
        let zeros;
        let pressure: &[f64] = match &s.pressure {
            Some(p) => p,
            None => {
                zeros = vec![0.0; s.cells];
                &zeros
            }
        };
        let mut buf = Vec::new();
        if let Err(e) = write_vtk(&mut buf, "wg-stokes fields", mesh, &s.velocity.cell, pressure) {
            set_error(&e.to_string());
            return WG_STATUS_IO_ERROR;
        }
        match std::fs::write(path, buf) {
            Ok(()) => WG_STATUS_OK,
            Err(e) => {
                set_error(&format!("{path}: {e}"));
                WG_STATUS_IO_ERROR
            }
        }
    }))
}

/// Release a solution handle (NULL is a no-op).
#[no_mangle]
pub extern "C" fn wg_solution_free(solution: *mut wg_solution) {
    if !solution.is_null() {
        drop(unsafe { Box::from_raw(solution) });
    }
}
