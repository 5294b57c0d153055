//! C ABI for the data-driven control toolkit: opaque data handles, status
//! codes and flat row-major buffers, so other languages can bind the
//! synthesis and verification entry points.
//!
//! Matrix buffers follow the trajectory-file convention: one row per time
//! step for data (`x` is `(t+1) x n`, `u` is `t x m`, `w` is `t x d`), and
//! plain row-major storage for system and weight matrices.

use ddctrl::h2::{synthesize_h2, H2Condition, H2Spec, H2Synthesis};
use ddctrl::linalg::{spectral_radius, Mat, SymmetricMatrix};
use ddctrl::lqr::{minimize_gamma_lqr, synthesize_lqr, LqrSpec, Synthesis};
use ddctrl::oracle;
use ddctrl::sdp::{EpsPolicy, SolverSettings};
use ddctrl::system::{DataRecord, LtiSystem};
use nalgebra::DVector;
use std::cell::RefCell;
use std::ffi::{c_char, c_int, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Outcome of an FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdctrlStatus {
    /// Success; output buffers are filled.
    Ok = 0,
    /// The requested bound is certified unreachable for the data.
    Infeasible = 1,
    /// Invalid arguments (null pointers, bad dimensions, malformed data).
    Invalid = 2,
    /// Numerical failure or an inconclusive solve.
    Inconclusive = 3,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    });
}

/// Message describing the most recent failure on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ddctrl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Opaque measured-data handle.
pub struct DdctrlData {
    record: DataRecord,
}

/// Solver options; get defaults from [`ddctrl_default_options`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DdctrlOptions {
    /// Strictness margin for the LMI blocks; <= 0 selects the per-block
    /// default policy 1e-8 * (1 + |constant|).
    pub eps: f64,
    /// Relative duality-measure stopping tolerance.
    pub tol: f64,
    /// Newton iteration budget.
    pub max_iter: usize,
}

#[no_mangle]
pub extern "C" fn ddctrl_default_options() -> DdctrlOptions {
    let s = SolverSettings::default();
    DdctrlOptions {
        eps: 0.0,
        tol: s.tol,
        max_iter: s.max_iter,
    }
}

fn settings_of(opts: *const DdctrlOptions) -> (EpsPolicy, SolverSettings) {
    let opts = if opts.is_null() {
        ddctrl_default_options()
    } else {
        unsafe { *opts }
    };
    let eps = if opts.eps > 0.0 {
        EpsPolicy::Fixed(opts.eps)
    } else {
        EpsPolicy::Auto
    };
    let settings = SolverSettings {
        tol: opts.tol,
        max_iter: opts.max_iter,
        ..SolverSettings::default()
    };
    (eps, settings)
}

unsafe fn slice<'a>(ptr: *const f64, len: usize) -> Option<&'a [f64]> {
    if ptr.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(ptr, len))
    }
}

fn mat_from_row_major(data: &[f64], rows: usize, cols: usize) -> Mat {
    Mat::from_row_slice(rows, cols, data)
}

fn write_row_major(m: &Mat, out: &mut [f64]) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out[i * m.ncols() + j] = m[(i, j)];
        }
    }
}

fn guard<F: FnOnce() -> DdctrlStatus>(f: F) -> DdctrlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            DdctrlStatus::Inconclusive
        }
    }
}

/// Builds a data handle from trajectory buffers: `x` holds t+1 rows of n
/// state entries, `u` holds t rows of m inputs; pass `w` (t rows of d
/// entries) when disturbances were measured, else null with d = 0.
///
/// # Safety
/// Buffers must match the stated dimensions; the returned handle must be
/// released with [`ddctrl_data_free`].
#[no_mangle]
pub unsafe extern "C" fn ddctrl_data_create(
    n: usize,
    m: usize,
    d: usize,
    t: usize,
    x: *const f64,
    u: *const f64,
    w: *const f64,
    out: *mut *mut DdctrlData,
) -> DdctrlStatus {
    guard(|| {
        if out.is_null() || n == 0 || m == 0 || t == 0 {
            set_error("null output pointer or zero dimension");
            return DdctrlStatus::Invalid;
        }
        let (Some(x), Some(u)) = (slice(x, (t + 1) * n), slice(u, t * m)) else {
            set_error("null trajectory buffer");
            return DdctrlStatus::Invalid;
        };
        let w = if d > 0 {
            match slice(w, t * d) {
                Some(w) => Some(mat_from_row_major(w, t, d).transpose()),
                None => {
                    set_error("d > 0 but w is null");
                    return DdctrlStatus::Invalid;
                }
            }
        } else {
            None
        };
        // rows are time steps on disk and in buffers; columns in memory
        let x = mat_from_row_major(x, t + 1, n).transpose();
        let u = mat_from_row_major(u, t, m).transpose();
        match DataRecord::new(u, x, w) {
            Ok(record) => {
                *out = Box::into_raw(Box::new(DdctrlData { record }));
                DdctrlStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                DdctrlStatus::Invalid
            }
        }
    })
}

/// Releases a data handle.
///
/// # Safety
/// `data` must come from [`ddctrl_data_create`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ddctrl_data_free(data: *mut DdctrlData) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

fn lqr_spec_from(
    record: &DataRecord,
    q: &[f64],
    r: &[f64],
    x0: &[f64],
    gamma: Option<f64>,
) -> Result<LqrSpec, String> {
    let n = record.state_dim();
    let m = record.input_dim();
    let q = SymmetricMatrix::new(mat_from_row_major(q, n, n)).map_err(|e| e.to_string())?;
    let r = SymmetricMatrix::new(mat_from_row_major(r, m, m)).map_err(|e| e.to_string())?;
    LqrSpec::new(q, r, DVector::from_column_slice(x0), gamma).map_err(|e| e.to_string())
}

fn emit_controller(
    ctrl: &ddctrl::lqr::Controller,
    n: usize,
    m: usize,
    out_k: *mut f64,
    out_gamma: *mut f64,
) -> DdctrlStatus {
    unsafe {
        if !out_k.is_null() {
            let out = std::slice::from_raw_parts_mut(out_k, m * n);
            write_row_major(&ctrl.k, out);
        }
        if !out_gamma.is_null() {
            *out_gamma = ctrl.achieved_gamma.unwrap_or(f64::NAN);
        }
    }
    DdctrlStatus::Ok
}

/// Synthesizes a fixed-γ suboptimal LQR gain from the data. `out_k` receives
/// the m×n gain row-major; `out_gamma` the exact data-consistent cost.
///
/// # Safety
/// `q` is n×n, `r` is m×m, `x0` has n entries, `out_k` has m·n slots.
#[no_mangle]
pub unsafe extern "C" fn ddctrl_synth_lqr(
    data: *const DdctrlData,
    q: *const f64,
    r: *const f64,
    x0: *const f64,
    gamma: f64,
    opts: *const DdctrlOptions,
    out_k: *mut f64,
    out_gamma: *mut f64,
) -> DdctrlStatus {
    guard(|| {
        let Some(data) = data.as_ref() else {
            set_error("null data handle");
            return DdctrlStatus::Invalid;
        };
        let n = data.record.state_dim();
        let m = data.record.input_dim();
        let (Some(q), Some(r), Some(x0)) = (slice(q, n * n), slice(r, m * m), slice(x0, n))
        else {
            set_error("null weight or initial-state buffer");
            return DdctrlStatus::Invalid;
        };
        let spec = match lqr_spec_from(&data.record, q, r, x0, Some(gamma)) {
            Ok(s) => s,
            Err(e) => {
                set_error(e);
                return DdctrlStatus::Invalid;
            }
        };
        let (eps, settings) = settings_of(opts);
        match synthesize_lqr(&data.record, &spec, eps, &settings) {
            Ok(Synthesis::Feasible(ctrl)) => emit_controller(&ctrl, n, m, out_k, out_gamma),
            Ok(Synthesis::Infeasible(diag)) => {
                set_error(diag.message);
                DdctrlStatus::Infeasible
            }
            Ok(Synthesis::Inconclusive(diag)) => {
                set_error(diag.message);
                DdctrlStatus::Inconclusive
            }
            Err(e) => {
                set_error(e.to_string());
                DdctrlStatus::Invalid
            }
        }
    })
}

/// Minimizes γ subject to the informativity LMIs; outputs as in
/// [`ddctrl_synth_lqr`].
///
/// # Safety
/// As for [`ddctrl_synth_lqr`].
#[no_mangle]
pub unsafe extern "C" fn ddctrl_min_gamma_lqr(
    data: *const DdctrlData,
    q: *const f64,
    r: *const f64,
    x0: *const f64,
    opts: *const DdctrlOptions,
    out_k: *mut f64,
    out_gamma: *mut f64,
) -> DdctrlStatus {
    guard(|| {
        let Some(data) = data.as_ref() else {
            set_error("null data handle");
            return DdctrlStatus::Invalid;
        };
        let n = data.record.state_dim();
        let m = data.record.input_dim();
        let (Some(q), Some(r), Some(x0)) = (slice(q, n * n), slice(r, m * m), slice(x0, n))
        else {
            set_error("null weight or initial-state buffer");
            return DdctrlStatus::Invalid;
        };
        let (qm, rm) = match (
            SymmetricMatrix::new(mat_from_row_major(q, n, n)),
            SymmetricMatrix::new(mat_from_row_major(r, m, m)),
        ) {
            (Ok(a), Ok(b)) => (a, b),
            _ => {
                set_error("weights must be square");
                return DdctrlStatus::Invalid;
            }
        };
        let (eps, settings) = settings_of(opts);
        match minimize_gamma_lqr(
            &data.record,
            &qm,
            &rm,
            &DVector::from_column_slice(x0),
            eps,
            &settings,
        ) {
            Ok(Synthesis::Feasible(ctrl)) => emit_controller(&ctrl, n, m, out_k, out_gamma),
            Ok(Synthesis::Infeasible(diag)) => {
                set_error(diag.message);
                DdctrlStatus::Infeasible
            }
            Ok(Synthesis::Inconclusive(diag)) => {
                set_error(diag.message);
                DdctrlStatus::Inconclusive
            }
            Err(e) => {
                set_error(e.to_string());
                DdctrlStatus::Invalid
            }
        }
    })
}

/// Synthesizes an H2 suboptimal gain from data with measured disturbances.
/// `c` is p×n and `d_mat` p×m row-major. On success `out_condition` is 1 or
/// 2 for the zero-output / identified-E condition, `out_trace_bound` holds
/// the certified bound, and `out_e` (n×d row-major, may be null) receives
/// the identified disturbance matrix under condition 2.
///
/// # Safety
/// Buffer sizes must match the stated dimensions.
#[no_mangle]
pub unsafe extern "C" fn ddctrl_synth_h2(
    data: *const DdctrlData,
    c: *const f64,
    d_mat: *const f64,
    p: usize,
    gamma: f64,
    opts: *const DdctrlOptions,
    out_k: *mut f64,
    out_trace_bound: *mut f64,
    out_condition: *mut c_int,
    out_e: *mut f64,
) -> DdctrlStatus {
    guard(|| {
        let Some(data) = data.as_ref() else {
            set_error("null data handle");
            return DdctrlStatus::Invalid;
        };
        let n = data.record.state_dim();
        let m = data.record.input_dim();
        let dd = data.record.disturbance_dim();
        let (Some(c), Some(d_mat)) = (slice(c, p * n), slice(d_mat, p * m)) else {
            set_error("null output-map buffer");
            return DdctrlStatus::Invalid;
        };
        let spec = match H2Spec::new(
            mat_from_row_major(c, p, n),
            mat_from_row_major(d_mat, p, m),
            gamma,
        ) {
            Ok(s) => s,
            Err(e) => {
                set_error(e.to_string());
                return DdctrlStatus::Invalid;
            }
        };
        let (eps, settings) = settings_of(opts);
        match synthesize_h2(&data.record, &spec, eps, &settings) {
            Ok(H2Synthesis::Feasible(ctrl, cert)) => {
                if !out_k.is_null() {
                    let out = std::slice::from_raw_parts_mut(out_k, m * n);
                    write_row_major(&ctrl.k, out);
                }
                if !out_trace_bound.is_null() {
                    *out_trace_bound = cert.trace_bound;
                }
                if !out_condition.is_null() {
                    *out_condition = match cert.condition {
                        H2Condition::I => 1,
                        H2Condition::Ii => 2,
                    };
                }
                if !out_e.is_null() {
                    if let Some(e) = &cert.e_identified {
                        let out = std::slice::from_raw_parts_mut(out_e, n * dd);
                        write_row_major(e, out);
                    }
                }
                DdctrlStatus::Ok
            }
            Ok(H2Synthesis::NotFeasible { conclusive, .. }) => {
                set_error("neither informativity condition holds for this gamma");
                if conclusive {
                    DdctrlStatus::Infeasible
                } else {
                    DdctrlStatus::Inconclusive
                }
            }
            Err(e) => {
                set_error(e.to_string());
                DdctrlStatus::Invalid
            }
        }
    })
}

/// Exact LQR cost of a gain on a known system (model-based oracle);
/// fails with `DDCTRL_INFEASIBLE` when the closed loop is unstable.
///
/// # Safety
/// `a` is n×n, `b` n×m, `k` m×n, `q` n×n, `r` m×m, `x0` n entries.
#[no_mangle]
pub unsafe extern "C" fn ddctrl_lqr_cost(
    n: usize,
    m: usize,
    a: *const f64,
    b: *const f64,
    k: *const f64,
    q: *const f64,
    r: *const f64,
    x0: *const f64,
    out_cost: *mut f64,
) -> DdctrlStatus {
    guard(|| {
        let (Some(a), Some(b), Some(k), Some(q), Some(r), Some(x0)) = (
            slice(a, n * n),
            slice(b, n * m),
            slice(k, m * n),
            slice(q, n * n),
            slice(r, m * m),
            slice(x0, n),
        ) else {
            set_error("null buffer");
            return DdctrlStatus::Invalid;
        };
        if out_cost.is_null() {
            set_error("null output");
            return DdctrlStatus::Invalid;
        }
        let sys = match LtiSystem::new(mat_from_row_major(a, n, n), mat_from_row_major(b, n, m)) {
            Ok(s) => s,
            Err(e) => {
                set_error(e.to_string());
                return DdctrlStatus::Invalid;
            }
        };
        let (Ok(qm), Ok(rm)) = (
            SymmetricMatrix::new(mat_from_row_major(q, n, n)),
            SymmetricMatrix::new(mat_from_row_major(r, m, m)),
        ) else {
            set_error("bad weight matrices");
            return DdctrlStatus::Invalid;
        };
        match oracle::lqr_cost(
            &sys,
            &mat_from_row_major(k, m, n),
            &qm,
            &rm,
            &DVector::from_column_slice(x0),
        ) {
            Ok(cost) => {
                *out_cost = cost;
                DdctrlStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                DdctrlStatus::Infeasible
            }
        }
    })
}

/// Largest eigenvalue modulus of a square matrix.
///
/// # Safety
/// `a` must hold n·n entries.
#[no_mangle]
pub unsafe extern "C" fn ddctrl_spectral_radius(
    n: usize,
    a: *const f64,
    out: *mut f64,
) -> DdctrlStatus {
    guard(|| {
        let Some(a) = slice(a, n * n) else {
            set_error("null buffer");
            return DdctrlStatus::Invalid;
        };
        if out.is_null() {
            set_error("null output");
            return DdctrlStatus::Invalid;
        }
        match spectral_radius(&mat_from_row_major(a, n, n)) {
            Ok(r) => {
                *out = r;
                DdctrlStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                DdctrlStatus::Inconclusive
            }
        }
    })
}
