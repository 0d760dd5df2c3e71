//! C ABI for `tscale`.
//!
//! Scales and functions are opaque heap handles created by `ts_*_new`-style
//! constructors and released with the matching `_free`. Every fallible call
//! returns a [`TsStatus`]; on failure the message is available from
//! [`ts_last_error_message`] on the same thread. Outputs are written through
//! caller-provided pointers only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use tscale::{Coefficient, Error, FunctionSpec, RngConfig, ScaleSpec, TimeScale};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidScale = 4,
    NotInScale = 5,
    Domain = 6,
    NotRegressive = 7,
    InvalidArgument = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Opaque time scale.
pub struct TsScale {
    inner: TimeScale,
}

/// Opaque test function with its partial derivatives.
pub struct TsFunction {
    inner: FunctionSpec,
}

/// A gap `(s_minus, s_plus)` of a scale.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TsGap {
    pub s_minus: f64,
    pub s_plus: f64,
}

/// `f`, `f_t`, `f_x` and `f_xx` at one point.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TsPartials {
    pub f: f64,
    pub f_t: f64,
    pub f_x: f64,
    pub f_xx: f64,
}

/// Both sides of the Ito formula on one sampled path.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TsItoResult {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub correction_sum: f64,
}

/// Closed-form stochastic exponential and the Euler recursion on one path.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TsExpResult {
    pub u: f64,
    pub d: f64,
    pub v: f64,
    pub closed_form: f64,
    pub recursive: f64,
    pub rel_error: f64,
}

/// Path sampling parameters shared by the per-path checks.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsPathConfig {
    /// Refinement level n.
    pub level: u32,
    pub seed: u64,
    pub path_id: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(TsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Parse(_) => TsStatus::Parse,
            Error::EmptyScale
            | Error::NegativeCoordinate(_)
            | Error::ReversedInterval(..)
            | Error::InvalidQ(_)
            | Error::InvalidExponentRange(..)
            | Error::NonFinite => TsStatus::InvalidScale,
            Error::NotInScale(_) | Error::BelowScale { .. } | Error::NotPartitionTime(_) => TsStatus::NotInScale,
            Error::Domain { .. } => TsStatus::Domain,
            Error::NotRegressive { .. } => TsStatus::NotRegressive,
            Error::Config(_) if e.to_string().contains("scale spec") => TsStatus::InvalidScale,
            _ => TsStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(TsStatus::NullPointer, format!("`{name}` is null"))
}

/// Runs `body`, converting errors and panics into a status code.
fn guard<F: FnOnce() -> Result<(), Failure>>(body: F) -> TsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            TsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(TsStatus::InvalidUtf8, format!("`{name}` is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn write_out<T>(p: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    p.write(value);
    Ok(())
}

/// Message of the last failed call on this thread (empty after a success).
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ts_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ts_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a scale from its JSON spec, e.g. `{"pieces":[{"interval":[0,1]},{"point":1.5}]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_scale_from_json(json: *const c_char, out: *mut *mut TsScale) -> TsStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let ts = ScaleSpec::from_json(text)?.build()?;
        write_out(out, Box::into_raw(Box::new(TsScale { inner: ts })), "out")
    })
}

/// The closed interval `[a, b]`.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_scale_interval(a: f64, b: f64, out: *mut *mut TsScale) -> TsStatus {
    guard(|| {
        let ts = TimeScale::interval(a, b)?;
        write_out(out, Box::into_raw(Box::new(TsScale { inner: ts })), "out")
    })
}

/// `{q^k : kmin <= k <= kmax}`, plus 0 when `include_zero` is true.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_scale_qscale(
    q: f64,
    kmin: i32,
    kmax: i32,
    include_zero: bool,
    out: *mut *mut TsScale,
) -> TsStatus {
    guard(|| {
        let ts = TimeScale::qscale(q, kmin, kmax, include_zero)?;
        write_out(out, Box::into_raw(Box::new(TsScale { inner: ts })), "out")
    })
}

/// Releases a scale. Null is ignored.
///
/// # Safety
/// `scale` must come from a `ts_scale_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ts_scale_free(scale: *mut TsScale) {
    if !scale.is_null() {
        drop(Box::from_raw(scale));
    }
}

unsafe fn scale_op(
    scale: *const TsScale,
    t: f64,
    out: *mut f64,
    op: fn(&TimeScale, f64) -> tscale::Result<f64>,
) -> TsStatus {
    guard(|| {
        let s = ref_arg(scale, "scale")?;
        write_out(out, op(&s.inner, t)?, "out")
    })
}

/// Forward jump `sigma(t)`; `t` must belong to the scale.
///
/// # Safety
/// `scale` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_scale_sigma(scale: *const TsScale, t: f64, out: *mut f64) -> TsStatus {
    scale_op(scale, t, out, TimeScale::sigma)
}

/// Backward jump `rho(t)`.
///
/// # Safety
/// `scale` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_scale_rho(scale: *const TsScale, t: f64, out: *mut f64) -> TsStatus {
    scale_op(scale, t, out, TimeScale::rho)
}

/// Graininess `mu(t) = sigma(t) - t`.
///
/// # Safety
/// `scale` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_scale_mu(scale: *const TsScale, t: f64, out: *mut f64) -> TsStatus {
    scale_op(scale, t, out, TimeScale::mu)
}

/// Last scale point at or before `t` (any `t >= min`).
///
/// # Safety
/// `scale` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_scale_sup_le(scale: *const TsScale, t: f64, out: *mut f64) -> TsStatus {
    scale_op(scale, t, out, TimeScale::sup_le)
}

/// Smallest and largest scale points.
///
/// # Safety
/// `scale` must be a live handle; `min` and `max` writable pointers.
#[no_mangle]
pub unsafe extern "C" fn ts_scale_bounds(scale: *const TsScale, min: *mut f64, max: *mut f64) -> TsStatus {
    guard(|| {
        let s = ref_arg(scale, "scale")?;
        if max.is_null() {
            return Err(null("max"));
        }
        write_out(min, s.inner.min(), "min")?;
        write_out(max, s.inner.max(), "max")
    })
}

/// Copies the gaps into `buf` (capacity `cap`) and stores their count in
/// `len`. Returns `BufferTooSmall` with `len` set when `cap` is too small;
/// pass `buf = NULL, cap = 0` to query the count.
///
/// # Safety
/// `buf` must hold `cap` writable entries (or be null with `cap = 0`);
/// `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ts_scale_gaps(
    scale: *const TsScale,
    buf: *mut TsGap,
    cap: usize,
    len: *mut usize,
) -> TsStatus {
    guard(|| {
        let s = ref_arg(scale, "scale")?;
        let gaps: Vec<TsGap> = s
            .inner
            .gaps()
            .map(|g| TsGap {
                s_minus: g.s_minus,
                s_plus: g.s_plus,
            })
            .collect();
        write_out(len, gaps.len(), "len")?;
        if gaps.len() > cap {
            return Err(Failure(
                TsStatus::BufferTooSmall,
                format!("{} gaps, buffer holds {cap}", gaps.len()),
            ));
        }
        if !gaps.is_empty() {
            if buf.is_null() {
                return Err(null("buf"));
            }
            std::ptr::copy_nonoverlapping(gaps.as_ptr(), buf, gaps.len());
        }
        Ok(())
    })
}

/// Parses `f(t, x)` and derives `f_t`, `f_x`, `f_xx`.
///
/// # Safety
/// `source` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_function_parse(source: *const c_char, out: *mut *mut TsFunction) -> TsStatus {
    guard(|| {
        let fs = FunctionSpec::parse(str_arg(source, "source")?)?;
        write_out(out, Box::into_raw(Box::new(TsFunction { inner: fs })), "out")
    })
}

/// Releases a function. Null is ignored.
///
/// # Safety
/// `function` must come from [`ts_function_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ts_function_free(function: *mut TsFunction) {
    if !function.is_null() {
        drop(Box::from_raw(function));
    }
}

/// Evaluates the function and its partials at `(t, x)`.
///
/// # Safety
/// `function` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_function_eval(
    function: *const TsFunction,
    t: f64,
    x: f64,
    out: *mut TsPartials,
) -> TsStatus {
    guard(|| {
        let fs = &ref_arg(function, "function")?.inner;
        let p = TsPartials {
            f: fs.f.eval(t, x)?,
            f_t: fs.f_t.eval(t, x)?,
            f_x: fs.f_x.eval(t, x)?,
            f_xx: fs.f_xx.eval(t, x)?,
        };
        write_out(out, p, "out")
    })
}

fn sample(ts: &TimeScale, t1: f64, t2: f64, cfg: &TsPathConfig) -> Result<tscale::PathSample, Failure> {
    let p = Arc::new(ts.partition(t1, t2, cfg.level)?);
    Ok(tscale::sample_path(p, RngConfig::new(cfg.seed, cfg.path_id)))
}

/// Samples one Brownian path on `[t1, t2]` and evaluates both sides of the
/// Ito formula for `f(t, W_t)`.
///
/// # Safety
/// `scale`, `function` and `cfg` must be live pointers; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ts_ito_check(
    scale: *const TsScale,
    function: *const TsFunction,
    t1: f64,
    t2: f64,
    cfg: *const TsPathConfig,
    out: *mut TsItoResult,
) -> TsStatus {
    guard(|| {
        let ts = &ref_arg(scale, "scale")?.inner;
        let fs = &ref_arg(function, "function")?.inner;
        let path = sample(ts, t1, t2, ref_arg(cfg, "cfg")?)?;
        let r = tscale::ito_sides(fs, ts, &path, t1, t2)?;
        write_out(
            out,
            TsItoResult {
                lhs: r.lhs,
                rhs: r.rhs,
                residual: r.residual,
                correction_sum: r.correction_sum,
            },
            "out",
        )
    })
}

/// Closed-form stochastic exponential `E_A(t, t0)` with coefficient `A`
/// given by `coefficient` (its `f`), next to the Euler recursion, on one path.
///
/// # Safety
/// `scale`, `coefficient` and `cfg` must be live pointers; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ts_stoch_exp(
    scale: *const TsScale,
    coefficient: *const TsFunction,
    t0: f64,
    t: f64,
    cfg: *const TsPathConfig,
    out: *mut TsExpResult,
) -> TsStatus {
    guard(|| {
        let ts = &ref_arg(scale, "scale")?.inner;
        let a = Coefficient::Expr(ref_arg(coefficient, "coefficient")?.inner.f.clone());
        let path = sample(ts, t0, t, ref_arg(cfg, "cfg")?)?;
        for entry in tscale::stoch_exp::regressivity_check(&a, &path, t0, t)? {
            if !entry.pass {
                return Err(Error::NotRegressive {
                    s_minus: entry.gap.s_minus,
                    s_plus: entry.gap.s_plus,
                    factor: entry.factor,
                }
                .into());
            }
        }
        let r = tscale::exponential_report(&a, &path, t0, t)?;
        write_out(
            out,
            TsExpResult {
                u: r.u,
                d: r.d,
                v: r.v,
                closed_form: r.closed_form,
                recursive: r.recursive,
                rel_error: r.rel_error,
            },
            "out",
        )
    })
}
