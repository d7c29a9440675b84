//! C ABI over `periodlab`. Polynomials are opaque handles owned by the caller and
//! released with `periodlab_polynomial_free`. Every fallible call returns a
//! `PeriodlabStatus`; the message of the last failure on the calling thread is
//! available from `periodlab_last_error`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use periodlab::bounds::{bound_table, BoundExtras};
use periodlab::detformula::{choose_form_tuple, verify_formula};
use periodlab::genericity::{critical_data, normalize, NormalizationMode};
use periodlab::integrals::default_samples;
use periodlab::{io, BivariatePolynomial, Config, Error, C64};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PeriodlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Numerical = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PeriodlabMode {
    Weak = 0,
    Normalized = 1,
    UnitScaled = 2,
    CentrallyRescaled = 3,
}

/// Opaque polynomial handle.
pub struct PeriodlabPolynomial(BivariatePolynomial);

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PeriodlabVerdict {
    pub pass: bool,
    pub max_rel_err: f64,
    pub fit_residual: f64,
    pub loop_rel_change: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> PeriodlabStatus {
    match err {
        Error::Json { .. } | Error::InvalidInput(_) => PeriodlabStatus::Parse,
        Error::OutOfRange(_) | Error::DegreeTooLow { .. } | Error::TupleSize { .. } | Error::UnsupportedDegree(_) => {
            PeriodlabStatus::InvalidArgument
        }
        _ => PeriodlabStatus::Numerical,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard<F>(f: F) -> PeriodlabStatus
where
    F: FnOnce() -> Result<(), (PeriodlabStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PeriodlabStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PeriodlabStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (PeriodlabStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (PeriodlabStatus, String) {
    (PeriodlabStatus::NullPointer, format!("{what} is null"))
}

unsafe fn poly_ref<'a>(p: *const PeriodlabPolynomial) -> Result<&'a BivariatePolynomial, (PeriodlabStatus, String)> {
    p.as_ref().map(|h| &h.0).ok_or_else(|| null("polynomial handle"))
}

unsafe fn put<T>(out: *mut T, v: T) -> Result<(), (PeriodlabStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(v);
    Ok(())
}

/// Parses a `periodlab/1` polynomial document.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn periodlab_polynomial_from_json(json: *const c_char, out: *mut *mut PeriodlabPolynomial) -> PeriodlabStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| (PeriodlabStatus::Parse, "json is not UTF-8".to_string()))?;
        let p = io::read_polynomial(text).map_err(lib_err)?;
        put(out, Box::into_raw(Box::new(PeriodlabPolynomial(p))))
    })
}

/// Builds a polynomial from `len` terms `re[k] + i im[k]` times `x^xi[k] y^yj[k]`.
///
/// # Safety
/// The four arrays must each hold `len` elements; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn periodlab_polynomial_from_terms(
    len: usize,
    xi: *const u32,
    yj: *const u32,
    re: *const f64,
    im: *const f64,
    out: *mut *mut PeriodlabPolynomial,
) -> PeriodlabStatus {
    guard(|| {
        if len == 0 {
            return Err((PeriodlabStatus::InvalidArgument, "no terms".into()));
        }
        if xi.is_null() || yj.is_null() || re.is_null() || im.is_null() {
            return Err(null("term array"));
        }
        let (xi, yj) = (std::slice::from_raw_parts(xi, len), std::slice::from_raw_parts(yj, len));
        let (re, im) = (std::slice::from_raw_parts(re, len), std::slice::from_raw_parts(im, len));
        let mut terms = Vec::with_capacity(len);
        let mut seen = std::collections::BTreeSet::new();
        for k in 0..len {
            if !seen.insert((xi[k], yj[k])) {
                return Err((PeriodlabStatus::InvalidArgument, format!("duplicate monomial x^{} y^{}", xi[k], yj[k])));
            }
            terms.push((xi[k] as usize, yj[k] as usize, C64::new(re[k], im[k])));
        }
        let bound = terms.iter().map(|&(i, j, _)| i + j).max().unwrap_or(0);
        let p = BivariatePolynomial::from_terms(bound, &terms).map_err(lib_err)?;
        put(out, Box::into_raw(Box::new(PeriodlabPolynomial(p))))
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `p` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn periodlab_polynomial_free(p: *mut PeriodlabPolynomial) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Total degree, or -1 for the zero polynomial.
///
/// # Safety
/// `p` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn periodlab_polynomial_degree(p: *const PeriodlabPolynomial, out: *mut i32) -> PeriodlabStatus {
    guard(|| {
        let h = poly_ref(p)?;
        put(out, h.degree().map_or(-1, |d| d as i32))
    })
}

/// # Safety
/// `p` must be a valid handle; `out_re`, `out_im` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn periodlab_polynomial_eval(
    p: *const PeriodlabPolynomial,
    x_re: f64,
    x_im: f64,
    y_re: f64,
    y_im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> PeriodlabStatus {
    guard(|| {
        let v = poly_ref(p)?.eval(C64::new(x_re, x_im), C64::new(y_re, y_im));
        put(out_re, v.re)?;
        put(out_im, v.im)
    })
}

/// Normal form of `p` as a new handle.
///
/// # Safety
/// `p` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn periodlab_polynomial_normalize(
    p: *const PeriodlabPolynomial,
    mode: PeriodlabMode,
    out: *mut *mut PeriodlabPolynomial,
) -> PeriodlabStatus {
    guard(|| {
        let h = poly_ref(p)?;
        let mode = match mode {
            PeriodlabMode::Weak => NormalizationMode::Weak,
            PeriodlabMode::Normalized => NormalizationMode::Normalized,
            PeriodlabMode::UnitScaled => NormalizationMode::UnitScaled,
            PeriodlabMode::CentrallyRescaled => NormalizationMode::CentrallyRescaled,
        };
        let nz = normalize(h, mode, &Config::default()).map_err(lib_err)?;
        put(out, Box::into_raw(Box::new(PeriodlabPolynomial(nz.poly))))
    })
}

/// Writes the critical values sorted by `(re, im)`. `len` receives the count; with a
/// capacity below it nothing is written and `BUFFER_TOO_SMALL` is returned.
///
/// # Safety
/// `re` and `im` must hold `cap` elements (may be null when `cap` is 0).
#[no_mangle]
pub unsafe extern "C" fn periodlab_critical_values(
    p: *const PeriodlabPolynomial,
    re: *mut f64,
    im: *mut f64,
    cap: usize,
    len: *mut usize,
) -> PeriodlabStatus {
    guard(|| {
        let crit = critical_data(poly_ref(p)?, &Config::default()).map_err(lib_err)?;
        let values = crit.sorted_values();
        put(len, values.len())?;
        if cap < values.len() {
            return Err((PeriodlabStatus::BufferTooSmall, format!("need {} slots", values.len())));
        }
        if re.is_null() || im.is_null() {
            return Err(null("output array"));
        }
        for (k, v) in values.iter().enumerate() {
            re.add(k).write(v.re);
            im.add(k).write(v.im);
        }
        Ok(())
    })
}

/// Numerical period determinant against the closed form at `samples` circle points,
/// with the automatically chosen form tuple.
///
/// # Safety
/// `p` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn periodlab_verify_formula(
    p: *const PeriodlabPolynomial,
    samples: usize,
    seed: u64,
    out: *mut PeriodlabVerdict,
) -> PeriodlabStatus {
    guard(|| {
        let h = poly_ref(p)?;
        if samples < 2 {
            return Err((PeriodlabStatus::InvalidArgument, "need at least 2 samples".into()));
        }
        let cfg = Config { seed, ..Config::default() };
        let (top, _) = h.homogeneous_split().map_err(lib_err)?;
        let tuple = choose_form_tuple(&top).map_err(lib_err)?;
        let crit = critical_data(h, &cfg).map_err(lib_err)?;
        let ts = default_samples(&crit, samples);
        let (v, s) = verify_formula(h, &tuple, &ts, &cfg).map_err(lib_err)?;
        put(
            out,
            PeriodlabVerdict {
                pass: v.pass,
                max_rel_err: v.max_rel_err,
                fit_residual: s.fit_residual,
                loop_rel_change: s.loop_rel_change,
            },
        )
    })
}

/// log10 of the named bound entry (for example `"r0"` or `"delta0"`).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn periodlab_bound_log10(
    n: usize,
    c_prime: f64,
    c_doubleprime: f64,
    name: *const c_char,
    out: *mut f64,
) -> PeriodlabStatus {
    guard(|| {
        if name.is_null() {
            return Err(null("name"));
        }
        let name = CStr::from_ptr(name).to_string_lossy();
        let table = bound_table(n, c_prime, c_doubleprime, &BoundExtras::default()).map_err(lib_err)?;
        let v = table
            .get(&name)
            .ok_or_else(|| (PeriodlabStatus::InvalidArgument, format!("no bound named {name:?}")))?;
        put(out, v)
    })
}

/// Copies the last error message of this thread, NUL-terminated and truncated to
/// `cap`. Returns the full message length excluding the terminator.
///
/// # Safety
/// `buf` must hold `cap` bytes (may be null when `cap` is 0).
#[no_mangle]
pub unsafe extern "C" fn periodlab_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let k = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, k);
            buf.add(k).write(0);
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn periodlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
