//! C ABI over `scatterlab`.
//!
//! Every call returns an [`SlStatus`]; results come back through out
//! pointers. Objects are opaque handles released by their `_free` function.
//! After a failure, [`sl_last_error`] describes it on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use scatterlab::partialwave::{amplitude, default_l_max, phase_shift_table, PhaseShiftTable};
use scatterlab::{PotentialModel, ScatterError};

/// Outcome of a call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Convergence = 4,
    Divergence = 5,
    Numerical = 6,
    Reflection = 7,
    EmptyWindow = 8,
    ResonanceProximity = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// A potential `v(r)`.
pub struct SlPotential {
    model: PotentialModel,
}

/// Phase shifts `delta_0..delta_lmax` at one momentum.
pub struct SlPhaseTable {
    table: PhaseShiftTable,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &ScatterError) -> SlStatus {
    match e {
        ScatterError::Parameter(_) | ScatterError::Config(_) => SlStatus::InvalidArgument,
        ScatterError::Domain(_) => SlStatus::Domain,
        ScatterError::Convergence(_) => SlStatus::Convergence,
        ScatterError::Divergence(_) => SlStatus::Divergence,
        ScatterError::Numerical(_) => SlStatus::Numerical,
        ScatterError::Reflection(_) => SlStatus::Reflection,
        ScatterError::Window(_) => SlStatus::EmptyWindow,
        ScatterError::ResonanceProximity(_) => SlStatus::ResonanceProximity,
    }
}

/// Runs `f`, turning errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (SlStatus, String)>) -> SlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SlStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside scatterlab".into());
            SlStatus::Panic
        }
    }
}

trait IntoFfi<T> {
    fn ffi(self) -> Result<T, (SlStatus, String)>;
}

impl<T> IntoFfi<T> for scatterlab::Result<T> {
    fn ffi(self) -> Result<T, (SlStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (SlStatus, String) {
    (SlStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (SlStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(p: *mut T, v: T, what: &str) -> Result<(), (SlStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (SlStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (SlStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Message of the last failed call on this thread, or NULL.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

unsafe fn new_potential(
    out: *mut *mut SlPotential,
    make: impl FnOnce() -> scatterlab::Result<PotentialModel>,
) -> SlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let model = make().ffi()?;
        out.write(Box::into_raw(Box::new(SlPotential { model })));
        Ok(())
    })
}

/// `v0 exp(-(r/width)^2)`
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn sl_potential_gaussian_well(v0: f64, width: f64, out: *mut *mut SlPotential) -> SlStatus {
    new_potential(out, || PotentialModel::gaussian_well(v0, width))
}

/// `g exp(-mu r) / r`
///
/// # Safety
/// As for [`sl_potential_gaussian_well`].
#[no_mangle]
pub unsafe extern "C" fn sl_potential_yukawa(g: f64, mu: f64, out: *mut *mut SlPotential) -> SlStatus {
    new_potential(out, || PotentialModel::yukawa(g, mu))
}

/// `-depth` inside `radius`.
///
/// # Safety
/// As for [`sl_potential_gaussian_well`].
#[no_mangle]
pub unsafe extern "C" fn sl_potential_square_well(depth: f64, radius: f64, out: *mut *mut SlPotential) -> SlStatus {
    new_potential(out, || PotentialModel::square_well(depth, radius))
}

/// `v0 <x>^{-rho}`
///
/// # Safety
/// As for [`sl_potential_gaussian_well`].
#[no_mangle]
pub unsafe extern "C" fn sl_potential_power_tail(v0: f64, rho: f64, out: *mut *mut SlPotential) -> SlStatus {
    new_potential(out, || PotentialModel::power_tail(v0, rho))
}

/// Smooth bump supported in the ball of `radius`.
///
/// # Safety
/// As for [`sl_potential_gaussian_well`].
#[no_mangle]
pub unsafe extern "C" fn sl_potential_compact_bump(v0: f64, radius: f64, out: *mut *mut SlPotential) -> SlStatus {
    new_potential(out, || PotentialModel::compact_bump(v0, radius))
}

/// # Safety
/// As for [`sl_potential_gaussian_well`].
#[no_mangle]
pub unsafe extern "C" fn sl_potential_zero(out: *mut *mut SlPotential) -> SlStatus {
    new_potential(out, || Ok(PotentialModel::zero()))
}

/// `v(r)`.
///
/// # Safety
/// `pot` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_potential_eval(pot: *const SlPotential, r: f64, out: *mut f64) -> SlStatus {
    guard(|| {
        let p = deref(pot, "pot")?;
        write(out, p.model.radial(r), "out")
    })
}

/// Releases a potential; NULL is ignored.
///
/// # Safety
/// `pot` must come from an `sl_potential_*` constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sl_potential_free(pot: *mut SlPotential) {
    if !pot.is_null() {
        drop(Box::from_raw(pot));
    }
}

/// Phase shifts at momentum `k`; `l_max = -1` picks the default truncation.
///
/// # Safety
/// `pot` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_phase_table_new(
    pot: *const SlPotential,
    k: f64,
    l_max: i32,
    out: *mut *mut SlPhaseTable,
) -> SlStatus {
    guard(|| {
        let p = deref(pot, "pot")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let l = match l_max {
            -1 => default_l_max(&p.model, k),
            l if l >= 0 => l as usize,
            l => return Err((SlStatus::InvalidArgument, format!("l_max must be >= -1, got {l}"))),
        };
        let table = phase_shift_table(&p.model, k, l).ffi()?;
        out.write(Box::into_raw(Box::new(SlPhaseTable { table })));
        Ok(())
    })
}

/// Number of channels, `l_max + 1`.
///
/// # Safety
/// `table` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_phase_table_len(table: *const SlPhaseTable, out: *mut usize) -> SlStatus {
    guard(|| {
        let t = deref(table, "table")?;
        write(out, t.table.delta.len(), "out")
    })
}

/// Copies the phase shifts into `buf`, which holds `len` doubles.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sl_phase_table_deltas(table: *const SlPhaseTable, buf: *mut f64, len: usize) -> SlStatus {
    guard(|| {
        let t = deref(table, "table")?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let d = &t.table.delta;
        if len < d.len() {
            return Err((SlStatus::BufferTooSmall, format!("need {} doubles, got {len}", d.len())));
        }
        ptr::copy_nonoverlapping(d.as_ptr(), buf, d.len());
        Ok(())
    })
}

/// Scattering amplitude `f(theta)` from the table.
///
/// # Safety
/// `table` must be a live handle; `re` and `im` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_phase_table_amplitude(
    table: *const SlPhaseTable,
    theta: f64,
    re: *mut f64,
    im: *mut f64,
) -> SlStatus {
    guard(|| {
        let t = deref(table, "table")?;
        if re.is_null() || im.is_null() {
            return Err(null("re/im"));
        }
        let f = amplitude(&t.table, theta).ffi()?;
        re.write(f.re);
        im.write(f.im);
        Ok(())
    })
}

/// Releases a table; NULL is ignored.
///
/// # Safety
/// `table` must come from [`sl_phase_table_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sl_phase_table_free(table: *mut SlPhaseTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// First Born amplitude at momentum `k` and angle `theta`.
///
/// # Safety
/// `pot` must be a live handle; `re` and `im` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_born_amplitude(
    pot: *const SlPotential,
    k: f64,
    theta: f64,
    re: *mut f64,
    im: *mut f64,
) -> SlStatus {
    guard(|| {
        let p = deref(pot, "pot")?;
        if re.is_null() || im.is_null() {
            return Err(null("re/im"));
        }
        let f = scatterlab::born::born_first_amplitude(&p.model, k, theta).ffi()?;
        re.write(f.re);
        im.write(f.im);
        Ok(())
    })
}

/// s-wave `exp(2i delta_0)` from a packet sent in on the half line.
///
/// # Safety
/// `pot` must be a live handle; `re` and `im` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_time_domain_smatrix(
    pot: *const SlPotential,
    k: f64,
    packet_width: f64,
    re: *mut f64,
    im: *mut f64,
) -> SlStatus {
    guard(|| {
        let p = deref(pot, "pot")?;
        if re.is_null() || im.is_null() {
            return Err(null("re/im"));
        }
        let s = scatterlab::propagator::scattering_phase_from_time_domain(&p.model, k, packet_width).ffi()?;
        re.write(s.value.re);
        im.write(s.value.im);
        Ok(())
    })
}

/// Squared Hilbert-Schmidt norm of `|v|^{1/2} (H0 + c)^{-1} |v|^{1/2}`.
///
/// # Safety
/// `pot` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_hs_norm(pot: *const SlPotential, c: f64, out: *mut f64) -> SlStatus {
    guard(|| {
        let p = deref(pot, "pot")?;
        let r = scatterlab::diagnostics::hs_norm_resolvent_weight(&p.model, c).ffi()?;
        write(out, r.value, "out")
    })
}

/// Runs a JSON scenario as `scatterlab run` would and stores its exit code.
///
/// # Safety
/// `config_json` and `out_dir` must be NUL-terminated strings; `exit_code` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_run_scenario(
    config_json: *const c_char,
    out_dir: *const c_char,
    strict: bool,
    exit_code: *mut i32,
) -> SlStatus {
    guard(|| {
        let text = c_str(config_json, "config_json")?;
        let dir = c_str(out_dir, "out_dir")?;
        if exit_code.is_null() {
            return Err(null("exit_code"));
        }
        let cfg = scatterlab::cli::ScenarioConfig::parse(text).ffi()?;
        exit_code.write(scatterlab::cli::run_config(&cfg, strict, Path::new(dir)));
        Ok(())
    })
}
