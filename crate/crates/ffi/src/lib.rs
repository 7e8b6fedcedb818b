//! C ABI for the vertcartel solvers.
//!
//! Markets, equilibria and collusion reports are opaque handles created by
//! `vc_*_new`/`vc_solve`/`vc_collude` and released with the matching
//! `vc_*_free`. Every fallible call returns a [`VcStatus`]; on failure the
//! message is available from [`vc_last_error_message`] on the same thread
//! until the next failing call. Firm indices are zero-based.
//!
//! Array getters copy into a caller buffer of `capacity` doubles and always
//! write the required length to `len_out`, so a call with `capacity = 0`
//! queries the size.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use vertcartel::cli::{render, run_scenario, CliError, Format, Overrides, Scenario};
use vertcartel::collusion::{max_collusive_bottom_price, Cartel, CollusionReport};
use vertcartel::equilibrium::{solve_nash_direct, NashSolution};
use vertcartel::market::{DiscountFactor, Market};
use vertcartel::verify::{run_verifier, Verifier};
use vertcartel::ModelError;

/// Result code of every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VcStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Scenario JSON failed to parse or validate, or a verifier name is unknown.
    Schema = 3,
    /// The model rejected the input (invalid market, failed chain, bad price, ...).
    Model = 4,
    /// The caller's buffer is shorter than the result; `len_out` holds the size needed.
    BufferTooSmall = 5,
    /// An internal panic was caught at the boundary.
    Panic = 6,
}

/// Report encoding for [`vc_run_scenario`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VcFormat {
    Json = 0,
    Csv = 1,
}

/// A validated market.
pub struct VcMarket(Market);

/// Nash equilibrium of a market.
pub struct VcEquilibrium(NashSolution);

/// Collusive schedule, deviation prices and critical discount factors.
pub struct VcCollusion(CollusionReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn fail(status: VcStatus, message: String) -> VcStatus {
    set_error(message);
    status
}

fn model_error(e: ModelError) -> VcStatus {
    fail(VcStatus::Model, format!("{}: {e}", e.kind()))
}

fn cli_error(e: CliError) -> VcStatus {
    fail(VcStatus::Schema, e.to_string())
}

/// Runs `body`, converting a panic into [`VcStatus::Panic`].
fn guard(body: impl FnOnce() -> VcStatus) -> VcStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            fail(VcStatus::Panic, format!("Panic: {msg}"))
        }
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(VcStatus::NullPointer, format!("{} is null", stringify!($p)));
        })+
    };
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, VcStatus> {
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| fail(VcStatus::InvalidUtf8, format!("InvalidUtf8: {e}")))
}

unsafe fn copy_out(
    values: &[f64],
    out: *mut f64,
    capacity: usize,
    len_out: *mut usize,
) -> VcStatus {
    if len_out.is_null() {
        return fail(VcStatus::NullPointer, "len_out is null".into());
    }
    *len_out = values.len();
    if capacity < values.len() {
        return fail(
            VcStatus::BufferTooSmall,
            format!(
                "BufferTooSmall: need {} entries, got {capacity}",
                values.len()
            ),
        );
    }
    if !values.is_empty() {
        if out.is_null() {
            return fail(VcStatus::NullPointer, "out is null".into());
        }
        ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    }
    VcStatus::Ok
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .expect("interior nuls removed")
        .into_raw()
}

/// Message of the last failing call on this thread, or null if none.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn vc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Validates a market with `n` firms and stores a new handle in `*out`.
///
/// # Safety
/// `qualities` and `costs` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vc_market_new(
    qualities: *const f64,
    costs: *const f64,
    n: usize,
    theta_lo: f64,
    theta_hi: f64,
    out: *mut *mut VcMarket,
) -> VcStatus {
    guard(|| {
        non_null!(qualities, costs, out);
        let v = std::slice::from_raw_parts(qualities, n).to_vec();
        let c = std::slice::from_raw_parts(costs, n).to_vec();
        match Market::new(v, c, theta_lo, theta_hi) {
            Ok(m) => {
                *out = Box::into_raw(Box::new(VcMarket(m)));
                VcStatus::Ok
            }
            Err(e) => model_error(e),
        }
    })
}

/// Releases a market. Null is ignored.
///
/// # Safety
/// `market` must come from [`vc_market_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vc_market_free(market: *mut VcMarket) {
    if !market.is_null() {
        drop(Box::from_raw(market));
    }
}

/// Number of firms.
///
/// # Safety
/// `market` must be a live handle; `n_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vc_market_n(market: *const VcMarket, n_out: *mut usize) -> VcStatus {
    guard(|| {
        non_null!(market, n_out);
        *n_out = (*market).0.n();
        VcStatus::Ok
    })
}

/// Highest bottom collusive price that keeps the market covered.
///
/// # Safety
/// `market` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vc_max_collusive_bottom_price(
    market: *const VcMarket,
    out: *mut f64,
) -> VcStatus {
    guard(|| {
        non_null!(market, out);
        *out = max_collusive_bottom_price(&(*market).0);
        VcStatus::Ok
    })
}

/// Nash equilibrium by the direct tridiagonal solve.
///
/// # Safety
/// `market` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vc_solve(
    market: *const VcMarket,
    out: *mut *mut VcEquilibrium,
) -> VcStatus {
    guard(|| {
        non_null!(market, out);
        match solve_nash_direct(&(*market).0) {
            Ok(nash) => {
                *out = Box::into_raw(Box::new(VcEquilibrium(nash)));
                VcStatus::Ok
            }
            Err(e) => model_error(e),
        }
    })
}

/// Releases an equilibrium. Null is ignored.
///
/// # Safety
/// `eq` must come from [`vc_solve`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vc_equilibrium_free(eq: *mut VcEquilibrium) {
    if !eq.is_null() {
        drop(Box::from_raw(eq));
    }
}

/// Shared body of the array getters.
unsafe fn get<H>(
    handle: *const H,
    out: *mut f64,
    capacity: usize,
    len_out: *mut usize,
    values: impl FnOnce(&H) -> &[f64],
) -> VcStatus {
    guard(|| {
        non_null!(handle);
        copy_out(values(&*handle), out, capacity, len_out)
    })
}

/// Equilibrium prices, one per firm.
///
/// # Safety
/// `handle` must be live; `out` must hold `capacity` writable doubles and
/// `len_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vc_equilibrium_prices(
    handle: *const VcEquilibrium,
    out: *mut f64,
    capacity: usize,
    len_out: *mut usize,
) -> VcStatus {
    get(handle, out, capacity, len_out, |h| h.0.prices.as_slice())
}

/// Price-cost margins at the equilibrium.
///
/// # Safety
/// `handle` must be live; `out` must hold `capacity` writable doubles and
/// `len_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vc_equilibrium_margins(
    handle: *const VcEquilibrium,
    out: *mut f64,
    capacity: usize,
    len_out: *mut usize,
) -> VcStatus {
    get(handle, out, capacity, len_out, |h| &h.0.margins)
}

/// Market shares (taste mass served by each firm).
///
/// # Safety
/// `handle` must be live; `out` must hold `capacity` writable doubles and
/// `len_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vc_equilibrium_shares(
    handle: *const VcEquilibrium,
    out: *mut f64,
    capacity: usize,
    len_out: *mut usize,
) -> VcStatus {
    get(handle, out, capacity, len_out, |h| &h.0.shares)
}

/// Equilibrium profits.
///
/// # Safety
/// `handle` must be live; `out` must hold `capacity` writable doubles and
/// `len_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vc_equilibrium_profits(
    handle: *const VcEquilibrium,
    out: *mut f64,
    capacity: usize,
    len_out: *mut usize,
) -> VcStatus {
    get(handle, out, capacity, len_out, |h| &h.0.profits)
}

/// Marginal consumers between adjacent firms, `n - 1` entries.
///
/// # Safety
/// `handle` must be live; `out` must hold `capacity` writable doubles and
/// `len_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vc_equilibrium_thresholds(
    handle: *const VcEquilibrium,
    out: *mut f64,
    capacity: usize,
    len_out: *mut usize,
) -> VcStatus {
    get(handle, out, capacity, len_out, |h| &h.0.thetas)
}

/// Collusive schedule with bottom price `p1c` for the covered market.
///
/// # Safety
/// `market` and `eq` must be live handles, `eq` solved from `market`;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vc_collude(
    market: *const VcMarket,
    eq: *const VcEquilibrium,
    p1c: f64,
    out: *mut *mut VcCollusion,
) -> VcStatus {
    guard(|| {
        non_null!(market, eq, out);
        let result = Cartel::new(&(*market).0, &(*eq).0).and_then(|c| c.report(p1c));
        match result {
            Ok(rep) => {
                *out = Box::into_raw(Box::new(VcCollusion(rep)));
                VcStatus::Ok
            }
            Err(e) => model_error(e),
        }
    })
}

/// Releases a collusion report. Null is ignored.
///
/// # Safety
/// `report` must come from [`vc_collude`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vc_collusion_free(report: *mut VcCollusion) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Collusive prices, one per firm.
///
/// # Safety
/// `handle` must be live; `out` must hold `capacity` writable doubles and
/// `len_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vc_collusion_prices(
    handle: *const VcCollusion,
    out: *mut f64,
    capacity: usize,
    len_out: *mut usize,
) -> VcStatus {
    get(handle, out, capacity, len_out, |h| {
        h.0.collusive_prices.as_slice()
    })
}

/// Each firm's best one-shot deviation from the collusive prices.
///
/// # Safety
/// `handle` must be live; `out` must hold `capacity` writable doubles and
/// `len_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vc_collusion_deviation_prices(
    handle: *const VcCollusion,
    out: *mut f64,
    capacity: usize,
    len_out: *mut usize,
) -> VcStatus {
    get(handle, out, capacity, len_out, |h| {
        h.0.deviation_prices.as_slice()
    })
}

/// Critical discount factor of each firm.
///
/// # Safety
/// `handle` must be live; `out` must hold `capacity` writable doubles and
/// `len_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vc_collusion_critical_deltas(
    handle: *const VcCollusion,
    out: *mut f64,
    capacity: usize,
    len_out: *mut usize,
) -> VcStatus {
    get(handle, out, capacity, len_out, |h| &h.0.critical_deltas)
}

/// Firm with the largest critical discount factor, or -1 at zero uplift.
///
/// # Safety
/// `report` must be a live handle; `firm_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vc_collusion_binding_firm(
    report: *const VcCollusion,
    firm_out: *mut i64,
) -> VcStatus {
    guard(|| {
        non_null!(report, firm_out);
        *firm_out = (*report).0.binding_firm.map_or(-1, |b| b as i64);
        VcStatus::Ok
    })
}

/// Incentive constraint value of `firm` at discount factor `delta`;
/// nonnegative when the firm prefers to keep colluding.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vc_collusion_icc(
    report: *const VcCollusion,
    firm: usize,
    delta: f64,
    out: *mut f64,
) -> VcStatus {
    guard(|| {
        non_null!(report, out);
        let rep = &(*report).0;
        let Some(triple) = rep.payoff_triples.get(firm) else {
            return model_error(ModelError::IndexOutOfRange {
                index: firm,
                limit: rep.payoff_triples.len(),
            });
        };
        match DiscountFactor::new(delta) {
            Ok(d) => {
                *out = triple.icc(d.value());
                VcStatus::Ok
            }
            Err(e) => model_error(e),
        }
    })
}

/// Runs a scenario given as JSON text and stores the rendered report in
/// `*report_out` (free with [`vc_string_free`]) and the command-line exit
/// code in `*exit_code_out`. Model failures still produce a report, with
/// `VcStatus::Ok` and a nonzero exit code; only unreadable scenarios fail.
///
/// # Safety
/// `scenario_json` must be a nul-terminated string; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn vc_run_scenario(
    scenario_json: *const c_char,
    format: VcFormat,
    report_out: *mut *mut c_char,
    exit_code_out: *mut i32,
) -> VcStatus {
    guard(|| {
        non_null!(scenario_json, report_out, exit_code_out);
        let text = match read_str(scenario_json) {
            Ok(t) => t,
            Err(status) => return status,
        };
        let report =
            match Scenario::from_json(text).and_then(|s| run_scenario(&s, Overrides::default())) {
                Ok(r) => r,
                Err(e) => return cli_error(e),
            };
        let format = match format {
            VcFormat::Json => Format::Json,
            VcFormat::Csv => Format::Csv,
        };
        *report_out = into_c_string(render(&report, format));
        *exit_code_out = report.exit_code();
        VcStatus::Ok
    })
}

/// Runs a named property verifier and stores its JSON summary in
/// `*summary_out` (free with [`vc_string_free`]). `tolerance <= 0` selects
/// the verifier's default. `*passed_out` is 1 when no counterexample was found.
///
/// # Safety
/// `name` must be a nul-terminated string; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn vc_verify(
    name: *const c_char,
    count: usize,
    seed: u64,
    tolerance: f64,
    summary_out: *mut *mut c_char,
    passed_out: *mut i32,
) -> VcStatus {
    guard(|| {
        non_null!(name, summary_out, passed_out);
        let name = match read_str(name) {
            Ok(t) => t,
            Err(status) => return status,
        };
        let verifier: Verifier = match name.parse() {
            Ok(v) => v,
            Err(e) => return cli_error(CliError::UnknownVerifier(format!("{e}"))),
        };
        let tol = (tolerance > 0.0).then_some(tolerance);
        let summary = run_verifier(verifier, count, seed, tol);
        *passed_out = summary.passed as i32;
        *summary_out = into_c_string(serde_json::to_string(&summary).expect("summaries serialize"));
        VcStatus::Ok
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
