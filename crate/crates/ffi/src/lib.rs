//! C ABI over `ch_apparatus`.
//!
//! Devices are opaque `ChApparatus` handles created by the
//! `ch_apparatus_new_*` functions and released with `ch_apparatus_free`.
//! Every fallible call returns a `ChStatus`; on failure the message is
//! available from `ch_last_error_message` on the same thread. Strings
//! returned by the library must be released with `ch_string_free`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ch_apparatus::analysis::{analyze, SettingFrequencies};
use ch_apparatus::apparatus::{Apparatus, ApparatusConfig, EngravedLines, Line, PerLine, PerSetting, Setup};
use ch_apparatus::exact::{closed_form_staggered, event_probability, exact_conditional_table, ConditionalTable, EventPredicate};
use ch_apparatus::geometry::Angle;
use ch_apparatus::report::cmd_demo;
use ch_apparatus::Error;

/// Bit for line A in line masks.
pub const CH_LINE_A: u8 = 1;
/// Bit for line A'.
pub const CH_LINE_A_PRIME: u8 = 2;
/// Bit for line B.
pub const CH_LINE_B: u8 = 4;
/// Bit for line B'.
pub const CH_LINE_B_PRIME: u8 = 8;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    Consistency = 3,
    Panic = 4,
}

/// Stop placements of the modified device.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChSetup {
    Ab = 0,
    AbPrime = 1,
    APrimeB = 2,
    APrimeBPrime = 3,
    LeftA = 4,
    LeftAPrime = 5,
    RightB = 6,
    RightBPrime = 7,
}

/// Opaque validated device.
pub struct ChApparatus(Apparatus);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ChTrialOutcome {
    pub r1: f64,
    pub r2: f64,
    pub reached_left_stop: bool,
    pub reached_right_stop: bool,
    /// Crossed lines as a mask of `CH_LINE_*` bits.
    pub crossed: u8,
}

/// Conditional probabilities in the order `(a,b), (a,b'), (a',b), (a',b')`
/// for `joint`, `A, A', B, B'` for `singles`; `full` holds each setting's
/// 2x2 table as `p11, p10, p01, p00`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ChConditionalTable {
    pub joint: [f64; 4],
    pub singles: [f64; 4],
    pub full: [[f64; 4]; 4],
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ChAnalysis {
    pub naive_ch: f64,
    pub naive_ch_primed: f64,
    pub naive_ch_sum: f64,
    /// NaN when every naive conditional is undefined.
    pub naive_bayes_max: f64,
    pub corrected_ch: f64,
    pub reduced_ch: f64,
    pub identity_residual: f64,
    pub naive_violated: bool,
    pub corrected_violated: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(e: Error) -> ChStatus {
    let status = match e {
        Error::Consistency(_) => ChStatus::Consistency,
        _ => ChStatus::InvalidArgument,
    };
    set_error(e.to_string());
    status
}

fn guard(f: impl FnOnce() -> Result<(), ChStatus>) -> ChStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ChStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            ChStatus::Panic
        }
    }
}

fn null_check<T>(p: *const T, what: &str) -> Result<(), ChStatus> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        Err(ChStatus::NullPointer)
    } else {
        Ok(())
    }
}

fn table_out(t: &ConditionalTable) -> ChConditionalTable {
    let j = &t.joint;
    let s = &t.singles;
    let f = &t.full_tables;
    ChConditionalTable {
        joint: [j.ab, j.ab_prime, j.a_prime_b, j.a_prime_b_prime],
        singles: [s.a, s.a_prime, s.b, s.b_prime],
        full: [f.ab.cells(), f.ab_prime.cells(), f.a_prime_b.cells(), f.a_prime_b_prime.cells()],
    }
}

fn table_in(t: &ChConditionalTable) -> ConditionalTable {
    let mut out = ConditionalTable::zero();
    out.joint = PerSetting { ab: t.joint[0], ab_prime: t.joint[1], a_prime_b: t.joint[2], a_prime_b_prime: t.joint[3] };
    out.singles = PerLine { a: t.singles[0], a_prime: t.singles[1], b: t.singles[2], b_prime: t.singles[3] };
    out
}

unsafe fn store_handle(out: *mut *mut ChApparatus, app: Apparatus) {
    *out = Box::into_raw(Box::new(ChApparatus(app)));
}

/// Modified device with the staggered layout for `(gamma, theta)` and
/// stops placed per `setup`, one of the `ChSetup` values.
#[no_mangle]
pub unsafe extern "C" fn ch_apparatus_new_staggered(
    gamma: f64,
    theta: f64,
    setup: u32,
    out: *mut *mut ChApparatus,
) -> ChStatus {
    guard(|| {
        null_check(out, "out")?;
        let Some(&setup) = Setup::ALL.get(setup as usize) else {
            set_error(format!("unknown setup {setup}"));
            return Err(ChStatus::InvalidArgument);
        };
        let lines = EngravedLines::staggered(gamma, theta).map_err(fail)?;
        let app = ApparatusConfig::with_setup(lines, gamma, setup).validate().map_err(fail)?;
        store_handle(out, app);
        Ok(())
    })
}

/// Unmodified device with both bodies turning `gamma1`.
#[no_mangle]
pub unsafe extern "C" fn ch_apparatus_new_unmodified(
    a: f64,
    a_prime: f64,
    b: f64,
    b_prime: f64,
    gamma1: f64,
    out: *mut *mut ChApparatus,
) -> ChStatus {
    guard(|| {
        null_check(out, "out")?;
        let lines = EngravedLines::new(a, a_prime, b, b_prime).map_err(fail)?;
        let app = ApparatusConfig::unmodified(lines, gamma1).validate().map_err(fail)?;
        store_handle(out, app);
        Ok(())
    })
}

/// Releases a handle; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ch_apparatus_free(app: *mut ChApparatus) {
    if !app.is_null() {
        drop(Box::from_raw(app));
    }
}

#[no_mangle]
pub unsafe extern "C" fn ch_apparatus_run_trial(app: *const ChApparatus, phi: f64, out: *mut ChTrialOutcome) -> ChStatus {
    guard(|| {
        null_check(app, "app")?;
        null_check(out, "out")?;
        let phi = Angle::new(phi).map_err(fail)?;
        let o = (*app).0.run_trial(phi);
        *out = ChTrialOutcome {
            r1: o.r1,
            r2: o.r2,
            reached_left_stop: o.reached_left_stop,
            reached_right_stop: o.reached_right_stop,
            crossed: o.crossed.bits(),
        };
        Ok(())
    })
}

/// Exact probability that every line in `mask` is crossed (an empty mask
/// gives 1).
#[no_mangle]
pub unsafe extern "C" fn ch_apparatus_crossing_probability(app: *const ChApparatus, mask: u8, out: *mut f64) -> ChStatus {
    guard(|| {
        null_check(app, "app")?;
        null_check(out, "out")?;
        if mask & !0x0f != 0 {
            set_error(format!("line mask {mask:#x} has unknown bits"));
            return Err(ChStatus::InvalidArgument);
        }
        let bits = [CH_LINE_A, CH_LINE_A_PRIME, CH_LINE_B, CH_LINE_B_PRIME];
        let event = Line::ALL
            .iter()
            .zip(bits)
            .filter(|(_, b)| mask & b != 0)
            .fold(EventPredicate::always(), |acc, (l, _)| acc.and(&EventPredicate::crossed(*l)));
        *out = event_probability(&(*app).0, &event).map_err(fail)?;
        Ok(())
    })
}

/// Closed-form conditional table of the staggered layout.
#[no_mangle]
pub unsafe extern "C" fn ch_closed_form_table(gamma: f64, theta: f64, out: *mut ChConditionalTable) -> ChStatus {
    guard(|| {
        null_check(out, "out")?;
        *out = table_out(&closed_form_staggered(gamma, theta).map_err(fail)?);
        Ok(())
    })
}

/// Conditional table of the staggered layout from the arc-partition engine.
#[no_mangle]
pub unsafe extern "C" fn ch_exact_table(gamma: f64, theta: f64, out: *mut ChConditionalTable) -> ChStatus {
    guard(|| {
        null_check(out, "out")?;
        let lines = EngravedLines::staggered(gamma, theta).map_err(fail)?;
        *out = table_out(&exact_conditional_table(&lines, gamma).map_err(fail)?);
        Ok(())
    })
}

/// Naive and corrected CH analysis of `table` with setting frequencies
/// `freqs` (same order as `joint`).
#[no_mangle]
pub unsafe extern "C" fn ch_analyze(
    table: *const ChConditionalTable,
    freqs: *const f64,
    out: *mut ChAnalysis,
) -> ChStatus {
    guard(|| {
        null_check(table, "table")?;
        null_check(freqs, "freqs")?;
        null_check(out, "out")?;
        let f = std::slice::from_raw_parts(freqs, 4);
        let f = SettingFrequencies::new(f[0], f[1], f[2], f[3]).map_err(fail)?;
        let a = analyze(&table_in(&*table), &f).map_err(fail)?;
        *out = ChAnalysis {
            naive_ch: a.naive_ch.value,
            naive_ch_primed: a.naive_ch_primed.value,
            naive_ch_sum: a.naive_ch_sum.value,
            naive_bayes_max: a.naive_bayes.max().unwrap_or(f64::NAN),
            corrected_ch: a.corrected_ch.value,
            reduced_ch: a.reduced_ch.value,
            identity_residual: a.reduced_ch.identity_residual,
            naive_violated: a.naive_ch.violated(),
            corrected_violated: a.corrected_ch.violated(),
        };
        Ok(())
    })
}

/// Full demo report as pretty JSON. Release with `ch_string_free`.
#[no_mangle]
pub unsafe extern "C" fn ch_demo_report_json(
    gamma: f64,
    theta: f64,
    seed: u64,
    trials: u64,
    out: *mut *mut c_char,
) -> ChStatus {
    guard(|| {
        null_check(out, "out")?;
        let json = cmd_demo(gamma, theta, seed, trials).map_err(fail)?.to_json();
        *out = CString::new(json).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ch_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn ch_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
