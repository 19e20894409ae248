//! C ABI over `gimli-sifa`.
//!
//! Every fallible call returns a [`GimliStatus`]; on failure the message is
//! available from [`gimli_last_error_message`] on the same thread. Objects
//! cross the boundary as opaque handles that must be released with the
//! matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gimli_sifa::attack::{attack, AttackOptions, AttackReport};
use gimli_sifa::depend::{reduce_layout, target_window, trace, Target};
use gimli_sifa::fault::{
    collect_ineffective, parse_trace_set, write_trace_set, CollectError, CollectOptions,
    FaultLocation, FaultModel, FaultSpec, TraceSet, TrialPath,
};
use gimli_sifa::gimli::{
    aead_decrypt_hooked, aead_encrypt_with, Key, Nonce, Row, SpBoxVariant, KEY_BYTES, NONCE_BYTES,
    TAG_BYTES,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GimliStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    AuthenticationFailed = 3,
    CapExceeded = 4,
    NoIneffective = 5,
    TooManyParameters = 6,
    BufferTooSmall = 7,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GimliSpBox {
    Official = 0,
    Paper = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GimliRow {
    A = 0,
    B = 1,
    C = 2,
}

impl From<GimliSpBox> for SpBoxVariant {
    fn from(v: GimliSpBox) -> Self {
        match v {
            GimliSpBox::Official => SpBoxVariant::Official,
            GimliSpBox::Paper => SpBoxVariant::Paper,
        }
    }
}

impl From<GimliRow> for Row {
    fn from(r: GimliRow) -> Self {
        match r {
            GimliRow::A => Row::A,
            GimliRow::B => Row::B,
            GimliRow::C => Row::C,
        }
    }
}

/// Opaque fault specification.
pub struct GimliFaultSpec(FaultSpec);

/// Opaque set of ineffective-fault nonces with its campaign metadata.
pub struct GimliTraceSet(TraceSet);

/// Opaque result of an attack over a whole fault window.
pub struct GimliAttackReport(AttackReport);

/// Summary of one attacked window bit.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GimliBitSummary {
    pub bit: u32,
    pub parameter_count: u32,
    pub n_used: u64,
    pub top_index: u64,
    pub top_sei: f64,
    pub tie_count: u64,
    pub ranked_len: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(GimliStatus, String);

impl Failure {
    fn invalid(msg: impl ToString) -> Self {
        Failure(GimliStatus::InvalidArgument, msg.to_string())
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard<F>(f: F) -> GimliStatus
where
    F: FnOnce() -> Result<GimliStatus, Failure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err(Failure(s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            GimliStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(GimliStatus::NullPointer, format!("{what} is null"))
}

unsafe fn bytes<'a>(p: *const u8, len: usize, what: &str) -> Result<&'a [u8], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn array<const N: usize>(p: *const u8, what: &str) -> Result<[u8; N], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(*(p as *const [u8; N]))
}

unsafe fn out_slice<'a>(p: *mut u8, len: usize, what: &str) -> Result<&'a mut [u8], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::invalid(format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(p: *mut T, v: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gimli_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static, NUL-terminated name of a status code.
#[no_mangle]
pub extern "C" fn gimli_status_name(status: GimliStatus) -> *const c_char {
    let s: &'static CStr = match status {
        GimliStatus::Ok => c"ok",
        GimliStatus::NullPointer => c"null pointer",
        GimliStatus::InvalidArgument => c"invalid argument",
        GimliStatus::AuthenticationFailed => c"authentication failed",
        GimliStatus::CapExceeded => c"trial cap exceeded",
        GimliStatus::NoIneffective => c"no ineffective faults possible",
        GimliStatus::TooManyParameters => c"too many key parameters",
        GimliStatus::BufferTooSmall => c"buffer too small",
        GimliStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Gimli-24-Cipher encryption. `key` is 32 bytes, `nonce` 16 bytes,
/// `ciphertext_out` holds `msg_len` bytes and `tag_out` 16 bytes.
///
/// # Safety
/// All pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn gimli_aead_encrypt(
    key: *const u8,
    nonce: *const u8,
    ad: *const u8,
    ad_len: usize,
    msg: *const u8,
    msg_len: usize,
    spbox: GimliSpBox,
    ciphertext_out: *mut u8,
    tag_out: *mut u8,
) -> GimliStatus {
    guard(|| {
        let key = Key::from_bytes(&array::<KEY_BYTES>(key, "key")?);
        let nonce = Nonce::from_bytes(&array::<NONCE_BYTES>(nonce, "nonce")?);
        let ad = bytes(ad, ad_len, "ad")?;
        let msg = bytes(msg, msg_len, "msg")?;
        let ct_out = out_slice(ciphertext_out, msg_len, "ciphertext_out")?;
        let tag_out = out_slice(tag_out, TAG_BYTES, "tag_out")?;
        let r = aead_encrypt_with(&key, &nonce, ad, msg, spbox.into());
        ct_out.copy_from_slice(&r.ciphertext);
        tag_out.copy_from_slice(&r.tag);
        Ok(GimliStatus::Ok)
    })
}

/// Gimli-24-Cipher decryption. Returns `AUTHENTICATION_FAILED` and leaves
/// `plaintext_out` untouched when the tag does not verify.
///
/// # Safety
/// All pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn gimli_aead_decrypt(
    key: *const u8,
    nonce: *const u8,
    ad: *const u8,
    ad_len: usize,
    ciphertext: *const u8,
    ciphertext_len: usize,
    tag: *const u8,
    spbox: GimliSpBox,
    plaintext_out: *mut u8,
) -> GimliStatus {
    guard(|| {
        let key = Key::from_bytes(&array::<KEY_BYTES>(key, "key")?);
        let nonce = Nonce::from_bytes(&array::<NONCE_BYTES>(nonce, "nonce")?);
        let tag = array::<TAG_BYTES>(tag, "tag")?;
        let ad = bytes(ad, ad_len, "ad")?;
        let ct = bytes(ciphertext, ciphertext_len, "ciphertext")?;
        let out = out_slice(plaintext_out, ciphertext_len, "plaintext_out")?;
        match aead_decrypt_hooked(&key, &nonce, ad, ct, &tag, spbox.into(), |_, _| {}) {
            Some(pt) => {
                out.copy_from_slice(&pt);
                Ok(GimliStatus::Ok)
            }
            None => Err(Failure(
                GimliStatus::AuthenticationFailed,
                "tag mismatch".to_string(),
            )),
        }
    })
}

/// Creates a fault specification. `model` uses the CLI syntax, for example
/// `"stuck-at-0"` or `"prob-bitflip:2/3,1/3"`; the fault hits the state
/// before round `round`.
///
/// # Safety
/// `model` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gimli_fault_spec_new(
    model: *const c_char,
    width: u32,
    round: u32,
    row: GimliRow,
    col: u32,
    offset: u32,
    out: *mut *mut GimliFaultSpec,
) -> GimliStatus {
    guard(|| {
        let model: FaultModel = text(model, "model")?.parse().map_err(Failure::invalid)?;
        if round == 0 || round > 23 {
            return Err(Failure::invalid(format!("round {round} outside 1..=23")));
        }
        let location = FaultLocation {
            boundary: round + 1,
            row: row.into(),
            col: col as usize,
            offset,
        };
        let spec = FaultSpec::new(model, width, location).map_err(Failure::invalid)?;
        write_out(out, Box::into_raw(Box::new(GimliFaultSpec(spec))), "out")?;
        Ok(GimliStatus::Ok)
    })
}

/// # Safety
/// `spec` must come from [`gimli_fault_spec_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn gimli_fault_spec_free(spec: *mut GimliFaultSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Probability that one fault leaves the window unchanged.
///
/// # Safety
/// `spec` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gimli_fault_spec_analytic_rate(
    spec: *const GimliFaultSpec,
    out: *mut f64,
) -> GimliStatus {
    guard(|| {
        let s = &handle(spec, "spec")?.0;
        write_out(out, s.model.analytic_rate(s.width), "out")?;
        Ok(GimliStatus::Ok)
    })
}

/// Runs faulted decryptions until `target` ineffective faults are found.
/// On `CAP_EXCEEDED` the partial trace set is still stored in `out`.
///
/// # Safety
/// `key` must point to 32 bytes, `spec` be a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gimli_collect(
    key: *const u8,
    spec: *const GimliFaultSpec,
    target: usize,
    seed: u64,
    cap: u64,
    spbox: GimliSpBox,
    out: *mut *mut GimliTraceSet,
) -> GimliStatus {
    guard(|| {
        let key = Key::from_bytes(&array::<KEY_BYTES>(key, "key")?);
        let spec = &handle(spec, "spec")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let opts = CollectOptions {
            variant: spbox.into(),
            cap,
            path: TrialPath::Full,
        };
        let store = |set: TraceSet| out.write(Box::into_raw(Box::new(GimliTraceSet(set))));
        match collect_ineffective(&key, spec, target, seed, &opts) {
            Ok(set) => {
                store(set);
                Ok(GimliStatus::Ok)
            }
            Err(e @ CollectError::CapExceeded { .. }) => {
                let msg = e.to_string();
                if let CollectError::CapExceeded { partial, .. } = e {
                    store(partial);
                }
                Err(Failure(GimliStatus::CapExceeded, msg))
            }
            Err(e @ CollectError::NoIneffective(_)) => {
                Err(Failure(GimliStatus::NoIneffective, e.to_string()))
            }
            Err(e) => Err(Failure::invalid(e)),
        }
    })
}

/// Parses the text trace-file format.
///
/// # Safety
/// `input` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gimli_trace_set_parse(
    input: *const c_char,
    out: *mut *mut GimliTraceSet,
) -> GimliStatus {
    guard(|| {
        let set = parse_trace_set(text(input, "input")?).map_err(Failure::invalid)?;
        write_out(out, Box::into_raw(Box::new(GimliTraceSet(set))), "out")?;
        Ok(GimliStatus::Ok)
    })
}

/// Writes the trace file text, NUL-terminated, into `buf`. `needed` receives
/// the text length without the NUL; a too small buffer gives `BUFFER_TOO_SMALL`.
///
/// # Safety
/// `set` must be a live handle, `buf` valid for `cap` bytes (or null with
/// `cap == 0`), `needed` writable or null.
#[no_mangle]
pub unsafe extern "C" fn gimli_trace_set_write(
    set: *const GimliTraceSet,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> GimliStatus {
    guard(|| {
        let s = write_trace_set(&handle(set, "set")?.0);
        if !needed.is_null() {
            needed.write(s.len());
        }
        if cap < s.len() + 1 {
            return Err(Failure(
                GimliStatus::BufferTooSmall,
                format!("need {} bytes, got {cap}", s.len() + 1),
            ));
        }
        let out = out_slice(buf as *mut u8, s.len() + 1, "buf")?;
        out[..s.len()].copy_from_slice(s.as_bytes());
        out[s.len()] = 0;
        Ok(GimliStatus::Ok)
    })
}

/// Number of collected nonces (0 for a null handle).
///
/// # Safety
/// `set` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn gimli_trace_set_len(set: *const GimliTraceSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.n_ineff())
}

/// Number of trials the campaign ran (0 for a null handle).
///
/// # Safety
/// `set` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn gimli_trace_set_trials(set: *const GimliTraceSet) -> u64 {
    set.as_ref().map_or(0, |s| s.0.trials)
}

/// Copies nonce `index` (16 bytes) into `out`.
///
/// # Safety
/// `set` must be a live handle and `out` valid for 16 bytes.
#[no_mangle]
pub unsafe extern "C" fn gimli_trace_set_nonce(
    set: *const GimliTraceSet,
    index: usize,
    out: *mut u8,
) -> GimliStatus {
    guard(|| {
        let s = &handle(set, "set")?.0;
        let n = s.nonces.get(index).ok_or_else(|| {
            Failure::invalid(format!("index {index} out of range ({})", s.n_ineff()))
        })?;
        out_slice(out, NONCE_BYTES, "out")?.copy_from_slice(&n.to_bytes());
        Ok(GimliStatus::Ok)
    })
}

/// # Safety
/// `set` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn gimli_trace_set_free(set: *mut GimliTraceSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Ranks key hypotheses for every bit of the trace set's fault window.
/// `bias_hint` is -1 for none, otherwise the bit value expected to dominate.
///
/// # Safety
/// `set` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gimli_attack(
    set: *const GimliTraceSet,
    spbox: GimliSpBox,
    bias_hint: i32,
    keep: usize,
    out: *mut *mut GimliAttackReport,
) -> GimliStatus {
    guard(|| {
        let set = &handle(set, "set")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let bias_hint = match bias_hint {
            -1 => None,
            0 => Some(false),
            1 => Some(true),
            v => return Err(Failure::invalid(format!("bias_hint {v} not in -1, 0, 1"))),
        };
        let window = target_window(&set.spec.base_target(), set.spec.width, spbox.into())
            .map_err(Failure::invalid)?;
        let opts = AttackOptions {
            bias_hint,
            keep: keep.max(1),
        };
        match attack(&window, &set.nonces, &opts) {
            Ok(r) => {
                out.write(Box::into_raw(Box::new(GimliAttackReport(r))));
                Ok(GimliStatus::Ok)
            }
            Err(e @ gimli_sifa::attack::AttackError::TooManyParameters { .. }) => {
                Err(Failure(GimliStatus::TooManyParameters, e.to_string()))
            }
            Err(e) => Err(Failure::invalid(e)),
        }
    })
}

/// Number of window bits in the report (0 for a null handle).
///
/// # Safety
/// `report` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn gimli_attack_report_bit_count(report: *const GimliAttackReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.bits.len())
}

/// # Safety
/// `report` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gimli_attack_report_bit(
    report: *const GimliAttackReport,
    index: usize,
    out: *mut GimliBitSummary,
) -> GimliStatus {
    guard(|| {
        let r = &handle(report, "report")?.0;
        let b = r
            .bits
            .get(index)
            .ok_or_else(|| Failure::invalid(format!("bit index {index} out of range")))?;
        let summary = GimliBitSummary {
            bit: b.target.bit,
            parameter_count: b.parameter_count as u32,
            n_used: b.n_used,
            top_index: b.ranked[0].index,
            top_sei: b.ranked[0].sei,
            tie_count: b.tie_count() as u64,
            ranked_len: b.ranked.len() as u64,
        };
        write_out(out, summary, "out")?;
        Ok(GimliStatus::Ok)
    })
}

/// Hypothesis index and SEI at 0-based `rank` for window bit `index`.
///
/// # Safety
/// `report` must be a live handle; the out pointers writable.
#[no_mangle]
pub unsafe extern "C" fn gimli_attack_report_ranked(
    report: *const GimliAttackReport,
    index: usize,
    rank: usize,
    hypothesis_out: *mut u64,
    sei_out: *mut f64,
) -> GimliStatus {
    guard(|| {
        let r = &handle(report, "report")?.0;
        let s = r
            .bits
            .get(index)
            .and_then(|b| b.ranked.get(rank))
            .ok_or_else(|| Failure::invalid(format!("bit {index} rank {rank} out of range")))?;
        write_out(hypothesis_out, s.index, "hypothesis_out")?;
        write_out(sei_out, s.sei, "sei_out")?;
        Ok(GimliStatus::Ok)
    })
}

/// # Safety
/// `report` must come from [`gimli_attack`] or be null.
#[no_mangle]
pub unsafe extern "C" fn gimli_attack_report_free(report: *mut GimliAttackReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Number of hypothesis parameters of one state bit before round `round`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gimli_depmap_parameter_count(
    round: u32,
    row: GimliRow,
    col: u32,
    bit: u32,
    spbox: GimliSpBox,
    out: *mut u32,
) -> GimliStatus {
    guard(|| {
        let target = Target::new(round, row.into(), col as usize, bit);
        let expr = trace(&target, spbox.into()).map_err(Failure::invalid)?;
        write_out(out, reduce_layout(&expr).parameter_count() as u32, "out")?;
        Ok(GimliStatus::Ok)
    })
}
