//! C ABI for the `eigenadc` simulator.
//!
//! Objects cross the boundary as opaque handles created by `ea_*_new`-style
//! functions and released with the matching `ea_*_free`. Every fallible call
//! returns an [`EaStatus`]; on failure a description is available from
//! [`ea_last_error_message`] on the same thread. Panics are caught and
//! reported as [`EaStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use eigenadc::analysis::{analytic_uncoded_ber, q_function};
use eigenadc::eigenbeam::{assemble_freq_channel, eigen_decompose, EigenModes};
use eigenadc::harness::generate_channels;
use eigenadc::params::noise_variance_from_snr_db;
use eigenadc::poweralloc::{allocate, lambert_w0, AllocContext, Allocator};
use eigenadc::quantizer::quantize;
use eigenadc::svchannel::DiscreteChannel;
use eigenadc::{AdcBits, Error, SimConfig};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ConfigError = 3,
    RuntimeError = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EaAllocator {
    Eepa = 0,
    Aoepa = 1,
    Oepa = 2,
    Mmse = 3,
}

impl From<EaAllocator> for Allocator {
    fn from(a: EaAllocator) -> Self {
        match a {
            EaAllocator::Eepa => Allocator::Eepa,
            EaAllocator::Aoepa => Allocator::Aoepa,
            EaAllocator::Oepa => Allocator::Oepa,
            EaAllocator::Mmse => Allocator::Mmse,
        }
    }
}

/// Simulation configuration.
pub struct EaConfig(SimConfig);

/// Sampled MIMO channel.
pub struct EaChannel(DiscreteChannel);

/// Eigenmodes of a channel.
pub struct EaModes(EigenModes);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: EaStatus, msg: impl Into<String>) -> EaStatus {
    set_error(msg);
    status
}

fn from_error(err: Error) -> EaStatus {
    let status = if err.is_config() {
        EaStatus::ConfigError
    } else {
        match err {
            Error::InvalidArgument(_) | Error::Parse(_) | Error::PowerConstraint { .. } => EaStatus::InvalidArgument,
            _ => EaStatus::RuntimeError,
        }
    };
    fail(status, err.to_string())
}

/// Runs `f`, converting panics into [`EaStatus::Panic`].
fn guard(f: impl FnOnce() -> EaStatus) -> EaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(EaStatus::Panic, "internal panic"),
    }
}

fn adc_bits(bits: u32) -> Result<AdcBits, EaStatus> {
    match bits {
        0 => Ok(AdcBits::Full),
        1..=16 => Ok(AdcBits::Finite(bits)),
        _ => Err(fail(
            EaStatus::InvalidArgument,
            format!("bit count {bits} outside 0..=16"),
        )),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, EaStatus> {
    if p.is_null() {
        return Err(fail(EaStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(EaStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], EaStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(EaStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

macro_rules! non_null {
    ($p:expr, $what:expr) => {
        if $p.is_null() {
            return fail(EaStatus::NullPointer, concat!($what, " is null"));
        }
    };
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn ea_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Default configuration. Never null; release with [`ea_config_free`].
#[no_mangle]
pub extern "C" fn ea_config_default() -> *mut EaConfig {
    Box::into_raw(Box::new(EaConfig(SimConfig::default())))
}

/// Parses flat `key=value` text on top of the defaults.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn ea_config_parse(text: *const c_char, out: *mut *mut EaConfig) -> EaStatus {
    guard(|| {
        non_null!(out, "out");
        let text = try_status!(str_arg(text, "text"));
        match SimConfig::from_kv_str(text) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(EaConfig(c)));
                EaStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Sets one key; the configuration is unchanged if the result is invalid.
///
/// # Safety
/// `config` must come from this library; `key` and `value` must be
/// NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn ea_config_set(config: *mut EaConfig, key: *const c_char, value: *const c_char) -> EaStatus {
    guard(|| {
        non_null!(config, "config");
        let key = try_status!(str_arg(key, "key"));
        let value = try_status!(str_arg(value, "value"));
        let mut updated = (*config).0.clone();
        if let Err(e) = updated.set(key, value).and_then(|_| updated.validate()) {
            return from_error(e);
        }
        (*config).0 = updated;
        EaStatus::Ok
    })
}

/// Writes the 16-hex-digit configuration fingerprint plus NUL into `buf`.
///
/// # Safety
/// `config` must come from this library; `buf` must be valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn ea_config_fingerprint(config: *const EaConfig, buf: *mut c_char, len: usize) -> EaStatus {
    guard(|| {
        non_null!(config, "config");
        non_null!(buf, "buf");
        let fp = (*config).0.fingerprint();
        if len < fp.len() + 1 {
            return fail(EaStatus::BufferTooSmall, format!("need {} bytes", fp.len() + 1));
        }
        ptr::copy_nonoverlapping(fp.as_ptr(), buf as *mut u8, fp.len());
        *buf.add(fp.len()) = 0;
        EaStatus::Ok
    })
}

/// # Safety
/// `config` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ea_config_free(config: *mut EaConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Generates channel realization `index` of the configuration's ensemble.
///
/// # Safety
/// `config` must come from this library; `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn ea_channel_generate(
    config: *const EaConfig,
    index: usize,
    out: *mut *mut EaChannel,
) -> EaStatus {
    guard(|| {
        non_null!(config, "config");
        non_null!(out, "out");
        match generate_channels(&(*config).0, index + 1) {
            Ok(mut chs) => {
                *out = Box::into_raw(Box::new(EaChannel(chs.swap_remove(index))));
                EaStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Copies the taps of antenna pair (`rx`, `tx`) as interleaved re/im into
/// `out`, which must hold `2 * taps` doubles. `taps_out` receives the count.
///
/// # Safety
/// Pointers must be valid; `out` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ea_channel_taps(
    channel: *const EaChannel,
    rx: usize,
    tx: usize,
    out: *mut f64,
    len: usize,
    taps_out: *mut usize,
) -> EaStatus {
    guard(|| {
        non_null!(channel, "channel");
        non_null!(taps_out, "taps_out");
        let ch = &(*channel).0;
        if rx >= ch.n_rx() || tx >= ch.n_tx() {
            return fail(EaStatus::InvalidArgument, "antenna index out of range");
        }
        let taps = ch.response(rx, tx);
        *taps_out = taps.len();
        if len < 2 * taps.len() {
            return fail(EaStatus::BufferTooSmall, format!("need {} doubles", 2 * taps.len()));
        }
        non_null!(out, "out");
        for (k, t) in taps.iter().enumerate() {
            *out.add(2 * k) = t.re;
            *out.add(2 * k + 1) = t.im;
        }
        EaStatus::Ok
    })
}

/// # Safety
/// `channel` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ea_channel_free(channel: *mut EaChannel) {
    if !channel.is_null() {
        drop(Box::from_raw(channel));
    }
}

/// Eigenmodes of `channel` on the configuration's subcarrier grid.
///
/// # Safety
/// Handles must come from this library; `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn ea_modes_decompose(
    config: *const EaConfig,
    channel: *const EaChannel,
    out: *mut *mut EaModes,
) -> EaStatus {
    guard(|| {
        non_null!(config, "config");
        non_null!(channel, "channel");
        non_null!(out, "out");
        let modes = assemble_freq_channel(&(*channel).0, (*config).0.subcarriers).and_then(|fc| eigen_decompose(&fc));
        match modes {
            Ok(m) => {
                *out = Box::into_raw(Box::new(EaModes(m)));
                EaStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Number of modes, or 0 for a null handle.
///
/// # Safety
/// `modes` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn ea_modes_count(modes: *const EaModes) -> usize {
    if modes.is_null() {
        0
    } else {
        (*modes).0.count()
    }
}

/// Copies the singular values in global mode order.
///
/// # Safety
/// `modes` must come from this library; `out` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ea_modes_singular_values(modes: *const EaModes, out: *mut f64, len: usize) -> EaStatus {
    guard(|| {
        non_null!(modes, "modes");
        let sv = (*modes).0.singular_values();
        if len < sv.len() {
            return fail(EaStatus::BufferTooSmall, format!("need {} doubles", sv.len()));
        }
        if !sv.is_empty() {
            non_null!(out, "out");
            ptr::copy_nonoverlapping(sv.as_ptr(), out, sv.len());
        }
        EaStatus::Ok
    })
}

/// # Safety
/// `modes` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ea_modes_free(modes: *mut EaModes) {
    if !modes.is_null() {
        drop(Box::from_raw(modes));
    }
}

/// Allocates the configuration's budget `N·L` over `count` modes at
/// `snr_db`. `bits` is the ADC resolution, 0 for full precision. Writes
/// `count` powers to `powers`; `converged` may be null.
///
/// # Safety
/// `singular_values` and `powers` must be valid for `count` doubles.
#[no_mangle]
pub unsafe extern "C" fn ea_allocate(
    config: *const EaConfig,
    allocator: EaAllocator,
    singular_values: *const f64,
    count: usize,
    snr_db: f64,
    bits: u32,
    powers: *mut f64,
    converged: *mut bool,
) -> EaStatus {
    guard(|| {
        non_null!(config, "config");
        non_null!(powers, "powers");
        let sv = try_status!(slice_arg(singular_values, count, "singular_values"));
        let bits = try_status!(adc_bits(bits));
        let c = &(*config).0;
        let ctx = AllocContext {
            noise_variance: noise_variance_from_snr_db(snr_db),
            qam_order: c.qam_order,
            adc_bits: bits,
            alpha: c.agc_alpha,
            pqn_model: c.pqn_model,
            oepa_form: c.oepa_form,
            budget: c.power_budget(),
        };
        match allocate(allocator.into(), sv, &ctx) {
            Ok(p) => {
                ptr::copy_nonoverlapping(p.powers.as_ptr(), powers, count);
                if !converged.is_null() {
                    *converged = p.converged;
                }
                EaStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Uniform mid-point quantizer with `bits` in 1..=16.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn ea_quantize(x: f64, bits: u32, out: *mut f64) -> EaStatus {
    guard(|| {
        non_null!(out, "out");
        if !(1..=16).contains(&bits) {
            return fail(EaStatus::InvalidArgument, format!("bit count {bits} outside 1..=16"));
        }
        *out = quantize(x, bits);
        EaStatus::Ok
    })
}

/// Principal Lambert W for `z >= 0`.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn ea_lambert_w0(z: f64, out: *mut f64) -> EaStatus {
    guard(|| {
        non_null!(out, "out");
        match lambert_w0(z) {
            Ok(w) => {
                *out = w;
                EaStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Gaussian tail probability.
#[no_mangle]
pub extern "C" fn ea_q_function(x: f64) -> f64 {
    q_function(x)
}

/// Analytic `S` and first-order BER for powers on modes; `bits` 0 means
/// full precision.
///
/// # Safety
/// `powers` and `singular_values` must be valid for `count` doubles;
/// `s_out` and `ber_out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn ea_analytic_ber(
    powers: *const f64,
    singular_values: *const f64,
    count: usize,
    noise_variance: f64,
    qam_order: u32,
    bits: u32,
    alpha: f64,
    s_out: *mut f64,
    ber_out: *mut f64,
) -> EaStatus {
    guard(|| {
        non_null!(s_out, "s_out");
        non_null!(ber_out, "ber_out");
        let p = try_status!(slice_arg(powers, count, "powers"));
        let d = try_status!(slice_arg(singular_values, count, "singular_values"));
        let bits = try_status!(adc_bits(bits));
        if !matches!(qam_order, 4 | 16 | 64) {
            return fail(EaStatus::InvalidArgument, format!("unsupported QAM order {qam_order}"));
        }
        let (s, ber) = analytic_uncoded_ber(p, d, noise_variance, qam_order, bits, alpha);
        *s_out = s;
        *ber_out = ber;
        EaStatus::Ok
    })
}
