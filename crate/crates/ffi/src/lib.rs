//! C ABI for the simulator.
//!
//! Every function returns a [`QamStatus`]; results come back through out
//! pointers. On failure the message is kept per thread and can be copied
//! out with [`qam_last_error`]. Networks are opaque handles owned by the
//! caller and released with [`qam_network_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, UnwindSafe};
use std::ptr;
use std::slice;

use num_complex::Complex64;
use qam_onn::energy::{client_activation_energy, energy_equivalent_levels, equivalence_table, Variant};
use qam_onn::network::{Backend, Checkpoint, NetworkInput, QuantizedNetwork, ValueKind};
use qam_onn::photonics::{iq_inner_product, NoiseModel};
use qam_onn::quant::{quantize_1d, quantize_complex, Constellation1D, ConstellationQam};
use qam_onn::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QamStatus {
    Ok = 0,
    NullPointer = 1,
    Input = 2,
    Config = 3,
    Format = 4,
    Range = 5,
    Training = 6,
    Io = 7,
    Serde = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QamComplex {
    pub re: f64,
    pub im: f64,
}

impl From<QamComplex> for Complex64 {
    fn from(z: QamComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

impl From<Complex64> for QamComplex {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QamVariant {
    QamNet = 0,
    LevelEquivalent = 1,
    HardwareEquivalent = 2,
    EnergyEquivalent = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QamEquivalenceRow {
    pub variant: QamVariant,
    pub total_levels: u64,
    pub bits_per_value: f64,
    pub weight_values: u64,
    pub energy_per_value: f64,
}

/// A loaded checkpoint, ready for digital inference with its training
/// constellation.
pub struct QamNetwork {
    net: QuantizedNetwork,
    input_size: usize,
    classes: usize,
    embedded: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

enum Failure {
    Null(&'static str),
    Lib(Error),
    Small(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn status_of(e: &Error) -> QamStatus {
    match e {
        Error::Input(_) => QamStatus::Input,
        Error::Config(_) => QamStatus::Config,
        Error::Format { .. } => QamStatus::Format,
        Error::Range(_) => QamStatus::Range,
        Error::Training(_) => QamStatus::Training,
        Error::Io { .. } => QamStatus::Io,
        Error::Serde(_) => QamStatus::Serde,
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure> + UnwindSafe) -> QamStatus {
    match catch_unwind(f) {
        Ok(Ok(())) => {
            set_error(String::new());
            QamStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            QamStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Small(need))) => {
            set_error(format!("output buffer too small: need {need} entries"));
            QamStatus::BufferTooSmall
        }
        Err(_) => {
            set_error("internal panic".into());
            QamStatus::Panic
        }
    }
}

fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    // SAFETY: callers pass either null or a valid, writable pointer.
    unsafe { p.as_mut() }.ok_or(Failure::Null(what))
}

fn input<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    // SAFETY: non-null and, per the contract, valid for `len` reads.
    Ok(unsafe { slice::from_raw_parts(p, len) })
}

/// Copies the calling thread's last error message, NUL-terminated and
/// truncated to `cap` bytes. Returns the full message length in bytes.
///
/// # Safety
/// Pointer arguments must be null or valid for the documented extent.
#[no_mangle]
pub unsafe extern "C" fn qam_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            // SAFETY: `buf` is writable for `cap` bytes per the contract.
            unsafe {
                ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Nearest point of the `levels`-point grid on [-1, 1].
///
/// # Safety
/// Pointer arguments must be null or valid for the documented extent.
#[no_mangle]
pub unsafe extern "C" fn qam_quantize_1d(x: f64, levels: u32, result: *mut f64) -> QamStatus {
    guard(|| {
        let c = Constellation1D::new(levels)?;
        *out(result, "result")? = quantize_1d(x, &c)?;
        Ok(())
    })
}

/// Nearest symbol of the square QAM grid with `side` levels per axis.
///
/// # Safety
/// Pointer arguments must be null or valid for the documented extent.
#[no_mangle]
pub unsafe extern "C" fn qam_quantize_complex(z: QamComplex, side: u32, result: *mut QamComplex) -> QamStatus {
    guard(|| {
        let c = ConstellationQam::new(side)?;
        *out(result, "result")? = quantize_complex(z.into(), &c)?.into();
        Ok(())
    })
}

/// `sum_j w_j conj(x_j)` on the simulated I/Q engine. `side == 0`
/// disables quantization; `snr_db` may be `INFINITY` for a noiseless run.
///
/// # Safety
/// Pointer arguments must be null or valid for the documented extent.
#[no_mangle]
pub unsafe extern "C" fn qam_iq_inner_product(
    w: *const QamComplex,
    x: *const QamComplex,
    n: usize,
    side: u32,
    snr_db: f64,
    seed: u64,
    result: *mut QamComplex,
) -> QamStatus {
    guard(|| {
        let w: Vec<Complex64> = input(w, n, "w")?.iter().map(|&v| v.into()).collect();
        let x: Vec<Complex64> = input(x, n, "x")?.iter().map(|&v| v.into()).collect();
        let q = if side == 0 { None } else { Some(ConstellationQam::new(side)?) };
        let mut noise = NoiseModel::new(snr_db, seed)?.source();
        let r = out(result, "result")?;
        *r = iq_inner_product(&w, &x, q.as_ref(), &mut noise)?.into();
        Ok(())
    })
}

/// # Safety
/// Pointer arguments must be null or valid for the documented extent.
#[no_mangle]
pub unsafe extern "C" fn qam_energy_equivalent_levels(total_levels: u64, result: *mut u64) -> QamStatus {
    guard(|| {
        *out(result, "result")? = energy_equivalent_levels(total_levels)?;
        Ok(())
    })
}

/// Fills `rows[0..4]` with the equivalence table for a `w x w` input,
/// `h` hidden neurons and `c` classes.
///
/// # Safety
/// Pointer arguments must be null or valid for the documented extent.
#[no_mangle]
pub unsafe extern "C" fn qam_equivalence_table(
    total_levels: u64,
    w: u64,
    h: u64,
    c: u64,
    rows: *mut QamEquivalenceRow,
) -> QamStatus {
    guard(|| {
        if rows.is_null() {
            return Err(Failure::Null("rows"));
        }
        let table = equivalence_table(total_levels, w, h, c)?;
        for (i, r) in table.iter().enumerate() {
            let variant = match r.variant {
                Variant::QamNet => QamVariant::QamNet,
                Variant::LevelEq1D => QamVariant::LevelEquivalent,
                Variant::HardwareEq1D => QamVariant::HardwareEquivalent,
                Variant::EnergyEq1D => QamVariant::EnergyEquivalent,
            };
            // SAFETY: `rows` is writable for four entries per the contract.
            unsafe {
                rows.add(i).write(QamEquivalenceRow {
                    variant,
                    total_levels: r.total_levels,
                    bits_per_value: r.bits_per_value,
                    weight_values: r.weight_values,
                    energy_per_value: r.energy_per_value,
                });
            }
        }
        Ok(())
    })
}

/// Client activation energy in units of Δ² for layer sizes `h_0..h_{L+1}`.
///
/// # Safety
/// Pointer arguments must be null or valid for the documented extent.
#[no_mangle]
pub unsafe extern "C" fn qam_client_activation_energy(
    sizes: *const usize,
    n_sizes: usize,
    total_levels: u64,
    complex_valued: bool,
    result: *mut f64,
) -> QamStatus {
    guard(|| {
        let sizes = input(sizes, n_sizes, "sizes")?;
        let kind = if complex_valued { ValueKind::Complex } else { ValueKind::Real };
        *out(result, "result")? = client_activation_energy(sizes, total_levels, kind)?;
        Ok(())
    })
}

/// Loads a checkpoint file. On success `*network` owns a new handle.
///
/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qam_network_load(path: *const c_char, network: *mut *mut QamNetwork) -> QamStatus {
    guard(|| {
        if path.is_null() {
            return Err(Failure::Null("path"));
        }
        // SAFETY: checked non-null; NUL termination is the caller's contract.
        let path = unsafe { CStr::from_ptr(path) }
            .to_str()
            .map_err(|_| Error::Input("path is not UTF-8".into()))?;
        let slot = out(network, "network")?;
        let ck = Checkpoint::load(path)?;
        let handle = QamNetwork {
            input_size: ck.state.spec.input_size(),
            classes: ck.state.spec.classes(),
            embedded: ck.state.spec.has_embedding,
            net: QuantizedNetwork::new(&ck.state, &ck.constellation)?,
        };
        *slot = Box::into_raw(Box::new(handle));
        Ok(())
    })
}

/// Releases a handle from [`qam_network_load`]; null is ignored.
///
/// # Safety
/// `network` must come from `qam_network_load` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qam_network_free(network: *mut QamNetwork) {
    if !network.is_null() {
        // SAFETY: created by Box::into_raw in qam_network_load.
        drop(unsafe { Box::from_raw(network) });
    }
}

fn handle<'a>(network: *const QamNetwork) -> Result<&'a QamNetwork, Failure> {
    // SAFETY: handles come from qam_network_load.
    unsafe { network.as_ref() }.ok_or(Failure::Null("network"))
}

/// # Safety
/// Pointer arguments must be null or valid for the documented extent.
#[no_mangle]
pub unsafe extern "C" fn qam_network_input_size(network: *const QamNetwork, result: *mut usize) -> QamStatus {
    guard(|| {
        *out(result, "result")? = handle(network)?.input_size;
        Ok(())
    })
}

/// # Safety
/// Pointer arguments must be null or valid for the documented extent.
#[no_mangle]
pub unsafe extern "C" fn qam_network_classes(network: *const QamNetwork, result: *mut usize) -> QamStatus {
    guard(|| {
        *out(result, "result")? = handle(network)?.classes;
        Ok(())
    })
}

fn write_logits(logits: Vec<f64>, dst: *mut f64, cap: usize) -> Result<(), Failure> {
    if cap < logits.len() {
        return Err(Failure::Small(logits.len()));
    }
    if dst.is_null() {
        return Err(Failure::Null("logits"));
    }
    // SAFETY: `dst` is writable for `cap >= logits.len()` entries.
    unsafe { ptr::copy_nonoverlapping(logits.as_ptr(), dst, logits.len()) };
    Ok(())
}

/// Digital logits for pixel input (values 0..255). Networks with an
/// embedding look pixels up; real networks scale them to [0, 1].
///
/// # Safety
/// Pointer arguments must be null or valid for the documented extent.
#[no_mangle]
pub unsafe extern "C" fn qam_network_forward_pixels(
    network: *const QamNetwork,
    pixels: *const u8,
    n_pixels: usize,
    logits: *mut f64,
    logits_cap: usize,
) -> QamStatus {
    guard(|| {
        let h = handle(network)?;
        let px = input(pixels, n_pixels, "pixels")?;
        let l = h.net.logits(NetworkInput::Pixels(px), &mut Backend::Digital)?;
        write_logits(l, logits, logits_cap)
    })
}

/// Digital logits for complex input of a network without an embedding.
///
/// # Safety
/// Pointer arguments must be null or valid for the documented extent.
#[no_mangle]
pub unsafe extern "C" fn qam_network_forward_complex(
    network: *const QamNetwork,
    values: *const QamComplex,
    n_values: usize,
    logits: *mut f64,
    logits_cap: usize,
) -> QamStatus {
    guard(|| {
        let h = handle(network)?;
        if h.embedded {
            return Err(Error::Config("this network takes pixel input".into()).into());
        }
        let v: Vec<Complex64> = input(values, n_values, "values")?.iter().map(|&z| z.into()).collect();
        let l = h.net.logits(NetworkInput::Complex(&v), &mut Backend::Digital)?;
        write_logits(l, logits, logits_cap)
    })
}
