//! C interface to `zeno_witness`.
//!
//! Objects are opaque heap handles released with the matching `*_free`.
//! Every fallible call returns a [`ZwStatus`]; on failure the message is
//! available from [`zw_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use zeno_witness::cli::DEFAULT_SHOTS;
use zeno_witness::linalg::{CMatrix, I};
use zeno_witness::models::qubit_rabi;
use zeno_witness::propagate::default_probe_time;
use zeno_witness::superop::{spectral_spread, verify_noise_compatibility};
use zeno_witness::witness::{design_measurement, oracle_report, run_pipeline};
use zeno_witness::{Error, ModelSpec, QuantumModel, RateMode, WitnessReport, ZenoDecomposition};

/// Result codes. `ZW_STATUS_OK` is zero; everything else is a failure.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidModel = 3,
    InvalidDecomposition = 4,
    InvalidDesign = 5,
    IllConditioned = 6,
    Inconsistent = 7,
    DimensionMismatch = 8,
    OutOfRange = 9,
    Panic = 10,
}

/// How protocol rates are obtained in [`zw_run_pipeline`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZwRateMode {
    Exact = 0,
    FiniteDifference = 1,
    Smalltime = 2,
    Sampled = 3,
}

impl From<ZwRateMode> for RateMode {
    fn from(m: ZwRateMode) -> Self {
        match m {
            ZwRateMode::Exact => RateMode::Exact,
            ZwRateMode::FiniteDifference => RateMode::FiniteDifference,
            ZwRateMode::Smalltime => RateMode::Smalltime,
            ZwRateMode::Sampled => RateMode::Sampled,
        }
    }
}

/// Open quantum system `(H, {L_a})`.
pub struct ZwModel(QuantumModel);

/// Partition of the basis into measured blocks.
pub struct ZwDecomposition(ZenoDecomposition);

/// Witness report from the oracle or the simulated pipeline.
pub struct ZwReport(WitnessReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(ZwStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidModel(_) => ZwStatus::InvalidModel,
            Error::InvalidDecomposition(_) => ZwStatus::InvalidDecomposition,
            Error::InvalidDesign(_) => ZwStatus::InvalidDesign,
            Error::IllConditioned(_) => ZwStatus::IllConditioned,
            Error::Inconsistent(_) => ZwStatus::Inconsistent,
            Error::DimensionMismatch(_) => ZwStatus::DimensionMismatch,
            _ => ZwStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: ZwStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> ZwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ZwStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            ZwStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| fail(ZwStatus::NullPointer, format!("{what} is null")))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(ZwStatus::NullPointer, "output pointer is null"));
    }
    out.write(value);
    Ok(())
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(ZwStatus::NullPointer, "output pointer is null"));
    }
    out.write(Box::into_raw(Box::new(value)));
    Ok(())
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(fail(ZwStatus::NullPointer, "string is null"));
    }
    CStr::from_ptr(s).to_str().map_err(|e| {
        fail(
            ZwStatus::InvalidArgument,
            format!("string is not UTF-8: {e}"),
        )
    })
}

unsafe fn read_matrix(dim: usize, re: *const f64, im: *const f64) -> Result<CMatrix, Failure> {
    if re.is_null() {
        return Err(fail(ZwStatus::NullPointer, "real part is null"));
    }
    let re = std::slice::from_raw_parts(re, dim * dim);
    let im = if im.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(im, dim * dim))
    };
    Ok(CMatrix::from_fn(dim, dim, |r, c| {
        let idx = r * dim + c;
        re[idx] + I * im.map_or(0.0, |v| v[idx])
    }))
}

/// Message of the last failure on this thread, or null if none occurred.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn zw_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Build a model from row-major `dim × dim` arrays. `h_im` and `jumps_im` may be
/// null for real matrices; `jumps_re`/`jumps_im` hold `n_jumps` matrices back to back.
///
/// # Safety
/// Non-null array pointers must reference the stated number of doubles.
#[no_mangle]
pub unsafe extern "C" fn zw_model_new(
    dim: usize,
    h_re: *const f64,
    h_im: *const f64,
    n_jumps: usize,
    jumps_re: *const f64,
    jumps_im: *const f64,
    out: *mut *mut ZwModel,
) -> ZwStatus {
    guard(|| {
        if dim == 0 {
            return Err(fail(
                ZwStatus::InvalidArgument,
                "dimension must be positive",
            ));
        }
        let h = read_matrix(dim, h_re, h_im)?;
        let mut jumps = Vec::with_capacity(n_jumps);
        for a in 0..n_jumps {
            let offset = a * dim * dim;
            let im = if jumps_im.is_null() {
                ptr::null()
            } else {
                jumps_im.add(offset)
            };
            if jumps_re.is_null() {
                return Err(fail(ZwStatus::NullPointer, "jump array is null"));
            }
            jumps.push(read_matrix(dim, jumps_re.add(offset), im)?);
        }
        let model = QuantumModel::new(h, jumps)?;
        emit(out, ZwModel(model))
    })
}

/// Parse a model from its JSON form
/// (`{"dim": d, "hamiltonian": [[[re, im], ...], ...], "jumps": [...]}`).
///
/// # Safety
/// `json` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn zw_model_from_json(
    json: *const c_char,
    out: *mut *mut ZwModel,
) -> ZwStatus {
    guard(|| {
        let model: QuantumModel = serde_json::from_str(read_str(json)?)
            .map_err(|e| fail(ZwStatus::InvalidModel, e.to_string()))?;
        emit(out, ZwModel(model))
    })
}

/// Driven qubit `H = (Δ/2)(cosθ·σ_z + sinθ·σ_x)` with decay `√γ·|0⟩⟨1|`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn zw_model_qubit(
    delta: f64,
    theta: f64,
    gamma: f64,
    out: *mut *mut ZwModel,
) -> ZwStatus {
    guard(|| {
        let q = qubit_rabi(delta, theta, gamma)?;
        emit(out, ZwModel(q.model))
    })
}

/// Build a model and decomposition from a model-family spec, e.g.
/// `{"family": "rollercoaster", "params": {"n": 5, "j": 2.0}, "decomposition": "edges"}`.
///
/// # Safety
/// `spec` must be a NUL-terminated string; both outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn zw_model_from_spec(
    spec: *const c_char,
    model_out: *mut *mut ZwModel,
    decomp_out: *mut *mut ZwDecomposition,
) -> ZwStatus {
    guard(|| {
        let spec: ModelSpec = serde_json::from_str(read_str(spec)?)
            .map_err(|e| fail(ZwStatus::InvalidArgument, e.to_string()))?;
        let model = spec.build_model()?;
        let decomp = spec.build_decomposition()?;
        if decomp_out.is_null() {
            return Err(fail(ZwStatus::NullPointer, "output pointer is null"));
        }
        emit(model_out, ZwModel(model))?;
        emit(decomp_out, ZwDecomposition(decomp))
    })
}

/// Hilbert-space dimension of a model, or 0 for null.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn zw_model_dim(model: *const ZwModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.dim())
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn zw_model_free(model: *mut ZwModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Decomposition from a block label per basis state (`labels[a]` is the
/// 0-based block containing state `a`). Labels must cover `0..n` without gaps.
///
/// # Safety
/// `labels` must reference `dim` entries.
#[no_mangle]
pub unsafe extern "C" fn zw_decomposition_new(
    dim: usize,
    labels: *const usize,
    out: *mut *mut ZwDecomposition,
) -> ZwStatus {
    guard(|| {
        if labels.is_null() {
            return Err(fail(ZwStatus::NullPointer, "labels are null"));
        }
        let labels = std::slice::from_raw_parts(labels, dim);
        let n = labels.iter().map(|&l| l + 1).max().unwrap_or(0);
        let mut blocks = vec![Vec::new(); n];
        for (a, &l) in labels.iter().enumerate() {
            blocks[l].push(a);
        }
        let decomp = ZenoDecomposition::new(blocks)?;
        emit(out, ZwDecomposition(decomp))
    })
}

/// Parse a decomposition from `{"blocks": [[1], [2, 3]]}` (1-based indices).
///
/// # Safety
/// `json` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn zw_decomposition_from_json(
    json: *const c_char,
    out: *mut *mut ZwDecomposition,
) -> ZwStatus {
    guard(|| {
        let decomp: ZenoDecomposition = serde_json::from_str(read_str(json)?)
            .map_err(|e| fail(ZwStatus::InvalidDecomposition, e.to_string()))?;
        emit(out, ZwDecomposition(decomp))
    })
}

/// One block per basis state.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn zw_decomposition_single_site(
    dim: usize,
    out: *mut *mut ZwDecomposition,
) -> ZwStatus {
    guard(|| {
        let decomp = ZenoDecomposition::single_site(dim)?;
        emit(out, ZwDecomposition(decomp))
    })
}

/// Number of blocks, or 0 for null.
///
/// # Safety
/// `decomp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn zw_decomposition_blocks(decomp: *const ZwDecomposition) -> usize {
    decomp.as_ref().map_or(0, |d| d.0.n())
}

/// # Safety
/// `decomp` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn zw_decomposition_free(decomp: *mut ZwDecomposition) {
    if !decomp.is_null() {
        drop(Box::from_raw(decomp));
    }
}

/// Spectral spread `λ_max(H) − λ_min(H)`.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn zw_spectral_spread(model: *const ZwModel, out: *mut f64) -> ZwStatus {
    guard(|| {
        let model = deref(model, "model")?;
        write_out(out, spectral_spread(model.0.hamiltonian()))
    })
}

/// Noise-compatibility residual of the model's jumps with the decomposition.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn zw_compatibility_residual(
    model: *const ZwModel,
    decomp: *const ZwDecomposition,
    out: *mut f64,
) -> ZwStatus {
    guard(|| {
        let model = deref(model, "model")?;
        let decomp = deref(decomp, "decomposition")?;
        write_out(out, verify_noise_compatibility(&model.0, &decomp.0)?)
    })
}

/// Closed-form susceptibilities and witness computed directly from `H`.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn zw_oracle_report(
    model: *const ZwModel,
    decomp: *const ZwDecomposition,
    out: *mut *mut ZwReport,
) -> ZwStatus {
    guard(|| {
        let model = deref(model, "model")?;
        let decomp = deref(decomp, "decomposition")?;
        let report = oracle_report(&model.0, &decomp.0)?;
        emit(out, ZwReport(report))
    })
}

/// Simulate the protocol with an automatic design and extract the witness.
/// `t_norm <= 0` uses the default probe time; `shots == 0` uses the default
/// shot count in sampled mode and is ignored otherwise.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn zw_run_pipeline(
    model: *const ZwModel,
    decomp: *const ZwDecomposition,
    mode: ZwRateMode,
    t_norm: f64,
    shots: u64,
    seed: u64,
    out: *mut *mut ZwReport,
) -> ZwStatus {
    guard(|| {
        let model = deref(model, "model")?;
        let decomp = deref(decomp, "decomposition")?;
        let t = default_probe_time(&model.0, (t_norm > 0.0).then_some(t_norm))?;
        let mut design = design_measurement(decomp.0.n(), t, None)?
            .with_mode(mode.into())
            .with_seed(seed);
        if mode == ZwRateMode::Sampled {
            design = design
                .with_shots(if shots == 0 { DEFAULT_SHOTS } else { shots })
                .with_fd_step(0.5 * t);
        }
        let report = run_pipeline(&model.0, &decomp.0, &design)?;
        emit(out, ZwReport(report))
    })
}

/// Number of blocks in the report, or 0 for null.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn zw_report_n(report: *const ZwReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.n())
}

/// Coherence witness `Ω`.
///
/// # Safety
/// `report` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn zw_report_omega(report: *const ZwReport, out: *mut f64) -> ZwStatus {
    guard(|| write_out(out, deref(report, "report")?.0.omega))
}

/// Coupling norm `‖H_ij‖₂` (0-based block indices).
///
/// # Safety
/// `report` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn zw_report_coupling_norm(
    report: *const ZwReport,
    i: usize,
    j: usize,
    out: *mut f64,
) -> ZwStatus {
    guard(|| {
        let report = deref(report, "report")?;
        let n = report.0.n();
        if i >= n || j >= n {
            return Err(fail(
                ZwStatus::OutOfRange,
                format!("({i}, {j}) outside {n} blocks"),
            ));
        }
        write_out(out, report.0.coupling_norms[(i, j)])
    })
}

/// Entry `C_ij` of the witness matrix (0-based).
///
/// # Safety
/// `report` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn zw_report_c_matrix(
    report: *const ZwReport,
    i: usize,
    j: usize,
    out: *mut f64,
) -> ZwStatus {
    guard(|| {
        let report = deref(report, "report")?;
        let n = report.0.n();
        if i >= n || j >= n {
            return Err(fail(
                ZwStatus::OutOfRange,
                format!("({i}, {j}) outside {n} blocks"),
            ));
        }
        write_out(out, report.0.c_matrix[(i, j)])
    })
}

/// Full report as JSON. Release the string with [`zw_string_free`].
///
/// # Safety
/// `report` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn zw_report_to_json(
    report: *const ZwReport,
    out: *mut *mut c_char,
) -> ZwStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(ZwStatus::NullPointer, "output pointer is null"));
        }
        let json = deref(report, "report")?.0.to_json()?;
        let json =
            CString::new(json).map_err(|e| fail(ZwStatus::InvalidArgument, e.to_string()))?;
        write_out(out, json.into_raw())
    })
}

/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn zw_report_free(report: *mut ZwReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn zw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
