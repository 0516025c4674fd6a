//! C ABI for the hyqn engine.
//!
//! Every fallible function returns a [`HyqnStatus`]. On failure the message
//! is available from [`hyqn_last_error`] on the same thread until the next
//! failing call. Objects are opaque handles released with their `_free`
//! function; passing NULL to a `_free` function is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::time::Duration;

use hyqn::latency::{self, BackendProfile};
use hyqn::{
    CircuitSpec, Dataset, Error, ExecMode, HybridModel, LrScaling, StateVector, TrainConfig,
};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HyqnStatus {
    Ok = 0,
    Config = 1,
    Index = 2,
    Numeric = 3,
    Input = 4,
    Parse = 5,
    NonFinite = 6,
    Sync = 7,
    Worker = 8,
    Checkpoint = 9,
    Io = 10,
    NullPointer = 11,
    InvalidUtf8 = 12,
    BufferTooSmall = 13,
    Panic = 14,
}

pub struct HyqnStateVector(StateVector);
pub struct HyqnModel(HybridModel);
pub struct HyqnDataset(Dataset);

/// Training options. Obtain defaults from [`hyqn_train_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HyqnTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub base_lr: f64,
    pub momentum: f64,
    pub workers: usize,
    pub seed: u64,
    /// True multiplies the base rate by the worker count.
    pub linear_lr_scaling: bool,
    pub step_decay: bool,
    /// True runs all workers on the calling thread.
    pub serial: bool,
    pub barrier_timeout_ms: u64,
}

/// Outcome of [`hyqn_train`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HyqnTrainSummary {
    pub final_loss: f64,
    pub train_accuracy: f64,
    /// NaN when no validation set was given.
    pub val_accuracy: f64,
    pub circuit_evals: u64,
    pub steps: usize,
    pub wall_seconds: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(HyqnStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Config(_) => HyqnStatus::Config,
            Error::Index { .. } => HyqnStatus::Index,
            Error::Numeric(_) => HyqnStatus::Numeric,
            Error::Input(_) => HyqnStatus::Input,
            Error::Parse { .. } => HyqnStatus::Parse,
            Error::NonFinite(_) => HyqnStatus::NonFinite,
            Error::Sync(_) => HyqnStatus::Sync,
            Error::Worker { .. } => HyqnStatus::Worker,
            Error::Checkpoint(_) => HyqnStatus::Checkpoint,
            Error::Io(_) => HyqnStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(HyqnStatus::NullPointer, format!("{what} is NULL"))
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HyqnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HyqnStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            HyqnStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn as_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    unsafe { p.as_mut() }.ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Failure(HyqnStatus::InvalidUtf8, "path is not valid UTF-8".into()))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

unsafe fn store<T>(out: *mut T, value: T) -> Result<(), Failure> {
    let slot = unsafe { as_mut(out, "out") }?;
    *slot = value;
    Ok(())
}

/// Message for the last failing call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hyqn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

// State vectors.

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hyqn_statevector_new(
    num_qubits: usize,
    out: *mut *mut HyqnStateVector,
) -> HyqnStatus {
    guard(|| unsafe { emit(out, HyqnStateVector(StateVector::zero(num_qubits)?)) })
}

/// # Safety
/// `sv` must come from [`hyqn_statevector_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hyqn_statevector_free(sv: *mut HyqnStateVector) {
    if !sv.is_null() {
        drop(unsafe { Box::from_raw(sv) });
    }
}

/// # Safety
/// `sv` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hyqn_statevector_apply_h(
    sv: *mut HyqnStateVector,
    wire: usize,
) -> HyqnStatus {
    guard(|| Ok(unsafe { as_mut(sv, "state vector") }?.0.apply_h(wire)?))
}

/// # Safety
/// `sv` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hyqn_statevector_apply_ry(
    sv: *mut HyqnStateVector,
    wire: usize,
    theta: f64,
) -> HyqnStatus {
    guard(|| {
        Ok(unsafe { as_mut(sv, "state vector") }?
            .0
            .apply_ry(wire, theta)?)
    })
}

/// # Safety
/// `sv` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hyqn_statevector_apply_cnot(
    sv: *mut HyqnStateVector,
    control: usize,
    target: usize,
) -> HyqnStatus {
    guard(|| {
        Ok(unsafe { as_mut(sv, "state vector") }?
            .0
            .apply_cnot(control, target)?)
    })
}

/// # Safety
/// `sv` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hyqn_statevector_expect_z(
    sv: *const HyqnStateVector,
    wire: usize,
    out: *mut f64,
) -> HyqnStatus {
    guard(|| unsafe {
        let z = as_ref(sv, "state vector")?.0.expect_z(wire)?;
        store(out, z)
    })
}

// Models.

/// Seeded random initialisation.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hyqn_model_new(
    qubits: usize,
    depth: usize,
    feature_dim: usize,
    num_classes: usize,
    seed: u64,
    out: *mut *mut HyqnModel,
) -> HyqnStatus {
    guard(|| unsafe {
        let spec = CircuitSpec::new(qubits, depth)?;
        emit(
            out,
            HyqnModel(HybridModel::init(spec, feature_dim, num_classes, seed)?),
        )
    })
}

/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hyqn_model_free(model: *mut HyqnModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Number of trainable scalars, or 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hyqn_model_num_params(model: *const HyqnModel) -> usize {
    unsafe { model.as_ref() }.map_or(0, |m| m.0.num_params())
}

/// Copies the flat parameter vector into `buf`.
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn hyqn_model_params(
    model: *const HyqnModel,
    buf: *mut f64,
    len: usize,
) -> HyqnStatus {
    guard(|| unsafe {
        let p = as_ref(model, "model")?.0.params();
        if len < p.len() {
            return Err(Failure(
                HyqnStatus::BufferTooSmall,
                format!("need {} doubles, got {len}", p.len()),
            ));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(p.as_ptr(), buf, p.len());
        Ok(())
    })
}

/// Writes `num_classes` logits for one feature vector.
///
/// # Safety
/// `features` must hold `num_features` doubles and `logits` `logits_len`.
#[no_mangle]
pub unsafe extern "C" fn hyqn_model_forward(
    model: *const HyqnModel,
    features: *const f64,
    num_features: usize,
    logits: *mut f64,
    logits_len: usize,
) -> HyqnStatus {
    guard(|| unsafe {
        let out = as_ref(model, "model")?
            .0
            .forward(slice(features, num_features, "features")?)?;
        if logits_len < out.len() {
            return Err(Failure(
                HyqnStatus::BufferTooSmall,
                format!("need {} logits, got {logits_len}", out.len()),
            ));
        }
        if logits.is_null() {
            return Err(null("logits"));
        }
        ptr::copy_nonoverlapping(out.as_ptr(), logits, out.len());
        Ok(())
    })
}

/// # Safety
/// `features` must hold `num_features` doubles and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn hyqn_model_predict(
    model: *const HyqnModel,
    features: *const f64,
    num_features: usize,
    out: *mut usize,
) -> HyqnStatus {
    guard(|| unsafe {
        let c = as_ref(model, "model")?
            .0
            .predict(slice(features, num_features, "features")?)?;
        store(out, c)
    })
}

/// # Safety
/// `path` must be a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn hyqn_model_save(
    model: *const HyqnModel,
    path: *const c_char,
) -> HyqnStatus {
    guard(|| unsafe {
        Ok(hyqn::checkpoint::save(
            &as_ref(model, "model")?.0,
            self::path(path)?,
        )?)
    })
}

/// # Safety
/// `path` must be a NUL-terminated UTF-8 string and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn hyqn_model_load(
    path: *const c_char,
    out: *mut *mut HyqnModel,
) -> HyqnStatus {
    guard(|| unsafe { emit(out, HyqnModel(hyqn::checkpoint::load(self::path(path)?)?)) })
}

/// Fraction of `data` classified correctly.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn hyqn_model_evaluate(
    model: *const HyqnModel,
    data: *const HyqnDataset,
    out: *mut f64,
) -> HyqnStatus {
    guard(|| unsafe {
        let acc =
            hyqn::hybridnet::evaluate(&as_ref(model, "model")?.0, &as_ref(data, "dataset")?.0)?;
        store(out, acc)
    })
}

// Datasets.

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hyqn_dataset_synthetic(
    n: usize,
    feature_dim: usize,
    num_classes: usize,
    margin: f64,
    seed: u64,
    out: *mut *mut HyqnDataset,
) -> HyqnStatus {
    guard(|| unsafe {
        let d = hyqn::dataplane::generate_synthetic(n, feature_dim, num_classes, margin, seed)?;
        emit(out, HyqnDataset(d))
    })
}

/// Loads a headerless CSV: integer label, then features.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn hyqn_dataset_load_csv(
    path: *const c_char,
    out: *mut *mut HyqnDataset,
) -> HyqnStatus {
    guard(|| unsafe {
        emit(
            out,
            HyqnDataset(hyqn::dataplane::load_csv(self::path(path)?)?),
        )
    })
}

/// Splits off a seeded validation fraction. Both outputs are new handles.
///
/// # Safety
/// `data` must be live and both outputs valid.
#[no_mangle]
pub unsafe extern "C" fn hyqn_dataset_split(
    data: *const HyqnDataset,
    holdout: f64,
    seed: u64,
    train_out: *mut *mut HyqnDataset,
    validation_out: *mut *mut HyqnDataset,
) -> HyqnStatus {
    guard(|| unsafe {
        if train_out.is_null() || validation_out.is_null() {
            return Err(null("out"));
        }
        let s = as_ref(data, "dataset")?.0.split_holdout(holdout, seed)?;
        emit(train_out, HyqnDataset(s.train))?;
        emit(validation_out, HyqnDataset(s.validation))
    })
}

/// # Safety
/// `data` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hyqn_dataset_free(data: *mut HyqnDataset) {
    if !data.is_null() {
        drop(unsafe { Box::from_raw(data) });
    }
}

/// Sample count, or 0 for NULL.
///
/// # Safety
/// `data` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hyqn_dataset_len(data: *const HyqnDataset) -> usize {
    unsafe { data.as_ref() }.map_or(0, |d| d.0.len())
}

/// # Safety
/// `data` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hyqn_dataset_feature_dim(data: *const HyqnDataset) -> usize {
    unsafe { data.as_ref() }.map_or(0, |d| d.0.feature_dim())
}

/// # Safety
/// `data` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hyqn_dataset_num_classes(data: *const HyqnDataset) -> usize {
    unsafe { data.as_ref() }.map_or(0, |d| d.0.num_classes())
}

// Training.

#[no_mangle]
pub extern "C" fn hyqn_train_config_default() -> HyqnTrainConfig {
    let d = TrainConfig::default();
    HyqnTrainConfig {
        epochs: d.epochs,
        batch_size: d.batch_size,
        base_lr: d.base_lr,
        momentum: d.momentum,
        workers: d.workers,
        seed: d.seed,
        linear_lr_scaling: d.lr_scaling == LrScaling::Linear,
        step_decay: d.step_decay,
        serial: d.exec == ExecMode::Serial,
        barrier_timeout_ms: d.barrier_timeout.as_millis() as u64,
    }
}

/// Trains `model` in place. `validation` may be NULL; `summary` may be NULL.
///
/// # Safety
/// Handles must be live; `config` must point to an initialised struct.
#[no_mangle]
pub unsafe extern "C" fn hyqn_train(
    model: *mut HyqnModel,
    train: *const HyqnDataset,
    validation: *const HyqnDataset,
    config: *const HyqnTrainConfig,
    summary: *mut HyqnTrainSummary,
) -> HyqnStatus {
    guard(|| unsafe {
        let model = as_mut(model, "model")?;
        let train = &as_ref(train, "training set")?.0;
        let validation = validation.as_ref().map(|v| &v.0);
        let c = as_ref(config, "config")?;
        let cfg = TrainConfig {
            epochs: c.epochs,
            batch_size: c.batch_size,
            base_lr: c.base_lr,
            momentum: c.momentum,
            workers: c.workers,
            seed: c.seed,
            lr_scaling: if c.linear_lr_scaling {
                LrScaling::Linear
            } else {
                LrScaling::Unscaled
            },
            step_decay: c.step_decay,
            exec: if c.serial {
                ExecMode::Serial
            } else {
                ExecMode::Threaded
            },
            verify_replicas: false,
            barrier_timeout: Duration::from_millis(c.barrier_timeout_ms),
        };
        let report = hyqn::ddp::train_distributed(&model.0, train, validation, &cfg)?;
        let last = report.final_metrics().clone();
        model.0 = report.model;
        if let Some(s) = summary.as_mut() {
            *s = HyqnTrainSummary {
                final_loss: last.mean_loss,
                train_accuracy: last.train_accuracy,
                val_accuracy: last.val_accuracy.unwrap_or(f64::NAN),
                circuit_evals: report.circuit_evals,
                steps: report.steps,
                wall_seconds: report.wall_seconds,
            };
        }
        Ok(())
    })
}

// Latency model.

/// Circuit jobs one training epoch submits.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hyqn_jobs_per_epoch(
    n_train: u64,
    qubits: usize,
    depth: usize,
    out: *mut u64,
) -> HyqnStatus {
    guard(|| unsafe {
        store(
            out,
            latency::jobs_per_epoch(n_train, CircuitSpec::new(qubits, depth)?),
        )
    })
}

/// Projected wall-clock seconds for a full run on a remote backend.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hyqn_projected_seconds(
    n_train: u64,
    qubits: usize,
    depth: usize,
    epochs: u64,
    seconds_per_job: f64,
    queue_seconds: f64,
    out: *mut f64,
) -> HyqnStatus {
    guard(|| unsafe {
        let profile = BackendProfile::new("ffi", seconds_per_job, queue_seconds, None)?;
        let spec = CircuitSpec::new(qubits, depth)?;
        let r = latency::feasibility_report(n_train, spec, epochs, &profile, f64::INFINITY)?;
        store(out, r.projected_seconds)
    })
}
