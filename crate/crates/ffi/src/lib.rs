//! C ABI for the speclearn solver.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free` function. Every fallible call returns an
//! [`SlStatus`]; on failure the message is available from
//! [`sl_last_error_message`] until the next failing call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use nalgebra::DVector;
use speclearn::metrics::test_error;
use speclearn::model::{Activation, MlpParams};
use speclearn::problems::registry_get;
use speclearn::system::{CoefficientMap, Discretisation};
use speclearn::train::{fit, TrainConfig};
use speclearn::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    NullPointer = 1,
    Config = 2,
    Numerical = 3,
    Input = 4,
    Io = 5,
    Panic = 6,
}

/// A problem together with its assembled Galerkin system.
pub struct SlDiscretisation {
    inner: Discretisation,
}

/// A trained coefficient network.
pub struct SlModel {
    inner: MlpParams,
}

/// Training options; obtain defaults from [`sl_train_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SlTrainOptions {
    pub hidden: usize,
    pub samples: usize,
    pub epochs: usize,
    pub adam_epochs: usize,
    pub adam_lr: f64,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> SlStatus {
    match err {
        Error::Numerical(_) | Error::Training(_) => SlStatus::Numerical,
        Error::Input(_) | Error::Domain(_) => SlStatus::Input,
        Error::Io(_) | Error::Json(_) => SlStatus::Io,
        Error::Config(_) | Error::UnknownProblem(_) | Error::Expr { .. } => SlStatus::Config,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> SlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SlStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer passed for {what}"));
            SlStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic".into());
            SlStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn as_str<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Lib(Error::Input(format!("{what} is not valid UTF-8"))))
}

unsafe fn as_slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(p: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    p.write(value);
    Ok(())
}

unsafe fn copy_out(src: &[f64], out: *mut f64, capacity: usize) -> Result<(), Failure> {
    if capacity < src.len() {
        return Err(Failure::Lib(Error::Input(format!(
            "output buffer holds {capacity} values, {} needed",
            src.len()
        ))));
    }
    if out.is_null() {
        return Err(Failure::Null("output buffer"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

/// Message of the last failing call on this thread, or null if none.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn sl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Build the discretisation of a registered problem. `basis_n` or
/// `quad_degree` equal to 0 selects the problem default.
///
/// # Safety
/// `name` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_discretisation_new(
    name: *const c_char,
    basis_n: usize,
    quad_degree: usize,
    out: *mut *mut SlDiscretisation,
) -> SlStatus {
    guard(|| {
        let name = as_str(name, "name")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let spec = registry_get(name)?;
        let n = if basis_n == 0 { spec.defaults.basis_n } else { basis_n };
        let m = if quad_degree == 0 { spec.defaults.quad_degree } else { quad_degree };
        let inner = Discretisation::new(Arc::new(spec), n, m)?;
        out.write(Box::into_raw(Box::new(SlDiscretisation { inner })));
        Ok(())
    })
}

/// # Safety
/// `disc` must come from [`sl_discretisation_new`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sl_discretisation_free(disc: *mut SlDiscretisation) {
    if !disc.is_null() {
        drop(Box::from_raw(disc));
    }
}

/// Number of spectral coefficients.
///
/// # Safety
/// `disc` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_discretisation_dim(disc: *const SlDiscretisation, out: *mut usize) -> SlStatus {
    guard(|| {
        let d = as_ref(disc, "disc")?;
        write_out(out, d.inner.dim(), "out")
    })
}

/// Length of a parameter vector.
///
/// # Safety
/// `disc` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_discretisation_param_dim(disc: *const SlDiscretisation, out: *mut usize) -> SlStatus {
    guard(|| {
        let d = as_ref(disc, "disc")?;
        write_out(out, d.inner.problem().sampler.dim(), "out")
    })
}

/// Galerkin solve for one parameter vector; writes `dim` coefficients.
///
/// # Safety
/// `params` holds `n_params` values and `out` has room for `capacity`.
#[no_mangle]
pub unsafe extern "C" fn sl_direct_solve(
    disc: *const SlDiscretisation,
    params: *const f64,
    n_params: usize,
    out: *mut f64,
    capacity: usize,
) -> SlStatus {
    guard(|| {
        let d = as_ref(disc, "disc")?;
        let p = check_params(d, params, n_params)?;
        let omega = d.inner.direct_solve(p)?;
        copy_out(omega.as_slice(), out, capacity)
    })
}

unsafe fn check_params<'a>(d: &SlDiscretisation, params: *const f64, n: usize) -> Result<&'a [f64], Failure> {
    let want = d.inner.problem().sampler.dim();
    if n != want {
        return Err(Failure::Lib(Error::Input(format!("expected {want} parameters, got {n}"))));
    }
    as_slice(params, n, "params")
}

/// Value of the expansion with coefficients `coeffs` at one point
/// (`x`, or `(t, x)` for space-time problems).
///
/// # Safety
/// `coeffs` holds `n_coeffs` values and `point` holds `n_point`.
#[no_mangle]
pub unsafe extern "C" fn sl_evaluate(
    disc: *const SlDiscretisation,
    coeffs: *const f64,
    n_coeffs: usize,
    point: *const f64,
    n_point: usize,
    out: *mut f64,
) -> SlStatus {
    guard(|| {
        let d = as_ref(disc, "disc")?;
        let c = as_slice(coeffs, n_coeffs, "coeffs")?;
        let p = as_slice(point, n_point, "point")?;
        let grid = d.inner.grid(p.iter().map(|&v| vec![v]).collect())?;
        let values = d.inner.evaluate(&DVector::from_column_slice(c), &grid)?;
        write_out(out, values[0], "out")
    })
}

/// Exact solution of the problem at one point.
///
/// # Safety
/// `params` holds `n_params` values and `point` holds `n_point`.
#[no_mangle]
pub unsafe extern "C" fn sl_exact(
    disc: *const SlDiscretisation,
    params: *const f64,
    n_params: usize,
    point: *const f64,
    n_point: usize,
    out: *mut f64,
) -> SlStatus {
    guard(|| {
        let d = as_ref(disc, "disc")?;
        let prm = check_params(d, params, n_params)?;
        let p = as_slice(point, n_point, "point")?;
        let grid = d.inner.grid(p.iter().map(|&v| vec![v]).collect())?;
        write_out(out, d.inner.exact_on(prm, &grid)[0], "out")
    })
}

#[no_mangle]
pub extern "C" fn sl_train_options_default() -> SlTrainOptions {
    let t = TrainConfig::default();
    SlTrainOptions {
        hidden: 16,
        samples: t.sample_count,
        epochs: t.epochs,
        adam_epochs: t.adam_epochs,
        adam_lr: t.adam_lr,
        seed: t.seed,
    }
}

/// Train a network. `activation` is one of `tanh`, `sigmoid`, `relu`, `silu`.
///
/// # Safety
/// `disc` must be a live handle, `activation` a nul-terminated string and
/// `out_model` a valid pointer. `out_final_loss` may be null.
#[no_mangle]
pub unsafe extern "C" fn sl_train(
    disc: *const SlDiscretisation,
    activation: *const c_char,
    options: SlTrainOptions,
    out_model: *mut *mut SlModel,
    out_final_loss: *mut f64,
) -> SlStatus {
    guard(|| {
        let d = as_ref(disc, "disc")?;
        let act: Activation = as_str(activation, "activation")?.parse()?;
        if out_model.is_null() {
            return Err(Failure::Null("out_model"));
        }
        let cfg = TrainConfig {
            sample_count: options.samples,
            epochs: options.epochs,
            adam_epochs: options.adam_epochs,
            adam_lr: options.adam_lr,
            seed: options.seed,
            domain_measure: d.inner.problem().sampler.measure(),
            ..TrainConfig::default()
        };
        let outcome = fit(&d.inner, options.hidden, act, &cfg)?;
        if !out_final_loss.is_null() {
            out_final_loss.write(outcome.final_loss);
        }
        out_model.write(Box::into_raw(Box::new(SlModel { inner: outcome.params })));
        Ok(())
    })
}

/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_model_load(path: *const c_char, out: *mut *mut SlModel) -> SlStatus {
    guard(|| {
        let path = as_str(path, "path")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let inner = MlpParams::load(Path::new(path))?;
        out.write(Box::into_raw(Box::new(SlModel { inner })));
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sl_model_save(model: *const SlModel, path: *const c_char) -> SlStatus {
    guard(|| {
        let m = as_ref(model, "model")?;
        let path = as_str(path, "path")?;
        m.inner.save(Path::new(path))?;
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sl_model_free(model: *mut SlModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Coefficients predicted by the network for one parameter vector.
///
/// # Safety
/// `params` holds `n_params` values and `out` has room for `capacity`.
#[no_mangle]
pub unsafe extern "C" fn sl_model_predict(
    model: *const SlModel,
    disc: *const SlDiscretisation,
    params: *const f64,
    n_params: usize,
    out: *mut f64,
    capacity: usize,
) -> SlStatus {
    guard(|| {
        let m = as_ref(model, "model")?;
        let d = as_ref(disc, "disc")?;
        let p = check_params(d, params, n_params)?;
        let omega = m.inner.coefficients(&d.inner, p)?;
        copy_out(omega.as_slice(), out, capacity)
    })
}

/// Test errors on `test_count` fresh draws; `resolution` points per dimension.
///
/// # Safety
/// Handles must be live; `out_l2` and `out_linf` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sl_test_error(
    model: *const SlModel,
    disc: *const SlDiscretisation,
    test_count: usize,
    seed: u64,
    resolution: usize,
    out_l2: *mut f64,
    out_linf: *mut f64,
) -> SlStatus {
    guard(|| {
        let m = as_ref(model, "model")?;
        let d = as_ref(disc, "disc")?;
        if out_l2.is_null() || out_linf.is_null() {
            return Err(Failure::Null("error outputs"));
        }
        let report = test_error(&d.inner, &m.inner, test_count, seed, resolution)?;
        out_l2.write(report.l2_test);
        out_linf.write(report.linf_test);
        Ok(())
    })
}
