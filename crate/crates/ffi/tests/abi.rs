use std::ffi::{CStr, CString};
use std::ptr;

use speclearn_ffi::*;

fn last_error() -> String {
    let p = sl_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn linear() -> *mut SlDiscretisation {
    let name = CString::new("linear1d").unwrap();
    let mut disc = ptr::null_mut();
    let st = unsafe { sl_discretisation_new(name.as_ptr(), 0, 0, &mut disc) };
    assert_eq!(st, SlStatus::Ok);
    assert!(!disc.is_null());
    disc
}

#[test]
fn direct_solve_through_the_abi() {
    let disc = linear();
    let mut dim = 0;
    let mut pdim = 0;
    unsafe {
        assert_eq!(sl_discretisation_dim(disc, &mut dim), SlStatus::Ok);
        assert_eq!(sl_discretisation_param_dim(disc, &mut pdim), SlStatus::Ok);
    }
    assert_eq!((dim, pdim), (9, 2));
    let params = [4.0, 4.0];
    let mut coeffs = vec![0.0; dim];
    let st = unsafe { sl_direct_solve(disc, params.as_ptr(), 2, coeffs.as_mut_ptr(), dim) };
    assert_eq!(st, SlStatus::Ok);
    for x in [0.1, 0.5, 0.9] {
        let (mut z, mut exact) = (0.0, 0.0);
        unsafe {
            assert_eq!(sl_evaluate(disc, coeffs.as_ptr(), dim, &x, 1, &mut z), SlStatus::Ok);
            assert_eq!(sl_exact(disc, params.as_ptr(), 2, &x, 1, &mut exact), SlStatus::Ok);
        }
        assert!((z - exact).abs() < 1e-4, "x = {x}: {z} vs {exact}");
    }
    unsafe { sl_discretisation_free(disc) };
}

#[test]
fn errors_set_status_and_message() {
    let bad = CString::new("no_such_problem").unwrap();
    let mut disc = ptr::null_mut();
    let st = unsafe { sl_discretisation_new(bad.as_ptr(), 0, 0, &mut disc) };
    assert_eq!(st, SlStatus::Config);
    assert!(disc.is_null());
    assert!(last_error().contains("no_such_problem"));

    let st = unsafe { sl_discretisation_new(ptr::null(), 0, 0, &mut disc) };
    assert_eq!(st, SlStatus::NullPointer);
    assert!(last_error().contains("name"));

    let disc = linear();
    let mut small = [0.0; 3];
    let st = unsafe { sl_direct_solve(disc, [4.0, 4.0].as_ptr(), 2, small.as_mut_ptr(), 3) };
    assert_eq!(st, SlStatus::Input);
    assert!(last_error().contains("buffer"));
    let st = unsafe { sl_direct_solve(disc, [4.0].as_ptr(), 1, small.as_mut_ptr(), 3) };
    assert_eq!(st, SlStatus::Input);
    let mut z = 0.0;
    let st = unsafe { sl_evaluate(disc, small.as_ptr(), 3, &2.0, 1, &mut z) };
    assert_ne!(st, SlStatus::Ok);
    unsafe { sl_discretisation_free(disc) };
    unsafe { sl_discretisation_free(ptr::null_mut()) };
}

#[test]
fn train_save_load_predict() {
    let disc = linear();
    let act = CString::new("tanh").unwrap();
    let mut opts = sl_train_options_default();
    opts.hidden = 4;
    opts.samples = 8;
    opts.epochs = 6;
    opts.adam_epochs = 3;
    let mut model = ptr::null_mut();
    let mut loss = f64::NAN;
    let st = unsafe { sl_train(disc, act.as_ptr(), opts, &mut model, &mut loss) };
    assert_eq!(st, SlStatus::Ok, "{}", last_error());
    assert!(loss.is_finite());

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("m.json").to_str().unwrap()).unwrap();
    let mut loaded = ptr::null_mut();
    unsafe {
        assert_eq!(sl_model_save(model, path.as_ptr()), SlStatus::Ok);
        assert_eq!(sl_model_load(path.as_ptr(), &mut loaded), SlStatus::Ok);
    }
    let mut a = [0.0; 9];
    let mut b = [0.0; 9];
    let p = [3.5, 4.5];
    unsafe {
        assert_eq!(sl_model_predict(model, disc, p.as_ptr(), 2, a.as_mut_ptr(), 9), SlStatus::Ok);
        assert_eq!(sl_model_predict(loaded, disc, p.as_ptr(), 2, b.as_mut_ptr(), 9), SlStatus::Ok);
    }
    assert_eq!(a, b);

    let (mut l2, mut linf) = (0.0, 0.0);
    let st = unsafe { sl_test_error(loaded, disc, 5, 0, 21, &mut l2, &mut linf) };
    assert_eq!(st, SlStatus::Ok);
    assert!(l2 > 0.0 && linf > 0.0);

    let gelu = CString::new("gelu").unwrap();
    let mut other = ptr::null_mut();
    let st = unsafe { sl_train(disc, gelu.as_ptr(), opts, &mut other, ptr::null_mut()) };
    assert_eq!(st, SlStatus::Config);
    assert!(other.is_null());

    unsafe {
        sl_model_free(model);
        sl_model_free(loaded);
        sl_discretisation_free(disc);
    }
}

#[test]
fn header_is_generated() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/speclearn.h")).unwrap();
    for sym in ["sl_discretisation_new", "sl_train", "sl_last_error_message", "SL_STATUS_NUMERICAL"] {
        assert!(header.contains(sym), "{sym} missing");
    }
}
