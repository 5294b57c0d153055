//! Exercises the C ABI from Rust exactly as a C caller would.

use ddctrl_ffi::*;

fn scalar_data() -> *mut DdctrlData {
    let x = [1.0, 0.1];
    let u = [-0.4];
    let mut handle: *mut DdctrlData = std::ptr::null_mut();
    let status = unsafe {
        ddctrl_data_create(
            1,
            1,
            0,
            1,
            x.as_ptr(),
            u.as_ptr(),
            std::ptr::null(),
            &mut handle,
        )
    };
    assert_eq!(status, DdctrlStatus::Ok);
    handle
}

#[test]
fn scalar_lqr_through_the_c_abi() {
    let data = scalar_data();
    let q = [1.0];
    let r = [1.0];
    let x0 = [1.0];
    let mut k = [0.0];
    let mut gamma = 0.0;
    let status = unsafe {
        ddctrl_synth_lqr(
            data,
            q.as_ptr(),
            r.as_ptr(),
            x0.as_ptr(),
            1.2,
            std::ptr::null(),
            k.as_mut_ptr(),
            &mut gamma,
        )
    };
    assert_eq!(status, DdctrlStatus::Ok);
    assert!((k[0] + 0.4).abs() < 1e-6, "K = {}", k[0]);
    assert!((gamma - 116.0 / 99.0).abs() < 1e-3, "gamma = {gamma}");

    // below the achievable cost
    let status = unsafe {
        ddctrl_synth_lqr(
            data,
            q.as_ptr(),
            r.as_ptr(),
            x0.as_ptr(),
            1.1,
            std::ptr::null(),
            k.as_mut_ptr(),
            &mut gamma,
        )
    };
    assert_eq!(status, DdctrlStatus::Infeasible);
    let msg = unsafe { std::ffi::CStr::from_ptr(ddctrl_last_error_message()) };
    assert!(!msg.to_bytes().is_empty());

    unsafe { ddctrl_data_free(data) };
}

#[test]
fn minimize_gamma_and_oracle_cost() {
    let data = scalar_data();
    let q = [1.0];
    let r = [1.0];
    let x0 = [1.0];
    let mut k = [0.0];
    let mut gamma = 0.0;
    let status = unsafe {
        ddctrl_min_gamma_lqr(
            data,
            q.as_ptr(),
            r.as_ptr(),
            x0.as_ptr(),
            std::ptr::null(),
            k.as_mut_ptr(),
            &mut gamma,
        )
    };
    assert_eq!(status, DdctrlStatus::Ok);
    assert!((gamma - 116.0 / 99.0).abs() < 2e-3, "gamma = {gamma}");
    unsafe { ddctrl_data_free(data) };

    // oracle cost of the returned gain on the true system
    let a = [0.5];
    let b = [1.0];
    let mut cost = 0.0;
    let status = unsafe {
        ddctrl_lqr_cost(
            1,
            1,
            a.as_ptr(),
            b.as_ptr(),
            k.as_ptr(),
            q.as_ptr(),
            r.as_ptr(),
            x0.as_ptr(),
            &mut cost,
        )
    };
    assert_eq!(status, DdctrlStatus::Ok);
    assert!(cost <= gamma * (1.0 + 1e-9), "cost {cost} vs gamma {gamma}");
}

#[test]
fn h2_synthesis_identifies_e() {
    // simulate (a, b, e) = (0.5, 1, 1) by hand: x+ = 0.5 x + u + w
    let t = 6;
    let mut rng = 99u64;
    let mut next = || {
        rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1);
        ((rng >> 11) as f64) / (1u64 << 53) as f64
    };
    let mut x = vec![0.3];
    let mut u = Vec::new();
    let mut w = Vec::new();
    for _ in 0..t {
        let (ut, wt) = (next(), next());
        let xt = x.last().unwrap();
        x.push(0.5 * xt + ut + wt);
        u.push(ut);
        w.push(wt);
    }
    let mut handle: *mut DdctrlData = std::ptr::null_mut();
    let status = unsafe {
        ddctrl_data_create(1, 1, 1, t, x.as_ptr(), u.as_ptr(), w.as_ptr(), &mut handle)
    };
    assert_eq!(status, DdctrlStatus::Ok);

    let c = [1.0, 0.0];
    let d = [0.0, 1.0];
    let mut k = [0.0];
    let mut bound = 0.0;
    let mut condition = 0;
    let mut e = [0.0];
    let status = unsafe {
        ddctrl_synth_h2(
            handle,
            c.as_ptr(),
            d.as_ptr(),
            2,
            1.2,
            std::ptr::null(),
            k.as_mut_ptr(),
            &mut bound,
            &mut condition,
            e.as_mut_ptr(),
        )
    };
    assert_eq!(status, DdctrlStatus::Ok);
    assert_eq!(condition, 2);
    assert!((e[0] - 1.0).abs() < 1e-8, "identified E = {}", e[0]);
    assert!(bound < 1.2);
    unsafe { ddctrl_data_free(handle) };
}

#[test]
fn invalid_arguments_are_rejected() {
    let mut handle: *mut DdctrlData = std::ptr::null_mut();
    let status = unsafe {
        ddctrl_data_create(
            1,
            1,
            0,
            1,
            std::ptr::null(),
            std::ptr::null(),
            std::ptr::null(),
            &mut handle,
        )
    };
    assert_eq!(status, DdctrlStatus::Invalid);

    let mut out = 0.0;
    let status = unsafe { ddctrl_spectral_radius(2, std::ptr::null(), &mut out) };
    assert_eq!(status, DdctrlStatus::Invalid);

    let a = [0.0, 1.0, -0.25, 0.0];
    let status = unsafe { ddctrl_spectral_radius(2, a.as_ptr(), &mut out) };
    assert_eq!(status, DdctrlStatus::Ok);
    assert!((out - 0.5).abs() < 1e-12);
}

#[test]
fn header_is_generated() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("ddctrl.h");
    let text = std::fs::read_to_string(header).expect("cbindgen header exists");
    for needle in [
        "ddctrl_data_create",
        "ddctrl_synth_lqr",
        "ddctrl_min_gamma_lqr",
        "ddctrl_synth_h2",
        "ddctrl_last_error_message",
        "DdctrlStatus",
    ] {
        assert!(text.contains(needle), "header lacks {needle}");
    }
}
