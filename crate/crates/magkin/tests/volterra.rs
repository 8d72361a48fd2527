use magkin::volterra::*;
use num_complex::Complex64;

#[test]
fn constant_kernel_reproduces_exponential() {
    // rho = 1 - lambda ∫ rho has the exact solution e^{-lambda t}.
    let lambda = 0.8;
    let s = solve(|_| Complex64::new(1.0, 0.0), |_| -lambda, 0.01, 5.0).unwrap();
    for (t, v) in s.times().zip(&s.values) {
        assert!((v.re - (-lambda * t).exp()).abs() < 1e-4);
    }
}

#[test]
fn observed_order_is_two() {
    // rho = 1 + ∫ (t - tau) rho has the solution cosh t.
    let order = convergence_order(|_| Complex64::new(1.0, 0.0), |t| t, 0.1, 4.0).unwrap();
    assert!((order - 2.0).abs() < 0.1, "order {order}");
    let s = solve(|_| Complex64::new(1.0, 0.0), |t| t, 0.005, 4.0).unwrap();
    let last = s.values.last().unwrap().re;
    assert!((last - 4f64.cosh()).abs() < 1e-4 * 4f64.cosh(), "{last}");
}

#[test]
fn growth_trips_blow_up_guard() {
    let r = solve(|_| Complex64::new(1.0, 0.0), |_| 2.0, 0.01, 20.0);
    assert!(matches!(r, Err(VolterraError::BlowUp { .. })));
}
