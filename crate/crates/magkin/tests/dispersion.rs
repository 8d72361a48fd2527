use magkin::dispersion::*;
use magkin::model::*;
use num_complex::Complex64;

fn unit() -> (PlasmaParams, Equilibrium) {
    (PlasmaParams::default(), Equilibrium::maxwellian())
}

#[test]
fn laplace_integral_matches_quadrature_reference() {
    // scipy quad of e^{-z t} K(t) over [0, 60] for k = (0, 0, 1).
    let (p, eq) = unit();
    let m = ModeContext::new([0, 0, 1], &p).unwrap();
    let z = Complex64::new(0.5, 0.3);
    let s = l_laplace(z, &m, &p, &eq, KernelKind::Collisionless, 0.0, 1e-12).unwrap();
    let want = Complex64::new(-0.041819727244519635, 0.013732483763307927);
    assert!((s.value - want).norm() < 1e-11, "{}", s.value);
    assert_eq!(s.method, Method::LaplaceIntegral);
}

#[test]
fn transverse_series_matches_periodic_laplace_transform() {
    // mpmath, 40 digits: ∫_0^{2pi} e^{-z t} K / (1 - e^{-2 pi z}) for k = (1, 0, 0).
    let (p, eq) = unit();
    let m = ModeContext::new([1, 0, 0], &p).unwrap();
    let z = Complex64::new(0.7, 0.2);
    let want = Complex64::new(-0.030524305516089183155, 0.0047355178305478228167);
    let s = l_series(z, &m, &p, &eq, 1e-14).unwrap();
    assert!((s.value - want).norm() < 1e-13, "{}", s.value);
    let q = l_laplace(z, &m, &p, &eq, KernelKind::Collisionless, 0.0, 1e-12).unwrap();
    assert!((q.value - want).norm() < 1e-10, "{}", q.value);
}

#[test]
fn series_derivative_matches_finite_difference() {
    let (p, eq) = unit();
    let m = ModeContext::new([2, 1, 0], &p).unwrap();
    let z = Complex64::new(0.3, 1.4);
    let h = 1e-5;
    let f = |z| l_series(z, &m, &p, &eq, 1e-15).unwrap().value;
    let fd = (f(z + h) - f(z - h)) / (2.0 * h);
    let d = dl_dz(z, &m, &p, &eq, 1e-14).unwrap();
    assert!((d - fd).norm() < 1e-8 * d.norm(), "{d} vs {fd}");
}

#[test]
fn series_rejects_cyclotron_harmonic() {
    let (p, eq) = unit();
    let m = ModeContext::new([1, 0, 0], &p).unwrap();
    let r = l_series(Complex64::new(0.0, 2.0), &m, &p, &eq, 1e-12);
    assert!(matches!(r, Err(DispersionError::PoleProximity { n: 2, .. })));
    let m3 = ModeContext::new([1, 0, 1], &p).unwrap();
    assert!(matches!(l_series(Complex64::new(1.0, 0.0), &m3, &p, &eq, 1e-12), Err(DispersionError::NotTransverse(_))));
}

#[test]
fn boundary_values_match_direct_axis_integral() {
    // scipy quad of e^{-i omega t} K(t) for k = (1, 0, 1), where K decays like e^{-t^2/2}.
    let (p, eq) = unit();
    let m = ModeContext::new([1, 0, 1], &p).unwrap();
    let cases = [
        (0.0, Complex64::new(-0.03978873577297383, 0.0)),
        (0.8, Complex64::new(-0.027483460175773702, 0.024302983274385667)),
        (2.5, Complex64::new(0.008801938018707142, 0.017456048803461716)),
    ];
    for (w, want) in cases {
        let got = l_boundary(w, &m, &p, &eq).unwrap();
        assert!((got - want).norm() < 1e-11, "omega={w}: {got} vs {want}");
    }
}

#[test]
fn boundary_value_is_limit_from_right_half_plane() {
    let (p, eq) = unit();
    let m = ModeContext::new([0, 1, 2], &p).unwrap();
    let w = 1.3;
    let b = l_boundary(w, &m, &p, &eq).unwrap();
    let inside = l_laplace(Complex64::new(1e-6, w), &m, &p, &eq, KernelKind::Collisionless, 0.0, 1e-13).unwrap();
    assert!((b - inside.value).norm() < 1e-6, "{b} vs {}", inside.value);
}

#[test]
fn principal_value_matches_closed_form() {
    // mpmath, 30 digits, after subtracting the value at the pole.
    let g = |v: f64| (-0.5 * v * v).exp();
    let v = principal_value(&g, 1.0, 40.0, 1e-13);
    assert!((v - -1.8167501781906231).abs() < 1e-10, "{v}");
}

#[test]
fn stable_modes_have_positive_margin_and_zero_winding() {
    let (p, eq) = unit();
    let grid = MarginGrid { lambda_max: 2.0, omega_max: 6.0, n_re: 8, n_im: 24 };
    for k in [[0, 0, 1], [1, 1, 1], [2, 0, 3]] {
        let m = ModeContext::new(k, &p).unwrap();
        let r = stability_margin(&m, &p, &eq, grid).unwrap();
        assert!(r.kappa > 0.5, "{k:?}: {r:?}");
        assert_eq!(winding_number(&m, &p, &eq, 40.0, 400).unwrap(), 0);
    }
}

#[test]
fn attractive_interaction_creates_an_unstable_root() {
    let p = PlasmaParams::new(6.0, 1.0, 1.0 / 6.0, 0.0, 1.0).unwrap();
    let eq = Equilibrium::maxwellian();
    let m = ModeContext::with_interaction([0, 0, 1], &p, Interaction::Attractive).unwrap();
    assert_eq!(winding_number(&m, &p, &eq, 40.0, 400).unwrap(), 1);
    let l0 = l_boundary(0.0, &m, &p, &eq).unwrap();
    assert!(l0.re > 1.0);
}
