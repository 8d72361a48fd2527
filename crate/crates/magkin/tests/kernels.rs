use magkin::kernels::*;
use magkin::model::*;
use num_complex::Complex64;

/// Charge 1.3, mass 0.7, field 0.9: cyclotron frequency 1.6714...
fn odd_params(nu: f64) -> PlasmaParams {
    PlasmaParams::new(1.3, 0.7, 0.9, nu, 1.0).unwrap()
}

#[test]
fn zero_wavevector_is_rejected() {
    let err = ModeContext::new([0, 0, 0], &PlasmaParams::default()).unwrap_err();
    assert_eq!(err.to_string(), "wavevector must be nonzero");
}

#[test]
fn orr_frequency_trivial_cases() {
    let p = PlasmaParams::default();
    let m = ModeContext::new([1, 2, 3], &p).unwrap();
    assert_eq!(eta_ct(0.0, &m, &p), [0.0, 0.0, 0.0]);
    let m = ModeContext::new([0, 0, 1], &p).unwrap();
    let e = eta_ct(5.0, &m, &p);
    assert!(e[0].abs() < 1e-15 && e[1].abs() < 1e-15 && (e[2] - 5.0).abs() < 1e-14);
}

#[test]
fn orr_frequency_matches_matrix_exponential_quadrature() {
    // scipy: quad of expm(-s A) k over [0, 2] with nu = 0.1.
    let want = [-1.1135273944497754, 1.0469402626332618, 1.8126924692201811];
    let p = odd_params(0.1);
    let m = ModeContext::new([1, 1, 1], &p).unwrap();
    let got = eta_ct(2.0, &m, &p);
    for i in 0..3 {
        assert!((got[i] - want[i]).abs() < 1e-10, "{got:?}");
    }
}

#[test]
fn collisionless_kernel_matches_path_formula() {
    // scipy: -(q/m) W (k·c) f0^(c) with c from matrix-exponential quadrature.
    let p = odd_params(0.0);
    let m = ModeContext::new([1, 2, 1], &p).unwrap();
    let k = kernel_collisionless(1.7, &m, &p, &Equilibrium::maxwellian());
    assert!((k - -0.000589438925322024).abs() < 1e-13);
    let pert = Equilibrium { t_par: 0.5, perturbation: vec![GaussianComponent { weight: 0.2, width: 3.0 }] };
    let p2 = PlasmaParams { t_par: 0.5, ..p };
    let k = kernel_collisionless(1.7, &m, &p2, &pert);
    assert!((k - -0.0012205458551090098).abs() < 1e-13, "{k}");
}

#[test]
fn kernel_and_oracle_agree() {
    let p = odd_params(0.0);
    let eq = Equilibrium::maxwellian();
    for k in [[1, 0, 0], [0, 0, 2], [2, -1, 1]] {
        let m = ModeContext::new(k, &p).unwrap();
        for j in 0..40 {
            let t = 0.13 * j as f64;
            let a = kernel_collisionless(t, &m, &p, &eq);
            let b = kernel_oracle(t, &m, &p, &eq);
            assert!((a - b).abs() < 1e-14, "k={k:?} t={t}: {a} vs {b}");
        }
    }
}

#[test]
fn collisional_kernel_and_forcing_match_path_formula() {
    // scipy: damping exp(-nu ∫_0^t |e^{sA}(c(t) - c(s))|^2 ds) by nested quadrature.
    let p = odd_params(0.05);
    let m = ModeContext::new([1, 0, 2], &p).unwrap();
    let k = kernel_collisional(2.3, &m, &p);
    assert!((k - -6.314053115609307e-06).abs() < 1e-12 * 6.3, "{k}");
    let s = propagator_s(2.3, &m, &p);
    assert!((s - 0.4343575473557336).abs() < 1e-11, "{s}");
    let data = ModeData::new([1, 0, 2], Complex64::new(0.7, -0.2), [0.3, -0.1, 0.5], [1.0, 0.8, 1.2]);
    let f = forcing_collisional(2.3, &m, &p, &data);
    let want = Complex64::new(-1.7062669120860966e-07, -2.0910004813008425e-07);
    assert!((f - want).norm() < 1e-10 * want.norm(), "{f}");
}

#[test]
fn closed_form_propagator_matches_quadrature() {
    for nu in [1e-1, 1e-3, 1e-6] {
        let p = odd_params(nu);
        for k in [[1, 0, 0], [0, 0, 1], [1, 1, 2]] {
            let m = ModeContext::new(k, &p).unwrap();
            for t in [0.01, 0.7, 5.0, 40.0] {
                let closed = log_propagator(t, &m, &p);
                let (quad, _) = log_propagator_integral(t, &m, &p, 1e-14);
                assert!(
                    (closed - quad).abs() <= 1e-9 * closed.abs().max(1e-300),
                    "nu={nu} k={k:?} t={t}: {closed} vs {quad}"
                );
            }
        }
    }
}

#[test]
fn collisionless_limit_of_collisional_terms() {
    let p = odd_params(0.0);
    let m = ModeContext::new([1, 1, 1], &p).unwrap();
    let data = ModeData::new([1, 1, 1], Complex64::new(1.0, 0.0), [0.1, 0.0, 0.2], [1.0, 1.0, 1.0]);
    for t in [0.0, 0.5, 3.0] {
        let a = kernel_collisional(t, &m, &p);
        let b = kernel_collisionless(t, &m, &p, &Equilibrium::maxwellian());
        assert!((a - b).abs() < 1e-15);
        assert!((forcing_collisional(t, &m, &p, &data) - forcing_collisionless(t, &m, &p, &data)).norm() < 1e-15);
    }
}

#[test]
fn transverse_forcing_is_periodic_and_resolved_by_harmonics() {
    let p = PlasmaParams::default();
    let m = ModeContext::new([1, 0, 0], &p).unwrap();
    let data = ModeData::new([1, 0, 0], Complex64::new(1.0, 0.5), [0.3, 0.2, 0.0], [1.0, 1.0, 1.0]);
    let g = g_coefficients(&m, &p, &data, 40, 1e-13).unwrap();
    for t in [0.0, 0.4, 2.0, 9.0] {
        let direct = forcing_collisionless(t, &m, &p, &data);
        assert!((g.reconstruct(t, 1.0) - direct).norm() < 1e-13);
    }
}

#[test]
fn transverse_kernel_needs_k3_zero() {
    let p = PlasmaParams::default();
    let m = ModeContext::new([1, 0, 1], &p).unwrap();
    let data = ModeData::new([1, 0, 1], Complex64::new(1.0, 0.0), [0.0; 3], [1.0; 3]);
    assert!(matches!(g_coefficients(&m, &p, &data, 20, 1e-12), Err(KernelError::NotTransverse(..))));
}
