use magkin::bernstein::*;
use magkin::dispersion::TransverseSeries;
use magkin::kernels::g_coefficients;
use magkin::model::*;
use num_complex::Complex64;

fn unit() -> (PlasmaParams, Equilibrium) {
    (PlasmaParams::default(), Equilibrium::maxwellian())
}

#[test]
fn first_offsets_match_high_precision_reference() {
    // mpmath, 40 digits: bisection on Re L(i y) = 1 with L from the periodic Laplace transform.
    let want = [0.016211425496723508682, 0.0079987483676740759163, 0.001966116865549982982];
    let (p, eq) = unit();
    let m = ModeContext::new([1, 0, 0], &p).unwrap();
    let roots = find_modes(&m, &p, &eq, 3, 1e-12).unwrap();
    for (r, w) in roots.iter().zip(want) {
        assert!((r.delta - w).abs() < 1e-12 * w.max(1e-3), "n={}: {} vs {w}", r.n, r.delta);
    }
}

#[test]
fn roots_are_interior_with_small_residual() {
    let (p, eq) = unit();
    for k in [[1, 0, 0], [2, 1, 0], [3, 0, 0]] {
        let m = ModeContext::new(k, &p).unwrap();
        let roots = find_modes(&m, &p, &eq, 32, 1e-12).unwrap();
        let series = TransverseSeries::new(&m, &p, &eq, 60).unwrap();
        for r in &roots {
            assert!(r.delta > 0.0 && r.delta < 1.0);
            let l = series.eval_imag(r.n as i64, r.delta);
            assert!((l - 1.0).abs() < 1e-10, "k={k:?} n={}: L-1 = {}", r.n, l - 1.0);
        }
    }
}

#[test]
fn residue_sum_reproduces_initial_density() {
    let (p, eq) = unit();
    let m = ModeContext::new([1, 0, 0], &p).unwrap();
    let amp = Complex64::new(0.8, -0.3);
    let data = ModeData::new([1, 0, 0], amp, [0.3, 0.2, 0.0], [1.0, 1.0, 1.0]);
    let d = residues(&m, &p, &eq, &data, 32, 1e-12).unwrap();
    assert!((d.value_at(0.0) - amp).norm() < 1e-9, "{}", d.value_at(0.0));
    assert!(d.l_at_zero < 0.0);
    assert!(!d.root_in_first_interval);
}

#[test]
fn harmonic_is_a_removable_singularity() {
    let (p, eq) = unit();
    let m = ModeContext::new([1, 0, 0], &p).unwrap();
    let data = ModeData::new([1, 0, 0], Complex64::new(1.0, 0.0), [0.3, 0.2, 0.0], [1.0, 1.0, 1.0]);
    let series = TransverseSeries::new(&m, &p, &eq, 60).unwrap();
    let g = g_coefficients(&m, &p, &data, 60, 1e-14).unwrap();
    for ell in [1usize, 2] {
        let limit = harmonic_limit(&series, &g, ell);
        let near = transform_near_harmonic(&series, &g, ell, 1e-7);
        assert!((limit - near).norm() < 1e-4 * limit.norm().max(1e-12), "ell={ell}: {limit} vs {near}");
    }
}

#[test]
fn reconstruction_is_bounded_and_quasi_periodic() {
    let (p, eq) = unit();
    let m = ModeContext::new([2, 0, 0], &p).unwrap();
    let data = ModeData::new([2, 0, 0], Complex64::new(1.0, 0.0), [0.0, 0.1, 0.0], [1.0, 1.0, 1.0]);
    let d = residues(&m, &p, &eq, &data, 16, 1e-12).unwrap();
    let r = reconstruct(&d, 0.1, 2000);
    let bound: f64 = d.r_zero.norm() + d.modes.iter().map(|e| e.r_plus.norm() + e.r_minus.norm()).sum::<f64>();
    assert!(r.values.iter().all(|v| v.norm() <= bound + 1e-12));
}
