use magkin::specfun::{bessel_i_scaled, check_identities, BesselTable, SpecfunError};

/// `e^{-a} I_n(a)` from `scipy.special.ive`, rows `a`, columns `n = 0, 1, 5, 20, 40`.
const IVE: [(f64, [f64; 5]); 5] = [
    (
        0.1,
        [
            0.9071009257823008,
            0.045298446808809324,
            2.357329429578211e-09,
            3.547298401813032e-45,
            1.0086770472668026e-100,
        ],
    ),
    (
        1.0,
        [0.4657596075936404, 0.20791041534970842, 9.9865714112087e-05, 1.4593174056818663e-25, 4.1258037690936204e-61],
    ),
    (5.0, [0.18354081260932834, 0.16397226694454237, 0.01454031812523477, 3.385305850473325e-13, 7.95365442995334e-35]),
    (
        10.0,
        [0.12783333716342862, 0.12126268138445552, 0.03528429361493396, 5.67862201452152e-09, 9.271225320538477e-25],
    ),
    (
        30.0,
        [0.07314594648223727, 0.07191633059864756, 0.04792520316872123, 0.00010545901698926883, 2.2510414876317634e-12],
    ),
];

#[test]
fn scaled_bessel_matches_reference_values() {
    for (a, row) in IVE {
        for (n, want) in [0u32, 1, 5, 20, 40].into_iter().zip(row) {
            let got = bessel_i_scaled(n, a, 1e-16).unwrap().value_scaled;
            assert!((got - want).abs() <= 1e-13 * want, "a={a} n={n}: {got} vs {want}");
        }
    }
}

#[test]
fn small_argument_limits() {
    assert_eq!(bessel_i_scaled(0, 0.0, 1e-15).unwrap().value_scaled, 1.0);
    assert_eq!(bessel_i_scaled(3, 0.0, 1e-15).unwrap().value_scaled, 0.0);
    let v = bessel_i_scaled(1, 1e-8, 1e-15).unwrap().value_scaled;
    assert!((v / 0.5e-8 - 1.0).abs() < 1e-7);
}

#[test]
fn rejects_negative_argument() {
    assert!(matches!(bessel_i_scaled(0, -1.0, 1e-12), Err(SpecfunError::InvalidArgument(_))));
}

#[test]
fn table_is_even_in_order() {
    let t = BesselTable::new(3.0, 1e-14).unwrap();
    for n in 0..10 {
        assert_eq!(t.get(n), t.get(-n));
    }
}

#[test]
fn identities_hold_across_arguments() {
    for a in [0.1, 1.0, 5.0, 10.0, 30.0] {
        let r = check_identities(a, 40).unwrap();
        assert!(r.max_residual() < 1e-10, "a={a}: {r:?}");
    }
}
