//! Acceptance suite: one pass/fail line per criterion.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use magkin::analysis::*;
use magkin::bernstein::{find_modes, residues};
use magkin::dispersion::{stability_margin, winding_number, MarginGrid, TransverseSeries};
use magkin::kernels::*;
use magkin::kinsim::{self, hypocoercive_decay, KinsimConfig};
use magkin::model::*;
use magkin::specfun::check_identities;
use magkin::volterra::{self, TimeSeries, VolterraError};
use num_complex::Complex64;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn unit() -> (PlasmaParams, Equilibrium) {
    (PlasmaParams::default(), Equilibrium::maxwellian())
}

fn gaussian(k: Wavevector, center: Vec3) -> ModeData {
    ModeData::new(k, Complex64::new(1.0, 0.0), center, [1.0; 3])
}

fn collisionless_volterra(
    m: &ModeContext,
    p: &PlasmaParams,
    eq: &Equilibrium,
    d: &ModeData,
    dt: f64,
    t_end: f64,
) -> TimeSeries {
    volterra::solve(|t| forcing_collisionless(t, m, p, d), |t| kernel_collisionless(t, m, p, eq), dt, t_end).unwrap()
}

fn bessel_identities() -> Outcome {
    let mut worst: f64 = 0.0;
    for a in [0.1, 1.0, 5.0, 10.0, 30.0] {
        match check_identities(a, 40) {
            Ok(r) => worst = worst.max(r.max_residual()),
            Err(e) => return outcome(false, format!("a={a}: {e}")),
        }
    }
    outcome(worst < 1e-10, format!("max scaled residual {worst:.2e}"))
}

fn bernstein_roots() -> Outcome {
    let (p, eq) = unit();
    let mut worst: f64 = 0.0;
    let mut ok = true;
    let mut notes = Vec::new();
    for k in [[1, 0, 0], [2, 1, 0], [3, 0, 0]] {
        let m = ModeContext::new(k, &p).unwrap();
        let roots = match find_modes(&m, &p, &eq, 32, 1e-12) {
            Ok(r) => r,
            Err(e) => return outcome(false, format!("k={k:?}: {e}")),
        };
        let series = TransverseSeries::new(&m, &p, &eq, 80).unwrap();
        for r in &roots {
            ok &= r.delta > 0.0 && r.delta < 1.0;
            worst = worst.max((series.eval_imag(r.n as i64, r.delta) - 1.0).abs());
        }
        let start = (2.0 * m.a_classic).floor() as usize + 1;
        let deltas: Vec<f64> = roots.iter().filter(|r| r.n >= start).map(|r| r.delta).collect();
        let ratios: Vec<f64> = deltas.windows(2).map(|w| w[1] / w[0]).collect();
        let decreasing = ratios.windows(2).all(|w| w[1] < w[0]) && ratios.iter().all(|&r| r < 1.0);
        ok &= decreasing;
        notes.push(format!(
            "k={k:?} ratio check over n>={start}: {}",
            if ratios.len() < 2 { "vacuous".to_string() } else { decreasing.to_string() }
        ));
    }
    outcome(ok && worst < 1e-10, format!("max |L-1| {worst:.2e}; {}", notes.join("; ")))
}

fn standing_waves() -> Outcome {
    let (p, eq) = unit();
    let k = [1, 0, 0];
    let m = ModeContext::new(k, &p).unwrap();
    let d = gaussian(k, [0.3, 0.2, 0.0]);
    let dt = 1e-3;
    let v = collisionless_volterra(&m, &p, &eq, &d, dt, 50.0);
    let decomp = residues(&m, &p, &eq, &d, 48, 1e-12).unwrap();
    let rel = |n: usize| {
        let dd = decomp.truncated(n);
        let (mut num, mut den) = (0.0, 0.0);
        for (t, x) in v.times().zip(&v.values) {
            num += (dd.value_at(t) - x).norm_sqr();
            den += x.norm_sqr();
        }
        (num / den).sqrt()
    };
    let (e32, e48) = (rel(32), rel(48));
    outcome(e32 < 1e-3 && e48 <= e32, format!("rel L2 N=32 {e32:.4e}, N=48 {e48:.4e}"))
}

fn oracle_equivalence() -> Outcome {
    let eq = Equilibrium::maxwellian();
    let mut parts = Vec::new();
    let mut ok = true;
    for (k, nu) in [([1, 0, 0], 0.0), ([0, 0, 1], 0.0), ([0, 0, 1], 1e-3)] {
        let p = PlasmaParams::default().with_nu(nu);
        let m = ModeContext::new(k, &p).unwrap();
        let d = gaussian(k, [0.3, 0.2, 0.1]);
        let cfg = KinsimConfig { t_end: 20.0, ..KinsimConfig::default() };
        let run = match kinsim::run(&p, &eq, &[(m, d)], &cfg) {
            Ok(r) => r,
            Err(e) => return outcome(false, format!("k={k:?} nu={nu}: {e}")),
        };
        let dt = 0.005;
        let v = if nu == 0.0 {
            collisionless_volterra(&m, &p, &eq, &d, dt, 20.0)
        } else {
            volterra::solve(|t| forcing_collisional(t, &m, &p, &d), |t| kernel_collisional(t, &m, &p), dt, 20.0)
                .unwrap()
        };
        let stride = (cfg.dt / dt).round() as usize;
        let diff =
            run.series[0].values.iter().enumerate().map(|(j, r)| (r - v.values[j * stride]).norm()).fold(0.0, f64::max);
        let rel = diff / v.max_abs();
        ok &= rel < 1e-3;
        parts.push(format!("k={k:?} nu={nu}: {rel:.2e}"));
    }
    outcome(ok, format!("max|d rho|/max|rho| {}", parts.join(", ")))
}

fn landau_damping() -> Outcome {
    let (p, eq) = unit();
    let k = [0, 0, 1];
    let m = ModeContext::new(k, &p).unwrap();
    let d = gaussian(k, [0.0, 0.0, 0.3]);
    let short = collisionless_volterra(&m, &p, &eq, &d, 0.01, 20.0).with_mode(k);
    let long = collisionless_volterra(&m, &p, &eq, &d, 0.01, 40.0).with_mode(k);
    let sup = short.max_abs();
    let end = short.values.last().unwrap().norm();
    let w = LandauWeights { sigma: 1.0, rate: 0.0 };
    let (a, b) = (landau_norm(&[short], &w), landau_norm(&[long], &w));
    let change = (a - b).abs() / b;
    outcome(
        end < 1e-6 * sup && change < 0.01,
        format!("|rho(20)|/sup {:.2e}; norm change under doubling {change:.2e}", end / sup),
    )
}

fn stability_and_winding() -> Outcome {
    let (p, eq) = unit();
    // The Maxwellian kernel depends on k only through |k_perp|^2 and k3^2.
    let mut classes = BTreeSet::new();
    let mut count = 0;
    for k1 in -4i64..=4 {
        for k2 in -4i64..=4 {
            for k3 in -4i64..=4 {
                if k3 != 0 && k1 * k1 + k2 * k2 + k3 * k3 <= 16 {
                    classes.insert((k1 * k1 + k2 * k2, k3.abs()));
                    count += 1;
                }
            }
        }
    }
    let grid = MarginGrid { lambda_max: 2.0, omega_max: 8.0, n_re: 8, n_im: 32 };
    let mut min_kappa = f64::INFINITY;
    let mut nonzero = 0;
    for &(kp2, k3) in &classes {
        let k1 = (0..=4).find(|a| (kp2 - a * a) >= 0 && ((kp2 - a * a) as f64).sqrt().fract() == 0.0).unwrap();
        let k2 = ((kp2 - k1 * k1) as f64).sqrt() as i64;
        let m = ModeContext::new([k1, k2, k3], &p).unwrap();
        match stability_margin(&m, &p, &eq, grid) {
            Ok(r) => min_kappa = min_kappa.min(r.kappa),
            Err(e) => return outcome(false, format!("k=({k1},{k2},{k3}): {e}")),
        }
        if winding_number(&m, &p, &eq, 40.0, 400).unwrap_or(-1) != 0 {
            nonzero += 1;
        }
    }
    let pc = PlasmaParams::new(6.0, 1.0, 1.0 / 6.0, 0.0, 1.0).unwrap();
    let mc = ModeContext::with_interaction([0, 0, 1], &pc, Interaction::Attractive).unwrap();
    let crafted = winding_number(&mc, &pc, &eq, 40.0, 400).unwrap_or(0);
    let d = gaussian([0, 0, 1], [0.0; 3]);
    let blow = volterra::solve(
        |t| forcing_collisionless(t, &mc, &pc, &d),
        |t| kernel_collisionless(t, &mc, &pc, &eq),
        0.01,
        400.0,
    );
    let tripped = matches!(blow, Err(VolterraError::BlowUp { .. }));
    outcome(
        min_kappa > 0.0 && nonzero == 0 && crafted != 0 && tripped,
        format!(
            "{count} modes in {} classes, min kappa {min_kappa:.3e}, nonzero windings {nonzero}; crafted winding {crafted}, blow-up guard {}",
            classes.len(),
            if tripped { "tripped" } else { "silent" }
        ),
    )
}

fn relaxation_exponents() -> Outcome {
    let p = PlasmaParams::default();
    let nus = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
    let opts = RelaxationOptions::default();
    let fit = |k: Wavevector| {
        let m = ModeContext::new(k, &p).unwrap();
        relaxation_exponent(&m, &p, &gaussian(k, [0.0; 3]), &nus, AmplitudeSource::Propagator, &opts).unwrap()
    };
    let par = fit([0, 0, 1]);
    let perp = fit([1, 0, 0]);
    outcome(
        (par.slope + 1.0 / 3.0).abs() < 0.03 && (perp.slope + 1.0).abs() < 0.05,
        format!("slope k=(0,0,1) {:.4}, k=(1,0,0) {:.4}", par.slope, perp.slope),
    )
}

fn energy_laws() -> Outcome {
    let eq = Equilibrium::maxwellian();
    let pair = |p: &PlasmaParams| {
        let amp = Complex64::new(0.5, 0.2);
        let center = [0.3, 0.2, 0.0];
        vec![
            (ModeContext::new([1, 0, 0], p).unwrap(), ModeData::new([1, 0, 0], amp, center, [1.0; 3])),
            (ModeContext::new([-1, 0, 0], p).unwrap(), ModeData::new([-1, 0, 0], amp.conj(), center, [1.0; 3])),
        ]
    };
    let p0 = PlasmaParams::default();
    let cfg0 = KinsimConfig { t_end: 20.0, energy_every: 4, ..KinsimConfig::default() };
    let r0 = kinsim::run(&p0, &eq, &pair(&p0), &cfg0).unwrap();
    let e_start = r0.energies[0].e0;
    let drift = r0.energies.iter().map(|e| (e.e0 - e_start).abs() / e_start).fold(0.0, f64::max);
    let nu = 1e-2;
    let p1 = PlasmaParams::default().with_nu(nu);
    let cfg1 = KinsimConfig { t_end: 100.0, energy_every: 4, ..KinsimConfig::default() };
    let r1 = kinsim::run(&p1, &eq, &pair(&p1), &cfg1).unwrap();
    let monotone = r1.energies.windows(2).all(|w| w[1].e0 <= w[0].e0);
    let fit = hypocoercive_decay(&r1.energies, nu).unwrap();
    let in_bracket = fit.rate >= 0.1 * nu && fit.rate <= 10.0 * nu;
    outcome(
        drift < 1e-6 && monotone && in_bracket,
        format!("nu=0 drift {drift:.2e}; nu=1e-2 monotone {monotone}, rate {:.4e} = {:.2} nu", fit.rate, fit.delta),
    )
}

fn kolmogorov_limit() -> Outcome {
    let k = [0, 0, 1];
    let mut worst: f64 = 0.0;
    let mut at = 0.0;
    for nu in [1e-2, 1e-3, 1e-4] {
        let p = PlasmaParams::default().with_nu(nu);
        let m = ModeContext::new(k, &p).unwrap();
        for j in 1..100 {
            let t = 0.1 / nu * j as f64 / 100.0;
            let leading = -nu * t * t * t / 3.0;
            let eps = log_propagator(t, &m, &p) / leading - 1.0;
            if eps.abs() > worst {
                worst = eps.abs();
                at = nu * t;
            }
        }
    }
    outcome(worst < 0.05, format!("max |eps| {worst:.4} at nu t = {at:.3}"))
}

fn spectral_purity() -> Outcome {
    let (p, eq) = unit();
    let k = [1, 0, 0];
    let m = ModeContext::new(k, &p).unwrap();
    let d = gaussian(k, [0.3, 0.2, 0.0]);
    let dt = 0.01;
    let t_end = 400.0;
    let v = collisionless_volterra(&m, &p, &eq, &d, dt, t_end);
    let decomp = residues(&m, &p, &eq, &d, 32, 1e-12).unwrap();
    let control = TimeSeries::new(dt, v.times().map(|t| decomp.value_at(t)).collect());
    let spec = bernstein_spectrum(&v, Window::Hann, 1e-6, 10.0).unwrap();
    let bin = spec.bin_width;
    let mut allowed = vec![0.0];
    for e in &decomp.modes {
        allowed.push(e.b_n);
        allowed.push(-e.b_n);
    }
    let stray: Vec<f64> = spec
        .peaks
        .iter()
        .filter(|pk| !allowed.iter().any(|a| (pk.frequency - a).abs() <= bin))
        .map(|pk| pk.frequency)
        .collect();
    let noise = v.values.iter().zip(&control.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let mut excess = 0;
    for n in 1..=32 {
        for s in [1.0, -1.0] {
            let w = s * n as f64;
            let a = windowed_amplitude(&v, Window::Hann, w).norm();
            let c = windowed_amplitude(&control, Window::Hann, w).norm();
            if a > 1.05 * c + noise {
                excess += 1;
            }
        }
    }
    outcome(
        stray.is_empty() && excess == 0,
        format!(
            "{} peaks, {} off the Bernstein set; harmonics above control leakage {excess}",
            spec.peaks.len(),
            stray.len()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 10] = [
        ("Bessel identity suite", bessel_identities, Duration::from_secs(1)),
        ("Bernstein roots", bernstein_roots, Duration::from_secs(10)),
        ("standing-wave decomposition", standing_waves, Duration::from_secs(120)),
        ("oracle equivalence", oracle_equivalence, Duration::from_secs(600)),
        ("Landau damping", landau_damping, Duration::from_secs(60)),
        ("stability margin and winding", stability_and_winding, Duration::from_secs(300)),
        ("enhanced relaxation exponent", relaxation_exponents, Duration::from_secs(60)),
        ("H-theorem and hypocoercivity", energy_laws, Duration::from_secs(600)),
        ("Kolmogorov limit", kolmogorov_limit, Duration::from_secs(1)),
        ("spectral purity", spectral_purity, Duration::from_secs(120)),
    ];
    let mut passed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let elapsed = start.elapsed();
        let ok = o.pass && elapsed <= *budget;
        if ok {
            passed += 1;
        }
        println!(
            "{} {:>2} {name}: {} [{:.2}s / {}s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("{passed}/{} criteria passed", criteria.len());
}
