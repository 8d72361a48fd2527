//! The named experiment pipelines.

use std::collections::BTreeMap;

use magkin::analysis::{relaxation_exponent, AmplitudeSource, RelaxationOptions};
use magkin::bernstein::residues;
use magkin::dispersion::{stability_margin, winding_number, BoundaryEvaluator, MarginGrid, TransverseSeries};
use magkin::kernels::{
    forcing_collisional, forcing_collisionless, kernel_collisional, kernel_collisionless, propagator_s,
};
use magkin::kinsim::{self, hypocoercive_decay, KinsimConfig};
use magkin::model::{Equilibrium, ModeContext, ModeData, PlasmaParams, Wavevector};
use magkin::specfun::check_identities;
use magkin::volterra::{self, TimeSeries};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ModeSpec};
use crate::output::{num, Artifacts};
use crate::{CliError, Experiment};

type Row = Vec<String>;

/// Runs `exp` and reports whether its checks passed.
pub fn run(exp: Experiment, cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<bool, CliError> {
    match exp {
        Experiment::BesselCheck => bessel_check(cfg, art),
        Experiment::DispersionScan => dispersion_scan(cfg, art),
        Experiment::Bernstein => bernstein(cfg, art),
        Experiment::VolterraRun => volterra_run(cfg, art),
        Experiment::OracleRun => oracle_run(cfg, art),
        Experiment::CrossValidate => cross_validate(cfg, art),
        Experiment::PenroseScan => penrose_scan(cfg, art),
        Experiment::EnhancedScaling => enhanced_scaling(cfg, art),
        Experiment::EnergyDecay => energy_decay(cfg, art),
        Experiment::KernelDump => kernel_dump(cfg, art),
    }
}

fn k_cols(k: Wavevector) -> [String; 3] {
    k.map(|c| c.to_string())
}

fn k_label(k: Wavevector) -> String {
    format!("{}_{}_{}", k[0], k[1], k[2])
}

fn row(k: Wavevector, rest: impl IntoIterator<Item = String>) -> Row {
    k_cols(k).into_iter().chain(rest).collect()
}

fn complex_cols(z: Complex64) -> [String; 2] {
    [num(z.re), num(z.im)]
}

/// Contexts and data of the configured modes, or of `default`.
fn mode_list(cfg: &ExperimentConfig, default: &[ModeSpec]) -> Result<Vec<(ModeContext, ModeData)>, CliError> {
    cfg.modes_or(default).iter().map(|m| Ok((cfg.context(m.k)?, m.data()))).collect()
}

fn require_maxwellian_if_collisional(cfg: &ExperimentConfig, eq: &Equilibrium) -> Result<(), CliError> {
    if cfg.params.nu > 0.0 && !eq.is_maxwellian() {
        return Err(CliError::Config("equilibrium: collisional runs need a Maxwellian equilibrium".into()));
    }
    Ok(())
}

fn volterra_series(
    m: &ModeContext,
    p: &PlasmaParams,
    eq: &Equilibrium,
    d: &ModeData,
    dt: f64,
    t_end: f64,
) -> Result<TimeSeries, CliError> {
    let out = if p.nu > 0.0 {
        volterra::solve(|t| forcing_collisional(t, m, p, d), |t| kernel_collisional(t, m, p), dt, t_end)
    } else {
        volterra::solve(|t| forcing_collisionless(t, m, p, d), |t| kernel_collisionless(t, m, p, eq), dt, t_end)
    };
    out.map(|s| s.with_mode(m.k)).map_err(|e| CliError::numerical("volterra", "solve", e))
}

fn bessel_check(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<bool, CliError> {
    let n = &cfg.numerics;
    let reports = n
        .bessel_args
        .par_iter()
        .map(|&a| {
            check_identities(a, n.bessel_n_max).map_err(|e| CliError::numerical("specfun", "check_identities", e))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<Row> = reports
        .iter()
        .map(|r| {
            vec![
                num(r.a),
                r.n_max.to_string(),
                num(r.recurrence),
                num(r.generating),
                num(r.first_moment),
                num(r.tail_bound),
            ]
        })
        .collect();
    art.csv(
        "bessel_identities.csv",
        "scaled residuals of the recurrence, generating and first-moment identities",
        &["a", "n_max", "recurrence", "generating", "first_moment", "tail_bound"],
        &rows,
    )?;
    let worst = reports.iter().map(|r| r.max_residual()).fold(0.0, f64::max);
    art.constant("max_residual", worst);
    art.constant("threshold", n.bessel_tol);
    Ok(worst < n.bessel_tol)
}

fn dispersion_scan(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<bool, CliError> {
    let n = &cfg.numerics;
    let p = cfg.params;
    let eq = cfg.equilibrium();
    let defaults = [[1, 0, 0], [0, 0, 1], [1, 0, 1]].map(|k| ModeSpec::new(k, [0.0; 3]));
    let modes = mode_list(cfg, &defaults)?;
    let omegas: Vec<f64> =
        (0..n.omega_samples).map(|j| n.omega_max * j as f64 / (n.omega_samples - 1) as f64).collect();
    let grid = MarginGrid { lambda_max: n.lambda_max, omega_max: n.omega_max, n_re: n.margin_re, n_im: n.margin_im };
    let results = modes
        .par_iter()
        .map(|(m, _)| -> Result<(Vec<Row>, Option<(f64, i64)>), CliError> {
            let mut rows = Vec::new();
            if m.k3 == 0 {
                let series = TransverseSeries::for_tolerance(m, &p, &eq, n.omega_max, n.tol)
                    .map_err(|e| CliError::numerical("dispersion", "l_series", e))?;
                for &w in &omegas {
                    // Samples on a cyclotron harmonic are poles and are left out.
                    if let Ok((l, _)) = series.eval(Complex64::new(0.0, w)) {
                        rows.push(row(m.k, [num(w), num(l.re), num(l.im), num((1.0 - l).norm()), "series".into()]));
                    }
                }
                Ok((rows, None))
            } else {
                let boundary = BoundaryEvaluator::new(m, &p, &eq, n.tol)
                    .map_err(|e| CliError::numerical("dispersion", "l_boundary", e))?;
                for &w in &omegas {
                    let l = boundary.eval(w);
                    rows.push(row(m.k, [num(w), num(l.re), num(l.im), num((1.0 - l).norm()), "boundary_pv".into()]));
                }
                let margin = stability_margin(m, &p, &eq, grid)
                    .map_err(|e| CliError::numerical("dispersion", "stability_margin", e))?;
                let winding = winding_number(m, &p, &eq, n.winding_omega_max, n.winding_samples)
                    .map_err(|e| CliError::numerical("dispersion", "winding_number", e))?;
                Ok((rows, Some((margin.kappa, winding))))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut all = Vec::new();
    for ((m, _), (rows, summary)) in modes.iter().zip(results) {
        all.extend(rows);
        if let Some((kappa, winding)) = summary {
            art.constant(format!("kappa[{}]", k_label(m.k)), kappa);
            art.constant(format!("winding[{}]", k_label(m.k)), winding);
        }
    }
    art.csv(
        "dispersion.csv",
        "L(i omega) along the imaginary axis for each mode",
        &["kx", "ky", "kz", "omega", "l_re", "l_im", "abs_one_minus_l", "method"],
        &all,
    )?;
    Ok(true)
}

fn transverse_only(cfg: &ExperimentConfig, modes: &[(ModeContext, ModeData)], what: &str) -> Result<(), CliError> {
    if cfg.params.nu > 0.0 {
        return Err(CliError::Config(format!("params.nu: {what} needs nu = 0")));
    }
    if let Some(i) = modes.iter().position(|(m, _)| m.k3 != 0) {
        return Err(CliError::Config(format!("modes[{i}].k: {what} needs k3 = 0")));
    }
    Ok(())
}

fn bernstein(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<bool, CliError> {
    let n = &cfg.numerics;
    let p = cfg.params;
    let eq = cfg.equilibrium();
    let modes = mode_list(cfg, &[ModeSpec::new([1, 0, 0], [0.3, 0.2, 0.0])])?;
    transverse_only(cfg, &modes, "the Bernstein decomposition")?;
    let results = modes
        .par_iter()
        .map(|(m, d)| {
            let decomp = residues(m, &p, &eq, d, n.n_modes, n.tol)
                .map_err(|e| CliError::numerical("bernstein", "residues", e))?;
            let top = (n.n_modes + 1) as f64 * p.omega_c();
            let series = TransverseSeries::for_tolerance(m, &p, &eq, top, n.tol)
                .map_err(|e| CliError::numerical("dispersion", "l_series", e))?;
            let checks: Vec<f64> =
                decomp.modes.iter().map(|e| (series.eval_imag(e.n as i64, e.delta) - 1.0).abs()).collect();
            Ok((decomp, checks))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut rows = Vec::new();
    let mut series_rows = Vec::new();
    let mut passed = true;
    let steps = (n.t_end / n.dt).round() as usize;
    for (decomp, checks) in &results {
        let k = decomp.k;
        for (e, res) in decomp.modes.iter().zip(checks) {
            passed &= e.delta > 0.0 && e.delta < 1.0 && *res < 100.0 * n.tol;
            let mut r = row(k, [e.n.to_string(), num(e.b_n), num(e.delta)]);
            r.extend(complex_cols(e.r_plus));
            r.extend(complex_cols(e.r_minus));
            r.push(num(*res));
            rows.push(r);
        }
        for j in 0..=steps {
            let t = j as f64 * n.dt;
            series_rows.push(row(k, std::iter::once(num(t)).chain(complex_cols(decomp.value_at(t)))));
        }
        let label = k_label(k);
        art.constant(format!("r_zero[{label}]"), [decomp.r_zero.re, decomp.r_zero.im]);
        art.constant(format!("l_at_zero[{label}]"), decomp.l_at_zero);
        art.constant(format!("root_in_first_interval[{label}]"), decomp.root_in_first_interval);
        art.constant(format!("truncation_estimate[{label}]"), decomp.truncation_estimate);
    }
    art.csv(
        "bernstein_modes.csv",
        "Bernstein frequencies b_n, residues and |L(i b_n omega_c) - 1|",
        &["kx", "ky", "kz", "n", "b_n", "delta", "r_plus_re", "r_plus_im", "r_minus_re", "r_minus_im", "root_residual"],
        &rows,
    )?;
    art.csv(
        "bernstein_density.csv",
        "density reconstructed from the residue sum",
        &["kx", "ky", "kz", "t", "rho_re", "rho_im"],
        &series_rows,
    )?;
    Ok(passed)
}

fn density_rows(series: &[TimeSeries]) -> Vec<Row> {
    series
        .iter()
        .flat_map(|s| {
            let k = s.k.unwrap_or([0, 0, 0]);
            s.times().zip(&s.values).map(move |(t, v)| row(k, std::iter::once(num(t)).chain(complex_cols(*v))))
        })
        .collect()
}

fn default_density_modes() -> [ModeSpec; 2] {
    [ModeSpec::new([1, 0, 0], [0.3, 0.2, 0.0]), ModeSpec::new([0, 0, 1], [0.3, 0.2, 0.1])]
}

fn volterra_run(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<bool, CliError> {
    let n = &cfg.numerics;
    let p = cfg.params;
    let eq = cfg.equilibrium();
    require_maxwellian_if_collisional(cfg, &eq)?;
    let modes = mode_list(cfg, &default_density_modes())?;
    let results = modes
        .par_iter()
        .map(|(m, d)| {
            let s = volterra_series(m, &p, &eq, d, n.dt, n.t_end)?;
            let order = if p.nu > 0.0 {
                volterra::convergence_order(
                    |t| forcing_collisional(t, m, &p, d),
                    |t| kernel_collisional(t, m, &p),
                    n.dt,
                    n.t_end,
                )
            } else {
                volterra::convergence_order(
                    |t| forcing_collisionless(t, m, &p, d),
                    |t| kernel_collisionless(t, m, &p, &eq),
                    n.dt,
                    n.t_end,
                )
            }
            .map_err(|e| CliError::numerical("volterra", "convergence_order", e))?;
            Ok((s, order))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    for (s, order) in &results {
        art.constant(format!("observed_order[{}]", k_label(s.k.unwrap_or_default())), order);
    }
    let series: Vec<TimeSeries> = results.into_iter().map(|(s, _)| s).collect();
    art.csv(
        "volterra_density.csv",
        "density from the Volterra equation",
        &["kx", "ky", "kz", "t", "rho_re", "rho_im"],
        &density_rows(&series),
    )?;
    Ok(true)
}

fn kinsim_series(
    p: &PlasmaParams,
    eq: &Equilibrium,
    modes: &[(ModeContext, ModeData)],
    kcfg: &KinsimConfig,
) -> Result<Vec<TimeSeries>, CliError> {
    modes
        .par_iter()
        .map(|pair| {
            kinsim::run(p, eq, std::slice::from_ref(pair), kcfg)
                .map(|mut r| r.series.remove(0))
                .map_err(|e| CliError::numerical("kinsim", "run", e))
        })
        .collect()
}

fn oracle_run(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<bool, CliError> {
    let p = cfg.params;
    let eq = cfg.equilibrium();
    require_maxwellian_if_collisional(cfg, &eq)?;
    let modes = mode_list(cfg, &default_density_modes())?;
    let series = kinsim_series(&p, &eq, &modes, &cfg.numerics.kinsim)?;
    art.csv(
        "oracle_density.csv",
        "density from the kinetic simulation",
        &["kx", "ky", "kz", "t", "rho_re", "rho_im"],
        &density_rows(&series),
    )?;
    Ok(true)
}

fn max_rel(a: &[Complex64], b: &[Complex64], scale: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

fn cross_validate(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<bool, CliError> {
    let n = &cfg.numerics;
    let p = cfg.params;
    let eq = cfg.equilibrium();
    require_maxwellian_if_collisional(cfg, &eq)?;
    let modes = mode_list(cfg, &[ModeSpec::new([1, 0, 0], [0.3, 0.2, 0.0])])?;
    let kcfg = cfg.numerics.kinsim;
    let ratio = kcfg.dt / n.dt;
    let stride = ratio.round() as usize;
    if stride == 0 || (ratio - stride as f64).abs() > 1e-9 * ratio {
        return Err(CliError::Config("numerics.kinsim.dt: must be an integer multiple of numerics.dt".into()));
    }
    let oracle = kinsim_series(&p, &eq, &modes, &kcfg)?;
    let results = modes
        .par_iter()
        .zip(&oracle)
        .map(|((m, d), kin)| -> Result<_, CliError> {
            let vol = volterra_series(m, &p, &eq, d, n.dt, n.t_end)?;
            let vol: Vec<Complex64> = vol.values.iter().step_by(stride).copied().collect();
            let bern = if m.k3 == 0 && p.nu == 0.0 {
                let decomp = residues(m, &p, &eq, d, n.n_modes, n.tol)
                    .map_err(|e| CliError::numerical("bernstein", "residues", e))?;
                Some(kin.times().map(|t| decomp.value_at(t)).collect::<Vec<_>>())
            } else {
                None
            };
            Ok((vol, bern))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut worst: f64 = 0.0;
    for (kin, (vol, bern)) in oracle.iter().zip(&results) {
        let k = kin.k.unwrap_or_default();
        let len = kin.len().min(vol.len());
        let scale = vol.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut pairs = vec![("volterra-oracle", max_rel(&vol[..len], &kin.values[..len], scale))];
        if let Some(b) = bern {
            pairs.push(("volterra-bernstein", max_rel(&vol[..len], &b[..len], scale)));
            pairs.push(("oracle-bernstein", max_rel(&kin.values[..len], &b[..len], scale)));
        }
        for (j, t) in kin.times().take(len).enumerate() {
            let mut r = row(k, [num(t)]);
            r.extend(complex_cols(vol[j]));
            r.extend(complex_cols(kin.values[j]));
            match bern {
                Some(b) => r.extend(complex_cols(b[j])),
                None => r.extend([String::new(), String::new()]),
            }
            rows.push(r);
        }
        for (name, d) in pairs {
            worst = worst.max(d);
            art.constant(format!("max_rel_diff[{}][{name}]", k_label(k)), d);
            summary.push(row(k, [name.to_string(), num(d)]));
        }
    }
    art.constant("max_rel_diff", worst);
    art.constant("tolerance", n.cross_tol);
    art.csv(
        "cross_validation.csv",
        "density from the Volterra solver, the kinetic oracle and the residue sum",
        &[
            "kx",
            "ky",
            "kz",
            "t",
            "volterra_re",
            "volterra_im",
            "oracle_re",
            "oracle_im",
            "bernstein_re",
            "bernstein_im",
        ],
        &rows,
    )?;
    art.csv(
        "cross_validation_summary.csv",
        "largest discrepancy of each pair relative to max |rho|",
        &["kx", "ky", "kz", "pair", "max_rel_diff"],
        &summary,
    )?;
    Ok(worst < n.cross_tol)
}

fn penrose_scan(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<bool, CliError> {
    let n = &cfg.numerics;
    let p = cfg.params;
    let eq = cfg.equilibrium();
    // The kernel depends on k only through |k_perp|^2 and |k3|, so one
    // representative per class is scanned when no modes are given.
    let reps: Vec<(Wavevector, usize)> = match &cfg.modes {
        Some(list) => {
            if let Some(i) = list.iter().position(|m| m.k[2] == 0) {
                return Err(CliError::Config(format!("modes[{i}].k: the Penrose scan needs k3 != 0")));
            }
            list.iter().map(|m| (m.k, 1)).collect()
        }
        None => {
            let r = n.k_radius;
            let mut classes: BTreeMap<(i64, i64), (Wavevector, usize)> = BTreeMap::new();
            for k1 in -r..=r {
                for k2 in -r..=r {
                    for k3 in -r..=r {
                        if k3 != 0 && k1 * k1 + k2 * k2 + k3 * k3 <= r * r {
                            let entry = classes.entry((k1 * k1 + k2 * k2, k3.abs())).or_insert(([k1, k2, k3], 0));
                            entry.1 += 1;
                        }
                    }
                }
            }
            classes.into_values().collect()
        }
    };
    let grid = MarginGrid { lambda_max: n.lambda_max, omega_max: n.omega_max, n_re: n.margin_re, n_im: n.margin_im };
    let results = reps
        .par_iter()
        .map(|&(k, members)| {
            let m = cfg.context(k)?;
            let margin = stability_margin(&m, &p, &eq, grid)
                .map_err(|e| CliError::numerical("dispersion", "stability_margin", e))?;
            let winding = winding_number(&m, &p, &eq, n.winding_omega_max, n.winding_samples)
                .map_err(|e| CliError::numerical("dispersion", "winding_number", e))?;
            Ok((k, members, margin, winding))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut rows = Vec::new();
    let mut min_kappa = f64::INFINITY;
    let mut unstable = 0;
    let mut total = 0;
    for (k, members, margin, winding) in &results {
        min_kappa = min_kappa.min(margin.kappa);
        unstable += usize::from(*winding != 0);
        total += members;
        rows.push(row(
            *k,
            [
                (k[0] * k[0] + k[1] * k[1]).to_string(),
                k[2].abs().to_string(),
                members.to_string(),
                num(margin.kappa),
                num(margin.argmin_re),
                num(margin.argmin_im),
                winding.to_string(),
            ],
        ));
    }
    art.constant("modes", total);
    art.constant("classes", results.len());
    art.constant("min_kappa", min_kappa);
    art.constant("nonzero_windings", unstable);
    art.csv(
        "penrose.csv",
        "stability margin and winding number per mode class",
        &["kx", "ky", "kz", "k_perp_sq", "abs_k3", "members", "kappa", "argmin_re", "argmin_im", "winding"],
        &rows,
    )?;
    Ok(min_kappa > 0.0 && unstable == 0)
}

fn enhanced_scaling(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<bool, CliError> {
    let n = &cfg.numerics;
    let p = cfg.params;
    let defaults = [[0, 0, 1], [1, 0, 0]].map(|k| ModeSpec::new(k, [0.0; 3]));
    let modes = mode_list(cfg, &defaults)?;
    // Sampled amplitudes are searched up to t_end, the closed-form propagator without bound.
    let t_max = if n.amplitude_source == AmplitudeSource::Propagator { 1.0e9 } else { n.t_end };
    let opts = RelaxationOptions { threshold: n.threshold, dt: n.dt, t_max };
    let fits = modes
        .iter()
        .map(|(m, d)| {
            relaxation_exponent(m, &p, d, &n.nus, n.amplitude_source, &opts)
                .map_err(|e| CliError::numerical("analysis", "relaxation_exponent", e))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for ((m, _), fit) in modes.iter().zip(&fits) {
        for (nu, t_e) in fit.nus.iter().zip(&fit.t_e) {
            rows.push(row(m.k, [num(*nu), num(*t_e)]));
        }
        let label = k_label(m.k);
        art.constant(format!("slope[{label}]"), fit.slope);
        art.constant(format!("r_squared[{label}]"), fit.r_squared);
    }
    art.csv(
        "relaxation_times.csv",
        "e-folding time against collision frequency",
        &["kx", "ky", "kz", "nu", "t_e"],
        &rows,
    )?;
    Ok(true)
}

fn energy_decay(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<bool, CliError> {
    let p = cfg.params;
    let eq = cfg.equilibrium();
    require_maxwellian_if_collisional(cfg, &eq)?;
    let default = ModeSpec { amplitude: Complex64::new(0.5, 0.2), ..ModeSpec::new([1, 0, 0], [0.3, 0.2, 0.0]) };
    let modes = mode_list(cfg, &[default])?;
    let mut kcfg = cfg.numerics.kinsim;
    kcfg.energy_every = kcfg.energy_every.max(1);
    let out = kinsim::run(&p, &eq, &modes, &kcfg).map_err(|e| CliError::numerical("kinsim", "energies", e))?;
    let mut header: Vec<String> = ["t", "E0", "E1", "G"].map(String::from).to_vec();
    header.extend(out.series.iter().map(|s| format!("abs_rho_{}", k_label(s.k.unwrap_or_default()))));
    let rows: Vec<Row> = out
        .energies
        .iter()
        .enumerate()
        .map(|(j, e)| {
            let mut r = vec![num(e.t), num(e.e0), num(e.e1), num(e.g)];
            r.extend(out.series.iter().map(|s| num(s.values[j * kcfg.energy_every].norm())));
            r
        })
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    art.csv("energies.csv", "energy functionals and density magnitudes", &header_refs, &rows)?;
    let e_start = out.energies[0].e0;
    let drift = out.energies.iter().map(|e| (e.e0 - e_start).abs() / e_start).fold(0.0, f64::max);
    let monotone = out.energies.windows(2).all(|w| w[1].e0 <= w[0].e0);
    art.constant("e0_relative_drift", drift);
    art.constant("e0_monotone", monotone);
    if p.nu > 0.0 {
        if let Some(fit) = hypocoercive_decay(&out.energies, p.nu) {
            art.constant("decay_rate", fit.rate);
            art.constant("decay_rate_over_nu", fit.delta);
            art.constant("decay_fit_window", [fit.t_start, fit.t_stop]);
            art.constant("decay_fit_r_squared", fit.r_squared);
        }
        Ok(monotone)
    } else {
        Ok(drift < 1e-6)
    }
}

fn kernel_dump(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<bool, CliError> {
    let n = &cfg.numerics;
    let p = cfg.params;
    let eq = cfg.equilibrium();
    let modes = mode_list(cfg, &[ModeSpec::new([1, 0, 1], [0.0; 3])])?;
    let steps = (n.t_end / n.dt).round() as usize;
    let tables: Vec<Vec<Row>> = modes
        .par_iter()
        .map(|(m, d)| {
            (0..=steps)
                .map(|j| {
                    let t = j as f64 * n.dt;
                    let rho0 =
                        if p.nu > 0.0 { forcing_collisional(t, m, &p, d) } else { forcing_collisionless(t, m, &p, d) };
                    let mut r = vec![
                        num(t),
                        num(kernel_collisionless(t, m, &p, &eq)),
                        num(kernel_collisional(t, m, &p)),
                        num(propagator_s(t, m, &p)),
                    ];
                    r.extend(complex_cols(rho0));
                    r
                })
                .collect()
        })
        .collect();
    for ((m, _), rows) in modes.iter().zip(&tables) {
        art.csv(
            &format!("kernel_{}.csv", k_label(m.k)),
            &format!("kernels, propagator and passive density for k = {:?}", m.k),
            &["t", "K", "K_nu", "S", "rho0_re", "rho0_im"],
            rows,
        )?;
    }
    Ok(true)
}
