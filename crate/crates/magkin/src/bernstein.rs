//! Bernstein frequencies, residues of the density transform and the
//! standing-wave reconstruction of transverse modes (`k3 = 0`).
//!
//! Roots of `1 - L(i omega_c x)` lie just above each harmonic `n` and can sit
//! within `1e-40` of it, so each frequency is stored as `n + delta` with the
//! offset `delta` kept separately at full relative precision.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispersion::{DispersionError, TransverseSeries};
use crate::kernels::{g_coefficients, GCoefficients, KernelError};
use crate::model::{Equilibrium, ModeContext, ModeData, PlasmaParams, Wavevector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BernsteinError {
    #[error("no sign change of L - 1 found in ({n}, {n} + 1)")]
    BracketFailure { n: usize },
    #[error("g-sequence tail {tail:.3e} exceeds tolerance {tol:.1e}")]
    TailDominance { tail: f64, tol: f64 },
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Bernstein frequency `b_n = n + delta` in units of `omega_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernsteinRoot {
    pub n: usize,
    pub delta: f64,
}

impl BernsteinRoot {
    pub fn b(&self) -> f64 {
        self.n as f64 + self.delta
    }
}

/// One oscillatory mode of the transverse density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeEntry {
    pub n: usize,
    pub b_n: f64,
    pub delta: f64,
    pub r_plus: Complex64,
    pub r_minus: Complex64,
}

/// Residue expansion `rho(t) = r_0 + sum_n r_{+n} e^{i b_n omega_c t} + r_{-n} e^{-i b_n omega_c t}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeDecomposition {
    pub k: Wavevector,
    pub omega_c: f64,
    /// Residue of the zero-frequency pole, present when `g_0 != 0`.
    pub r_zero: Complex64,
    /// `L(0)`, which is negative, so `1 - L(0) > 1`.
    pub l_at_zero: f64,
    /// Whether a root of `L(iy) = 1` exists in `(0, omega_c)`.
    pub root_in_first_interval: bool,
    pub modes: Vec<ModeEntry>,
    pub n_max: usize,
    pub truncation_estimate: f64,
}

/// Sampled time series with an error band.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub dt: f64,
    pub values: Vec<Complex64>,
    pub error_band: f64,
}

fn series_for(
    mode: &ModeContext,
    params: &PlasmaParams,
    eq: &Equilibrium,
    n_max: usize,
    tol: f64,
) -> Result<TransverseSeries, DispersionError> {
    let z = params.omega_c() * (n_max as f64 + 1.0);
    let s = TransverseSeries::for_tolerance(mode, params, eq, z, tol * 1e-3)?;
    if s.n_max() < n_max + 12 {
        TransverseSeries::new(mode, params, eq, n_max + 12)
    } else {
        Ok(s)
    }
}

/// Root of `L(i omega_c (n + delta)) = 1` for `delta in (0, 1)` by bisection
/// on `delta`, followed by two Newton steps.
fn root_in_interval(series: &TransverseSeries, n: usize, tol: f64) -> Result<BernsteinRoot, BernsteinError> {
    let ell = n as i64;
    let f = |d: f64| series.eval_imag(ell, d) - 1.0;
    let mut lo = 1.0e-9;
    while f(lo) <= 0.0 {
        lo *= 1.0e-3;
        if lo < 1.0e-300 {
            return Err(BernsteinError::BracketFailure { n });
        }
    }
    let mut hi = 1.0 - 1.0e-9;
    if f(hi) >= 0.0 {
        return Err(BernsteinError::BracketFailure { n });
    }
    let log_mode = lo < 1e-6;
    for _ in 0..2000 {
        let mid = if log_mode && hi / lo > 4.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-15 * hi.max(1e-300) {
            break;
        }
    }
    let mut d = 0.5 * (lo + hi);
    for _ in 0..2 {
        let fd = f(d);
        let dd = series.deriv_imag(ell, d) * series.omega;
        let next = d - fd / dd;
        if next > 0.0 && next < 1.0 && f(next).abs() <= fd.abs() {
            d = next;
        }
    }
    let resid = f(d).abs();
    let scale = series.abs_scale_imag(ell, d);
    if resid > tol.max(8.0 * f64::EPSILON * scale) {
        return Err(BernsteinError::BracketFailure { n });
    }
    Ok(BernsteinRoot { n, delta: d })
}

/// Bernstein frequencies `b_n in (n, n+1)` for `n = 1..=n_max`.
pub fn find_modes(
    mode: &ModeContext,
    params: &PlasmaParams,
    eq: &Equilibrium,
    n_max: usize,
    tol: f64,
) -> Result<Vec<BernsteinRoot>, BernsteinError> {
    let series = series_for(mode, params, eq, n_max, tol)?;
    (1..=n_max).map(|n| root_in_interval(&series, n, tol)).collect()
}

/// Whether `L(iy) = 1` has a root with `0 < y < omega_c`. Scans `L - 1`
/// on a fine grid; `L` is negative there for repulsive interactions.
pub fn first_interval_root(series: &TransverseSeries) -> bool {
    (1..1000).any(|j| series.eval_imag(0, j as f64 / 1000.0) >= 1.0)
}

/// Laplace transform of the passive density, `sum_n g_n / (z - i n omega_c)`,
/// evaluated at `z = i s omega_c (ell + delta)` with `s = ±1`.
fn forcing_transform(g: &GCoefficients, omega: f64, sign: f64, ell: i64, delta: f64) -> Complex64 {
    g.indices()
        .map(|n| {
            let gap = if sign > 0.0 { (ell - n) as f64 + delta } else { -((ell + n) as f64 + delta) };
            g.get(n) / Complex64::new(0.0, omega * gap)
        })
        .sum()
}

/// Residue decomposition of the transverse density for Gaussian data.
pub fn residues(
    mode: &ModeContext,
    params: &PlasmaParams,
    eq: &Equilibrium,
    data: &ModeData,
    n_max: usize,
    tol: f64,
) -> Result<ModeDecomposition, BernsteinError> {
    let omega = params.omega_c();
    let series = series_for(mode, params, eq, n_max, tol)?;
    let g_order = (n_max + 16).max(48);
    let g = g_coefficients(mode, params, data, g_order, 1e-14)?;
    let g_tail: f64 = (n_max as i64 + 1..=g_order as i64).map(|n| g.get(n).norm() + g.get(-n).norm()).sum();
    let roots: Vec<BernsteinRoot> = (1..=n_max).map(|n| root_in_interval(&series, n, tol)).collect::<Result<_, _>>()?;
    let mut modes = Vec::with_capacity(n_max);
    for root in &roots {
        let ell = root.n as i64;
        // dL/dz at z = ±i y equals ∓i dL/dy(y).
        let dldy = series.deriv_imag(ell, root.delta);
        let dz_plus = Complex64::new(0.0, -dldy);
        let dz_minus = Complex64::new(0.0, dldy);
        let r_plus = forcing_transform(&g, omega, 1.0, ell, root.delta) / (-dz_plus);
        let r_minus = forcing_transform(&g, omega, -1.0, ell, root.delta) / (-dz_minus);
        modes.push(ModeEntry { n: root.n, b_n: root.b(), delta: root.delta, r_plus, r_minus });
    }
    let l_at_zero = series.eval_imag(0, 0.0);
    let r_zero = g.get(0) / (1.0 - l_at_zero);
    let last = modes.last().map_or(0.0, |m| m.r_plus.norm() + m.r_minus.norm());
    let truncation_estimate = g_tail + 2.0 * last;
    if g.trailing > tol.max(1e-12) {
        return Err(BernsteinError::TailDominance { tail: g.trailing, tol });
    }
    Ok(ModeDecomposition {
        k: mode.k,
        omega_c: omega,
        r_zero,
        l_at_zero,
        root_in_first_interval: first_interval_root(&series),
        modes,
        n_max,
        truncation_estimate,
    })
}

impl ModeDecomposition {
    /// Keeps only the modes with `n <= n_keep`.
    pub fn truncated(&self, n_keep: usize) -> Self {
        let mut out = self.clone();
        out.modes.retain(|m| m.n <= n_keep);
        out.n_max = n_keep.min(self.n_max);
        out
    }

    /// Density at time `t` from the residue sum.
    pub fn value_at(&self, t: f64) -> Complex64 {
        let mut v = self.r_zero;
        for m in &self.modes {
            let ph = Complex64::from_polar(1.0, m.b_n * self.omega_c * t);
            v += m.r_plus * ph + m.r_minus * ph.conj();
        }
        v
    }
}

/// Evaluates the residue sum on `t_j = j dt`, `j = 0..n_steps`.
pub fn reconstruct(decomp: &ModeDecomposition, dt: f64, n_steps: usize) -> Reconstruction {
    let values = (0..=n_steps).map(|j| decomp.value_at(j as f64 * dt)).collect();
    Reconstruction { dt, values, error_band: decomp.truncation_estimate }
}

/// Finite value of `rho^(z) = rho_0^(z) / (1 - L(z))` at the harmonic
/// `z = i ell omega_c`, where both numerator and `L` have simple poles.
pub fn harmonic_limit(series: &TransverseSeries, g: &GCoefficients, ell: usize) -> Complex64 {
    let w = series.weights[ell];
    Complex64::new(0.0, 2.0 * ell as f64) * g.get(ell as i64) / w
}

/// `rho_0^(z) / (1 - L(z))` at `z = i omega_c (ell + delta)`, used to check
/// the removable singularity numerically.
pub fn transform_near_harmonic(series: &TransverseSeries, g: &GCoefficients, ell: usize, delta: f64) -> Complex64 {
    let num = forcing_transform(g, series.omega, 1.0, ell as i64, delta);
    num / (1.0 - series.eval_imag(ell as i64, delta))
}
