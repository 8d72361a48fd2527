//! Trapezoidal product integration for scalar Volterra equations of the
//! second kind, `rho(t) = f(t) + ∫_0^t K(t - tau) rho(tau) dtau`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Wavevector;

/// Growth factor over the forcing that aborts the march.
pub const BLOW_UP_FACTOR: f64 = 1.0e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VolterraError {
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("solution blew up at t = {t} (|rho| = {magnitude:.3e} > {limit:.3e})")]
    BlowUp { t: f64, magnitude: f64, limit: f64 },
    #[error("non-finite value at t = {0}")]
    NonFinite(f64),
}

/// How a time series was produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct SeriesMeta {
    pub kernel: String,
    pub solver_order: u32,
    pub n_steps: usize,
}

/// Complex samples on the uniform grid `t_j = j dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub dt: f64,
    pub values: Vec<Complex64>,
    pub k: Option<Wavevector>,
    pub meta: SeriesMeta,
}

impl TimeSeries {
    pub fn new(dt: f64, values: Vec<Complex64>) -> Self {
        let n_steps = values.len().saturating_sub(1);
        Self { dt, values, k: None, meta: SeriesMeta { n_steps, ..Default::default() } }
    }

    pub fn with_mode(mut self, k: Wavevector) -> Self {
        self.k = Some(k);
        self
    }

    pub fn with_kernel_label(mut self, label: &str) -> Self {
        self.meta.kernel = label.to_string();
        self
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |j| j as f64 * self.dt)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Solves the Volterra equation on `[0, t_end]` with step `dt`.
///
/// Starts from `rho_0 = f_0`; each later step solves
/// `(1 - dt K(0)/2) rho_n = f_n + dt (K_n rho_0 / 2 + sum_{0<i<n} K_{n-i} rho_i)`,
/// which reduces to an explicit update when `K(0) = 0`.
pub fn solve<F, K>(forcing: F, kernel: K, dt: f64, t_end: f64) -> Result<TimeSeries, VolterraError>
where
    F: Fn(f64) -> Complex64,
    K: Fn(f64) -> f64,
{
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(VolterraError::InvalidStep(dt));
    }
    let n = (t_end / dt).round() as usize;
    let f: Vec<Complex64> = (0..=n).map(|j| forcing(j as f64 * dt)).collect();
    let kern: Vec<f64> = (0..=n).map(|j| kernel(j as f64 * dt)).collect();
    solve_sampled(&f, &kern, dt)
}

/// Same as [`solve`] with forcing and kernel already sampled on the grid.
pub fn solve_sampled(f: &[Complex64], kern: &[f64], dt: f64) -> Result<TimeSeries, VolterraError> {
    let n = f.len();
    let limit = BLOW_UP_FACTOR * f.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    let diag = 1.0 - 0.5 * dt * kern[0];
    for j in 0..n {
        let (mut acc_re, mut acc_im) = (0.0, 0.0);
        if j > 0 {
            acc_re = 0.5 * kern[j] * re[0];
            acc_im = 0.5 * kern[j] * im[0];
            let hist = &kern[1..j];
            for (kv, (r, i)) in hist.iter().rev().zip(re[1..j].iter().zip(&im[1..j])) {
                acc_re += kv * r;
                acc_im += kv * i;
            }
        }
        let v = if j == 0 { f[0] } else { (f[j] + Complex64::new(acc_re, acc_im) * dt) / diag };
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(VolterraError::NonFinite(j as f64 * dt));
        }
        if v.norm() > limit && limit > 0.0 {
            return Err(VolterraError::BlowUp { t: j as f64 * dt, magnitude: v.norm(), limit });
        }
        re[j] = v.re;
        im[j] = v.im;
    }
    let values = re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect();
    let mut ts = TimeSeries::new(dt, values);
    ts.meta.solver_order = 2;
    Ok(ts)
}

/// Observed order from solutions with steps `dt`, `dt/2`, `dt/4`, compared
/// in the maximum norm on the coarse grid.
pub fn convergence_order<F, K>(forcing: F, kernel: K, dt: f64, t_end: f64) -> Result<f64, VolterraError>
where
    F: Fn(f64) -> Complex64,
    K: Fn(f64) -> f64,
{
    let s1 = solve(&forcing, &kernel, dt, t_end)?;
    let s2 = solve(&forcing, &kernel, dt / 2.0, t_end)?;
    let s4 = solve(&forcing, &kernel, dt / 4.0, t_end)?;
    let mut e12: f64 = 0.0;
    let mut e24: f64 = 0.0;
    for j in 0..s1.len() {
        e12 = e12.max((s1.values[j] - s2.values[2 * j]).norm());
        e24 = e24.max((s2.values[2 * j] - s4.values[4 * j]).norm());
    }
    Ok((e12 / e24).log2())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_kernel_returns_forcing() {
        let f = |t: f64| Complex64::new(t.sin(), t.cos());
        let s = solve(f, |_| 0.0, 0.1, 2.0).unwrap();
        for (j, v) in s.values.iter().enumerate() {
            assert_eq!(*v, f(j as f64 * 0.1));
        }
    }

    #[test]
    fn rejects_bad_step() {
        assert!(matches!(solve(|_| Complex64::new(1.0, 0.0), |_| 0.0, 0.0, 1.0), Err(VolterraError::InvalidStep(_))));
    }
}
