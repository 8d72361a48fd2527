//! The dispersion function `L(z, k)`, the Laplace transform of the kernel,
//! in three forms: a Bessel series for transverse modes, a numerical Laplace
//! integral for any mode, and boundary values on the imaginary axis built
//! from principal-value integrals. Also stability margins and winding numbers.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::kernels::{kernel_collisional, kernel_collisionless, propagator, TrajectoryMatrices};
use crate::model::{Equilibrium, ModeContext, PlasmaParams, Wavevector};
use crate::quad;
use crate::specfun::{required_order, weighted_tail_bound, BesselTable, SpecfunError};

/// Distance to a cyclotron harmonic below which the series refuses to evaluate.
pub const POLE_EXCLUSION: f64 = 1.0e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DispersionError {
    #[error("mode {0:?} has k3 != 0; the Bessel series needs a transverse mode")]
    NotTransverse(Wavevector),
    #[error("mode {0:?} has k3 = 0; this operation needs a parallel component")]
    NoParallelComponent(Wavevector),
    #[error("z = {z} lies within {dist:.2e} of the cyclotron harmonic {n} omega_c")]
    PoleProximity { z: Complex64, n: i64, dist: f64 },
    #[error("kernel does not decay fast enough for Re z - shift = {rate}")]
    NonDecaying { rate: f64 },
    #[error("contour passes through a zero of 1 - L at omega = {omega}")]
    ContourThroughZero { omega: f64 },
    #[error(transparent)]
    Bessel(#[from] SpecfunError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Series,
    LaplaceIntegral,
    BoundaryPv,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionSample {
    pub z: Complex64,
    pub k: Wavevector,
    pub value: Complex64,
    pub method: Method,
    pub est_error: f64,
}

/// Precomputed harmonic weights of a transverse mode, so that
/// `L(z) = -sum_{n>=1} w_n omega_c / (z^2 + n^2 omega_c^2)` with
/// `w_n = (q/m) W (|k_perp|^2/omega_c) f3_hat(0) (2n/a) e^{-a} I_n(a) n`.
#[derive(Debug, Clone)]
pub struct TransverseSeries {
    pub k: Wavevector,
    pub omega: f64,
    pub a: f64,
    /// `w_n` at index `n`; index 0 is unused and zero.
    pub weights: Vec<f64>,
    /// Prefactor `(q/m) W (|k_perp|^2/omega_c) f3_hat(0)`.
    pub prefactor: f64,
    /// Scaled Bessel values used to build the weights.
    pub bessel: Vec<f64>,
    /// Bound on `sum_{n>N} e^{-a} I_n(a)`.
    tail_sum: f64,
}

impl TransverseSeries {
    pub fn new(
        mode: &ModeContext,
        params: &PlasmaParams,
        eq: &Equilibrium,
        n_max: usize,
    ) -> Result<Self, DispersionError> {
        if mode.k3 != 0 {
            return Err(DispersionError::NotTransverse(mode.k));
        }
        let omega = params.omega_c();
        let a = mode.a_eff;
        let table = BesselTable::with_order(a, n_max, 1.0e-17)?;
        let prefactor = mode.coupling * mode.k_perp_sq / omega * eq.f3_hat(0.0);
        let weights = (0..=n_max)
            .map(|n| if n == 0 { 0.0 } else { prefactor * 2.0 * (n * n) as f64 / a * table.values[n] })
            .collect();
        let tail_sum = weighted_tail_bound(a, n_max, 0).unwrap_or(f64::INFINITY);
        Ok(Self { k: mode.k, omega, a, weights, prefactor, bessel: table.values, tail_sum })
    }

    /// Builds a series whose tail is below `tol` for all `|z| <= z_abs_max`.
    pub fn for_tolerance(
        mode: &ModeContext,
        params: &PlasmaParams,
        eq: &Equilibrium,
        z_abs_max: f64,
        tol: f64,
    ) -> Result<Self, DispersionError> {
        if mode.k3 != 0 {
            return Err(DispersionError::NotTransverse(mode.k));
        }
        let omega = params.omega_c();
        let scale = Self::tail_scale(mode, params, eq);
        let n_tail = required_order(mode.a_eff, (tol / scale.max(1e-300)).min(1e-3), 0, 20);
        let n_z = (2.0 * z_abs_max / omega).ceil() as usize + 1;
        Self::new(mode, params, eq, n_tail.max(n_z))
    }

    fn tail_scale(mode: &ModeContext, params: &PlasmaParams, eq: &Equilibrium) -> f64 {
        let omega = params.omega_c();
        let pref = (mode.coupling * mode.k_perp_sq / omega * eq.f3_hat(0.0)).abs();
        8.0 * pref / (3.0 * mode.a_eff * omega)
    }

    pub fn n_max(&self) -> usize {
        self.weights.len() - 1
    }

    /// Bound on the omitted harmonics, valid while `n_max omega_c >= 2|z|`.
    pub fn tail_bound(&self, z: Complex64) -> f64 {
        if (self.n_max() as f64) * self.omega < 2.0 * z.norm() {
            return f64::INFINITY;
        }
        8.0 * self.prefactor.abs() / (3.0 * self.a * self.omega) * self.tail_sum
    }

    fn check_poles(&self, z: Complex64) -> Result<(), DispersionError> {
        let x = z / self.omega;
        let n = x.im.abs().round() as i64;
        if n >= 1 {
            let dist = (z - Complex64::new(0.0, x.im.signum() * n as f64 * self.omega)).norm();
            if dist < POLE_EXCLUSION {
                return Err(DispersionError::PoleProximity { z, n: n * x.im.signum() as i64, dist });
            }
        }
        Ok(())
    }

    /// `L(z)` and a bound on truncation plus rounding error.
    pub fn eval(&self, z: Complex64) -> Result<(Complex64, f64), DispersionError> {
        self.check_poles(z)?;
        let z2 = z * z;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut abs_sum = 0.0;
        for (n, &w) in self.weights.iter().enumerate().skip(1) {
            let nw = n as f64 * self.omega;
            let term = w * self.omega / (z2 + nw * nw);
            sum += term;
            abs_sum += term.norm();
        }
        Ok((-sum, self.tail_bound(z) + 4.0 * f64::EPSILON * abs_sum * self.n_max() as f64))
    }

    /// `dL/dz`.
    pub fn derivative(&self, z: Complex64) -> Result<(Complex64, f64), DispersionError> {
        self.check_poles(z)?;
        let z2 = z * z;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut abs_sum = 0.0;
        for (n, &w) in self.weights.iter().enumerate().skip(1) {
            let nw = n as f64 * self.omega;
            let d = z2 + nw * nw;
            let term = 2.0 * z * w * self.omega / (d * d);
            sum += term;
            abs_sum += term.norm();
        }
        let tail = self.tail_bound(z) * 4.0 * z.norm() / (self.omega * self.n_max().max(1) as f64).powi(2);
        Ok((sum, tail + 4.0 * f64::EPSILON * abs_sum * self.n_max() as f64))
    }

    /// `n^2 - x^2` for `x = ell + delta`, without cancellation when `delta` is tiny.
    fn gap(n: usize, ell: i64, delta: f64) -> f64 {
        let n = n as i64;
        ((n - ell) * (n + ell)) as f64 - delta * (2.0 * ell as f64 + delta)
    }

    /// `L(i omega_c x)` for `x = ell + delta`, real on the imaginary axis.
    pub fn eval_imag(&self, ell: i64, delta: f64) -> f64 {
        let s: f64 = self.weights.iter().enumerate().skip(1).map(|(n, &w)| w / Self::gap(n, ell, delta)).sum();
        -s / self.omega
    }

    /// `d/dy L(i y)` at `y = omega_c (ell + delta)`.
    pub fn deriv_imag(&self, ell: i64, delta: f64) -> f64 {
        let x = ell as f64 + delta;
        let s: f64 = self
            .weights
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, &w)| {
                let g = Self::gap(n, ell, delta);
                w / (g * g)
            })
            .sum();
        -2.0 * x * s / (self.omega * self.omega)
    }

    /// Lower bound on `sum |terms|` relative scale, used for rounding estimates.
    pub fn abs_scale_imag(&self, ell: i64, delta: f64) -> f64 {
        self.weights.iter().enumerate().skip(1).map(|(n, &w)| (w / Self::gap(n, ell, delta)).abs()).sum::<f64>()
            / self.omega
    }
}

/// Bessel-series dispersion function for a transverse mode.
pub fn l_series(
    z: Complex64,
    mode: &ModeContext,
    params: &PlasmaParams,
    eq: &Equilibrium,
    tol: f64,
) -> Result<DispersionSample, DispersionError> {
    let series = TransverseSeries::for_tolerance(mode, params, eq, z.norm(), tol)?;
    let (value, est_error) = series.eval(z)?;
    Ok(DispersionSample { z, k: mode.k, value, method: Method::Series, est_error })
}

/// Bessel-series `dL/dz` for a transverse mode.
pub fn dl_dz(
    z: Complex64,
    mode: &ModeContext,
    params: &PlasmaParams,
    eq: &Equilibrium,
    tol: f64,
) -> Result<Complex64, DispersionError> {
    let series = TransverseSeries::for_tolerance(mode, params, eq, z.norm(), tol)?;
    Ok(series.derivative(z)?.0)
}

/// Kernel choice for the Laplace integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Collisionless,
    Collisional,
}

/// `∫_0^∞ e^{-z t} K(t) e^{shift t} dt` by panel-adaptive quadrature.
pub fn l_laplace(
    z: Complex64,
    mode: &ModeContext,
    params: &PlasmaParams,
    eq: &Equilibrium,
    kind: KernelKind,
    shift: f64,
    tol: f64,
) -> Result<DispersionSample, DispersionError> {
    let omega = params.omega_c();
    let rate = z.re - shift;
    let c = mode.coupling.abs();
    let k3 = mode.k3_f64();
    let kabs = mode.k_sq().sqrt();
    let envelope: Box<dyn Fn(f64) -> (f64, f64) + Sync> = match kind {
        KernelKind::Collisionless => {
            let comps: Vec<(f64, f64)> = eq.components().collect();
            let s_min = comps.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            let kp = mode.k_perp_sq / omega;
            if k3 == 0.0 && rate <= 0.0 {
                return Err(DispersionError::NonDecaying { rate });
            }
            Box::new(move |t: f64| {
                let f: f64 = comps.iter().map(|(w, s)| w.abs() * (-0.5 * s * k3 * k3 * t * t).exp()).sum();
                let env = c * (kp + k3 * k3 * t) * f * (-rate * t).exp();
                let decay = s_min * k3 * k3 * t + rate;
                (env, decay)
            })
        }
        KernelKind::Collisional => {
            let cmin = params.t_par.min(1.0);
            let p = *params;
            let m = *mode;
            Box::new(move |t: f64| {
                let s = propagator(t, &m, &p);
                let env = c * kabs / (cmin * std::f64::consts::E).sqrt() * (s.log_value - rate * t).exp();
                let e = TrajectoryMatrices::new(t, &p).apply(m.k_f64());
                let decay = p.nu * (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]) + rate;
                (env, decay)
            })
        }
    };
    let kernel = |t: f64| match kind {
        KernelKind::Collisionless => kernel_collisionless(t, mode, params, eq),
        KernelKind::Collisional => kernel_collisional(t, mode, params),
    };
    let integrand = |t: f64| (-(z - shift) * t).exp() * kernel(t);
    let width = PI / omega.max(z.im.abs()).max(1.0);
    let t_max = 1.0e6;
    let mut t0 = 0.0;
    let mut value = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut panels = 0usize;
    loop {
        let t1 = t0 + width;
        let q = quad::adaptive(&integrand, t0, t1, 0.01 * tol, 1e-14);
        value += q.value;
        err += q.error;
        panels += 1;
        t0 = t1;
        let (env, decay) = envelope(t0);
        if decay > 0.0 && env / decay < 0.1 * tol && panels >= 4 {
            err += env / decay;
            break;
        }
        if t0 > t_max || panels > 2_000_000 {
            return Err(DispersionError::NonDecaying { rate });
        }
    }
    Ok(DispersionSample { z, k: mode.k, value, method: Method::LaplaceIntegral, est_error: err })
}

/// `PV ∫ g(v) / (v - v_r) dv` by symmetric singularity subtraction over
/// `|v - v_r| <= 1` and plain quadrature outside, on `[-v_cut, v_cut]`.
pub fn principal_value<G: Fn(f64) -> f64>(g: &G, v_r: f64, v_cut: f64, tol: f64) -> f64 {
    let inner = |u: f64| {
        if u == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new((g(v_r + u) - g(v_r - u)) / u, 0.0)
        }
    };
    let mut total = quad::adaptive(&inner, 0.0, 1.0, tol, 1e-14).value.re;
    let outer = |v: f64| Complex64::new(g(v) / (v - v_r), 0.0);
    let (lo, hi) = (v_r - 1.0, v_r + 1.0);
    if hi < v_cut {
        total += quad::adaptive(&outer, hi, v_cut.max(hi), tol, 1e-14).value.re;
    }
    if lo > -v_cut {
        total += quad::adaptive(&outer, -v_cut, lo, tol, 1e-14).value.re;
    }
    total
}

/// Boundary value `L(i omega, k)` for a mode with `k3 != 0`, from the
/// harmonic expansion of the kernel and principal-value integrals of `f3`
/// and `f3'` at the resonant velocities `-(omega - n omega_c)/k3`.
pub fn l_boundary(
    omega: f64,
    mode: &ModeContext,
    params: &PlasmaParams,
    eq: &Equilibrium,
) -> Result<Complex64, DispersionError> {
    Ok(BoundaryEvaluator::new(mode, params, eq, 1.0e-13)?.eval(omega))
}

/// Reusable boundary-value evaluator holding the Bessel table of one mode.
#[derive(Debug, Clone)]
pub struct BoundaryEvaluator {
    mode: ModeContext,
    omega_c: f64,
    eq: Equilibrium,
    bessel: BesselTable,
    v_cut: f64,
    tol: f64,
}

impl BoundaryEvaluator {
    pub fn new(mode: &ModeContext, params: &PlasmaParams, eq: &Equilibrium, tol: f64) -> Result<Self, DispersionError> {
        if mode.k3 == 0 {
            return Err(DispersionError::NoParallelComponent(mode.k));
        }
        let a = mode.a_eff;
        let n_max = required_order(a, tol * 1e-2, 1, 20).max((2.0 * a).ceil() as usize);
        let bessel = BesselTable::with_order(a, n_max, 1.0e-17)?;
        let v_cut = 14.0 * eq.max_variance().sqrt();
        Ok(Self { mode: *mode, omega_c: params.omega_c(), eq: eq.clone(), bessel, v_cut, tol })
    }

    /// `∫_0^∞ e^{-i w t} f3_hat(k3 t) dt` and `k3^2 ∫_0^∞ t e^{-i w t} f3_hat(k3 t) dt`.
    fn resolvents(&self, w: f64) -> (Complex64, Complex64) {
        let k3 = self.mode.k3_f64();
        let v_r = -w / k3;
        let eq = &self.eq;
        let tol = self.tol * 1e-2;
        let pv0 = if v_r.abs() > self.v_cut + 1.0 {
            self.far_pv(|v| eq.f3(v), v_r)
        } else {
            principal_value(&|v| eq.f3(v), v_r, self.v_cut, tol)
        };
        let pv1 = if v_r.abs() > self.v_cut + 1.0 {
            self.far_pv(|v| eq.f3_prime(v), v_r)
        } else {
            principal_value(&|v| eq.f3_prime(v), v_r, self.v_cut, tol)
        };
        let g0 = Complex64::new(PI / k3.abs() * eq.f3(v_r), -pv0 / k3);
        let g1 = Complex64::new(-pv1, -PI * k3.signum() * eq.f3_prime(v_r));
        (g0, g1)
    }

    fn far_pv<G: Fn(f64) -> f64>(&self, g: G, v_r: f64) -> f64 {
        let f = |v: f64| Complex64::new(g(v) / (v - v_r), 0.0);
        quad::adaptive(&f, -self.v_cut, self.v_cut, self.tol * 1e-2, 1e-14).value.re
    }

    pub fn eval(&self, omega: f64) -> Complex64 {
        let n_max = self.bessel.n_max() as i64;
        let mut sum = Complex64::new(0.0, 0.0);
        for n in -n_max..=n_max {
            let i_n = self.bessel.get(n);
            if i_n == 0.0 {
                continue;
            }
            let nw = n as f64 * self.omega_c;
            let (g0, g1) = self.resolvents(omega - nw);
            sum += i_n * (Complex64::new(0.0, -nw) * g0 + g1);
        }
        -self.mode.coupling * sum
    }
}

/// Sampled rectangle for a stability-margin scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginGrid {
    pub lambda_max: f64,
    pub omega_max: f64,
    pub n_re: usize,
    pub n_im: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    pub k: Wavevector,
    pub kappa: f64,
    pub argmin_re: f64,
    pub argmin_im: f64,
    pub grid: MarginGrid,
}

/// `min |1 - L(z)|` over `0 <= Re z <= lambda_max`, `|Im z| <= omega_max`,
/// with boundary values on the axis and Laplace integrals inside.
pub fn stability_margin(
    mode: &ModeContext,
    params: &PlasmaParams,
    eq: &Equilibrium,
    grid: MarginGrid,
) -> Result<MarginReport, DispersionError> {
    let boundary = BoundaryEvaluator::new(mode, params, eq, 1e-12)?;
    let points: Vec<(usize, usize)> = (0..=grid.n_re).flat_map(|i| (0..=grid.n_im).map(move |j| (i, j))).collect();
    let values: Vec<Result<(f64, Complex64), DispersionError>> = points
        .par_iter()
        .map(|&(i, j)| {
            let re = grid.lambda_max * i as f64 / grid.n_re.max(1) as f64;
            let im = -grid.omega_max + 2.0 * grid.omega_max * j as f64 / grid.n_im.max(1) as f64;
            let z = Complex64::new(re, im);
            let l = if i == 0 {
                boundary.eval(im)
            } else {
                l_laplace(z, mode, params, eq, KernelKind::Collisionless, 0.0, 1e-10)?.value
            };
            Ok(((1.0 - l).norm(), z))
        })
        .collect();
    let mut best = (f64::INFINITY, Complex64::new(0.0, 0.0));
    for v in values {
        let v = v?;
        if v.0 < best.0 {
            best = v;
        }
    }
    Ok(MarginReport { k: mode.k, kappa: best.0, argmin_re: best.1.re, argmin_im: best.1.im, grid })
}

/// Number of zeros of `1 - L` in the right half-plane, from the argument
/// change of `1 - L(i omega)` along the imaginary axis (closed at infinity
/// where `L -> 0`). Samples are refined wherever the phase jumps.
pub fn winding_number(
    mode: &ModeContext,
    params: &PlasmaParams,
    eq: &Equilibrium,
    omega_max: f64,
    n_samples: usize,
) -> Result<i64, DispersionError> {
    let boundary = BoundaryEvaluator::new(mode, params, eq, 1e-12)?;
    let f = |w: f64| -> Result<Complex64, DispersionError> {
        let v = 1.0 - boundary.eval(w);
        if v.norm() < 1e-8 {
            return Err(DispersionError::ContourThroughZero { omega: w });
        }
        Ok(v)
    };
    let omegas: Vec<f64> =
        (0..=n_samples).map(|j| -omega_max + 2.0 * omega_max * j as f64 / n_samples.max(1) as f64).collect();
    let vals = omegas.par_iter().map(|&w| f(w)).collect::<Result<Vec<_>, _>>()?;
    let mut total = 0.0;
    for j in 0..n_samples {
        total += refined_arg_change(&f, omegas[j], omegas[j + 1], vals[j], vals[j + 1], 0)?;
    }
    total += (Complex64::new(1.0, 0.0) / vals[n_samples]).arg() + (vals[0] / Complex64::new(1.0, 0.0)).arg();
    Ok((-total / (2.0 * PI)).round() as i64)
}

fn refined_arg_change<F: Fn(f64) -> Result<Complex64, DispersionError>>(
    f: &F,
    a: f64,
    b: f64,
    fa: Complex64,
    fb: Complex64,
    depth: usize,
) -> Result<f64, DispersionError> {
    let d = (fb / fa).arg();
    if d.abs() < 0.5 || depth > 30 {
        return Ok(d);
    }
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    Ok(refined_arg_change(f, a, m, fa, fm, depth + 1)? + refined_arg_change(f, m, b, fm, fb, depth + 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn principal_value_of_odd_function_about_zero() {
        let v = principal_value(&|v: f64| (-0.5 * v * v).exp(), 0.0, 14.0, 1e-14);
        assert!(v.abs() < 1e-13);
    }

    #[test]
    fn series_rejects_harmonic() {
        let p = PlasmaParams::default();
        let m = ModeContext::new([1, 0, 0], &p).unwrap();
        let eq = Equilibrium::maxwellian();
        let r = l_series(Complex64::new(0.0, 2.0), &m, &p, &eq, 1e-12);
        assert!(matches!(r, Err(DispersionError::PoleProximity { n: 2, .. })));
    }
}
