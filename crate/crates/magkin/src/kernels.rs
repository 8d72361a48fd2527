//! Time-domain kernels and forcing densities for one spatial mode.
//!
//! The velocity-frequency transport is generated by the matrix
//! `A = [[nu, omega_c, 0], [-omega_c, nu, 0], [0, 0, nu]]`. On the
//! perpendicular plane, written as `z = eta_1 + i eta_2`, it acts as
//! multiplication by `nu - i omega_c`, which gives all trajectory matrices
//! in closed form through `phi1(x) = (e^x - 1)/x`.

use num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::model::{Equilibrium, ModeContext, ModeData, ModelError, PlasmaParams, Vec3};
use crate::quad;

/// Values of `S` below this threshold are reported as exactly zero.
pub const UNDERFLOW_THRESHOLD: f64 = 1.0e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("g-coefficients require a transverse mode (k3 = 0, k_perp != 0), got k = {0:?}")]
    NotTransverse([i64; 3]),
    #[error("angular sampling aliased: trailing coefficient {trailing:.3e} exceeds {tol:.1e} with n_max = {n_max}")]
    Aliasing { n_max: usize, trailing: f64, tol: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `(e^x - 1)/x` for complex `x`, with a power series near the origin.
pub fn phi1(x: Complex64) -> Complex64 {
    if x.norm() < 0.3 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for n in 2..30 {
            term *= x / n as f64;
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        (x.exp() - 1.0) / x
    }
}

fn phi1_real(x: f64) -> f64 {
    phi1(Complex64::new(x, 0.0)).re
}

/// Entries of `M(t) = ∫_0^t e^{-u A} du`, which also equals
/// `e^{sA} ∫_s^{s+t} e^{-rA} dr` for any `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryMatrices {
    pub t: f64,
    pub a11: f64,
    pub a12: f64,
    /// `(1 - e^{-nu t})/nu`, equal to `t` at `nu = 0`.
    pub third_diag: f64,
}

impl TrajectoryMatrices {
    pub fn new(t: f64, params: &PlasmaParams) -> Self {
        Self::with_rates(t, params.nu, params.omega_c())
    }

    pub fn with_rates(t: f64, nu: f64, omega: f64) -> Self {
        let c = Complex64::new(-nu, omega);
        let m = phi1(c * t) * t;
        Self { t, a11: m.re, a12: -m.im, third_diag: t * phi1_real(-nu * t) }
    }

    /// `M(t) k`, the Orr-critical frequency when applied to a wavevector.
    pub fn apply(&self, k: Vec3) -> Vec3 {
        [self.a11 * k[0] + self.a12 * k[1], -self.a12 * k[0] + self.a11 * k[1], self.third_diag * k[2]]
    }

    /// Full 3x3 matrix form.
    pub fn matrix(&self) -> [[f64; 3]; 3] {
        [[self.a11, self.a12, 0.0], [-self.a12, self.a11, 0.0], [0.0, 0.0, self.third_diag]]
    }
}

/// `e^{-t A} eta`.
pub fn exp_neg_a(t: f64, nu: f64, omega: f64, eta: Vec3) -> Vec3 {
    let rot = Complex64::new(-nu * t, omega * t).exp() * Complex64::new(eta[0], eta[1]);
    [rot.re, rot.im, (-nu * t).exp() * eta[2]]
}

/// Rotation `O(t)` of the collisionless characteristics.
pub fn rotation_o(t: f64, omega: f64) -> [[f64; 3]; 3] {
    let (s, c) = (omega * t).sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

/// Integrated rotation `Õ(t)` of the collisionless characteristics.
pub fn rotation_o_tilde(t: f64, omega: f64) -> [[f64; 3]; 3] {
    let s = (omega * t).sin();
    let one_minus_c = 2.0 * (0.5 * omega * t).sin().powi(2);
    [[s / omega, -one_minus_c / omega, 0.0], [one_minus_c / omega, s / omega, 0.0], [0.0, 0.0, t]]
}

fn mat_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|l| a[i][l] * b[l][j]).sum();
        }
    }
    out
}

fn transpose(a: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

fn mat_vec(a: &[[f64; 3]; 3], v: Vec3) -> Vec3 {
    [0, 1, 2].map(|i| a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2])
}

/// `O(t) Õ(t)^T k`, assembled from the explicit matrices.
pub fn collisionless_frequency(t: f64, k: Vec3, omega: f64) -> Vec3 {
    let prod = mat_mul(&rotation_o(t, omega), &transpose(&rotation_o_tilde(t, omega)));
    mat_vec(&prod, k)
}

/// Collisionless kernel in closed form:
/// `-(q/m) W (|k_perp|^2 sin(w t)/w + k3^2 t) exp(-a_eff (1 - cos w t)) f3_hat(k3 t)`.
pub fn kernel_collisionless(t: f64, mode: &ModeContext, params: &PlasmaParams, eq: &Equilibrium) -> f64 {
    let w = params.omega_c();
    let k3 = mode.k3_f64();
    let one_minus_c = 2.0 * (0.5 * w * t).sin().powi(2);
    let bracket = mode.k_perp_sq * (w * t).sin() / w + k3 * k3 * t;
    -mode.coupling * bracket * (-mode.a_eff * one_minus_c).exp() * eq.f3_hat(k3 * t)
}

/// Kernel evaluated directly from the source term `-(q/m) E^·(∇_v f0)^(eta)`
/// per unit density, with `E^ = -i k W rho^`, `(∇_v f0)^(eta) = i eta f0^(eta)`
/// and `eta = O(t) Õ(t)^T k`.
pub fn kernel_oracle(t: f64, mode: &ModeContext, params: &PlasmaParams, eq: &Equilibrium) -> f64 {
    let k = mode.k_f64();
    let eta = collisionless_frequency(t, k, params.omega_c());
    let i = Complex64::i();
    let f0 = eq.f0_hat(eta);
    let mut dot = Complex64::new(0.0, 0.0);
    for j in 0..3 {
        let e_field = -i * k[j] * mode.w_hat;
        let grad_f0 = i * eta[j] * f0;
        dot += e_field * grad_f0;
    }
    let source = -(params.q / params.m) * dot;
    source.re
}

/// Value of the collisional propagator together with its logarithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagator {
    pub value: f64,
    pub log_value: f64,
    /// Set when `value` fell below [`UNDERFLOW_THRESHOLD`] and was replaced by 0.
    pub clamped: bool,
}

/// `∫_0^t |1 - e^{c u}|^2 du` for `c = -nu + i omega`.
fn perp_integral(t: f64, nu: f64, omega: f64) -> f64 {
    let c = Complex64::new(-nu, omega);
    if c.norm() * t <= 1.0 {
        let two_re = 2.0 * c.re;
        let mut pow_two = two_re;
        let mut pow_c = c;
        let mut tpow = t;
        let mut fact = 1.0;
        let mut sum = 0.0;
        for n in 1..60 {
            tpow *= t;
            fact *= (n + 1) as f64;
            if n >= 2 {
                let coeff = pow_two - 2.0 * pow_c.re;
                let term = coeff * tpow / fact;
                sum += term;
                if term.abs() < 1e-18 * sum.abs() {
                    break;
                }
            }
            pow_two *= two_re;
            pow_c *= c;
        }
        sum
    } else {
        t - 2.0 * (phi1(c * t) * t).re + t * phi1_real(-2.0 * nu * t)
    }
}

/// `phi(x)/x^3` with `phi(x) = x - 2(1 - e^{-x}) + (1 - e^{-2x})/2`.
fn parallel_shape(x: f64) -> f64 {
    if x < 0.5 {
        let mut sum = 0.0;
        let mut xpow = 1.0;
        let mut fact = 6.0;
        let mut two_pow = 4.0;
        for n in 3..60 {
            if n > 3 {
                xpow *= x;
                fact *= n as f64;
                two_pow *= 2.0;
            }
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            let term = sign * (two_pow - 2.0) * xpow / fact;
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        (x - 2.0 * (-(-x).exp_m1()) - 0.5 * (-2.0 * x).exp_m1()) / (x * x * x)
    }
}

/// `log S(t, k) = -nu ∫_0^t |M(u) k|^2 du` in closed form.
pub fn log_propagator(t: f64, mode: &ModeContext, params: &PlasmaParams) -> f64 {
    let nu = params.nu;
    if nu == 0.0 || t == 0.0 {
        return 0.0;
    }
    let w = params.omega_c();
    let k3 = mode.k3_f64();
    let perp =
        if mode.k_perp_sq > 0.0 { nu * mode.k_perp_sq * perp_integral(t, nu, w) / (nu * nu + w * w) } else { 0.0 };
    let par = k3 * k3 * nu * t * t * t * parallel_shape(nu * t);
    -(perp + par)
}

/// Collisional propagator with underflow clamping.
pub fn propagator(t: f64, mode: &ModeContext, params: &PlasmaParams) -> Propagator {
    let log_value = log_propagator(t, mode, params);
    let value = log_value.exp();
    if value < UNDERFLOW_THRESHOLD {
        Propagator { value: 0.0, log_value, clamped: true }
    } else {
        Propagator { value, log_value, clamped: false }
    }
}

/// `S(t, k)` as a plain number.
pub fn propagator_s(t: f64, mode: &ModeContext, params: &PlasmaParams) -> f64 {
    propagator(t, mode, params).value
}

/// `log S` from adaptive quadrature of `nu |M(u) k|^2`, with panels split at
/// multiples of `pi / omega_c`. Returns the value and the error estimate.
pub fn log_propagator_integral(t: f64, mode: &ModeContext, params: &PlasmaParams, tol: f64) -> (f64, f64) {
    let nu = params.nu;
    let w = params.omega_c();
    let k = mode.k_f64();
    let integrand = |u: f64| {
        let e = TrajectoryMatrices::with_rates(u, nu, w).apply(k);
        Complex64::new(nu * (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]), 0.0)
    };
    let period = std::f64::consts::PI / w;
    let n_breaks = ((t / period).floor() as usize).min(10_000);
    let mut breaks: Vec<f64> = (0..=n_breaks).map(|j| j as f64 * period).filter(|&x| x < t).collect();
    breaks.push(t);
    let q = quad::adaptive_with_breaks(&integrand, &breaks, tol, tol);
    (-q.value.re, q.error)
}

/// Collisional kernel `-(q/m) W (k·eta_CT) exp(-|eta_CT,perp|^2/2 - t_par eta_CT,3^2/2) S(t)`.
pub fn kernel_collisional(t: f64, mode: &ModeContext, params: &PlasmaParams) -> f64 {
    let s = propagator(t, mode, params);
    if s.clamped {
        return 0.0;
    }
    let k = mode.k_f64();
    let eta = TrajectoryMatrices::new(t, params).apply(k);
    let dot = k[0] * eta[0] + k[1] * eta[1] + k[2] * eta[2];
    let gauss = (-0.5 * (eta[0] * eta[0] + eta[1] * eta[1]) - 0.5 * params.t_par * eta[2] * eta[2]).exp();
    -mode.coupling * dot * gauss * s.value
}

/// Passive-transport density `h_in^(k, O(t) Õ(t)^T k)`.
pub fn forcing_collisionless(t: f64, mode: &ModeContext, params: &PlasmaParams, data: &ModeData) -> Complex64 {
    let eta = TrajectoryMatrices::with_rates(t, 0.0, params.omega_c()).apply(mode.k_f64());
    data.h_hat(eta)
}

/// Collisional passive density `S(t) h_in^(k, eta_CT(t))`.
pub fn forcing_collisional(t: f64, mode: &ModeContext, params: &PlasmaParams, data: &ModeData) -> Complex64 {
    let s = propagator(t, mode, params);
    if s.clamped {
        return Complex64::new(0.0, 0.0);
    }
    let eta = TrajectoryMatrices::new(t, params).apply(mode.k_f64());
    data.h_hat(eta) * s.value
}

/// Angular Fourier coefficients of the transverse passive density,
/// `rho_0(t) = sum_n g_n e^{i n omega_c t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GCoefficients {
    pub n_max: usize,
    /// `g_n` stored at index `n + n_max`.
    pub values: Vec<Complex64>,
    pub samples: usize,
    /// Largest discarded coefficient magnitude.
    pub trailing: f64,
}

impl GCoefficients {
    pub fn get(&self, n: i64) -> Complex64 {
        let idx = n + self.n_max as i64;
        if idx < 0 || idx as usize >= self.values.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.values[idx as usize]
        }
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> {
        let m = self.n_max as i64;
        -m..=m
    }

    /// `sum_n g_n e^{i n omega t}`.
    pub fn reconstruct(&self, t: f64, omega: f64) -> Complex64 {
        self.indices().map(|n| self.get(n) * Complex64::from_polar(1.0, n as f64 * omega * t)).sum()
    }
}

/// Samples the passive density over one gyration period at `N >= 4 n_max`
/// equispaced angles and returns its discrete Fourier coefficients.
pub fn g_coefficients(
    mode: &ModeContext,
    params: &PlasmaParams,
    data: &ModeData,
    n_max: usize,
    tol: f64,
) -> Result<GCoefficients, KernelError> {
    if mode.k3 != 0 || mode.k_perp_sq == 0.0 {
        return Err(KernelError::NotTransverse(mode.k));
    }
    let samples = (4 * n_max).max(64).next_power_of_two();
    let w = params.omega_c();
    let period = 2.0 * std::f64::consts::PI / w;
    let mut buf: Vec<Complex64> =
        (0..samples).map(|j| forcing_collisionless(period * j as f64 / samples as f64, mode, params, data)).collect();
    FftPlanner::new().plan_fft_forward(samples).process(&mut buf);
    let coeff = |n: i64| buf[n.rem_euclid(samples as i64) as usize] / samples as f64;
    let m = n_max as i64;
    let values: Vec<Complex64> = (-m..=m).map(coeff).collect();
    let half = (samples / 2) as i64;
    let trailing = (m + 1..half).flat_map(|n| [coeff(n).norm(), coeff(-n).norm()]).fold(0.0, f64::max);
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    if trailing > tol * scale {
        return Err(KernelError::Aliasing { n_max, trailing, tol });
    }
    Ok(GCoefficients { n_max, values, samples, trailing })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi1_branches_agree() {
        for &x in &[0.299, 0.301, -0.299, -0.301] {
            let z = Complex64::new(x, 0.0);
            let direct = (z.exp() - 1.0) / z;
            assert!((phi1(z) - direct).norm() < 1e-14);
        }
    }

    #[test]
    fn trajectory_zero_time() {
        let p = PlasmaParams::default().with_nu(0.1);
        let m = TrajectoryMatrices::new(0.0, &p);
        assert_eq!((m.a11, m.a12, m.third_diag), (0.0, 0.0, 0.0));
    }

    #[test]
    fn parallel_shape_branches_agree() {
        let direct = |x: f64| (x - 2.0 * (1.0 - (-x).exp()) + 0.5 * (1.0 - (-2.0 * x).exp())) / x.powi(3);
        assert!((parallel_shape(0.4999999) - direct(0.4999999)).abs() < 1e-12);
        assert!((parallel_shape(1e-6) - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn perp_integral_branches_agree() {
        let nu = 0.3;
        let w = 0.9;
        let t = 1.0 / Complex64::new(-nu, w).norm();
        let c = Complex64::new(-nu, w);
        let closed = t - 2.0 * (((c * t).exp() - 1.0) / c).re + ((-2.0 * nu * t).exp() - 1.0) / (-2.0 * nu);
        assert!((perp_integral(t * (1.0 - 1e-12), nu, w) - closed).abs() < 1e-12);
    }
}
