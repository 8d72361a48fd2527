//! Physical parameters, single-wavevector context, equilibria and Gaussian
//! initial data with closed-form Fourier transforms.
//!
//! Fourier conventions: `f^(k, eta) = ∫∫ f(x, v) e^{-i k·x - i eta·v} dx dv`,
//! so that the transform of `∇_v f` is `i eta f^` and the transform of
//! `v f` is `i ∇_eta f^`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::kernels::TrajectoryMatrices;

pub type Vec3 = [f64; 3];
pub type Wavevector = [i64; 3];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("wavevector must be nonzero")]
    ZeroWavevector,
    #[error("parameter `{name}` must be {requirement}, got {value}")]
    InvalidParameter { name: &'static str, requirement: &'static str, value: f64 },
    #[error("no initial data given for wavevector {0:?}")]
    MissingMode(Wavevector),
}

fn check(name: &'static str, value: f64, ok: bool, requirement: &'static str) -> Result<(), ModelError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter { name, requirement, value })
    }
}

/// Charge, mass, field strength, collision frequency and parallel temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlasmaParams {
    pub q: f64,
    pub m: f64,
    pub b: f64,
    pub nu: f64,
    pub t_par: f64,
}

impl Default for PlasmaParams {
    fn default() -> Self {
        Self { q: 1.0, m: 1.0, b: 1.0, nu: 0.0, t_par: 1.0 }
    }
}

impl PlasmaParams {
    pub fn new(q: f64, m: f64, b: f64, nu: f64, t_par: f64) -> Result<Self, ModelError> {
        let p = Self { q, m, b, nu, t_par };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        check("q", self.q, self.q > 0.0, "positive")?;
        check("m", self.m, self.m > 0.0, "positive")?;
        check("b", self.b, self.b > 0.0, "positive")?;
        check("nu", self.nu, self.nu >= 0.0, "nonnegative")?;
        check("t_par", self.t_par, self.t_par > 0.0, "positive")
    }

    /// Cyclotron frequency `q b / m`.
    pub fn omega_c(&self) -> f64 {
        self.q * self.b / self.m
    }

    pub fn with_nu(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }
}

/// Sign of the pair interaction entering the field equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Interaction {
    /// Coulomb repulsion between like charges, the physical case.
    #[default]
    Repulsive,
    /// Sign-flipped interaction, used to build unstable test cases.
    Attractive,
}

/// Derived quantities for one spatial wavevector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeContext {
    pub k: Wavevector,
    pub k_perp_sq: f64,
    pub k3: i64,
    /// `2 |k_perp|^2 / omega_c^2`, kept for comparison with the literature.
    pub a_classic: f64,
    /// Bessel argument of the kernel, `|k_perp|^2 / omega_c^2`.
    pub a_eff: f64,
    /// Interaction transform `±q / (4 pi |k|^2)`; negative when attractive.
    pub w_hat: f64,
    /// `(q/m) w_hat (|k_perp|^2 / omega_c) e^{-a_eff}`.
    pub a_k: f64,
    /// `(q/m) w_hat k3^2 e^{-a_eff}`.
    pub b_k: f64,
    pub omega_c: f64,
    /// Coupling `(q/m) w_hat`.
    pub coupling: f64,
}

impl ModeContext {
    pub fn new(k: Wavevector, params: &PlasmaParams) -> Result<Self, ModelError> {
        Self::with_interaction(k, params, Interaction::Repulsive)
    }

    pub fn with_interaction(
        k: Wavevector,
        params: &PlasmaParams,
        interaction: Interaction,
    ) -> Result<Self, ModelError> {
        if k == [0, 0, 0] {
            return Err(ModelError::ZeroWavevector);
        }
        params.validate()?;
        let omega_c = params.omega_c();
        let k_perp_sq = (k[0] * k[0] + k[1] * k[1]) as f64;
        let k_sq = k_perp_sq + (k[2] * k[2]) as f64;
        let sign = match interaction {
            Interaction::Repulsive => 1.0,
            Interaction::Attractive => -1.0,
        };
        let w_hat = sign * params.q / (4.0 * PI * k_sq);
        let coupling = params.q / params.m * w_hat;
        let a_eff = k_perp_sq / (omega_c * omega_c);
        let damp = (-a_eff).exp();
        Ok(Self {
            k,
            k_perp_sq,
            k3: k[2],
            a_classic: 2.0 * a_eff,
            a_eff,
            w_hat,
            a_k: coupling * k_perp_sq / omega_c * damp,
            b_k: coupling * (k[2] * k[2]) as f64 * damp,
            omega_c,
            coupling,
        })
    }

    pub fn k_f64(&self) -> Vec3 {
        [self.k[0] as f64, self.k[1] as f64, self.k[2] as f64]
    }

    pub fn k_sq(&self) -> f64 {
        self.k_perp_sq + (self.k3 * self.k3) as f64
    }

    pub fn k3_f64(&self) -> f64 {
        self.k3 as f64
    }
}

/// One even Gaussian component `w e^{-v^2/(2s)} / sqrt(2 pi s)` of the
/// parallel perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub weight: f64,
    pub width: f64,
}

/// Equilibrium `mu_perp(v1, v2) f3(v3)` with a unit temperature perpendicular
/// Maxwellian and a parallel Maxwellian plus Gaussian-mixture perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub t_par: f64,
    #[serde(default)]
    pub perturbation: Vec<GaussianComponent>,
}

impl Default for Equilibrium {
    fn default() -> Self {
        Self::maxwellian()
    }
}

impl Equilibrium {
    pub fn maxwellian() -> Self {
        Self { t_par: 1.0, perturbation: Vec::new() }
    }

    pub fn with_parallel_temperature(t_par: f64) -> Self {
        Self { t_par, perturbation: Vec::new() }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        check("t_par", self.t_par, self.t_par > 0.0, "positive")?;
        for c in &self.perturbation {
            check("perturbation.width", c.width, c.width > 0.0, "positive")?;
            check("perturbation.weight", c.weight, true, "finite")?;
        }
        Ok(())
    }

    pub fn is_maxwellian(&self) -> bool {
        self.t_par == 1.0 && self.perturbation.iter().all(|c| c.weight == 0.0)
    }

    /// Total parallel mass `f3_hat(0) = 1 + sum w_i`.
    pub fn parallel_mass(&self) -> f64 {
        1.0 + self.perturbation.iter().map(|c| c.weight).sum::<f64>()
    }

    /// Parallel components as `(weight, variance)` pairs including the Maxwellian.
    pub fn components(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        std::iter::once((1.0, self.t_par)).chain(self.perturbation.iter().map(|c| (c.weight, c.width)))
    }

    /// Fourier transform of the parallel distribution.
    pub fn f3_hat(&self, xi: f64) -> f64 {
        self.components().map(|(w, s)| w * (-0.5 * s * xi * xi).exp()).sum()
    }

    /// Parallel distribution `f3(v)`.
    pub fn f3(&self, v: f64) -> f64 {
        self.components().map(|(w, s)| w * (-0.5 * v * v / s).exp() / (2.0 * PI * s).sqrt()).sum()
    }

    /// Derivative `f3'(v)`.
    pub fn f3_prime(&self, v: f64) -> f64 {
        self.components().map(|(w, s)| -w * v / s * (-0.5 * v * v / s).exp() / (2.0 * PI * s).sqrt()).sum()
    }

    /// Largest parallel variance among the components.
    pub fn max_variance(&self) -> f64 {
        self.components().map(|(_, s)| s).fold(0.0, f64::max)
    }

    /// Fourier transform of the full equilibrium.
    pub fn f0_hat(&self, eta: Vec3) -> f64 {
        (-0.5 * (eta[0] * eta[0] + eta[1] * eta[1])).exp() * self.f3_hat(eta[2])
    }
}

/// Shifted anisotropic Gaussian velocity profile attached to one wavevector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeData {
    pub k: Wavevector,
    pub amplitude: Complex64,
    pub center: Vec3,
    pub widths: Vec3,
}

impl ModeData {
    pub fn new(k: Wavevector, amplitude: Complex64, center: Vec3, widths: Vec3) -> Self {
        Self { k, amplitude, center, widths }
    }

    /// `c exp(-sum sigma_i^2 eta_i^2 / 2 - i eta·v0)`.
    pub fn h_hat(&self, eta: Vec3) -> Complex64 {
        let mut quad = 0.0;
        let mut phase = 0.0;
        for i in 0..3 {
            quad += self.widths[i] * self.widths[i] * eta[i] * eta[i];
            phase += eta[i] * self.center[i];
        }
        self.amplitude * Complex64::from_polar((-0.5 * quad).exp(), -phase)
    }

    /// Velocity profile `c prod_i N(v_i; v0_i, sigma_i^2)`.
    pub fn h_velocity(&self, v: Vec3) -> Complex64 {
        let mut val = 1.0;
        for i in 0..3 {
            let s2 = self.widths[i] * self.widths[i];
            let d = v[i] - self.center[i];
            val *= (-0.5 * d * d / s2).exp() / (2.0 * PI * s2).sqrt();
        }
        self.amplitude * val
    }

    /// Factor of `h_hat` depending on `eta_3` only.
    pub fn parallel_factor(&self, eta3: f64) -> Complex64 {
        let s = self.widths[2];
        Complex64::from_polar((-0.5 * s * s * eta3 * eta3).exp(), -eta3 * self.center[2])
    }

    /// Factor of `h_hat` depending on `(eta_1, eta_2)` only, amplitude included.
    pub fn perpendicular_factor(&self, eta1: f64, eta2: f64) -> Complex64 {
        self.h_hat([eta1, eta2, 0.0])
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.k == [0, 0, 0] {
            return Err(ModelError::ZeroWavevector);
        }
        for &w in &self.widths {
            check("widths", w, w > 0.0, "positive")?;
        }
        Ok(())
    }
}

/// Initial perturbation as a list of spatial modes with Gaussian profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct InitialData {
    pub modes: Vec<ModeData>,
}

impl InitialData {
    pub fn single(data: ModeData) -> Self {
        Self { modes: vec![data] }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.modes.iter().try_for_each(ModeData::validate)
    }

    pub fn mode(&self, k: Wavevector) -> Result<&ModeData, ModelError> {
        self.modes.iter().find(|m| m.k == k).ok_or(ModelError::MissingMode(k))
    }
}

/// Orr-critical frequency `∫_0^t e^{-tau A} k dtau`.
pub fn eta_ct(t: f64, mode: &ModeContext, params: &PlasmaParams) -> Vec3 {
    TrajectoryMatrices::new(t, params).apply(mode.k_f64())
}

/// Equilibrium parallel transform, free function form.
pub fn f3_hat(eq: &Equilibrium, xi: f64) -> f64 {
    eq.f3_hat(xi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f3_hat_examples() {
        let eq = Equilibrium::maxwellian();
        assert_eq!(eq.f3_hat(0.0), 1.0);
        assert!((eq.f3_hat(1.0) - (-0.5f64).exp()).abs() < 1e-16);
        let eq2 = Equilibrium { t_par: 1.0, perturbation: vec![GaussianComponent { weight: 0.1, width: 2.0 }] };
        assert!((eq2.f3_hat(1.0) - ((-0.5f64).exp() + 0.1 * (-1.0f64).exp())).abs() < 1e-16);
        assert_eq!(eq2.f3_hat(0.7), eq2.f3_hat(-0.7));
        assert!((eq2.parallel_mass() - 1.1).abs() < 1e-15);
    }

    #[test]
    fn zero_wavevector_rejected() {
        let p = PlasmaParams::default();
        assert_eq!(ModeContext::new([0, 0, 0], &p).unwrap_err().to_string(), "wavevector must be nonzero");
    }

    #[test]
    fn eta_ct_trivial_values() {
        let p = PlasmaParams::default();
        let m = ModeContext::new([0, 0, 1], &p).unwrap();
        assert_eq!(eta_ct(0.0, &m, &p), [0.0, 0.0, 0.0]);
        let e = eta_ct(5.0, &m, &p);
        assert!(e[0].abs() < 1e-15 && e[1].abs() < 1e-15 && (e[2] - 5.0).abs() < 1e-14);
    }
}
