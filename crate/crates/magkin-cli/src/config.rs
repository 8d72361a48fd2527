//! Experiment configuration read from TOML, with defaults for every field.

use std::path::Path;

use magkin::analysis::AmplitudeSource;
use magkin::kinsim::KinsimConfig;
use magkin::model::{Equilibrium, Interaction, ModeContext, ModeData, ModelError, PlasmaParams, Vec3, Wavevector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// One spatial mode with its Gaussian velocity profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub k: Wavevector,
    #[serde(default = "unit_amplitude")]
    pub amplitude: Complex64,
    #[serde(default)]
    pub center: Vec3,
    #[serde(default = "unit_widths")]
    pub widths: Vec3,
}

fn unit_amplitude() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn unit_widths() -> Vec3 {
    [1.0; 3]
}

impl ModeSpec {
    pub fn new(k: Wavevector, center: Vec3) -> Self {
        Self { k, amplitude: unit_amplitude(), center, widths: unit_widths() }
    }

    pub fn data(&self) -> ModeData {
        ModeData::new(self.k, self.amplitude, self.center, self.widths)
    }
}

/// Numerical settings shared by the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    /// Volterra step.
    pub dt: f64,
    pub t_end: f64,
    /// Root, residue and quadrature tolerance.
    pub tol: f64,
    /// Number of Bernstein modes kept.
    pub n_modes: usize,
    pub bessel_args: Vec<f64>,
    pub bessel_n_max: usize,
    /// Largest accepted scaled identity residual.
    pub bessel_tol: f64,
    /// Largest frequency of the dispersion boundary curve.
    pub omega_max: f64,
    pub omega_samples: usize,
    pub lambda_max: f64,
    pub margin_re: usize,
    pub margin_im: usize,
    pub winding_omega_max: f64,
    pub winding_samples: usize,
    /// Radius of the wavevector ball scanned when no modes are given.
    pub k_radius: i64,
    /// Largest allowed relative discrepancy in cross-validation.
    pub cross_tol: f64,
    pub nus: Vec<f64>,
    pub threshold: f64,
    pub amplitude_source: AmplitudeSource,
    pub kinsim: KinsimConfig,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_end: 20.0,
            tol: 1e-12,
            n_modes: 32,
            bessel_args: vec![0.1, 1.0, 5.0, 10.0, 30.0],
            bessel_n_max: 40,
            bessel_tol: 1e-10,
            omega_max: 8.0,
            omega_samples: 801,
            lambda_max: 2.0,
            margin_re: 8,
            margin_im: 32,
            winding_omega_max: 40.0,
            winding_samples: 400,
            k_radius: 4,
            cross_tol: 1e-3,
            nus: vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            threshold: (-1.0f64).exp(),
            amplitude_source: AmplitudeSource::Propagator,
            kinsim: KinsimConfig::default(),
        }
    }
}

/// Full experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: PlasmaParams,
    pub interaction: Interaction,
    /// Defaults to a Maxwellian with the parallel temperature of `params`.
    pub equilibrium: Option<Equilibrium>,
    /// Defaults depend on the experiment.
    pub modes: Option<Vec<ModeSpec>>,
    pub numerics: Numerics,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))
    }

    pub fn equilibrium(&self) -> Equilibrium {
        self.equilibrium.clone().unwrap_or_else(|| Equilibrium::with_parallel_temperature(self.params.t_par))
    }

    pub fn modes_or(&self, default: &[ModeSpec]) -> Vec<ModeSpec> {
        self.modes.clone().unwrap_or_else(|| default.to_vec())
    }

    pub fn context(&self, k: Wavevector) -> Result<ModeContext, CliError> {
        ModeContext::with_interaction(k, &self.params, self.interaction).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Checks every field and reports the first violation with its path.
    pub fn validate(&self) -> Result<(), CliError> {
        let field = |name: &str, e: &dyn std::fmt::Display| CliError::Config(format!("{name}: {e}"));
        self.params.validate().map_err(|e| field("params", &e))?;
        if let Some(eq) = &self.equilibrium {
            eq.validate().map_err(|e| field("equilibrium", &e))?;
            if eq.t_par != self.params.t_par {
                return Err(field("equilibrium.t_par", &"must equal params.t_par"));
            }
        }
        if let Some(modes) = &self.modes {
            for (i, m) in modes.iter().enumerate() {
                if let Err(e) = m.data().validate() {
                    let name = match &e {
                        ModelError::ZeroWavevector => format!("modes[{i}].k"),
                        ModelError::InvalidParameter { name, .. } => format!("modes[{i}].{name}"),
                        ModelError::MissingMode(_) => format!("modes[{i}]"),
                    };
                    return Err(field(&name, &e));
                }
            }
        }
        let n = &self.numerics;
        let positive = [
            ("numerics.dt", n.dt),
            ("numerics.t_end", n.t_end),
            ("numerics.tol", n.tol),
            ("numerics.omega_max", n.omega_max),
            ("numerics.lambda_max", n.lambda_max),
            ("numerics.winding_omega_max", n.winding_omega_max),
            ("numerics.cross_tol", n.cross_tol),
            ("numerics.bessel_tol", n.bessel_tol),
            ("numerics.kinsim.dt", n.kinsim.dt),
            ("numerics.kinsim.v_max", n.kinsim.v_max),
            ("numerics.kinsim.extent", n.kinsim.extent),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(field(name, &format!("must be positive and finite, got {v}")));
            }
        }
        if !(n.threshold > 0.0 && n.threshold < 1.0) {
            return Err(field("numerics.threshold", &"must lie in (0, 1)"));
        }
        if n.nus.iter().any(|&v| !(v > 0.0)) {
            return Err(field("numerics.nus", &"collision frequencies must be positive"));
        }
        if n.bessel_args.iter().any(|&v| !(v > 0.0)) {
            return Err(field("numerics.bessel_args", &"arguments must be positive"));
        }
        if n.k_radius < 1 {
            return Err(field("numerics.k_radius", &"must be at least 1"));
        }
        if n.n_modes == 0 || n.omega_samples < 2 || n.winding_samples < 2 {
            return Err(field("numerics", &"n_modes, omega_samples and winding_samples must be at least 1, 2 and 2"));
        }
        Ok(())
    }

    /// Copy with every tolerance multiplied by `scale` and the kinetic run
    /// length tied to `numerics.t_end`.
    pub fn resolved(mut self, scale: f64) -> Self {
        self.numerics.kinsim.t_end = self.numerics.t_end;
        self.numerics.tol *= scale;
        self.numerics.cross_tol *= scale;
        self.numerics.bessel_tol *= scale;
        self
    }
}
