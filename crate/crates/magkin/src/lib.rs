//! Linear theory of the magnetized Vlasov and Vlasov-Fokker-Planck equations
//! mode by mode: Bessel machinery, kernels, dispersion functions, Bernstein
//! modes, a Volterra solver, a kinetic oracle simulator and rate analysis.

pub mod analysis;
pub mod bernstein;
pub mod dispersion;
pub mod kernels;
pub mod kinsim;
pub mod model;
pub mod quad;
pub mod specfun;
pub mod volterra;
