//! Rate extraction and scaling fits: e-folding times of the collisional
//! propagator and density, weighted Landau-damping norms and windowed
//! spectra of transverse densities.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::kernels::{forcing_collisional, kernel_collisional, log_propagator};
use crate::model::{ModeContext, ModeData, PlasmaParams};
use crate::volterra::{self, TimeSeries, VolterraError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("amplitude never fell below the threshold before t = {t_max} (nu = {nu})")]
    NoCrossing { nu: f64, t_max: f64 },
    #[error("scaling fit needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("series is empty")]
    EmptySeries,
    #[error(transparent)]
    Volterra(#[from] VolterraError),
}

/// Least-squares line `y = slope x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(points: &[(f64, f64)]) -> LineFit {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) } else { 1.0 };
    LineFit { slope, intercept: my - slope * mx, r_squared }
}

/// Fit of `log t_e` against `log nu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub nus: Vec<f64>,
    pub t_e: Vec<f64>,
    pub slope: f64,
    pub r_squared: f64,
}

/// Which amplitude defines the relaxation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AmplitudeSource {
    /// The closed-form propagator `S(t, k)`.
    Propagator,
    /// `|rho_{0;nu}(t)|`, the density of the passively transported data.
    Forcing,
    /// `|rho^(t)|` from the collisional Volterra equation.
    Full,
}

/// Settings of the e-folding search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationOptions {
    /// Amplitude ratio that defines `t_e` (`e^{-1}` by default).
    pub threshold: f64,
    /// Sampling step for the sampled sources.
    pub dt: f64,
    /// Longest time searched.
    pub t_max: f64,
}

impl Default for RelaxationOptions {
    fn default() -> Self {
        Self { threshold: (-1.0f64).exp(), dt: 0.05, t_max: 1.0e9 }
    }
}

/// First time the propagator drops to `threshold`, by doubling and bisection
/// on the monotone `log S`.
fn propagator_crossing(mode: &ModeContext, params: &PlasmaParams, threshold: f64, t_max: f64) -> Option<f64> {
    let target = threshold.ln();
    let f = |t: f64| log_propagator(t, mode, params) - target;
    let mut hi = 1.0e-3;
    while f(hi) > 0.0 {
        hi *= 2.0;
        if hi > t_max {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Running maximum of `|values|` over a centred window of `width` samples.
pub fn envelope(values: &[Complex64], width: usize) -> Vec<f64> {
    let half = width / 2;
    let abs: Vec<f64> = values.iter().map(|v| v.norm()).collect();
    (0..abs.len())
        .map(|j| {
            let lo = j.saturating_sub(half);
            let hi = (j + half + 1).min(abs.len());
            abs[lo..hi].iter().cloned().fold(0.0, f64::max)
        })
        .collect()
}

/// First time the envelope of a sampled series drops below
/// `threshold · |values[0]|`, linearly interpolated between samples.
pub fn envelope_crossing(series: &TimeSeries, window: f64, threshold: f64) -> Option<f64> {
    let first = series.values.first()?.norm();
    let width = ((window / series.dt).round() as usize).max(1);
    let env = envelope(&series.values, width);
    let level = threshold * first;
    for j in 1..env.len() {
        if env[j] <= level {
            let (a, b) = (env[j - 1], env[j]);
            let frac = if a > b { (a - level) / (a - b) } else { 1.0 };
            return Some((j as f64 - 1.0 + frac) * series.dt);
        }
    }
    None
}

/// e-folding time of one amplitude source at one collision frequency.
pub fn e_folding_time(
    mode: &ModeContext,
    params: &PlasmaParams,
    data: &ModeData,
    source: AmplitudeSource,
    opts: &RelaxationOptions,
) -> Result<f64, AnalysisError> {
    let no_crossing = AnalysisError::NoCrossing { nu: params.nu, t_max: opts.t_max };
    let window = 2.0 * PI / params.omega_c();
    match source {
        AmplitudeSource::Propagator => propagator_crossing(mode, params, opts.threshold, opts.t_max).ok_or(no_crossing),
        AmplitudeSource::Forcing => {
            let n = (opts.t_max / opts.dt).round() as usize;
            let values = (0..=n).map(|j| forcing_collisional(j as f64 * opts.dt, mode, params, data)).collect();
            envelope_crossing(&TimeSeries::new(opts.dt, values), window, opts.threshold).ok_or(no_crossing)
        }
        AmplitudeSource::Full => {
            let series = volterra::solve(
                |t| forcing_collisional(t, mode, params, data),
                |t| kernel_collisional(t, mode, params),
                opts.dt,
                opts.t_max,
            )?;
            envelope_crossing(&series, window, opts.threshold).ok_or(no_crossing)
        }
    }
}

/// Least-squares slope of `log t_e` against `log nu` over `nus`.
pub fn relaxation_exponent(
    mode: &ModeContext,
    params: &PlasmaParams,
    data: &ModeData,
    nus: &[f64],
    source: AmplitudeSource,
    opts: &RelaxationOptions,
) -> Result<ScalingFit, AnalysisError> {
    if nus.len() < 4 {
        return Err(AnalysisError::TooFewPoints { needed: 4, got: nus.len() });
    }
    let t_e = nus
        .par_iter()
        .map(|&nu| e_folding_time(mode, &params.with_nu(nu), data, source, opts))
        .collect::<Result<Vec<_>, _>>()?;
    let pts: Vec<(f64, f64)> = nus.iter().zip(&t_e).map(|(n, t)| (n.ln(), t.ln())).collect();
    let fit = linear_fit(&pts);
    Ok(ScalingFit { nus: nus.to_vec(), t_e, slope: fit.slope, r_squared: fit.r_squared })
}

/// Weights of the discretized Landau-damping norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandauWeights {
    pub sigma: f64,
    /// Exponential growth `e^{rate t}` applied to the density before squaring.
    pub rate: f64,
}

/// `sum_k |k3| sum_t dt (1 + |k|^2 + |k3 t|^2)^sigma |e^{rate t} rho^(t, k)|^2`.
pub fn landau_norm(series: &[TimeSeries], weights: &LandauWeights) -> f64 {
    series
        .iter()
        .map(|s| {
            let k = s.k.unwrap_or([0, 0, 0]);
            let k_sq = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
            let k3 = k[2] as f64;
            let sum: f64 = s
                .times()
                .zip(&s.values)
                .map(|(t, v)| {
                    let w = (1.0 + k_sq + k3 * k3 * t * t).powf(weights.sigma);
                    w * (2.0 * weights.rate * t).exp() * v.norm_sqr()
                })
                .sum();
            k3.abs() * s.dt * sum
        })
        .sum()
}

/// Window applied before the discrete Fourier transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Hann,
    Rectangular,
}

impl Window {
    fn weights(&self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann => (0..n).map(|j| 0.5 - 0.5 * (2.0 * PI * j as f64 / (n - 1) as f64).cos()).collect(),
        }
    }

    /// Normalised magnitude of the window transform at angular offset
    /// `delta` (per unit time) for `n` samples spaced by `dt`.
    pub fn response(&self, n: usize, dt: f64, delta: f64) -> f64 {
        let theta = delta * dt;
        let dirichlet = |th: f64| -> Complex64 {
            let s = (0.5 * th).sin();
            let mag = if s.abs() < 1e-12 { n as f64 } else { (0.5 * n as f64 * th).sin() / s };
            Complex64::from_polar(mag, -0.5 * th * (n as f64 - 1.0))
        };
        match self {
            Window::Rectangular => dirichlet(theta).norm() / n as f64,
            Window::Hann => {
                let step = 2.0 * PI / (n - 1) as f64;
                let v = dirichlet(theta) * 0.5 - dirichlet(theta - step) * 0.25 - dirichlet(theta + step) * 0.25;
                v.norm() / (0.5 * (n - 1) as f64)
            }
        }
    }
}

/// Spectral peak with amplitude normalised so that `A e^{i w t}` reports `A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub frequency: f64,
    pub amplitude: f64,
}

/// Windowed spectrum and the peaks standing above the leakage of stronger peaks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub window: Window,
    pub bin_width: f64,
    pub n_samples: usize,
    pub dt: f64,
    pub peaks: Vec<Peak>,
    /// Set when two accepted peaks lie within one bin of each other.
    pub resolution_warning: bool,
}

/// Normalised windowed transform `sum_j w_j x_j e^{-i w t_j} / sum_j w_j`.
pub fn windowed_amplitude(series: &TimeSeries, window: Window, frequency: f64) -> Complex64 {
    let w = window.weights(series.len());
    let norm: f64 = w.iter().sum();
    let total: Complex64 = series
        .values
        .iter()
        .zip(&w)
        .enumerate()
        .map(|(j, (v, wj))| v * *wj * Complex64::from_polar(1.0, -frequency * j as f64 * series.dt))
        .sum();
    total / norm
}

/// Peaks of the windowed spectrum of `series`.
///
/// Local maxima of the zero-padded transform above `rel_floor` times the
/// largest are visited in decreasing order; one is accepted when it exceeds
/// `leakage_factor` times the summed window leakage of the peaks accepted
/// before it.
pub fn bernstein_spectrum(
    series: &TimeSeries,
    window: Window,
    rel_floor: f64,
    leakage_factor: f64,
) -> Result<Spectrum, AnalysisError> {
    let n = series.len();
    if n < 2 {
        return Err(AnalysisError::EmptySeries);
    }
    let pad = 8;
    let m = (n * pad).next_power_of_two();
    let w = window.weights(n);
    let norm: f64 = w.iter().sum();
    let mut buf: Vec<Complex64> = series.values.iter().zip(&w).map(|(v, wj)| v * *wj).collect();
    buf.resize(m, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let mag: Vec<f64> = buf.iter().map(|v| v.norm() / norm).collect();
    let freq = |i: usize| {
        let s = if i <= m / 2 { i as f64 } else { i as f64 - m as f64 };
        2.0 * PI * s / (m as f64 * series.dt)
    };
    let top = mag.iter().cloned().fold(0.0, f64::max);
    let mut candidates: Vec<(usize, f64)> = (0..m)
        .filter(|&i| {
            let prev = mag[(i + m - 1) % m];
            let next = mag[(i + 1) % m];
            mag[i] > prev && mag[i] >= next && mag[i] >= rel_floor * top
        })
        .map(|i| (i, mag[i]))
        .collect();
    candidates.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let mut peaks: Vec<Peak> = Vec::new();
    for (i, amp) in candidates {
        let f = freq(i);
        let leak: f64 = peaks.iter().map(|p| p.amplitude * window.response(n, series.dt, f - p.frequency)).sum();
        if amp > leakage_factor * leak {
            peaks.push(Peak { frequency: f, amplitude: amp });
        }
    }
    let bin_width = 2.0 * PI / (n as f64 * series.dt);
    let mut sorted: Vec<f64> = peaks.iter().map(|p| p.frequency).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let resolution_warning = sorted.windows(2).any(|p| p[1] - p[0] < bin_width);
    Ok(Spectrum { window, bin_width, n_samples: n, dt: series.dt, peaks, resolution_warning })
}

/// Spearman rank correlation of two equally long samples.
pub fn rank_correlation(a: &[f64], b: &[f64]) -> f64 {
    let rank = |x: &[f64]| {
        let mut idx: Vec<usize> = (0..x.len()).collect();
        idx.sort_by(|&i, &j| x[i].partial_cmp(&x[j]).unwrap());
        let mut r = vec![0.0; x.len()];
        for (pos, &i) in idx.iter().enumerate() {
            r[i] = pos as f64;
        }
        r
    };
    let ra = rank(a);
    let rb = rank(b);
    let pts: Vec<(f64, f64)> = ra.into_iter().zip(rb).collect();
    let fit = linear_fit(&pts);
    fit.r_squared.sqrt() * fit.slope.signum()
}
