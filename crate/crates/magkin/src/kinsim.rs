//! Direct kinetic simulation of one spatial mode in velocity-frequency space,
//! used as an independent oracle for the Volterra reduction.
//!
//! The transform obeys `∂_t h^ + (A eta - k)·∇_eta h^ = -nu |eta|^2 h^ -
//! (q/m) W rho^ (k·eta) f0^(eta)`. The state is stored as a profile over
//! characteristic labels `zeta = e^{-tA} eta + eta_CT(t)`, on which the
//! equation becomes a pointwise ODE with no transport. Each step integrates
//! that ODE exactly for the damping and with three-point Gauss-Legendre
//! quadrature for the source, with the density at the quadrature nodes taken
//! from a cubic in time that includes the unknown end value, so the field
//! coupling is solved implicitly. The density is read off at the label
//! `eta_CT(t)` by trigonometric interpolation, which equals integrating the
//! velocity profile represented on the grid.
//!
//! Two layouts exist. `Full` keeps a 3D label grid. `Transverse` applies to
//! `k3 = 0` and keeps two 2D fields, the coefficients of the data's parallel
//! factor and of `f3^`, which is exact because `eta_3` is then inert.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::kernels::{exp_neg_a, TrajectoryMatrices};
use crate::model::{Equilibrium, ModeContext, ModeData, PlasmaParams, Vec3, Wavevector};
use crate::quad::gauss_legendre;
use crate::volterra::TimeSeries;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinsimError {
    #[error("collisional simulation requires a Maxwellian equilibrium")]
    NonMaxwellianCollisional,
    #[error("transverse layout requires {0}")]
    LayoutUnavailable(&'static str),
    #[error("time step {dt} is not positive or exceeds {limit}")]
    InvalidStep { dt: f64, limit: f64 },
    #[error("label grid would need {points} points, above the limit {limit}")]
    GridTooLarge { points: usize, limit: usize },
    #[error("velocity weight 1/mu is not integrable against data of width {width} (needs < sqrt 2)")]
    EnergyUndefined { width: f64 },
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Full,
    Transverse,
}

/// Numerical settings of a kinetic run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KinsimConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Velocity radius that the label spacing must resolve at `t_end`.
    pub v_max: f64,
    /// Half-width added around the path of `eta_CT` to form the label box.
    pub extent: f64,
    /// Disable the field coupling to obtain passive transport.
    pub source: bool,
    /// Force a layout; `None` picks `Transverse` whenever it applies.
    pub layout: Option<Layout>,
    /// Record energies every this many steps (0 disables).
    pub energy_every: usize,
    pub max_points: usize,
}

impl Default for KinsimConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            t_end: 20.0,
            v_max: 8.0,
            extent: 9.0,
            source: true,
            layout: None,
            energy_every: 0,
            max_points: 4_000_000,
        }
    }
}

/// Uniform periodic label grid with an odd number of points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelGrid {
    pub lo: [f64; 3],
    pub h: [f64; 3],
    pub n: [usize; 3],
}

impl LabelGrid {
    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, axis: usize, i: usize) -> f64 {
        self.lo[axis] + self.h[axis] * i as f64
    }

    /// Periodic trigonometric interpolation weights of the nodes on `axis` at `x`.
    pub fn interp_weights(&self, axis: usize, x: f64) -> Vec<f64> {
        let n = self.n[axis];
        if n == 1 {
            return vec![1.0];
        }
        let period = n as f64 * self.h[axis];
        (0..n)
            .map(|i| {
                let theta = 2.0 * PI * (x - self.node(axis, i)) / period;
                let s = (0.5 * theta).sin();
                if s.abs() < 1e-14 {
                    let c = (0.5 * theta).cos();
                    (0.5 * n as f64 * theta).cos() / c
                } else {
                    (0.5 * n as f64 * theta).sin() / (n as f64 * s)
                }
            })
            .collect()
    }
}

/// Simulation state for one spatial mode.
#[derive(Debug, Clone)]
pub struct EtaField {
    pub mode: ModeContext,
    pub data: ModeData,
    pub layout: Layout,
    pub grid: LabelGrid,
    pub t: f64,
    pub dt: f64,
    pub steps: usize,
    /// `Full`: one field. `Transverse`: data-factor field, then `f3^` field.
    pub parts: Vec<Vec<Complex64>>,
    /// Density at every completed step, starting at `t = 0`.
    pub rho: Vec<Complex64>,
    pub source: bool,
    /// Largest magnitude found on the outermost label layer at construction.
    pub boundary_max: f64,
}

/// Gauss-Legendre nodes on `[0, 1]` with weights and the integrals of the
/// quadratic Lagrange basis from each node to 1.
struct StepRule {
    x: [f64; 3],
    w: [f64; 3],
    tail: [[f64; 3]; 3],
}

impl StepRule {
    fn new() -> Self {
        let (xs, ws) = gauss_legendre(3);
        let x = [0.5 * (xs[0] + 1.0), 0.5 * (xs[1] + 1.0), 0.5 * (xs[2] + 1.0)];
        let w = [0.5 * ws[0], 0.5 * ws[1], 0.5 * ws[2]];
        let basis = |j: usize, s: f64| {
            let mut v = 1.0;
            for m in 0..3 {
                if m != j {
                    v *= (s - x[m]) / (x[j] - x[m]);
                }
            }
            v
        };
        let (gx, gw) = gauss_legendre(5);
        let mut tail = [[0.0; 3]; 3];
        for i in 0..3 {
            let (a, b) = (x[i], 1.0);
            for j in 0..3 {
                tail[i][j] = gx
                    .iter()
                    .zip(&gw)
                    .map(|(g, wg)| 0.5 * (b - a) * wg * basis(j, a + 0.5 * (b - a) * (g + 1.0)))
                    .sum();
            }
        }
        Self { x, w, tail }
    }
}

/// Lagrange weights at `x` for nodes `-(m-1), ..., 0, 1` (last is the unknown).
fn time_weights(x: f64, order: usize) -> Vec<f64> {
    let nodes: Vec<f64> = (0..order).map(|j| j as f64 - (order as f64 - 2.0)).collect();
    (0..order)
        .map(|j| {
            let mut v = 1.0;
            for m in 0..order {
                if m != j {
                    v *= (x - nodes[m]) / (nodes[j] - nodes[m]);
                }
            }
            v
        })
        .collect()
}

fn odd_count(len: f64, h: f64) -> usize {
    let n = (len / h).ceil() as usize + 1;
    if n % 2 == 0 {
        n + 1
    } else {
        n
    }
}

impl EtaField {
    pub fn new(
        mode: &ModeContext,
        params: &PlasmaParams,
        eq: &Equilibrium,
        data: &ModeData,
        cfg: &KinsimConfig,
    ) -> Result<Self, KinsimError> {
        let limit = 0.5;
        if !(cfg.dt > 0.0) || cfg.dt > limit {
            return Err(KinsimError::InvalidStep { dt: cfg.dt, limit });
        }
        if params.nu > 0.0 && !eq.is_maxwellian() {
            return Err(KinsimError::NonMaxwellianCollisional);
        }
        let transverse_ok = mode.k3 == 0 && (params.nu == 0.0 || (data.widths[2] == 1.0 && data.center[2] == 0.0));
        let layout = match cfg.layout {
            Some(Layout::Transverse) if !transverse_ok => {
                return Err(KinsimError::LayoutUnavailable(
                    "k3 = 0, and for nu > 0 a parallel data factor equal to the Maxwellian",
                ))
            }
            Some(l) => l,
            None if transverse_ok => Layout::Transverse,
            None => Layout::Full,
        };
        let k = mode.k_f64();
        let n_path = 400;
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for j in 0..=n_path {
            let c = TrajectoryMatrices::new(cfg.t_end * j as f64 / n_path as f64, params).apply(k);
            for a in 0..3 {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
        }
        let spacing = PI / (cfg.v_max * (params.nu * cfg.t_end).exp());
        let dims = if layout == Layout::Transverse { 2 } else { 3 };
        let mut grid = LabelGrid { lo: [0.0; 3], h: [1.0; 3], n: [1; 3] };
        for a in 0..dims {
            let len = hi[a] - lo[a] + 2.0 * cfg.extent;
            let n = odd_count(len, spacing);
            grid.n[a] = n;
            grid.h[a] = len / (n - 1) as f64;
            grid.lo[a] = lo[a] - cfg.extent;
        }
        if grid.len() > cfg.max_points {
            return Err(KinsimError::GridTooLarge { points: grid.len(), limit: cfg.max_points });
        }
        let parts = match layout {
            Layout::Full => vec![Self::sample(&grid, |z| data.h_hat(z))],
            Layout::Transverse => vec![
                Self::sample(&grid, |z| data.perpendicular_factor(z[0], z[1])),
                vec![Complex64::new(0.0, 0.0); grid.len()],
            ],
        };
        let mut field = Self {
            mode: *mode,
            data: *data,
            layout,
            grid,
            t: 0.0,
            dt: cfg.dt,
            steps: 0,
            parts,
            rho: Vec::new(),
            source: cfg.source,
            boundary_max: 0.0,
        };
        field.boundary_max = field.boundary_magnitude();
        let rho0 = field.density_at(0.0, params, eq);
        field.rho.push(rho0);
        Ok(field)
    }

    fn sample<G: Fn(Vec3) -> Complex64 + Sync>(grid: &LabelGrid, g: G) -> Vec<Complex64> {
        let g = &g;
        (0..grid.len()).into_par_iter().map(|idx| g(Self::label(grid, idx))).collect()
    }

    fn label(grid: &LabelGrid, idx: usize) -> Vec3 {
        let i0 = idx % grid.n[0];
        let i1 = (idx / grid.n[0]) % grid.n[1];
        let i2 = idx / (grid.n[0] * grid.n[1]);
        let z2 = if grid.n[2] == 1 { 0.0 } else { grid.node(2, i2) };
        [grid.node(0, i0), grid.node(1, i1), z2]
    }

    fn boundary_magnitude(&self) -> f64 {
        let g = &self.grid;
        let mut m: f64 = 0.0;
        for idx in 0..g.len() {
            let i = [idx % g.n[0], (idx / g.n[0]) % g.n[1], idx / (g.n[0] * g.n[1])];
            let edge = (0..3).any(|a| g.n[a] > 1 && (i[a] == 0 || i[a] == g.n[a] - 1));
            if edge {
                for p in &self.parts {
                    m = m.max(p[idx].norm());
                }
            }
        }
        m
    }

    /// Readout weights of each part at `eta = 0`.
    fn part_weights(&self, eq: &Equilibrium) -> Vec<f64> {
        match self.layout {
            Layout::Full => vec![1.0],
            Layout::Transverse => vec![self.data.parallel_factor(0.0).re, eq.f3_hat(0.0)],
        }
    }

    /// Interpolates a label-space array at the label `c`.
    fn interpolate(&self, values: &[Complex64], c: Vec3) -> Complex64 {
        let g = &self.grid;
        let w0 = g.interp_weights(0, c[0]);
        let w1 = g.interp_weights(1, c[1]);
        let w2 = g.interp_weights(2, c[2]);
        let plane = g.n[0] * g.n[1];
        let mut total = Complex64::new(0.0, 0.0);
        for (i2, &b2) in w2.iter().enumerate() {
            let mut acc2 = Complex64::new(0.0, 0.0);
            for (i1, &b1) in w1.iter().enumerate() {
                let row = &values[i2 * plane + i1 * g.n[0]..i2 * plane + (i1 + 1) * g.n[0]];
                let acc1: Complex64 = row.iter().zip(&w0).map(|(v, b0)| v * b0).sum();
                acc2 += acc1 * b1;
            }
            total += acc2 * b2;
        }
        total
    }

    fn density_at(&self, t: f64, params: &PlasmaParams, eq: &Equilibrium) -> Complex64 {
        let c = TrajectoryMatrices::new(t, params).apply(self.mode.k_f64());
        let weights = self.part_weights(eq);
        self.parts.iter().zip(&weights).map(|(p, w)| self.interpolate(p, c) * *w).sum()
    }

    /// Current density `rho^(t, k)`.
    pub fn density(&self) -> Complex64 {
        *self.rho.last().expect("density history starts at t = 0")
    }

    /// Physical transform `h^(t, eta)` reconstructed from the label profile.
    pub fn h_hat(&self, eta: Vec3, params: &PlasmaParams, eq: &Equilibrium) -> Complex64 {
        let w = params.omega_c();
        let c = TrajectoryMatrices::new(self.t, params).apply(self.mode.k_f64());
        let mut zeta = exp_neg_a(self.t, params.nu, w, eta);
        for a in 0..3 {
            zeta[a] += c[a];
        }
        match self.layout {
            Layout::Full => self.interpolate(&self.parts[0], zeta),
            Layout::Transverse => {
                let z = [zeta[0], zeta[1], 0.0];
                self.interpolate(&self.parts[0], z) * self.data.parallel_factor(eta[2])
                    + self.interpolate(&self.parts[1], z) * eq.f3_hat(eta[2])
            }
        }
    }

    /// Advances the state by one step of length `dt`.
    pub fn advance(&mut self, params: &PlasmaParams, eq: &Equilibrium) -> Result<(), KinsimError> {
        let rule = StepRule::new();
        let dt = self.dt;
        let t0 = self.t;
        let nu = params.nu;
        let w = params.omega_c();
        let k = self.mode.k_f64();
        let order = (self.rho.len() + 1).min(4);
        let hist: Vec<Complex64> = self.rho[self.rho.len() + 1 - order..].to_vec();
        let mut known = [Complex64::new(0.0, 0.0); 3];
        let mut unknown = [0.0; 3];
        let mut rot = [Complex64::new(0.0, 0.0); 3];
        let mut par = [0.0; 3];
        let mut cts = [[0.0; 3]; 3];
        for i in 0..3 {
            let lw = time_weights(rule.x[i], order);
            known[i] = hist.iter().zip(&lw[..order - 1]).map(|(r, l)| r * *l).sum();
            unknown[i] = lw[order - 1];
            let s = t0 + dt * rule.x[i];
            rot[i] = Complex64::new(nu * s, -w * s).exp();
            par[i] = (nu * s).exp();
            cts[i] = TrajectoryMatrices::new(s, params).apply(k);
        }
        let coupling = if self.source { -self.mode.coupling } else { 0.0 };
        let full = self.layout == Layout::Full;
        let eq_par: Vec<(f64, f64)> = eq.components().collect();
        let grid = self.grid;
        let n_parts = self.parts.len();
        let src_part = n_parts - 1;
        // Per-label damping over the step and source coefficients.
        let per_label = |idx: usize| -> (f64, [f64; 3]) {
            let z = Self::label(&grid, idx);
            let mut q = [0.0; 3];
            let mut kdot = [0.0; 3];
            let mut g = [0.0; 3];
            for i in 0..3 {
                let zp = rot[i] * Complex64::new(z[0] - cts[i][0], z[1] - cts[i][1]);
                let z3 = if full { par[i] * (z[2] - cts[i][2]) } else { 0.0 };
                let perp = zp.norm_sqr();
                q[i] = perp + z3 * z3;
                kdot[i] = k[0] * zp.re + k[1] * zp.im + k[2] * z3;
                let f3: f64 =
                    if full { eq_par.iter().map(|(wt, s)| wt * (-0.5 * s * z3 * z3).exp()).sum() } else { 1.0 };
                g[i] = (-0.5 * perp).exp() * f3;
            }
            let total: f64 = (0..3).map(|j| rule.w[j] * q[j]).sum::<f64>() * dt;
            let decay = if nu > 0.0 { (-nu * total).exp() } else { 1.0 };
            let mut alpha = [0.0; 3];
            for i in 0..3 {
                let partial: f64 = (0..3).map(|j| rule.tail[i][j] * q[j]).sum::<f64>() * dt;
                let d = if nu > 0.0 { (-nu * partial).exp() } else { 1.0 };
                alpha[i] = dt * rule.w[i] * d * kdot[i] * g[i] * coupling;
            }
            (decay, alpha)
        };
        let coeffs: Vec<(f64, [f64; 3])> = (0..grid.len()).into_par_iter().map(per_label).collect();
        let mut q_field = vec![0.0; grid.len()];
        for (p, part) in self.parts.iter_mut().enumerate() {
            part.par_iter_mut().zip(&coeffs).for_each(|(v, (decay, _))| *v *= *decay);
            if p == src_part {
                part.par_iter_mut().zip(q_field.par_iter_mut()).zip(&coeffs).for_each(|((v, qv), (_, alpha))| {
                    *v += (0..3).map(|i| known[i] * alpha[i]).sum::<Complex64>();
                    *qv = (0..3).map(|i| unknown[i] * alpha[i]).sum();
                });
            }
        }
        let t1 = t0 + dt;
        let c1 = TrajectoryMatrices::new(t1, params).apply(k);
        let weights = self.part_weights(eq);
        let r_p: Complex64 = self.parts.iter().zip(&weights).map(|(p, wt)| self.interpolate(p, c1) * *wt).sum();
        let q_complex: Vec<Complex64> = q_field.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let r_q = self.interpolate(&q_complex, c1) * weights[src_part];
        let rho1 = r_p / (1.0 - r_q);
        if !rho1.re.is_finite() || !rho1.im.is_finite() {
            return Err(KinsimError::NonFinite(t1));
        }
        self.parts[src_part].par_iter_mut().zip(&q_field).for_each(|(v, qv)| *v += rho1 * *qv);
        self.rho.push(rho1);
        self.steps += 1;
        self.t = self.steps as f64 * dt;
        Ok(())
    }

    /// Velocity moments of this mode: `∫ |h|^2 / mu`, `rho^` and `∫ v h`.
    pub fn moments(&self, params: &PlasmaParams, eq: &Equilibrium) -> Result<ModeMoments, KinsimError> {
        let dims = if self.layout == Layout::Full { 3 } else { 2 };
        for a in 0..dims {
            if self.data.widths[a] >= 2f64.sqrt() {
                return Err(KinsimError::EnergyUndefined { width: self.data.widths[a] });
            }
        }
        let nu = params.nu;
        let w = params.omega_c();
        let t = self.t;
        let c = TrajectoryMatrices::new(t, params).apply(self.mode.k_f64());
        let transformed: Vec<VelocityGrid> = self.parts.iter().map(|p| self.to_velocity(p, dims)).collect();
        let g = &self.grid;
        let shrink = (-nu * t).exp();
        let vol_factor = (dims as f64 * nu * t).exp();
        let v_cut = 10.0;
        let n_parts = self.parts.len();
        let mut gram = vec![vec![Complex64::new(0.0, 0.0); n_parts]; n_parts];
        let mut rho_parts = vec![Complex64::new(0.0, 0.0); n_parts];
        let mut cur_parts = vec![[Complex64::new(0.0, 0.0); 3]; n_parts];
        let base = &transformed[0];
        for idx in 0..base.values.len() {
            let wv = base.freq(idx, g);
            let wsq = wv[0] * wv[0] + wv[1] * wv[1] + wv[2] * wv[2];
            let vsq = shrink * shrink * wsq;
            // v = e^{-tA^T} w.
            let vperp = Complex64::new(-nu * t, w * t).exp() * Complex64::new(wv[0], wv[1]);
            let v = [vperp.re, vperp.im, shrink * wv[2]];
            let phase = Complex64::from_polar(1.0, -(c[0] * wv[0] + c[1] * wv[1] + c[2] * wv[2]));
            let inv_mu = (2.0 * PI).powf(dims as f64 / 2.0) * (0.5 * vsq).exp();
            for p in 0..n_parts {
                let fp = transformed[p].values[idx];
                let h = phase * fp;
                rho_parts[p] += h * base.cell;
                for a in 0..3 {
                    cur_parts[p][a] += h * v[a] * base.cell;
                }
                if vsq.sqrt() <= v_cut {
                    for q in 0..n_parts {
                        gram[p][q] += fp.conj() * transformed[q].values[idx] * inv_mu * base.cell;
                    }
                }
            }
        }
        for row in gram.iter_mut() {
            for v in row.iter_mut() {
                *v *= vol_factor;
            }
        }
        let (norm_sq, rho, current) = match self.layout {
            Layout::Full => (gram[0][0].re, rho_parts[0], cur_parts[0]),
            Layout::Transverse => {
                let b = ParallelGram::new(&self.data, eq);
                let norm = gram[0][0].re * b.bb + 2.0 * (gram[0][1] * b.bf).re + gram[1][1].re * b.ff;
                let wts = [b.b_mass, b.f_mass];
                let rho = rho_parts[0] * wts[0] + rho_parts[1] * wts[1];
                let mut cur = [Complex64::new(0.0, 0.0); 3];
                for a in 0..2 {
                    cur[a] = cur_parts[0][a] * wts[0] + cur_parts[1][a] * wts[1];
                }
                cur[2] = rho_parts[0] * b.b_first + rho_parts[1] * b.f_first;
                (norm, rho, cur)
            }
        };
        Ok(ModeMoments { k: self.mode.k, t, norm_sq, rho, current })
    }

    /// Inverse transform of a label-space array to the frequency grid
    /// `w_m = 2 pi m / (N h)`, including the `(2 pi)^{-d}` factor and the
    /// label-cell volume.
    fn to_velocity(&self, values: &[Complex64], dims: usize) -> VelocityGrid {
        let g = &self.grid;
        let mut buf = values.to_vec();
        let mut planner = FftPlanner::new();
        let n = g.n;
        // Axis 0 (contiguous).
        let f0 = planner.plan_fft_inverse(n[0]);
        for chunk in buf.chunks_mut(n[0]) {
            f0.process(chunk);
        }
        let strided = |buf: &mut Vec<Complex64>, axis: usize, planner: &mut FftPlanner<f64>| {
            let len = n[axis];
            if len == 1 {
                return;
            }
            let fft = planner.plan_fft_inverse(len);
            let stride = if axis == 1 { n[0] } else { n[0] * n[1] };
            let outer = buf.len() / (len * stride);
            let mut line = vec![Complex64::new(0.0, 0.0); len];
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * len * stride + s;
                    for j in 0..len {
                        line[j] = buf[base + j * stride];
                    }
                    fft.process(&mut line);
                    for j in 0..len {
                        buf[base + j * stride] = line[j];
                    }
                }
            }
        };
        strided(&mut buf, 1, &mut planner);
        strided(&mut buf, 2, &mut planner);
        let mut cell_label = 1.0;
        let mut cell_freq = 1.0;
        for a in 0..dims {
            cell_label *= g.h[a];
            cell_freq *= 2.0 * PI / (n[a] as f64 * g.h[a]);
        }
        let scale = cell_label / (2.0 * PI).powi(dims as i32);
        let vg = VelocityGrid { values: Vec::new(), cell: cell_freq };
        let values = buf
            .into_iter()
            .enumerate()
            .map(|(idx, v)| {
                let wv = vg.freq(idx, g);
                let shift = (0..3).map(|a| g.lo[a] * wv[a]).sum::<f64>();
                v * Complex64::from_polar(scale, shift)
            })
            .collect();
        VelocityGrid { values, cell: cell_freq }
    }
}

struct VelocityGrid {
    values: Vec<Complex64>,
    cell: f64,
}

impl VelocityGrid {
    fn freq(&self, idx: usize, g: &LabelGrid) -> Vec3 {
        let i = [idx % g.n[0], (idx / g.n[0]) % g.n[1], idx / (g.n[0] * g.n[1])];
        let mut w = [0.0; 3];
        for a in 0..3 {
            if g.n[a] > 1 {
                let m = if i[a] <= g.n[a] / 2 { i[a] as f64 } else { i[a] as f64 - g.n[a] as f64 };
                w[a] = 2.0 * PI * m / (g.n[a] as f64 * g.h[a]);
            }
        }
        w
    }
}

/// One-dimensional weighted products of the parallel profiles used by the
/// transverse layout.
struct ParallelGram {
    bb: f64,
    bf: f64,
    ff: f64,
    b_mass: f64,
    f_mass: f64,
    b_first: f64,
    f_first: f64,
}

impl ParallelGram {
    fn new(data: &ModeData, eq: &Equilibrium) -> Self {
        let s = data.widths[2];
        let c = data.center[2];
        let b = |v: f64| (-0.5 * (v - c) * (v - c) / (s * s)).exp() / (2.0 * PI * s * s).sqrt();
        let inv_mu = |v: f64| (2.0 * PI).sqrt() * (0.5 * v * v).exp();
        let (xs, ws) = crate::quad::composite_gl(-16.0, 16.0, 64, 10);
        let mut out = Self { bb: 0.0, bf: 0.0, ff: 0.0, b_mass: 0.0, f_mass: 0.0, b_first: 0.0, f_first: 0.0 };
        for (v, wt) in xs.iter().zip(&ws) {
            let (bv, fv) = (b(*v), eq.f3(*v));
            out.bb += wt * bv * bv * inv_mu(*v);
            out.bf += wt * bv * fv * inv_mu(*v);
            out.ff += wt * fv * fv * inv_mu(*v);
            out.b_mass += wt * bv;
            out.f_mass += wt * fv;
            out.b_first += wt * v * bv;
            out.f_first += wt * v * fv;
        }
        out
    }
}

/// Velocity moments of one mode at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeMoments {
    pub k: Wavevector,
    pub t: f64,
    /// `∫ |h^_k(v)|^2 / mu(v) dv`.
    pub norm_sq: f64,
    pub rho: Complex64,
    /// `∫ v h^_k(v) dv`.
    pub current: [Complex64; 3],
}

/// Energy functionals summed over modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Energies {
    pub t: f64,
    pub e0: f64,
    pub e1: f64,
    pub g: f64,
}

/// Energies of a real field made of the simulated modes and their `-k`
/// partners, which contribute equally. Requires a Maxwellian equilibrium.
pub fn energies(fields: &[EtaField], params: &PlasmaParams, eq: &Equilibrium) -> Result<Energies, KinsimError> {
    let moments = fields.iter().map(|f| f.moments(params, eq)).collect::<Result<Vec<_>, _>>()?;
    Ok(energies_from_moments(&moments, fields, params))
}

fn energies_from_moments(moments: &[ModeMoments], fields: &[EtaField], params: &PlasmaParams) -> Energies {
    let norm = 2.0 / (2.0 * PI).powi(3);
    let (mut e0, mut e1, mut g) = (0.0, 0.0, 0.0);
    for (m, f) in moments.iter().zip(fields) {
        let mode = &f.mode;
        let rho = f.density();
        let part = 0.5 * m.norm_sq + 0.5 * params.q / params.m * mode.w_hat * rho.norm_sqr();
        e0 += norm * part;
        e1 += norm * mode.k_sq() * part;
        let k = mode.k_f64();
        let div: Complex64 = (0..3).map(|a| Complex64::new(0.0, k[a]) * m.current[a]).sum();
        g += norm * (rho.conj() * div).re;
    }
    Energies { t: moments.first().map_or(0.0, |m| m.t), e0, e1, g }
}

/// Output of a kinetic run.
#[derive(Debug, Clone)]
pub struct KinsimRun {
    pub series: Vec<TimeSeries>,
    pub energies: Vec<Energies>,
    pub fields: Vec<EtaField>,
}

/// Runs all modes of `data` to `cfg.t_end`, recording densities and,
/// if requested, energies.
pub fn run(
    params: &PlasmaParams,
    eq: &Equilibrium,
    modes: &[(ModeContext, ModeData)],
    cfg: &KinsimConfig,
) -> Result<KinsimRun, KinsimError> {
    let mut fields = modes.iter().map(|(m, d)| EtaField::new(m, params, eq, d, cfg)).collect::<Result<Vec<_>, _>>()?;
    let n_steps = (cfg.t_end / cfg.dt).round() as usize;
    let mut energies_out = Vec::new();
    if cfg.energy_every > 0 {
        energies_out.push(energies(&fields, params, eq)?);
    }
    for step in 1..=n_steps {
        for f in fields.iter_mut() {
            f.advance(params, eq)?;
        }
        if cfg.energy_every > 0 && step % cfg.energy_every == 0 {
            energies_out.push(energies(&fields, params, eq)?);
        }
    }
    let series = fields
        .iter()
        .map(|f| {
            let mut ts = TimeSeries::new(cfg.dt, f.rho.clone()).with_mode(f.mode.k).with_kernel_label("kinsim");
            ts.meta.solver_order = 4;
            ts
        })
        .collect();
    Ok(KinsimRun { series, energies: energies_out, fields })
}

/// Returns a copy of `field` advanced by one step.
pub fn step(field: &EtaField, params: &PlasmaParams, eq: &Equilibrium) -> Result<EtaField, KinsimError> {
    let mut next = field.clone();
    next.advance(params, eq)?;
    Ok(next)
}

/// Log-linear fit of a decaying energy over a time window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub delta: f64,
    pub t_start: f64,
    pub t_stop: f64,
    pub r_squared: f64,
}

/// Fits `E0 + E1 ~ C e^{-rate t}` over `[1/(4 nu), 1/nu]`, clipped to the
/// recorded range; `delta = rate / nu`.
pub fn hypocoercive_decay(samples: &[Energies], nu: f64) -> Option<DecayFit> {
    let (t_start, t_stop) = if nu > 0.0 { (0.25 / nu, 1.0 / nu) } else { (0.0, f64::INFINITY) };
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|e| e.t >= t_start - 1e-9 && e.t <= t_stop + 1e-9 && e.e0 + e.e1 > 0.0)
        .map(|e| (e.t, (e.e0 + e.e1).ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let fit = crate::analysis::linear_fit(&pts);
    let (rate, r2) = (-fit.slope, fit.r_squared);
    Some(DecayFit {
        rate,
        delta: if nu > 0.0 { rate / nu } else { f64::NAN },
        t_start: pts[0].0,
        t_stop: pts[pts.len() - 1].0,
        r_squared: r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trig_weights_reproduce_nodes_and_constants() {
        let g = LabelGrid { lo: [-3.0, 0.0, 0.0], h: [0.5, 1.0, 1.0], n: [13, 1, 1] };
        let w = g.interp_weights(0, g.node(0, 4));
        assert!((w[4] - 1.0).abs() < 1e-14);
        let w = g.interp_weights(0, 0.37);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn time_weights_are_interpolatory() {
        let w = time_weights(0.3, 4);
        let nodes = [-2.0, -1.0, 0.0, 1.0];
        let cubic = |x: f64| 1.0 + x - 2.0 * x * x + 0.5 * x * x * x;
        let v: f64 = w.iter().zip(nodes).map(|(a, x)| a * cubic(x)).sum();
        assert!((v - cubic(0.3)).abs() < 1e-14);
    }
}
