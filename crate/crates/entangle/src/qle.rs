//! Time-domain solution of the two coupled quantum Langevin equations.
//!
//! The memory kernel is discretized on an auxiliary frequency grid, which turns the
//! integro-differential equation into a linear ODE system. That system is available
//! directly (for Runge–Kutta integration) and through its exact normal modes, which
//! is how production runs obtain the Green's function. The noise part of the
//! covariance is accumulated in the frequency domain.

use std::f64::consts::PI;

use nalgebra::Matrix4;
use num_complex::Complex64;

use crate::bath::{self, coth_weight, BathSpec, Geometry};
use crate::error::{Error, Result};
use crate::gaussian::{log_negativity, symplectic_eigenvalues, CovarianceMatrix, SystemParams, P1, P2, Q1, Q2};
use crate::ode::Dopri;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMode {
    Uniform,
    QuadraticFromGap,
}

/// Auxiliary frequency grid s_k with weights Δs_k, symmetric about zero.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxGrid {
    pub mode: GridMode,
    pub n_grid: usize,
    pub s_max: f64,
    pub gap: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl AuxGrid {
    /// s_k = (k - n) Δs for k = 0..2n with s_max = (2n + 1) Δs.
    pub fn uniform(n_grid: usize, s_max: f64) -> Result<Self> {
        if n_grid == 0 || !(s_max > 0.0) {
            return Err(Error::Validation("n_grid > 0 and s_max > 0".into()));
        }
        let ds = s_max / (2 * n_grid + 1) as f64;
        let nodes = (0..=2 * n_grid).map(|k| (k as f64 - n_grid as f64) * ds).collect();
        Ok(AuxGrid {
            mode: GridMode::Uniform,
            n_grid,
            s_max,
            gap: 0.0,
            nodes,
            weights: vec![ds; 2 * n_grid + 1],
        })
    }

    /// s_k = ω0 + (s_max - ω0) k²/n², Δs_k = 2k (s_max - ω0)/n² for k = 1..n, mirrored.
    pub fn quadratic_from_gap(n_grid: usize, s_max: f64, gap: f64) -> Result<Self> {
        if n_grid == 0 || !(gap >= 0.0) || !(s_max > gap) {
            return Err(Error::Validation("n_grid > 0 and s_max > omega_gap >= 0".into()));
        }
        let n2 = (n_grid * n_grid) as f64;
        let span = s_max - gap;
        let pos: Vec<(f64, f64)> = (1..=n_grid)
            .map(|k| {
                let k = k as f64;
                (gap + span * k * k / n2, 2.0 * k * span / n2)
            })
            .collect();
        let mut nodes = Vec::with_capacity(2 * n_grid);
        let mut weights = Vec::with_capacity(2 * n_grid);
        for &(s, w) in pos.iter().rev() {
            nodes.push(-s);
            weights.push(w);
        }
        for &(s, w) in &pos {
            nodes.push(s);
            weights.push(w);
        }
        Ok(AuxGrid {
            mode: GridMode::QuadraticFromGap,
            n_grid,
            s_max,
            gap,
            nodes,
            weights,
        })
    }

    /// Recurrence time 2π/max Δs of the discretized bath.
    pub fn revival_time(&self) -> f64 {
        2.0 * PI / self.weights.iter().cloned().fold(0.0, f64::max)
    }
}

/// Smallest n_grid whose grid recurs later than `t_max` (with 10% margin).
pub fn min_grid_for_time(mode: GridMode, s_max: f64, gap: f64, t_max: f64) -> usize {
    let need = 1.1 * t_max / (2.0 * PI);
    let n = match mode {
        GridMode::Uniform => (s_max * need - 1.0) / 2.0,
        GridMode::QuadraticFromGap => 2.0 * (s_max - gap) * need,
    };
    n.ceil().max(1.0) as usize
}

/// Auxiliary amplitude with its precomputed kernel weights Γ̂(0, s) and Γ̂(r, s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxNode {
    pub s: f64,
    pub ds: f64,
    pub g0: f64,
    pub gr: f64,
}

/// Right-hand side of the auxiliary-function ODE system.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeSystem {
    pub omega0: f64,
    pub nodes: Vec<AuxNode>,
}

/// Γ̂ = (4/√(2π)) Γ̃ for the unitary transform used by the auxiliary functions.
const HAT: f64 = 1.595_769_121_605_730_7;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn build_aux_system(sys: &SystemParams, spec: &BathSpec, grid: &AuxGrid) -> Result<OdeSystem> {
    let r = sys.r;
    let mut nodes = Vec::new();
    match (spec.geometry, grid.mode) {
        (Geometry::Waveguide, GridMode::Uniform) => {
            return Err(Error::Config("the waveguide bath requires the QuadraticFromGap grid".into()));
        }
        _ => {
            for (&s, &ds) in grid.nodes.iter().zip(&grid.weights) {
                nodes.push(AuxNode {
                    s,
                    ds,
                    g0: HAT * bath::kernel_fourier(s, 0.0, spec),
                    gr: HAT * bath::kernel_fourier(s, r, spec),
                });
            }
        }
    }
    Ok(OdeSystem {
        omega0: sys.omega0,
        nodes,
    })
}

impl OdeSystem {
    /// 4 oscillator coordinates plus a complex amplitude per node and oscillator.
    pub fn dim(&self) -> usize {
        4 + 4 * self.nodes.len()
    }

    /// State layout: (Q1, Q2, P1, P2, then Re f1, Im f1, Re f2, Im f2 per node).
    pub fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        let (q1, q2) = (y[Q1], y[Q2]);
        let w2 = self.omega0 * self.omega0;
        let (mut force1, mut force2) = (0.0, 0.0);
        for (k, nd) in self.nodes.iter().enumerate() {
            let b = 4 + 4 * k;
            let (re1, im1, re2, im2) = (y[b], y[b + 1], y[b + 2], y[b + 3]);
            let d_re1 = nd.g0 * q1 + nd.gr * q2 - nd.s * im1;
            let d_re2 = nd.g0 * q2 + nd.gr * q1 - nd.s * im2;
            dy[b] = d_re1;
            dy[b + 1] = nd.s * re1;
            dy[b + 2] = d_re2;
            dy[b + 3] = nd.s * re2;
            let c = nd.ds * INV_SQRT_2PI;
            force1 += c * d_re1;
            force2 += c * d_re2;
        }
        dy[Q1] = y[P1];
        dy[Q2] = y[P2];
        dy[P1] = -w2 * q1 - force1;
        dy[P2] = -w2 * q2 - force2;
    }

    /// Constant shift c_0 and pole list (s_k², C_k) of one symmetry sector (sign +1 or -1).
    pub fn sector_poles(&self, sign: f64) -> (f64, Vec<(f64, f64)>) {
        let mut c0 = 0.0;
        let mut poles: Vec<(f64, f64)> = Vec::with_capacity(self.nodes.len());
        for nd in &self.nodes {
            let c = nd.ds * INV_SQRT_2PI * (nd.g0 + sign * nd.gr);
            if nd.s == 0.0 {
                c0 += c;
            } else if c > 0.0 {
                poles.push((nd.s * nd.s, c));
            }
        }
        poles.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(poles.len() / 2 + 1);
        for (p, c) in poles {
            match merged.last_mut() {
                Some(last) if (p - last.0).abs() <= 1e-13 * p => last.1 += c,
                _ => merged.push((p, c)),
            }
        }
        (c0, merged)
    }
}

/// Normal modes ω_j and amplitudes a_j of one sector: g_QQ(t) = Σ a_j cos(ω_j t).
#[derive(Debug, Clone, PartialEq)]
pub struct SectorModes {
    pub omega: Vec<f64>,
    pub amp: Vec<f64>,
}

impl SectorModes {
    /// Roots of D(x) = a0 + ΣC - x + Σ C_i p_i / (x - p_i), one per interval between poles.
    pub fn from_poles(a0: f64, poles: &[(f64, f64)]) -> Result<Self> {
        if !(a0 > 0.0) {
            return Err(Error::Numerical(format!("non-positive static stiffness {a0}")));
        }
        let csum: f64 = poles.iter().map(|p| p.1).sum();
        let base = a0 + csum;
        let m = poles.len();
        let mut omega = Vec::with_capacity(m + 1);
        let mut amp = Vec::with_capacity(m + 1);
        let mut diff = vec![0.0; m];
        for j in 0..=m {
            let left = if j == 0 { 0.0 } else { poles[j - 1].0 };
            let (origin, lo, hi) = if j == m {
                // beyond the last pole: D decreases like -x
                let mut hi = 1.0f64.max(left);
                loop {
                    hi *= 2.0;
                    let v = base - hi + poles.iter().map(|&(p, c)| c * p / (hi - p)).sum::<f64>();
                    if v < 0.0 {
                        break;
                    }
                    if !hi.is_finite() {
                        return Err(Error::Numerical("unbounded normal mode".into()));
                    }
                }
                (left, 0.0, hi - left)
            } else {
                let right = poles[j].0;
                if j == 0 {
                    (right, -right, 0.0)
                } else {
                    let mid = 0.5 * (left + right);
                    let v = base - mid + poles.iter().map(|&(p, c)| c * p / (mid - p)).sum::<f64>();
                    if v < 0.0 {
                        (left, 0.0, mid - left)
                    } else {
                        (right, mid - right, 0.0)
                    }
                }
            };
            for (d, &(p, _)) in diff.iter_mut().zip(poles) {
                *d = origin - p;
            }
            let eval = |delta: f64| -> (f64, f64) {
                let mut v = base - (origin + delta);
                let mut dv = -1.0;
                for (d, &(p, c)) in diff.iter().zip(poles) {
                    let den = d + delta;
                    let q = c * p / den;
                    v += q;
                    dv -= q / den;
                }
                (v, dv)
            };
            let delta = solve_decreasing(eval, lo, hi)?;
            let (_, dv) = eval(delta);
            let x = origin + delta;
            if !(x > 0.0) || !(dv < 0.0) {
                return Err(Error::Numerical(format!("invalid normal mode x = {x}")));
            }
            omega.push(x.sqrt());
            amp.push(-1.0 / dv);
        }
        Ok(SectorModes { omega, amp })
    }

    /// (g_QQ, g_QP, g_PQ, g_PP) at time t.
    pub fn eval(&self, t: f64) -> [f64; 4] {
        let (mut qq, mut qp, mut pq) = (0.0, 0.0, 0.0);
        for (&w, &a) in self.omega.iter().zip(&self.amp) {
            let (s, c) = (w * t).sin_cos();
            qq += a * c;
            qp += a * s / w;
            pq -= a * w * s;
        }
        [qq, qp, pq, qq]
    }

    pub fn amplitude_sum(&self) -> f64 {
        self.amp.iter().sum()
    }
}

/// Root of a decreasing function on (lo, hi) with a pole at one open end.
fn solve_decreasing<F: Fn(f64) -> (f64, f64)>(f: F, lo: f64, hi: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let mut x = 0.5 * (a + b);
    for _ in 0..300 {
        let (v, dv) = f(x);
        if v == 0.0 {
            return Ok(x);
        }
        if v > 0.0 {
            a = x;
        } else {
            b = x;
        }
        let newton = x - v / dv;
        let next = if newton > a && newton < b && dv < 0.0 {
            newton
        } else {
            0.5 * (a + b)
        };
        let tol = 4.0 * f64::EPSILON * next.abs().max(f64::MIN_POSITIVE);
        if (next - x).abs() <= tol || (b - a) <= tol {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::Convergence("normal-mode root finding".into()))
}

/// Time-sampled 4×4 Green's function 𝒢(n dt) in the ordering (Q1, Q2, P1, P2).
#[derive(Debug, Clone, PartialEq)]
pub struct GreensFunctionTable {
    pub dt: f64,
    pub samples: Vec<Matrix4<f64>>,
}

impl GreensFunctionTable {
    pub fn times(&self) -> Vec<f64> {
        (0..self.samples.len()).map(|n| n as f64 * self.dt).collect()
    }

    pub fn t_max(&self) -> f64 {
        (self.samples.len().saturating_sub(1)) as f64 * self.dt
    }

    /// (g_QQ, g_QP, g_PQ, g_PP) of the symmetric (sign +1) or antisymmetric sector.
    pub fn sector(&self, n: usize, sign: f64) -> [f64; 4] {
        let m = &self.samples[n];
        [
            m[(Q1, Q1)] + sign * m[(Q1, Q2)],
            m[(Q1, P1)] + sign * m[(Q1, P2)],
            m[(P1, Q1)] + sign * m[(P1, Q2)],
            m[(P1, P1)] + sign * m[(P1, P2)],
        ]
    }
}

/// Combine sector values (qq, qp, pq, pp) into the 4×4 matrix.
pub fn assemble_sectors(s: [f64; 4], a: [f64; 4]) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    let blocks = [(Q1, Q1, 0), (Q1, P1, 1), (P1, Q1, 2), (P1, P1, 3)];
    for &(x, y, k) in &blocks {
        let same = 0.5 * (s[k] + a[k]);
        let cross = 0.5 * (s[k] - a[k]);
        let (x2, y2) = (x + 1, y + 1);
        m[(x, y)] = same;
        m[(x2, y2)] = same;
        m[(x, y2)] = cross;
        m[(x2, y)] = cross;
    }
    m
}

fn steps_for(t_max: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(t_max >= 0.0) {
        return Err(Error::Validation("dt > 0 and t_max >= 0".into()));
    }
    Ok((t_max / dt - 1e-9).ceil().max(0.0) as usize)
}

/// Green's function by Runge–Kutta integration of the four canonical initial conditions.
pub fn greens_function(system: &OdeSystem, t_max: f64, dt: f64) -> Result<GreensFunctionTable> {
    greens_function_with(system, t_max, dt, &Dopri::default())
}

pub fn greens_function_with(system: &OdeSystem, t_max: f64, dt: f64, dopri: &Dopri) -> Result<GreensFunctionTable> {
    let n = steps_for(t_max, dt)?;
    let times: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
    let mut samples = vec![Matrix4::zeros(); n + 1];
    let s_top = system.nodes.iter().map(|nd| nd.s.abs()).fold(0.0, f64::max);
    let mut dp = *dopri;
    dp.h_init = dp.h_init.min(0.1 / s_top.max(1.0));
    for col in 0..4 {
        let mut y0 = vec![0.0; system.dim()];
        y0[col] = 1.0;
        let out = dp.solve(|_, y, dy| system.rhs(y, dy), 0.0, &y0, &times)?;
        for (k, y) in out.iter().enumerate() {
            for row in 0..4 {
                samples[k][(row, col)] = y[row];
            }
        }
    }
    Ok(GreensFunctionTable { dt, samples })
}

/// Exact normal modes of both sectors of the discretized system.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalGreens {
    pub symmetric: SectorModes,
    pub antisymmetric: SectorModes,
}

impl ModalGreens {
    pub fn new(system: &OdeSystem) -> Result<Self> {
        let w2 = system.omega0 * system.omega0;
        let (c0s, ps) = system.sector_poles(1.0);
        let (c0a, pa) = system.sector_poles(-1.0);
        Ok(ModalGreens {
            symmetric: SectorModes::from_poles(w2 + c0s, &ps)?,
            antisymmetric: SectorModes::from_poles(w2 + c0a, &pa)?,
        })
    }

    pub fn at(&self, t: f64) -> Matrix4<f64> {
        assemble_sectors(self.symmetric.eval(t), self.antisymmetric.eval(t))
    }

    pub fn table(&self, t_max: f64, dt: f64) -> Result<GreensFunctionTable> {
        let n = steps_for(t_max, dt)?;
        Ok(GreensFunctionTable {
            dt,
            samples: (0..=n).map(|k| self.at(k as f64 * dt)).collect(),
        })
    }
}

/// Green's function from the normal modes of the auxiliary system.
pub fn greens_function_modal(system: &OdeSystem, t_max: f64, dt: f64) -> Result<GreensFunctionTable> {
    ModalGreens::new(system)?.table(t_max, dt)
}

/// Trajectory of the covariance matrix and the logarithmic negativity.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub covariances: Vec<CovarianceMatrix>,
    pub log_negativity: Vec<f64>,
    /// Smallest symplectic eigenvalue seen along the trajectory.
    pub min_symplectic: f64,
}

impl EvolutionResult {
    pub fn max_log_negativity(&self) -> f64 {
        self.log_negativity.iter().cloned().fold(0.0, f64::max)
    }

    pub fn final_covariance(&self) -> &CovarianceMatrix {
        self.covariances.last().expect("trajectory is non-empty")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// Record every k-th Green's-function sample.
    pub output_every: usize,
    /// Relative size of the neglected spectral tail.
    pub tail_eps: f64,
    /// Trajectories dipping below 1 - tol in the symplectic spectrum are rejected.
    pub physical_tol: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            output_every: 1,
            tail_eps: 1e-10,
            physical_tol: 1e-3,
        }
    }
}

pub fn evolve_covariance(
    green: &GreensFunctionTable,
    cov0: &CovarianceMatrix,
    spec: &BathSpec,
    sys: &SystemParams,
) -> Result<EvolutionResult> {
    evolve_covariance_with(green, cov0, spec, sys, &EvolveOptions::default())
}

/// ∫_0^1 H_k(x) e^{iθx} dx for the four cubic Hermite basis functions.
fn hermite_moments(theta: f64) -> [Complex64; 4] {
    let mut m = [Complex64::new(0.0, 0.0); 4];
    if theta.abs() < 2.0 {
        let it = Complex64::new(0.0, theta);
        for (j, mj) in m.iter_mut().enumerate() {
            let mut term = Complex64::new(1.0, 0.0);
            let mut sum = Complex64::new(0.0, 0.0);
            for k in 0..60 {
                if k > 0 {
                    term *= it / k as f64;
                }
                let add = term / (j + k + 1) as f64;
                sum += add;
                if add.norm() < 1e-18 {
                    break;
                }
            }
            *mj = sum;
        }
    } else {
        let e = Complex64::new(0.0, theta).exp();
        let inv = Complex64::new(0.0, -1.0 / theta);
        m[0] = (e - 1.0) * inv;
        for j in 1..4 {
            m[j] = (e - m[j - 1] * j as f64) * inv;
        }
    }
    [
        m[0] - m[2] * 3.0 + m[3] * 2.0,
        m[1] - m[2] * 2.0 + m[3],
        m[2] * 3.0 - m[3] * 2.0,
        m[3] - m[2],
    ]
}

/// Cov(t) = 𝒢 Cov0 𝒢ᵀ + noise, with the noise term written per sector as
/// ∫ dω W(ω) Re[U(ω) U(ω)†], U_t(ω) = ∫_0^t (g_QP, g_PP)(τ) e^{iωτ} dτ,
/// W = J coth(ω/2T)(1 ± G). U is advanced step by step with a cubic Hermite Filon rule.
pub fn evolve_covariance_with(
    green: &GreensFunctionTable,
    cov0: &CovarianceMatrix,
    spec: &BathSpec,
    sys: &SystemParams,
    opts: &EvolveOptions,
) -> Result<EvolutionResult> {
    let n_steps = green.samples.len().saturating_sub(1);
    let h = green.dt;
    let every = opts.output_every.max(1);
    let nodes = bath::spectral_nodes(spec, green.t_max() + sys.r, opts.tail_eps);
    let nn = nodes.len();
    let mut w_s = Vec::with_capacity(nn);
    let mut w_a = Vec::with_capacity(nn);
    let mut hw = Vec::with_capacity(nn);
    let mut rot = Vec::with_capacity(nn);
    let mut omega = Vec::with_capacity(nn);
    for nd in &nodes {
        let base = nd.jw * coth_weight(nd.omega, spec.temperature);
        let g = nd.cross(sys.r);
        w_s.push(base * (1.0 + g));
        w_a.push(base * (1.0 - g));
        let m = hermite_moments(nd.omega * h);
        hw.push([m[0] * h, m[1] * h, m[2] * h, m[3] * h]);
        rot.push(Complex64::from_polar(1.0, nd.omega * h));
        omega.push(nd.omega);
    }
    let mut phase = vec![Complex64::new(1.0, 0.0); nn];
    // per node: U for (S,Q), (S,P), (A,Q), (A,P)
    let mut u = vec![[Complex64::new(0.0, 0.0); 4]; nn];

    let mut times = Vec::new();
    let mut covs = Vec::new();
    let mut ens = Vec::new();
    let mut min_eig = f64::INFINITY;

    let record = |n: usize,
                  u: &Vec<[Complex64; 4]>,
                  times: &mut Vec<f64>,
                  covs: &mut Vec<CovarianceMatrix>,
                  ens: &mut Vec<f64>,
                  min_eig: &mut f64|
     -> Result<()> {
        let t = n as f64 * h;
        let (mut s, mut a) = ([0.0; 4], [0.0; 4]);
        for k in 0..nn {
            let [sq, sp, aq, ap] = u[k];
            let cross_s = (sq * sp.conj()).re;
            let cross_a = (aq * ap.conj()).re;
            s[0] += w_s[k] * sq.norm_sqr();
            s[1] += w_s[k] * cross_s;
            s[3] += w_s[k] * sp.norm_sqr();
            a[0] += w_a[k] * aq.norm_sqr();
            a[1] += w_a[k] * cross_a;
            a[3] += w_a[k] * ap.norm_sqr();
        }
        s[2] = s[1];
        a[2] = a[1];
        let g = &green.samples[n];
        let det = g * cov0.0 * g.transpose();
        let cov = CovarianceMatrix(det + assemble_sectors(s, a)).symmetrized();
        let (lmin, _) = symplectic_eigenvalues(&cov)?;
        *min_eig = min_eig.min(lmin);
        if lmin < 1.0 - opts.physical_tol {
            return Err(Error::Physicality { t, min_eig: lmin });
        }
        ens.push(log_negativity(&cov)?);
        times.push(t);
        covs.push(cov);
        Ok(())
    };

    record(0, &u, &mut times, &mut covs, &mut ens, &mut min_eig)?;
    for n in 0..n_steps {
        let (s0, s1) = (green.sector(n, 1.0), green.sector(n + 1, 1.0));
        let (a0, a1) = (green.sector(n, -1.0), green.sector(n + 1, -1.0));
        // Hermite data: values and derivatives of (g_QP, g_PP); d/dt g_QP = g_PP, d/dt g_PP = g_PQ
        let coef = |x0: [f64; 4], x1: [f64; 4]| -> [[f64; 4]; 2] {
            [[x0[1], h * x0[3], x1[1], h * x1[3]], [x0[3], h * x0[2], x1[3], h * x1[2]]]
        };
        let cs = coef(s0, s1);
        let ca = coef(a0, a1);
        for k in 0..nn {
            let w = &hw[k];
            let mut inc = [Complex64::new(0.0, 0.0); 4];
            for (slot, c) in [cs[0], cs[1], ca[0], ca[1]].iter().enumerate() {
                inc[slot] = w[0] * c[0] + w[1] * c[1] + w[2] * c[2] + w[3] * c[3];
            }
            let p = phase[k];
            for slot in 0..4 {
                u[k][slot] += p * inc[slot];
            }
            phase[k] = p * rot[k];
        }
        let next = n + 1;
        if next % 128 == 0 {
            let t = next as f64 * h;
            for k in 0..nn {
                phase[k] = Complex64::from_polar(1.0, omega[k] * t);
            }
        }
        if next % every == 0 || next == n_steps {
            record(next, &u, &mut times, &mut covs, &mut ens, &mut min_eig)?;
        }
    }
    Ok(EvolutionResult {
        times,
        covariances: covs,
        log_negativity: ens,
        min_symplectic: min_eig,
    })
}

/// Solver settings for a complete time-domain run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QleConfig {
    pub n_grid: usize,
    /// Total span of the auxiliary grid; defaults to 10 Ωc.
    pub s_max: Option<f64>,
    pub t_max: f64,
    /// Time step of the Green's-function table; defaults to min(0.02, 0.25/Ωc).
    pub dt: Option<f64>,
    /// Spacing of recorded output times; defaults to 0.1.
    pub output_dt: Option<f64>,
    pub tail_eps: f64,
    /// Enlarge a uniform grid whose recurrence time would fall inside the run.
    pub auto_revival: bool,
}

impl Default for QleConfig {
    fn default() -> Self {
        QleConfig {
            n_grid: 1000,
            s_max: None,
            t_max: 60.0,
            dt: None,
            output_dt: None,
            tail_eps: 1e-10,
            auto_revival: true,
        }
    }
}

impl QleConfig {
    pub fn paper_scale() -> Self {
        QleConfig {
            n_grid: 10_000,
            ..Default::default()
        }
    }

    pub fn s_max_for(&self, spec: &BathSpec) -> f64 {
        self.s_max.unwrap_or(10.0 * spec.omega_c)
    }

    pub fn dt_for(&self, spec: &BathSpec) -> f64 {
        self.dt.unwrap_or_else(|| 0.02f64.min(0.25 / spec.omega_c))
    }

    /// Auxiliary grid for this bath, enlarged against recurrences if requested.
    pub fn grid_for(&self, spec: &BathSpec) -> Result<AuxGrid> {
        let s_max = self.s_max_for(spec);
        let mode = match spec.geometry {
            Geometry::Waveguide => GridMode::QuadraticFromGap,
            _ => GridMode::Uniform,
        };
        let mut n = self.n_grid;
        if self.auto_revival {
            n = n.max(min_grid_for_time(mode, s_max, spec.gap, self.t_max));
        }
        match mode {
            GridMode::QuadraticFromGap => AuxGrid::quadratic_from_gap(n, s_max, spec.gap),
            GridMode::Uniform => AuxGrid::uniform(n, s_max),
        }
    }
}

/// Full pipeline: grid, auxiliary system, modal Green's function and covariance evolution.
pub fn simulate(sys: &SystemParams, spec: &BathSpec, cfg: &QleConfig) -> Result<EvolutionResult> {
    sys.validate()?;
    spec.validate()?;
    let grid = cfg.grid_for(spec)?;
    let system = build_aux_system(sys, spec, &grid)?;
    let steps = (cfg.t_max / cfg.dt_for(spec)).ceil().max(1.0) as usize;
    let dt = cfg.t_max / steps as f64;
    let out_dt = cfg.output_dt.unwrap_or(0.1).max(dt);
    let every = (out_dt / dt).round().max(1.0) as usize;
    let green = greens_function_modal(&system, cfg.t_max, dt)?;
    let opts = EvolveOptions {
        output_every: every,
        tail_eps: cfg.tail_eps,
        ..Default::default()
    };
    evolve_covariance_with(&green, &crate::gaussian::squeezed_initial(sys), spec, sys, &opts)
}
