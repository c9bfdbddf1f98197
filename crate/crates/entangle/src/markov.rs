//! Born–Markov effective model: the two oscillators split into symmetric and
//! antisymmetric sectors, each coupled to an effective oscillator at the van Hove
//! frequency ω0 and to a weak 3D background bath.
//!
//! In every sector the phase-space variables are x = (Q, q, P, p) with Q the sector
//! coordinate of the system oscillators and q the effective oscillator. The normal modes
//! are X̄ = (Q̄1, Q̄2, P̄1, P̄2) = S x.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use num_complex::Complex64;

use crate::bath::{self, BathSpec, Geometry};
use crate::error::{Error, Result};
use crate::gaussian::{self, CovarianceMatrix, SystemParams};
use crate::ode::Dopri;
use crate::qle::{assemble_sectors, EvolutionResult};
use crate::quad::Adaptive;
use crate::specfun::{gamma_function, upper_incomplete_gamma_sheet_scaled};

/// Gaussian-ansatz coefficients c1..c14 (index 0 holds c1).
pub type Coefficients = [f64; 14];

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Below this value of Ωc·r the sinc factor is replaced by its r → 0 limit.
const SMALL_DISTANCE: f64 = 1e-6;
/// Matsubara frequencies above this multiple of Ωc are summed from the moment expansion.
const MATSUBARA_SWITCH: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    Symmetric,
    Antisymmetric,
}

impl Sector {
    pub fn sign(self) -> f64 {
        match self {
            Sector::Symmetric => 1.0,
            Sector::Antisymmetric => -1.0,
        }
    }
}

/// The four system–bath correlators at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Alphas {
    /// decoherence
    pub a1: f64,
    /// anomalous diffusion
    pub a2: f64,
    /// Lamb shift
    pub a3: f64,
    /// dissipation
    pub a4: f64,
}

/// Constants of one symmetry sector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorParams {
    pub xi: f64,
    pub omega_bar_1: f64,
    pub omega_bar_2: f64,
    /// correlators at Ω̄1
    pub mode1: Alphas,
    /// correlators at Ω̄2
    pub mode2: Alphas,
}

impl SectorParams {
    /// Normal-mode map X̄ = S x for x = (Q, q, P, p).
    pub fn transform(&self, omega_vh: f64) -> Matrix4<f64> {
        transform_matrix(self.xi, self.omega_bar_2, omega_vh)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovParams {
    pub system: SystemParams,
    /// Background bath; only γ, s, Ωc and T are used, always with the free 3D density.
    pub bath: BathSpec,
    /// van Hove frequency ω0 of the effective oscillator
    pub omega_vh: f64,
    pub g: f64,
    pub omega_s: f64,
    pub omega_a: f64,
    pub symmetric: SectorParams,
    pub antisymmetric: SectorParams,
}

impl MarkovParams {
    /// Builds all constants. `g = None` uses the distance law of [`effective_coupling`].
    pub fn new(system: SystemParams, spec: &BathSpec, omega_vh: f64, g: Option<f64>) -> Result<Self> {
        system.validate()?;
        let bath = background(spec);
        bath.validate()?;
        if !(omega_vh > 0.0 && omega_vh.is_finite()) {
            return Err(Error::Validation("omega_vh > 0".into()));
        }
        let g = match g {
            Some(g) if g >= 0.0 && g.is_finite() => g,
            Some(_) => return Err(Error::Validation("g >= 0".into())),
            None => effective_coupling(system.r, &bath, omega_vh)?,
        };
        let (omega_s, omega_a) = renormalized_frequencies(&system, &bath)?;
        let (xi, o1, o2) = normal_mode_transform(omega_s, omega_vh, g)?;
        let r = system.r;
        let symmetric = SectorParams {
            xi,
            omega_bar_1: o1,
            omega_bar_2: o2,
            mode1: bath_alphas(o1, Sector::Symmetric, r, &bath)?,
            mode2: bath_alphas(o2, Sector::Symmetric, r, &bath)?,
        };
        let antisymmetric = SectorParams {
            xi: 0.0,
            omega_bar_1: omega_a,
            omega_bar_2: omega_vh,
            mode1: bath_alphas(omega_a, Sector::Antisymmetric, r, &bath)?,
            mode2: bath_alphas(omega_vh, Sector::Antisymmetric, r, &bath)?,
        };
        Ok(MarkovParams {
            system,
            bath,
            omega_vh,
            g,
            omega_s,
            omega_a,
            symmetric,
            antisymmetric,
        })
    }

    pub fn sector(&self, s: Sector) -> &SectorParams {
        match s {
            Sector::Symmetric => &self.symmetric,
            Sector::Antisymmetric => &self.antisymmetric,
        }
    }

    /// Same constants with every correlator set to zero.
    pub fn without_bath(&self) -> Self {
        let mut p = *self;
        for s in [&mut p.symmetric, &mut p.antisymmetric] {
            s.mode1 = Alphas::default();
            s.mode2 = Alphas::default();
        }
        p
    }
}

fn background(spec: &BathSpec) -> BathSpec {
    BathSpec::free(Geometry::Free3D, spec.gamma, spec.s, spec.omega_c, spec.temperature)
}

/// Ω_{S/A}² = Ω0² + ∫ J(ω)/ω (1 ± sinc ωr) dω.
pub fn renormalized_frequencies(sys: &SystemParams, spec: &BathSpec) -> Result<(f64, f64)> {
    let b = background(spec);
    let s = sys.omega0 * sys.omega0 + bath::counter_term(sys.r, 1.0, &b)?;
    let a = sys.omega0 * sys.omega0 + bath::counter_term(sys.r, -1.0, &b)?;
    Ok((s.sqrt(), a.sqrt()))
}

/// g(r) = √((2J(ω0)/π) √(2/(ω0 r + ω0/Ωc))).
pub fn effective_coupling(r: f64, spec: &BathSpec, omega_vh: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Validation("r >= 0".into()));
    }
    let j = bath::spectral_density(omega_vh, &background(spec))?;
    let reach = (2.0 / (omega_vh * r + omega_vh / spec.omega_c)).sqrt();
    Ok((2.0 * j / PI * reach).sqrt())
}

/// Mixing ξ and normal-mode frequencies Ω̄1 ≥ Ω̄2 of H = ½[(Ω_S² + g²)Q² + P² + ω0²q² + p²] − g Q p.
pub fn normal_mode_transform(omega_s: f64, omega_vh: f64, g: f64) -> Result<(f64, f64, f64)> {
    if !(g >= 0.0) {
        return Err(Error::Validation("g >= 0".into()));
    }
    if g == 0.0 {
        // decoupled: mode 1 is the system oscillator, mode 2 the effective one
        return Ok((0.0, omega_s, omega_vh));
    }
    let w2 = omega_vh * omega_vh;
    let a = omega_s * omega_s + g * g;
    let b = a - w2;
    let root = (b * b + 4.0 * g * g * w2).sqrt();
    let xi = if b > 0.0 {
        2.0 * g * omega_vh / (b + root)
    } else {
        (root - b) / (2.0 * g * omega_vh)
    };
    let o1sq = 0.5 * (a + w2 + root);
    // Ω̄1² Ω̄2² = Ω_S² ω0², which avoids the cancellation in the minus root
    let o2sq = omega_s * omega_s * w2 / o1sq;
    if !(o2sq > 0.0 && xi.is_finite()) {
        return Err(Error::Stability(format!("Ω̄2² = {o2sq:e} at g = {g}")));
    }
    Ok((xi, o1sq.sqrt(), o2sq.sqrt()))
}

fn transform_matrix(xi: f64, o2: f64, w0: f64) -> Matrix4<f64> {
    let n = (1.0 + xi * xi).sqrt();
    // rows Q̄1, Q̄2, P̄1, P̄2; columns Q, q, P, p
    Matrix4::new(
        1.0 / n,
        0.0,
        0.0,
        -xi / (w0 * n),
        0.0,
        w0 / (o2 * n),
        -xi / (o2 * n),
        0.0,
        0.0,
        xi * w0 / n,
        1.0 / n,
        0.0,
        o2 * xi / n,
        0.0,
        0.0,
        o2 / (w0 * n),
    )
}

// ∫_0^∞ w^{ν-1} e^{-b w} / (w + z) dw for z = |z| e^{i arg z}, continued across sheets.
fn m_cont(nu: f64, absz: f64, argz: f64, b: Complex64) -> Result<Complex64> {
    let mut th = argz + b.arg();
    let modbz = absz * b.norm();
    let mut k = 0;
    while th > PI {
        th -= 2.0 * PI;
        k += 1;
    }
    while th <= -PI {
        th += 2.0 * PI;
        k -= 1;
    }
    let w = if (th - PI).abs() < 1e-15 {
        Complex64::new(-modbz, 0.0)
    } else {
        Complex64::from_polar(modbz, th)
    };
    let zpow = Complex64::from_polar(absz.powf(nu - 1.0), argz * (nu - 1.0));
    // e^{bz} Γ(1-ν, bz) with bz = w e^{2πik}
    let gi = upper_incomplete_gamma_sheet_scaled(1.0 - nu, w, k)?;
    Ok(gamma_function(nu)? * zpow * gi)
}

// P∫_0^∞ w^{ν-1} e^{-b w} / (w − Ω) dw
fn p_nu(nu: f64, omega: f64, b: Complex64) -> Result<Complex64> {
    Ok(0.5 * (m_cont(nu, omega, PI, b)? + m_cont(nu, omega, -PI, b)?))
}

fn real_part(z: Complex64, scale: f64, what: &str) -> Result<f64> {
    if z.im.abs() > 1e-9 * (z.re.abs() + scale) {
        return Err(Error::Numerical(format!("{what} has imaginary residue {:e}", z.im)));
    }
    Ok(z.re)
}

struct Closed {
    amp: f64,
    a: f64,
    s: f64,
    r: f64,
    sign: f64,
}

impl Closed {
    fn new(sign: f64, r: f64, spec: &BathSpec) -> Self {
        Closed {
            amp: 8.0 * spec.gamma / PI * spec.omega_c.powf(1.0 - spec.s),
            a: 1.0 / spec.omega_c,
            s: spec.s,
            r,
            sign,
        }
    }

    fn local_limit(&self) -> bool {
        self.r / self.a < SMALL_DISTANCE
    }

    // (α2 at T = 0, α3)
    fn zero_temperature(&self, omega: f64) -> Result<(Complex64, Complex64)> {
        let (amp, s) = (self.amp, self.s);
        let b = Complex64::new(self.a, 0.0);
        let p = p_nu(s + 1.0, omega, b)?;
        let m = m_cont(s + 1.0, omega, 0.0, b)?;
        let a3 = -amp / 4.0 * (p + m);
        let a2 = amp / (4.0 * omega) * (p - m);
        if self.local_limit() {
            return Ok((a2 * (1.0 + self.sign), a3 * (1.0 + self.sign)));
        }
        let bm = Complex64::new(self.a, -self.r);
        let bp = Complex64::new(self.a, self.r);
        let sin_p = (p_nu(s, omega, bm)? - p_nu(s, omega, bp)?) / (2.0 * I);
        let sin_m = (m_cont(s, omega, 0.0, bm)? - m_cont(s, omega, 0.0, bp)?) / (2.0 * I);
        let x3 = -amp / (4.0 * self.r) * (sin_p + sin_m);
        let x2 = amp / (4.0 * omega * self.r) * (sin_p - sin_m);
        Ok((a2 + self.sign * x2, a3 + self.sign * x3))
    }

    // ∫ J G ω/(ω² + ν²) dω
    fn matsubara_weight(&self, nu: f64) -> Result<f64> {
        let (amp, s) = (self.amp, self.s);
        let b = Complex64::new(self.a, 0.0);
        let local = amp * m_cont(s + 1.0, nu, PI / 2.0, b)?.re;
        if self.local_limit() {
            return Ok(local * (1.0 + self.sign));
        }
        let msin = |argz: f64| -> Result<Complex64> {
            Ok((m_cont(s + 1.0, nu, argz, Complex64::new(self.a, -self.r))?
                - m_cont(s + 1.0, nu, argz, Complex64::new(self.a, self.r))?)
                / (2.0 * I))
        };
        let cross = amp / self.r / (2.0 * I * nu) * (msin(-PI / 2.0)? - msin(PI / 2.0)?);
        Ok(local + self.sign * cross.re)
    }

    // ∫ J G ω^{2k+1} dω
    fn odd_moment(&self, k: usize) -> Result<f64> {
        let p = self.s + 2.0 * k as f64 + 1.0;
        let local = self.amp * gamma_function(p + 1.0)? * self.a.powf(-(p + 1.0));
        if self.local_limit() {
            return Ok(local * (1.0 + self.sign));
        }
        let w = Complex64::new(self.a, -self.r).powf(-p);
        Ok(local + self.sign * self.amp / self.r * gamma_function(p)? * w.im)
    }
}

/// Hurwitz ζ(s, a) = Σ_{n≥0} (n + a)^{-s} for large a by Euler–Maclaurin.
fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    const B2J: [f64; 5] = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0];
    let mut head = 0.0;
    let mut a = a;
    while a < 60.0 {
        head += a.powf(-s);
        a += 1.0;
    }
    let mut sum = a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s);
    // (s)_{2j-1} a^{-s-2j+1} B_{2j}/(2j)!
    let mut rising = s;
    let mut fact = 2.0;
    let mut pow = a.powf(-s - 1.0);
    for (j, b) in B2J.iter().enumerate() {
        let term = b / fact * rising * pow;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        let m = 2.0 * j as f64 + 2.0;
        rising *= (s + m - 1.0) * (s + m);
        fact *= (m + 1.0) * (m + 2.0);
        pow /= a * a;
    }
    head + sum
}

// Σ_{n≥1} 2T/(Ω² + ν_n²) ∫ J G ω/(ω² + ν_n²) dω
fn matsubara_sum(c: &Closed, omega: f64, t: f64, omega_c: f64) -> Result<f64> {
    let step = 2.0 * PI * t;
    let n_switch = ((MATSUBARA_SWITCH * omega_c / step).ceil() as usize).max(1);
    if n_switch > 5_000_000 {
        return Err(Error::Convergence(format!(
            "Matsubara sum needs {n_switch} terms at T = {t}"
        )));
    }
    let mut direct = 0.0;
    for n in 1..n_switch {
        let nu = step * n as f64;
        direct += 2.0 * t / (omega * omega + nu * nu) * c.matsubara_weight(nu)?;
    }
    // tail: expand in 1/ν² and sum the powers with Hurwitz zeta
    let mut moments = Vec::new();
    let mut tail = 0.0;
    let mut last = f64::INFINITY;
    let mut converged = false;
    for q in 0..14usize {
        moments.push(c.odd_moment(q)?);
        let coef: f64 = (0..=q)
            .map(|k| omega.powi(2 * (q - k) as i32) * moments[k])
            .sum();
        let p = 2.0 * q as f64 + 4.0;
        let term = if q % 2 == 0 { 1.0 } else { -1.0 } * 2.0 * t * coef * step.powf(-p)
            * hurwitz_zeta(p, n_switch as f64);
        if term.abs() > last {
            break;
        }
        tail += term;
        last = term.abs();
        if term.abs() <= 1e-15 * (direct + tail).abs() {
            converged = true;
            break;
        }
    }
    if !converged && last > 1e-12 * (direct + tail).abs() {
        return Err(Error::Convergence(format!(
            "Matsubara tail bound {last:e} not met at T = {t}"
        )));
    }
    Ok(direct + tail)
}

/// α1..α4 at frequency Ω for one sector. The local and distance-dependent parts use the
/// free 3D density with the factor (1 ± sinc Ωr).
pub fn bath_alphas(omega: f64, sector: Sector, r: f64, spec: &BathSpec) -> Result<Alphas> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::Domain(format!("correlators at Ω = {omega}")));
    }
    let spec = background(spec);
    let sign = sector.sign();
    let geo = 1.0 + sign * bath::sinc(omega * r);
    let j = bath::spectral_density(omega, &spec)?;
    let coth = bath::coth_weight(omega, spec.temperature);
    let a1 = PI / 4.0 * j * geo * coth;
    let a4 = PI * j * geo / (4.0 * omega);
    let c = Closed::new(sign, r, &spec);
    let (a2c, a3c) = c.zero_temperature(omega)?;
    let scale = c.amp * spec.omega_c.powf(spec.s);
    let a3 = real_part(a3c, scale, "α3")?;
    let t = spec.temperature;
    let a2 = if t == 0.0 {
        real_part(a2c, scale, "α2")?
    } else {
        let counter = bath::counter_term(r, sign, &spec)?;
        -coth * a3 / omega - t / (omega * omega) * counter - matsubara_sum(&c, omega, t, spec.omega_c)?
    };
    Ok(Alphas { a1, a2, a3, a4 })
}

/// Right-hand side of the 14 coefficient equations of one sector.
pub fn coefficient_rhs(p: &SectorParams, c: &Coefficients, d: &mut Coefficients) {
    let x = p.xi;
    let n = 1.0 / (1.0 + x * x);
    let o1s = p.omega_bar_1 * p.omega_bar_1;
    let o2 = p.omega_bar_2;
    let o2s = o2 * o2;
    let Alphas { a1: a11, a2: a21, a3: a31, a4: a41 } = p.mode1;
    let Alphas { a1: a12, a2: a22, a3: a32, a4: a42 } = p.mode2;
    let [c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11, c12, c13, c14] = *c;
    let shift1 = o1s + 2.0 * n * a31;
    let lamb2 = 1.0 + 2.0 * x * x * n * a32 / o2s;
    d[0] = c2;
    d[1] = -2.0 * shift1 * c1 + 2.0 * c3
        - n * (2.0 * a41 * c2 - 2.0 * x * o2 * a42 * c11 + 2.0 * x / o2 * a32 * c12 + a21);
    d[2] = -shift1 * c2 - n * (4.0 * a41 * c3 - 2.0 * x * o2 * a42 * c13 + 2.0 * x / o2 * a32 * c14 - a11);
    d[3] = c5;
    d[4] = -shift1 * c4 - n * (2.0 * a41 * c5 - 2.0 * x * o2 * a42 * c9 + 2.0 * x / o2 * a32 * c10);
    d[5] = -4.0 * x * x * n * a42 * c6
        + lamb2 * c7
        + n * (2.0 * x / o2 * a31 * c11 + 2.0 * x / o2 * a41 * c13 + x * x / o2s * a12);
    d[6] = -2.0 * o2s * c6 - 2.0 * x * x * n * a42 * c7
        + 2.0 * lamb2 * c8
        + n * (2.0 * x / o2 * a31 * c12 + 2.0 * x / o2 * a41 * c14 + x * x * a22);
    d[7] = -o2s * c7;
    d[8] = c10
        + n * (2.0 * x / o2 * a31 * c4 + 2.0 * x / o2 * a41 * c5 - 2.0 * x * x * a42 * c9
            + 2.0 * x * x / o2s * a32 * c10);
    d[9] = -o2s * c9;
    d[10] = n * (4.0 * x / o2 * a31 * c1 + 2.0 * x / o2 * a41 * c2) - 2.0 * x * x * n * a42 * c11
        + lamb2 * c12
        + c13
        + x * n / o2 * a21;
    d[11] = -o2s * c11 + c14;
    d[12] = n * (2.0 * x / o2 * a31 * c2 + 4.0 * x / o2 * a41 * c3 + 4.0 * x * o2 * a42 * c6)
        - 2.0 * x * n / o2 * a32 * c7
        - shift1 * c11
        - 2.0 * n * (a41 + x * x * a42) * c13
        + lamb2 * c14
        - x * n / o2 * (a11 + a12);
    d[13] = n * (2.0 * x * o2 * a42 * c7 - 4.0 * x / o2 * a32 * c8) - shift1 * c12 - o2s * c13
        - n * (2.0 * a41 * c14 + x * o2 * a22);
}

/// Anticommutator matrix of (Q̄1, Q̄2, P̄1, P̄2) from the coefficients.
pub fn normal_mode_covariance(c: &Coefficients) -> Matrix4<f64> {
    let v = |i: usize, j: usize| -> f64 {
        // ⟨{·,·}⟩ including the displacement products
        let (q1, p1, q2, p2) = (c[3], c[4], c[8], c[9]);
        match (i, j) {
            (0, 0) => 2.0 * (2.0 * c[0] + q1 * q1),
            (0, 1) => 2.0 * (c[10] + q1 * q2),
            (0, 2) => 2.0 * (c[1] + q1 * p1),
            (0, 3) => 2.0 * (c[11] + q1 * p2),
            (1, 1) => 2.0 * (2.0 * c[5] + q2 * q2),
            (1, 2) => 2.0 * (c[12] + p1 * q2),
            (1, 3) => 2.0 * (c[6] + q2 * p2),
            (2, 2) => 2.0 * (2.0 * c[2] + p1 * p1),
            (2, 3) => 2.0 * (c[13] + p1 * p2),
            (3, 3) => 2.0 * (2.0 * c[7] + p2 * p2),
            _ => unreachable!(),
        }
    };
    Matrix4::from_fn(|i, j| if i <= j { v(i, j) } else { v(j, i) })
}

/// Inverse of [`normal_mode_covariance`] for centered states.
pub fn coefficients_from_covariance(v: &Matrix4<f64>) -> Coefficients {
    let mut c = [0.0; 14];
    c[0] = v[(0, 0)] / 4.0;
    c[1] = v[(0, 2)] / 2.0;
    c[2] = v[(2, 2)] / 4.0;
    c[5] = v[(1, 1)] / 4.0;
    c[6] = v[(1, 3)] / 2.0;
    c[7] = v[(3, 3)] / 4.0;
    c[10] = v[(0, 1)] / 2.0;
    c[11] = v[(0, 3)] / 2.0;
    c[12] = v[(1, 2)] / 2.0;
    c[13] = v[(2, 3)] / 2.0;
    c
}

/// Initial coefficients: squeezed system oscillators and the effective oscillator in its ground state.
pub fn initial_coefficients(params: &MarkovParams, sector: Sector) -> Coefficients {
    let sys = &params.system;
    let w0 = params.omega_vh;
    let k = sys.kappa * sys.omega0;
    let x0 = Matrix4::from_diagonal(&Vector4::new(1.0 / k, 1.0 / w0, k, w0));
    let s = params.sector(sector).transform(w0);
    coefficients_from_covariance(&(s * x0 * s.transpose()))
}

/// Sampled or closed-form coefficients of both sectors.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovCoefficients {
    pub times: Vec<f64>,
    pub symmetric: Vec<Coefficients>,
    pub antisymmetric: Vec<Coefficients>,
    /// Mode constants when the coefficients come from the approximate solution.
    pub modes: Option<(ApproxModes, ApproxModes)>,
}

fn sample_times(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    if !(t_max > 0.0 && dt > 0.0 && t_max.is_finite()) {
        return Err(Error::Validation("t_max > 0 and dt > 0".into()));
    }
    let n = (t_max / dt).round().max(1.0) as usize;
    Ok((0..=n).map(|i| t_max * i as f64 / n as f64).collect())
}

/// Adaptive integration of the full linear system in both sectors.
pub fn integrate_coefficients(params: &MarkovParams, t_max: f64, dt: f64) -> Result<MarkovCoefficients> {
    let times = sample_times(t_max, dt)?;
    let dopri = Dopri {
        rtol: 1e-10,
        atol: 1e-13,
        h_init: 1e-3,
        ..Default::default()
    };
    let run = |sector: Sector| -> Result<Vec<Coefficients>> {
        let p = *params.sector(sector);
        let y0 = initial_coefficients(params, sector);
        let out = dopri.solve(
            |_, y, dy| {
                let c: &Coefficients = y.try_into().expect("14 coefficients");
                let d: &mut Coefficients = dy.try_into().expect("14 coefficients");
                coefficient_rhs(&p, c, d);
            },
            0.0,
            &y0,
            &times,
        )?;
        Ok(out.into_iter().map(|v| v.try_into().expect("14 coefficients")).collect())
    };
    let symmetric = run(Sector::Symmetric)?;
    let antisymmetric = run(Sector::Antisymmetric)?;
    Ok(MarkovCoefficients {
        times,
        symmetric,
        antisymmetric,
        modes: None,
    })
}

/// Closed-form solution of one sector after dropping the ξ-couplings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxModes {
    pub lambda: [Complex64; 3],
    pub a: [Complex64; 3],
    pub b: [Complex64; 3],
    pub kappa: [Complex64; 4],
    pub c: [Complex64; 4],
    c1_inf: f64,
    c3_inf: f64,
    shift: f64,
    a4: f64,
    omega2: f64,
    shapes: [[Complex64; 3]; 4],
}

impl ApproxModes {
    pub fn new(p: &SectorParams, init: &Coefficients) -> Result<Self> {
        let Alphas { a1, a2, a3, a4 } = p.mode1;
        if !(a4 > 0.0) {
            return Err(Error::SingularMatrix("dissipation α4(Ω̄1) vanishes".into()));
        }
        let o2 = p.omega_bar_2;
        let o2s = o2 * o2;
        let shift = p.omega_bar_1 * p.omega_bar_1 + 2.0 * a3;
        let c1_inf = (a1 - 2.0 * a2 * a4) / (4.0 * a4 * shift);
        let c3_inf = a1 / (4.0 * a4);

        let w = Complex64::new(shift - a4 * a4, 0.0).sqrt();
        let lambda = [
            Complex64::new(-2.0 * a4, 0.0),
            -2.0 * (a4 - I * w),
            -2.0 * (a4 + I * w),
        ];
        let c3_shape = |l: Complex64| l * l / 2.0 + shift + a4 * l;
        let m = Matrix3::from_fn(|row, i| {
            let l = lambda[i];
            match row {
                0 => Complex64::new(1.0, 0.0),
                1 => l,
                _ => c3_shape(l),
            }
        });
        let rhs = Vector3::new(
            Complex64::new(init[0] - c1_inf, 0.0),
            Complex64::new(init[1], 0.0),
            Complex64::new(init[2] - c3_inf, 0.0),
        );
        let sol = m
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::SingularMatrix("degenerate relaxation modes λ".into()))?;
        let a = [sol[0], sol[1], sol[2]];

        let b3 = 0.5 * (init[5] + init[7] / o2s);
        let bsum = 0.5 * (init[5] - init[7] / o2s);
        let bdiff = init[6] / (2.0 * o2);
        let b = [
            Complex64::new(0.5 * bsum, -0.5 * bdiff),
            Complex64::new(0.5 * bsum, 0.5 * bdiff),
            Complex64::new(b3, 0.0),
        ];

        let inner = Complex64::new(shift - a4 * a4, 0.0).sqrt() * (2.0 * o2);
        let base = Complex64::new(2.0 * a3 - a4 * a4 + p.omega_bar_1 * p.omega_bar_1 + o2s, 0.0);
        let kappa = [
            -a4 + I * (base + inner).sqrt(),
            -a4 - I * (base + inner).sqrt(),
            -a4 + I * (base - inner).sqrt(),
            -a4 - I * (base - inner).sqrt(),
        ];
        let mut shapes = [[Complex64::new(0.0, 0.0); 3]; 4];
        for (i, &k) in kappa.iter().enumerate() {
            let den = shift - o2s + 2.0 * a4 * k + k * k;
            if den.norm() < 1e-300 {
                return Err(Error::SingularMatrix("degenerate coupling mode κ".into()));
            }
            let f = 2.0 * o2s * (a4 + k) / den;
            shapes[i] = [-f, k + f, o2s * (shift - o2s - k * k) / den];
        }
        let m4 = Matrix4::from_fn(|row, i| {
            if row == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                shapes[i][row - 1]
            }
        });
        let rhs4 = Vector4::new(init[10], init[11], init[12], init[13]).map(|v| Complex64::new(v, 0.0));
        let sol4 = m4
            .lu()
            .solve(&rhs4)
            .ok_or_else(|| Error::SingularMatrix("degenerate coupling modes κ".into()))?;
        Ok(ApproxModes {
            lambda,
            a,
            b,
            kappa,
            c: [sol4[0], sol4[1], sol4[2], sol4[3]],
            c1_inf,
            c3_inf,
            shift,
            a4,
            omega2: o2,
            shapes,
        })
    }

    pub fn eval(&self, t: f64) -> Coefficients {
        let mut c = [0.0; 14];
        let (mut c1, mut c2, mut c3) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for i in 0..3 {
            let l = self.lambda[i];
            let e = self.a[i] * (l * t).exp();
            c1 += e;
            c2 += e * l;
            c3 += e * (l * l / 2.0 + self.shift + self.a4 * l);
        }
        c[0] = c1.re + self.c1_inf;
        c[1] = c2.re;
        c[2] = c3.re + self.c3_inf;
        let o2 = self.omega2;
        let ep = Complex64::new(0.0, 2.0 * o2 * t).exp();
        let (b1, b2, b3) = (self.b[0] * ep, self.b[1] * ep.conj(), self.b[2]);
        c[5] = (b1 + b2 + b3).re;
        c[6] = (2.0 * I * o2 * (b1 - b2)).re;
        c[7] = (-o2 * o2 * (b1 + b2 - b3)).re;
        for i in 0..4 {
            let e = self.c[i] * (self.kappa[i] * t).exp();
            c[10] += e.re;
            c[11] += (e * self.shapes[i][0]).re;
            c[12] += (e * self.shapes[i][1]).re;
            c[13] += (e * self.shapes[i][2]).re;
        }
        c
    }
}

/// Closed-form coefficients sampled on the same grid as [`integrate_coefficients`].
pub fn approximate_coefficients(params: &MarkovParams, t_max: f64, dt: f64) -> Result<MarkovCoefficients> {
    let times = sample_times(t_max, dt)?;
    let ms = ApproxModes::new(&params.symmetric, &initial_coefficients(params, Sector::Symmetric))?;
    let ma = ApproxModes::new(&params.antisymmetric, &initial_coefficients(params, Sector::Antisymmetric))?;
    Ok(MarkovCoefficients {
        symmetric: times.iter().map(|&t| ms.eval(t)).collect(),
        antisymmetric: times.iter().map(|&t| ma.eval(t)).collect(),
        times,
        modes: Some((ms, ma)),
    })
}

// (⟨{Q,Q}⟩, ⟨{Q,P}⟩, ⟨{P,P}⟩) of the sector coordinate, tracing out the effective oscillator
fn sector_moments(v: &Matrix4<f64>, p: &SectorParams, w0: f64) -> Result<[f64; 4]> {
    let s = p.transform(w0);
    let si = s
        .try_inverse()
        .ok_or_else(|| Error::SingularMatrix("normal-mode transform".into()))?;
    let x = si * v * si.transpose();
    Ok([x[(0, 0)], x[(0, 2)], x[(2, 0)], x[(2, 2)]])
}

/// System covariance (Q1, Q2, P1, P2) from one sample of both sectors.
pub fn covariance_at(params: &MarkovParams, sym: &Coefficients, anti: &Coefficients) -> Result<CovarianceMatrix> {
    let s = sector_moments(&normal_mode_covariance(sym), &params.symmetric, params.omega_vh)?;
    let a = sector_moments(&normal_mode_covariance(anti), &params.antisymmetric, params.omega_vh)?;
    Ok(CovarianceMatrix(assemble_sectors(s, a)).symmetrized())
}

/// Covariances for every sample. Fails if a state drops below the uncertainty bound by more than `tol`.
pub fn covariance_from_coefficients(
    coeffs: &MarkovCoefficients,
    params: &MarkovParams,
    tol: f64,
) -> Result<Vec<CovarianceMatrix>> {
    let mut out = Vec::with_capacity(coeffs.times.len());
    for ((t, s), a) in coeffs.times.iter().zip(&coeffs.symmetric).zip(&coeffs.antisymmetric) {
        let cov = covariance_at(params, s, a)?;
        let min = gaussian::min_symplectic_eigenvalue(&cov)?;
        if min < 1.0 - tol {
            return Err(Error::Physicality { t: *t, min_eig: min });
        }
        out.push(cov);
    }
    Ok(out)
}

/// E_N(t) of the effective model, either from the full system or the approximate solution.
pub fn evolve(params: &MarkovParams, t_max: f64, dt: f64, approximate: bool) -> Result<EvolutionResult> {
    let coeffs = if approximate {
        approximate_coefficients(params, t_max, dt)?
    } else {
        integrate_coefficients(params, t_max, dt)?
    };
    let covariances = covariance_from_coefficients(&coeffs, params, 1e-3)?;
    let mut log_negativity = Vec::with_capacity(covariances.len());
    let mut min_symplectic = f64::INFINITY;
    for c in &covariances {
        log_negativity.push(gaussian::log_negativity(c)?);
        min_symplectic = min_symplectic.min(gaussian::min_symplectic_eigenvalue(c)?);
    }
    Ok(EvolutionResult {
        times: coeffs.times,
        covariances,
        log_negativity,
        min_symplectic,
    })
}

/// E_N in the thermal state of the coupled system and effective oscillator at the bath temperature.
pub fn asymptotic_negativity(params: &MarkovParams) -> Result<f64> {
    let t = params.bath.temperature;
    let thermal = |p: &SectorParams| -> Result<[f64; 4]> {
        let n1 = bath::coth_weight(p.omega_bar_1, t);
        let n2 = bath::coth_weight(p.omega_bar_2, t);
        let v = Matrix4::from_diagonal(&Vector4::new(
            n1 / p.omega_bar_1,
            n2 / p.omega_bar_2,
            n1 * p.omega_bar_1,
            n2 * p.omega_bar_2,
        ));
        sector_moments(&v, p, params.omega_vh)
    };
    let cov = CovarianceMatrix(assemble_sectors(thermal(&params.symmetric)?, thermal(&params.antisymmetric)?));
    gaussian::log_negativity(&cov.symmetrized())
}

// ∫ J G coth K_ε(ω) dω with the exact Laplace kernels of the defining time integrals
fn regularized(omega: f64, sign: f64, r: f64, spec: &BathSpec, eps: f64) -> Result<(f64, f64)> {
    let q = Adaptive::new(1e-15, 1e-12);
    let geo = |w: f64| 1.0 + sign * bath::sinc(w * r);
    let j = |w: f64| bath::spectral_density(w, spec).unwrap_or(0.0);
    let lor = |x: f64| x / (x * x + eps * eps);
    let top = spec.omega_c * 60.0;
    let mut pts = vec![0.0];
    for k in [-200.0, -50.0, -10.0, -3.0, -1.0, 0.0, 1.0, 3.0, 10.0, 50.0, 200.0] {
        let p = omega + k * eps;
        if p > 0.0 {
            pts.push(p);
        }
    }
    pts.push(top);
    pts.sort_by(|a, b| a.total_cmp(b));
    // ∫ cos ωt sin Ωt e^{-εt} = ½[L(Ω+ω) + L(Ω−ω)]
    let a2 = q.integrate_points(
        |w| {
            let coth = bath::coth_weight(w, spec.temperature);
            0.5 * j(w) * geo(w) * coth * 0.5 * (lor(omega + w) + lor(omega - w))
        },
        &pts,
    )?;
    // ∫ sin ωt cos Ωt e^{-εt} = ½[L(ω+Ω) + L(ω−Ω)]
    let a3 = q.integrate_points(|w| 0.5 * j(w) * geo(w) * 0.5 * (lor(w + omega) + lor(w - omega)), &pts)?;
    Ok((-a2 / omega, -a3))
}

/// Reference (α2, α3) from the defining time integrals, damped by e^{-εt} and
/// Richardson-extrapolated over ε ∈ {0.04, 0.02, 0.01}. Slow; meant for validation.
pub fn regularized_alphas(omega: f64, sector: Sector, r: f64, spec: &BathSpec) -> Result<(f64, f64)> {
    let bath = background(spec);
    let mut v = [(0.0, 0.0); 3];
    for (slot, eps) in v.iter_mut().zip([0.04, 0.02, 0.01]) {
        *slot = regularized(omega, sector.sign(), r, &bath, eps)?;
    }
    // removes the O(ε) and O(ε²) terms
    let rich = |f: [f64; 3]| (8.0 * f[2] - 6.0 * f[1] + f[0]) / 3.0;
    Ok((rich([v[0].0, v[1].0, v[2].0]), rich([v[0].1, v[1].1, v[2].1])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{P1, P2, Q1, Q2};

    fn fig8(kappa: f64, t: f64) -> (SystemParams, BathSpec) {
        (
            SystemParams { omega0: 1.0, r: 2.0, kappa },
            BathSpec::free(Geometry::Free3D, 0.05, 3.0, 3.0, t),
        )
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn closed_forms_match_defining_integrals() {
        for (s, wc, t, omega, r) in [
            (3.0, 3.0, 0.0, 0.9, 2.0),
            (3.0, 3.0, 0.01, 1.3, 2.0),
            (1.0, 10.0, 0.1, 0.7, 0.5),
        ] {
            let spec = BathSpec::free(Geometry::Free3D, 0.05, s, wc, t);
            for sector in [Sector::Symmetric, Sector::Antisymmetric] {
                let al = bath_alphas(omega, sector, r, &spec).unwrap();
                let (a2, a3) = regularized_alphas(omega, sector, r, &spec).unwrap();
                assert!(close(al.a2, a2, 1e-4), "α2 s={s} T={t}: {} vs {a2}", al.a2);
                assert!(close(al.a3, a3, 1e-4), "α3 s={s} T={t}: {} vs {a3}", al.a3);
            }
        }
    }

    #[test]
    fn hurwitz_zeta_values() {
        // ζ(4, 1) = π⁴/90
        assert!(close(hurwitz_zeta(4.0, 1.0), PI.powi(4) / 90.0, 1e-14));
        let direct: f64 = (0..200_000).map(|n| (n as f64 + 75.5).powf(-6.0)).sum();
        assert!(close(hurwitz_zeta(6.0, 75.5), direct, 1e-12));
    }

    #[test]
    fn trivial_correlator_relations() {
        let spec = BathSpec::free(Geometry::Free3D, 0.05, 3.0, 3.0, 0.0);
        let w = 1.1;
        let s = bath_alphas(w, Sector::Symmetric, 2.0, &spec).unwrap();
        let a = bath_alphas(w, Sector::Antisymmetric, 2.0, &spec).unwrap();
        let j = bath::spectral_density(w, &spec).unwrap();
        assert!(close(s.a4 - a.a4, PI * j / (2.0 * w) * bath::sinc(2.0 * w), 1e-12));
        let far = bath_alphas(w, Sector::Symmetric, 1e6, &spec).unwrap();
        assert!(close(far.a1, PI / 4.0 * j, 1e-5));
        // r → 0: antisymmetric sector decouples
        let zero = bath_alphas(w, Sector::Antisymmetric, 0.0, &spec).unwrap();
        assert!(zero.a1.abs() < 1e-15 && zero.a2.abs() < 1e-15 && zero.a3.abs() < 1e-15);
        let tiny = bath_alphas(w, Sector::Symmetric, 1e-9, &spec).unwrap();
        let small = bath_alphas(w, Sector::Symmetric, 1e-3, &spec).unwrap();
        assert!(close(tiny.a3, small.a3, 1e-5));
    }

    #[test]
    fn finite_temperature_tends_to_zero_temperature() {
        let cold = BathSpec::free(Geometry::Free3D, 0.05, 3.0, 3.0, 0.0);
        let warm = BathSpec::free(Geometry::Free3D, 0.05, 3.0, 3.0, 0.004);
        let a = bath_alphas(1.2, Sector::Symmetric, 2.0, &cold).unwrap();
        let b = bath_alphas(1.2, Sector::Symmetric, 2.0, &warm).unwrap();
        assert!(close(b.a2, a.a2, 1e-6), "{} vs {}", b.a2, a.a2);
    }

    #[test]
    fn frequencies_and_coupling() {
        let spec = BathSpec::free(Geometry::Free3D, 0.05, 3.0, 3.0, 0.0);
        let sys = SystemParams { omega0: 1.0, r: 2.0, kappa: 1.0 };
        let (ws, wa) = renormalized_frequencies(&sys, &spec).unwrap();
        let q = Adaptive::new(1e-14, 1e-12);
        for (w, sign) in [(ws, 1.0), (wa, -1.0)] {
            let direct = q
                .integrate_points(
                    |x| {
                        if x == 0.0 {
                            return 0.0;
                        }
                        bath::spectral_density(x, &spec).unwrap() / x * (1.0 + sign * bath::sinc(2.0 * x))
                    },
                    &[0.0, 3.0, 10.0, 30.0, 150.0],
                )
                .unwrap();
            assert!(close(w * w - 1.0, direct, 1e-8));
        }
        let base = 8.0 * 0.05 * 3.0 * 2.0 / PI;
        let far = renormalized_frequencies(&SystemParams { r: 1e9, ..sys }, &spec).unwrap();
        assert!(close(far.0 * far.0, 1.0 + base, 1e-6) && close(far.1 * far.1, 1.0 + base, 1e-6));
        let near = renormalized_frequencies(&SystemParams { r: 0.0, ..sys }, &spec).unwrap();
        assert!(close(near.0 * near.0 - 1.0, 2.0 * base, 1e-12) && close(near.1, 1.0, 1e-12));

        let g = effective_coupling(2.0, &spec, 1.0).unwrap();
        let j = 8.0 * 0.05 / PI * (1.0f64 / 3.0).powi(2) * (-1.0f64 / 3.0).exp();
        assert!(close(g, (2.0 * j / PI * (2.0f64 / (2.0 + 1.0 / 3.0)).sqrt()).sqrt(), 1e-14));
        let mut prev = f64::INFINITY;
        for r in [0.0, 0.5, 1.0, 5.0, 50.0] {
            let g = effective_coupling(r, &spec, 1.0).unwrap();
            assert!(g < prev);
            prev = g;
        }
    }

    #[test]
    fn normal_modes() {
        let (xi, o1, o2) = normal_mode_transform(1.3, 1.0, 0.0).unwrap();
        assert_eq!((xi, o1, o2), (0.0, 1.3, 1.0));
        let g = 1e-3;
        let (xi, o1, o2) = normal_mode_transform(1.0, 1.0, g).unwrap();
        assert!((xi - (1.0 - g / 2.0)).abs() < 1e-6);
        assert!((o1 - (1.0 + g / 2.0)).abs() < 1e-6 && (o2 - (1.0 - g / 2.0)).abs() < 1e-6);

        let sig = gaussian::symplectic_form();
        for (ws, w0, g) in [(1.35, 1.0, 0.3), (0.8, 1.0, 0.5), (1.0, 2.0, 1.5)] {
            let (xi, o1, o2) = normal_mode_transform(ws, w0, g).unwrap();
            assert!(o1 >= o2 && o2 > 0.0);
            let s = transform_matrix(xi, o2, w0);
            assert!((s * sig * s.transpose() - sig).abs().max() < 1e-12);
            // S diagonalizes the Hamiltonian with the g² counter-term
            let mut h = Matrix4::from_diagonal(&Vector4::new(ws * ws + g * g, w0 * w0, 1.0, 1.0));
            h[(0, 3)] = -g;
            h[(3, 0)] = -g;
            let si = s.try_inverse().unwrap();
            let d = si.transpose() * h * si;
            let want = Matrix4::from_diagonal(&Vector4::new(o1 * o1, o2 * o2, 1.0, 1.0));
            assert!((d - want).abs().max() < 1e-12);
        }
    }

    // the moment equation dV/dt = AV + VAᵀ + 2Σ D(σσ) + 2Σ E(σV) of the master equation
    fn moment_rhs(p: &SectorParams, c: &Coefficients) -> Coefficients {
        let (x, o1, o2) = (p.xi, p.omega_bar_1, p.omega_bar_2);
        let n = 1.0 / (1.0 + x * x);
        let (m1, m2) = (p.mode1, p.mode2);
        let mut d = Matrix4::<f64>::zeros();
        let mut e = Matrix4::<f64>::zeros();
        for (tab, f1, f2, g1, g2) in [(&mut d, m1.a1, m1.a2, m2.a1, m2.a2), (&mut e, m1.a3, m1.a4, m2.a3, m2.a4)] {
            tab[(Q1, Q1)] += n * f1;
            tab[(P2, Q1)] += n * f1 * x / o2;
            tab[(Q1, P1)] += n * f2;
            tab[(P2, P1)] += n * f2 * x / o2;
            tab[(P2, P2)] += n * x * x * g1 / (o2 * o2);
            tab[(Q1, P2)] += n * x * g1 / o2;
            tab[(P2, Q2)] -= n * x * x * g2;
            tab[(Q1, Q2)] -= n * x * o2 * g2;
        }
        let sig = gaussian::symplectic_form();
        let a = sig * Matrix4::from_diagonal(&Vector4::new(o1 * o1, o2 * o2, 1.0, 1.0));
        let v = normal_mode_covariance(c);
        let mut vd = a * v + v * a.transpose();
        for i in 0..4 {
            for j in 0..4 {
                let mut s = 0.0;
                for k in 0..4 {
                    for l in 0..4 {
                        s += 2.0 * d[(k, l)] * (sig[(j, k)] * sig[(i, l)] + sig[(i, k)] * sig[(j, l)])
                            + 2.0 * e[(k, l)] * (sig[(j, k)] * v[(i, l)] + sig[(i, k)] * v[(j, l)]);
                    }
                }
                vd[(i, j)] += s;
            }
        }
        coefficients_from_covariance(&vd)
    }

    #[test]
    fn coefficient_system_matches_moment_equation() {
        let p = SectorParams {
            xi: 0.37,
            omega_bar_1: 1.3,
            omega_bar_2: 0.9,
            mode1: Alphas { a1: 0.011, a2: -0.007, a3: 0.013, a4: 0.021 },
            mode2: Alphas { a1: 0.017, a2: 0.005, a3: -0.009, a4: 0.015 },
        };
        let mut c = [0.0; 14];
        for (i, v) in c.iter_mut().enumerate() {
            if ![3, 4, 8, 9].contains(&i) {
                *v = 0.1 + 0.07 * i as f64 - 0.013 * (i * i) as f64;
            }
        }
        let mut d = [0.0; 14];
        coefficient_rhs(&p, &c, &mut d);
        let want = moment_rhs(&p, &c);
        for i in 0..14 {
            assert!((d[i] - want[i]).abs() < 1e-13, "c{}: {} vs {}", i + 1, d[i], want[i]);
        }
    }

    #[test]
    fn printed_initial_conditions() {
        let (sys, spec) = fig8(5.0, 0.01);
        let base = MarkovParams::new(sys, &spec, 1.0, None).unwrap();
        // resonant effective oscillator
        let w0 = base.omega_s;
        let p = MarkovParams::new(sys, &spec, w0, None).unwrap();
        let (xi, o2, k) = (p.symmetric.xi, p.symmetric.omega_bar_2, 5.0);
        let c = initial_coefficients(&p, Sector::Symmetric);
        let n2 = 1.0 + xi * xi;
        let want = [
            (0, (w0 + xi * xi * k) / (4.0 * k * w0 * n2)),
            (2, (k + xi * xi * w0) / (4.0 * n2)),
            (5, (w0 + xi * xi * k) / (4.0 * o2 * o2 * n2)),
            (7, o2 * o2 * (k + xi * xi * w0) / (4.0 * k * w0 * n2)),
            (11, xi * o2 * (w0 - k) / (2.0 * k * w0 * n2)),
            (12, xi * (w0 - k) / (2.0 * o2 * n2)),
        ];
        for (i, v) in want {
            assert!((c[i] - v).abs() < 1e-14, "c{}", i + 1);
        }
        for i in [1, 3, 4, 6, 8, 9, 10, 13] {
            assert!(c[i].abs() < 1e-15);
        }
    }

    #[test]
    fn free_rotation_keeps_spectrum() {
        let (sys, spec) = fig8(3.0, 0.01);
        let p = MarkovParams::new(sys, &spec, 1.0, None).unwrap().without_bath();
        let coeffs = integrate_coefficients(&p, 20.0, 0.5).unwrap();
        let spectrum = |s: &Coefficients| {
            let v = normal_mode_covariance(s);
            let sig = gaussian::symplectic_form();
            let mut ev: Vec<f64> = (sig * v).complex_eigenvalues().iter().map(|z| z.im.abs()).collect();
            ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
            ev
        };
        let first = spectrum(&coeffs.symmetric[0]);
        for s in &coeffs.symmetric {
            let ev = spectrum(s);
            for (a, b) in ev.iter().zip(&first) {
                assert!((a - b).abs() < 1e-7, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn single_damped_oscillator_relaxes_to_printed_asymptote() {
        let (sys, spec) = fig8(1.0, 0.01);
        let mut p = MarkovParams::new(sys, &spec, 1.0, Some(0.0)).unwrap();
        // stronger damping so that t = 400 is deep in the stationary regime
        p.symmetric.mode1.a4 *= 4.0;
        p.symmetric.mode1.a1 *= 4.0;
        let coeffs = integrate_coefficients(&p, 400.0, 400.0).unwrap();
        let al = p.symmetric.mode1;
        let shift = p.symmetric.omega_bar_1.powi(2) + 2.0 * al.a3;
        let c1 = (al.a1 - 2.0 * al.a2 * al.a4) / (4.0 * al.a4 * shift);
        let last = coeffs.symmetric.last().unwrap();
        assert!(close(last[0], c1, 1e-5), "{} vs {c1}", last[0]);
        assert!(close(last[2], al.a1 / (4.0 * al.a4), 1e-5));
    }

    #[test]
    fn approximate_solution_starts_at_initial_values() {
        let (sys, spec) = fig8(5.0, 0.01);
        let p = MarkovParams::new(sys, &spec, 1.0, None).unwrap();
        for sector in [Sector::Symmetric, Sector::Antisymmetric] {
            let init = initial_coefficients(&p, sector);
            let m = ApproxModes::new(p.sector(sector), &init).unwrap();
            let c = m.eval(0.0);
            for i in 0..14 {
                assert!((c[i] - init[i]).abs() < 1e-12 * (1.0 + init[i].abs()), "c{}", i + 1);
            }
            assert!((m.lambda[0].re + 2.0 * p.sector(sector).mode1.a4).abs() < 1e-15);
        }
    }

    #[test]
    fn approximate_is_exact_without_mixing() {
        let (sys, spec) = fig8(5.0, 0.01);
        let p = MarkovParams::new(sys, &spec, 1.0, Some(0.0)).unwrap();
        let full = integrate_coefficients(&p, 60.0, 0.5).unwrap();
        let appr = approximate_coefficients(&p, 60.0, 0.5).unwrap();
        for (f, a) in [(&full.symmetric, &appr.symmetric), (&full.antisymmetric, &appr.antisymmetric)] {
            let worst = f
                .iter()
                .zip(a)
                .flat_map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).abs()))
                .fold(0.0f64, f64::max);
            assert!(worst < 1e-8, "{worst}");
        }
    }

    #[test]
    fn approximate_negativity_close_for_ground_state() {
        let (sys, spec) = fig8(1.0, 0.01);
        let p = MarkovParams::new(sys, &spec, 1.0, None).unwrap();
        let full = evolve(&p, 60.0, 0.1, false).unwrap();
        let appr = evolve(&p, 60.0, 0.1, true).unwrap();
        let worst = full
            .log_negativity
            .iter()
            .zip(&appr.log_negativity)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(worst < 0.05, "{worst}");
    }

    #[test]
    fn antisymmetric_equations_are_the_decoupled_limit() {
        let (sys, spec) = fig8(2.0, 0.01);
        let p = MarkovParams::new(sys, &spec, 1.0, Some(0.0)).unwrap();
        let mut sym = p.antisymmetric;
        sym.xi = 0.0;
        let c: Coefficients = std::array::from_fn(|i| 0.2 + 0.1 * i as f64);
        let (mut d1, mut d2) = ([0.0; 14], [0.0; 14]);
        coefficient_rhs(&sym, &c, &mut d1);
        coefficient_rhs(&p.antisymmetric, &c, &mut d2);
        assert_eq!(d1, d2);
        assert_eq!(p.symmetric.xi, 0.0);
        assert_eq!(p.symmetric.omega_bar_2, 1.0);
    }

    #[test]
    fn thermal_negativity_limits() {
        let (sys, _) = fig8(1.0, 0.0);
        let hot = BathSpec::free(Geometry::Free3D, 0.05, 3.0, 3.0, 50.0);
        let p = MarkovParams::new(sys, &hot, 1.0, Some(0.3)).unwrap();
        assert_eq!(asymptotic_negativity(&p).unwrap(), 0.0);
        let warm = BathSpec::free(Geometry::Free3D, 0.05, 3.0, 3.0, 0.5);
        let p = MarkovParams::new(sys, &warm, 1.0, Some(0.0)).unwrap();
        assert_eq!(asymptotic_negativity(&p).unwrap(), 0.0);
        // a critical coupling exists at fixed T
        let cold = BathSpec::free(Geometry::Free3D, 0.05, 3.0, 3.0, 0.2);
        let weak = asymptotic_negativity(&MarkovParams::new(sys, &cold, 1.0, Some(0.01)).unwrap()).unwrap();
        let strong = asymptotic_negativity(&MarkovParams::new(sys, &cold, 1.0, Some(0.6)).unwrap()).unwrap();
        assert_eq!(weak, 0.0);
        assert!(strong > 0.0);
    }

    #[test]
    fn initial_state_is_the_squeezed_product() {
        let (sys, spec) = fig8(4.0, 0.01);
        let p = MarkovParams::new(sys, &spec, 1.0, None).unwrap();
        let cov = covariance_at(
            &p,
            &initial_coefficients(&p, Sector::Symmetric),
            &initial_coefficients(&p, Sector::Antisymmetric),
        )
        .unwrap();
        let want = gaussian::squeezed_initial(&sys);
        assert!((cov.0 - want.0).abs().max() < 1e-13);
    }
}
