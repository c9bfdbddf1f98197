//! Asymptotic (equilibrium) state from the frequency-domain solution, and the
//! critical distance beyond which the oscillators stay separable.

use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

use crate::bath::{kernel_fourier, BathSpec, Geometry};
use crate::error::{Error, Result};
use crate::gaussian::{log_negativity, CovarianceMatrix, SystemParams, P1, P2, Q1, Q2};
use crate::qle::{self, assemble_sectors, QleConfig};
use crate::quad::Adaptive;

/// F(ω) = (-iω + Z - iωR(ω))⁻¹ together with the half-range kernel transforms R(0, ω), R(r, ω).
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    pub omega: f64,
    pub f: Matrix4<Complex64>,
    pub r_local: Complex64,
    pub r_cross: Complex64,
}

/// Damping channel of the symmetric (sign +1) or antisymmetric (sign -1) coordinate.
struct Sector<'a> {
    spec: &'a BathSpec,
    omega0: f64,
    r: f64,
    sign: f64,
    top: f64,
    quad: Adaptive,
}

impl<'a> Sector<'a> {
    fn new(sys: &SystemParams, spec: &'a BathSpec, sign: f64) -> Self {
        let top = spec.omega_c * 1e14f64.ln() * (1.0 + 0.1 * spec.s);
        let width = spec.omega_c.min(PI / (2.0 * sys.r.max(1e-12)));
        Sector {
            spec,
            omega0: sys.omega0,
            r: sys.r,
            sign,
            top,
            quad: Adaptive {
                abs_tol: 1e-15,
                rel_tol: 1e-11,
                max_panels: 50_000,
                max_width: width,
            },
        }
    }

    /// J(ω)(1 ± G(ω r))/ω.
    fn h(&self, w: f64) -> f64 {
        4.0 / PI * (kernel_fourier(w, 0.0, self.spec) + self.sign * kernel_fourier(w, self.r, self.spec))
    }

    fn re_r(&self, w: f64) -> f64 {
        0.5 * PI * self.h(w.abs())
    }

    /// Im R(ω) = P∫ h(ω') ω/(ω² - ω'²) dω', odd in ω.
    fn im_r(&self, w: f64) -> Result<f64> {
        if w == 0.0 {
            return Ok(0.0);
        }
        let (sgn, w) = (w.signum(), w.abs());
        let top = self.top;
        if w >= top {
            let v = self.quad.integrate(|x| self.h(x) * w / (w * w - x * x), 0.0, top)?;
            return Ok(sgn * v);
        }
        // P∫ φ(x)/(ω - x) with φ(x) = h(x) ω/(ω + x), by subtracting φ(ω)
        let phi_w = 0.5 * self.h(w);
        let v = self.quad.integrate_points(
            |x| (self.h(x) * w / (w + x) - phi_w) / (w - x),
            &[0.0, w, top],
        )?;
        Ok(sgn * (v + phi_w * (w / (top - w)).ln()))
    }

    fn chi(&self, w: f64) -> Result<Complex64> {
        let d = Complex64::new(self.omega0 * self.omega0 - w * w + w * self.im_r(w)?, -w * self.re_r(w));
        Ok(d.inv())
    }

    /// Frequencies where the real part of 1/χ vanishes.
    fn peaks(&self) -> Result<Vec<f64>> {
        let lo = 1e-3 * self.omega0;
        let hi = self.top;
        let n = 160;
        let f = |w: f64| -> Result<f64> { Ok(self.omega0 * self.omega0 - w * w + w * self.im_r(w)?) };
        let grid: Vec<f64> = (0..=n).map(|k| lo * (hi / lo).powf(k as f64 / n as f64)).collect();
        let mut vals = Vec::with_capacity(grid.len());
        for &w in &grid {
            vals.push(f(w)?);
        }
        let mut out = Vec::new();
        for k in 0..n {
            if vals[k] == 0.0 {
                out.push(grid[k]);
            } else if vals[k] * vals[k + 1] < 0.0 {
                let (mut a, mut b, fa) = (grid[k], grid[k + 1], vals[k]);
                for _ in 0..60 {
                    let m = 0.5 * (a + b);
                    let fm = f(m)?;
                    if fm * fa > 0.0 {
                        a = m;
                    } else {
                        b = m;
                    }
                    if b - a < 1e-13 * b {
                        break;
                    }
                }
                out.push(0.5 * (a + b));
            }
        }
        Ok(out)
    }

    /// Integration breakpoints resolving each resonance on geometric scales of its width.
    fn breakpoints(&self) -> Result<Vec<f64>> {
        let mut pts = vec![0.0, self.top];
        for p in self.peaks()? {
            let width = (0.5 * self.re_r(p)).max(1e-14 * p);
            pts.push(p);
            let mut k = width;
            while k < p.max(self.top - p) {
                for x in [p - k, p + k] {
                    if x > 0.0 && x < self.top {
                        pts.push(x);
                    }
                }
                k *= 3.0;
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1e-300));
        Ok(pts)
    }

    /// (⟨{Q,Q}⟩, ⟨{P,P}⟩) of the sector coordinate at T = 0.
    fn moments(&self) -> Result<(f64, f64)> {
        let pts = self.breakpoints()?;
        let outer = Adaptive {
            abs_tol: 1e-13,
            rel_tol: 1e-9,
            max_panels: 50_000,
            max_width: f64::INFINITY,
        };
        let mut err = None;
        let mut weight = |w: f64| -> f64 {
            match self.chi(w) {
                Ok(c) => c.norm_sqr() * w * self.h(w),
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            }
        };
        let qq = outer.integrate_points(&mut weight, &pts)?;
        let pp = outer.integrate_points(|w| w * w * weight(w), &pts)?;
        if let Some(e) = err {
            return Err(e);
        }
        Ok((qq, pp))
    }
}

fn check_supported(sys: &SystemParams, spec: &BathSpec) -> Result<()> {
    sys.validate()?;
    spec.validate()?;
    if !(spec.gamma > 0.0) {
        return Err(Error::Validation("gamma > 0".into()));
    }
    if spec.geometry == Geometry::Waveguide {
        return Err(Error::Config(
            "the equilibrium solver covers free baths only; the waveguide keeps an undamped bound state".into(),
        ));
    }
    if spec.temperature != 0.0 {
        return Err(Error::Config("the equilibrium solver is restricted to T = 0".into()));
    }
    Ok(())
}

/// F(ω) for the pair of oscillators, assembled from the half-range kernel transforms.
pub fn response_matrix(w: f64, sys: &SystemParams, spec: &BathSpec) -> Result<FrequencyResponse> {
    sys.validate()?;
    spec.validate()?;
    let s = Sector::new(sys, spec, 1.0);
    let a = Sector::new(sys, spec, -1.0);
    let rs = Complex64::new(s.re_r(w), s.im_r(w)?);
    let ra = Complex64::new(a.re_r(w), a.im_r(w)?);
    let r_local = 0.5 * (rs + ra);
    let r_cross = 0.5 * (rs - ra);
    let iw = Complex64::new(0.0, w);
    let mut m = Matrix4::<Complex64>::zeros();
    let w2 = Complex64::from(sys.omega0 * sys.omega0);
    for i in 0..4 {
        m[(i, i)] = -iw;
    }
    m[(Q1, P1)] = Complex64::from(-1.0);
    m[(Q2, P2)] = Complex64::from(-1.0);
    m[(P1, Q1)] = w2 - iw * r_local;
    m[(P2, Q2)] = w2 - iw * r_local;
    m[(P1, Q2)] = -iw * r_cross;
    m[(P2, Q1)] = -iw * r_cross;
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let lu = m.lu();
    let det = lu.determinant().norm();
    if !(det > 1e-13 * scale.powi(4)) {
        return Err(Error::SingularMatrix(format!("response matrix at ω = {w} (|det| = {det:.3e})")));
    }
    let f = lu
        .try_inverse()
        .ok_or_else(|| Error::SingularMatrix(format!("response matrix at ω = {w}")))?;
    Ok(FrequencyResponse {
        omega: w,
        f,
        r_local,
        r_cross,
    })
}

/// Equilibrium covariance at T = 0, computed per symmetry sector.
pub fn equilibrium_covariance(sys: &SystemParams, spec: &BathSpec) -> Result<CovarianceMatrix> {
    check_supported(sys, spec)?;
    let (qs, ps) = Sector::new(sys, spec, 1.0).moments()?;
    let (qa, pa) = Sector::new(sys, spec, -1.0).moments()?;
    Ok(CovarianceMatrix(assemble_sectors([qs, 0.0, 0.0, ps], [qa, 0.0, 0.0, pa])).symmetrized())
}

/// Same state from the full 4×4 response: Cov = Re ∫_0^∞ F S F† dω with S = J(ω) on the
/// momentum block, 1 on the diagonal and G(ω r) off it.
pub fn equilibrium_covariance_matrix_form(sys: &SystemParams, spec: &BathSpec) -> Result<CovarianceMatrix> {
    check_supported(sys, spec)?;
    let s = Sector::new(sys, spec, 1.0);
    let a = Sector::new(sys, spec, -1.0);
    let mut pts = s.breakpoints()?;
    pts.extend(a.breakpoints()?);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let outer = Adaptive {
        abs_tol: 1e-13,
        rel_tol: 1e-9,
        max_panels: 50_000,
        max_width: f64::INFINITY,
    };
    let mut out = Matrix4::zeros();
    for i in 0..4 {
        for j in i..4 {
            let mut err = None;
            let v = outer.integrate_points(
                |w| {
                    if w == 0.0 {
                        return 0.0;
                    }
                    let resp = match response_matrix(w, sys, spec) {
                        Ok(r) => r,
                        Err(e) => {
                            err.get_or_insert(e);
                            return 0.0;
                        }
                    };
                    let j_loc = 2.0 * w * (kernel_fourier(w, 0.0, spec)) * 2.0 / PI;
                    let j_cross = 2.0 * w * (kernel_fourier(w, sys.r, spec)) * 2.0 / PI;
                    let f = &resp.f;
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (k, l, wt) in [(P1, P1, j_loc), (P2, P2, j_loc), (P1, P2, j_cross), (P2, P1, j_cross)] {
                        acc += f[(i, k)] * f[(j, l)].conj() * wt;
                    }
                    acc.re
                },
                &pts,
            )?;
            if let Some(e) = err {
                return Err(e);
            }
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(CovarianceMatrix(out))
}

/// Logarithmic negativity of the equilibrium state.
pub fn asymptotic_negativity(sys: &SystemParams, spec: &BathSpec) -> Result<f64> {
    log_negativity(&equilibrium_covariance(sys, spec)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RmaxMode {
    /// Separability of the equilibrium state.
    Asymptotic,
    /// Separability during the whole evolution up to t_max.
    Transient,
}

impl RmaxMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "asymptotic" => Some(RmaxMode::Asymptotic),
            "transient" => Some(RmaxMode::Transient),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmaxOptions {
    pub r_lo: f64,
    pub tol: f64,
    /// E_N above this counts as entangled; None selects 1e-6 (Asymptotic) or 1e-4 (Transient).
    pub threshold: Option<f64>,
    /// Give up expanding the bracket beyond this distance.
    pub r_cap: f64,
    pub qle: QleConfig,
}

impl Default for RmaxOptions {
    fn default() -> Self {
        RmaxOptions {
            r_lo: 1e-3,
            tol: 1e-3,
            threshold: None,
            r_cap: 1e3,
            qle: QleConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmaxResult {
    pub r_max: f64,
    /// An entangled distance was found beyond a separable one.
    pub non_monotone: bool,
    pub evaluations: usize,
}

pub fn find_rmax(sys: &SystemParams, spec: &BathSpec, mode: RmaxMode, t_max: f64) -> Result<RmaxResult> {
    let mut opts = RmaxOptions::default();
    opts.qle.t_max = t_max;
    find_rmax_with(sys, spec, mode, &opts)
}

/// Bisection for the largest distance with E_N > threshold.
pub fn find_rmax_with(sys: &SystemParams, spec: &BathSpec, mode: RmaxMode, opts: &RmaxOptions) -> Result<RmaxResult> {
    let threshold = opts.threshold.unwrap_or(match mode {
        RmaxMode::Asymptotic => 1e-6,
        RmaxMode::Transient => 1e-4,
    });
    let mut evaluations = 0usize;
    let mut entangled = |r: f64| -> Result<bool> {
        evaluations += 1;
        let s = SystemParams { r, ..*sys };
        let en = match mode {
            RmaxMode::Asymptotic => asymptotic_negativity(&s, spec)?,
            RmaxMode::Transient => qle::simulate(&s, spec, &opts.qle)?.max_log_negativity(),
        };
        Ok(en > threshold)
    };
    if !entangled(opts.r_lo)? {
        return Err(Error::Bracket { r_lo: opts.r_lo });
    }
    let mut lo = opts.r_lo;
    let mut hi = 2.0 * lo;
    let mut non_monotone = false;
    loop {
        while entangled(hi)? {
            lo = hi;
            hi *= 2.0;
            if hi > opts.r_cap {
                return Err(Error::Convergence(format!("entanglement persists beyond r = {}", opts.r_cap)));
            }
        }
        // look past the first separable point for a revival of entanglement
        let mut revived = None;
        for f in [1.25, 1.5, 2.0, 3.0] {
            if entangled(hi * f)? {
                revived = Some(hi * f);
            }
        }
        match revived {
            Some(r) => {
                non_monotone = true;
                lo = r;
                hi = 2.0 * r;
                if hi > opts.r_cap {
                    return Err(Error::Convergence(format!("entanglement persists beyond r = {}", opts.r_cap)));
                }
            }
            None => break,
        }
    }
    while hi - lo > opts.tol {
        let mid = 0.5 * (lo + hi);
        if entangled(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(RmaxResult {
        r_max: 0.5 * (lo + hi),
        non_monotone,
        evaluations,
    })
}

/// Thermal-free check used in tests: uncoupled ground state.
pub fn ground_state(omega0: f64) -> CovarianceMatrix {
    CovarianceMatrix(Matrix4::from_diagonal(&Vector4::new(1.0 / omega0, 1.0 / omega0, omega0, omega0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(r: f64) -> SystemParams {
        SystemParams::new(1.0, r, 1.0).unwrap()
    }

    fn fig3(g: Geometry) -> BathSpec {
        BathSpec::free(g, 1.0, 1.0, 10.0, 0.0)
    }

    #[test]
    fn im_r_matches_half_range_transform() {
        // Free 1D, s = 1, r = 0: Γ(0,t) = (8γ/π) a/(a² + t²), a = 1/Ωc
        let spec = fig3(Geometry::Free1D);
        let a = 0.1;
        let w = 1.0;
        let q = Adaptive::new(1e-14, 1e-12).with_max_width(0.5);
        let kernel = |t: f64| 8.0 / PI * a / (a * a + t * t);
        let l = 4000.0;
        let body = q.integrate(|t| (w * t).sin() * kernel(t), 0.0, l).unwrap();
        // tail ∫_L^∞ sin(ωt) k(t) ≈ k(L) cos(ωL)/ω to leading order
        let oracle = body + kernel(l) * (w * l).cos() / w;
        let got = Sector::new(&sys(0.0), &spec, 1.0).im_r(w).unwrap() / 2.0;
        assert!((got - oracle).abs() < 1e-6, "{got} {oracle}");
        let re = Sector::new(&sys(0.0), &spec, 1.0).re_r(w) / 2.0;
        let re_oracle = q.integrate(|t| (w * t).cos() * kernel(t), 0.0, l).unwrap();
        assert!((re - re_oracle).abs() < 1e-5, "{re} {re_oracle}");
    }

    #[test]
    fn response_is_hermitian_in_frequency() {
        let spec = fig3(Geometry::Free3D);
        for w in [0.3, 1.0, 2.7] {
            let p = response_matrix(w, &sys(0.2), &spec).unwrap();
            let m = response_matrix(-w, &sys(0.2), &spec).unwrap();
            assert!((p.f.map(|z| z.conj()) - m.f).iter().all(|z| z.norm() < 1e-10));
        }
    }

    #[test]
    fn free_response_and_singular_resonance() {
        let spec = BathSpec::free(Geometry::Free3D, 0.0, 1.0, 10.0, 0.0);
        let w = 0.5;
        let f = response_matrix(w, &sys(0.2), &spec).unwrap().f;
        // (-iω + Z)⁻¹: Q row = (-iω, 1)/(Ω0² - ω²)
        let d = 1.0 - w * w;
        assert!((f[(Q1, Q1)] - Complex64::new(0.0, -w / d)).norm() < 1e-14);
        assert!((f[(Q1, P1)] - Complex64::new(1.0 / d, 0.0)).norm() < 1e-14);
        assert!(f[(Q1, Q2)].norm() < 1e-14);
        assert!(matches!(response_matrix(1.0, &sys(0.2), &spec), Err(Error::SingularMatrix(_))));
    }

    #[test]
    fn weak_coupling_gives_ground_state() {
        let spec = BathSpec::free(Geometry::Free3D, 1e-3, 1.0, 10.0, 0.0);
        let c = equilibrium_covariance(&sys(1.0), &spec).unwrap();
        let g = ground_state(1.0);
        for i in 0..4 {
            assert!((c.0[(i, i)] / g.0[(i, i)] - 1.0).abs() < 0.01, "{c:?}");
        }
    }

    #[test]
    fn sector_and_matrix_forms_agree() {
        for (g, r) in [(Geometry::Free3D, 0.05), (Geometry::Free1D, 0.3)] {
            let spec = fig3(g);
            let a = equilibrium_covariance(&sys(r), &spec).unwrap();
            let b = equilibrium_covariance_matrix_form(&sys(r), &spec).unwrap();
            assert!((a.0 - b.0).abs().max() < 1e-6 * a.0.abs().max(), "{a:?} {b:?}");
        }
    }

    #[test]
    fn unsupported_settings_are_config_errors() {
        let mut spec = fig3(Geometry::Free3D);
        spec.temperature = 0.1;
        assert!(matches!(equilibrium_covariance(&sys(0.1), &spec), Err(Error::Config(_))));
        let wg = BathSpec::waveguide(0.05, 1.0, 10.0, 1.0, 0.0);
        assert!(matches!(equilibrium_covariance(&sys(0.1), &wg), Err(Error::Config(_))));
        let zero = BathSpec::free(Geometry::Free3D, 0.0, 1.0, 10.0, 0.0);
        assert!(matches!(equilibrium_covariance(&sys(0.1), &zero), Err(Error::Validation(_))));
    }

    #[test]
    fn short_range_entangles_long_range_does_not() {
        let spec = fig3(Geometry::Free3D);
        assert!(asymptotic_negativity(&sys(0.01), &spec).unwrap() > 0.0);
        assert_eq!(asymptotic_negativity(&sys(1.0), &spec).unwrap(), 0.0);
        assert_eq!(asymptotic_negativity(&sys(10.0), &spec).unwrap(), 0.0);
    }

    #[test]
    fn bracket_error_without_entanglement() {
        let spec = fig3(Geometry::Free3D);
        let opts = RmaxOptions {
            r_lo: 0.5,
            ..Default::default()
        };
        assert!(matches!(
            find_rmax_with(&sys(0.5), &spec, RmaxMode::Asymptotic, &opts),
            Err(Error::Bracket { .. })
        ));
    }
}
