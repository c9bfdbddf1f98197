//! Bath spectral densities, damping kernels Γ(r, t), thermal correlators K(r, t)
//! and their Fourier weights for free 1D, free 3D and waveguide geometries.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quad::{composite_gl, Adaptive};

/// Relative size of the neglected exponential tail of J.
pub const TAIL_EPS: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    Free1D,
    Free3D,
    Waveguide,
}

impl Geometry {
    pub fn name(&self) -> &'static str {
        match self {
            Geometry::Free1D => "free1d",
            Geometry::Free3D => "free3d",
            Geometry::Waveguide => "waveguide",
        }
    }

    pub fn parse(s: &str) -> Option<Geometry> {
        match s.to_ascii_lowercase().as_str() {
            "free1d" | "1d" => Some(Geometry::Free1D),
            "free3d" | "3d" => Some(Geometry::Free3D),
            "waveguide" | "wg" => Some(Geometry::Waveguide),
            _ => None,
        }
    }
}

/// Full description of the environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec {
    pub geometry: Geometry,
    pub gamma: f64,
    pub s: f64,
    pub omega_c: f64,
    /// Transverse cutoff ω0 of the waveguide; zero for free baths.
    pub gap: f64,
    pub temperature: f64,
    /// Add the free 3D bath on top of the first waveguide mode.
    pub include_free_background: bool,
}

impl BathSpec {
    pub fn free(geometry: Geometry, gamma: f64, s: f64, omega_c: f64, temperature: f64) -> Self {
        BathSpec {
            geometry,
            gamma,
            s,
            omega_c,
            gap: 0.0,
            temperature,
            include_free_background: true,
        }
    }

    pub fn waveguide(gamma: f64, s: f64, omega_c: f64, gap: f64, temperature: f64) -> Self {
        BathSpec {
            geometry: Geometry::Waveguide,
            gamma,
            s,
            omega_c,
            gap,
            temperature,
            include_free_background: true,
        }
    }

    /// Checks the invariants. A vanishing coupling is accepted as the free-oscillator limit.
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Validation("gamma > 0".into()));
        }
        if !(self.omega_c > 0.0 && self.omega_c.is_finite()) {
            return Err(Error::Validation("omega_c > 0".into()));
        }
        if !(self.s >= 1.0 && self.s.is_finite()) {
            return Err(Error::Validation("s >= 1".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::Validation("T >= 0".into()));
        }
        match self.geometry {
            Geometry::Waveguide if !(self.gap > 0.0 && self.gap.is_finite()) => {
                Err(Error::Validation("omega_gap > 0 for the waveguide".into()))
            }
            Geometry::Free1D | Geometry::Free3D if self.gap != 0.0 => {
                Err(Error::Validation("omega_gap is only allowed for the waveguide".into()))
            }
            _ => Ok(()),
        }
    }

    /// Upper frequency beyond which e^{-ω/Ωc} is below `eps`.
    pub fn omega_max(&self, eps: f64) -> f64 {
        self.omega_c * (1.0 / eps).ln() + self.gap
    }

    fn free_over_omega(&self, w: f64) -> f64 {
        // J(ω)/ω for the free density, finite at ω = 0
        let x = w / self.omega_c;
        let pow = if self.s == 1.0 { 1.0 } else { x.powf(self.s - 1.0) };
        8.0 * self.gamma / PI * pow * (-x).exp()
    }

    fn free_density(&self, w: f64) -> f64 {
        w * self.free_over_omega(w)
    }

    fn guide_density(&self, w: f64) -> f64 {
        if w <= self.gap {
            return 0.0;
        }
        let x = w / self.omega_c;
        let pow = if self.s == 1.0 { 1.0 } else { x.powf(self.s - 1.0) };
        8.0 * self.gamma * self.gap * self.gap / (PI * PI * (w * w - self.gap * self.gap).sqrt()) * pow * (-x).exp()
    }

    /// J_wg(ω)/ω expressed through u = √(ω² - ω0²) and multiplied by dω/du = u/ω,
    /// which removes the inverse square root.
    fn guide_over_omega_du(&self, u: f64) -> f64 {
        let w = (u * u + self.gap * self.gap).sqrt();
        let x = w / self.omega_c;
        let pow = if self.s == 1.0 { 1.0 } else { x.powf(self.s - 1.0) };
        8.0 * self.gamma * self.gap * self.gap / (PI * PI) * pow * (-x).exp() / (w * w)
    }

    /// Lower edge of the free background: the transverse cutoff inside a waveguide.
    fn background_floor(&self) -> f64 {
        if self.geometry == Geometry::Waveguide {
            self.gap
        } else {
            0.0
        }
    }

    fn in_background(&self, w: f64) -> bool {
        self.geometry != Geometry::Waveguide || w > self.gap
    }

    fn has_background(&self) -> bool {
        self.geometry != Geometry::Waveguide || self.include_free_background
    }
}

/// Free-space geometric factor between two oscillators at distance r.
pub fn geometric_factor(geometry: Geometry, w: f64, r: f64) -> f64 {
    match geometry {
        Geometry::Free1D => (w * r).cos(),
        Geometry::Free3D | Geometry::Waveguide => sinc(w * r),
    }
}

pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// coth(ω/2T), equal to 1 at T = 0.
pub fn coth_weight(w: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if w.abs() < 1e-3 * t {
        return 2.0 * t / w + w / (6.0 * t);
    }
    let x = w / (2.0 * t);
    if x > 20.0 {
        return 1.0 + 2.0 * (-2.0 * x).exp();
    }
    1.0 / x.tanh()
}

/// J(ω) = (8γ/π) ω (ω/Ωc)^{s-1} e^{-ω/Ωc}.
pub fn spectral_density(w: f64, spec: &BathSpec) -> Result<f64> {
    if !(w >= 0.0) {
        return Err(Error::Domain(format!("spectral density at ω = {w} < 0")));
    }
    Ok(spec.free_density(w))
}

/// First transverse mode of the waveguide: J_wg(ω) with its van Hove divergence at ω0.
pub fn waveguide_spectral_density(w: f64, spec: &BathSpec) -> Result<f64> {
    if spec.geometry != Geometry::Waveguide {
        return Err(Error::Domain("waveguide density requested for a free bath".into()));
    }
    if !(w >= 0.0) {
        return Err(Error::Domain(format!("spectral density at ω = {w} < 0")));
    }
    Ok(spec.guide_density(w))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSample {
    pub r: f64,
    pub t: f64,
    pub value: f64,
}

fn kernel_integral(r: f64, t: f64, spec: &BathSpec, thermal: bool) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("distance r = {r} < 0")));
    }
    let t = t.abs();
    let scale = t.max(r).max(1e-300);
    let width = PI / (4.0 * scale);
    let q = Adaptive {
        abs_tol: 1e-13 * spec.gamma.max(1e-300) * spec.omega_c.powi(2),
        rel_tol: 1e-10,
        max_panels: 200_000,
        max_width: width,
    };
    let temp = spec.temperature;
    let mut total = 0.0;
    if spec.has_background() {
        let wmax = spec.omega_c * (1.0 / TAIL_EPS).ln() * (1.0 + 0.1 * spec.s);
        let g = spec.geometry;
        let bg = if g == Geometry::Waveguide { Geometry::Free3D } else { g };
        total += q.integrate(
            |w| {
                let base = spec.free_over_omega(w) * (w * t).cos() * geometric_factor(bg, w, r);
                if thermal {
                    base * w * coth_weight(w, temp)
                } else {
                    base
                }
            },
            spec.background_floor(),
            wmax,
        )?;
    }
    if spec.geometry == Geometry::Waveguide {
        let umax = spec.omega_c * (1.0 / TAIL_EPS).ln() * (1.0 + 0.1 * spec.s);
        total += q.integrate(
            |u| {
                let w = (u * u + spec.gap * spec.gap).sqrt();
                let base = spec.guide_over_omega_du(u) * (w * t).cos() * (r * u).cos();
                if thermal {
                    base * w * coth_weight(w, temp)
                } else {
                    base
                }
            },
            0.0,
            umax,
        )?;
    }
    Ok(total)
}

/// Γ(r, t) = ∫ dω J(ω)/ω cos(ωt) G(ω, r).
pub fn damping_kernel(r: f64, t: f64, spec: &BathSpec) -> Result<KernelSample> {
    Ok(KernelSample {
        r,
        t,
        value: kernel_integral(r, t, spec, false)?,
    })
}

/// K(r, t) = ∫ dω J(ω) coth(ω/2T) cos(ωt) G(ω, r).
pub fn bath_correlator(r: f64, t: f64, spec: &BathSpec) -> Result<KernelSample> {
    Ok(KernelSample {
        r,
        t,
        value: kernel_integral(r, t, spec, true)?,
    })
}

/// Γ̃(r, ω) = (π/4) J(|ω|)/|ω| G(|ω|, r), including the waveguide mode when present.
pub fn kernel_fourier(w: f64, r: f64, spec: &BathSpec) -> f64 {
    let w = w.abs();
    let mut v = 0.0;
    if spec.has_background() {
        let bg = if spec.geometry == Geometry::Waveguide {
            Geometry::Free3D
        } else {
            spec.geometry
        };
        if spec.in_background(w) {
            v += 0.25 * PI * spec.free_over_omega(w) * geometric_factor(bg, w, r);
        }
    }
    if spec.geometry == Geometry::Waveguide {
        v += kernel_fourier_guide(w, r, spec);
    }
    v
}

/// The waveguide-mode part of Γ̃ alone.
pub fn kernel_fourier_guide(w: f64, r: f64, spec: &BathSpec) -> f64 {
    let w = w.abs();
    if spec.geometry != Geometry::Waveguide || w <= spec.gap {
        return 0.0;
    }
    let u = (w * w - spec.gap * spec.gap).sqrt();
    0.25 * PI * spec.guide_density(w) / w * (r * u).cos()
}

/// The free part of Γ̃ alone (the background for the waveguide).
pub fn kernel_fourier_free(w: f64, r: f64, spec: &BathSpec) -> f64 {
    if !spec.has_background() || !spec.in_background(w.abs()) {
        return 0.0;
    }
    let bg = if spec.geometry == Geometry::Waveguide {
        Geometry::Free3D
    } else {
        spec.geometry
    };
    0.25 * PI * spec.free_over_omega(w.abs()) * geometric_factor(bg, w.abs(), r)
}

/// One node of a quadrature rule for ∫_0^∞ dω J(ω) f(ω) G(ω, r).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralNode {
    pub omega: f64,
    /// Quadrature weight times J, including any Jacobian.
    pub jw: f64,
    /// Longitudinal wave number for waveguide nodes, used in cos(u r).
    pub u: Option<f64>,
    pub geometry: Geometry,
}

impl SpectralNode {
    /// Geometric factor between the two oscillators for this node.
    pub fn cross(&self, r: f64) -> f64 {
        match self.u {
            Some(u) => (u * r).cos(),
            None => geometric_factor(self.geometry, self.omega, r),
        }
    }
}

/// Composite Gauss–Legendre rule over the whole spectrum. `phase` is the largest
/// conjugate variable (time plus distance) the integrand oscillates with.
pub fn spectral_nodes(spec: &BathSpec, phase: f64, tail_eps: f64) -> Vec<SpectralNode> {
    const ORDER: usize = 16;
    const RAD_PER_PANEL: f64 = 12.0;
    let mut out = Vec::new();
    let top = spec.omega_c * (1.0 / tail_eps).ln() * (1.0 + 0.1 * spec.s);
    let panels_for = |len: f64| -> usize {
        let by_phase = (len * phase.max(1.0) / RAD_PER_PANEL).ceil() as usize;
        // a few panels per cutoff scale keep the envelope resolved
        let by_shape = (8.0 * len / spec.omega_c).ceil() as usize;
        by_phase.max(by_shape).max(4)
    };
    if spec.has_background() {
        let bg = if spec.geometry == Geometry::Waveguide {
            Geometry::Free3D
        } else {
            spec.geometry
        };
        let lo = spec.background_floor();
        let (x, w) = composite_gl(lo, top, panels_for(top - lo), ORDER);
        for (om, wt) in x.into_iter().zip(w) {
            out.push(SpectralNode {
                omega: om,
                jw: wt * spec.free_density(om),
                u: None,
                geometry: bg,
            });
        }
    }
    if spec.geometry == Geometry::Waveguide {
        // finer panels close to the gap where the mode structure is sharp
        let (x, w) = composite_gl(0.0, top, panels_for(top), ORDER);
        for (u, wt) in x.into_iter().zip(w) {
            let om = (u * u + spec.gap * spec.gap).sqrt();
            out.push(SpectralNode {
                omega: om,
                jw: wt * spec.guide_over_omega_du(u) * om,
                u: Some(u),
                geometry: Geometry::Waveguide,
            });
        }
    }
    out
}

/// ∫ J(ω)/ω (1 ± G(ω r)) dω over the free density, in closed form.
pub fn counter_term(r: f64, sign: f64, spec: &BathSpec) -> Result<f64> {
    let g = crate::specfun::gamma_function(spec.s)?;
    let base = 8.0 * spec.gamma * spec.omega_c / PI;
    let x = spec.omega_c * r;
    let cross = match spec.geometry {
        Geometry::Free1D => {
            // ∫ (ω/Ωc)^{s-1} e^{-ω/Ωc} cos(ωr) dω / Ωc = Γ(s) Re (1 - i x)^{-s}
            g * (1.0 + x * x).powf(-0.5 * spec.s) * (spec.s * x.atan()).cos()
        }
        _ => {
            if x == 0.0 {
                g
            } else if (spec.s - 1.0).abs() < 1e-6 {
                x.atan() / x
            } else {
                let gm = crate::specfun::gamma_function(spec.s - 1.0)?;
                (1.0 + x * x).powf(-0.5 * (spec.s - 1.0)) * gm * ((spec.s - 1.0) * x.atan()).sin() / x
            }
        }
    };
    Ok(base * (g + sign * cross))
}
