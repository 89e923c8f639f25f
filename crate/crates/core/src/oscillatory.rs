//! Time windows, oscillatory quadrature, propagators, scaled Bochner–Riesz block
//! kernels and their spectral-sum counterparts.

use crate::error::{Error, Result};
use crate::linalg::{dot, sub};
use crate::projection::{axis_tables, level_sum};
use crate::quadrature::GaussLegendre;
use crate::special_hermite::{laguerre_function_table, symplectic_pairing};
use num_complex::Complex64;
use std::f64::consts::PI;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowProfile {
    /// exp(1 - 1/(1 - u^2))
    SmoothBump,
    /// exp(-(t - center)^2 / (2 sigma^2)), sigma = width / 8, cut at |u| = 1
    Gaussian,
    /// flat on |u| <= 1/2, smooth C^infinity steps to 0 at |u| = 1
    Plateau,
}

/// Smooth time cutoff supported in [center - width, center + width], u = (t - center)/width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowFunction {
    pub center: f64,
    pub width: f64,
    pub profile: WindowProfile,
}

fn smooth_step(s: f64) -> f64 {
    let psi = |v: f64| if v <= 0.0 { 0.0 } else { (-1.0 / v).exp() };
    let (a, b) = (psi(s), psi(1.0 - s));
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

impl WindowFunction {
    pub fn new(center: f64, width: f64, profile: WindowProfile) -> Result<Self> {
        if !(width > 0.0) || !center.is_finite() {
            return Err(Error::Domain(format!("window needs finite center and positive width, got ({center}, {width})")));
        }
        Ok(Self { center, width, profile })
    }

    /// Smoothed indicator of [rho/4, rho].
    pub fn eta_rho(rho: f64) -> Result<Self> {
        Self::new(0.625 * rho, 0.375 * rho, WindowProfile::Plateau)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.width, self.center + self.width)
    }

    pub fn value(&self, t: f64) -> f64 {
        let u = (t - self.center) / self.width;
        if u.abs() >= 1.0 {
            return 0.0;
        }
        match self.profile {
            WindowProfile::SmoothBump => (1.0 - 1.0 / (1.0 - u * u)).exp(),
            WindowProfile::Gaussian => (-32.0 * u * u).exp(),
            WindowProfile::Plateau => {
                if u.abs() <= 0.5 {
                    1.0
                } else {
                    smooth_step(2.0 * (1.0 - u.abs()))
                }
            }
        }
    }

    /// t -> zeta(t + s)
    pub fn shifted(&self, s: f64) -> Self {
        Self { center: self.center - s, ..*self }
    }

    /// t -> zeta(-t)
    pub fn reflected(&self) -> Self {
        Self { center: -self.center, ..*self }
    }

    /// Derivative bound scale width^{-n}.
    pub fn derivative_scale(&self, n: i32) -> f64 {
        self.width.powi(-n)
    }

    /// (1/2pi) integral zeta(t) e^{i t tau} dt.
    pub fn check_transform(&self, tau: f64) -> Complex64 {
        if let WindowProfile::Gaussian = self.profile {
            let sigma = self.width / 8.0;
            let mag = sigma / (2.0 * PI).sqrt() * (-0.5 * sigma * sigma * tau * tau).exp();
            return Complex64::from_polar(mag, self.center * tau);
        }
        let gl = GaussLegendre::new(16);
        let (lo, hi) = self.support();
        let panels = (16.0 + tau.abs() * self.width).ceil() as usize;
        gl.composite_complex(
            |t| Complex64::from_polar(self.value(t), t * tau),
            lo,
            hi,
            panels,
        ) / (2.0 * PI)
    }
}

/// Integrand a(t) e^{i lambda phi(t)} on [t0, t1].
pub struct OscillatoryIntegrand<'a> {
    pub phase: &'a (dyn Fn(f64) -> f64 + Sync),
    pub amplitude: &'a (dyn Fn(f64) -> Complex64 + Sync),
    pub t0: f64,
    pub t1: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
    pub order: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-11, abs_tol: 1e-16, max_panels: 1 << 17, order: 16 }
    }
}

/// Composite Gauss–Legendre with panel doubling; starts at >= 8 nodes per local period.
pub fn oscillatory_quadrature(integrand: &OscillatoryIntegrand, opts: QuadOptions) -> Result<(Complex64, f64)> {
    let (a, b) = (integrand.t0, integrand.t1);
    if !(b > a) {
        return Ok((Complex64::new(0.0, 0.0), 0.0));
    }
    let samples = 256;
    let h = (b - a) / samples as f64;
    let mut max_slope: f64 = 0.0;
    for i in 0..samples {
        let t = a + (i as f64 + 0.5) * h;
        let d = ((integrand.phase)(t + 0.25 * h) - (integrand.phase)(t - 0.25 * h)) / (0.5 * h);
        max_slope = max_slope.max(d.abs());
    }
    let periods = integrand.lambda.abs() * max_slope * (b - a) / (2.0 * PI);
    let gl = GaussLegendre::new(opts.order);
    let mut panels = ((periods * 8.0 / opts.order as f64).ceil() as usize).max(4);
    let f = |t: f64| (integrand.amplitude)(t) * Complex64::from_polar(1.0, integrand.lambda * (integrand.phase)(t));
    let mut prev = gl.composite_complex(f, a, b, panels);
    loop {
        panels *= 2;
        let next = gl.composite_complex(f, a, b, panels);
        let diff = (next - prev).norm();
        if diff <= opts.rel_tol * next.norm() || diff <= opts.abs_tol {
            return Ok((next, diff));
        }
        if panels >= opts.max_panels {
            return Err(Error::NonConvergence { last: next.norm(), previous: prev.norm() });
        }
        prev = next;
    }
}

/// a(t_c) sqrt(2pi/(lambda |phi''|)) e^{i lambda phi(t_c)} e^{i sgn(phi'') pi/4}.
pub fn stationary_phase_leading(integrand: &OscillatoryIntegrand, t_c: f64) -> Result<Complex64> {
    let h = 1e-4 * (1.0 + t_c.abs());
    let p = integrand.phase;
    let d1 = (p(t_c + h) - p(t_c - h)) / (2.0 * h);
    let d2 = (p(t_c + h) - 2.0 * p(t_c) + p(t_c - h)) / (h * h);
    if d2.abs() < 1e-8 {
        return Err(Error::Degenerate(format!("second derivative {d2:e} at the critical point")));
    }
    if d1.abs() > 1e-6 * (1.0 + d2.abs()) {
        return Err(Error::Precondition(format!("phase derivative {d1:e} does not vanish at t_c")));
    }
    let mag = (2.0 * PI / (integrand.lambda * d2.abs())).sqrt();
    let arg = integrand.lambda * p(t_c) + d2.signum() * PI / 4.0;
    Ok((integrand.amplitude)(t_c) * Complex64::from_polar(mag, arg))
}

fn singular_distance(t: f64, period: f64) -> f64 {
    (t - (t / period).round() * period).abs()
}

/// Kernel of e^{-itH}: (2 pi i sin 2t)^{-d/2} exp((i/2)((|x|^2+|y|^2) cot 2t - 2<x,y> csc 2t)), principal branch.
pub fn mehler_kernel(t: f64, x: &[f64], y: &[f64]) -> Result<Complex64> {
    mehler_kernel_complex(Complex64::new(t, 0.0), x, y)
}

/// Mehler kernel at complex time (Im t < 0 gives the Abel-regularized propagator).
pub fn mehler_kernel_complex(t: Complex64, x: &[f64], y: &[f64]) -> Result<Complex64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    let distance = singular_distance(t.re, PI / 2.0);
    if t.im == 0.0 && distance < 1e-3 {
        return Err(Error::Singularity { t: t.re, distance });
    }
    let d = x.len() as f64;
    let s = (t * 2.0).sin();
    let c = (t * 2.0).cos();
    let pre = (I * 2.0 * PI * s).powf(-d / 2.0);
    let phase = I * 0.5 * ((dot(x, x) + dot(y, y)) * c / s - 2.0 * dot(x, y) / s);
    Ok(pre * phase.exp())
}

/// Kernel of e^{-itL}: (4 pi i sin t)^{-d} exp(i(|z-z'|^2 cot t / 4 + <z, S z'>/2)).
pub fn twisted_propagator_kernel(t: f64, z: &[f64], zp: &[f64]) -> Result<Complex64> {
    twisted_propagator_complex(Complex64::new(t, 0.0), z, zp)
}

pub fn twisted_propagator_complex(t: Complex64, z: &[f64], zp: &[f64]) -> Result<Complex64> {
    if z.len() != zp.len() || !z.len().is_multiple_of(2) {
        return Err(Error::DimensionMismatch { expected: z.len(), got: zp.len() });
    }
    let distance = singular_distance(t.re, PI);
    if t.im == 0.0 && distance < 1e-3 {
        return Err(Error::Singularity { t: t.re, distance });
    }
    let d = (z.len() / 2) as i32;
    let v = sub(z, zp);
    let pre = (I * 4.0 * PI * t.sin()).powi(-d);
    let phase = I * (dot(&v, &v) * t.cos() / (4.0 * t.sin()) + 0.5 * symplectic_pairing(z, zp));
    Ok(pre * phase.exp())
}

/// Clip a window to (lo, hi) and reject supports reaching a singular time.
fn integration_range(w: &WindowFunction, clip: Option<(f64, f64)>, period: f64, margin: f64) -> Result<Option<(f64, f64)>> {
    let (mut lo, mut hi) = w.support();
    if let Some((a, b)) = clip {
        lo = lo.max(a);
        hi = hi.min(b);
    }
    if lo >= hi {
        return Ok(None);
    }
    let first = (lo / period).ceil() as i64;
    let last = (hi / period).floor() as i64;
    let touches = |t: f64| w.value(t) > 0.0;
    for m in first - 1..=last + 1 {
        let s = m as f64 * period;
        if s > lo - margin && s < hi + margin && (touches(s - margin) || touches(s + margin) || touches(s)) {
            let t = s.clamp(lo, hi);
            return Err(Error::Singularity { t, distance: (t - s).abs() });
        }
    }
    Ok(Some((lo, hi)))
}

/// C_d integral zeta(t) (sin t)^{-d/2} e^{i lambda P_H(t,x,y)} dt over supp zeta within (-pi, pi),
/// with C_d (sin t)^{-d/2} = (4 pi)^{-1} (2 pi i sin t)^{-d/2} on the principal branch.
pub fn scaled_hermite_kernel(w: &WindowFunction, lambda: f64, x: &[f64], y: &[f64]) -> Result<Complex64> {
    scaled_hermite_kernel_with(w, lambda, x, y, QuadOptions::default())
}

pub fn scaled_hermite_kernel_with(
    w: &WindowFunction,
    lambda: f64,
    x: &[f64],
    y: &[f64],
    opts: QuadOptions,
) -> Result<Complex64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    let Some((lo, hi)) = integration_range(w, Some((-PI, PI)), PI, 1e-3)? else {
        return Ok(Complex64::new(0.0, 0.0));
    };
    let d = x.len() as f64;
    let (xx, yy, xy) = (dot(x, x), dot(y, y), dot(x, y));
    let phase = move |t: f64| 0.5 * t + (xx + yy) * t.cos() / (2.0 * t.sin()) - xy / t.sin();
    let amp = move |t: f64| (I * 2.0 * PI * t.sin()).powf(-d / 2.0) * (w.value(t) / (4.0 * PI));
    let integrand = OscillatoryIntegrand { phase: &phase, amplitude: &amp, t0: lo, t1: hi, lambda };
    Ok(oscillatory_quadrature(&integrand, opts)?.0)
}

const WEIGHT_FLOOR: f64 = 1e-14;

/// Orders k whose weight |eta_hat(tau(k))| reaches the floor, scanning past the peak.
fn active_orders<F: Fn(usize) -> Complex64>(weight: F, lambda_order: usize, cap: usize) -> Result<Vec<(usize, Complex64)>> {
    let mut out = Vec::new();
    let mut quiet = 0;
    for k in 0..=cap {
        let w = weight(k);
        if w.norm() >= WEIGHT_FLOOR {
            out.push((k, w));
            quiet = 0;
        } else if k > lambda_order {
            quiet += 1;
            if quiet >= 64 {
                return Ok(out);
            }
        }
    }
    Err(Error::Precondition(format!("spectral weights still above {WEIGHT_FLOOR:e} at order cap {cap}")))
}

/// (1/2) sum over lambda' in 2N+d of eta_hat((lambda - lambda')/2) Pi_{lambda'}(x, y).
pub fn smoothed_spectral_sum(
    eta_hat: &dyn Fn(f64) -> Complex64,
    lambda: f64,
    x: &[f64],
    y: &[f64],
    d: usize,
) -> Result<Complex64> {
    if x.len() != d || y.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.len() });
    }
    let lambda_order = ((lambda - d as f64) / 2.0).max(0.0) as usize;
    let cap = lambda_order + 200_000;
    let terms = active_orders(|k| eta_hat((lambda - (2 * k + d) as f64) / 2.0), lambda_order, cap)?;
    let Some(k_max) = terms.iter().map(|t| t.0).max() else {
        return Ok(Complex64::new(0.0, 0.0));
    };
    let tx = axis_tables(x, k_max)?;
    let ty = axis_tables(y, k_max)?;
    Ok(terms.iter().map(|(k, w)| w * level_sum(&tx, &ty, *k)).sum::<Complex64>() * 0.5)
}

/// (2 pi)^{-1} (4 pi i)^{-d} integral eta(t) (sin t)^{-d} e^{i lambda P_L(t,z,z')} dt over supp eta.
pub fn scaled_twisted_kernel(w: &WindowFunction, lambda: f64, z: &[f64], zp: &[f64]) -> Result<Complex64> {
    scaled_twisted_kernel_with(w, lambda, z, zp, QuadOptions::default())
}

pub fn scaled_twisted_kernel_with(
    w: &WindowFunction,
    lambda: f64,
    z: &[f64],
    zp: &[f64],
    opts: QuadOptions,
) -> Result<Complex64> {
    if z.len() != zp.len() || !z.len().is_multiple_of(2) {
        return Err(Error::DimensionMismatch { expected: z.len(), got: zp.len() });
    }
    let Some((lo, hi)) = integration_range(w, None, PI, 1e-3)? else {
        return Ok(Complex64::new(0.0, 0.0));
    };
    let d = (z.len() / 2) as i32;
    let v = sub(z, zp);
    let vv = dot(&v, &v);
    let sym = symplectic_pairing(z, zp);
    let phase = move |t: f64| t + vv * t.cos() / (4.0 * t.sin()) + 0.5 * sym;
    let amp = move |t: f64| (I * 4.0 * PI * t.sin()).powi(-d) * (w.value(t) / (2.0 * PI));
    let integrand = OscillatoryIntegrand { phase: &phase, amplitude: &amp, t0: lo, t1: hi, lambda };
    Ok(oscillatory_quadrature(&integrand, opts)?.0)
}

/// sum_k eta_hat(lambda - (2k + d)) phi_k(z - z') e^{(i/2)<z, S z'>}.
pub fn twisted_smoothed_sum(
    eta_hat: &dyn Fn(f64) -> Complex64,
    lambda: f64,
    z: &[f64],
    zp: &[f64],
) -> Result<Complex64> {
    if z.len() != zp.len() || !z.len().is_multiple_of(2) {
        return Err(Error::DimensionMismatch { expected: z.len(), got: zp.len() });
    }
    let d = z.len() / 2;
    let lambda_order = ((lambda - d as f64) / 2.0).max(0.0) as usize;
    let terms = active_orders(|k| eta_hat(lambda - (2 * k + d) as f64), lambda_order, lambda_order + 200_000)?;
    let Some(k_max) = terms.iter().map(|t| t.0).max() else {
        return Ok(Complex64::new(0.0, 0.0));
    };
    let v = sub(z, zp);
    let phis = laguerre_function_table(k_max, d, dot(&v, &v))?;
    let twist = Complex64::from_polar(1.0, 0.5 * symplectic_pairing(z, zp));
    Ok(terms.iter().map(|(k, w)| w * phis[*k]).sum::<Complex64>() * twist)
}
