//! Riesz subordination of a compactly supported bump: F(lambda) recovered from
//! its Weyl derivative of order delta + 1.

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use statrs::function::gamma::gamma;

/// Truncated Taylor series: c[k] = f^{(k)}(t0) / k!.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub c: Vec<f64>,
}

impl Jet {
    pub fn constant(v: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = v;
        Self { c }
    }

    pub fn variable(t0: f64, order: usize) -> Self {
        let mut j = Self::constant(t0, order);
        if order >= 1 {
            j.c[1] = 1.0;
        }
        j
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn affine(&self, a: f64, b: f64) -> Self {
        let mut c: Vec<f64> = self.c.iter().map(|v| a * v).collect();
        c[0] += b;
        Self { c }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.c.len();
        let mut c = vec![0.0; n];
        for i in 0..n {
            for j in 0..n - i {
                c[i + j] += self.c[i] * o.c[j];
            }
        }
        Self { c }
    }

    pub fn recip(&self) -> Self {
        let n = self.c.len();
        let mut r = vec![0.0; n];
        r[0] = 1.0 / self.c[0];
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| self.c[j] * r[k - j]).sum();
            r[k] = -s * r[0];
        }
        Self { c: r }
    }

    pub fn exp(&self) -> Self {
        let n = self.c.len();
        let mut e = vec![0.0; n];
        e[0] = self.c[0].exp();
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| j as f64 * self.c[j] * e[k - j]).sum();
            e[k] = s / k as f64;
        }
        Self { c: e }
    }

    pub fn powi(&self, m: u32) -> Self {
        let mut out = Self::constant(1.0, self.order());
        for _ in 0..m {
            out = out.mul(self);
        }
        out
    }

    /// f^{(k)}(t0) for k = 0..=order.
    pub fn derivatives(&self) -> Vec<f64> {
        let mut fact = 1.0;
        self.c
            .iter()
            .enumerate()
            .map(|(k, v)| {
                if k > 0 {
                    fact *= k as f64;
                }
                v * fact
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BumpProfile {
    /// exp(1 - 1/(1 - u^2))
    Smooth,
    /// exp(-4u^2) tapered by the smooth profile
    Gaussian,
    /// (1 - u^2)^m, C^{m-1} at the edges
    Polynomial(u32),
}

/// Profile rescaled to the support [lo, hi] with u = (2t - lo - hi)/(hi - lo).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub profile: BumpProfile,
    pub lo: f64,
    pub hi: f64,
}

impl Bump {
    pub fn new(profile: BumpProfile, lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::Domain(format!("empty support [{lo}, {hi}]")));
        }
        Ok(Self { profile, lo, hi })
    }

    /// Derivatives F(t), F'(t), ..., F^{(order)}(t).
    pub fn derivatives(&self, t: f64, order: usize) -> Vec<f64> {
        if t <= self.lo || t >= self.hi {
            return vec![0.0; order + 1];
        }
        let scale = 2.0 / (self.hi - self.lo);
        let u = Jet::variable(t, order).affine(scale, -(self.lo + self.hi) / (self.hi - self.lo));
        let one_minus = u.mul(&u).affine(-1.0, 1.0);
        if one_minus.c[0] < 2e-3 && !matches!(self.profile, BumpProfile::Polynomial(_)) {
            return vec![0.0; order + 1];
        }
        let smooth = || one_minus.recip().affine(-1.0, 1.0);
        let f = match self.profile {
            BumpProfile::Smooth => smooth().exp(),
            BumpProfile::Gaussian => smooth().add(&u.mul(&u).affine(-4.0, 0.0)).exp(),
            BumpProfile::Polynomial(m) => one_minus.powi(m),
        };
        f.derivatives()
    }

    pub fn value(&self, t: f64) -> f64 {
        self.derivatives(t, 0)[0]
    }
}

/// Weyl derivative of order nu > 0:
/// (-1)^n / Gamma(n - nu) * integral_t^inf F^{(n)}(s) (s - t)^{n - nu - 1} ds, n = ceil(nu).
/// Integer orders reduce to (-1)^nu F^{(nu)}.
pub fn weyl_derivative(f: &Bump, nu: f64, t: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("order must be positive, got {nu}")));
    }
    let n = nu.ceil() as usize;
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    if (nu - n as f64).abs() < 1e-14 {
        return Ok(sign * f.derivatives(t, n)[n]);
    }
    let beta = n as f64 - nu;
    let start = t.max(f.lo);
    if start >= f.hi {
        return Ok(0.0);
    }
    // substitute s - t = w^{1/beta}; the weight becomes dw / beta
    let w_lo = (start - t).max(0.0).powf(beta);
    let w_hi = (f.hi - t).powf(beta);
    let gl = GaussLegendre::new(20);
    let integral = gl.converge(
        |w| f.derivatives(t + w.powf(1.0 / beta), n)[n],
        w_lo,
        w_hi,
        8,
        1e-13,
        1 << 14,
    )?;
    Ok(sign * integral / (beta * gamma(beta)))
}

/// |F(lambda) - integral F^{(delta+1)}(t) (t - lambda)_+^delta / Gamma(delta + 1) dt|.
pub fn riesz_subordination_residual(f: &Bump, delta: f64, lambda: f64) -> Result<f64> {
    if !(delta > -1.0) {
        return Err(Error::Domain(format!("order delta must exceed -1, got {delta}")));
    }
    let nu = delta + 1.0;
    let start = lambda.max(f.lo);
    let lhs = f.value(lambda);
    if lambda >= f.hi {
        return Ok(lhs.abs());
    }
    let gl = GaussLegendre::new(20);
    let mut err: Option<Error> = None;
    let mut g = |t: f64| match weyl_derivative(f, nu, t) {
        Ok(v) => v,
        Err(e) => {
            err.get_or_insert(e);
            0.0
        }
    };
    let frac = delta - delta.floor();
    let integral = if frac < 1e-14 {
        gl.converge(|t| g(t) * (t - lambda).powf(delta), start, f.hi, 16, 1e-12, 1 << 12)?
    } else {
        // r = w^m with m ~ 1/frac keeps r^delta dr close to a polynomial weight
        let m = (1.0 / frac).round().max(1.0);
        let w_hi = (f.hi - lambda).powf(1.0 / m);
        gl.converge(
            |w| m * g(lambda + w.powf(m)) * w.powf(m * (delta + 1.0) - 1.0),
            0.0,
            w_hi,
            16,
            1e-12,
            1 << 12,
        )?
    };
    if let Some(e) = err {
        return Err(e);
    }
    Ok((lhs - integral / gamma(nu)).abs())
}
