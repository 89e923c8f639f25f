//! Normalized Hermite functions h_k, tensor eigenfunctions and turning-point regimes.

use crate::error::{Error, Result};
use std::f64::consts::PI;

const RESCALE: f64 = 1e150;

/// h_0..h_{k_max} at a set of abscissae, stored as mantissa and natural-log scale
/// so that h_k(t) = mantissa * exp(log_scale) without intermediate underflow.
#[derive(Debug, Clone)]
pub struct HermiteBank {
    pub k_max: usize,
    pub abscissae: Vec<f64>,
    mantissa: Vec<f64>,
    log_scale: Vec<f64>,
}

impl HermiteBank {
    pub fn new(k_max: usize, abscissae: &[f64]) -> Result<Self> {
        let stride = k_max + 1;
        let mut mantissa = vec![0.0; stride * abscissae.len()];
        let mut log_scale = vec![0.0; stride * abscissae.len()];
        for (i, &t) in abscissae.iter().enumerate() {
            if !t.is_finite() {
                return Err(Error::Domain(format!("non-finite abscissa {t}")));
            }
            let row = i * stride;
            fill_scaled(
                k_max,
                t,
                &mut mantissa[row..row + stride],
                &mut log_scale[row..row + stride],
            );
        }
        Ok(Self { k_max, abscissae: abscissae.to_vec(), mantissa, log_scale })
    }

    pub fn len(&self) -> usize {
        self.abscissae.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissae.is_empty()
    }

    pub fn value(&self, point: usize, k: usize) -> f64 {
        let j = point * (self.k_max + 1) + k;
        self.mantissa[j] * self.log_scale[j].exp()
    }

    /// ln|h_k(t)|; -inf at exact zeros.
    pub fn log_abs(&self, point: usize, k: usize) -> f64 {
        let j = point * (self.k_max + 1) + k;
        self.mantissa[j].abs().ln() + self.log_scale[j]
    }

    /// All orders at one abscissa.
    pub fn row(&self, point: usize) -> Vec<f64> {
        (0..=self.k_max).map(|k| self.value(point, k)).collect()
    }
}

fn fill_scaled(k_max: usize, t: f64, m: &mut [f64], s: &mut [f64]) {
    let mut scale = -0.5 * t * t;
    m[0] = PI.powf(-0.25);
    s[0] = scale;
    if k_max == 0 {
        return;
    }
    m[1] = std::f64::consts::SQRT_2 * t * m[0];
    s[1] = scale;
    let (mut prev, mut cur) = (m[0], m[1]);
    for k in 1..k_max {
        let kf = k as f64;
        let mut next = (2.0 / (kf + 1.0)).sqrt() * t * cur - (kf / (kf + 1.0)).sqrt() * prev;
        if next.abs() > RESCALE {
            next /= RESCALE;
            cur /= RESCALE;
            scale += RESCALE.ln();
        }
        m[k + 1] = next;
        s[k + 1] = scale;
        prev = cur;
        cur = next;
    }
}

/// h_0(t)..h_{k_max}(t), underflowing gracefully to 0.
pub fn hermite_eval(k_max: usize, t: f64) -> Result<Vec<f64>> {
    if !t.is_finite() {
        return Err(Error::Domain(format!("non-finite abscissa {t}")));
    }
    let mut m = vec![0.0; k_max + 1];
    let mut s = vec![0.0; k_max + 1];
    fill_scaled(k_max, t, &mut m, &mut s);
    Ok(m.iter().zip(&s).map(|(a, b)| a * b.exp()).collect())
}

/// Single h_k(t).
pub fn hermite_function(k: usize, t: f64) -> Result<f64> {
    Ok(hermite_eval(k, t)?[k])
}

/// h_k'(t) = sqrt(2k) h_{k-1}(t) - t h_k(t).
pub fn hermite_derivative(k: usize, t: f64) -> Result<f64> {
    let v = hermite_eval(k, t)?;
    let lower = if k == 0 { 0.0 } else { (2.0 * k as f64).sqrt() * v[k - 1] };
    Ok(lower - t * v[k])
}

/// d-tuple of nonnegative orders.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn order(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn max_entry(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }
}

impl From<Vec<usize>> for MultiIndex {
    fn from(v: Vec<usize>) -> Self {
        MultiIndex(v)
    }
}

/// Phi_alpha(x) = prod_i h_{alpha_i}(x_i).
pub fn hermite_tensor_eval(alpha: &MultiIndex, x: &[f64]) -> Result<f64> {
    if alpha.dim() != x.len() {
        return Err(Error::DimensionMismatch { expected: alpha.dim(), got: x.len() });
    }
    let mut p = 1.0;
    for (&a, &xi) in alpha.0.iter().zip(x) {
        p *= hermite_function(a, xi)?;
    }
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeTag {
    Oscillatory,
    Transition,
    Decay,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticRegime {
    pub tag: RegimeTag,
    pub predicted_magnitude: f64,
    /// s^-(|t|) in the oscillatory window, s^+(|t|) in the decay window.
    pub phase_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TurningSide {
    Minus,
    Plus,
}

/// Closed-form turning phases s^-(t) (|t| <= mu) and s^+(t) (t >= mu).
pub fn turning_phase_s(mu: f64, t: f64, side: TurningSide) -> Result<f64> {
    match side {
        TurningSide::Minus => {
            if t.abs() > mu {
                return Err(Error::Domain(format!("|t|={t} exceeds mu={mu}")));
            }
            let r = (mu * mu - t * t).max(0.0).sqrt();
            Ok(0.5 * (t * r + mu * mu * (t / mu).clamp(-1.0, 1.0).asin()))
        }
        TurningSide::Plus => {
            if t < mu {
                return Err(Error::Domain(format!("t={t} below mu={mu}")));
            }
            let r = (t * t - mu * mu).max(0.0).sqrt();
            Ok(0.5 * (t * r - mu * mu * ((t + r) / mu).ln()))
        }
    }
}

/// Regime classification with windows split at |t| = mu -/+ mu^{-1/3}.
pub fn asymptotic_regime(k: usize, t: f64) -> AsymptoticRegime {
    let mu = (2.0 * k as f64 + 1.0).sqrt();
    let band = mu.powf(-1.0 / 3.0);
    let a = t.abs();
    if a < mu - band {
        AsymptoticRegime {
            tag: RegimeTag::Oscillatory,
            predicted_magnitude: (mu * mu - a * a).powf(-0.25),
            phase_s: turning_phase_s(mu, a, TurningSide::Minus).ok(),
        }
    } else if a <= mu + band {
        AsymptoticRegime {
            tag: RegimeTag::Transition,
            predicted_magnitude: mu.powf(-1.0 / 6.0),
            phase_s: None,
        }
    } else {
        let s = turning_phase_s(mu, a, TurningSide::Plus).unwrap_or(0.0);
        AsymptoticRegime {
            tag: RegimeTag::Decay,
            predicted_magnitude: (a * a - mu * mu).powf(-0.25) * (-s).exp(),
            phase_s: Some(s),
        }
    }
}

/// Largest |h_k| over the real line, located near the last turning-point lobe.
pub fn hermite_sup(k: usize) -> f64 {
    let mu = (2.0 * k as f64 + 1.0).sqrt();
    let lo = (mu - 4.0 * mu.powf(-1.0 / 3.0) - 2.0).max(0.0);
    let hi = mu + 2.0;
    let n = ((hi - lo) * mu * 8.0).ceil().max(64.0) as usize;
    let h = (hi - lo) / n as f64;
    let f = |t: f64| hermite_function(k, t).map(f64::abs).unwrap_or(0.0);
    let mut best = (lo, f(lo));
    for i in 1..=n {
        let t = lo + i as f64 * h;
        let v = f(t);
        if v > best.1 {
            best = (t, v);
        }
    }
    crate::fit::golden_max(f, best.0 - h, best.0 + h, 1e-12).1.max(best.1)
}

/// G[j][k] = integral of h_j h_k over the line, by composite Gauss–Legendre past the last turning point.
pub fn hermite_gram(k_max: usize) -> Result<Vec<Vec<f64>>> {
    let mu = (2.0 * k_max as f64 + 1.0).sqrt();
    let half = mu + 14.0;
    let gl = crate::quadrature::GaussLegendre::new(20);
    let panels = (half * (mu + 2.0) / 3.0).ceil() as usize;
    let width = 2.0 * half / panels as f64;
    let mut nodes = Vec::with_capacity(panels * gl.order());
    let mut weights = Vec::with_capacity(panels * gl.order());
    for p in 0..panels {
        let mid = -half + (p as f64 + 0.5) * width;
        for (x, w) in gl.nodes.iter().zip(&gl.weights) {
            nodes.push(mid + 0.5 * width * x);
            weights.push(0.5 * width * w);
        }
    }
    let bank = HermiteBank::new(k_max, &nodes)?;
    let rows: Vec<Vec<f64>> = (0..nodes.len()).map(|i| bank.row(i)).collect();
    let mut g = vec![vec![0.0; k_max + 1]; k_max + 1];
    for (row, w) in rows.iter().zip(&weights) {
        for j in 0..=k_max {
            let a = w * row[j];
            for k in 0..=j {
                g[j][k] += a * row[k];
            }
        }
    }
    for j in 0..=k_max {
        for k in 0..j {
            g[k][j] = g[j][k];
        }
    }
    Ok(g)
}

/// max |<h_j, h_k> - delta_jk| over j, k <= k_max.
pub fn orthonormality_residual(k_max: usize) -> Result<f64> {
    let g = hermite_gram(k_max)?;
    Ok((0..=k_max)
        .flat_map(|j| (0..=k_max).map(move |k| (j, k)))
        .map(|(j, k)| (g[j][k] - if j == k { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max))
}
