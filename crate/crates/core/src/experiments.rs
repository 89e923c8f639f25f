//! Exponent tables, the counterexample construction, rate scans, decay checks and
//! operator-norm lower bounds.

use crate::error::{Error, Result};
use crate::fit::{fit_power_law, golden_max, RateFit};
use crate::grid::GridFunction;
use crate::hermite::{hermite_eval, HermiteBank, MultiIndex};
use crate::oscillatory::{
    oscillatory_quadrature, scaled_hermite_kernel, scaled_twisted_kernel, smoothed_spectral_sum, stationary_phase_leading,
    twisted_smoothed_sum, OscillatoryIntegrand, QuadOptions, WindowFunction, WindowProfile,
};
use crate::phase_h::{critical_times, phase_h};
use crate::projection::{axis_tables, compositions, interval_gram, level_order, level_sum};
use crate::quadrature::GaussLegendre;
use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

pub type Rational = Ratio<i64>;

/// A Lebesgue exponent in [1, inf].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LebesgueExponent {
    Finite(Rational),
    Infinity,
}

impl LebesgueExponent {
    pub fn finite(n: i64, d: i64) -> Result<Self> {
        if d == 0 {
            return Err(Error::Domain("zero denominator".into()));
        }
        let r = Rational::new(n, d);
        if r < Rational::from_integer(1) {
            return Err(Error::Domain(format!("exponent {r} is below 1")));
        }
        Ok(Self::Finite(r))
    }

    /// 1/p, with 1/inf = 0.
    pub fn reciprocal(&self) -> Rational {
        match self {
            Self::Finite(r) => r.recip(),
            Self::Infinity => Rational::from_integer(0),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Self::Finite(r) => *r.numer() as f64 / *r.denom() as f64,
            Self::Infinity => f64::INFINITY,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Self::Infinity)
    }
}

impl fmt::Display for LebesgueExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(r) => write!(f, "{r}"),
            Self::Infinity => write!(f, "inf"),
        }
    }
}

/// Accepts "inf", integers, "a/b" and plain decimals.
impl FromStr for LebesgueExponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
            return Ok(Self::Infinity);
        }
        let bad = || Error::Domain(format!("cannot read exponent {s:?}"));
        if let Some((a, b)) = t.split_once('/') {
            return Self::finite(a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        }
        if let Some((int, frac)) = t.split_once('.') {
            if frac.len() > 12 || !frac.chars().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            let den = 10i64.pow(frac.len() as u32);
            let whole: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
            let part: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
            return Self::finite(whole * den + part, den);
        }
        Self::finite(t.parse().map_err(|_| bad())?, 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentTable {
    pub d: usize,
    pub p: LebesgueExponent,
    pub q: LebesgueExponent,
    /// max(d |1/p - 1/2| - 1/2, 0)
    pub delta_dp: Rational,
    /// -1/(3p) + (d/3)(1/2 - 1/p)
    pub gamma_dp: Rational,
    /// None when d = 1 (the critical exponent is infinite there).
    pub p0_d: Option<Rational>,
    /// -1/(3p) + (d/6)(1 - 1/p - 1/q)
    pub counterexample_exponent: Rational,
}

pub fn p0(d: usize) -> Option<Rational> {
    let d = d as i64;
    if d < 2 {
        return None;
    }
    Some(if d % 2 == 0 {
        Rational::new(2 * (3 * d + 2), 3 * d - 2)
    } else {
        Rational::new(2 * (3 * d + 1), 3 * d - 3)
    })
}

pub fn exponent_table(d: usize, p: LebesgueExponent, q: LebesgueExponent) -> Result<ExponentTable> {
    if d == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    let r = p.reciprocal();
    let s = q.reciprocal();
    let dd = Rational::from_integer(d as i64);
    let half = Rational::new(1, 2);
    let zero = Rational::from_integer(0);
    let one = Rational::from_integer(1);
    let dist = if r >= half { r - half } else { half - r };
    let delta = (dd * dist - half).max(zero);
    let gamma = -r / 3 + dd / 3 * (half - r);
    let counterexample = -r / 3 + dd / 6 * (one - r - s);
    Ok(ExponentTable { d, p, q, delta_dp: delta, gamma_dp: gamma, p0_d: p0(d), counterexample_exponent: counterexample })
}

pub fn ratio_to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Geometric ladder from lo to hi with count points, each snapped up to 2N + d, deduplicated.
pub fn lambda_ladder(lo: f64, hi: f64, count: usize, d: usize) -> Result<Vec<usize>> {
    if !(lo > 0.0) || !(hi >= lo) || count == 0 {
        return Err(Error::Domain(format!("bad ladder [{lo}, {hi}] x {count}")));
    }
    let mut out: Vec<usize> = (0..count)
        .map(|i| {
            let f = if count == 1 { 0.0 } else { i as f64 / (count - 1) as f64 };
            crate::projection::snap_up(lo * (hi / lo).powf(f), d)
        })
        .collect();
    out.dedup();
    Ok(out)
}

/// Every admissible level 2N + d in [lo, hi], lo snapped up.
pub fn full_ladder(lo: f64, hi: f64, d: usize) -> Result<Vec<usize>> {
    if !(lo > 0.0) || !(hi >= lo) {
        return Err(Error::Domain(format!("bad ladder [{lo}, {hi}]")));
    }
    let start = crate::projection::snap_up(lo, d);
    Ok((start..).step_by(2).take_while(|&l| l as f64 <= hi).collect())
}

/// The box Q = {inner <= |x_1| <= outer, |x_i| <= transverse for i >= 2}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterexampleBox {
    pub inner: f64,
    pub outer: f64,
    pub transverse: f64,
}

impl CounterexampleBox {
    pub fn for_lambda(lambda: f64) -> Self {
        Self {
            inner: lambda.sqrt() / 200.0,
            outer: lambda.sqrt() / 100.0,
            transverse: 100.0 * lambda.powf(1.0 / 6.0),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let a = x[0].abs();
        a >= self.inner && a <= self.outer && x[1..].iter().all(|v| v.abs() <= self.transverse)
    }
}

#[derive(Debug, Clone)]
pub struct CounterexampleBundle {
    pub lambda: usize,
    pub d: usize,
    pub k: usize,
    pub q: CounterexampleBox,
    pub x_star: Vec<f64>,
    pub x_tilde: Vec<f64>,
    pub x0: Vec<f64>,
    /// Lower and upper corners of the search window for x_tilde.
    pub window: (Vec<f64>, Vec<f64>),
    pub j: Vec<MultiIndex>,
    /// Phi_alpha(x_tilde) for alpha in J; g = sum of these times Phi_alpha.
    pub g_coeffs: Vec<f64>,
    /// sum over J of Phi_alpha(x_tilde)^2
    pub j_mass: f64,
    x0_tables: Vec<Vec<f64>>,
}

impl CounterexampleBundle {
    /// f_lambda(y) = chi_Q(y) Pi_lambda(x0, y).
    pub fn f_value(&self, y: &[f64]) -> Result<f64> {
        if !self.q.contains(y) {
            return Ok(0.0);
        }
        self.kernel_from_x0(y)
    }

    pub fn kernel_from_x0(&self, y: &[f64]) -> Result<f64> {
        let ty = axis_tables(y, self.k)?;
        Ok(level_sum(&self.x0_tables, &ty, self.k))
    }

    /// g(y) = sum over J of Phi_alpha(x_tilde) Phi_alpha(y).
    pub fn g_value(&self, y: &[f64]) -> Result<f64> {
        let ty = axis_tables(y, self.k)?;
        Ok(self
            .j
            .iter()
            .zip(&self.g_coeffs)
            .map(|(a, c)| c * a.0.iter().enumerate().map(|(i, &ai)| ty[i][ai]).product::<f64>())
            .sum())
    }
}

/// Indices with |alpha| = k and lambda^{1/3}/d <= alpha_i <= 2 lambda^{1/3}/d for i >= 2.
pub fn counterexample_indices(lambda: usize, d: usize) -> Result<Vec<MultiIndex>> {
    let k = level_order(lambda, d)?;
    if d == 1 {
        return Ok(vec![MultiIndex(vec![k])]);
    }
    let c = (lambda as f64).powf(1.0 / 3.0) / d as f64;
    let lo = c.ceil() as usize;
    let hi = (2.0 * c).floor() as usize;
    let mut out = Vec::new();
    if lo <= hi {
        for tail in compositions_bounded(d - 1, lo, hi) {
            let s: usize = tail.iter().sum();
            if s <= k {
                let mut a = vec![k - s];
                a.extend(tail);
                out.push(MultiIndex(a));
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Precondition(format!("index set J is empty at lambda = {lambda}; lambda too small")));
    }
    Ok(out)
}

fn compositions_bounded(len: usize, lo: usize, hi: usize) -> Vec<Vec<usize>> {
    if len == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for v in lo..=hi {
        for mut rest in compositions_bounded(len - 1, lo, hi) {
            rest.insert(0, v);
            out.push(rest);
        }
    }
    out
}

fn j_mass_at(j: &[MultiIndex], k: usize, x: &[f64]) -> f64 {
    let tables: Vec<Vec<f64>> = x.iter().map(|&t| hermite_eval(k, t).unwrap_or_default()).collect();
    j.iter()
        .map(|a| a.0.iter().enumerate().map(|(i, &ai)| tables[i][ai]).product::<f64>().powi(2))
        .sum()
}

/// Builds Q, x_*, J and locates x_tilde by grid search over the window
/// [sqrt(lambda) - 20 lambda^{-1/6}, sqrt(lambda) - 10 lambda^{-1/6}] x D followed by
/// seeded multistart coordinate refinement.
pub fn build_counterexample(lambda: usize, d: usize, seed: u64) -> Result<CounterexampleBundle> {
    let k = level_order(lambda, d)?;
    let j = counterexample_indices(lambda, d)?;
    let lf = lambda as f64;
    let s6 = lf.powf(-1.0 / 6.0);
    let x_star: Vec<f64> = (0..d).map(|i| if i == 0 { lf.sqrt() - 100.0 * s6 } else { 0.0 }).collect();
    let side = s6 / (d as f64).sqrt();
    let lo: Vec<f64> = (0..d).map(|i| if i == 0 { lf.sqrt() - 20.0 * s6 } else { -side }).collect();
    let hi: Vec<f64> = (0..d).map(|i| if i == 0 { lf.sqrt() - 10.0 * s6 } else { side }).collect();
    let per_axis: Vec<usize> = (0..d).map(|i| if i == 0 { 129 } else { 9 }).collect();
    let steps: Vec<f64> = (0..d).map(|i| (hi[i] - lo[i]) / (per_axis[i] - 1) as f64).collect();
    let total: usize = per_axis.iter().product();
    let point = |mut flat: usize| -> Vec<f64> {
        let mut p = vec![0.0; d];
        for i in (0..d).rev() {
            p[i] = lo[i] + (flat % per_axis[i]) as f64 * steps[i];
            flat /= per_axis[i];
        }
        p
    };
    let mut scored: Vec<(f64, Vec<f64>)> = (0..total)
        .into_par_iter()
        .map(|f| {
            let p = point(f);
            (j_mass_at(&j, k, &p), p)
        })
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<Vec<f64>> = scored.iter().take(4).map(|s| s.1.clone()).collect();
    for _ in 0..4 {
        starts.push((0..d).map(|i| rng.random_range(lo[i]..=hi[i])).collect());
    }
    let mut best = scored[0].clone();
    for start in starts {
        let mut p = start;
        for _sweep in 0..if d == 1 { 1 } else { 3 } {
            for i in 0..d {
                let a = (p[i] - steps[i]).max(lo[i]);
                let b = (p[i] + steps[i]).min(hi[i]);
                let mut q = p.clone();
                let (t, _) = golden_max(
                    |t| {
                        q[i] = t;
                        j_mass_at(&j, k, &q)
                    },
                    a,
                    b,
                    1e-12 * (1.0 + lf.sqrt()),
                );
                p[i] = t;
            }
        }
        let v = j_mass_at(&j, k, &p);
        if v > best.0 {
            best = (v, p);
        }
    }
    let x_tilde = best.1;
    let tables: Vec<Vec<f64>> = x_tilde.iter().map(|&t| hermite_eval(k, t)).collect::<Result<_>>()?;
    let g_coeffs = j
        .iter()
        .map(|a| a.0.iter().enumerate().map(|(i, &ai)| tables[i][ai]).product())
        .collect();
    Ok(CounterexampleBundle {
        lambda,
        d,
        k,
        q: CounterexampleBox::for_lambda(lf),
        x_star,
        x0: x_tilde.clone(),
        x_tilde,
        window: (lo, hi),
        j,
        g_coeffs,
        j_mass: best.0,
        x0_tables: tables,
    })
}

fn gl_nodes(a: f64, b: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
    let gl = GaussLegendre::new(16);
    let w = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * 16);
    let mut weights = Vec::with_capacity(panels * 16);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * w;
        for (x, wt) in gl.nodes.iter().zip(&gl.weights) {
            nodes.push(mid + 0.5 * w * x);
            weights.push(wt * 0.5 * w);
        }
    }
    (nodes, weights)
}

fn panels_for(len: f64, lambda: f64) -> usize {
    ((len * lambda.sqrt() / 2.0).ceil() as usize).max(4)
}

/// G[u][v] = integral over inner <= |t| <= outer of h_u h_v for u, v in [k_lo, k].
fn shell_gram(k_lo: usize, k: usize, inner: f64, outer: f64, lambda: f64) -> Result<Vec<Vec<f64>>> {
    let (nodes, weights) = gl_nodes(inner, outer, panels_for(outer - inner, lambda));
    let bank = HermiteBank::new(k, &nodes)?;
    let n = k - k_lo + 1;
    let mut g = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in 0..=a {
            let (u, v) = (k_lo + a, k_lo + b);
            if (u + v) % 2 == 1 {
                continue;
            }
            let s: f64 = (0..nodes.len()).map(|i| weights[i] * bank.value(i, u) * bank.value(i, v)).sum::<f64>() * 2.0;
            g[a][b] = s;
            g[b][a] = s;
        }
    }
    Ok(g)
}

/// Coefficients c_alpha = <f_lambda, Phi_alpha> over |alpha| = k, so that Pi f_lambda = sum c_alpha Phi_alpha.
pub fn projected_coefficients(b: &CounterexampleBundle) -> Result<Vec<(MultiIndex, f64)>> {
    let level = compositions(b.k, b.d);
    match b.d {
        1 => {
            let g = shell_gram(b.k, b.k, b.q.inner, b.q.outer, b.lambda as f64)?;
            Ok(vec![(MultiIndex(vec![b.k]), b.x0_tables[0][b.k] * g[0][0])])
        }
        2 => {
            let g1 = shell_gram(0, b.k, b.q.inner, b.q.outer, b.lambda as f64)?;
            let g2 = interval_gram(b.k, b.q.transverse)?;
            let coeffs = level
                .par_iter()
                .map(|a| {
                    let c: f64 = level
                        .iter()
                        .map(|bb| {
                            b.x0_tables[0][bb[0]] * b.x0_tables[1][bb[1]] * g1[a[0]][bb[0]] * g2[a[1]][bb[1]]
                        })
                        .sum();
                    (MultiIndex(a.clone()), c)
                })
                .collect();
            Ok(coeffs)
        }
        _ => Err(Error::Precondition("projected coefficients are implemented for d <= 2".into())),
    }
}

fn lp_from_samples(values: &[f64], weights: &[f64], p: LebesgueExponent) -> f64 {
    match p {
        LebesgueExponent::Infinity => values.iter().fold(0.0, |m, v| m.max(v.abs())),
        LebesgueExponent::Finite(_) => {
            let pf = p.to_f64();
            values.iter().zip(weights).map(|(v, w)| w * v.abs().powf(pf)).sum::<f64>().powf(1.0 / pf)
        }
    }
}

/// ||f_lambda||_p by Gauss–Legendre quadrature on each factor of Q (d = 1 any p; d = 2 only p = 2).
pub fn f_norm_factorized(b: &CounterexampleBundle, p: LebesgueExponent) -> Result<f64> {
    let lf = b.lambda as f64;
    match (b.d, p) {
        (1, LebesgueExponent::Infinity) => {
            let h = |t: f64| hermite_eval(b.k, t).map(|v| v[b.k].abs()).unwrap_or(0.0);
            let (_, m) = scan_max(h, b.q.inner, b.q.outer, 0.1 / lf.sqrt());
            Ok(m * b.x0_tables[0][b.k].abs())
        }
        (1, _) => {
            let (nodes, weights) = gl_nodes(b.q.inner, b.q.outer, panels_for(b.q.outer - b.q.inner, lf));
            let bank = HermiteBank::new(b.k, &nodes)?;
            let vals: Vec<f64> = (0..nodes.len()).map(|i| bank.value(i, b.k)).collect();
            let w2: Vec<f64> = weights.iter().map(|w| 2.0 * w).collect();
            Ok(lp_from_samples(&vals, &w2, p) * b.x0_tables[0][b.k].abs())
        }
        (2, LebesgueExponent::Finite(r)) if r == Rational::from_integer(2) => {
            let c = projected_coefficients(b)?;
            let s: f64 = c.iter().map(|(a, ca)| ca * b.x0_tables[0][a.0[0]] * b.x0_tables[1][a.0[1]]).sum();
            Ok(s.max(0.0).sqrt())
        }
        _ => Err(Error::Precondition("factorized norm covers d = 1, and d = 2 with p = 2".into())),
    }
}

/// ||f_lambda||_p by trapezoid sums (or maxima) on a uniform grid over Q with n points per axis,
/// the transverse axes truncated to where the eigenfunctions live.
pub fn f_norm_grid(b: &CounterexampleBundle, p: LebesgueExponent, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Grid("need at least two points per axis".into()));
    }
    let reach = b.q.transverse.min((b.lambda as f64).sqrt() + 12.0);
    let mut lo = vec![b.q.inner];
    let mut hi = vec![b.q.outer];
    for _ in 1..b.d {
        lo.push(-reach);
        hi.push(reach);
    }
    let g = GridFunction::zeros(lo, hi, vec![n; b.d])?;
    let vals = (0..g.len())
        .into_par_iter()
        .map(|i| b.kernel_from_x0(&g.point(i)))
        .collect::<Result<Vec<f64>>>()?;
    let w: Vec<f64> = (0..g.len()).map(|i| 2.0 * g.weight(i)).collect();
    Ok(lp_from_samples(&vals, &w, p))
}

/// Grid maximum followed by golden refinement around the best node.
fn scan_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, step: f64) -> (f64, f64) {
    let n = ((b - a) / step).ceil().max(8.0) as usize;
    let h = (b - a) / n as f64;
    let mut best = (a, f(a));
    for i in 1..=n {
        let t = a + i as f64 * h;
        let v = f(t);
        if v > best.1 {
            best = (t, v);
        }
    }
    let (t, v) = golden_max(&f, (best.0 - h).max(a), (best.0 + h).min(b), 1e-12 * (1.0 + b.abs()));
    if v > best.1 {
        (t, v)
    } else {
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    pub lambda: f64,
    pub value: f64,
    pub undersampled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    pub fit: RateFit,
    pub expected: f64,
    pub tolerance: f64,
}

impl RateReport {
    fn new(rows: Vec<RateRow>, expected: f64, tolerance: f64) -> Result<Self> {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.lambda, r.value)).collect();
        Ok(Self { fit: fit_power_law(&pts)?, rows, expected, tolerance })
    }

    pub fn pass(&self) -> bool {
        self.fit.within(self.expected, self.tolerance) && !self.rows.iter().any(|r| r.undersampled)
    }
}

pub const DEFAULT_SLOPE_TOL: f64 = 0.05;

/// ||Pi_lambda f_lambda||_{L^q(B(x0, lambda^{-1/6}))} / ||f_lambda||_p along the ladder.
pub fn projection_rate_experiment(
    d: usize,
    p: LebesgueExponent,
    q: LebesgueExponent,
    lambdas: &[usize],
    grid_n: usize,
    seed: u64,
) -> Result<RateReport> {
    if d > 2 || (d == 2 && (p != LebesgueExponent::Finite(Rational::from_integer(2)) || !q.is_infinite())) {
        return Err(Error::Precondition("rate experiment covers d = 1, and d = 2 with (p, q) = (2, inf)".into()));
    }
    let table = exponent_table(d, p, q)?;
    let rows = lambdas
        .par_iter()
        .map(|&l| {
            let b = build_counterexample(l, d, seed)?;
            let lf = l as f64;
            let radius = lf.powf(-1.0 / 6.0);
            let coeffs = projected_coefficients(&b)?;
            let max_index = coeffs.iter().map(|c| c.0.max_entry()).max().unwrap_or(0);
            let pif = |x: &[f64]| -> f64 {
                let t: Vec<Vec<f64>> = x.iter().map(|&v| hermite_eval(max_index, v).unwrap_or_default()).collect();
                coeffs
                    .iter()
                    .map(|(a, c)| c * a.0.iter().enumerate().map(|(i, &ai)| t[i][ai]).product::<f64>())
                    .sum()
            };
            let centre = b.x0[0];
            let (a, bnd) = (centre - radius, centre + radius);
            let spacing = 2.0 * radius / grid_n as f64;
            let undersampled = spacing > PI / (4.0 * lf.sqrt());
            let num = if d == 1 {
                match q {
                    LebesgueExponent::Infinity => scan_max(|t| pif(&[t]).abs(), a, bnd, spacing).1,
                    _ => {
                        let (nodes, w) = gl_nodes(a, bnd, panels_for(bnd - a, lf).max(grid_n / 16));
                        let vals: Vec<f64> = nodes.iter().map(|&t| pif(&[t])).collect();
                        lp_from_samples(&vals, &w, q)
                    }
                }
            } else {
                let side = radius;
                let n = grid_n.max(16);
                let mut best: f64 = 0.0;
                for i in 0..=n {
                    for jj in 0..=n {
                        let x = [a + 2.0 * side * i as f64 / n as f64, b.x0[1] - side + 2.0 * side * jj as f64 / n as f64];
                        if (x[0] - centre).hypot(x[1] - b.x0[1]) <= radius {
                            best = best.max(pif(&x).abs());
                        }
                    }
                }
                best
            };
            let den = f_norm_factorized(&b, p)?;
            Ok(RateRow { lambda: lf, value: num / den, undersampled })
        })
        .collect::<Result<Vec<_>>>()?;
    RateReport::new(rows, ratio_to_f64(table.counterexample_exponent), DEFAULT_SLOPE_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupRegion {
    /// |x|, |y| <= 2
    FixedBox,
    /// ||x| - sqrt(lambda)| <= 1000 lambda^{-1/6}
    TurningAnnulus,
}

impl SupRegion {
    pub fn expected_slope(&self, d: usize) -> f64 {
        match self {
            Self::FixedBox => d as f64 / 2.0 - 1.0,
            Self::TurningAnnulus => (d as f64 - 2.0) / 6.0,
        }
    }

    pub fn default_tolerance(&self) -> f64 {
        match self {
            Self::FixedBox => 0.1,
            Self::TurningAnnulus => DEFAULT_SLOPE_TOL,
        }
    }
}

/// Pi_lambda(r e_1, r e_1).
pub fn radial_diagonal(lambda: usize, d: usize, r: f64) -> Result<f64> {
    let k = level_order(lambda, d)?;
    let hr = hermite_eval(k, r)?;
    if d == 1 {
        return Ok(hr[k] * hr[k]);
    }
    let h0 = hermite_eval(k, 0.0)?;
    let mut tables = vec![hr];
    tables.extend((1..d).map(|_| h0.clone()));
    Ok(level_sum(&tables, &tables, k))
}

/// sup over the region of |Pi_lambda(x, y)|, which is the sup of the diagonal by Cauchy–Schwarz
/// and depends on |x| only.
pub fn kernel_sup(lambda: usize, d: usize, region: SupRegion) -> Result<f64> {
    let lf = lambda as f64;
    let (a, b) = match region {
        SupRegion::FixedBox => (0.0, 2.0),
        SupRegion::TurningAnnulus => {
            let w = 1000.0 * lf.powf(-1.0 / 6.0);
            ((lf.sqrt() - w).max(0.0), lf.sqrt() + w.min(12.0))
        }
    };
    level_order(lambda, d)?;
    let f = |r: f64| radial_diagonal(lambda, d, r).unwrap_or(0.0);
    Ok(scan_max(f, a, b, 0.2 / lf.sqrt()).1)
}

pub fn kernel_sup_scan(d: usize, lambdas: &[usize], region: SupRegion) -> Result<RateReport> {
    let rows = lambdas
        .par_iter()
        .map(|&l| Ok(RateRow { lambda: l as f64, value: kernel_sup(l, d, region)?, undersampled: false }))
        .collect::<Result<Vec<_>>>()?;
    RateReport::new(rows, region.expected_slope(d), region.default_tolerance())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    /// (lambda, |kernel|)
    pub rows: Vec<(f64, f64)>,
    pub floor: f64,
    /// Fit over the rows above the floor.
    pub fit: Option<RateFit>,
    /// Integer part of the local decay order between the last two rows above the floor.
    pub verified_order: Option<usize>,
}

pub const DECAY_FLOOR: f64 = 1e-14;

/// |[eta]_lambda(x, y)| along a ladder; with `min_gap` the window must stay that far from both critical times.
pub fn nonstationary_decay_check(
    window: &WindowFunction,
    x: &[f64],
    y: &[f64],
    lambdas: &[f64],
    min_gap: Option<f64>,
) -> Result<DecayReport> {
    if let Some(gap) = min_gap {
        let (sc, ss) = critical_times(x, y)?;
        let (lo, hi) = window.support();
        for t in [sc, ss] {
            let dist = if t < lo { lo - t } else if t > hi { t - hi } else { 0.0 };
            if dist < gap {
                return Err(Error::Precondition(format!(
                    "window [{lo:.4}, {hi:.4}] is within {dist:.4} of the critical time {t:.4}"
                )));
            }
        }
    }
    let rows = lambdas
        .par_iter()
        .map(|&l| Ok((l, scaled_hermite_kernel(window, l, x, y)?.norm())))
        .collect::<Result<Vec<_>>>()?;
    let live: Vec<(f64, f64)> = rows.iter().copied().filter(|r| r.1 > DECAY_FLOOR).collect();
    let fit = if live.len() >= 2 { Some(fit_power_law(&live)?) } else { None };
    let verified_order = if live.len() >= 2 {
        let (a, b) = (live[live.len() - 2], live[live.len() - 1]);
        let order = -(b.1 / a.1).ln() / (b.0 / a.0).ln();
        Some(order.max(0.0).floor() as usize)
    } else {
        None
    };
    Ok(DecayReport { rows, floor: DECAY_FLOOR, fit, verified_order })
}

/// Discretized integral operator (T f)(x_i) = sum_j K(x_i, y_j) w_j f(y_j) between two grids.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub matrix: DMatrix<Complex64>,
    pub target: GridFunction,
    pub source: GridFunction,
}

impl DiscreteOperator {
    pub fn from_kernel<K: Fn(&[f64], &[f64]) -> Complex64 + Sync>(
        kernel: K,
        target: &GridFunction,
        source: &GridFunction,
    ) -> Self {
        let tp: Vec<Vec<f64>> = (0..target.len()).map(|i| target.point(i)).collect();
        let sp: Vec<Vec<f64>> = (0..source.len()).map(|j| source.point(j)).collect();
        let entries: Vec<Complex64> = (0..target.len() * source.len())
            .into_par_iter()
            .map(|f| {
                let (i, j) = (f % target.len(), f / target.len());
                kernel(&tp[i], &sp[j]) * source.weight(j)
            })
            .collect();
        Self {
            matrix: DMatrix::from_vec(target.len(), source.len(), entries),
            target: target.clone(),
            source: source.clone(),
        }
    }

    /// The grid identity: K(x_i, y_j) w_j = delta_ij.
    pub fn identity(grid: &GridFunction) -> Self {
        let n = grid.len();
        Self {
            matrix: DMatrix::from_fn(n, n, |i, j| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }),
            target: grid.clone(),
            source: grid.clone(),
        }
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        if !f.same_grid(&self.source) {
            return Err(Error::Grid("input is not on the source grid".into()));
        }
        let v = &self.matrix * nalgebra::DVector::from_column_slice(&f.values);
        Ok(GridFunction { values: v.iter().copied().collect(), ..self.target.clone() })
    }
}

/// Lower bound for ||T||_{p -> p} from seeded test families: mollified point masses,
/// modulated Gaussians and, for p = 2, power iteration on the weighted matrix.
pub fn operator_norm_estimate(op: &DiscreteOperator, p: LebesgueExponent, trials: usize, seed: u64) -> Result<f64> {
    let src = &op.source;
    let pf = p.to_f64();
    let ratio = |f: &GridFunction| -> Result<f64> {
        let nf = f.norm_lp(pf);
        if nf == 0.0 {
            return Ok(0.0);
        }
        Ok(op.apply(f)?.norm_lp(pf) / nf)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = src.dim();
    let mut best: f64 = 0.0;
    for t in 0..trials {
        let centre: Vec<f64> = (0..dim).map(|a| rng.random_range(src.lo[a]..=src.hi[a])).collect();
        let (width, freq): (Vec<f64>, Vec<f64>) = if t % 2 == 0 {
            ((0..dim).map(|a| 2.0 * src.spacing(a)).collect(), vec![0.0; dim])
        } else {
            (
                (0..dim).map(|a| rng.random_range(2.0 * src.spacing(a)..=0.5 * (src.hi[a] - src.lo[a]))).collect(),
                (0..dim).map(|a| rng.random_range(-1.0..=1.0) * PI / (2.0 * src.spacing(a))).collect(),
            )
        };
        let f = GridFunction::from_fn(src.lo.clone(), src.hi.clone(), src.n.clone(), |x| {
            let mut e = 0.0;
            let mut ph = 0.0;
            for a in 0..dim {
                e -= ((x[a] - centre[a]) / width[a]).powi(2) / 2.0;
                ph += freq[a] * x[a];
            }
            Complex64::from_polar(e.exp(), ph)
        })?;
        best = best.max(ratio(&f)?);
    }
    if pf == 2.0 {
        let ws: Vec<f64> = (0..src.len()).map(|j| src.weight(j).sqrt()).collect();
        let wt: Vec<f64> = (0..op.target.len()).map(|i| op.target.weight(i).sqrt()).collect();
        let a = DMatrix::from_fn(op.target.len(), src.len(), |i, j| op.matrix[(i, j)] * (wt[i] / ws[j]));
        let mut v = nalgebra::DVector::from_fn(src.len(), |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let mut sigma = 0.0;
        for _ in 0..500 {
            let nv = v.norm();
            if nv == 0.0 {
                break;
            }
            v /= Complex64::new(nv, 0.0);
            let av = &a * &v;
            let next = av.norm();
            v = a.adjoint() * av;
            if (next - sigma).abs() <= 1e-13 * next {
                sigma = next;
                break;
            }
            sigma = next;
        }
        best = best.max(sigma);
    }
    Ok(best)
}

/// Quadrature of the scaled kernel against its spectral expansion at one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceRow {
    pub lambda: f64,
    pub quadrature: Complex64,
    pub spectral: Complex64,
    pub rel_err: f64,
}

fn equivalence_row(lambda: f64, quadrature: Complex64, spectral: Complex64) -> EquivalenceRow {
    let rel_err = (quadrature - spectral).norm() / spectral.norm().max(1e-300);
    EquivalenceRow { lambda, quadrature, spectral, rel_err }
}

/// Hermite side: the time integral at (x, y) against the windowed eigen-expansion at (sqrt(lambda) x, sqrt(lambda) y).
pub fn hermite_equivalence(window: &WindowFunction, lambda: f64, x: &[f64], y: &[f64]) -> Result<EquivalenceRow> {
    let q = scaled_hermite_kernel(window, lambda, x, y)?;
    let s = lambda.sqrt();
    let xs: Vec<f64> = x.iter().map(|v| v * s).collect();
    let ys: Vec<f64> = y.iter().map(|v| v * s).collect();
    let sum = smoothed_spectral_sum(&|tau| window.check_transform(tau), lambda, &xs, &ys, x.len())?;
    Ok(equivalence_row(lambda, q, sum))
}

pub fn twisted_equivalence(window: &WindowFunction, lambda: f64, z: &[f64], zp: &[f64]) -> Result<EquivalenceRow> {
    let q = scaled_twisted_kernel(window, lambda, z, zp)?;
    let s = lambda.sqrt();
    let zs: Vec<f64> = z.iter().map(|v| v * s).collect();
    let zps: Vec<f64> = zp.iter().map(|v| v * s).collect();
    let sum = twisted_smoothed_sum(&|tau| window.check_transform(tau), lambda, &zs, &zps)?;
    Ok(equivalence_row(lambda, q, sum))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryRow {
    pub lambda: f64,
    pub quadrature: Complex64,
    pub leading: Complex64,
    pub rel_err: f64,
}

/// Leading stationary-phase term of the windowed Hermite time integral at S_c against quadrature.
/// The Gaussian window of the given width is centred at S_c and integrated over S_c +- width.
pub fn stationary_phase_ladder(x: &[f64], y: &[f64], width: f64, lambdas: &[f64]) -> Result<Vec<StationaryRow>> {
    let (s_c, _) = critical_times(x, y)?;
    let window = WindowFunction::new(s_c, width, WindowProfile::Gaussian)?;
    let (lo, hi) = (s_c - width, s_c + width);
    if lo <= 1e-3 || hi >= PI - 1e-3 {
        return Err(Error::Precondition(format!("window [{lo}, {hi}] reaches a singular time")));
    }
    let phase = |t: f64| phase_h(t, x, y).unwrap_or(f64::NAN);
    let amplitude = |t: f64| Complex64::new(window.value(t), 0.0);
    lambdas
        .iter()
        .map(|&lambda| {
            let it = OscillatoryIntegrand { phase: &phase, amplitude: &amplitude, t0: lo, t1: hi, lambda };
            let (quadrature, _) = oscillatory_quadrature(&it, QuadOptions::default())?;
            let leading = stationary_phase_leading(&it, s_c)?;
            let rel_err = (quadrature - leading).norm() / quadrature.norm();
            Ok(StationaryRow { lambda, quadrature, leading, rel_err })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::hermite_function;

    fn q(s: &str) -> LebesgueExponent {
        s.parse().unwrap()
    }

    #[test]
    fn full_ladder_lists_every_level() {
        assert_eq!(full_ladder(100.0, 107.0, 1).unwrap(), vec![101, 103, 105, 107]);
        assert_eq!(full_ladder(3.0, 9.0, 2).unwrap(), vec![4, 6, 8]);
        assert!(full_ladder(0.0, 9.0, 2).is_err());
    }

    #[test]
    fn exponent_spot_values() {
        assert_eq!(p0(2), Some(Rational::from_integer(4)));
        assert_eq!(p0(3), Some(Rational::new(10, 3)));
        assert_eq!(p0(4), Some(Rational::new(14, 5)));
        assert_eq!(p0(1), None);
        let t = exponent_table(1, q("4"), q("inf")).unwrap();
        assert_eq!(t.gamma_dp, Rational::from_integer(0));
        assert_eq!(exponent_table(2, q("inf"), q("inf")).unwrap().delta_dp, Rational::new(1, 2));
        assert_eq!(exponent_table(1, q("2"), q("inf")).unwrap().counterexample_exponent, Rational::new(-1, 12));
        assert_eq!(exponent_table(1, q("inf"), q("inf")).unwrap().counterexample_exponent, Rational::new(1, 6));
    }

    #[test]
    fn exponent_parsing() {
        assert_eq!(q("inf"), LebesgueExponent::Infinity);
        assert_eq!(q("10/3"), LebesgueExponent::Finite(Rational::new(10, 3)));
        assert_eq!(q("2.5"), LebesgueExponent::Finite(Rational::new(5, 2)));
        assert!("0.5".parse::<LebesgueExponent>().is_err());
        assert!("abc".parse::<LebesgueExponent>().is_err());
        assert_eq!(q("10/3").to_string(), "10/3");
    }

    #[test]
    fn ladder_snaps_to_spectrum() {
        let l = lambda_ladder(100.0, 4000.0, 6, 1).unwrap();
        assert_eq!(l[0], 101);
        assert!(l.iter().all(|v| v % 2 == 1));
        assert!(l.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn one_dimensional_bundle() {
        let b = build_counterexample(401, 1, 7).unwrap();
        assert_eq!(b.j, vec![MultiIndex(vec![200])]);
        let h = hermite_function(200, b.x_tilde[0]).unwrap();
        assert!((b.j_mass - h * h).abs() < 1e-14);
        assert!(b.x_tilde[0] >= b.window.0[0] && b.x_tilde[0] <= b.window.1[0]);
        assert!((b.x_tilde[0] - b.x_star[0]).abs() <= 100.0 * 401f64.powf(-1.0 / 6.0));
        let y = [b.q.inner * 1.5];
        let expected = h * hermite_function(200, y[0]).unwrap();
        assert!((b.f_value(&y).unwrap() - expected).abs() < 1e-14);
        assert_eq!(b.f_value(&[0.0]).unwrap(), 0.0);
        assert!((b.g_value(&y).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn seeds_agree_on_the_maximizer() {
        let a = build_counterexample(801, 1, 1).unwrap();
        let b = build_counterexample(801, 1, 99).unwrap();
        assert!((a.j_mass - b.j_mass).abs() < 1e-12 * a.j_mass);
    }

    #[test]
    fn two_dimensional_index_set() {
        for lambda in [1000usize, 4000] {
            let j = counterexample_indices(lambda, 2).unwrap();
            let c = (lambda as f64).powf(1.0 / 3.0) / 2.0;
            assert!(j.len() as f64 >= c / 2.0 && j.len() as f64 <= 2.0 * c + 1.0);
            assert!(j.iter().all(|a| a.order() == (lambda - 2) / 2));
        }
        assert!(counterexample_indices(2, 2).is_err());
    }

    #[test]
    fn norms_agree_two_ways() {
        let b = build_counterexample(301, 1, 0).unwrap();
        for p in ["2", "4", "inf", "3/2"] {
            let a = f_norm_factorized(&b, q(p)).unwrap();
            let g = f_norm_grid(&b, q(p), 4001).unwrap();
            assert!((a - g).abs() < 1e-2 * a, "{p}: {a} vs {g}");
        }
        let b2 = build_counterexample(62, 2, 0).unwrap();
        let a = f_norm_factorized(&b2, q("2")).unwrap();
        let g = f_norm_grid(&b2, q("2"), 401).unwrap();
        assert!((a - g).abs() < 1e-2 * a, "{a} vs {g}");
    }

    #[test]
    fn sup_scan_small_ladders() {
        let lam = lambda_ladder(200.0, 2000.0, 5, 1).unwrap();
        let r = kernel_sup_scan(1, &lam, SupRegion::FixedBox).unwrap();
        assert!(r.pass(), "{:?}", r.fit);
        assert!(kernel_sup_scan(1, &[201], SupRegion::FixedBox).is_err());
    }

    #[test]
    fn zero_window_and_separation() {
        let w = WindowFunction::new(5.0, 0.5, crate::oscillatory::WindowProfile::SmoothBump).unwrap();
        let r = nonstationary_decay_check(&w, &[0.5], &[-0.4], &[8.0, 16.0], None).unwrap();
        assert!(r.rows.iter().all(|x| x.1 == 0.0));
        assert!(r.fit.is_none());
        let (sc, _) = critical_times(&[0.5], &[-0.4]).unwrap();
        let bad = WindowFunction::new(sc, 0.2, crate::oscillatory::WindowProfile::SmoothBump).unwrap();
        assert!(nonstationary_decay_check(&bad, &[0.5], &[-0.4], &[8.0], Some(0.3)).is_err());
    }

    #[test]
    fn operator_norm_oracles() {
        let g = GridFunction::symmetric(1, 4.0, 81).unwrap();
        let id = DiscreteOperator::identity(&g);
        assert!(operator_norm_estimate(&id, q("3"), 8, 0).unwrap() >= 1.0 - 1e-12);
        let u = |x: f64| (-x * x).exp();
        let v = |x: f64| x * (-x * x / 2.0).exp();
        let op = DiscreteOperator::from_kernel(|x, y| Complex64::new(u(x[0]) * v(y[0]), 0.0), &g, &g);
        let est = operator_norm_estimate(&op, q("2"), 4, 3).unwrap();
        let nu = (PI / 2.0).sqrt().sqrt();
        let nv = (PI.sqrt() / 2.0).sqrt();
        assert!((est - nu * nv).abs() < 1e-2 * nu * nv, "{est} vs {}", nu * nv);
    }
}
