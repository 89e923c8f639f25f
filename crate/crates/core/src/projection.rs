//! Hermite spectral projections, Bochner–Riesz kernels and interval Gram matrices.

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::hermite::{hermite_eval, HermiteBank, MultiIndex};
use crate::quadrature::GaussLegendre;
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenLevel {
    pub lambda: usize,
    pub d: usize,
    pub k: usize,
    pub indices: Vec<MultiIndex>,
}

impl EigenLevel {
    pub fn new(lambda: usize, d: usize) -> Result<Self> {
        let k = level_order(lambda, d)?;
        let indices = compositions(k, d).into_iter().map(MultiIndex).collect();
        Ok(Self { lambda, d, k, indices })
    }

    pub fn dimension(&self) -> usize {
        self.indices.len()
    }
}

/// k = (lambda - d)/2, rejecting lambda outside 2N+d.
pub fn level_order(lambda: usize, d: usize) -> Result<usize> {
    if d == 0 || lambda < d || !(lambda - d).is_multiple_of(2) {
        return Err(Error::Parity { lambda: lambda as i64, d });
    }
    Ok((lambda - d) / 2)
}

/// Smallest eigenvalue in 2N+d that is >= value.
pub fn snap_up(value: f64, d: usize) -> usize {
    let d_f = d as f64;
    if value <= d_f {
        return d;
    }
    let k = ((value - d_f) / 2.0).ceil() as usize;
    d + 2 * k
}

/// Compositions of k into d parts, descending lexicographic order.
pub fn compositions(k: usize, d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if d == 0 {
        return out;
    }
    let mut a = vec![0; d];
    a[0] = k;
    loop {
        out.push(a.clone());
        let Some(i) = (0..d - 1).rev().find(|&i| a[i] > 0) else {
            break;
        };
        let tail: usize = a[i + 1..].iter().sum();
        a[i] -= 1;
        for v in a[i + 1..].iter_mut() {
            *v = 0;
        }
        a[i + 1] = tail + 1;
    }
    out
}

pub fn enumerate_eigen_multiindices(lambda: usize, d: usize) -> Result<EigenLevel> {
    EigenLevel::new(lambda, d)
}

/// binomial(n, r) as f64.
pub fn binomial(n: usize, r: usize) -> f64 {
    if r > n {
        return 0.0;
    }
    let r = r.min(n - r);
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Per-axis tables h_0..h_kmax at each coordinate of a point.
pub fn axis_tables(point: &[f64], k_max: usize) -> Result<Vec<Vec<f64>>> {
    point.iter().map(|&t| hermite_eval(k_max, t)).collect()
}

/// Sum over |alpha| = k of prod_i tx[i][alpha_i] * ty[i][alpha_i].
pub fn level_sum(tx: &[Vec<f64>], ty: &[Vec<f64>], k: usize) -> f64 {
    fn rec(axis: usize, remaining: usize, tx: &[Vec<f64>], ty: &[Vec<f64>]) -> f64 {
        if axis + 1 == tx.len() {
            return tx[axis][remaining] * ty[axis][remaining];
        }
        (0..=remaining)
            .rev()
            .map(|a| tx[axis][a] * ty[axis][a] * rec(axis + 1, remaining - a, tx, ty))
            .sum()
    }
    rec(0, k, tx, ty)
}

pub fn hermite_projection_kernel(lambda: usize, d: usize, x: &[f64], y: &[f64]) -> Result<f64> {
    let k = level_order(lambda, d)?;
    check_dims(d, x, y)?;
    let tx = axis_tables(x, k)?;
    let ty = axis_tables(y, k)?;
    Ok(level_sum(&tx, &ty, k))
}

fn check_dims(d: usize, x: &[f64], y: &[f64]) -> Result<()> {
    for p in [x, y] {
        if p.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: p.len() });
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ProjectionOutput {
    pub result: GridFunction,
    /// Grid spacing or extent cannot resolve the eigenfunctions of this level.
    pub undersampled: bool,
}

/// Discrete Pi_lambda f = sum_alpha <f, Phi_alpha>_grid Phi_alpha.
pub fn apply_projection(level: &EigenLevel, f: &GridFunction) -> Result<ProjectionOutput> {
    if f.dim() != level.d {
        return Err(Error::DimensionMismatch { expected: level.d, got: f.dim() });
    }
    let mu = (2.0 * level.k as f64 + 1.0).sqrt();
    let mut undersampled = false;
    let mut banks = Vec::with_capacity(f.dim());
    for a in 0..f.dim() {
        if f.spacing(a) > std::f64::consts::PI / (4.0 * mu) || f.lo[a] > -(mu + 3.0) || f.hi[a] < mu + 3.0 {
            undersampled = true;
        }
        banks.push(HermiteBank::new(level.k, &f.axis_nodes(a))?);
    }
    let mut out = GridFunction::zeros(f.lo.clone(), f.hi.clone(), f.n.clone())?;
    let phi = |alpha: &MultiIndex, flat: usize| -> f64 {
        let idx = f.multi_index(flat);
        (0..f.dim()).map(|a| banks[a].value(idx[a], alpha.0[a])).product()
    };
    for alpha in &level.indices {
        let coeff: Complex64 = (0..f.len()).map(|i| f.values[i] * (phi(alpha, i) * f.weight(i))).sum();
        for i in 0..f.len() {
            out.values[i] += coeff * phi(alpha, i);
        }
    }
    Ok(ProjectionOutput { result: out, undersampled })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RieszWeighting {
    pub lambda: f64,
    pub delta: f64,
}

impl RieszWeighting {
    /// (1 - l/lambda)_+^delta with 0^0 = 1.
    pub fn weight(&self, l: f64) -> f64 {
        if l > self.lambda || self.lambda <= 0.0 {
            return 0.0;
        }
        if self.delta == 0.0 {
            return 1.0;
        }
        (1.0 - l / self.lambda).max(0.0).powf(self.delta)
    }
}

/// Sum over lambda' <= lambda of the Riesz weight times Pi_{lambda'}(x, y).
pub fn bochner_riesz_kernel_h(w: RieszWeighting, d: usize, x: &[f64], y: &[f64]) -> Result<f64> {
    check_dims(d, x, y)?;
    if w.delta < 0.0 {
        return Err(Error::Domain(format!("negative order {}", w.delta)));
    }
    if w.lambda < d as f64 {
        return Ok(0.0);
    }
    let k_top = ((w.lambda - d as f64) / 2.0).floor() as usize;
    let tx = axis_tables(x, k_top)?;
    let ty = axis_tables(y, k_top)?;
    Ok((0..=k_top)
        .map(|k| w.weight((2 * k + d) as f64) * level_sum(&tx, &ty, k))
        .sum())
}

/// Closed-form integral of h_u h_v over [-l, l] for u != v.
pub fn cross_hermite_integral(u: usize, v: usize, l: f64) -> Result<f64> {
    if u == v {
        return Err(Error::Domain("cross integral formula needs u != v".into()));
    }
    if !(l > 0.0) {
        return Err(Error::Domain(format!("half-length must be positive, got {l}")));
    }
    if (u + v) % 2 == 1 {
        return Ok(0.0);
    }
    let h = hermite_eval(u.max(v) + 1, l)?;
    Ok(cross_from_table(&h, u, v, l))
}

fn cross_from_table(h: &[f64], u: usize, v: usize, _l: f64) -> f64 {
    if (u + v) % 2 == 1 {
        return 0.0;
    }
    let num = ((u + 1) as f64).sqrt() * h[u + 1] * h[v] - ((v + 1) as f64).sqrt() * h[u] * h[v + 1];
    2.0 * num / (std::f64::consts::SQRT_2 * (u as f64 - v as f64))
}

/// G[u][v] = integral of h_u h_v over [-l, l] for u, v <= k_max.
pub fn interval_gram(k_max: usize, l: f64) -> Result<Vec<Vec<f64>>> {
    if !(l > 0.0) {
        return Err(Error::Domain(format!("half-length must be positive, got {l}")));
    }
    let h = hermite_eval(k_max + 1, l)?;
    let mut g = vec![vec![0.0; k_max + 1]; k_max + 1];
    for u in 0..=k_max {
        for v in 0..u {
            let c = cross_from_table(&h, u, v, l);
            g[u][v] = c;
            g[v][u] = c;
        }
    }
    let mu = (2.0 * k_max as f64 + 1.0).sqrt();
    if l > mu + 40.0 {
        for (u, row) in g.iter_mut().enumerate() {
            row[u] = 1.0;
        }
        return Ok(g);
    }
    let gl = GaussLegendre::new(16);
    let panels = ((l * (mu + 1.0)) / 2.0).ceil().max(8.0) as usize;
    let width = l / panels as f64;
    let mut nodes = Vec::with_capacity(panels * 16);
    let mut weights = Vec::with_capacity(panels * 16);
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * width;
        for (x, w) in gl.nodes.iter().zip(&gl.weights) {
            nodes.push(mid + 0.5 * width * x);
            weights.push(w * width);
        }
    }
    let bank = HermiteBank::new(k_max, &nodes)?;
    for u in 0..=k_max {
        g[u][u] = (0..nodes.len()).map(|i| weights[i] * bank.value(i, u).powi(2)).sum();
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::hermite_tensor_eval;

    #[test]
    fn enumeration_examples() {
        let l = enumerate_eigen_multiindices(3, 3).unwrap();
        assert_eq!(l.indices, vec![MultiIndex(vec![0, 0, 0])]);
        let l = enumerate_eigen_multiindices(6, 2).unwrap();
        let got: Vec<Vec<usize>> = l.indices.iter().map(|m| m.0.clone()).collect();
        assert_eq!(got, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert!(matches!(enumerate_eigen_multiindices(5, 2), Err(Error::Parity { .. })));
        assert!(enumerate_eigen_multiindices(1, 3).is_err());
    }

    #[test]
    fn level_counts_are_binomial() {
        for d in 1..=4 {
            for k in 0..8 {
                let l = EigenLevel::new(2 * k + d, d).unwrap();
                assert_eq!(l.dimension() as f64, binomial(k + d - 1, d - 1));
                assert!(l.indices.iter().all(|m| m.order() == k));
                assert!(l.indices.windows(2).all(|w| w[0] > w[1]));
            }
        }
    }

    #[test]
    fn projection_kernel_examples() {
        let v = hermite_projection_kernel(1, 1, &[0.0], &[0.0]).unwrap();
        assert!((v - std::f64::consts::PI.powf(-0.5)).abs() < 1e-15);
        let x = [0.3, -0.1];
        let y = [0.2, 0.5];
        let v = hermite_projection_kernel(6, 2, &x, &y).unwrap();
        let mut brute = 0.0;
        for a in 0..=2usize {
            let alpha = MultiIndex(vec![a, 2 - a]);
            brute += hermite_tensor_eval(&alpha, &x).unwrap() * hermite_tensor_eval(&alpha, &y).unwrap();
        }
        assert!((v - brute).abs() < 1e-15);
        let w = hermite_projection_kernel(6, 2, &y, &x).unwrap();
        assert!((v - w).abs() < 1e-15);
        assert!(hermite_projection_kernel(5, 2, &x, &y).is_err());
    }

    #[test]
    fn riesz_examples() {
        let x = [0.2];
        let y = [-0.4];
        let w = RieszWeighting { lambda: 0.9, delta: 0.0 };
        assert_eq!(bochner_riesz_kernel_h(w, 1, &x, &y).unwrap(), 0.0);
        let w = RieszWeighting { lambda: 9.0, delta: 1.0 };
        let v = bochner_riesz_kernel_h(w, 1, &x, &y).unwrap();
        let mut direct = 0.0;
        for k in 0..=4usize {
            let lp = (2 * k + 1) as f64;
            let hx = hermite_eval(k, 0.2).unwrap()[k];
            let hy = hermite_eval(k, -0.4).unwrap()[k];
            direct += (1.0 - lp / 9.0) * hx * hy;
        }
        assert!((v - direct).abs() < 1e-15);
        let w = RieszWeighting { lambda: 9.0, delta: 60.0 };
        let v = bochner_riesz_kernel_h(w, 1, &x, &y).unwrap();
        let lead = (1.0 - 1.0 / 9.0f64).powf(60.0) * hermite_eval(0, 0.2).unwrap()[0] * hermite_eval(0, -0.4).unwrap()[0];
        assert!((v - lead).abs() < 1e-2 * lead.abs());
    }

    #[test]
    fn riesz_zero_order_includes_top_level() {
        let w = RieszWeighting { lambda: 5.0, delta: 0.0 };
        assert_eq!(w.weight(5.0), 1.0);
        assert_eq!(w.weight(5.5), 0.0);
    }

    #[test]
    fn cross_integral_examples() {
        assert_eq!(cross_hermite_integral(1, 2, 1.3).unwrap(), 0.0);
        let gl = GaussLegendre::new(20);
        let q = gl
            .converge(
                |t| {
                    let h = hermite_eval(2, t).unwrap();
                    h[0] * h[2]
                },
                -2.0,
                2.0,
                4,
                1e-15,
                1 << 12,
            )
            .unwrap();
        assert!((cross_hermite_integral(0, 2, 2.0).unwrap() - q).abs() < 1e-10);
        assert!(cross_hermite_integral(0, 2, 40.0).unwrap().abs() < 1e-12);
        assert!(cross_hermite_integral(3, 3, 1.0).is_err());
    }

    #[test]
    fn gram_matches_quadrature() {
        let g = interval_gram(12, 1.7).unwrap();
        let gl = GaussLegendre::new(20);
        for (u, v) in [(0usize, 0usize), (3, 5), (7, 7), (12, 2)] {
            let q = gl
                .converge(
                    |t| {
                        let h = hermite_eval(12, t).unwrap();
                        h[u] * h[v]
                    },
                    -1.7,
                    1.7,
                    8,
                    1e-15,
                    1 << 12,
                )
                .unwrap();
            assert!((g[u][v] - q).abs() < 1e-12, "({u},{v}) {} vs {q}", g[u][v]);
        }
    }

    #[test]
    fn snap_rounds_up() {
        assert_eq!(snap_up(100.0, 1), 101);
        assert_eq!(snap_up(101.0, 1), 101);
        assert_eq!(snap_up(0.0, 2), 2);
        assert_eq!(snap_up(7.0, 2), 8);
    }
}
