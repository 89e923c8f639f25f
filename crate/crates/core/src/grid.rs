//! Complex samples on a uniform tensor-product grid with trapezoid weights.

use crate::error::{Error, Result};
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub n: Vec<usize>,
    /// Row-major, last axis fastest.
    pub values: Vec<Complex64>,
}

impl GridFunction {
    pub fn zeros(lo: Vec<f64>, hi: Vec<f64>, n: Vec<usize>) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != n.len() || lo.is_empty() {
            return Err(Error::Grid("axis specifications disagree".into()));
        }
        if n.iter().any(|&m| m < 2) || lo.iter().zip(&hi).any(|(a, b)| !(b > a)) {
            return Err(Error::Grid("each axis needs n >= 2 and lo < hi".into()));
        }
        let total = n.iter().product();
        Ok(Self { lo, hi, n, values: vec![Complex64::new(0.0, 0.0); total] })
    }

    /// Symmetric cube [-half, half]^dim.
    pub fn symmetric(dim: usize, half: f64, n: usize) -> Result<Self> {
        Self::zeros(vec![-half; dim], vec![half; dim], vec![n; dim])
    }

    pub fn from_fn<F: FnMut(&[f64]) -> Complex64>(lo: Vec<f64>, hi: Vec<f64>, n: Vec<usize>, mut f: F) -> Result<Self> {
        let mut g = Self::zeros(lo, hi, n)?;
        let mut p = vec![0.0; g.dim()];
        for i in 0..g.values.len() {
            g.point_into(i, &mut p);
            g.values[i] = f(&p);
        }
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.n[axis] - 1) as f64
    }

    pub fn axis_nodes(&self, axis: usize) -> Vec<f64> {
        let h = self.spacing(axis);
        (0..self.n[axis]).map(|i| self.lo[axis] + i as f64 * h).collect()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            idx[a] = flat % self.n[a];
            flat /= self.n[a];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.n).fold(0, |acc, (i, n)| acc * n + i)
    }

    pub fn point_into(&self, flat: usize, out: &mut [f64]) {
        let idx = self.multi_index(flat);
        for a in 0..self.dim() {
            out[a] = self.lo[a] + idx[a] as f64 * self.spacing(a);
        }
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dim()];
        self.point_into(flat, &mut p);
        p
    }

    /// Trapezoid weight of a grid node.
    pub fn weight(&self, flat: usize) -> f64 {
        let idx = self.multi_index(flat);
        let mut w = 1.0;
        for a in 0..self.dim() {
            let h = self.spacing(a);
            w *= if idx[a] == 0 || idx[a] == self.n[a] - 1 { 0.5 * h } else { h };
        }
        w
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.lo == other.lo && self.hi == other.hi && self.n == other.n
    }

    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if !self.same_grid(other) {
            return Err(Error::Grid("inner product on different grids".into()));
        }
        Ok((0..self.len())
            .map(|i| self.values[i].conj() * other.values[i] * self.weight(i))
            .sum())
    }

    pub fn norm_l2(&self) -> f64 {
        (0..self.len())
            .map(|i| self.values[i].norm_sqr() * self.weight(i))
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm_lp(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        }
        (0..self.len())
            .map(|i| self.values[i].norm().powf(p) * self.weight(i))
            .sum::<f64>()
            .powf(1.0 / p)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::Grid("difference on different grids".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a -= b;
        }
        Ok(out)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= c;
        }
        out
    }

    /// Lattice grids are symmetric about 0 with an odd node count, so differences of nodes are nodes.
    pub fn is_lattice(&self) -> bool {
        self.lo.iter().zip(&self.hi).all(|(a, b)| (a + b).abs() < 1e-12 * b.abs().max(1.0))
            && self.n.iter().all(|m| m % 2 == 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let g = GridFunction::zeros(vec![0.0, -1.0, 2.0], vec![1.0, 1.0, 3.0], vec![3, 4, 5]).unwrap();
        for f in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(f)), f);
        }
        assert_eq!(g.point(g.len() - 1), vec![1.0, 1.0, 3.0]);
    }

    #[test]
    fn gaussian_norm() {
        let g = GridFunction::from_fn(vec![-10.0, -10.0], vec![10.0, 10.0], vec![201, 201], |p| {
            Complex64::new((-(p[0] * p[0] + p[1] * p[1]) / 2.0).exp(), 0.0)
        })
        .unwrap();
        let n2 = g.norm_l2().powi(2);
        assert!((n2 - std::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_axes() {
        assert!(GridFunction::zeros(vec![0.0], vec![0.0], vec![4]).is_err());
        assert!(GridFunction::zeros(vec![0.0], vec![1.0], vec![1]).is_err());
    }
}
