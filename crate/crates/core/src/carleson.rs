//! Carleson–Sjölin rank and curvature checks for phases phi(x, xi), x in R^d, xi in R^{d-1}.

use crate::error::{Error, Result};
use crate::linalg::{dot, right_null_vector, singular_values, sym_eigenvalues};
use crate::phase_h::{grad_x_phi, hessian_fd};
use nalgebra::DMatrix;

pub trait PhaseSampler {
    /// (dim of x, dim of xi)
    fn dims(&self) -> (usize, usize);
    fn value(&self, x: &[f64], xi: &[f64]) -> Result<f64>;
    /// Gradient in x; central differences unless overridden.
    fn grad_x(&self, x: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
        let h = f64::EPSILON.powf(1.0 / 3.0);
        (0..x.len())
            .map(|j| {
                let mut p = x.to_vec();
                let mut m = x.to_vec();
                p[j] += h;
                m[j] -= h;
                Ok((self.value(&p, xi)? - self.value(&m, xi)?) / (2.0 * h))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsVerdict {
    pub c1_rank: usize,
    pub c2_rank: usize,
    pub c1: Option<bool>,
    pub c2: Option<bool>,
    pub c3: Option<bool>,
    pub mixed_singular_values: Vec<f64>,
    pub curvature_eigenvalues: Vec<f64>,
    pub null_direction: Vec<f64>,
}

impl CsVerdict {
    pub fn all_pass(&self) -> bool {
        self.c1 == Some(true) && self.c2 == Some(true) && self.c3 == Some(true)
    }

    pub fn indeterminate(&self) -> bool {
        self.c1.is_none() || self.c2.is_none() || self.c3.is_none()
    }
}

const RANK_TOL: f64 = 1e-6;
const GAP: f64 = 1e2;

/// Numerical rank by relative threshold; None when a value sits inside the ambiguity band.
fn numerical_rank(values: &[f64]) -> (usize, bool) {
    let top = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if top == 0.0 {
        return (0, true);
    }
    let cut = RANK_TOL * top;
    let rank = values.iter().filter(|v| v.abs() > cut).count();
    let ambiguous = values.iter().any(|v| v.abs() > cut / GAP && v.abs() < cut * GAP);
    (rank, !ambiguous)
}

pub fn carleson_sjolin_check<P: PhaseSampler + ?Sized>(phase: &P, x0: &[f64], xi0: &[f64]) -> Result<CsVerdict> {
    let (d, m) = phase.dims();
    if x0.len() != d || xi0.len() != m {
        return Err(Error::DimensionMismatch { expected: d + m, got: x0.len() + xi0.len() });
    }
    let h = f64::EPSILON.powf(1.0 / 3.0);
    // rows xi_i, columns x_j
    let mut mixed = DMatrix::zeros(m, d);
    for i in 0..m {
        let mut p = xi0.to_vec();
        let mut q = xi0.to_vec();
        p[i] += h;
        q[i] -= h;
        let gp = phase.grad_x(x0, &p)?;
        let gq = phase.grad_x(x0, &q)?;
        for j in 0..d {
            mixed[(i, j)] = (gp[j] - gq[j]) / (2.0 * h);
        }
    }
    let sv = singular_values(&mixed);
    let (c1_rank, c1_clear) = numerical_rank(&sv);
    let c1 = c1_clear.then_some(c1_rank == d - 1);
    let nu = right_null_vector(&mixed);
    let curv = hessian_fd(|xi| Ok(dot(&phase.grad_x(x0, xi)?, &nu)), xi0)?;
    let ev = sym_eigenvalues(&curv);
    let (c2_rank, c2_clear) = numerical_rank(&ev);
    let c2 = c2_clear.then_some(c2_rank == d - 1);
    let top = ev.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let nonzero: Vec<f64> = ev.iter().copied().filter(|v| v.abs() > RANK_TOL * top).collect();
    let c3 = c2_clear.then(|| nonzero.iter().all(|v| *v > 0.0) || nonzero.iter().all(|v| *v < 0.0));
    Ok(CsVerdict {
        c1_rank,
        c2_rank,
        c1,
        c2,
        c3,
        mixed_singular_values: sv,
        curvature_eigenvalues: ev,
        null_direction: nu,
    })
}

/// <x', xi> + x_d * q(xi) / 2 with q = |xi|^2 (elliptic) or xi_1^2 - xi_2^2 + ... (indefinite).
#[derive(Debug, Clone, Copy)]
pub struct QuadricModel {
    pub d: usize,
    pub elliptic: bool,
}

impl QuadricModel {
    fn quad(&self, xi: &[f64]) -> f64 {
        xi.iter()
            .enumerate()
            .map(|(i, v)| if self.elliptic || i % 2 == 0 { v * v } else { -v * v })
            .sum()
    }
}

impl PhaseSampler for QuadricModel {
    fn dims(&self) -> (usize, usize) {
        (self.d, self.d - 1)
    }

    fn value(&self, x: &[f64], xi: &[f64]) -> Result<f64> {
        Ok(dot(&x[..self.d - 1], xi) + x[self.d - 1] * self.quad(xi) / 2.0)
    }

    fn grad_x(&self, _x: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
        let mut g = xi.to_vec();
        g.push(self.quad(xi) / 2.0);
        Ok(g)
    }
}

/// The Hermite critical value with the last y-coordinate frozen: phi(x, xi) = Phi_H(x, (xi, y_d)).
#[derive(Debug, Clone, Copy)]
pub struct FrozenHermitePhase {
    pub y_last: f64,
    pub d: usize,
}

impl FrozenHermitePhase {
    pub fn new(y_last: f64, d: usize) -> Self {
        Self { y_last, d }
    }

    fn full_y(&self, xi: &[f64]) -> Vec<f64> {
        let mut y = xi.to_vec();
        y.push(self.y_last);
        y
    }
}

impl PhaseSampler for FrozenHermitePhase {
    fn dims(&self) -> (usize, usize) {
        (self.d, self.d - 1)
    }

    fn value(&self, x: &[f64], xi: &[f64]) -> Result<f64> {
        crate::phase_h::phase_value_phi(x, &self.full_y(xi))
    }

    fn grad_x(&self, x: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
        grad_x_phi(x, &self.full_y(xi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paraboloid_passes() {
        for d in [2, 3, 4] {
            let m = QuadricModel { d, elliptic: true };
            let v = carleson_sjolin_check(&m, &vec![0.1; d], &vec![0.2; d - 1]).unwrap();
            assert!(v.all_pass(), "{v:?}");
        }
    }

    #[test]
    fn hyperbolic_fails_only_sign_condition() {
        let m = QuadricModel { d: 3, elliptic: false };
        let v = carleson_sjolin_check(&m, &[0.0, 0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(v.c1, Some(true));
        assert_eq!(v.c2, Some(true));
        assert_eq!(v.c3, Some(false));
    }

    #[test]
    fn default_gradient_agrees() {
        struct ValueOnly(QuadricModel);
        impl PhaseSampler for ValueOnly {
            fn dims(&self) -> (usize, usize) {
                self.0.dims()
            }
            fn value(&self, x: &[f64], xi: &[f64]) -> Result<f64> {
                self.0.value(x, xi)
            }
        }
        let v = carleson_sjolin_check(&ValueOnly(QuadricModel { d: 3, elliptic: true }), &[0.1, 0.2, 0.3], &[0.3, -0.2]).unwrap();
        assert!(v.all_pass(), "{v:?}");
    }

    #[test]
    fn rank_deficient_phase_fails_c1() {
        struct Flat;
        impl PhaseSampler for Flat {
            fn dims(&self) -> (usize, usize) {
                (3, 2)
            }
            fn value(&self, x: &[f64], xi: &[f64]) -> Result<f64> {
                Ok(x[0] * xi[0] + x[2] * xi[0] * xi[0])
            }
        }
        let v = carleson_sjolin_check(&Flat, &[0.1, 0.2, 0.3], &[0.3, -0.2]).unwrap();
        assert_ne!(v.c1, Some(true));
    }
}
