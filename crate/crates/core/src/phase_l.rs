//! Phase geometry of the twisted propagator: P_L(t, z, z') = t + |z - z'|^2 cot t / 4 + <z, S z'>/2.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, orthonormal_complement, outer, scale, sub};
use crate::phase_h::hessian_fd;
use crate::special_hermite::{apply_skew, skew_matrix, symplectic_pairing};
use nalgebra::DMatrix;
use std::f64::consts::PI;

/// Points with |z - z'| above this are rejected as ill-conditioned.
pub const EDGE_MARGIN: f64 = 1e-2;

fn check_time(t: f64) -> Result<()> {
    let distance = (t - (t / PI).round() * PI).abs();
    if distance < 1e-12 {
        return Err(Error::Singularity { t, distance });
    }
    Ok(())
}

fn check_pair(z: &[f64], zp: &[f64]) -> Result<()> {
    if z.len() != zp.len() || z.is_empty() || !z.len().is_multiple_of(2) {
        return Err(Error::DimensionMismatch { expected: z.len(), got: zp.len() });
    }
    Ok(())
}

pub fn phase_l(t: f64, z: &[f64], zp: &[f64]) -> Result<f64> {
    check_pair(z, zp)?;
    check_time(t)?;
    let v = sub(z, zp);
    Ok(t + dot(&v, &v) * t.cos() / (4.0 * t.sin()) + 0.5 * symplectic_pairing(z, zp))
}

/// 1 - |z - z'|^2 / (4 sin^2 t)
pub fn dphase_l(t: f64, z: &[f64], zp: &[f64]) -> Result<f64> {
    check_pair(z, zp)?;
    check_time(t)?;
    let v = sub(z, zp);
    Ok(1.0 - dot(&v, &v) / (4.0 * t.sin().powi(2)))
}

/// (arcsin(|v|/2), pi - arcsin(|v|/2)) for 0 < |v| < 2.
pub fn critical_times_l(z: &[f64], zp: &[f64]) -> Result<(f64, f64)> {
    check_pair(z, zp)?;
    let r = norm(&sub(z, zp));
    if !(r > 0.0 && r < 2.0) {
        return Err(Error::Region(format!("|z - z'| = {r} has no critical time in (0, pi/2)")));
    }
    let sc = (r / 2.0).asin();
    Ok((sc, PI - sc))
}

/// Critical times with the conditioning margin near |v| = 2 enforced.
fn conditioned(z: &[f64], zp: &[f64]) -> Result<(f64, Vec<f64>)> {
    let (sc, _) = critical_times_l(z, zp)?;
    let v = sub(z, zp);
    if norm(&v) > 2.0 - EDGE_MARGIN {
        return Err(Error::Degenerate(format!("|z - z'| = {} within {EDGE_MARGIN} of 2", norm(&v))));
    }
    Ok((sc, v))
}

/// cos S_c I - sin S_c S
pub fn rotation_r(z: &[f64], zp: &[f64]) -> Result<DMatrix<f64>> {
    let (sc, _) = critical_times_l(z, zp)?;
    let n = z.len();
    Ok(DMatrix::identity(n, n) * sc.cos() - skew_matrix(n / 2) * sc.sin())
}

/// P_L at the first critical time.
pub fn phase_value_l(z: &[f64], zp: &[f64]) -> Result<f64> {
    let (sc, _) = critical_times_l(z, zp)?;
    phase_l(sc, z, zp)
}

/// Gradient in z of the critical value: cos S_c v/|v| + S z'/2.
pub fn grad_z_phase_value_l(z: &[f64], zp: &[f64]) -> Result<Vec<f64>> {
    let (sc, _) = critical_times_l(z, zp)?;
    let v = sub(z, zp);
    let r = norm(&v);
    let szp = apply_skew(zp);
    Ok(v.iter().zip(&szp).map(|(a, b)| sc.cos() * a / r + 0.5 * b).collect())
}

/// Entry (i, j) = d/dz'_i d/dz_j of the critical value:
/// (v v^T - cos^2 |v|^2 I - sin cos |v|^2 S) / (|v|^3 cos).
pub fn mixed_hessian_l(z: &[f64], zp: &[f64]) -> Result<DMatrix<f64>> {
    let (sc, v) = conditioned(z, zp)?;
    let n = z.len();
    let vv = dot(&v, &v);
    let (s, c) = sc.sin_cos();
    let m = outer(&v, &v) - DMatrix::identity(n, n) * (c * c * vv) - skew_matrix(n / 2) * (s * c * vv);
    Ok(m / (vv.powf(1.5) * c))
}

/// Same orientation as `mixed_hessian_l`, by central differences of the analytic gradient.
pub fn mixed_hessian_l_fd(z: &[f64], zp: &[f64]) -> Result<DMatrix<f64>> {
    conditioned(z, zp)?;
    let n = z.len();
    let h = 1e-5;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut p = zp.to_vec();
        let mut q = zp.to_vec();
        p[i] += h;
        q[i] -= h;
        let gp = grad_z_phase_value_l(z, &p)?;
        let gq = grad_z_phase_value_l(z, &q)?;
        for j in 0..n {
            m[(i, j)] = (gp[j] - gq[j]) / (2.0 * h);
        }
    }
    Ok(m)
}

/// Unit null direction R v / |v| of the mixed Hessian.
pub fn null_vector_l(z: &[f64], zp: &[f64]) -> Result<Vec<f64>> {
    let (sc, v) = conditioned(z, zp)?;
    let sv = apply_skew(&v);
    let r = norm(&v);
    Ok(v.iter().zip(&sv).map(|(a, b)| (sc.cos() * a - sc.sin() * b) / r).collect())
}

/// v v^T - 2 cos^2 v v^T + cos^2 |v|^2 I + sin cos (v v^T S - S v v^T)
pub fn curvature_matrix_l(z: &[f64], zp: &[f64]) -> Result<DMatrix<f64>> {
    let (sc, v) = conditioned(z, zp)?;
    let n = z.len();
    let (s, c) = sc.sin_cos();
    let vvt = outer(&v, &v);
    let sk = skew_matrix(n / 2);
    Ok(&vvt * (1.0 - 2.0 * c * c) + DMatrix::identity(n, n) * (c * c * dot(&v, &v)) + (&vvt * &sk - &sk * &vvt) * (s * c))
}

/// Hessian in w at w = z' of <grad_z Phi_L(z, w), nu(z, z')>; equals -M / (cos^2 S_c |v|^4).
pub fn curvature_matrix_l_fd(z: &[f64], zp: &[f64]) -> Result<DMatrix<f64>> {
    let nu = null_vector_l(z, zp)?;
    hessian_fd(|w| Ok(dot(&grad_z_phase_value_l(z, w)?, &nu)), zp)
}

#[derive(Debug, Clone)]
pub struct PhaseReportL {
    pub s_c: f64,
    pub v: Vec<f64>,
    pub r: DMatrix<f64>,
    pub nu: Vec<f64>,
    pub mixed_hessian: DMatrix<f64>,
    pub m: DMatrix<f64>,
    /// Columns: frame of (span{v, Sv})^perp, then Sv/|v|, then v/|v|.
    pub b: DMatrix<f64>,
    pub diagonalized: DMatrix<f64>,
    /// Distinct diagonal values (within 1e-9 relative) with multiplicities, in diagonal order.
    pub eigenvalues: Vec<(f64, usize)>,
    pub off_diagonal_max: f64,
    /// Largest deviation of the diagonal from (|v|^2 cos^2 x (2d-2), |v|^2, 0).
    pub diagonal_err: f64,
}

pub fn diagonalization_check_l(z: &[f64], zp: &[f64]) -> Result<PhaseReportL> {
    let (sc, v) = conditioned(z, zp)?;
    let n = z.len();
    let r_len = norm(&v);
    let sv = apply_skew(&v);
    let mut cols = orthonormal_complement(&[v.clone(), sv.clone()], n);
    cols.push(scale(&sv, 1.0 / r_len));
    cols.push(scale(&v, 1.0 / r_len));
    let b = DMatrix::from_fn(n, n, |i, j| cols[j][i]);
    let r = rotation_r(z, zp)?;
    let m = curvature_matrix_l(z, zp)?;
    let diagonalized = b.transpose() * &r * &m * r.transpose() * &b;
    let mut off_diagonal_max: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off_diagonal_max = off_diagonal_max.max(diagonalized[(i, j)].abs());
            }
        }
    }
    let vv = dot(&v, &v);
    let expected: Vec<f64> = (0..n)
        .map(|i| if i + 2 < n { vv * sc.cos().powi(2) } else if i + 2 == n { vv } else { 0.0 })
        .collect();
    let diagonal_err = (0..n).fold(0.0f64, |a, i| a.max((diagonalized[(i, i)] - expected[i]).abs()));
    let mut eigenvalues: Vec<(f64, usize)> = Vec::new();
    for i in 0..n {
        let val = diagonalized[(i, i)];
        match eigenvalues.iter_mut().find(|(e, _)| (e - val).abs() <= 1e-9 * vv) {
            Some(slot) => slot.1 += 1,
            None => eigenvalues.push((val, 1)),
        }
    }
    Ok(PhaseReportL {
        s_c: sc,
        v,
        nu: null_vector_l(z, zp)?,
        mixed_hessian: mixed_hessian_l(z, zp)?,
        r,
        m,
        b,
        diagonalized,
        eigenvalues,
        off_diagonal_max,
        diagonal_err,
    })
}
