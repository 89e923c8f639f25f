//! Phase geometry of the scaled Hermite kernel: discriminant, critical times,
//! the vectors a and b, the critical value, mixed Hessian and curvature matrix.

use crate::carleson::{carleson_sjolin_check, CsVerdict, FrozenHermitePhase};
use crate::error::{Error, Result};
use crate::linalg::{dot, householder_to_last, lin, mat_vec, norm, outer, sub, sym_eigenvalues, vec_mat};
use nalgebra::DMatrix;
use rand::Rng;

/// The admissible set {|x|, |y| <= 1 - c0, D(x, y) > c0^2} in R^d x R^d.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionSpec {
    pub c0: f64,
    pub d: usize,
}

impl RegionSpec {
    pub fn new(c0: f64, d: usize) -> Result<Self> {
        if !(c0 > 0.0 && c0 < 1.0) || d == 0 {
            return Err(Error::Domain(format!("need 0 < c0 < 1 and d >= 1, got c0={c0}, d={d}")));
        }
        Ok(Self { c0, d })
    }

    pub fn contains(&self, x: &[f64], y: &[f64]) -> bool {
        let r = 1.0 - self.c0;
        x.len() == self.d
            && y.len() == self.d
            && norm(x) <= r
            && norm(y) <= r
            && discriminant(x, y) > self.c0 * self.c0
    }

    /// Rejection sample from the box [-(1 - c0), 1 - c0]^{2d}.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        let r = 1.0 - self.c0;
        loop {
            let x: Vec<f64> = (0..self.d).map(|_| rng.random_range(-r..=r)).collect();
            let y: Vec<f64> = (0..self.d).map(|_| rng.random_range(-r..=r)).collect();
            if self.contains(&x, &y) {
                return (x, y);
            }
        }
    }

    /// Points of the dilated sets E_lambda, F_lambda.
    pub fn dilate(&self, lambda: f64, p: &[f64]) -> Vec<f64> {
        p.iter().map(|v| v * lambda.sqrt()).collect()
    }
}

/// 1 + <x,y>^2 - |x|^2 - |y|^2.
pub fn discriminant(x: &[f64], y: &[f64]) -> f64 {
    let xy = dot(x, y);
    1.0 + xy * xy - dot(x, x) - dot(y, y)
}

fn checked_sqrt_disc(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    let dd = discriminant(x, y);
    if !(dd > 0.0) {
        return Err(Error::Region(format!("discriminant {dd} is not positive")));
    }
    Ok(dd.sqrt())
}

/// (S_c, S_*) = (arccos(<x,y> + sqrt D), arccos(<x,y> - sqrt D)).
pub fn critical_times(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let sd = checked_sqrt_disc(x, y)?;
    let xy = dot(x, y);
    let (c1, c2) = (xy + sd, xy - sd);
    if !(c1.abs() <= 1.0 && c2.abs() <= 1.0) {
        return Err(Error::Region(format!("cosines {c1}, {c2} leave [-1, 1]")));
    }
    Ok((c1.acos(), c2.acos()))
}

/// |x - y| sqrt((1 - <x,y> + sqrt D) / (1 + <x,y> + sqrt D)).
pub fn sin_critical_closed_form(x: &[f64], y: &[f64]) -> Result<f64> {
    let sd = checked_sqrt_disc(x, y)?;
    let xy = dot(x, y);
    Ok(norm(&sub(x, y)) * ((1.0 - xy + sd) / (1.0 + xy + sd)).sqrt())
}

fn check_time(t: f64) -> Result<f64> {
    let s = t.sin();
    let distance = (t - (t / std::f64::consts::PI).round() * std::f64::consts::PI).abs();
    if distance < 1e-12 {
        return Err(Error::Singularity { t, distance });
    }
    Ok(s)
}

/// t/2 + (|x|^2 + |y|^2) cos t / (2 sin t) - <x,y> / sin t.
pub fn phase_h(t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    let s = check_time(t)?;
    Ok(0.5 * t + (dot(x, x) + dot(y, y)) * t.cos() / (2.0 * s) - dot(x, y) / s)
}

/// Expanded derivative in t.
pub fn dphase_h(t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    let s = check_time(t)?;
    let c = t.cos();
    Ok(-(c * c - 2.0 * dot(x, y) * c + dot(x, x) + dot(y, y) - 1.0) / (2.0 * s * s))
}

/// Factorized derivative -(cos t - cos S_c)(cos t - cos S_*)/(2 sin^2 t).
pub fn dphase_h_factorized(t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    let s = check_time(t)?;
    let sd = checked_sqrt_disc(x, y)?;
    let xy = dot(x, y);
    let c = t.cos();
    Ok(-(c - xy - sd) * (c - xy + sd) / (2.0 * s * s))
}

/// Second t-derivative -Q / sin^3 t, Q = <x,y> cos^2 t - (|x|^2+|y|^2) cos t + <x,y>.
pub fn d2phase_h(t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    let s = check_time(t)?;
    let c = t.cos();
    let xy = dot(x, y);
    let q = xy * c * c - (dot(x, x) + dot(y, y)) * c + xy;
    Ok(-q / (s * s * s))
}

/// a = cos S_c x - y, b = x - cos S_c y.
pub fn vectors_ab(x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let (sc, _) = critical_times(x, y)?;
    let c = sc.cos();
    Ok((lin(c, x, -1.0, y), lin(1.0, x, -c, y)))
}

/// Residuals of |a|^2 = (1-|x|^2) sin^2 S_c, |b|^2 = (1-|y|^2) sin^2 S_c, <a,b> = sqrt D sin^2 S_c.
pub fn ab_identity_residuals(x: &[f64], y: &[f64]) -> Result<[f64; 3]> {
    let (sc, _) = critical_times(x, y)?;
    let (a, b) = vectors_ab(x, y)?;
    let s2 = sc.sin().powi(2);
    Ok([
        (dot(&a, &a) - (1.0 - dot(x, x)) * s2).abs(),
        (dot(&b, &b) - (1.0 - dot(y, y)) * s2).abs(),
        (dot(&a, &b) - discriminant(x, y).sqrt() * s2).abs(),
    ])
}

/// Critical value P_H(S_c, x, y).
pub fn phase_value_phi(x: &[f64], y: &[f64]) -> Result<f64> {
    let (sc, _) = critical_times(x, y)?;
    phase_h(sc, x, y)
}

/// The simplified critical value (S_c - cos S_* sin S_c)/2.
pub fn phase_value_phi_reduced(x: &[f64], y: &[f64]) -> Result<f64> {
    let (sc, ss) = critical_times(x, y)?;
    Ok(0.5 * (sc - ss.cos() * sc.sin()))
}

/// Gradient of the critical value in x: a / sin S_c.
pub fn grad_x_phi(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let (sc, _) = critical_times(x, y)?;
    let c = sc.cos();
    Ok(lin(c, x, -1.0, y).iter().map(|v| v / sc.sin()).collect())
}

/// Entry (i, j) = d/dy_i d/dx_j of the critical value: (a b^T - <a,b> I)/(sin^3 S_c sqrt D).
pub fn mixed_hessian_h(x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
    let (sc, _) = critical_times(x, y)?;
    let (a, b) = vectors_ab(x, y)?;
    if norm(&a) < 1e-10 || norm(&b) < 1e-10 {
        return Err(Error::Degenerate("x is too close to +-y".into()));
    }
    let d = x.len();
    let ab = dot(&a, &b);
    let scale = 1.0 / (sc.sin().powi(3) * discriminant(x, y).sqrt());
    Ok((outer(&a, &b) - DMatrix::identity(d, d) * ab) * scale)
}

/// Four-point central difference of the critical value in (y_i, x_j).
pub fn mixed_hessian_h_fd(x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
    let d = x.len();
    let h = f64::EPSILON.powf(0.25) * 0.5;
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for (sx, sy, w) in [(1.0, 1.0, 1.0), (-1.0, 1.0, -1.0), (1.0, -1.0, -1.0), (-1.0, -1.0, 1.0)] {
                let mut xp = x.to_vec();
                let mut yp = y.to_vec();
                xp[j] += sx * h;
                yp[i] += sy * h;
                s += w * phase_value_phi(&xp, &yp)?;
            }
            m[(i, j)] = s / (4.0 * h * h);
        }
    }
    Ok(m)
}

/// Closed-form curvature matrix (<a,b> I - a b^T)(b a^T - cos S_c a a^T - <a,b> I)/(omega <a,b>).
pub fn curvature_matrix_m(x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
    let (sc, _) = critical_times(x, y)?;
    let (a, b) = vectors_ab(x, y)?;
    if norm(&a) < 1e-10 {
        return Err(Error::Degenerate("a vanishes".into()));
    }
    let d = x.len();
    let ab = dot(&a, &b);
    let id = DMatrix::identity(d, d);
    let omega = ((1.0 - dot(x, x)) * discriminant(x, y)).sqrt() * sc.sin().powi(4);
    let left = &id * ab - outer(&a, &b);
    let right = outer(&b, &a) - outer(&a, &a) * sc.cos() - &id * ab;
    Ok(left * right / (omega * ab))
}

/// Hessian in z at z = y of <grad_x Phi(x, z), a/|a|> by central differences.
pub fn curvature_matrix_fd(x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
    let (a, _) = vectors_ab(x, y)?;
    let na = norm(&a);
    let u: Vec<f64> = a.iter().map(|v| v / na).collect();
    let f = |z: &[f64]| -> Result<f64> { Ok(dot(&grad_x_phi(x, z)?, &u)) };
    hessian_fd(f, y)
}

pub(crate) fn hessian_fd<F: Fn(&[f64]) -> Result<f64>>(f: F, at: &[f64]) -> Result<DMatrix<f64>> {
    let d = at.len();
    let h = f64::EPSILON.powf(0.25) * 0.5;
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for (si, sj, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                let mut z = at.to_vec();
                z[i] += si * h;
                z[j] += sj * h;
                s += w * f(&z)?;
            }
            m[(i, j)] = s / (4.0 * h * h);
        }
    }
    Ok(m)
}

#[derive(Debug, Clone)]
pub struct PhaseReportH {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub discriminant: f64,
    pub s_c: f64,
    pub s_star: f64,
    pub a_vec: Vec<f64>,
    pub b_vec: Vec<f64>,
    pub phi: f64,
    pub mixed_hessian: DMatrix<f64>,
    pub m: DMatrix<f64>,
    /// Eigenvalues of the reduced (d-1)x(d-1) block after rotating b to e_d, ascending.
    pub eigenvalues: Vec<f64>,
    /// (|lambda_1|, |lambda_2|) from the closed forms.
    pub predicted_moduli: (f64, f64),
    /// Worst relative mismatch between sorted moduli and the predicted multiset.
    pub eigen_rel_err: f64,
    pub all_negative: bool,
    pub cs_verdict: Option<CsVerdict>,
}

/// Predicted moduli sqrt(1-|x|^2)(1-|y|^2)/(sin^2 S_c D) and 1/(sqrt(1-|x|^2) sin^2 S_c).
pub fn predicted_curvature_moduli(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let (sc, _) = critical_times(x, y)?;
    let s2 = sc.sin().powi(2);
    let dd = discriminant(x, y);
    let rx = (1.0 - dot(x, x)).sqrt();
    Ok((rx * (1.0 - dot(y, y)) / (s2 * dd), 1.0 / (rx * s2)))
}

pub fn curvature_eigen_report(x: &[f64], y: &[f64]) -> Result<PhaseReportH> {
    let d = x.len();
    if d < 2 {
        return Err(Error::Domain("curvature block needs d >= 2".into()));
    }
    let (s_c, s_star) = critical_times(x, y)?;
    let (a, b) = vectors_ab(x, y)?;
    let nb = norm(&b);
    if nb < 1e-12 {
        return Err(Error::Degenerate("b vanishes; rotation undefined".into()));
    }
    let p = householder_to_last(&b.iter().map(|v| v / nb).collect::<Vec<_>>());
    let xr = mat_vec(&p, x);
    let yr = mat_vec(&p, y);
    let m = curvature_matrix_m(x, y)?;
    let mr = curvature_matrix_m(&xr, &yr)?;
    let block = mr.view((0, 0), (d - 1, d - 1)).into_owned();
    let eigenvalues = sym_eigenvalues(&block);
    let scale = crate::linalg::max_abs_matrix(&mr).max(1e-300);
    let all_negative = eigenvalues.iter().all(|&e| e < -1e-9 * scale);
    let (l1, l2) = predicted_curvature_moduli(x, y)?;
    let mut predicted: Vec<f64> = std::iter::once(l1).chain(std::iter::repeat_n(l2, d - 2)).collect();
    predicted.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let mut moduli: Vec<f64> = eigenvalues.iter().map(|e| e.abs()).collect();
    moduli.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let eigen_rel_err = moduli
        .iter()
        .zip(&predicted)
        .map(|(m, p)| (m - p).abs() / p)
        .fold(0.0, f64::max);
    let frozen = FrozenHermitePhase::new(yr[d - 1], d);
    let cs_verdict = carleson_sjolin_check(&frozen, &xr, &yr[..d - 1]).ok();
    Ok(PhaseReportH {
        x: x.to_vec(),
        y: y.to_vec(),
        discriminant: discriminant(x, y),
        s_c,
        s_star,
        a_vec: a,
        b_vec: b,
        phi: phase_value_phi(x, y)?,
        mixed_hessian: mixed_hessian_h(x, y)?,
        m,
        eigenvalues,
        predicted_moduli: (l1, l2),
        eigen_rel_err,
        all_negative,
        cs_verdict,
    })
}

/// Residual |M b| and |b^T M| relative to |M||b|.
pub fn curvature_kernel_residual(x: &[f64], y: &[f64]) -> Result<f64> {
    let m = curvature_matrix_m(x, y)?;
    let (_, b) = vectors_ab(x, y)?;
    let r1 = norm(&mat_vec(&m, &b));
    let r2 = norm(&vec_mat(&b, &m));
    Ok(r1.max(r2) / (crate::linalg::max_abs_matrix(&m) * norm(&b)).max(1e-300))
}
