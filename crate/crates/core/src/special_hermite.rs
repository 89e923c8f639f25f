//! Laguerre functions, special Hermite functions, twisted convolution and the
//! spectral kernels of the twisted Laplacian on R^{2d}.

use crate::error::{Error, Result};
use crate::fit::{fit_power_law, golden_max, RateFit};
use crate::grid::GridFunction;
use crate::hermite::{HermiteBank, MultiIndex};
use crate::linalg::{dot, sub};
use crate::projection::{binomial, RieszWeighting};
use crate::quadrature::GaussLegendre;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

const RESCALE: f64 = 1e150;

/// Half-dimension d, the skew matrix S = [[0, -I], [I, 0]] and the level lambda = 2k + d.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistedKernelContext {
    pub d: usize,
    pub s: DMatrix<f64>,
    pub k: usize,
    pub lambda: usize,
}

impl TwistedKernelContext {
    pub fn new(lambda: usize, d: usize) -> Result<Self> {
        let k = twisted_level_order(lambda, d)?;
        let s = skew_matrix(d);
        let n = 2 * d;
        assert!((&s + s.transpose()).amax() == 0.0);
        assert!((&s * &s + DMatrix::<f64>::identity(n, n)).amax() == 0.0);
        Ok(Self { d, s, k, lambda })
    }
}

pub fn skew_matrix(d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(2 * d, 2 * d, |i, j| {
        if j == i + d {
            -1.0
        } else if i == j + d {
            1.0
        } else {
            0.0
        }
    })
}

/// S z for z = (x, y): (-y, x).
pub fn apply_skew(z: &[f64]) -> Vec<f64> {
    let d = z.len() / 2;
    z[d..].iter().map(|v| -v).chain(z[..d].iter().copied()).collect()
}

/// <z, S w> = y . w_x - x . w_y
pub fn symplectic_pairing(z: &[f64], w: &[f64]) -> f64 {
    let d = z.len() / 2;
    dot(&z[d..], &w[..d]) - dot(&z[..d], &w[d..])
}

fn twisted_level_order(lambda: usize, d: usize) -> Result<usize> {
    if lambda < d || !(lambda - d).is_multiple_of(2) {
        return Err(Error::Parity { lambda: lambda as i64, d });
    }
    Ok((lambda - d) / 2)
}

/// L_k^alpha(t) by the three-term recurrence.
pub fn laguerre_eval(k: usize, alpha: usize, t: f64) -> f64 {
    let a = alpha as f64;
    let (mut prev, mut cur) = (0.0, 1.0);
    for j in 0..k {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + a - t) * cur - (jf + a) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// phi_0..phi_{k_max} at |z|^2 = r2, phi_k = (2pi)^{-d} L_k^{d-1}(r2/2) e^{-r2/4}.
pub fn laguerre_function_table(k_max: usize, d: usize, r2: f64) -> Result<Vec<f64>> {
    if d == 0 || !(r2 >= 0.0) || !r2.is_finite() {
        return Err(Error::Domain(format!("need d >= 1 and finite |z|^2 >= 0, got d={d}, {r2}")));
    }
    let t = r2 / 2.0;
    let a = (d - 1) as f64;
    let mut log_scale = -r2 / 4.0 - d as f64 * (2.0 * PI).ln();
    let (mut prev, mut cur) = (0.0, 1.0);
    let mut out = Vec::with_capacity(k_max + 1);
    out.push(cur * log_scale.exp());
    for j in 0..k_max {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + a - t) * cur - (jf + a) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            log_scale += RESCALE.ln();
        }
        out.push(cur * log_scale.exp());
    }
    Ok(out)
}

pub fn phi_k(k: usize, d: usize, z: &[f64]) -> Result<f64> {
    if z.len() != 2 * d {
        return Err(Error::DimensionMismatch { expected: 2 * d, got: z.len() });
    }
    Ok(laguerre_function_table(k, d, dot(z, z))?[k])
}

/// ||phi_k||_{L^2(R^{2d})} by radial Gauss–Legendre quadrature.
pub fn laguerre_l2_norm(k: usize, d: usize) -> Result<f64> {
    let sphere = 2.0 * PI.powi(d as i32) / (1..d).map(|j| j as f64).product::<f64>();
    let r_max = 2.0 * ((2 * k + d) as f64).sqrt() + 16.0;
    let gl = GaussLegendre::new(20);
    let panels = 2 * k + 32;
    let integral = gl.composite(
        |r| {
            let v = laguerre_function_table(k, d, r * r).map(|t| t[k]).unwrap_or(f64::NAN);
            v * v * r.powi(2 * d as i32 - 1)
        },
        0.0,
        r_max,
        panels,
    );
    if !integral.is_finite() {
        return Err(Error::NonConvergence { last: integral, previous: f64::NAN });
    }
    Ok((sphere * integral).sqrt())
}

/// All 1D Fourier–Wigner values (2pi)^{-1/2} integral e^{i x s} h_a(s - y/2) h_b(s + y/2) ds
/// for a, b <= n_max, by the trapezoid rule on a window covering both Hermite supports.
pub fn fourier_wigner_table(n_max: usize, x: f64, y: f64) -> Result<Vec<Vec<Complex64>>> {
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::Domain(format!("non-finite point ({x}, {y})")));
    }
    let mu = ((2 * n_max + 1) as f64).sqrt();
    let reach = y.abs() / 2.0 + mu + 10.0;
    let step = 2.0 * PI / (2.0 * mu + x.abs() + 24.0);
    let count = (2.0 * reach / step).ceil() as usize + 1;
    let h = 2.0 * reach / (count - 1) as f64;
    let nodes: Vec<f64> = (0..count).map(|i| -reach + i as f64 * h).collect();
    let left: Vec<f64> = nodes.iter().map(|s| s - y / 2.0).collect();
    let right: Vec<f64> = nodes.iter().map(|s| s + y / 2.0).collect();
    let bl = HermiteBank::new(n_max, &left)?;
    let br = HermiteBank::new(n_max, &right)?;
    let mut out = vec![vec![Complex64::new(0.0, 0.0); n_max + 1]; n_max + 1];
    for (i, s) in nodes.iter().enumerate() {
        let e = Complex64::from_polar(h / (2.0 * PI).sqrt(), x * s);
        let rl = bl.row(i);
        let rr = br.row(i);
        for a in 0..=n_max {
            let ea = e * rl[a];
            for b in 0..=n_max {
                out[a][b] += ea * rr[b];
            }
        }
    }
    Ok(out)
}

/// Phi_{alpha, beta}(z), z = (x, y) in R^{2d}, as a product of 1D Fourier–Wigner integrals.
pub fn fourier_wigner(alpha: &MultiIndex, beta: &MultiIndex, z: &[f64]) -> Result<Complex64> {
    let d = alpha.dim();
    if beta.dim() != d || z.len() != 2 * d {
        return Err(Error::DimensionMismatch { expected: 2 * d, got: z.len() });
    }
    let mut v = Complex64::new(1.0, 0.0);
    for j in 0..d {
        let n = alpha.0[j].max(beta.0[j]);
        v *= fourier_wigner_table(n, z[j], z[d + j])?[alpha.0[j]][beta.0[j]];
    }
    Ok(v)
}

/// f x g (z) = sum_w f(z - w) g(w) e^{-(i/2)<z, S w>} with trapezoid weights on a common lattice grid.
pub fn twisted_convolution(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    if !f.same_grid(g) {
        return Err(Error::Grid("twisted convolution needs a common grid".into()));
    }
    if !f.is_lattice() || !f.dim().is_multiple_of(2) {
        return Err(Error::Grid("need a symmetric odd-size grid on R^{2d}".into()));
    }
    let dim = f.dim();
    let centre: Vec<i64> = f.n.iter().map(|&n| ((n - 1) / 2) as i64).collect();
    let support: Vec<(Vec<i64>, Complex64, Vec<f64>)> = (0..g.len())
        .filter(|&i| g.values[i] != Complex64::new(0.0, 0.0))
        .map(|i| {
            let iw = g.multi_index(i).iter().map(|&v| v as i64).collect();
            (iw, g.values[i] * g.weight(i), apply_skew(&g.point(i)))
        })
        .collect();
    let values: Vec<Complex64> = (0..f.len())
        .into_par_iter()
        .map(|zi| {
            let iz = f.multi_index(zi);
            let z = f.point(zi);
            let mut diff = vec![0usize; dim];
            let mut acc = Complex64::new(0.0, 0.0);
            'w: for (iw, gw, sw) in &support {
                for a in 0..dim {
                    let j = iz[a] as i64 - iw[a] + centre[a];
                    if j < 0 || j >= f.n[a] as i64 {
                        continue 'w;
                    }
                    diff[a] = j as usize;
                }
                let twist = Complex64::from_polar(1.0, -0.5 * dot(&z, sw));
                acc += f.values[f.flat_index(&diff)] * gw * twist;
            }
            acc
        })
        .collect();
    Ok(GridFunction { values, ..f.clone() })
}

/// phi_k(z - z') e^{(i/2)<z, S z'>}, k = (lambda - d)/2.
pub fn special_projection_kernel(lambda: usize, d: usize, z: &[f64], zp: &[f64]) -> Result<Complex64> {
    let k = twisted_level_order(lambda, d)?;
    check_points(d, z, zp)?;
    let v = sub(z, zp);
    let p = laguerre_function_table(k, d, dot(&v, &v))?[k];
    Ok(Complex64::from_polar(1.0, 0.5 * symplectic_pairing(z, zp)) * p)
}

fn check_points(d: usize, z: &[f64], zp: &[f64]) -> Result<()> {
    for p in [z, zp] {
        if p.len() != 2 * d {
            return Err(Error::DimensionMismatch { expected: 2 * d, got: p.len() });
        }
    }
    Ok(())
}

/// Sum over lambda' <= lambda of the Riesz weight times the special projection kernel.
pub fn bochner_riesz_kernel_l(w: RieszWeighting, d: usize, z: &[f64], zp: &[f64]) -> Result<Complex64> {
    check_points(d, z, zp)?;
    if w.delta < 0.0 {
        return Err(Error::Domain(format!("negative order {}", w.delta)));
    }
    if w.lambda < d as f64 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let k_top = ((w.lambda - d as f64) / 2.0).floor() as usize;
    let v = sub(z, zp);
    let table = laguerre_function_table(k_top, d, dot(&v, &v))?;
    let s: f64 = (0..=k_top).map(|k| w.weight((2 * k + d) as f64) * table[k]).sum();
    Ok(Complex64::from_polar(1.0, 0.5 * symplectic_pairing(z, zp)) * s)
}

/// max over r of |phi_k| on the ray r e_1 and its exact value at the origin.
pub fn special_kernel_sup(lambda: usize, d: usize) -> Result<f64> {
    let k = twisted_level_order(lambda, d)?;
    let at = |r: f64| laguerre_function_table(k, d, r * r).map(|t| t[k].abs()).unwrap_or(0.0);
    let r_max = 2.0 * (lambda as f64).sqrt() + 8.0;
    let n = 64 * (k + 4);
    let h = r_max / n as f64;
    let mut best = (0.0, at(0.0));
    for i in 1..=n {
        let v = at(i as f64 * h);
        if v > best.1 {
            best = (i as f64 * h, v);
        }
    }
    let (lo, hi) = ((best.0 - h).max(0.0), best.0 + h);
    Ok(golden_max(at, lo, hi, 1e-10).1.max(best.1))
}

/// Fitted exponent of sup_z |Pi_lambda(z, 0)| against lambda.
pub fn sup_kernel_bound_l(lambdas: &[usize], d: usize) -> Result<RateFit> {
    if lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("lambda list must increase".into()));
    }
    let points = lambdas
        .par_iter()
        .map(|&l| Ok((l as f64, special_kernel_sup(l, d)?)))
        .collect::<Result<Vec<_>>>()?;
    fit_power_law(&points)
}

/// phi_k(0) = (2pi)^{-d} binom(k + d - 1, k).
pub fn phi_k_at_origin(k: usize, d: usize) -> f64 {
    binomial(k + d - 1, k) / (2.0 * PI).powi(d as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    /// Exact L_k^alpha coefficients: sum_j (-1)^j binom(k+alpha, k-j) t^j / j!.
    fn laguerre_exact(k: usize, alpha: usize, t: &BigRational) -> BigRational {
        use num_rational::BigRational as Q;
        let big = |v: u64| Q::from_integer(v.into());
        let choose = |n: u64, r: u64| -> Q { (0..r).fold(big(1), |acc, i| acc * big(n - i) / big(i + 1)) };
        let mut sum = big(0);
        let mut pow = big(1);
        let mut fact = big(1);
        for j in 0..=k as u64 {
            if j > 0 {
                pow *= t;
                fact *= big(j);
            }
            let term = choose(k as u64 + alpha as u64, k as u64 - j) * &pow / &fact;
            sum = if j % 2 == 0 { sum + term } else { sum - term };
        }
        sum
    }

    #[test]
    fn laguerre_matches_exact_polynomials() {
        use num_traits::ToPrimitive;
        let t = BigRational::new(13.into(), 10.into());
        let exact = laguerre_exact(5, 2, &t).to_f64().unwrap();
        assert!((laguerre_eval(5, 2, 1.3) - exact).abs() < 1e-12);
        for k in 0..12 {
            for alpha in 0..4 {
                let t = BigRational::new(37.into(), 7.into());
                let e = laguerre_exact(k, alpha, &t).to_f64().unwrap();
                assert!((laguerre_eval(k, alpha, 37.0 / 7.0) - e).abs() < 1e-10 * (1.0 + e.abs()));
            }
        }
        assert_eq!(laguerre_eval(0, 3, 2.0), 1.0);
        assert!((laguerre_eval(1, 3, 2.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn scaled_table_agrees_with_plain_recurrence() {
        let table = laguerre_function_table(40, 2, 9.0).unwrap();
        for k in [0, 7, 40] {
            let plain = laguerre_eval(k, 1, 4.5) * (-2.25f64).exp() / (2.0 * PI).powi(2);
            assert!((table[k] - plain).abs() < 1e-13 * (1.0 + plain.abs()));
        }
        let far = laguerre_function_table(300, 2, 4000.0).unwrap();
        assert!(far.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn origin_values() {
        for d in 1..=3 {
            for k in [0, 1, 5, 30] {
                let z = vec![0.0; 2 * d];
                assert!((phi_k(k, d, &z).unwrap() - phi_k_at_origin(k, d)).abs() < 1e-13 * phi_k_at_origin(k, d));
            }
        }
        let z = [0.7, -0.2];
        assert!((phi_k(0, 1, &z).unwrap() - (-dot(&z, &z) / 4.0).exp() / (2.0 * PI)).abs() < 1e-16);
    }

    #[test]
    fn l2_norm_squared_equals_origin_value() {
        for (k, d) in [(0, 1), (3, 1), (10, 2), (25, 2)] {
            let n = laguerre_l2_norm(k, d).unwrap();
            assert!((n * n - phi_k_at_origin(k, d)).abs() < 1e-10 * phi_k_at_origin(k, d), "{k} {d}");
        }
    }

    #[test]
    fn skew_structure() {
        let c = TwistedKernelContext::new(7, 1).unwrap();
        assert_eq!(c.k, 3);
        assert!(TwistedKernelContext::new(6, 1).is_err());
        let z = [0.3, -1.1, 2.0, 0.4];
        assert_eq!(symplectic_pairing(&z, &z), 0.0);
        let s = skew_matrix(2);
        let sz: Vec<f64> = (0..4).map(|i| (0..4).map(|j| s[(i, j)] * z[j]).sum()).collect();
        assert_eq!(sz, apply_skew(&z));
    }

    #[test]
    fn fourier_wigner_ground_state() {
        let v = fourier_wigner(&MultiIndex(vec![0]), &MultiIndex(vec![0]), &[0.0, 0.0]).unwrap();
        assert!((v - Complex64::new(1.0 / (2.0 * PI).sqrt(), 0.0)).norm() < 1e-13);
        // Phi_00(x, y) = (2pi)^{-1/2} e^{-(x^2 + y^2)/4}
        let v = fourier_wigner(&MultiIndex(vec![0]), &MultiIndex(vec![0]), &[0.8, -1.3]).unwrap();
        let e = (-(0.64 + 1.69) / 4.0f64).exp() / (2.0 * PI).sqrt();
        assert!((v - Complex64::new(e, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn diagonal_sum_reproduces_laguerre_function() {
        for &(x, y) in &[(0.4, -0.9), (2.5, 1.0), (0.0, 3.0)] {
            let table = fourier_wigner_table(10, x, y).unwrap();
            let phis = laguerre_function_table(10, 1, x * x + y * y).unwrap();
            for k in 0..=10 {
                let s = table[k][k] / (2.0 * PI).sqrt();
                assert!((s - Complex64::new(phis[k], 0.0)).norm() < 1e-6, "{k}: {s} vs {}", phis[k]);
            }
        }
    }

    #[test]
    fn projection_kernel_matches_eigenfunction_sum() {
        let z = [0.5, -0.3];
        let zp = [-0.2, 0.6];
        let tz = fourier_wigner_table(60, z[0], z[1]).unwrap();
        let tzp = fourier_wigner_table(60, zp[0], zp[1]).unwrap();
        for k in 0..=5 {
            let sum: Complex64 = (0..=60).map(|a| tz[a][k] * tzp[a][k].conj()).sum();
            let kernel = special_projection_kernel(2 * k + 1, 1, &z, &zp).unwrap();
            assert!((sum - kernel).norm() < 1e-4, "{k}: {sum} vs {kernel}");
        }
    }

    #[test]
    fn kernel_modulus_and_riesz_sum() {
        let z = [0.5, -0.3, 0.1, 0.2];
        let zp = [-0.2, 0.6, 0.0, 1.0];
        let k = special_projection_kernel(8, 2, &z, &z).unwrap();
        assert!((k.norm() - phi_k_at_origin(3, 2)).abs() < 1e-14);
        let shift = [1.0, 2.0, -1.0, 0.5];
        let a = special_projection_kernel(8, 2, &z, &zp).unwrap().norm();
        let b = special_projection_kernel(8, 2, &crate::linalg::add(&z, &shift), &crate::linalg::add(&zp, &shift))
            .unwrap()
            .norm();
        assert!((a - b).abs() < 1e-15);
        let w = RieszWeighting { lambda: 10.0, delta: 1.0 };
        let (z1, z2) = ([0.3, 0.2], [-0.4, 0.1]);
        let direct: Complex64 = (0..=4)
            .map(|k| special_projection_kernel(2 * k + 1, 1, &z1, &z2).unwrap() * (1.0 - (2 * k + 1) as f64 / 10.0))
            .sum();
        assert!((bochner_riesz_kernel_l(w, 1, &z1, &z2).unwrap() - direct).norm() < 1e-15);
        let below = RieszWeighting { lambda: 0.9, delta: 1.0 };
        assert_eq!(bochner_riesz_kernel_l(below, 1, &z1, &z2).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn sup_bound_exponents() {
        let d1 = sup_kernel_bound_l(&[21, 41, 81, 161, 321], 1).unwrap();
        assert!(d1.within(0.0, 0.05), "{d1:?}");
        let d2 = sup_kernel_bound_l(&[22, 42, 82, 162, 322], 2).unwrap();
        assert!(d2.within(1.0, 0.1), "{d2:?}");
        assert!(sup_kernel_bound_l(&[21], 1).is_err());
    }
}
