//! Small dense vector and matrix helpers on top of nalgebra.

use nalgebra::DMatrix;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// alpha * a + beta * b
pub fn lin(alpha: f64, a: &[f64], beta: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| alpha * x + beta * y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| s * x).collect()
}

pub fn outer(a: &[f64], b: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| a[i] * b[j])
}

pub fn mat_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum()).collect()
}

pub fn vec_mat(v: &[f64], m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.ncols()).map(|j| (0..m.nrows()).map(|i| v[i] * m[(i, j)]).sum()).collect()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn max_abs_matrix(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Householder reflection P with P u = e_last for a unit vector u.
pub fn householder_to_last(u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    let mut w = u.to_vec();
    w[n - 1] -= 1.0;
    let ww = dot(&w, &w);
    if ww < 1e-28 {
        return DMatrix::identity(n, n);
    }
    DMatrix::identity(n, n) - outer(&w, &w) * (2.0 / ww)
}

/// Orthonormal vectors spanning the complement of span(basis), by Gram–Schmidt on the
/// standard basis taking the least-degenerate candidate first.
pub fn orthonormal_complement(basis: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    for b in basis {
        let mut v = b.clone();
        for q in &ortho {
            let c = dot(q, &v);
            v = lin(1.0, &v, -c, q);
        }
        let nv = norm(&v);
        if nv > 1e-12 {
            ortho.push(scale(&v, 1.0 / nv));
        }
    }
    let target = n - ortho.len();
    let mut out: Vec<Vec<f64>> = Vec::new();
    while out.len() < target {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for i in 0..n {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            for q in ortho.iter().chain(out.iter()) {
                let c = dot(q, &v);
                v = lin(1.0, &v, -c, q);
            }
            let nv = norm(&v);
            if best.as_ref().is_none_or(|(m, _)| nv > *m) {
                best = Some((nv, v));
            }
        }
        let (nv, v) = best.expect("nonempty candidate set");
        out.push(scale(&v, 1.0 / nv));
    }
    out
}

/// Eigenvalues of the symmetric part, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let s = (m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = s.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Singular values, descending.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// Unit vector minimizing |m v| (right null direction of a possibly wide matrix).
pub fn right_null_vector(m: &DMatrix<f64>) -> Vec<f64> {
    let g = m.transpose() * m;
    let eig = g.symmetric_eigen();
    let mut idx = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] < eig.eigenvalues[idx] {
            idx = i;
        }
    }
    eig.eigenvectors.column(idx).iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn householder_sends_vector_to_last_axis() {
        let u = [0.6, 0.0, 0.8];
        let p = householder_to_last(&u);
        let pu = mat_vec(&p, &u);
        assert!((pu[2] - 1.0).abs() < 1e-15 && pu[0].abs() < 1e-15);
        let ptp = p.transpose() * &p;
        assert!((ptp - DMatrix::identity(3, 3)).amax() < 1e-15);
    }

    #[test]
    fn complement_is_orthonormal() {
        let b = vec![vec![1.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, -1.0]];
        let c = orthonormal_complement(&b, 4);
        assert_eq!(c.len(), 2);
        for v in &c {
            assert!((norm(v) - 1.0).abs() < 1e-14);
            for w in &b {
                assert!(dot(v, w).abs() < 1e-14);
            }
        }
        assert!(dot(&c[0], &c[1]).abs() < 1e-14);
    }

    #[test]
    fn null_vector_of_wide_matrix() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        let v = right_null_vector(&m);
        assert!(max_abs(&mat_vec(&m, &v)) < 1e-14);
        assert!((norm(&v) - 1.0).abs() < 1e-14);
    }
}
