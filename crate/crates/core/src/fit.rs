//! Log-log power-law fits and small 1D optimizers.

use crate::error::{Error, Result};

/// Least-squares fit of log(value) = intercept + slope * log(lambda).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n: usize,
}

impl RateFit {
    pub fn predict(&self, lambda: f64) -> f64 {
        (self.intercept + self.slope * lambda.ln()).exp()
    }

    pub fn within(&self, expected: f64, tol: f64) -> bool {
        (self.slope - expected).abs() <= tol
    }
}

pub fn fit_power_law(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 2 {
        return Err(Error::Fit(format!("need at least 2 points, got {}", points.len())));
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(l, v) in points {
        if !(l > 0.0) || !(v > 0.0) || !l.is_finite() || !v.is_finite() {
            return Err(Error::Domain(format!("non-positive point ({l}, {v})")));
        }
        xs.push(l.ln());
        ys.push(v.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-24 {
        return Err(Error::Fit("all abscissae coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if ss_tot <= 1e-300 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RateFit { slope, intercept, r2, n: points.len() })
}

/// Golden-section search for a maximum of a unimodal function on [a, b].
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iters = 0;
    while (b - a).abs() > tol && iters < 200 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        iters += 1;
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Grid search followed by golden refinement around the best node.
pub fn grid_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> (f64, f64) {
    let n = n.max(2);
    let h = (b - a) / (n - 1) as f64;
    let mut best = (a, f(a));
    for i in 1..n {
        let t = a + i as f64 * h;
        let v = f(t);
        if v > best.1 {
            best = (t, v);
        }
    }
    let lo = (best.0 - h).max(a);
    let hi = (best.0 + h).min(b);
    let refined = golden_max(&mut f, lo, hi, 1e-13 * (1.0 + best.0.abs()));
    if refined.1 > best.1 {
        refined
    } else {
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = [10.0, 20.0, 55.0, 300.0].iter().map(|&l: &f64| (l, 2.5 * l.powf(-0.75))).collect();
        let f = fit_power_law(&pts).unwrap();
        assert!((f.slope + 0.75).abs() < 1e-12);
        assert!((f.intercept - 2.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn two_points_interpolate() {
        let f = fit_power_law(&[(2.0, 3.0), (8.0, 5.0)]).unwrap();
        assert_eq!(f.r2, 1.0);
        assert!((f.predict(8.0) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(fit_power_law(&[(2.0, 3.0)]).is_err());
        assert!(fit_power_law(&[(2.0, 3.0), (2.0, 4.0)]).is_err());
        assert!(matches!(fit_power_law(&[(2.0, 0.0), (3.0, 1.0)]), Err(Error::Domain(_))));
    }

    #[test]
    fn noisy_slope() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<(f64, f64)> = (0..40)
            .map(|i| {
                let l = 100.0 * 1.1f64.powi(i);
                let noise = 1.0 + 0.01 * (rng.random::<f64>() * 2.0 - 1.0);
                (l, 3.0 * l.powf(-1.0 / 6.0) * noise)
            })
            .collect();
        let f = fit_power_law(&pts).unwrap();
        assert!((f.slope + 1.0 / 6.0).abs() < 0.01);
    }

    #[test]
    fn golden_finds_peak() {
        let (x, v) = golden_max(|t| -(t - 0.3).powi(2) + 1.0, -1.0, 2.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((v - 1.0).abs() < 1e-12);
    }
}
