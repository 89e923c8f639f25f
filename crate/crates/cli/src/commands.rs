//! The subcommands: each turns a config into CSV tables whose `pass` columns decide the exit code.

use crate::config::{RunConfig, Scan};
use crate::report::{flag, num, Table};
use hrl_core::experiments::{
    build_counterexample, exponent_table, f_norm_factorized, f_norm_grid, full_ladder, hermite_equivalence,
    kernel_sup_scan, lambda_ladder, projection_rate_experiment, ratio_to_f64, stationary_phase_ladder,
    twisted_equivalence, RateReport, RateRow, SupRegion, DEFAULT_SLOPE_TOL,
};
use hrl_core::fit::fit_power_law;
use hrl_core::hermite::hermite_gram;
use hrl_core::linalg::{mat_vec, max_abs_matrix, norm, vec_mat};
use hrl_core::oscillatory::{WindowFunction, WindowProfile};
use hrl_core::phase_h::{
    ab_identity_residuals, curvature_eigen_report, curvature_kernel_residual, mixed_hessian_h, mixed_hessian_h_fd,
    vectors_ab, RegionSpec,
};
use hrl_core::phase_l::{diagonalization_check_l, mixed_hessian_l, mixed_hessian_l_fd, null_vector_l, EDGE_MARGIN};
use hrl_core::projection::{bochner_riesz_kernel_h, hermite_projection_kernel, snap_up, RieszWeighting};
use hrl_core::special_hermite::{laguerre_l2_norm, special_kernel_sup};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    BasisVerify,
    KernelEval,
    PhaseReport,
    Equivalence,
    Rates,
    Counterexample,
    Exponents,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::BasisVerify => "basis-verify",
            Self::KernelEval => "kernel-eval",
            Self::PhaseReport => "phase-report",
            Self::Equivalence => "equivalence",
            Self::Rates => "rates",
            Self::Counterexample => "counterexample",
            Self::Exponents => "exponents",
        }
    }
}

#[derive(Debug)]
pub enum RunError {
    /// Bad input the user can fix; exit 2.
    Usage(String),
    /// A computation could not finish; exit 1.
    Compute(hrl_core::Error),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) => f.write_str(m),
            Self::Compute(e) => write!(f, "{e}"),
        }
    }
}

impl From<hrl_core::Error> for RunError {
    fn from(e: hrl_core::Error) -> Self {
        Self::Compute(e)
    }
}

type Res<T> = std::result::Result<T, RunError>;

#[derive(Debug, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub warnings: Vec<String>,
}

impl Outcome {
    pub fn failures(&self) -> Vec<String> {
        self.tables
            .iter()
            .flat_map(|t| t.failing_rows().into_iter().map(move |r| format!("{}: {}", t.file, r.join(","))))
            .collect()
    }
}

pub fn run(cmd: Command, c: &RunConfig) -> Res<Outcome> {
    let mut out = Outcome::default();
    match cmd {
        Command::BasisVerify => basis_verify(c, &mut out)?,
        Command::KernelEval => kernel_eval(c, &mut out)?,
        Command::PhaseReport => phase_report(c, &mut out)?,
        Command::Equivalence => equivalence(c, &mut out)?,
        Command::Rates => rates(c, &mut out)?,
        Command::Counterexample => counterexample(c, &mut out)?,
        Command::Exponents => exponents(c, &mut out)?,
    }
    Ok(out)
}

/// Levels 2N + d from an explicit list or the configured ladder, snapped up with warnings.
pub fn levels(c: &RunConfig, default_count: usize, warnings: &mut Vec<String>) -> Res<Vec<usize>> {
    let d = c.dim;
    let mut snap = |v: f64, what: &str| {
        let s = snap_up(v, d);
        if s as f64 != v {
            warnings.push(format!("{what} {v} is not in 2N + {d}; using {s}"));
        }
        s
    };
    if let Some(list) = &c.lambdas {
        let mut v: Vec<usize> = list.iter().map(|&l| snap(l, "lambda")).collect();
        v.sort_unstable();
        v.dedup();
        return Ok(v);
    }
    let lo = snap(c.lambda_min, "lambda_min") as f64;
    let hi = c.lambda_max;
    Ok(match c.lambda_count.unwrap_or(default_count) {
        0 => full_ladder(lo, hi, d)?,
        n => lambda_ladder(lo, hi, n, d)?,
    })
}

fn basis_verify(c: &RunConfig, out: &mut Outcome) -> Res<()> {
    let tol = c.tol.unwrap_or(1e-8);
    let g = hermite_gram(c.kmax)?;
    let mut t = Table::new("basis.csv", &["k", "kmax", "row_residual", "tol", "pass"]);
    for (j, row) in g.iter().enumerate() {
        let r = row
            .iter()
            .enumerate()
            .map(|(k, v)| (v - if j == k { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        t.push(vec![j.to_string(), c.kmax.to_string(), num(r), num(tol), flag(r < tol)]);
    }
    out.tables.push(t);
    Ok(())
}

fn coord_header(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}_{i}")).collect()
}

fn kernel_eval(c: &RunConfig, out: &mut Outcome) -> Res<()> {
    let d = c.dim;
    let tol = c.tol.unwrap_or(1e-9);
    let lambdas = levels(c, 4, &mut out.warnings)?;
    let region = RegionSpec::new(c.c0, d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let points: Vec<(Vec<f64>, Vec<f64>)> = (0..c.samples).map(|_| region.sample(&mut rng)).collect();
    let mut header: Vec<String> = ["lambda", "dim", "delta", "sample"].iter().map(|s| s.to_string()).collect();
    header.extend(coord_header("x", d));
    header.extend(coord_header("y", d));
    for h in ["projection", "projection_xx", "projection_yy", "riesz", "cauchy_schwarz_slack", "tol", "pass"] {
        header.push(h.into());
    }
    let mut t = Table::with_header("kernel.csv", header);
    let jobs: Vec<(usize, usize)> =
        lambdas.iter().flat_map(|&l| (0..points.len()).map(move |i| (l, i))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(l, i)| -> Res<Vec<String>> {
            let x = region.dilate(l as f64, &points[i].0);
            let y = region.dilate(l as f64, &points[i].1);
            let pxy = hermite_projection_kernel(l, d, &x, &y)?;
            let pxx = hermite_projection_kernel(l, d, &x, &x)?;
            let pyy = hermite_projection_kernel(l, d, &y, &y)?;
            let riesz = bochner_riesz_kernel_h(RieszWeighting { lambda: l as f64, delta: c.delta }, d, &x, &y)?;
            let slack = pxx * pyy - pxy * pxy;
            let pass = pxx >= 0.0 && pyy >= 0.0 && slack >= -tol * (pxx * pyy).max(1e-300);
            let mut row = vec![l.to_string(), d.to_string(), num(c.delta), i.to_string()];
            row.extend(x.iter().chain(&y).map(|v| num(*v)));
            row.extend([num(pxy), num(pxx), num(pyy), num(riesz), num(slack), num(tol), flag(pass)]);
            Ok(row)
        })
        .collect::<Res<Vec<_>>>()?;
    for r in rows {
        t.push(r);
    }
    out.tables.push(t);
    Ok(())
}

fn rel_matrix_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    max_abs_matrix(&(a - b)) / max_abs_matrix(a).max(1e-300)
}

const AB_TOL: f64 = 1e-12;
const FD_TOL: f64 = 1e-4;
const NULL_TOL: f64 = 1e-10;
const EIGEN_TOL: f64 = 1e-8;
const FRAME_TOL: f64 = 1e-10;

/// Checks on the Hermite critical-value phase at one point of the admissible region.
#[derive(Debug, Clone)]
pub struct HermitePhaseRow {
    pub ab_residual: f64,
    pub mixed_fd_rel_err: f64,
    pub null_residual: f64,
    pub kernel_residual: f64,
    pub eigen_rel_err: f64,
    pub all_negative: bool,
    pub cs_pass: bool,
    pub report: hrl_core::phase_h::PhaseReportH,
}

impl HermitePhaseRow {
    pub fn pass(&self) -> bool {
        self.ab_residual < AB_TOL
            && self.mixed_fd_rel_err < FD_TOL
            && self.null_residual < NULL_TOL
            && self.kernel_residual < NULL_TOL
            && self.eigen_rel_err < EIGEN_TOL
            && self.all_negative
            && self.cs_pass
    }
}

pub fn hermite_phase_row(x: &[f64], y: &[f64]) -> Res<HermitePhaseRow> {
    let ab_residual = ab_identity_residuals(x, y)?.iter().fold(0.0, |a: f64, v| a.max(*v));
    let h = mixed_hessian_h(x, y)?;
    let mixed_fd_rel_err = rel_matrix_err(&h, &mixed_hessian_h_fd(x, y)?);
    let (a, b) = vectors_ab(x, y)?;
    let scale = max_abs_matrix(&h).max(1e-300);
    let null_residual = (norm(&mat_vec(&h, &a)) / norm(&a)).max(norm(&vec_mat(&b, &h)) / norm(&b)) / scale;
    let report = curvature_eigen_report(x, y)?;
    Ok(HermitePhaseRow {
        ab_residual,
        mixed_fd_rel_err,
        null_residual,
        kernel_residual: curvature_kernel_residual(x, y)?,
        eigen_rel_err: report.eigen_rel_err,
        all_negative: report.all_negative,
        cs_pass: report.cs_verdict.as_ref().is_some_and(|v| v.all_pass()),
        report,
    })
}

/// Checks on the twisted critical-value phase at one pair.
#[derive(Debug, Clone)]
pub struct TwistedPhaseRow {
    pub v_norm: f64,
    pub s_c: f64,
    pub diagonal: Vec<f64>,
    pub off_diagonal_max: f64,
    pub diagonal_err: f64,
    pub mixed_fd_rel_err: f64,
    pub null_residual: f64,
}

impl TwistedPhaseRow {
    pub fn pass(&self) -> bool {
        self.off_diagonal_max < FRAME_TOL
            && self.diagonal_err < FRAME_TOL
            && self.mixed_fd_rel_err < FD_TOL
            && self.null_residual < NULL_TOL
    }
}

pub fn twisted_phase_row(z: &[f64], zp: &[f64]) -> Res<TwistedPhaseRow> {
    let rep = diagonalization_check_l(z, zp)?;
    let h = mixed_hessian_l(z, zp)?;
    let nu = null_vector_l(z, zp)?;
    Ok(TwistedPhaseRow {
        v_norm: norm(&rep.v),
        s_c: rep.s_c,
        diagonal: (0..z.len()).map(|i| rep.diagonalized[(i, i)]).collect(),
        off_diagonal_max: rep.off_diagonal_max,
        diagonal_err: rep.diagonal_err,
        mixed_fd_rel_err: rel_matrix_err(&h, &mixed_hessian_l_fd(z, zp)?),
        null_residual: norm(&mat_vec(&h, &nu)) / max_abs_matrix(&h).max(1e-300),
    })
}

/// A pair (z, z') in R^{2d} with |z - z'| spread over (0.1, 2 - margin).
pub fn sample_twisted_pair<R: Rng>(d: usize, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let n = 2 * d;
    let z: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    loop {
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let r = norm(&u);
        if !(r > 0.1 && r <= 1.0) {
            continue;
        }
        let len = rng.random_range(0.1..(2.0 - 2.0 * EDGE_MARGIN));
        let zp = z.iter().zip(&u).map(|(a, b)| a - len * b / r).collect();
        return (z, zp);
    }
}

fn phase_report(c: &RunConfig, out: &mut Outcome) -> Res<()> {
    let d = c.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    if d >= 2 {
        let region = RegionSpec::new(c.c0, d)?;
        let points: Vec<(Vec<f64>, Vec<f64>)> = (0..c.samples).map(|_| region.sample(&mut rng)).collect();
        let mut header: Vec<String> = vec!["sample".into()];
        header.extend(coord_header("x", d));
        header.extend(coord_header("y", d));
        header.extend(["D", "S_c", "S_star"].map(String::from));
        header.extend(coord_header("eig", d - 1));
        for h in [
            "predicted_1",
            "predicted_2",
            "ab_residual",
            "mixed_fd_rel_err",
            "null_residual",
            "curvature_kernel_residual",
            "eigen_rel_err",
            "all_negative",
            "cs_pass",
            "tol_ab",
            "tol_fd",
            "tol_null",
            "tol_eigen",
            "pass",
        ] {
            header.push(h.into());
        }
        let mut t = Table::with_header("phase.csv", header);
        let rows = points
            .par_iter()
            .map(|(x, y)| hermite_phase_row(x, y))
            .collect::<Res<Vec<_>>>()?;
        for (i, r) in rows.iter().enumerate() {
            let rep = &r.report;
            let mut row = vec![i.to_string()];
            row.extend(rep.x.iter().chain(&rep.y).map(|v| num(*v)));
            row.extend([num(rep.discriminant), num(rep.s_c), num(rep.s_star)]);
            row.extend(rep.eigenvalues.iter().map(|v| num(*v)));
            row.extend([
                num(rep.predicted_moduli.0),
                num(rep.predicted_moduli.1),
                num(r.ab_residual),
                num(r.mixed_fd_rel_err),
                num(r.null_residual),
                num(r.kernel_residual),
                num(r.eigen_rel_err),
                flag(r.all_negative),
                flag(r.cs_pass),
                num(AB_TOL),
                num(FD_TOL),
                num(NULL_TOL),
                num(EIGEN_TOL),
                flag(r.pass()),
            ]);
            t.push(row);
        }
        out.tables.push(t);
    } else {
        out.warnings.push("phase.csv needs dim >= 2; writing the twisted report only".into());
    }
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..c.samples).map(|_| sample_twisted_pair(d, &mut rng)).collect();
    let mut header: Vec<String> = vec!["sample".into()];
    header.extend(coord_header("z", 2 * d));
    header.extend(coord_header("zp", 2 * d));
    header.extend(["v_norm", "S_c"].map(String::from));
    header.extend(coord_header("diag", 2 * d));
    for h in ["off_diagonal_max", "diagonal_err", "mixed_fd_rel_err", "null_residual", "tol_frame", "tol_fd", "tol_null", "pass"] {
        header.push(h.into());
    }
    let mut t = Table::with_header("phase_twisted.csv", header);
    let rows = pairs.par_iter().map(|(z, zp)| twisted_phase_row(z, zp)).collect::<Res<Vec<_>>>()?;
    for (i, ((z, zp), r)) in pairs.iter().zip(&rows).enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(z.iter().chain(zp).map(|v| num(*v)));
        row.extend([num(r.v_norm), num(r.s_c)]);
        row.extend(r.diagonal.iter().map(|v| num(*v)));
        row.extend([
            num(r.off_diagonal_max),
            num(r.diagonal_err),
            num(r.mixed_fd_rel_err),
            num(r.null_residual),
            num(FRAME_TOL),
            num(FD_TOL),
            num(NULL_TOL),
            flag(r.pass()),
        ]);
        t.push(row);
    }
    out.tables.push(t);
    Ok(())
}

/// Fixed geometry for the equivalence runs: x = 0.5 e_1, y = -0.4 e_1; z = 0.3 e_1 + 0.1 e_{d+1},
/// z' = -0.5 e_1 + 0.7 e_{d+1}.
fn embed(d: usize, first: f64, second: Option<f64>) -> Vec<f64> {
    let mut v = vec![0.0; if second.is_some() { 2 * d } else { d }];
    v[0] = first;
    if let Some(s) = second {
        v[d] = s;
    }
    v
}

const STATIONARY_LAMBDAS: [f64; 4] = [40.0, 80.0, 160.0, 320.0];
const STATIONARY_WIDTH: f64 = 0.9;
const RATIO_BAND: (f64, f64) = (0.35, 0.7);

fn equivalence(c: &RunConfig, out: &mut Outcome) -> Res<()> {
    let d = c.dim;
    let hermite_tol = c.tol.unwrap_or(1e-6);
    let twisted_tol = c.tol.unwrap_or(1e-4);
    let hw = WindowFunction::new(0.95, 0.9, WindowProfile::Gaussian)?;
    let tw = WindowFunction::new(0.55, 0.54, WindowProfile::Gaussian)?;
    let (x, y) = (embed(d, 0.5, None), embed(d, -0.4, None));
    let (z, zp) = (embed(d, 0.3, Some(0.1)), embed(d, -0.5, Some(0.7)));
    let hermite_lambdas = c.lambdas.clone().unwrap_or_else(|| vec![21.0, 41.0, 81.0]);
    let mut jobs: Vec<(&str, f64)> = hermite_lambdas.iter().map(|&l| ("hermite", l)).collect();
    jobs.extend(c.twisted_lambdas.iter().map(|&l| ("twisted", l)));
    let rows = jobs
        .par_iter()
        .map(|&(kind, l)| -> Res<_> {
            Ok(match kind {
                "hermite" => (hermite_equivalence(&hw, l, &x, &y)?, &hw, hermite_tol),
                _ => (twisted_equivalence(&tw, l, &z, &zp)?, &tw, twisted_tol),
            })
        })
        .collect::<Res<Vec<_>>>()?;
    let mut t = Table::new(
        "equivalence.csv",
        &[
            "kind",
            "lambda",
            "dim",
            "window_center",
            "window_width",
            "quadrature_re",
            "quadrature_im",
            "spectral_re",
            "spectral_im",
            "rel_err",
            "tol",
            "pass",
        ],
    );
    for ((kind, _), (r, w, tol)) in jobs.iter().zip(&rows) {
        t.push(vec![
            kind.to_string(),
            num(r.lambda),
            d.to_string(),
            num(w.center),
            num(w.width),
            num(r.quadrature.re),
            num(r.quadrature.im),
            num(r.spectral.re),
            num(r.spectral.im),
            num(r.rel_err),
            num(*tol),
            flag(r.rel_err < *tol),
        ]);
    }
    out.tables.push(t);

    let sp = stationary_phase_ladder(&x, &y, STATIONARY_WIDTH, &STATIONARY_LAMBDAS)?;
    let mut t = Table::new(
        "stationary.csv",
        &["lambda", "dim", "window_width", "quadrature_re", "quadrature_im", "leading_re", "leading_im", "rel_err", "ratio", "ratio_lo", "ratio_hi", "pass"],
    );
    for (i, r) in sp.iter().enumerate() {
        let ratio = if i == 0 { None } else { Some(r.rel_err / sp[i - 1].rel_err) };
        let pass = ratio.is_none_or(|q| q >= RATIO_BAND.0 && q <= RATIO_BAND.1);
        t.push(vec![
            num(r.lambda),
            d.to_string(),
            num(STATIONARY_WIDTH),
            num(r.quadrature.re),
            num(r.quadrature.im),
            num(r.leading.re),
            num(r.leading.im),
            num(r.rel_err),
            ratio.map(num).unwrap_or_default(),
            num(RATIO_BAND.0),
            num(RATIO_BAND.1),
            flag(pass),
        ]);
    }
    out.tables.push(t);
    Ok(())
}

fn rate_rows(lambdas: &[usize], f: impl Fn(usize) -> hrl_core::Result<f64> + Sync) -> Res<Vec<RateRow>> {
    Ok(lambdas
        .par_iter()
        .map(|&l| Ok(RateRow { lambda: l as f64, value: f(l)?, undersampled: false }))
        .collect::<hrl_core::Result<Vec<_>>>()?)
}

fn report_from(rows: Vec<RateRow>, expected: f64, tolerance: f64) -> Res<RateReport> {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.lambda, r.value)).collect();
    Ok(RateReport { fit: fit_power_law(&pts)?, rows, expected, tolerance })
}

/// Runs one slope scan; used by `rates` and exposed for the acceptance harness.
pub fn rate_report(c: &RunConfig, warnings: &mut Vec<String>) -> Res<RateReport> {
    let d = c.dim;
    let mut report = match c.scan {
        Scan::Projection => {
            let lambdas = levels(c, 0, warnings)?;
            projection_rate_experiment(d, c.p, c.q, &lambdas, c.grid_n, c.seed)?
        }
        Scan::FixedBox => kernel_sup_scan(d, &levels(c, 12, warnings)?, SupRegion::FixedBox)?,
        Scan::TurningAnnulus => kernel_sup_scan(d, &levels(c, 12, warnings)?, SupRegion::TurningAnnulus)?,
        Scan::LaguerreL2 => {
            let rows = rate_rows(&levels(c, 12, warnings)?, |l| laguerre_l2_norm((l - d) / 2, d))?;
            report_from(rows, (d as f64 - 1.0) / 2.0, DEFAULT_SLOPE_TOL)?
        }
        Scan::SpecialSup => {
            let rows = rate_rows(&levels(c, 12, warnings)?, |l| special_kernel_sup(l, d))?;
            report_from(rows, d as f64 - 1.0, 0.1)?
        }
    };
    if let Some(t) = c.tol {
        report.tolerance = t;
    }
    Ok(report)
}

fn rates(c: &RunConfig, out: &mut Outcome) -> Res<()> {
    let report = rate_report(c, &mut out.warnings)?;
    let mut t = Table::new("rates.csv", &["lambda", "value", "log_lambda", "log_value"]);
    for r in &report.rows {
        t.push(vec![num(r.lambda), num(r.value), num(r.lambda.ln()), num(r.value.ln())]);
    }
    out.tables.push(t);
    let mut f = Table::new(
        "fit.csv",
        &["slope", "intercept", "r2", "expected", "tol", "pass", "scan", "dim", "p", "q", "lambda_min", "lambda_max", "points", "undersampled"],
    );
    let lo = report.rows.first().map(|r| r.lambda).unwrap_or(f64::NAN);
    let hi = report.rows.last().map(|r| r.lambda).unwrap_or(f64::NAN);
    f.push(vec![
        num(report.fit.slope),
        num(report.fit.intercept),
        num(report.fit.r2),
        num(report.expected),
        num(report.tolerance),
        flag(report.pass()),
        c.scan.name().into(),
        c.dim.to_string(),
        c.p.to_string(),
        c.q.to_string(),
        num(lo),
        num(hi),
        report.rows.len().to_string(),
        report.rows.iter().filter(|r| r.undersampled).count().to_string(),
    ]);
    out.tables.push(f);
    Ok(())
}

const NORM_AGREEMENT: f64 = 0.01;

fn counterexample(c: &RunConfig, out: &mut Outcome) -> Res<()> {
    let d = c.dim;
    if d > 2 {
        return Err(RunError::Usage("counterexample supports dim 1 and 2".into()));
    }
    let tol = c.tol.unwrap_or(NORM_AGREEMENT);
    let lambdas = levels(c, 6, &mut out.warnings)?;
    let mut header: Vec<String> = ["lambda", "dim", "seed", "p", "k", "index_count"].map(String::from).to_vec();
    header.extend(coord_header("x0", d));
    header.extend(coord_header("x_tilde", d));
    for h in ["j_mass", "f_norm_factorized", "f_norm_grid", "rel_diff", "tol", "pass"] {
        header.push(h.into());
    }
    let mut t = Table::with_header("counterexample.csv", header);
    let rows = lambdas
        .par_iter()
        .map(|&l| -> Res<Vec<String>> {
            let b = build_counterexample(l, d, c.seed)?;
            let grid = f_norm_grid(&b, c.p, c.grid_n)?;
            let fact = f_norm_factorized(&b, c.p).ok();
            let rel = fact.map(|f| (f - grid).abs() / f.abs().max(1e-300));
            let mut row = vec![
                l.to_string(),
                d.to_string(),
                c.seed.to_string(),
                c.p.to_string(),
                b.k.to_string(),
                b.j.len().to_string(),
            ];
            row.extend(b.x0.iter().chain(&b.x_tilde).map(|v| num(*v)));
            row.extend([
                num(b.j_mass),
                fact.map(num).unwrap_or_default(),
                num(grid),
                rel.map(num).unwrap_or_default(),
                num(tol),
                flag(rel.is_none_or(|r| r < tol) && grid.is_finite()),
            ]);
            Ok(row)
        })
        .collect::<Res<Vec<_>>>()?;
    for r in rows {
        t.push(r);
    }
    out.tables.push(t);
    Ok(())
}

fn exponents(c: &RunConfig, out: &mut Outcome) -> Res<()> {
    let e = exponent_table(c.dim, c.p, c.q)?;
    let mut t = Table::new(
        "exponents.csv",
        &["dim", "p", "q", "delta", "gamma", "p0", "counterexample_exponent", "delta_f64", "gamma_f64", "p0_f64", "counterexample_exponent_f64"],
    );
    let p0 = e.p0_d.map(|r| r.to_string()).unwrap_or_else(|| "inf".into());
    let p0_f = e.p0_d.map(ratio_to_f64).unwrap_or(f64::INFINITY);
    t.push(vec![
        e.d.to_string(),
        e.p.to_string(),
        e.q.to_string(),
        e.delta_dp.to_string(),
        e.gamma_dp.to_string(),
        p0,
        e.counterexample_exponent.to_string(),
        num(ratio_to_f64(e.delta_dp)),
        num(ratio_to_f64(e.gamma_dp)),
        num(p0_f),
        num(ratio_to_f64(e.counterexample_exponent)),
    ]);
    out.tables.push(t);
    Ok(())
}
