//! One PASS/FAIL line per acceptance criterion. Runs as a plain binary so the lines always show.

use hrl_cli::commands::{hermite_phase_row, rate_report, sample_twisted_pair, twisted_phase_row};
use hrl_cli::{parse_config, RunConfig};
use hrl_core::carleson::{carleson_sjolin_check, QuadricModel};
use hrl_core::experiments::{
    exponent_table, hermite_equivalence, p0, stationary_phase_ladder, twisted_equivalence, LebesgueExponent, Rational,
};
use hrl_core::hermite::orthonormality_residual;
use hrl_core::oscillatory::{WindowFunction, WindowProfile};
use hrl_core::phase_h::{ab_identity_residuals, RegionSpec};
use hrl_core::special_hermite::{fourier_wigner_table, laguerre_function_table, special_projection_kernel};
use hrl_core::subordination::{riesz_subordination_residual, Bump, BumpProfile};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn timed(limit: Duration, f: impl FnOnce() -> Check) -> Check {
    let start = Instant::now();
    let r = f();
    let el = start.elapsed();
    match r {
        Ok(m) if el <= limit => Ok(format!("{m}; {:.2}s", el.as_secs_f64())),
        Ok(m) => Err(format!("{m}; {:.2}s exceeds {:.0}s", el.as_secs_f64(), limit.as_secs_f64())),
        Err(m) => Err(format!("{m}; {:.2}s", el.as_secs_f64())),
    }
}

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn config(flags: &[(&str, &str)]) -> RunConfig {
    let f: Vec<(String, String)> = flags.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    parse_config(&[], &f).expect("acceptance config").0
}

fn c1_orthonormality() -> Check {
    timed(Duration::from_secs(10), || {
        let r = orthonormality_residual(100).map_err(|e| e.to_string())?;
        ensure(r < 1e-8, format!("max |<h_j,h_k> - delta| = {r:.2e} for j,k <= 100"))
    })
}

fn c2_ab_identities() -> Check {
    timed(Duration::from_secs(5), || {
        let mut worst: f64 = 0.0;
        for d in [2, 3] {
            let region = RegionSpec::new(0.1, d).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            for _ in 0..10_000 {
                let (x, y) = region.sample(&mut rng);
                let r = ab_identity_residuals(&x, &y).map_err(|e| e.to_string())?;
                worst = r.iter().fold(worst, |a, v| a.max(*v));
            }
        }
        ensure(worst < 1e-12, format!("max residual {worst:.2e} over 2 x 10^4 samples"))
    })
}

fn c3_mixed_hessians() -> Check {
    let (mut fd_h, mut null_h, mut fd_l, mut null_l) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let region = RegionSpec::new(0.1, 3).unwrap();
    for i in 0..1000 {
        let (x, y) = region.sample(&mut rng);
        let r = hermite_phase_row(&x, &y).map_err(|e| e.to_string())?;
        fd_h = fd_h.max(r.mixed_fd_rel_err);
        null_h = null_h.max(r.null_residual);
        let (z, zp) = sample_twisted_pair(1 + i % 2, &mut rng);
        let t = twisted_phase_row(&z, &zp).map_err(|e| e.to_string())?;
        fd_l = fd_l.max(t.mixed_fd_rel_err);
        null_l = null_l.max(t.null_residual);
    }
    ensure(
        fd_h < 1e-4 && fd_l < 1e-4 && null_h < 1e-10 && null_l < 1e-10,
        format!("FD rel err H {fd_h:.1e}, L {fd_l:.1e}; null residual H {null_h:.1e}, L {null_l:.1e}"),
    )
}

fn c4_curvature() -> Check {
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for d in [2, 3] {
        let region = RegionSpec::new(0.1, d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let (x, y) = region.sample(&mut rng);
            let r = hermite_phase_row(&x, &y).map_err(|e| e.to_string())?;
            if !r.all_negative {
                return Err(format!("nonnegative eigenvalue at x={x:?} y={y:?}"));
            }
            worst = worst.max(r.eigen_rel_err);
            n += 1;
        }
    }
    ensure(worst < 1e-8, format!("all eigenvalues negative on {n} samples; modulus rel err {worst:.1e}"))
}

fn c5_twisted_frame() -> Check {
    let (mut off, mut diag) = (0.0f64, 0.0f64);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for d in [1, 2] {
        for _ in 0..1000 {
            let (z, zp) = sample_twisted_pair(d, &mut rng);
            let r = twisted_phase_row(&z, &zp).map_err(|e| e.to_string())?;
            off = off.max(r.off_diagonal_max);
            diag = diag.max(r.diagonal_err);
        }
    }
    ensure(off < 1e-10 && diag < 1e-10, format!("off-diagonal {off:.1e}, diagonal multiset err {diag:.1e}"))
}

fn c6_equivalence() -> Check {
    let limit = Duration::from_secs(60);
    let hw = WindowFunction::new(0.95, 0.9, WindowProfile::Gaussian).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    for lambda in [21.0, 41.0, 81.0] {
        let r = timed(limit, || {
            let row = hermite_equivalence(&hw, lambda, &[0.5], &[-0.4]).map_err(|e| e.to_string())?;
            ensure(row.rel_err < 1e-6, format!("H lambda={lambda}: {:.1e}", row.rel_err))
        });
        ok &= r.is_ok();
        parts.push(r.unwrap_or_else(|e| e));
    }
    let tw = WindowFunction::new(0.55, 0.54, WindowProfile::Gaussian).unwrap();
    let r = timed(limit, || {
        let row = twisted_equivalence(&tw, 22.0, &[0.3, 0.1], &[-0.5, 0.7]).map_err(|e| e.to_string())?;
        ensure(row.rel_err < 1e-4, format!("L lambda=22: {:.1e}", row.rel_err))
    });
    ok &= r.is_ok();
    parts.push(r.unwrap_or_else(|e| e));
    ensure(ok, parts.join(" | "))
}

fn c7_subordination() -> Check {
    let mut worst: f64 = 0.0;
    for profile in [BumpProfile::Smooth, BumpProfile::Gaussian, BumpProfile::Polynomial(6)] {
        let b = Bump::new(profile, 1.0, 4.0).unwrap();
        for delta in [0.0, 1.0, 2.0] {
            for lambda in [1.7, 2.5, 3.6] {
                let r = riesz_subordination_residual(&b, delta, lambda).map_err(|e| e.to_string())?;
                worst = worst.max(r);
            }
        }
    }
    ensure(worst < 1e-6, format!("max residual {worst:.1e} over 3 profiles x 3 orders x 3 levels"))
}

fn c8_stationary_phase() -> Check {
    let rows = stationary_phase_ladder(&[0.5], &[-0.4], 0.9, &[40.0, 80.0, 160.0, 320.0]).map_err(|e| e.to_string())?;
    let ratios: Vec<f64> = rows.windows(2).map(|w| w[1].rel_err / w[0].rel_err).collect();
    let ok = ratios.iter().all(|r| (0.35..=0.7).contains(r));
    ensure(ok, format!("err(2 lambda)/err(lambda) = {ratios:.3?}"))
}

fn c9_slopes() -> Check {
    let limit = Duration::from_secs(300);
    let scans: [(&str, &[(&str, &str)]); 5] = [
        ("(i) annulus d=1", &[("scan", "turning-annulus"), ("dim", "1"), ("lambda_min", "200"), ("lambda_max", "4000")]),
        ("(ii) box d=1", &[("scan", "fixed-box"), ("dim", "1"), ("lambda_min", "200"), ("lambda_max", "4000")]),
        ("(ii) box d=2", &[("scan", "fixed-box"), ("dim", "2"), ("lambda_min", "200"), ("lambda_max", "4000")]),
        ("(iii) l2 d=2", &[("scan", "laguerre-l2"), ("dim", "2"), ("lambda_min", "100"), ("lambda_max", "4000")]),
        (
            "(iv) counterexample d=1",
            &[("scan", "projection"), ("dim", "1"), ("p", "2"), ("q", "inf"), ("lambda_min", "100"), ("lambda_max", "4000")],
        ),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, flags) in scans {
        let r = timed(limit, || {
            let rep = rate_report(&config(flags), &mut Vec::new()).map_err(|e| e.to_string())?;
            ensure(
                rep.pass(),
                format!("{name}: slope {:.3} vs {:.3} +- {}", rep.fit.slope, rep.expected, rep.tolerance),
            )
        });
        ok &= r.is_ok();
        parts.push(r.unwrap_or_else(|e| e));
    }
    ensure(ok, parts.join(" | "))
}

fn c10_exponents() -> Check {
    let four = LebesgueExponent::finite(4, 1).unwrap();
    let g = exponent_table(1, four, LebesgueExponent::Infinity).map_err(|e| e.to_string())?.gamma_dp;
    let identity = Rational::new(2, 3) * (Rational::new(1, 2) - Rational::new(1, 4)) - Rational::new(1, 6);
    let ok = p0(2) == Some(Rational::from_integer(4)) && p0(3) == Some(Rational::new(10, 3)) && g == Rational::from_integer(0) && g == identity;
    ensure(ok, format!("p0(2)={:?} p0(3)={:?} gamma(1,4)={g}", p0(2).map(|r| r.to_string()), p0(3).map(|r| r.to_string())))
}

fn c11_carleson() -> Check {
    let para = carleson_sjolin_check(&QuadricModel { d: 3, elliptic: true }, &[0.1, 0.1, 0.1], &[0.2, 0.2])
        .map_err(|e| e.to_string())?;
    let hyp = carleson_sjolin_check(&QuadricModel { d: 3, elliptic: false }, &[0.0; 3], &[0.0; 2]).map_err(|e| e.to_string())?;
    let hyp_ok = hyp.c1 == Some(true) && hyp.c2 == Some(true) && hyp.c3 == Some(false);
    let mut n = 0;
    for d in [2, 3] {
        let region = RegionSpec::new(0.2, d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let (x, y) = region.sample(&mut rng);
            let r = hermite_phase_row(&x, &y).map_err(|e| e.to_string())?;
            if !r.cs_pass {
                return Err(format!("frozen phase fails at x={x:?} y={y:?}: {:?}", r.report.cs_verdict));
            }
            n += 1;
        }
    }
    ensure(
        para.all_pass() && hyp_ok,
        format!("paraboloid pass={}, hyperbolic C1-C3 = {:?}/{:?}/{:?}, frozen phase passes on {n} samples", para.all_pass(), hyp.c1, hyp.c2, hyp.c3),
    )
}

fn c12_special_hermite() -> Check {
    let mut diag: f64 = 0.0;
    for &(x, y) in &[(0.4, -0.9), (2.5, 1.0), (0.0, 3.0), (-1.7, 0.2)] {
        let t = fourier_wigner_table(10, x, y).map_err(|e| e.to_string())?;
        let phi = laguerre_function_table(10, 1, x * x + y * y).map_err(|e| e.to_string())?;
        for k in 0..=10 {
            diag = diag.max((t[k][k] / (2.0 * PI).sqrt() - Complex64::new(phi[k], 0.0)).norm());
        }
    }
    let (z, zp) = ([0.5, -0.3], [-0.2, 0.6]);
    let tz = fourier_wigner_table(60, z[0], z[1]).map_err(|e| e.to_string())?;
    let tzp = fourier_wigner_table(60, zp[0], zp[1]).map_err(|e| e.to_string())?;
    let mut kern: f64 = 0.0;
    for k in 0..=5 {
        let sum: Complex64 = (0..=60).map(|a| tz[a][k] * tzp[a][k].conj()).sum();
        let exact = special_projection_kernel(2 * k + 1, 1, &z, &zp).map_err(|e| e.to_string())?;
        kern = kern.max((sum - exact).norm());
    }
    ensure(diag < 1e-6 && kern < 1e-4, format!("diagonal identity {diag:.1e} (k <= 10); kernel vs double sum {kern:.1e} (k <= 5)"))
}

fn run_bin(args: &[&str], out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_hrl"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("HRL_THREADS", "1")
        .stdout(std::process::Stdio::null())
        .stderr(std::process::Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    if status.code() == Some(0) || status.code() == Some(1) {
        Ok(())
    } else {
        Err(format!("{args:?} exited with {status}"))
    }
}

fn c13_determinism() -> Check {
    let base: PathBuf = std::env::temp_dir().join(format!("hrl-acceptance-{}", std::process::id()));
    let runs: [&[&str]; 4] = [
        &["phase-report", "--dim", "2", "--samples", "50", "--seed", "9"],
        &["counterexample", "--dim", "1", "--lambda-max", "300", "--seed", "9"],
        &["rates", "--scan", "fixed-box", "--dim", "2", "--lambda-max", "800"],
        &["kernel-eval", "--dim", "2", "--samples", "5", "--lambda-max", "300", "--seed", "9"],
    ];
    let mut files = 0;
    for (i, args) in runs.iter().enumerate() {
        let (a, b) = (base.join(format!("{i}a")), base.join(format!("{i}b")));
        run_bin(args, &a)?;
        run_bin(args, &b)?;
        for entry in std::fs::read_dir(&a).map_err(|e| e.to_string())? {
            let name = entry.map_err(|e| e.to_string())?.file_name();
            let x = std::fs::read(a.join(&name)).map_err(|e| e.to_string())?;
            let y = std::fs::read(b.join(&name)).map_err(|e| e.to_string())?;
            if x != y {
                return Err(format!("{} differs between runs of {args:?}", name.to_string_lossy()));
            }
            files += 1;
        }
    }
    let _ = std::fs::remove_dir_all(&base);
    ensure(files >= 4, format!("{files} CSV files byte-identical across repeated runs"))
}

fn main() {
    let criteria: [Criterion; 13] = [
        ("Hermite orthonormality", c1_orthonormality),
        ("critical-time vector identities", c2_ab_identities),
        ("mixed Hessians vs finite differences", c3_mixed_hessians),
        ("Hermite curvature eigenvalues", c4_curvature),
        ("twisted curvature frame", c5_twisted_frame),
        ("time-integral vs spectral kernels", c6_equivalence),
        ("Riesz subordination", c7_subordination),
        ("stationary-phase leading term", c8_stationary_phase),
        ("slope reproductions", c9_slopes),
        ("exponent table", c10_exponents),
        ("Carleson-Sjolin checker", c11_carleson),
        ("special Hermite identities", c12_special_hermite),
        ("determinism", c13_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match r {
            Ok(m) => println!("criterion {:>2} PASS {name}: {m}", i + 1),
            Err(m) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {m}", i + 1)
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
