//! Flat key=value run configuration with flag overrides.

use hrl_core::experiments::LebesgueExponent;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

pub const VALID_KEYS: &[&str] = &[
    "dim",
    "lambda_min",
    "lambda_max",
    "lambda_count",
    "lambdas",
    "twisted_lambdas",
    "p",
    "q",
    "delta",
    "c0",
    "grid_n",
    "seed",
    "samples",
    "kmax",
    "scan",
    "tol",
    "out",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scan {
    Projection,
    FixedBox,
    TurningAnnulus,
    LaguerreL2,
    SpecialSup,
}

impl Scan {
    pub const NAMES: &'static [&'static str] =
        &["projection", "fixed-box", "turning-annulus", "laguerre-l2", "special-sup"];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Projection => "projection",
            Self::FixedBox => "fixed-box",
            Self::TurningAnnulus => "turning-annulus",
            Self::LaguerreL2 => "laguerre-l2",
            Self::SpecialSup => "special-sup",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "projection" => Self::Projection,
            "fixed-box" => Self::FixedBox,
            "turning-annulus" => Self::TurningAnnulus,
            "laguerre-l2" => Self::LaguerreL2,
            "special-sup" => Self::SpecialSup,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dim: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// None picks a per-scan default; Some(0) asks for every admissible level.
    pub lambda_count: Option<usize>,
    pub lambdas: Option<Vec<f64>>,
    pub twisted_lambdas: Vec<f64>,
    pub p: LebesgueExponent,
    pub q: LebesgueExponent,
    pub delta: f64,
    pub c0: f64,
    pub grid_n: usize,
    pub seed: u64,
    pub samples: usize,
    pub kmax: usize,
    pub scan: Scan,
    pub tol: Option<f64>,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            lambda_min: 100.0,
            lambda_max: 4000.0,
            lambda_count: None,
            lambdas: None,
            twisted_lambdas: vec![22.0],
            p: LebesgueExponent::Finite(2.into()),
            q: LebesgueExponent::Infinity,
            delta: 0.0,
            c0: 0.1,
            grid_n: 256,
            seed: 0,
            samples: 100,
            kmax: 100,
            scan: Scan::Projection,
            tol: None,
            out: PathBuf::from("."),
        }
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Canonical key=value listing, one per line in key order.
    pub fn canonical(&self) -> String {
        let mut m = BTreeMap::new();
        m.insert("dim", self.dim.to_string());
        m.insert("lambda_min", self.lambda_min.to_string());
        m.insert("lambda_max", self.lambda_max.to_string());
        m.insert("lambda_count", self.lambda_count.map(|c| c.to_string()).unwrap_or_else(|| "default".into()));
        m.insert("lambdas", self.lambdas.as_deref().map(fmt_list).unwrap_or_else(|| "ladder".into()));
        m.insert("twisted_lambdas", fmt_list(&self.twisted_lambdas));
        m.insert("p", self.p.to_string());
        m.insert("q", self.q.to_string());
        m.insert("delta", self.delta.to_string());
        m.insert("c0", self.c0.to_string());
        m.insert("grid_n", self.grid_n.to_string());
        m.insert("seed", self.seed.to_string());
        m.insert("samples", self.samples.to_string());
        m.insert("kmax", self.kmax.to_string());
        m.insert("scan", self.scan.name().to_string());
        m.insert("tol", self.tol.map(|t| t.to_string()).unwrap_or_else(|| "default".into()));
        m.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// sha256 of the canonical listing, hex, first 16 digits. The output path is left out.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Parse a key=value file body. Blank lines and lines starting with '#' are skipped.
pub fn parse_file(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("line {}: expected key=value, got {line:?}", i + 1)))?;
        out.push((k.trim().replace('-', "_"), v.trim().to_string()));
    }
    Ok(out)
}

/// Merge file entries with flags (flags win) into a validated config.
/// Returns the config and any warnings about overrides.
pub fn parse_config(
    file: &[(String, String)],
    flags: &[(String, String)],
) -> Result<(RunConfig, Vec<String>), ConfigError> {
    let mut warnings = Vec::new();
    let mut merged: BTreeMap<String, String> = BTreeMap::new();
    for (k, v) in file {
        check_key(k)?;
        merged.insert(k.clone(), v.clone());
    }
    for (k, v) in flags {
        check_key(k)?;
        if let Some(old) = merged.get(k) {
            if old != v {
                warnings.push(format!("--{} {v} overrides config value {old}", k.replace('_', "-")));
            }
        }
        merged.insert(k.clone(), v.clone());
    }
    let mut c = RunConfig::default();
    for (k, v) in &merged {
        apply(&mut c, k, v)?;
    }
    if c.dim == 0 {
        return Err(ConfigError("dim must be at least 1".into()));
    }
    if !(c.lambda_min > 0.0 && c.lambda_max >= c.lambda_min) {
        return Err(ConfigError(format!("need 0 < lambda_min <= lambda_max, got {} and {}", c.lambda_min, c.lambda_max)));
    }
    if c.grid_n < 16 {
        return Err(ConfigError(format!("grid_n must be at least 16, got {}", c.grid_n)));
    }
    if !(c.c0 > 0.0 && c.c0 < 1.0) {
        return Err(ConfigError(format!("c0 must lie in (0, 1), got {}", c.c0)));
    }
    if c.delta < 0.0 {
        return Err(ConfigError(format!("delta must be nonnegative, got {}", c.delta)));
    }
    Ok((c, warnings))
}

fn check_key(k: &str) -> Result<(), ConfigError> {
    if VALID_KEYS.contains(&k) {
        Ok(())
    } else {
        Err(ConfigError(format!("unknown key {k:?}; valid keys: {}", VALID_KEYS.join(", "))))
    }
}

fn num<T: std::str::FromStr>(k: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| ConfigError(format!("{k}: cannot parse {v:?}")))
}

fn list(k: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    let out: Vec<f64> = v.split(',').map(|s| num::<f64>(k, s.trim())).collect::<Result<_, _>>()?;
    if out.iter().any(|x| x.is_nan() || *x <= 0.0) {
        return Err(ConfigError(format!("{k}: values must be positive")));
    }
    Ok(out)
}

fn exponent(k: &str, v: &str) -> Result<LebesgueExponent, ConfigError> {
    v.parse::<LebesgueExponent>().map_err(|e| ConfigError(format!("{k}: {e}")))
}

fn apply(c: &mut RunConfig, k: &str, v: &str) -> Result<(), ConfigError> {
    match k {
        "dim" => c.dim = num(k, v)?,
        "lambda_min" => c.lambda_min = num(k, v)?,
        "lambda_max" => c.lambda_max = num(k, v)?,
        "lambda_count" => c.lambda_count = Some(num(k, v)?),
        "lambdas" => c.lambdas = Some(list(k, v)?),
        "twisted_lambdas" => c.twisted_lambdas = list(k, v)?,
        "p" => c.p = exponent(k, v)?,
        "q" => c.q = exponent(k, v)?,
        "delta" if v == "inf" => return Err(ConfigError("delta: must be finite for kernel evaluation".into())),
        "delta" => c.delta = rational(k, v)?,
        "c0" => c.c0 = num(k, v)?,
        "grid_n" => c.grid_n = num(k, v)?,
        "seed" => c.seed = num(k, v)?,
        "samples" => c.samples = num(k, v)?,
        "kmax" => c.kmax = num(k, v)?,
        "scan" => {
            c.scan = Scan::parse(v)
                .ok_or_else(|| ConfigError(format!("scan: unknown {v:?}; one of {}", Scan::NAMES.join(", "))))?
        }
        "tol" => c.tol = Some(num(k, v)?),
        "out" => c.out = PathBuf::from(v),
        _ => unreachable!("key checked"),
    }
    Ok(())
}

/// Decimal or a/b.
fn rational(k: &str, v: &str) -> Result<f64, ConfigError> {
    match v.split_once('/') {
        Some((a, b)) => {
            let (a, b): (f64, f64) = (num(k, a.trim())?, num(k, b.trim())?);
            if b == 0.0 {
                return Err(ConfigError(format!("{k}: zero denominator")));
            }
            Ok(a / b)
        }
        None => num(k, v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kv(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn empty_input_gives_defaults() {
        let (c, w) = parse_config(&[], &[]).unwrap();
        assert_eq!((c.dim, c.seed, c.grid_n), (1, 0, 256));
        assert!(w.is_empty());
    }

    #[test]
    fn inf_literal() {
        let (c, _) = parse_config(&kv(&[("p", "inf")]), &[]).unwrap();
        assert!(c.p.is_infinite());
    }

    #[test]
    fn flag_beats_file_with_warning() {
        let (c, w) = parse_config(&kv(&[("dim", "2")]), &kv(&[("dim", "3")])).unwrap();
        assert_eq!(c.dim, 3);
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn unknown_key_lists_valid_ones() {
        let e = parse_config(&kv(&[("dimension", "2")]), &[]).unwrap_err();
        assert!(e.0.contains("lambda_min") && e.0.contains("grid_n"));
    }

    #[test]
    fn file_syntax() {
        let f = parse_file("# run\n\ndim = 2\nlambda-min=21\n").unwrap();
        assert_eq!(f, kv(&[("dim", "2"), ("lambda_min", "21")]));
        assert!(parse_file("dim 2").is_err());
    }

    #[test]
    fn validation() {
        assert!(parse_config(&kv(&[("grid_n", "8")]), &[]).is_err());
        assert!(parse_config(&kv(&[("p", "1/2")]), &[]).is_err());
        assert!(parse_config(&kv(&[("delta", "3/2")]), &[]).unwrap().0.delta == 1.5);
        assert!(parse_config(&kv(&[("scan", "nope")]), &[]).is_err());
    }

    #[test]
    fn hash_ignores_output_path_and_tracks_inputs() {
        let (a, _) = parse_config(&[], &kv(&[("out", "/tmp/a")])).unwrap();
        let (b, _) = parse_config(&[], &kv(&[("out", "/tmp/b")])).unwrap();
        let (c, _) = parse_config(&[], &kv(&[("seed", "1")])).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 16);
    }
}
