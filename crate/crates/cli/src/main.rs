use clap::{Args, Parser, Subcommand};
use hrl_cli::{parse_config, parse_file, run, Command, RunError};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hrl", version, about = "Hermite and twisted-Laplacian kernel verification runs")]
struct Cli {
    #[command(subcommand)]
    cmd: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Gram matrix of h_0..h_kmax against the identity
    BasisVerify(Opts),
    /// Projection and Riesz-mean kernels at seeded points of the dilated region
    KernelEval(Opts),
    /// Phase identities, mixed Hessians and curvature at seeded samples
    PhaseReport(Opts),
    /// Time-integral kernels against their spectral sums, and the stationary-phase ladder
    Equivalence(Opts),
    /// Power-law slope scan chosen by --scan
    Rates(Opts),
    /// Counterexample construction and its norms along the ladder
    Counterexample(Opts),
    /// Exact exponent table for (dim, p, q)
    Exponents(Opts),
}

/// Every flag mirrors a config-file key; flags win over the file.
#[derive(Args, Debug, Default)]
struct Opts {
    /// key=value file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dim: Option<String>,
    #[arg(long)]
    lambda_min: Option<String>,
    #[arg(long)]
    lambda_max: Option<String>,
    /// 0 takes every admissible level
    #[arg(long)]
    lambda_count: Option<String>,
    /// Comma-separated levels, replacing the ladder
    #[arg(long)]
    lambdas: Option<String>,
    #[arg(long)]
    twisted_lambdas: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    c0: Option<String>,
    #[arg(long)]
    grid_n: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    kmax: Option<String>,
    /// projection, fixed-box, turning-annulus, laguerre-l2 or special-sup
    #[arg(long)]
    scan: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<String>,
}

impl Opts {
    fn flags(&self) -> Vec<(String, String)> {
        let fields = [
            ("dim", &self.dim),
            ("lambda_min", &self.lambda_min),
            ("lambda_max", &self.lambda_max),
            ("lambda_count", &self.lambda_count),
            ("lambdas", &self.lambdas),
            ("twisted_lambdas", &self.twisted_lambdas),
            ("p", &self.p),
            ("q", &self.q),
            ("delta", &self.delta),
            ("c0", &self.c0),
            ("grid_n", &self.grid_n),
            ("seed", &self.seed),
            ("samples", &self.samples),
            ("kmax", &self.kmax),
            ("scan", &self.scan),
            ("tol", &self.tol),
            ("out", &self.out),
        ];
        fields.iter().filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone()))).collect()
    }
}

fn init_threads() {
    if let Some(n) = std::env::var("HRL_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: HRL_THREADS ignored: {e}");
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, opts) = match cli.cmd {
        Sub::BasisVerify(o) => (Command::BasisVerify, o),
        Sub::KernelEval(o) => (Command::KernelEval, o),
        Sub::PhaseReport(o) => (Command::PhaseReport, o),
        Sub::Equivalence(o) => (Command::Equivalence, o),
        Sub::Rates(o) => (Command::Rates, o),
        Sub::Counterexample(o) => (Command::Counterexample, o),
        Sub::Exponents(o) => (Command::Exponents, o),
    };
    init_threads();
    let file = match &opts.config {
        Some(path) => match std::fs::read_to_string(path).map_err(|e| e.to_string()).and_then(|t| {
            parse_file(&t).map_err(|e| e.to_string())
        }) {
            Ok(f) => f,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        None => Vec::new(),
    };
    let (config, warnings) = match parse_config(&file, &opts.flags()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let outcome = match run(cmd, &config) {
        Ok(o) => o,
        Err(RunError::Usage(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("{} failed: {e}", cmd.name());
            return ExitCode::from(1);
        }
    };
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    let hash = config.hash();
    for t in &outcome.tables {
        if let Err(e) = t.write(&config.out, config.seed, &hash) {
            eprintln!("error: writing {}: {e}", t.file);
            return ExitCode::from(1);
        }
        println!("{}", config.out.join(&t.file).display());
    }
    let failures = outcome.failures();
    if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("{} failing row(s):", failures.len());
        for f in &failures {
            eprintln!("  {f}");
        }
        ExitCode::from(1)
    }
}
