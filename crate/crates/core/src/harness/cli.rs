use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::json;

use super::config::ExperimentConfig;
use super::suites::{run_suite, Suite};
use crate::circle::CircleFunction;
use crate::error::{Error, Result};
use crate::factorize::{holder_factor, sqrt_factor};
use crate::hardy::{self, Backend};
use crate::kfunc::{self, CoupleId, CoupleKind, Element};
use crate::schatten::{decompose_t1_tq, MatrixOperator};

/// Exit code for failed guards.
pub const EXIT_GUARD: i32 = 1;
/// Exit code for usage and input errors.
pub const EXIT_USAGE: i32 = 2;
/// Exit code for numerical failures.
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "hardy-interp", version, about = "K-functionals, factorizations and decompositions for Hardy and triangular Schatten couples")]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decompose an element for a subspace couple at one t.
    Decompose {
        /// Input element (circle function or matrix JSON).
        #[arg(long = "in")]
        input: PathBuf,
        /// Couple such as H1,Hinf, H1,H2 or T1,T2.
        #[arg(long)]
        couple: String,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value = "oracle")]
        backend: String,
    },
    /// Evaluate K_t(x) for a couple.
    Kfunc {
        /// Couple such as L1,Linf or S1,S2.
        #[arg(long)]
        couple: String,
        #[arg(long)]
        t: f64,
        /// Input element; defaults to the constant 1 on the configured grid.
        #[arg(long = "in")]
        input: Option<PathBuf>,
    },
    /// Factor an analytic function.
    Factor {
        #[arg(value_enum)]
        kind: FactorKind,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
        #[arg(long, default_value_t = 2.0)]
        s: f64,
    },
    /// Run an experiment suite.
    Suite { name: String },
    /// Summarize the suite reports found in --out.
    Report,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FactorKind {
    Sqrt,
    Holder,
}

enum Failure {
    Usage(String),
    Numeric(String),
    Guard,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_)
            | Error::Json(_)
            | Error::InvalidGrid(_)
            | Error::InvalidExponent(_)
            | Error::InvalidParameter(_)
            | Error::InconsistentExponents { .. }
            | Error::NotInSubspace(_)
            | Error::DimensionMismatch { .. }
            | Error::TooLarge(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

fn read_element(path: &Path) -> Result<Element> {
    let text = fs::read_to_string(path)?;
    if let Ok(f) = serde_json::from_str::<CircleFunction>(&text) {
        return Ok(Element::Circle(f));
    }
    if let Ok(m) = serde_json::from_str::<MatrixOperator>(&text) {
        return Ok(Element::Matrix(m));
    }
    Ok(serde_json::from_str::<Element>(&text)?)
}

fn read_circle(path: &Path) -> Result<CircleFunction> {
    match read_element(path)? {
        Element::Circle(f) => Ok(f),
        _ => Err(Error::InvalidParameter(format!("{} is not a circle function", path.display()))),
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut c = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    c.validate()?;
    Ok(c)
}

fn emit(out: &mut dyn Write, dir: Option<&Path>, file: &str, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    writeln!(out, "{text}")?;
    if let Some(d) = dir {
        fs::create_dir_all(d)?;
        fs::write(d.join(file), text)?;
    }
    Ok(())
}

fn decompose(
    out: &mut dyn Write,
    cli: &Cli,
    input: &Path,
    couple: &str,
    t: f64,
    backend: &str,
) -> std::result::Result<(), Failure> {
    let cfg = load_config(cli)?;
    let opts = cfg.solver_options();
    let x = read_element(input)?;
    let couple: CoupleId = couple.parse()?;
    let value = match (couple.kind, &x) {
        (CoupleKind::Hardy, Element::Circle(f)) if couple.p0 == 1.0 && couple.p1.is_infinite() => {
            let s = hardy::decompose_h1_hinf(f, t, backend.parse::<Backend>()?, &opts)?;
            json!({"decomposition": s.decomposition, "ambient_K": s.ambient_k, "ratio": s.ratio})
        }
        (CoupleKind::Hardy, Element::Circle(f)) if couple.p0 == 1.0 => {
            let s = hardy::decompose_h1_hq(f, couple.p1, t)?;
            json!({
                "decomposition": s.decomposition,
                "holder_lhs": s.holder_lhs,
                "holder_rhs": s.holder_rhs,
                "squaring_residual": s.squaring_residual,
            })
        }
        (CoupleKind::Hardy, Element::Circle(f)) => {
            let s = hardy::decompose_base(f, couple.p0, couple.p1, t)?;
            json!({"decomposition": s.decomposition, "level": s.level})
        }
        (CoupleKind::Triangular, Element::Matrix(m)) if couple.p0 == 1.0 => {
            let s = decompose_t1_tq(m, couple.p1, t, cfg.epsilon.reg, &opts)?;
            json!({"decomposition": s.decomposition, "ambient_K": s.ambient_k, "ratio": s.ratio})
        }
        _ => {
            let b = kfunc::kt_bruteforce(&x, couple, t, &opts)?;
            json!({"decomposition": b.decomposition, "gap": b.certificate.gap})
        }
    };
    emit(out, cli.out.as_deref(), "decomposition.json", &value)?;
    Ok(())
}

fn kfunc_cmd(
    out: &mut dyn Write,
    cli: &Cli,
    couple: &str,
    t: f64,
    input: Option<&Path>,
) -> std::result::Result<(), Failure> {
    let cfg = load_config(cli)?;
    let couple: CoupleId = couple.parse()?;
    let x = match input {
        Some(p) => read_element(p)?,
        None => Element::Circle(CircleFunction::constant(cfg.grid_n, Complex64::new(1.0, 0.0))?),
    };
    let v = kfunc::kt_value(&x, couple, t, &cfg.solver_options())?;
    writeln!(out, "{}", v.value).map_err(Error::from)?;
    Ok(())
}

fn factor(
    out: &mut dyn Write,
    cli: &Cli,
    kind: FactorKind,
    input: &Path,
    (p, r, s): (f64, f64, f64),
) -> std::result::Result<(), Failure> {
    let cfg = load_config(cli)?;
    let f = read_circle(input)?;
    let value = match kind {
        FactorKind::Sqrt => {
            let sf = sqrt_factor(&f, cfg.epsilon.zero)?;
            json!({
                "blaschke": sf.blaschke,
                "outer": sf.outer.boundary(),
                "tol_factor": sf.tol_factor,
                "boundary_zeros": sf.boundary_zeros,
            })
        }
        FactorKind::Holder => {
            let hf = holder_factor(&f, p, r, s, cfg.epsilon.zero)?;
            json!({
                "g": hf.g,
                "h": hf.h,
                "blaschke": hf.blaschke,
                "tol_factor": hf.tol_factor,
            })
        }
    };
    emit(out, cli.out.as_deref(), "factorization.json", &value)?;
    Ok(())
}

fn suite(out: &mut dyn Write, cli: &Cli, name: &str) -> std::result::Result<(), Failure> {
    let suite: Suite = name.parse()?;
    let cfg = load_config(cli)?;
    let report = run_suite(suite, &cfg)?;
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let files = report.write(&dir)?;
    let w = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(Error::from);
    w(
        out,
        format!(
            "{}: {} rows, c_estimate {:.6}, {}",
            suite,
            report.rows.len(),
            report.c_estimate(),
            if report.passed() { "pass" } else { "FAIL" }
        ),
    )?;
    for v in &report.violations {
        w(out, format!("  instance {} t={:?}: {}", v.instance_id, v.t, v.reason))?;
    }
    for f in files {
        w(out, format!("  wrote {}", f.display()))?;
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Guard)
    }
}

fn report(out: &mut dyn Write, cli: &Cli) -> std::result::Result<(), Failure> {
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let mut all_passed = true;
    let mut found = 0;
    for s in Suite::ALL {
        let p = dir.join(format!("{}.json", s.name()));
        if !p.exists() {
            continue;
        }
        found += 1;
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&p).map_err(Error::from)?).map_err(Error::from)?;
        let passed = v["passed"].as_bool().unwrap_or(false);
        all_passed &= passed;
        writeln!(
            out,
            "{:<18} {:>6} rows  c_estimate {:>12}  max_residual {:>10}  {}",
            s.name(),
            v["rows"],
            v["c_estimate"].to_string(),
            v["max_residual"].to_string(),
            if passed { "pass" } else { "FAIL" }
        )
        .map_err(Error::from)?;
    }
    if found == 0 {
        return Err(Failure::Usage(format!("no suite summaries in {}", dir.display())));
    }
    if all_passed {
        Ok(())
    } else {
        Err(Failure::Guard)
    }
}

/// Parses `argv` (program name first), runs the command writing to `out`
/// and returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return if code == 0 { 0 } else { EXIT_USAGE };
        }
    };
    let result = match &cli.command {
        Command::Decompose {
            input,
            couple,
            t,
            backend,
        } => decompose(out, &cli, input, couple, *t, backend),
        Command::Kfunc { couple, t, input } => kfunc_cmd(out, &cli, couple, *t, input.as_deref()),
        Command::Factor { kind, input, p, r, s } => factor(out, &cli, *kind, input, (*p, *r, *s)),
        Command::Suite { name } => suite(out, &cli, name),
        Command::Report => report(out, &cli),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Guard) => EXIT_GUARD,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("error: {m}");
            EXIT_NUMERIC
        }
    }
}

/// [`run`] on standard output.
pub fn cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    run(argv, &mut lock)
}
