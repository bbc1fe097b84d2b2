//! The `psifun` command line.
//!
//! Exit codes: 0 on success, 2 when the numerics fail (Newton-Schulz
//! divergence, singular factorization, pole, violated precondition), 3 for
//! usage, I/O and parse errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use crate::densecore::{combine_powers, inf_norm, matrix_powers, solve, Matrix};
use crate::error::{Error, Result};
use crate::mmio::{mm_read, write_matrix_market, write_matrix_market_coordinate};
use crate::oracle::psi_oracle;
use crate::pade::{error_bound, psi_pade_coeffs, round_up_sig};
use crate::phipade::{scaling_exponent, DEFAULT_DEGREE, DEFAULT_THETA};
use crate::psieval::{psi_matrix_with, NsOptions};
use crate::scalarfun::{conv_ratio, h_ell};
use crate::testmats::{a1_symmetrizer, certify_left_half_plane, make_a1, make_a2};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "psifun", version, about = "Matrix φ- and ψ-functions by scaling and squaring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute ψ_ℓ(A) for a Matrix Market input.
    Compute(ComputeArgs),
    /// Padé errors against the reference and their a-priori estimates for A1.
    Table1(Table1Args),
    /// CSV scans of h_ℓ(t) or of the convergence ratio along a ray.
    ScalarScan(ScanArgs),
    /// Write a test matrix in Matrix Market form.
    Export(ExportArgs),
    /// Check whether a matrix has its spectrum in the left half-plane.
    Certify(CertifyArgs),
}

#[derive(Debug, clap::Args)]
struct ComputeArgs {
    #[arg(long, default_value_t = 1)]
    ell: u32,
    #[arg(long, default_value_t = DEFAULT_THETA)]
    theta: f64,
    #[arg(long, default_value_t = DEFAULT_DEGREE)]
    degree: usize,
    #[arg(long, default_value_t = 60)]
    max_iterations: usize,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// CSV of the squaring steps: step,iteration,err2.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// CSV of the ψ_j seed rungs (ℓ ≥ 2).
    #[arg(long)]
    seed_trace: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct Table1Args {
    #[arg(long, default_value_t = 1024)]
    n: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScanKind {
    /// h_ℓ(t) = C_ℓ(it) − 2 C_ℓ(−t).
    H,
    /// C_ℓ(t e^{iα}).
    Ray,
}

#[derive(Debug, clap::Args)]
struct ScanArgs {
    /// Comma-separated list of ℓ values.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    ell: Vec<u32>,
    #[arg(long, default_value_t = 100.0)]
    t_max: f64,
    #[arg(long, default_value_t = 1001)]
    points: usize,
    #[arg(long, value_enum, default_value_t = ScanKind::H)]
    kind: ScanKind,
    /// Ray angle α in radians (ray scans only).
    #[arg(long, default_value_t = std::f64::consts::PI)]
    angle: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TestMatrix {
    A1,
    A2,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Array,
    Coordinate,
}

#[derive(Debug, clap::Args)]
struct ExportArgs {
    #[arg(long, value_enum)]
    matrix: TestMatrix,
    /// Order n for A1, grid side m for A2 (order m²).
    #[arg(long)]
    size: usize,
    #[arg(long, value_enum, default_value_t = Format::Array)]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct CertifyArgs {
    #[arg(long, conflicts_with = "matrix")]
    input: Option<PathBuf>,
    #[arg(long, value_enum, requires = "size")]
    matrix: Option<TestMatrix>,
    #[arg(long)]
    size: Option<usize>,
}

/// Outcome of a command: text for stdout or an error with its exit code.
enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Divergence { .. } | Error::Singular { .. } | Error::Pole(_) | Error::PreconditionViolated(_) => {
            EXIT_NUMERIC
        }
        _ => EXIT_USAGE,
    }
}

/// Runs the command line given by `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
        }
    };
    let result = match cli.command {
        Command::Compute(a) => cmd_compute(&a, out),
        Command::Table1(a) => cmd_table1(&a, out),
        Command::ScalarScan(a) => cmd_scalar_scan(&a, out),
        Command::Export(a) => cmd_export(&a, out),
        Command::Certify(a) => cmd_certify(&a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Lib(e)) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn cmd_compute(a: &ComputeArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let m = mm_read(&a.input)?;
    if !m.is_square() {
        return Err(Failure::Usage(format!(
            "matrix must be square, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let opts = NsOptions {
        max_iterations: a.max_iterations,
        ..NsOptions::default()
    };
    let r = psi_matrix_with(&m, a.ell, a.theta, a.degree, &opts)?;
    crate::mmio::mm_write(&a.output, &r.psi)?;
    if let Some(path) = &a.trace {
        fs::write(path, r.trace.to_csv())?;
    }
    if let Some(path) = &a.seed_trace {
        fs::write(path, r.seed_trace.to_csv())?;
    }
    writeln!(
        out,
        "n = {}, ell = {}, norm = {:e}, s = {}, squaring iterations = {}, seed iterations = {}",
        m.rows(),
        a.ell,
        r.scaling.norm,
        r.scaling.s,
        r.trace.records.len(),
        r.seed_trace.records.len()
    )?;
    Ok(())
}

/// One column of the Padé error table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Table1Column {
    pub d: usize,
    /// `‖ψ₁(B) − ℛ_{d,1}(B)‖_∞` against the reference.
    pub err: f64,
    /// `s(d,4) / min|𝒟_{d,1}|` rounded up to two significant digits.
    pub err_est: f64,
    pub series_value: f64,
    pub denom_min: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table1 {
    pub n: usize,
    pub s: u32,
    pub norm_b: f64,
    pub columns: Vec<Table1Column>,
}

/// Errors of the `[d/d]` ψ₁ approximants, `d = 6..=9`, at `B = A1/2^s`.
pub fn table1(n: usize) -> Result<Table1> {
    const DEGREES: [usize; 4] = [6, 7, 8, 9];
    let a = make_a1(n)?;
    let scaling = scaling_exponent(&a, DEFAULT_THETA)?;
    let b = a.scaled(scaling.factor());
    drop(a);
    let reference = psi_oracle(&b, 1)?;
    let powers = matrix_powers(&b, 9)?;
    let mut columns = Vec::new();
    for d in DEGREES {
        let r = psi_pade_coeffs(d, 1)?;
        let num = combine_powers(r.numerator(), &powers);
        let den = combine_powers(r.denominator(), &powers);
        let approx = solve(&den, &num)?;
        let bound = error_bound(d, DEFAULT_THETA)?;
        columns.push(Table1Column {
            d,
            err: inf_norm(&(&reference - &approx)),
            err_est: round_up_sig(bound.total, 2),
            series_value: bound.series_value,
            denom_min: bound.denom_min,
        });
    }
    Ok(Table1 {
        n,
        s: scaling.s,
        norm_b: inf_norm(&b),
        columns,
    })
}

impl Table1 {
    pub fn render(&self) -> String {
        let mut t = String::new();
        writeln!(t, "A1 with n = {}, s = {}, ||B||_inf = {:.4}", self.n, self.s, self.norm_b).unwrap();
        let row = |t: &mut String, name: &str, f: &dyn Fn(&Table1Column) -> String| {
            write!(t, "{name:<10}").unwrap();
            for c in &self.columns {
                write!(t, "{:>12}", f(c)).unwrap();
            }
            t.push('\n');
        };
        row(&mut t, "d", &|c| c.d.to_string());
        row(&mut t, "err", &|c| format!("{:.1e}", c.err));
        row(&mut t, "err_est", &|c| format!("{:.1e}", c.err_est));
        row(&mut t, "s(d,4)", &|c| format!("{:.3e}", c.series_value));
        row(&mut t, "min|D|", &|c| format!("{:.4}", c.denom_min));
        t
    }
}

fn cmd_table1(a: &Table1Args, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    if a.n < 2 {
        return Err(Failure::Usage("--n must be at least 2".into()));
    }
    write!(out, "{}", table1(a.n)?.render())?;
    Ok(())
}

fn cmd_scalar_scan(a: &ScanArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    if a.ell.is_empty() {
        return Err(Failure::Usage("--ell needs at least one value".into()));
    }
    if a.points < 2 || !(a.t_max > 0.0 && a.t_max.is_finite()) {
        return Err(Failure::Usage("need --points >= 2 and a positive finite --t-max".into()));
    }
    let mut csv = String::from("ell,t,value\n");
    for &ell in &a.ell {
        for k in 0..a.points {
            let t = a.t_max * k as f64 / (a.points - 1) as f64;
            let v = match a.kind {
                ScanKind::H => {
                    if ell < 2 {
                        return Err(Failure::Usage("h scans need ell >= 2".into()));
                    }
                    h_ell(ell, t)?
                }
                ScanKind::Ray => {
                    if ell < 1 {
                        return Err(Failure::Usage("ray scans need ell >= 1".into()));
                    }
                    conv_ratio(ell, Complex64::from_polar(t, a.angle))?
                }
            };
            writeln!(csv, "{ell},{t},{v:e}").unwrap();
        }
    }
    match &a.output {
        Some(p) => fs::write(p, csv)?,
        None => out.write_all(csv.as_bytes())?,
    }
    Ok(())
}

fn build(matrix: TestMatrix, size: usize) -> Result<Matrix> {
    match matrix {
        TestMatrix::A1 => make_a1(size),
        TestMatrix::A2 => make_a2(size),
    }
}

fn cmd_export(a: &ExportArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let m = build(a.matrix, a.size)?;
    let mut buf = Vec::new();
    match a.format {
        Format::Array => write_matrix_market(&mut buf, &m)?,
        Format::Coordinate => write_matrix_market_coordinate(&mut buf, &m)?,
    }
    match &a.output {
        Some(p) => fs::write(p, buf)?,
        None => out.write_all(&buf)?,
    }
    Ok(())
}

fn cmd_certify(a: &CertifyArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    let (m, sym) = match (&a.input, a.matrix, a.size) {
        (Some(p), None, _) => (mm_read(p)?, None),
        (None, Some(TestMatrix::A1), Some(n)) => (make_a1(n)?, Some(a1_symmetrizer(n))),
        (None, Some(TestMatrix::A2), Some(m)) => (make_a2(m)?, None),
        _ => return Err(Failure::Usage("give --input or --matrix with --size".into())),
    };
    let c = certify_left_half_plane(&m, sym.as_deref());
    writeln!(out, "{c:?}")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_cli(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("psifun").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_3() {
        assert_eq!(run_cli(&[]).0, EXIT_USAGE);
        assert_eq!(run_cli(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run_cli(&["scalar-scan"]).0, EXIT_USAGE);
        assert_eq!(run_cli(&["scalar-scan", "--ell", ""]).0, EXIT_USAGE);
        assert_eq!(run_cli(&["scalar-scan", "--ell", "1", "--kind", "h"]).0, EXIT_USAGE);
        assert_eq!(run_cli(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn ray_scan_approaches_half() {
        let (code, out, _) = run_cli(&["scalar-scan", "--ell", "1", "--kind", "ray", "--t-max", "30", "--points", "31"]);
        assert_eq!(code, 0);
        let vals: Vec<f64> = out.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
        assert_eq!(vals.len(), 31);
        assert!(vals.windows(2).all(|w| w[1] >= w[0]));
        assert!(vals.iter().all(|&v| v < 0.5) && vals[30] > 0.49);
    }

    #[test]
    fn small_table_bound_holds() {
        let t = table1(64).unwrap();
        assert_eq!(t.columns.len(), 4);
        for c in &t.columns {
            assert!(c.err <= c.err_est, "d = {}", c.d);
        }
        assert!(t.render().contains("err_est"));
    }

    #[test]
    fn certify_test_matrices() {
        let (code, out, _) = run_cli(&["certify", "--matrix", "a1", "--size", "32"]);
        assert_eq!((code, out.trim()), (0, "Symmetrized"));
        let (code, out, _) = run_cli(&["certify", "--matrix", "a2", "--size", "60"]);
        assert_eq!((code, out.trim()), (0, "Gershgorin"));
        assert_eq!(run_cli(&["certify"]).0, EXIT_USAGE);
    }
}
