//! The `swv` command line.

use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::io::{csv_row, load_fields, parse_list, parse_real, save_fields, write_fields_csv, RunConfig, SwvJson, CSV_HEADER};
use crate::lattice::TorusLattice;
use crate::linearization::{assembled_block_indices, numerical_index, riemann_roch_expectation, IndexOperator};
use crate::quaternion::{Quaternion, Target};
use crate::solver::{epsilon_continuation, solve_adiabatic_limit, solve_observed, SolveReport};
use crate::verify::{run_suite, Suite};
use clap::{Parser, Subcommand, ValueEnum};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_AMBIGUOUS_GAP: i32 = 5;

#[derive(Parser, Debug)]
#[command(name = "swv", version, about = "Lattice solver for the reduced Seiberg-Witten equations on a torus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve from a run configuration; writes checkpoints, the final fields,
    /// a CSV log and a JSON report.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a seeded identity suite and print a JSON report.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Count kernel and cokernel of an operator block.
    Index {
        #[arg(long)]
        op: String,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        degree: i32,
        /// Lattice as NxM.
        #[arg(long, default_value = "16x16")]
        size: String,
        /// Field file for the `dirac` and `full` operators.
        #[arg(long = "in")]
        input: Option<PathBuf>,
    },
    /// Continuation in ε along a schedule, warm-started stage to stage.
    ScanEpsilon {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        schedule: String,
    },
    /// Convert a field file to CSV or JSON.
    Export {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        format: ExportFormat,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Csv,
    Json,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidLattice(_) | Error::SizeMismatch { .. } => EXIT_CONFIG,
        Error::NontrivialDegree(_) | Error::NonFlatMetric => EXIT_CONFIG,
        Error::Divergence(_) => EXIT_DIVERGENCE,
        Error::AmbiguousGap(_) => EXIT_AMBIGUOUS_GAP,
        Error::Io(_) | Error::Format(_) | Error::Json(_) => EXIT_IO,
    }
}

/// Thread cap from `SWV_THREADS`; unset, empty or zero means no cap.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var("SWV_THREADS") {
        Ok(v) if !v.trim().is_empty() => {
            let n: usize = v.trim().parse().map_err(|_| Error::Config(format!("SWV_THREADS: not a count: '{v}'")))?;
            Ok((n > 0).then_some(n))
        }
        _ => Ok(None),
    }
}

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let outcome = thread_cap().and_then(|cap| {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cap {
            b = b.num_threads(n);
        }
        let pool = b.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| dispatch(cli.command))
    });
    match outcome {
        Ok(code) => code,
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Solve { config } => cmd_solve(&config),
        Command::Verify { suite, seed } => cmd_verify(suite.parse()?, seed),
        Command::Index { op, degree, size, input } => cmd_index(op.parse()?, degree, &size, input.as_deref()),
        Command::ScanEpsilon { config, schedule } => cmd_scan(&config, &schedule),
        Command::Export { input, format, out } => cmd_export(&input, format, out.as_deref()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write_json<T: serde::Serialize>(path: &Path, v: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn cmd_solve(path: &Path) -> Result<i32> {
    let rc = RunConfig::load(path)?;
    rc.check_output_dir()?;
    let q0 = rc.initial()?;
    let mut log = create(&rc.output_path(".csv"))?;
    writeln!(log, "{CSV_HEADER}")?;
    let checkpoint = rc.output_path(".checkpoint.swv");
    let mut io_err: Option<Error> = None;
    let mut observer = |r: &crate::solver::IterationRecord, q: &Configuration| {
        if io_err.is_some() {
            return;
        }
        let mut step = || -> Result<()> {
            writeln!(log, "{}", csv_row(r))?;
            if rc.checkpoint_every > 0 && r.iter > 0 && r.iter % rc.checkpoint_every == 0 {
                save_fields(&checkpoint, q)?;
            }
            Ok(())
        };
        if let Err(e) = step() {
            io_err = Some(e);
        }
    };
    let (q, report) = if q0.epsilon == 0.0 {
        solve_adiabatic_limit(&q0, &rc.solver)?
    } else {
        solve_observed(&q0, &rc.solver, [1.0; 3], &mut observer)?
    };
    if let Some(e) = io_err {
        return Err(e);
    }
    if q0.epsilon == 0.0 {
        crate::io::write_history_csv(&mut log, &report.history)?;
    }
    log.flush()?;
    save_fields(&checkpoint, &q)?;
    save_fields(&rc.output_path(".swv"), &q)?;
    write_json(&rc.output_path(".report.json"), &report)?;
    summarize(&report);
    Ok(if report.converged { EXIT_OK } else { EXIT_FAILED })
}

fn summarize(r: &SolveReport) {
    eprintln!(
        "{}: {} after {} iterations, |F| = {:.3e} ({})",
        serde_json::to_value(r.method).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
        if r.converged { "converged" } else { "not converged" },
        r.iterations,
        r.residual,
        r.message
    );
    if let Some(v) = &r.vortices {
        eprintln!("vortex count {} over {} plaquettes{}", v.count, v.zeros, if v.degenerate { " (degenerate)" } else { "" });
    }
}

pub fn cmd_verify(suite: Suite, seed: u64) -> Result<i32> {
    let results = run_suite(suite, seed)?;
    println!("{}", serde_json::to_string_pretty(&results)?);
    let failed: Vec<&str> = results.iter().filter(|c| !c.pass).map(|c| c.check.as_str()).collect();
    if failed.is_empty() {
        eprintln!("{} checks passed", results.len());
        Ok(EXIT_OK)
    } else {
        for c in results.iter().filter(|c| !c.pass) {
            eprintln!("FAILED {}: defect {:.3e} > tolerance {:.1e} on {}", c.check, c.defect, c.tolerance, c.lattice);
        }
        Ok(EXIT_FAILED)
    }
}

pub fn parse_size(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("size must look like 16x16, got '{s}'"));
    let (a, b) = s.to_ascii_lowercase().split_once('x').map(|(a, b)| (a.to_string(), b.to_string())).ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

/// The constant solution `u = √2` with `t = 1` on the trivial bundle.
pub fn trivial_solution(lat: &TorusLattice) -> Configuration {
    let mut q = Configuration::zero(lat.clone(), Target::uniform(1), 0);
    q.tau = 1.0;
    q.u.values.iter_mut().for_each(|v| *v = Quaternion::ONE.scale(2f64.sqrt()));
    q
}

pub fn cmd_index(op: IndexOperator, degree: i32, size: &str, input: Option<&Path>) -> Result<i32> {
    let (nx, ny) = parse_size(size)?;
    if nx * ny > 32 * 32 {
        return Err(Error::Config(format!("index computations need at most 32x32 sites, got {nx}x{ny}")));
    }
    let lat = TorusLattice::new(nx, ny, 1.0, 1.0)?;
    let q = match (op, input) {
        (_, Some(p)) => {
            let q = load_fields(p)?;
            if q.lattice.nx != nx || q.lattice.ny != ny || q.degree() != degree {
                return Err(Error::Config(format!("{} is {} at degree {}, not {size} at degree {degree}", p.display(), q.lattice.label(), q.degree())));
            }
            q
        }
        (IndexOperator::Dirac | IndexOperator::Full, None) if degree != 0 => {
            return Err(Error::Config(format!("operator {} at degree {degree} needs a stored solution (--in)", op.name())));
        }
        (IndexOperator::Dirac | IndexOperator::Full, None) => trivial_solution(&lat),
        (_, None) => Configuration::zero(lat, Target::uniform(1), degree),
    };
    let rec = numerical_index(op, &q)?;
    println!("{}", serde_json::to_string(&rec)?);
    if op == IndexOperator::Full {
        let blocks = assembled_block_indices(&q)?;
        let sum: i64 = blocks.iter().map(|b| b.index).sum();
        let verdict = if sum == rec.index { "matches" } else { "differs from" };
        eprintln!("index {} {verdict} the block sum {sum} ({})", rec.index,
            blocks.iter().map(|b| format!("{} {}", b.operator, b.index)).collect::<Vec<_>>().join(", "));
    }
    let expect = riemann_roch_expectation(op, &q.target, q.degree());
    let verdict = if expect == rec.index { "matches" } else { "differs from" };
    eprintln!("index {} {verdict} the Riemann-Roch value {expect}", rec.index);
    Ok(EXIT_OK)
}

pub fn cmd_scan(path: &Path, schedule: &str) -> Result<i32> {
    let mut rc = RunConfig::load(path)?;
    rc.solver.epsilon_schedule = parse_list(schedule, parse_real)?;
    if rc.solver.epsilon_schedule.is_empty() {
        return Err(Error::Config("empty schedule".into()));
    }
    rc.solver.validate()?;
    rc.check_output_dir()?;
    let q0 = rc.initial()?;
    let result = epsilon_continuation(&q0, &rc.solver)?;
    let mut csv = create(&rc.output_path(".scan.csv"))?;
    writeln!(csv, "epsilon,converged,iterations,residual,mu_norm,dirac_norm")?;
    for (k, s) in result.stages.iter().enumerate() {
        writeln!(
            csv,
            "{},{},{},{:e},{:e},{:e}",
            s.epsilon, s.report.converged, s.report.iterations, s.report.residual, s.mu_norm, s.dirac_norm
        )?;
        if let Some(q) = &s.config {
            save_fields(&rc.output_path(&format!(".stage{k}.swv")), q)?;
        }
        eprintln!("ε = {}: |F| = {:.3e}, |μ∘u| = {:.3e}", s.epsilon, s.report.residual, s.mu_norm);
    }
    csv.flush()?;
    write_json(&rc.output_path(".scan.json"), &result)?;
    if !result.completed {
        eprintln!("continuation stopped: {}", result.message);
    }
    Ok(if result.completed { EXIT_OK } else { EXIT_FAILED })
}

pub fn cmd_export(input: &Path, format: ExportFormat, out: Option<&Path>) -> Result<i32> {
    let q = load_fields(input)?;
    let mut sink: Box<dyn Write> = match out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    };
    match format {
        ExportFormat::Csv => write_fields_csv(&mut sink, &q)?,
        ExportFormat::Json => {
            serde_json::to_writer(&mut sink, &SwvJson::from_config(&q))?;
            writeln!(sink)?;
        }
    }
    sink.flush()?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_parse() {
        assert_eq!(parse_size("16x24").unwrap(), (16, 24));
        assert_eq!(parse_size("8X8").unwrap(), (8, 8));
        assert!(parse_size("16").is_err());
        assert!(parse_size("ax4").is_err());
    }

    #[test]
    fn error_kinds_map_to_exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::Divergence("x".into())), 3);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), 4);
        assert_eq!(exit_code(&Error::AmbiguousGap("x".into())), 5);
    }

    #[test]
    fn bad_arguments_are_config_errors() {
        assert_eq!(run(["swv", "frobnicate"]), EXIT_CONFIG);
        assert_eq!(run(["swv", "verify", "--suite", "nope"]), EXIT_CONFIG);
        assert_eq!(run(["swv", "index", "--op", "dbar", "--size", "64x64"]), EXIT_CONFIG);
    }

    #[test]
    fn trivial_solution_solves() {
        let q = trivial_solution(&TorusLattice::unit(8, 8).unwrap());
        assert!(crate::equations::residual_2d(&q).norm(&q.lattice) < 1e-14);
    }
}
