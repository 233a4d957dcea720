//! Command-line interface.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::examples::{get_example, list_examples, ExampleEntry, EXAMPLE_IDS};
use crate::exact::{solve_exact, PiecewiseSolution, SolveError};
use crate::model::PiecewiseBvp;
use crate::oracle::{OracleError, DEFAULT_STEP};
use crate::problem_file::{export_problem, read_problem};
use crate::verify::{oracle_solution, verify, Tolerances, VerificationReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_RANK: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "obstacle-bvp", version, about = "Solve piecewise linear obstacle boundary-value problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a problem file and write a sampled solution table.
    Solve(SolveArgs),
    /// Solve built-in examples and compare against published values.
    Reproduce(ReproduceArgs),
    /// Solve a problem file, cross-check numerically and report.
    Verify(VerifyArgs),
    /// List built-in examples.
    List,
    /// Write a built-in example as a problem file.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 201, value_parser = clap::value_parser!(u64).range(2..))]
    pub samples: u64,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Example id, or `all`.
    #[arg(long, required_unless_present = "all")]
    pub example: Option<String>,
    /// Also compare against the shooting solver.
    #[arg(long)]
    pub oracle: bool,
    /// Reproduce every example.
    #[arg(long)]
    pub all: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Shooting step size.
    #[arg(long, default_value_t = DEFAULT_STEP)]
    pub step: f64,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub example: String,
    /// Destination file; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Runs `cli`, writing normal output to `out` and diagnostics to `err`.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(&a.input, &a.output, a.samples as usize, out, err),
        Command::Reproduce(a) => {
            let id = if a.all { "all".to_string() } else { a.example.unwrap_or_default() };
            cmd_reproduce(&id, a.oracle, out, err)
        }
        Command::Verify(a) => cmd_verify(&a.input, a.step, a.json, out, err),
        Command::List => cmd_list(out),
        Command::Export(a) => cmd_export(&a.example, a.output.as_deref(), out, err),
    };
    result.unwrap_or_else(|e| {
        let _ = writeln!(err, "error: {e}");
        EXIT_INPUT
    })
}

fn solve_exit_code(e: &SolveError) -> i32 {
    match e {
        SolveError::Invalid(_) | SolveError::Basis(_) => EXIT_INPUT,
        SolveError::RankDeficient(_) | SolveError::Inconsistent { .. } | SolveError::Linear(_) => EXIT_RANK,
    }
}

fn oracle_exit_code(e: &OracleError) -> i32 {
    match e {
        OracleError::RankDeficient(_) | OracleError::Inconsistent { .. } | OracleError::Linear(_) => EXIT_RANK,
        _ => EXIT_INPUT,
    }
}

fn load(path: &Path, err: &mut dyn Write) -> io::Result<Option<PiecewiseBvp>> {
    match read_problem(path) {
        Ok(bvp) => Ok(Some(bvp)),
        Err(e) => {
            writeln!(err, "error: {e}")?;
            Ok(None)
        }
    }
}

fn write_constants(sol: &PiecewiseSolution, out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "{:<20} {:<24} {:>24}", "column", "basis", "value")?;
    for (label, basis, value) in sol.labelled_constants() {
        writeln!(out, "{:<20} {:<24} {:>24.16e}", label.to_string(), basis.to_string(), value)?;
    }
    Ok(())
}

/// Uniform samples on `[a, b]` with the last point exactly `b`.
pub fn sample_points(a: f64, b: f64, samples: usize) -> Vec<f64> {
    let last = (samples - 1) as f64;
    (0..samples)
        .map(|i| if i + 1 == samples { b } else { a + (b - a) * i as f64 / last })
        .collect()
}

/// CSV table `x,piece,u,du1,...` with 17 significant digits.
pub fn solution_table(sol: &PiecewiseSolution, order: usize, samples: usize) -> String {
    let (a, b) = sol.domain();
    let mut s = String::from("x,piece,u");
    for j in 1..order {
        s.push_str(&format!(",du{j}"));
    }
    s.push('\n');
    for x in sample_points(a, b, samples) {
        let k = sol.piece_at(x).expect("sample inside domain");
        s.push_str(&format!("{x:.16e},{k}"));
        for j in 0..order {
            s.push_str(&format!(",{:.16e}", sol.pieces[k].eval(x, j)));
        }
        s.push('\n');
    }
    s
}

pub fn cmd_solve(
    input: &Path,
    output: &Path,
    samples: usize,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> io::Result<i32> {
    let Some(bvp) = load(input, err)? else {
        return Ok(EXIT_INPUT);
    };
    let sol = match solve_exact(&bvp) {
        Ok(sol) => sol,
        Err(e) => {
            writeln!(err, "error: {e}")?;
            return Ok(solve_exit_code(&e));
        }
    };
    if let Err(e) = std::fs::write(output, solution_table(&sol, bvp.order, samples.max(2))) {
        writeln!(err, "error: cannot write {}: {e}", output.display())?;
        return Ok(EXIT_INPUT);
    }
    writeln!(
        out,
        "{} pieces, {} constants, rank {}, residual {:.3e}",
        sol.pieces.len(),
        sol.labelled_constants().len(),
        sol.rank_report.rank,
        sol.rank_report.residual_norm
    )?;
    write_constants(&sol, out)?;
    Ok(EXIT_OK)
}

pub fn cmd_verify(input: &Path, step: f64, json: bool, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<i32> {
    let Some(bvp) = load(input, err)? else {
        return Ok(EXIT_INPUT);
    };
    let sol = match solve_exact(&bvp) {
        Ok(sol) => sol,
        Err(e) => {
            writeln!(err, "error: {e}")?;
            return Ok(solve_exit_code(&e));
        }
    };
    let numeric = match oracle_solution(&bvp, &sol, step) {
        Ok(n) => n,
        Err(e) => {
            writeln!(err, "error: oracle: {e}")?;
            return Ok(oracle_exit_code(&e));
        }
    };
    let report = verify(&sol, &bvp, Some(&numeric), Tolerances::default()).expect("same problem, same domain");
    if json {
        writeln!(out, "{}", report.to_json())?;
    } else {
        writeln!(out, "{report}")?;
    }
    Ok(if report.pass { EXIT_OK } else { EXIT_VERIFY })
}

/// Outcome of reproducing one registry entry.
#[derive(Debug)]
pub struct Reproduction {
    pub id: &'static str,
    pub report: Option<VerificationReport>,
    pub error: Option<String>,
}

impl Reproduction {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.report.as_ref().is_some_and(|r| r.pass)
    }
}

/// Solves, verifies and, when requested, cross-checks one entry. Flagged
/// entries never run the oracle.
pub fn reproduce_entry(entry: &ExampleEntry, with_oracle: bool, out: &mut dyn Write) -> io::Result<Reproduction> {
    writeln!(out, "== {} : {}", entry.id, entry.title)?;
    if entry.inconsistent {
        writeln!(out, "!! published solution is inconsistent; oracle comparison skipped")?;
    }
    for note in &entry.notes {
        writeln!(out, "   note: {note}")?;
    }
    let mut rep = Reproduction {
        id: entry.id,
        report: None,
        error: None,
    };
    let sol = match solve_exact(&entry.bvp) {
        Ok(sol) => sol,
        Err(e) => {
            writeln!(out, "   solve: {e}")?;
            rep.error = Some(e.to_string());
            return Ok(rep);
        }
    };
    if !entry.published_constants.is_empty() {
        writeln!(out, "{:<8} {:<20} {:>24} {:>24} {:>11}", "name", "column", "solver", "published", "delta")?;
    }
    for c in &entry.published_constants {
        let got = sol.constant(c.label);
        let tag = if c.trusted { "" } else { "  (info)" };
        writeln!(
            out,
            "{:<8} {:<20} {:>24.16e} {:>24.16e} {:>11.3e}{tag}",
            c.name,
            c.label.to_string(),
            got,
            c.value,
            (got - c.value).abs()
        )?;
    }
    let numeric = if with_oracle && !entry.inconsistent {
        match oracle_solution(&entry.bvp, &sol, DEFAULT_STEP) {
            Ok(n) => Some(n),
            Err(e) => {
                writeln!(out, "   oracle: {e}")?;
                rep.error = Some(e.to_string());
                return Ok(rep);
            }
        }
    } else {
        None
    };
    let mut report = verify(&sol, &entry.bvp, numeric.as_ref(), Tolerances::default()).expect("same domain");
    let trusted_ok = entry
        .published_constants
        .iter()
        .filter(|c| c.trusted)
        .all(|c| (sol.constant(c.label) - c.value).abs() <= 1e-9);
    if !trusted_ok {
        writeln!(out, "   published constants differ by more than 1e-9")?;
        report.pass = false;
    }
    writeln!(out, "{report}")?;
    rep.report = Some(report);
    Ok(rep)
}

pub fn cmd_reproduce(id: &str, with_oracle: bool, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<i32> {
    let ids: Vec<&str> = if id == "all" { EXAMPLE_IDS.to_vec() } else { vec![id] };
    let mut ok = true;
    for id in ids {
        let entry = match get_example(id) {
            Ok(e) => e,
            Err(e) => {
                writeln!(err, "error: {e}")?;
                return Ok(EXIT_INPUT);
            }
        };
        let rep = reproduce_entry(&entry, with_oracle, out)?;
        if !entry.inconsistent && !rep.passed() {
            ok = false;
        }
    }
    Ok(if ok { EXIT_OK } else { EXIT_VERIFY })
}

pub fn cmd_list(out: &mut dyn Write) -> io::Result<i32> {
    for e in list_examples() {
        let mut flags = Vec::new();
        if e.has_reference {
            flags.push("reference");
        }
        if e.inconsistent {
            flags.push("inconsistent");
        }
        writeln!(out, "{:<6} [{}] {}", e.id, flags.join(","), e.title)?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_export(id: &str, output: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<i32> {
    let entry = match get_example(id) {
        Ok(e) => e,
        Err(e) => {
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_INPUT);
        }
    };
    let text = export_problem(&entry.bvp);
    match output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                writeln!(err, "error: cannot write {}: {e}", path.display())?;
                return Ok(EXIT_INPUT);
            }
        }
        None => writeln!(out, "{text}")?,
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let cli = Cli::try_parse_from(std::iter::once("obstacle-bvp").chain(args.iter().copied())).unwrap();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(cli, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn list_shows_flags() {
        let (code, out, _) = run_args(&["list"]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(out.lines().count(), 9);
        assert!(out.lines().any(|l| l.starts_with("3.1.5") && l.contains("inconsistent")));
    }

    #[test]
    fn reproduce_flagged_entry_exits_zero_with_banner() {
        let (code, out, _) = run_args(&["reproduce", "--example", "3.1.5", "--oracle"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("inconsistent; oracle comparison skipped"));
        assert!(!out.contains("oracle delta"));
    }

    #[test]
    fn reproduce_shows_published_constants() {
        let (code, out, _) = run_args(&["reproduce", "--example", "3.1.4"]);
        assert_eq!(code, EXIT_OK, "{out}");
        assert!(out.contains("a1"));
        assert!(out.contains("overall: PASS"));
    }

    #[test]
    fn reproduce_unknown_id() {
        let (code, _, err) = run_args(&["reproduce", "--example", "7.7"]);
        assert_eq!(code, EXIT_INPUT);
        assert!(err.contains("unknown example"));
    }

    #[test]
    fn table_rows_and_monotonicity() {
        let bvp = get_example("3.1.1").unwrap().bvp;
        let sol = solve_exact(&bvp).unwrap();
        let table = solution_table(&sol, 2, 57);
        let mut lines = table.lines();
        assert_eq!(lines.next(), Some("x,piece,u,du1"));
        let rows: Vec<(f64, usize)> = lines
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                (f[0].parse().unwrap(), f[1].parse().unwrap())
            })
            .collect();
        assert_eq!(rows.len(), 57);
        assert!(rows.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 >= w[0].1));
        assert_eq!(rows.last().unwrap().0, 1.0);
    }
}
