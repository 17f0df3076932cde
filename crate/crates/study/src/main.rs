//! Command-line front end for the refinement studies.
//!
//! `robinopt benchmark` runs the boundary-bump tracking study and emits the
//! error/EOC table plus the finest level's control curve; `robinopt mms`
//! runs the manufactured-solution verification table.  Exit codes: 0 on
//! success, 2 when a solve fails to converge (the table is still emitted,
//! with the affected rows computed from the last iterate) or on invalid
//! arguments, 3 on file-output failures.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use robinopt_core::fem::assemble_robin;
use robinopt_core::mesh::MeshHierarchy;
use robinopt_core::sparse::CsrMatrix;
use robinopt_study::benchmark::{
    run_benchmark, BenchmarkOutcome, BenchmarkSpec, BumpAxis, LevelLog, RunOptions, SolverChoice,
    StudyError,
};
use robinopt_study::emit;
use robinopt_study::mms::run_mms;

/// Mesh-refinement studies for bilinear Robin boundary control on the unit square.
#[derive(Parser)]
#[command(name = "robinopt", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Boundary-bump tracking benchmark: solve the control problem per level
    /// and tabulate control errors against a fine reference solution.
    Benchmark(BenchmarkArgs),
    /// Manufactured-solution verification: solve the state equation per level
    /// against a closed-form solution and tabulate error norms.
    Mms(MmsArgs),
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Finest study level.
    #[arg(long, default_value_t = 7)]
    max_level: u32,
    /// Reference level; must exceed the finest study level by at least 2.
    #[arg(long, default_value_t = 9)]
    ref_level: u32,
    /// Control-cost weight.
    #[arg(long, default_value_t = 1e-2)]
    alpha: f64,
    /// Lower control bound.
    #[arg(long, default_value_t = 0.0)]
    ua: f64,
    /// Upper control bound: a number, or `inf` for unbounded.
    #[arg(long, default_value = "inf", value_parser = parse_upper)]
    ub: Upper,
    /// Outer-iteration tolerance on the boundary residual norm.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Outer-iteration budget.
    #[arg(long, default_value_t = 30)]
    max_iter: usize,
    /// Outer solver.
    #[arg(long, value_enum, default_value_t = SolverArg::Pdas)]
    solver: SolverArg,
    /// Coordinate the bump profile reads on the side x1 = 0; `x1` takes the
    /// printed formula literally, collapsing the profile to its floor value.
    #[arg(long, value_enum, default_value_t = BumpAxisArg::X2)]
    bump_axis: BumpAxisArg,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct MmsArgs {
    /// Finest verification level.
    #[arg(long, default_value_t = 7)]
    max_level: u32,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct OutputArgs {
    /// Table format.
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Write the table to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write a plain-text dump of the finest study mesh.
    #[arg(long)]
    dump_mesh: bool,
    /// Also write the finest-level system matrix as coordinate text
    /// (one `row col value` line per entry).
    #[arg(long)]
    dump_system: bool,
    /// Log one line per outer iteration to stderr:
    /// k, residual, lower-active count, upper-active count, inner iterations.
    #[arg(long)]
    verbose: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Pdas,
    FixedPoint,
}

#[derive(Clone, Copy, ValueEnum)]
enum BumpAxisArg {
    X1,
    X2,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// Upper control bound: `None` means unbounded.
#[derive(Clone, Copy)]
struct Upper(Option<f64>);

fn parse_upper(s: &str) -> Result<Upper, String> {
    if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
        return Ok(Upper(None));
    }
    let v: f64 = s
        .parse()
        .map_err(|_| format!("expected a number or `inf`, got `{s}`"))?;
    if v.is_nan() {
        return Err("upper bound cannot be NaN".into());
    }
    if v.is_infinite() {
        return Ok(Upper(if v > 0.0 { None } else { Some(v) }));
    }
    Ok(Upper(Some(v)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Benchmark(args) => run_benchmark_command(args),
        Command::Mms(args) => run_mms_command(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                StudyError::Io { .. } => 3,
                _ => 2,
            })
        }
    }
}

fn run_benchmark_command(args: BenchmarkArgs) -> Result<u8, StudyError> {
    let spec = BenchmarkSpec {
        alpha: args.alpha,
        lower: args.ua,
        upper: args.ub.0,
        bump_axis: match args.bump_axis {
            BumpAxisArg::X1 => BumpAxis::X1,
            BumpAxisArg::X2 => BumpAxis::X2,
        },
        ..BenchmarkSpec::default()
    };
    let solver = match args.solver {
        SolverArg::Pdas => SolverChoice::Pdas,
        SolverArg::FixedPoint => SolverChoice::FixedPoint,
    };
    let run = RunOptions {
        tol: args.tol,
        max_iter: args.max_iter,
    };
    let outcome = run_benchmark(args.max_level, args.ref_level, &spec, solver, &run)?;
    if args.out.verbose {
        print_logs(&outcome.logs);
    }

    let table = match args.out.format {
        FormatArg::Csv => emit::benchmark_csv(&outcome.rows),
        FormatArg::Json => emit::benchmark_json(&outcome.rows),
    };
    deliver(&table, args.out.output.as_deref())?;
    emit::write_file(
        &curve_path(args.out.output.as_deref()),
        &emit::control_curve_csv(&outcome.curve),
    )?;
    write_dumps(&args.out, args.max_level, benchmark_control(&outcome))?;

    if outcome.all_converged {
        Ok(0)
    } else {
        eprintln!("warning: the solver did not converge at every level");
        Ok(2)
    }
}

fn run_mms_command(args: MmsArgs) -> Result<u8, StudyError> {
    let rows = run_mms(args.max_level)?;
    let table = match args.out.format {
        FormatArg::Csv => emit::mms_csv(&rows),
        FormatArg::Json => emit::mms_json(&rows),
    };
    deliver(&table, args.out.output.as_deref())?;
    write_dumps(&args.out, args.max_level, None)?;
    Ok(0)
}

/// Control values of the finest study level, in boundary-edge order.
fn benchmark_control(outcome: &BenchmarkOutcome) -> Option<Vec<f64>> {
    Some(outcome.curve.iter().map(|p| p.value).collect())
}

fn print_logs(logs: &[LevelLog]) {
    for log in logs {
        eprintln!("# level {}", log.level);
        for l in &log.lines {
            eprintln!(
                "{}, {:.5e}, {}, {}, {}",
                l.iteration, l.residual, l.lower_active, l.upper_active, l.inner
            );
        }
    }
}

fn deliver(table: &str, output: Option<&Path>) -> Result<(), StudyError> {
    match output {
        Some(path) => emit::write_file(path, table),
        None => {
            print!("{table}");
            Ok(())
        }
    }
}

/// `results.csv` → `results_control.csv`; stdout → `control_curve.csv`.
fn curve_path(output: Option<&Path>) -> PathBuf {
    match output {
        Some(p) => {
            let stem = p
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("results");
            p.with_file_name(format!("{stem}_control.csv"))
        }
        None => PathBuf::from("control_curve.csv"),
    }
}

/// Writes the requested debug dumps for the finest level.  `control` carries
/// the Robin coefficient to assemble the dumped system with (the converged
/// benchmark control); `None` uses the verification coefficient u = 1.
fn write_dumps(out: &OutputArgs, max_level: u32, control: Option<Vec<f64>>) -> Result<(), StudyError> {
    if !out.dump_mesh && !out.dump_system {
        return Ok(());
    }
    let hier = MeshHierarchy::build(max_level)?;
    let mesh = hier.mesh(max_level);
    if out.dump_mesh {
        let path = PathBuf::from(format!("mesh_level{max_level}.txt"));
        emit::write_file(&path, &mesh.dump())?;
    }
    if out.dump_system {
        let values = control.unwrap_or_else(|| vec![1.0; mesh.num_boundary_edges()]);
        let u = robinopt_core::control::BoundaryControl::new(mesh, values);
        let system = assemble_robin(mesh, &u);
        let path = PathBuf::from(format!("system_level{max_level}.txt"));
        emit::write_file(&path, &coordinate_text(system.matrix()))?;
    }
    Ok(())
}

fn coordinate_text(m: &CsrMatrix) -> String {
    let mut out = String::new();
    for r in 0..m.n() {
        let (cols, vals) = m.row(r);
        for (c, v) in cols.iter().zip(vals) {
            writeln!(out, "{r} {c} {v:e}").expect("writing to a String cannot fail");
        }
    }
    out
}
