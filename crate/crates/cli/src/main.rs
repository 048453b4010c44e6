//! `spmd`: run one expression over a numeric grid, in parallel, with all
//! coordination flowing through files in a shared work directory.
//!
//! The same binary is both the master (`run`, `bench`) and the worker
//! (`worker`); the master spawns itself in worker mode unless a launcher
//! template says otherwise. Exit codes: 0 success, 1 runtime failure,
//! 2 usage or validation error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};

use spmd_core::bench::{
    self, best_nproc, embedded_table1, emit_csv, emit_plot_data, render_table, run_grid, speedup,
    BenchConfig, BenchError,
};
use spmd_core::expr::{self, Expr, ExprError};
use spmd_core::grid::{self, GridSpec};
use spmd_core::master::{run_job, JobSpec, LaunchConfig, MasterError, MergedResult, TimingReport};
use spmd_core::protocol::format_f64;
use spmd_core::worker::run_worker;

#[derive(Parser)]
#[command(
    name = "spmd",
    version,
    about = "Parallel evaluation of an expression over a grid, coordinated through shared files"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an expression at one point or over a range.
    Eval {
        /// Expression in x, e.g. "5432.060708*cos((sin(x^9.876))^-1.2345)".
        #[arg(long)]
        expr: String,
        /// Single evaluation point (exclusive with --from/--to/--step).
        #[arg(long)]
        x: Option<f64>,
        /// Range start.
        #[arg(long)]
        from: Option<f64>,
        /// Range end (inclusive).
        #[arg(long)]
        to: Option<f64>,
        /// Range step.
        #[arg(long)]
        step: Option<f64>,
    },
    /// Show how a grid would be partitioned across workers.
    Plan {
        /// Upper end of the grid; the lower end is 0.
        #[arg(long)]
        maxvalue: f64,
        /// Grid step; maxvalue must be a multiple of it.
        #[arg(long)]
        step: f64,
        /// Number of workers.
        #[arg(long)]
        nproc: u32,
    },
    /// Run one parallel job and print its timing report.
    Run {
        /// Number of workers.
        #[arg(long)]
        nproc: u32,
        /// Upper end of the grid; the lower end is 0.
        #[arg(long)]
        maxvalue: f64,
        /// Grid step; maxvalue must be a multiple of it.
        #[arg(long)]
        step: f64,
        /// Expression to evaluate at every grid point.
        #[arg(long)]
        expr: String,
        /// Shared work directory (created if missing).
        #[arg(long, env = "SPMD_WORKDIR")]
        workdir: PathBuf,
        /// Comma-separated node names for remote launches (round-robin).
        #[arg(long, value_delimiter = ',')]
        nodes: Vec<String>,
        /// Launch command template with {spec} and, with --nodes, {node};
        /// run through `sh -c`. Example: "ssh {node} spmd worker --spec {spec}".
        #[arg(long)]
        launcher: Option<String>,
        /// Compute but do not store values; final.out is not written.
        #[arg(long)]
        no_store: bool,
        /// Pause between lock-file scans, in milliseconds.
        #[arg(long, default_value_t = 100)]
        poll_ms: u64,
        /// Give up after this many seconds; default is to wait forever.
        #[arg(long)]
        timeout_s: Option<f64>,
    },
    /// Worker mode: execute one spec file and exit.
    Worker {
        /// Path to the fileworker<rank>.spec file to execute.
        #[arg(long)]
        spec: PathBuf,
    },
    /// Run the timing sweep over worker counts and grid sizes.
    Bench {
        /// Comma-separated worker counts, one table column each.
        #[arg(long, value_delimiter = ',', default_value = "2,4,6,8,10,12,14,16")]
        nproc_list: Vec<u32>,
        /// Comma-separated grid-size multipliers, one table row each.
        #[arg(long, value_delimiter = ',', default_value = "2,4,6")]
        m_list: Vec<u32>,
        /// Each row uses maxvalue = m * scale.
        #[arg(long, default_value_t = bench::DEFAULT_SCALE)]
        scale: u64,
        /// Grid step.
        #[arg(long, default_value_t = bench::DEFAULT_STEP)]
        step: f64,
        /// Workload expression.
        #[arg(long, default_value = bench::DEFAULT_EXPRESSION)]
        expr: String,
        /// Shared work directory (required unless --check-table1).
        #[arg(long, env = "SPMD_WORKDIR")]
        workdir: Option<PathBuf>,
        /// Compute but do not store values in the worker results.
        #[arg(long)]
        no_store: bool,
        /// Also write m,nproc,seconds,wall_seconds rows to this CSV file.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Also write per-m plot data files into this directory.
        #[arg(long)]
        plot_dir: Option<PathBuf>,
        /// Skip live runs; regression-check the speedup arithmetic against
        /// the embedded reference table.
        #[arg(long)]
        check_table1: bool,
        /// Runs per cell; cells record the arithmetic mean.
        #[arg(long, default_value_t = 1)]
        repetitions: u32,
    },
    /// Print the speedup of one time over a reference time.
    Speedup {
        /// Reference time in seconds.
        #[arg(long = "ref")]
        reference: f64,
        /// Compared time in seconds.
        #[arg(long)]
        val: f64,
    },
}

enum CliError {
    /// Bad flags or inputs; exit 2.
    Usage(String),
    /// The job itself failed; exit 1.
    Runtime(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Eval {
            expr,
            x,
            from,
            to,
            step,
        } => cmd_eval(&expr, x, from, to, step),
        Command::Plan {
            maxvalue,
            step,
            nproc,
        } => cmd_plan(maxvalue, step, nproc),
        Command::Run {
            nproc,
            maxvalue,
            step,
            expr,
            workdir,
            nodes,
            launcher,
            no_store,
            poll_ms,
            timeout_s,
        } => cmd_run(
            nproc, maxvalue, step, &expr, &workdir, nodes, launcher, no_store, poll_ms, timeout_s,
        ),
        Command::Worker { spec } => cmd_worker(&spec),
        Command::Bench {
            nproc_list,
            m_list,
            scale,
            step,
            expr,
            workdir,
            no_store,
            csv,
            plot_dir,
            check_table1,
            repetitions,
        } => {
            if check_table1 {
                cmd_bench_check_table1()
            } else {
                cmd_bench_live(
                    nproc_list,
                    m_list,
                    scale,
                    step,
                    expr,
                    workdir,
                    no_store,
                    csv,
                    plot_dir,
                    repetitions,
                )
            }
        }
        Command::Speedup { reference, val } => cmd_speedup(reference, val),
    }
}

/// Multi-line parse diagnostic with a caret under the offending offset.
fn expr_diagnostic(source: &str, err: &ExprError) -> String {
    let position = err.position().min(source.len());
    format!("{err}\n  {source}\n  {:>width$}", "^", width = position + 1)
}

fn parse_expression(source: &str) -> Result<Expr, CliError> {
    expr::parse(source).map_err(|err| CliError::Usage(expr_diagnostic(source, &err)))
}

/// Usage error for config/validation problems, runtime error for everything
/// that happens once the job is underway.
fn classify(err: MasterError) -> CliError {
    match &err {
        MasterError::InvalidJob(_)
        | MasterError::InvalidConfig(_)
        | MasterError::EmptyNodeList
        | MasterError::Grid(_)
        | MasterError::Expr(_) => CliError::Usage(err.to_string()),
        _ => CliError::Runtime(err.to_string()),
    }
}

fn classify_bench(err: BenchError) -> CliError {
    match &err {
        BenchError::InvalidConfig(_)
        | BenchError::NonPositiveTime { .. }
        | BenchError::RowNotFound { .. } => CliError::Usage(err.to_string()),
        BenchError::Cell { .. } | BenchError::Io { .. } => CliError::Runtime(err.to_string()),
    }
}

fn cmd_eval(
    source: &str,
    x: Option<f64>,
    from: Option<f64>,
    to: Option<f64>,
    step: Option<f64>,
) -> Result<(), CliError> {
    let ast = parse_expression(source)?;
    let points: Vec<f64> = match (x, from, to, step) {
        (Some(x), None, None, None) => vec![x],
        (None, Some(from), Some(to), Some(step)) => {
            if !(step.is_finite() && step > 0.0) {
                return Err(CliError::Usage(format!(
                    "--step must be positive and finite, got {step}"
                )));
            }
            if to < from {
                return Err(CliError::Usage(format!(
                    "--to {to} is below --from {from}"
                )));
            }
            let count = ((to - from) / step + 1e-9).floor() as u64;
            (0..=count).map(|k| from + k as f64 * step).collect()
        }
        _ => {
            return Err(CliError::Usage(
                "pass either --x or all of --from, --to, --step".into(),
            ))
        }
    };
    let evaluation = ast.eval_grid(&points);
    let mut out = String::new();
    for v in &evaluation.values {
        let _ = writeln!(out, "{}", format_f64(*v));
    }
    print!("{out}");
    eprintln!("nan count: {}", evaluation.nan_count);
    Ok(())
}

fn cmd_plan(maxvalue: f64, step: f64, nproc: u32) -> Result<(), CliError> {
    let grid = GridSpec::new(maxvalue, step).map_err(|e| CliError::Usage(e.to_string()))?;
    let partitions =
        grid::plan_partitions(&grid, nproc).map_err(|e| CliError::Usage(e.to_string()))?;
    println!("rank start_index end_index points");
    for p in &partitions {
        println!(
            "{} {} {} {}",
            p.rank,
            p.start_index,
            p.end_index,
            p.point_count()
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    nproc: u32,
    maxvalue: f64,
    step: f64,
    source: &str,
    workdir: &Path,
    nodes: Vec<String>,
    launcher: Option<String>,
    no_store: bool,
    poll_ms: u64,
    timeout_s: Option<f64>,
) -> Result<(), CliError> {
    parse_expression(source)?;
    let grid = GridSpec::new(maxvalue, step).map_err(|e| CliError::Usage(e.to_string()))?;
    let job = JobSpec {
        nproc,
        grid,
        expression: source.to_string(),
        store_values: !no_store,
    };
    job.validate().map_err(classify)?;

    let timeout = match timeout_s {
        None => None,
        Some(t) if t.is_finite() && t >= 0.0 => Some(Duration::from_secs_f64(t)),
        Some(t) => {
            return Err(CliError::Usage(format!(
                "--timeout-s must be a non-negative number, got {t}"
            )))
        }
    };
    let config = LaunchConfig {
        workdir: workdir.to_path_buf(),
        nodes,
        launcher_template: launcher,
        worker_program: None,
        poll_interval: Duration::from_millis(poll_ms),
        timeout,
    };
    config.validate().map_err(classify)?;

    fs::create_dir_all(workdir)
        .map_err(|e| CliError::Runtime(format!("cannot create workdir {}: {e}", workdir.display())))?;
    let final_path = workdir.join("final.out");
    if final_path.exists() {
        fs::remove_file(&final_path)
            .map_err(|e| CliError::Runtime(format!("cannot remove stale final.out: {e}")))?;
    }

    let (merged, report) = run_job(&job, &config).map_err(classify)?;
    print!("{}", render_timings(&report));
    if job.store_values {
        write_final(&final_path, &merged, &report)
            .map_err(|e| CliError::Runtime(format!("cannot write final.out: {e}")))?;
    }
    Ok(())
}

fn render_timings(report: &TimingReport) -> String {
    format!(
        "wall_elapsed_seconds {:.6}\nmaster_cpu_seconds {:.6}\nsum_worker_cpu_seconds {:.6}\nmean_worker_cpu_seconds {:.6}\n",
        report.wall_elapsed_seconds,
        report.master_cpu_seconds,
        report.sum_worker_cpu_seconds,
        report.mean_worker_cpu_seconds,
    )
}

/// Merged values in the result-file format, without the rank line.
fn write_final(
    path: &Path,
    merged: &MergedResult,
    report: &TimingReport,
) -> std::io::Result<()> {
    let mut text = String::new();
    text.push_str("# spmdresult v1\n");
    let _ = writeln!(text, "value_count={}", merged.values.len());
    let _ = writeln!(text, "nan_count={}", merged.total_nan_count);
    let _ = writeln!(
        text,
        "cpu_seconds={}",
        format_f64(report.sum_worker_cpu_seconds)
    );
    for v in &merged.values {
        let _ = writeln!(text, "{}", format_f64(*v));
    }
    fs::write(path, text)
}

fn cmd_worker(spec: &Path) -> Result<(), CliError> {
    run_worker(spec).map_err(|e| CliError::Runtime(e.to_string()))
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench_live(
    nproc_list: Vec<u32>,
    m_list: Vec<u32>,
    scale: u64,
    step: f64,
    expression: String,
    workdir: Option<PathBuf>,
    no_store: bool,
    csv: Option<PathBuf>,
    plot_dir: Option<PathBuf>,
    repetitions: u32,
) -> Result<(), CliError> {
    parse_expression(&expression)?;
    let config = BenchConfig {
        nproc_list,
        m_list,
        scale,
        step,
        expression,
        store_values: !no_store,
        repetitions,
    };
    config.validate().map_err(classify_bench)?;
    let workdir = workdir.ok_or_else(|| {
        CliError::Usage("--workdir is required unless --check-table1 is given".into())
    })?;
    fs::create_dir_all(&workdir)
        .map_err(|e| CliError::Runtime(format!("cannot create workdir {}: {e}", workdir.display())))?;

    let cells = config.m_list.len() * config.nproc_list.len();
    eprintln!(
        "running {} x {} = {cells} cells sequentially in {}",
        config.m_list.len(),
        config.nproc_list.len(),
        workdir.display()
    );
    let launch = LaunchConfig::local(workdir);
    let table = run_grid(&config, &launch).map_err(classify_bench)?;
    print!("{}", render_table(&table));

    if let Some(path) = csv {
        emit_csv(&table, &path).map_err(classify_bench)?;
    }
    if let Some(dir) = plot_dir {
        emit_plot_data(&table, &dir).map_err(classify_bench)?;
    }
    Ok(())
}

/// Regression-checks the speedup arithmetic against the embedded reference
/// table, printing the headline figures on success.
fn cmd_bench_check_table1() -> Result<(), CliError> {
    let table = embedded_table1();
    let mut problems = Vec::new();

    let s_m2 = speedup(
        table.cell(2, 2).unwrap(),
        table.cell(2, 8).unwrap(),
    )
    .map_err(classify_bench)?;
    if (s_m2 - 2.1405).abs() > 5e-4 {
        problems.push(format!("speedup at m=2 is {s_m2}, expected about 2.1405"));
    }
    let s_m6 = speedup(
        table.cell(6, 2).unwrap(),
        table.cell(6, 8).unwrap(),
    )
    .map_err(classify_bench)?;
    if (s_m6 - 3.3589).abs() > 5e-4 {
        problems.push(format!("speedup at m=6 is {s_m6}, expected about 3.3589"));
    }
    for &m in table.m_values() {
        match best_nproc(&table, m) {
            Ok(8) => {}
            Ok(other) => problems.push(format!("best nproc for m={m} is {other}, expected 8")),
            Err(e) => problems.push(e.to_string()),
        }
        let at4 = table.cell(m, 4).unwrap();
        if !(at4 < table.cell(m, 2).unwrap() && at4 < table.cell(m, 6).unwrap()) {
            problems.push(format!("nproc=4 is not a local peak for m={m}"));
        }
    }

    if !problems.is_empty() {
        return Err(CliError::Runtime(format!(
            "reference-table regression failed: {}",
            problems.join("; ")
        )));
    }
    println!("speedup nproc 2 -> 8 at m=2: {s_m2:.4}");
    println!("speedup nproc 2 -> 8 at m=6: {s_m6:.4}");
    println!("best nproc = 8 for all m");
    Ok(())
}

fn cmd_speedup(reference: f64, val: f64) -> Result<(), CliError> {
    if !(reference.is_finite() && val.is_finite()) {
        return Err(CliError::Usage(format!(
            "times must be finite, got --ref {reference} --val {val}"
        )));
    }
    let ratio = speedup(reference, val).map_err(classify_bench)?;
    println!("{ratio:.4}");
    Ok(())
}
