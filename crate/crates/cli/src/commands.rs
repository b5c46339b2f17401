use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rkhs_core::problem_model::BUILTIN_NAMES;
use rkhs_core::reference_oracle::{integrate_with, OracleOptions, OracleTrajectory};
use rkhs_core::rkhs_solver::{error_report_with, residual_sup_norm_with, SolveStats};
use rkhs_core::{
    builtin_example, solve_linear, solve_nonlinear, uniform_points, CollocationBasis, ErrorReport,
    Interval, NonlinearOptions, Parallelism, ProblemSpec, RkhsSolution, W23Kernel, TABLE_GRID,
};
use serde::Serialize;

use crate::args::{
    ConvergeArgs, Format, GramDumpArgs, KernelDumpArgs, MethodChoice, ProblemArgs, SolveArgs,
    SolverArgs,
};
use crate::config::{build_problem, load_problem_config, ProblemDefinition};
use crate::error::{CliError, CliResult};

/// Column headers of a solution table with a known exact solution.
pub const ERROR_HEADERS: [&str; 5] = [
    "x_i",
    "Exact solution",
    "Approximate solution",
    "Absolute Error",
    "Relative error",
];
/// Column headers when only the reference integrator is available.
pub const ORACLE_HEADERS: [&str; 4] = [
    "x_i",
    "Approximate solution",
    "Reference solution",
    "Reference deviation",
];

/// Fixed 16-significant-digit formatting so output is byte-stable.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.15e}")
}

/// Resolves the problem source; warnings go to `log`.
pub fn resolve_problem(args: &ProblemArgs, log: &mut dyn Write) -> CliResult<ProblemSpec> {
    let loaded = if let Some(name) = &args.problem {
        return builtin_example(name).ok_or_else(|| {
            CliError::Config(format!(
                "unknown builtin problem `{name}` (expected one of {})",
                BUILTIN_NAMES.join(", ")
            ))
        });
    } else if let Some(path) = &args.config {
        load_problem_config(path, args.strict)?
    } else if let Some(rhs) = &args.rhs {
        let k = args
            .k
            .ok_or_else(|| CliError::Config("--rhs needs --k".into()))?;
        let def = ProblemDefinition {
            name: args.name.clone(),
            k,
            a: args.a.unwrap_or(0.0),
            t: args.t.unwrap_or(1.0),
            alpha: args.alpha.unwrap_or(0.0),
            beta: args.beta.unwrap_or(0.0),
            rhs: rhs.clone(),
            exact: args.exact.clone(),
            linear: args.linear,
        };
        build_problem(&def, args.strict)?
    } else {
        return Err(CliError::Config(
            "no problem given: use --problem, --config or --rhs".into(),
        ));
    };
    for w in &loaded.warnings {
        let _ = writeln!(log, "warning: {w}");
    }
    Ok(loaded.spec)
}

/// `paper` maps [`TABLE_GRID`] onto `[a, T]`; otherwise a comma list,
/// every entry inside `(a, T]`.
pub fn parse_grid(spec: &str, interval: &Interval) -> CliResult<Vec<f64>> {
    let (a, t) = (interval.start(), interval.end());
    if spec.trim() == "paper" {
        return Ok(TABLE_GRID.iter().map(|g| a + g * (t - a)).collect());
    }
    let mut out = Vec::new();
    for item in spec.split(',') {
        let item = item.trim();
        let x: f64 = item
            .parse()
            .map_err(|_| CliError::Config(format!("grid entry `{item}` is not a number")))?;
        if !(x > a && x <= t) {
            return Err(CliError::Config(format!(
                "grid point {x} is outside ({a}, {t}]"
            )));
        }
        out.push(x);
    }
    Ok(out)
}

fn parallelism(sequential: bool) -> Parallelism {
    if sequential {
        Parallelism::Sequential
    } else {
        Parallelism::default()
    }
}

fn build_basis(p: &ProblemSpec, n: usize, mode: Parallelism) -> CliResult<Arc<CollocationBasis>> {
    let points = uniform_points(&p.interval, n)?;
    let kernel = Arc::new(W23Kernel::new(p.interval)?);
    Ok(Arc::new(CollocationBasis::build_with(
        kernel, p.k, points, mode,
    )?))
}

fn run_method(
    p: &ProblemSpec,
    basis: Arc<CollocationBasis>,
    s: &SolverArgs,
) -> CliResult<RkhsSolution> {
    let opts = NonlinearOptions {
        sweeps: s.sweeps,
        tol: s.tol,
        initial: None,
    };
    let linear = match s.method {
        MethodChoice::Auto => p.is_linear(),
        MethodChoice::Linear => true,
        MethodChoice::Nonlinear => false,
    };
    Ok(if linear {
        solve_linear(p, basis)?
    } else {
        solve_nonlinear(p, basis, &opts)?
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleRow {
    pub x: f64,
    pub approximate: f64,
    pub reference: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum SolveTable {
    Exact(ErrorReport),
    Reference {
        rows: Vec<OracleRow>,
        max_deviation: Option<f64>,
        reference_tol: f64,
    },
}

impl SolveTable {
    /// Max absolute error, or max deviation from the reference.
    pub fn max_error(&self) -> Option<f64> {
        match self {
            SolveTable::Exact(r) => r.max_absolute_error,
            SolveTable::Reference { max_deviation, .. } => *max_deviation,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveOutcome {
    pub problem: String,
    pub n: usize,
    pub stats: SolveStats,
    #[serde(flatten)]
    pub table: SolveTable,
    /// Kernel and basis construction.
    #[serde(skip)]
    pub setup_seconds: f64,
    /// Coefficient computation only.
    #[serde(skip)]
    pub solve_seconds: f64,
}

fn reference(p: &ProblemSpec, tol: f64) -> CliResult<OracleTrajectory> {
    Ok(integrate_with(
        p,
        &OracleOptions {
            tol,
            ..OracleOptions::default()
        },
    )?)
}

fn tabulate(
    sol: &RkhsSolution,
    p: &ProblemSpec,
    grid: &[f64],
    oracle: Option<&OracleTrajectory>,
    mode: Parallelism,
) -> CliResult<SolveTable> {
    if p.has_exact() {
        return Ok(SolveTable::Exact(error_report_with(sol, p, grid, mode)?));
    }
    let traj = oracle.expect("reference trajectory when no exact solution");
    let rows = grid
        .iter()
        .map(|&x| {
            let approximate = sol.evaluate(x, 0)?;
            let reference = traj.value(x)?;
            Ok(OracleRow {
                x,
                approximate,
                reference,
                deviation: (approximate - reference).abs(),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let max_deviation = rows.iter().map(|r| r.deviation).reduce(f64::max);
    Ok(SolveTable::Reference {
        rows,
        max_deviation,
        reference_tol: traj.tol,
    })
}

/// Builds, solves and tabulates; no output.
pub fn solve(p: &ProblemSpec, n: usize, s: &SolverArgs) -> CliResult<SolveOutcome> {
    let grid = parse_grid(&s.grid, &p.interval)?;
    let mode = parallelism(s.sequential);
    let oracle = if p.has_exact() {
        None
    } else {
        Some(reference(p, s.oracle_tol)?)
    };
    let t0 = Instant::now();
    let basis = build_basis(p, n, mode)?;
    let t1 = Instant::now();
    let sol = run_method(p, basis, s)?;
    let solve_seconds = t1.elapsed().as_secs_f64();
    let table = tabulate(&sol, p, &grid, oracle.as_ref(), mode)?;
    Ok(SolveOutcome {
        problem: p.name.clone(),
        n,
        stats: sol.stats(),
        table,
        setup_seconds: (t1 - t0).as_secs_f64(),
        solve_seconds,
    })
}

pub fn write_solve_csv(out: &mut dyn Write, table: &SolveTable) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    match table {
        SolveTable::Exact(report) => {
            w.write_record(ERROR_HEADERS)?;
            for r in &report.rows {
                w.write_record([
                    fmt_num(r.x),
                    fmt_num(r.exact),
                    fmt_num(r.approximate),
                    fmt_num(r.absolute_error),
                    r.relative_error.map(fmt_num).unwrap_or_default(),
                ])?;
            }
        }
        SolveTable::Reference { rows, .. } => {
            w.write_record(ORACLE_HEADERS)?;
            for r in rows {
                w.write_record([
                    fmt_num(r.x),
                    fmt_num(r.approximate),
                    fmt_num(r.reference),
                    fmt_num(r.deviation),
                ])?;
            }
        }
    }
    w.flush()
        .map_err(|e| CliError::Config(format!("writing CSV: {e}")))?;
    Ok(())
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(path) => std::fs::write(path, bytes).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

pub fn cmd_solve(args: &SolveArgs, log: &mut dyn Write) -> CliResult<()> {
    let p = resolve_problem(&args.problem, log)?;
    let outcome = solve(&p, args.n, &args.solver)?;
    let mut buf = Vec::new();
    match args.format {
        Format::Csv => write_solve_csv(&mut buf, &outcome.table)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut buf, &outcome)?;
            buf.push(b'\n');
        }
    }
    emit(args.output.as_deref(), &buf)?;
    let label = match outcome.table {
        SolveTable::Exact(_) => "max absolute error",
        SolveTable::Reference { .. } => "max deviation from reference",
    };
    let _ = writeln!(
        log,
        "{}: n = {}, {:?}, {label} {}, setup {:.3} s, solve {:.3} s",
        outcome.problem,
        outcome.n,
        outcome.stats.method,
        outcome
            .table
            .max_error()
            .map(|e| format!("{e:.3e}"))
            .unwrap_or("-".into()),
        outcome.setup_seconds,
        outcome.solve_seconds
    );
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergeRow {
    pub n: usize,
    pub max_abs_error: f64,
    pub residual_sup_norm: f64,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergeSummary {
    pub problem: String,
    /// `max_abs_error` is against the exact solution, else the reference.
    pub against: &'static str,
    pub rows: Vec<ConvergeRow>,
    pub error_monotone: bool,
    pub residual_monotone: bool,
}

pub fn parse_n_list(text: &str) -> CliResult<Vec<usize>> {
    let ns = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| CliError::Config(format!("n list entry `{s}` is not a count")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    if ns.is_empty() {
        return Err(CliError::Config("n list is empty".into()));
    }
    Ok(ns)
}

fn strictly_decreasing(v: impl Iterator<Item = f64>) -> bool {
    let v: Vec<f64> = v.collect();
    v.windows(2).all(|w| w[1] < w[0])
}

pub fn converge(
    p: &ProblemSpec,
    ns: &[usize],
    residual_points: usize,
    s: &SolverArgs,
) -> CliResult<ConvergeSummary> {
    if ns.is_empty() {
        return Err(CliError::Config("n list is empty".into()));
    }
    let grid = parse_grid(&s.grid, &p.interval)?;
    let mode = parallelism(s.sequential);
    let oracle = if p.has_exact() {
        None
    } else {
        Some(reference(p, s.oracle_tol)?)
    };
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let t0 = Instant::now();
        let basis = build_basis(p, n, mode)?;
        let t1 = Instant::now();
        let sol = run_method(p, basis, s)?;
        let solve_seconds = t1.elapsed().as_secs_f64();
        let table = tabulate(&sol, p, &grid, oracle.as_ref(), mode)?;
        rows.push(ConvergeRow {
            n,
            max_abs_error: table.max_error().unwrap_or(0.0),
            residual_sup_norm: residual_sup_norm_with(&sol, p, residual_points, mode)?,
            setup_seconds: (t1 - t0).as_secs_f64(),
            solve_seconds,
        });
    }
    Ok(ConvergeSummary {
        problem: p.name.clone(),
        against: if p.has_exact() { "exact" } else { "reference" },
        error_monotone: strictly_decreasing(rows.iter().map(|r| r.max_abs_error)),
        residual_monotone: strictly_decreasing(rows.iter().map(|r| r.residual_sup_norm)),
        rows,
    })
}

pub fn cmd_converge(args: &ConvergeArgs, log: &mut dyn Write) -> CliResult<()> {
    let ns = parse_n_list(&args.n_list)?;
    let p = resolve_problem(&args.problem, log)?;
    let summary = converge(&p, &ns, args.residual_points, &args.solver)?;
    let mut buf = Vec::new();
    match args.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record([
                "n",
                "max_abs_error",
                "residual_sup_norm",
                "setup_seconds",
                "solve_seconds",
            ])?;
            for r in &summary.rows {
                w.write_record([
                    r.n.to_string(),
                    fmt_num(r.max_abs_error),
                    fmt_num(r.residual_sup_norm),
                    format!("{:.6e}", r.setup_seconds),
                    format!("{:.6e}", r.solve_seconds),
                ])?;
            }
            w.flush()
                .map_err(|e| CliError::Config(format!("writing CSV: {e}")))?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut buf, &summary)?;
            buf.push(b'\n');
        }
    }
    emit(args.output.as_deref(), &buf)?;
    if summary.rows.len() > 1 {
        for (what, ok) in [
            ("max abs error", summary.error_monotone),
            ("residual sup-norm", summary.residual_monotone),
        ] {
            let verdict = if ok {
                "decreasing"
            } else {
                "NOT monotone decreasing"
            };
            let _ = writeln!(log, "{}: {what} {verdict} over n", summary.problem);
        }
    }
    Ok(())
}

pub fn cmd_kernel_dump(args: &KernelDumpArgs, log: &mut dyn Write) -> CliResult<()> {
    let interval = Interval::new(args.a, args.t)?;
    if !(args.x >= args.a && args.x <= args.t) {
        return Err(CliError::Config(format!(
            "x = {} is outside [{}, {}]",
            args.x, args.a, args.t
        )));
    }
    if args.resolution == 0 {
        return Err(CliError::Config("resolution must be ≥ 1".into()));
    }
    let kernel = W23Kernel::new(interval)?;
    let mut buf = Vec::new();
    let mut worst: f64 = 0.0;
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["y", "R", "dR_dy", "d2R_dy2", "symmetry_defect"])?;
        for j in 0..=args.resolution {
            let y = if j == args.resolution {
                args.t
            } else {
                args.a + j as f64 * (args.t - args.a) / args.resolution as f64
            };
            let r = kernel.eval(args.x, y, 0)?;
            let sym = (r - kernel.eval(y, args.x, 0)?).abs();
            worst = worst.max(sym);
            w.write_record([
                fmt_num(y),
                fmt_num(r),
                fmt_num(kernel.eval(args.x, y, 1)?),
                fmt_num(kernel.eval(args.x, y, 2)?),
                fmt_num(sym),
            ])?;
        }
        w.flush()
            .map_err(|e| CliError::Config(format!("writing CSV: {e}")))?;
    }
    emit(args.output.as_deref(), &buf)?;
    let _ = writeln!(log, "max symmetry defect {worst:.3e}");
    Ok(())
}

pub fn cmd_gram_dump(args: &GramDumpArgs, log: &mut dyn Write) -> CliResult<()> {
    let p = resolve_problem(&args.problem, log)?;
    let basis = build_basis(&p, args.n, parallelism(args.sequential))?;
    let xs = basis.points().as_slice();
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["i", "j", "x_i", "x_j", "gram", "beta"])?;
        for i in 0..xs.len() {
            for j in 0..xs.len() {
                w.write_record([
                    (i + 1).to_string(),
                    (j + 1).to_string(),
                    fmt_num(xs[i]),
                    fmt_num(xs[j]),
                    fmt_num(basis.gram()[(i, j)]),
                    fmt_num(basis.beta()[(i, j)]),
                ])?;
            }
        }
        w.flush()
            .map_err(|e| CliError::Config(format!("writing CSV: {e}")))?;
    }
    emit(args.output.as_deref(), &buf)?;
    let _ = writeln!(
        log,
        "n = {}, orthonormality defect max|beta G beta^T - I| = {:.3e}",
        xs.len(),
        basis.orthonormality_defect()
    );
    Ok(())
}
