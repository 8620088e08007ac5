use std::fs;
use std::io::Write;
use std::path::Path;

use amcd::baselines::{bench_inverse, BenchSummary};
use amcd::io::{format_number, read_matrix};
use amcd::sources::ahlswede::{ahlswede_build, detect_jump, AhlswedeSpec, TheoryCurve};
use amcd::{
    solve_exponent, solve_inverse, ExponentProblem, InverseProblem, ProblemKind, SolveReport,
    SolveStatus, SolverConfig, ZetaGrid, ZetaTrace,
};
use serde::Serialize;

use crate::args::{AhlswedeArgs, BenchArgs, Cli, Command, ExponentArgs, InverseArgs, SweepArgs, SweepParam};
use crate::settings::{solver_config, source};
use crate::{CliError, Result};

const SCHEMA: &str = "amcd-report/1";

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // Fails only if a pool already exists, which then keeps its size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Exponent(a) => exponent(a),
        Command::Inverse(a) => inverse(a),
        Command::Sweep(a) => sweep(a),
        Command::Ahlswede(a) => ahlswede(a),
        Command::Bench(a) => bench(a),
    }
}

#[derive(Serialize)]
struct ReportJson<'a> {
    schema: &'static str,
    kind: ProblemKind,
    status: SolveStatus,
    value: f64,
    delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exponent: Option<f64>,
    zeta_star: f64,
    multiplier: f64,
    feasible: bool,
    feasibility_residual: f64,
    slopes: usize,
    feasible_slopes: usize,
    outer_iterations: usize,
    p_star: Option<&'a [f64]>,
    a: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<&'a [ZetaTrace]>,
}

impl<'a> ReportJson<'a> {
    fn new(report: &'a SolveReport, delta: f64, trace: bool) -> Self {
        Self {
            schema: SCHEMA,
            kind: report.kind,
            status: report.status,
            value: report.value,
            delta,
            rate: None,
            exponent: None,
            zeta_star: report.zeta_star,
            multiplier: report.multiplier,
            feasible: report.feasible,
            feasibility_residual: report.feasibility_residual,
            slopes: report.trace.len(),
            feasible_slopes: report.trace.iter().filter(|t| t.feasible).count(),
            outer_iterations: report.outer_iterations(),
            p_star: report.p_star.as_ref().map(|p| p.as_slice()),
            a: report.certificate.as_ref().map(|c| c.a.as_slice()),
            trace: trace.then_some(report.trace.as_slice()),
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Data to `out` with the summary on stdout, or data on stdout with the summary on stderr.
fn emit(out: Option<&Path>, data: &str, summary: &str) -> Result<()> {
    match out {
        Some(path) => {
            write_file(path, data)?;
            println!("{summary}");
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(data.as_bytes())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })?;
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn to_json(value: &impl Serialize) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    text
}

/// Prints the value, writes the report if asked, and maps an empty feasible set to exit 3.
fn finish(json: ReportJson<'_>, out: Option<&Path>) -> Result<()> {
    println!("{:.6}", json.value);
    if let Some(path) = out {
        write_file(path, &to_json(&json))?;
    }
    if json.status == SolveStatus::AllZetaInfeasible {
        return Err(CliError::Infeasible);
    }
    Ok(())
}

fn exponent(args: ExponentArgs) -> Result<()> {
    let cfg = solver_config(&args.solver, SolverConfig::default())?;
    let (q, d) = source(&args.source)?;
    let report = solve_exponent(&ExponentProblem::new(q, d, args.rate, args.delta)?, &cfg)?;
    let mut json = ReportJson::new(&report, args.delta, args.trace);
    json.rate = Some(args.rate);
    finish(json, args.out.as_deref())
}

fn inverse(args: InverseArgs) -> Result<()> {
    let cfg = solver_config(&args.solver, SolverConfig::default())?;
    let (q, d) = source(&args.source)?;
    let report = solve_inverse(&InverseProblem::new(q, d, args.exponent, args.delta)?, &cfg)?;
    let mut json = ReportJson::new(&report, args.delta, args.trace);
    json.exponent = Some(args.exponent);
    finish(json, args.out.as_deref())
}

/// `points` evenly spaced values from `from` to `to`, ends included.
fn linspace(from: f64, to: f64, points: usize) -> Result<Vec<f64>> {
    let ordered = from.is_finite() && to.is_finite() && (from < to || (from == to && points == 1));
    if points == 0 || !ordered {
        return Err(CliError::Usage(format!(
            "empty range: {points} points from {from} to {to}"
        )));
    }
    if points == 1 {
        return Ok(vec![from]);
    }
    let step = (to - from) / (points - 1) as f64;
    Ok((0..points)
        .map(|k| if k + 1 == points { to } else { from + k as f64 * step })
        .collect())
}

fn csv_line(fields: &[String]) -> String {
    let mut line = fields.join(",");
    line.push('\n');
    line
}

fn sweep(args: SweepArgs) -> Result<()> {
    let params = linspace(args.from, args.to, args.points)?;
    let cfg = solver_config(&args.solver, SolverConfig::default())?;
    let (q, d) = source(&args.source)?;
    let mut data = csv_line(&["param", "value", "zeta_star", "multiplier", "feasible"].map(String::from));
    let mut feasible = 0;
    let mut values = Vec::with_capacity(params.len());
    for &t in &params {
        let report = match args.over {
            SweepParam::Rate => solve_exponent(&ExponentProblem::new(q.clone(), d.clone(), t, args.delta)?, &cfg)?,
            SweepParam::Radius => solve_inverse(&InverseProblem::new(q.clone(), d.clone(), t, args.delta)?, &cfg)?,
        };
        feasible += usize::from(report.feasible);
        values.push(report.value);
        data.push_str(&csv_line(&[
            format_number(t),
            format_number(report.value),
            format_number(report.zeta_star),
            format_number(report.multiplier),
            report.feasible.to_string(),
        ]));
    }
    let summary = format!(
        "{} points, {feasible} feasible; value {:.6} at {:.6} to {:.6} at {:.6}",
        params.len(),
        values[0],
        params[0],
        values[values.len() - 1],
        params[params.len() - 1],
    );
    emit(args.out.as_deref(), &data, &summary)
}

fn ahlswede(args: AhlswedeArgs) -> Result<()> {
    if args.points == 0 {
        return Err(CliError::Usage("--points must be at least 1".into()));
    }
    let base = SolverConfig {
        zeta_grid: ZetaGrid::uniform(400, 40.0),
        refine_zeta: true,
        ..SolverConfig::default()
    };
    let cfg = solver_config(&args.solver, base)?;
    let spec = AhlswedeSpec {
        size_a: args.size_a,
        size_b: args.size_b,
        a_param: args.a_param,
        xi: args.xi,
        distortion_override: args.dist_matrix.as_ref().map(read_matrix).transpose()?,
        allow_default: !args.no_default,
    };
    let instance = match ahlswede_build(&spec) {
        Err(amcd::Error::MissingDistortion) => {
            return Err(CliError::Usage(format!(
                "no distortion matrix: pass --dist-matrix with a square CSV of size {} \
                 (first part, then second part), or drop --no-default to use the built-in matrix",
                args.size_a + args.size_b
            )))
        }
        other => other?,
    };
    let curve = TheoryCurve::from_instance(instance.clone(), args.delta, args.lambda_grid)?;
    let top = curve.max_rate();
    let rates: Vec<f64> = (0..args.points)
        .map(|k| top * (k as f64 + 0.5) / args.points as f64)
        .collect();
    let mut solved = Vec::with_capacity(rates.len());
    let mut data = csv_line(&["R", "E_amcd", "E_theory"].map(String::from));
    for &rate in &rates {
        let e = instance.solve_exponent(args.delta, rate, &cfg)?.value;
        let theory = curve.exponent(rate)?;
        solved.push(e);
        data.push_str(&csv_line(&[format_number(rate), format_number(e), format_number(theory)]));
    }
    let summary = match detect_jump(&rates, &solved, args.jump_threshold) {
        Some(j) => format!(
            "jump between R = {:.6} and R = {:.6}: E {:.6} -> {:.6}",
            j.rate_before, j.rate_after, j.from, j.to
        ),
        None => format!("no rise above {} between consecutive points", args.jump_threshold),
    };
    emit(args.out.as_deref(), &data, &summary)
}

#[derive(Serialize)]
struct BenchJson {
    schema: &'static str,
    #[serde(flatten)]
    summary: BenchSummary,
}

fn bench(args: BenchArgs) -> Result<()> {
    let cfg = solver_config(&args.solver, SolverConfig::default())?;
    let (q, d) = source(&args.source)?;
    let problem = InverseProblem::new(q, d, args.exponent, args.delta)?;
    let zetas = ZetaGrid::uniform(args.grid_zeta, args.grid_max).points();
    let xis = ZetaGrid::uniform(args.grid_xi, args.grid_max).points();
    if zetas.is_empty() || xis.is_empty() || !(args.grid_max > 0.0) {
        return Err(CliError::Usage("grid search needs at least one point on each axis".into()));
    }
    let summary = bench_inverse(&problem, &zetas, &xis, &cfg, args.repeats)?;
    let line = format!(
        "alternating {:.6} s, grid {:.6} s, speedup {:.2}; values {:.6} and {:.6}",
        summary.amcd_time_s, summary.grid_time_s, summary.speedup, summary.amcd_value, summary.grid_value
    );
    let data = to_json(&BenchJson { schema: SCHEMA, summary });
    emit(args.out.as_deref(), &data, &line)
}
