use std::fmt::Display;

use glap::blowup::{
    bk_limit_check, gk_limit_check, lambda_continuation, liouville_scaling_probe, rescale as rescale_field,
    synthetic_bump, BkTable, ContinuationConfig, ContinuationRow, GkTable, LiouvilleReport, RescaleResult, ScaleCase,
};
use glap::fixed_point::{multistart, Method, MultiStartResult};
use glap::mesh::{field_csv, write_mesh, Field, Mesh};
use glap::numeric::{linspace, sci17};
use glap::solver::{self, direct_solve, DiscreteProblem, SolveReport};
use glap::source::{
    check_eti1, check_fg, check_growth, check_lieberman_bound, check_limit_profile, check_ps, check_subcritical,
    ConditionReport, Eti1Grid, LimitGrid, SampleGrid, Threshold,
};
use glap::young::{ExponentReport, YoungFunction};
use serde::Serialize;
use serde_json::Value;

use crate::output::{Cell, OutDir, Table};
use crate::problem::{apply_override, from_value, load_problem, read_json, Problem};
use crate::svg::{chart, Series};
use crate::{CliError, Common, FieldSource, GkArgs, LiouvilleArgs, ProbeLambdaArgs, RescaleArgs, SolveArgs};

fn internal(e: impl Display) -> CliError {
    CliError::Internal(e.to_string())
}

fn invalid(e: impl Display) -> CliError {
    CliError::Invalid(e.to_string())
}

fn setup(c: &Common) -> Result<(Problem, DiscreteProblem, OutDir), CliError> {
    let problem = load_problem(&c.problem, &c.overrides, c.h)?;
    let dp = problem.discrete()?;
    let out = OutDir::create(&c.out)?;
    Ok((problem, dp, out))
}

fn write_field(out: &OutDir, mesh: &Mesh, u: &[f64], title: &str) -> Result<(), CliError> {
    out.write("field.csv", &field_csv(mesh, u).map_err(internal)?)?;
    if mesh.dimension() == 1 {
        let mut pts: Vec<(f64, f64)> = mesh.vertices().iter().zip(u).map(|(x, u)| (x[0], *u)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        out.write(
            "profile.svg",
            &chart(
                title,
                "x",
                "u",
                &[Series {
                    label: "u",
                    points: pts,
                }],
                false,
            ),
        )?;
    }
    Ok(())
}

fn write_trace(out: &OutDir, report: &SolveReport) -> Result<(), CliError> {
    let energy = report.energy_history.as_ref();
    let mut t = if energy.is_some() {
        Table::new(&["iteration", "residual", "energy"])
    } else {
        Table::new(&["iteration", "residual"])
    };
    for (k, r) in report.residual_history.iter().enumerate() {
        let mut row = vec![Cell::I(k), Cell::F(*r)];
        if let Some(e) = energy {
            row.push(Cell::F(e.get(k).copied().unwrap_or(f64::NAN)));
        }
        t.push(row);
    }
    out.csv("trace.csv", &t)?;
    let pts = report
        .residual_history
        .iter()
        .enumerate()
        .map(|(k, r)| (k as f64, *r))
        .collect();
    out.write(
        "convergence.svg",
        &chart(
            "Convergence",
            "iteration",
            "residual",
            &[Series {
                label: "residual",
                points: pts,
            }],
            true,
        ),
    )
}

#[derive(Serialize)]
struct YoungCheckReport<'a> {
    command: &'static str,
    young: &'a YoungFunction,
    report: &'a ExponentReport,
    violations: Vec<String>,
}

pub fn young_check(c: &Common) -> Result<String, CliError> {
    let mut v = read_json(&c.problem)?;
    for o in &c.overrides {
        apply_override(&mut v, o)?;
    }
    let v = match v {
        Value::Object(mut m) if m.contains_key("young") => m.remove("young").unwrap(),
        other => other,
    };
    let yf: YoungFunction = from_value(v, "young")?;
    let report = yf.exponent_report().map_err(invalid)?;
    let out = OutDir::create(&c.out)?;
    out.json(
        "report.json",
        &YoungCheckReport {
            command: "young_check",
            young: &yf,
            report: &report,
            violations: report.violations(1e-6),
        },
    )?;
    Ok(format!(
        "p_minus_hat = {}, p_plus_hat = {}, delta2 = {}",
        sci17(report.p_minus_hat),
        sci17(report.p_plus_hat),
        sci17(report.delta2_constant)
    ))
}

#[derive(Serialize)]
struct SourceCheckReport {
    command: &'static str,
    conditions: Vec<ConditionReport>,
    fg_thresholds: Vec<Threshold>,
    limit_q_hat: f64,
    limit_b_hat: Vec<f64>,
    limit_deviations: Vec<f64>,
    l_hat: f64,
    ps_ratios: Vec<f64>,
}

pub fn source_check(c: &Common) -> Result<String, CliError> {
    let (problem, dp, out) = setup(c)?;
    let (st, yf) = (&problem.source, &problem.young);
    let grid = SampleGrid::default();
    let fg = check_fg(st, yf, &[1.0, 10.0, 100.0]);
    let limit = check_limit_profile(st, yf, &LimitGrid::default());
    let ps = check_ps(st, yf, &grid.x_samples, 20, 1e-3);
    let p = yf.exponent_report().map_err(invalid)?.regvar_p_hat;
    let conditions = vec![
        check_growth(st, yf, &grid),
        check_lieberman_bound(st, yf, &grid),
        fg.report,
        check_eti1(st, yf, 1.0, &Eti1Grid::default()),
        limit.report,
        ps.positivity,
        ps.superlinearity,
        check_subcritical(st.q, p, dp.mesh.dimension() as u32),
    ];
    let passed = conditions.iter().filter(|r| r.passed).count();
    let total = conditions.len();
    out.json(
        "report.json",
        &SourceCheckReport {
            command: "source_check",
            conditions,
            fg_thresholds: fg.thresholds,
            limit_q_hat: limit.q_hat,
            limit_b_hat: limit.b_hat,
            limit_deviations: limit.deviations,
            l_hat: ps.l_hat,
            ps_ratios: ps.ratios,
        },
    )?;
    Ok(format!("{passed} of {total} conditions hold on the sample grids"))
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    command: &'static str,
    n_vertices: usize,
    max: f64,
    min: f64,
    report: &'a SolveReport,
}

fn finish_solve(
    command: &'static str,
    dp: &DiscreteProblem,
    out: &OutDir,
    u: &Field,
    report: &SolveReport,
) -> Result<String, CliError> {
    let max = u.iter().fold(f64::NEG_INFINITY, |m, x| m.max(*x));
    let min = u.iter().fold(f64::INFINITY, |m, x| m.min(*x));
    out.json(
        "report.json",
        &SolveSummary {
            command,
            n_vertices: dp.n(),
            max,
            min,
            report,
        },
    )?;
    write_field(out, &dp.mesh, u, "Solution")?;
    write_trace(out, report)?;
    if report.converged {
        Ok(format!(
            "converged in {} iterations, max u = {}",
            report.iterations,
            sci17(max)
        ))
    } else {
        Err(CliError::NotConverged(format!(
            "no convergence after {} iterations (residual {})",
            report.iterations,
            sci17(report.final_residual())
        )))
    }
}

pub fn solve(a: &SolveArgs) -> Result<String, CliError> {
    let (problem, dp, out) = setup(&a.common)?;
    let u0 = if a.start_height > 0.0 {
        synthetic_bump(&dp, a.start_height).map_err(internal)?
    } else {
        dp.zero_field()
    };
    let (u, report) = direct_solve(&dp, &u0, &problem.solver.options()).map_err(internal)?;
    finish_solve("solve", &dp, &out, &u, &report)
}

pub fn inner_solve(c: &Common) -> Result<String, CliError> {
    let (problem, dp, out) = setup(c)?;
    let psi: Vec<f64> = dp
        .mesh
        .vertices()
        .iter()
        .map(|&x| problem.source.eval(x, 0.0, [0.0, 0.0]) + problem.lambda)
        .collect();
    let (u, report) = solver::inner_solve(&dp, &psi, &problem.solver.options()).map_err(internal)?;
    finish_solve("inner_solve", &dp, &out, &u, &report)
}

#[derive(Serialize)]
struct FixedPointReport<'a> {
    command: &'static str,
    seed: u64,
    result: &'a MultiStartResult,
}

pub fn fixed_point(c: &Common) -> Result<String, CliError> {
    let (problem, dp, out) = setup(c)?;
    let res = multistart(&dp, &problem.fixed_point, c.seed).map_err(internal)?;
    out.json(
        "report.json",
        &FixedPointReport {
            command: "fixed_point",
            seed: c.seed,
            result: &res,
        },
    )?;
    let mut t = Table::new(&[
        "start",
        "amplitude",
        "iter",
        "sup_norm",
        "c1_norm",
        "update",
        "inner_iters",
        "inner_converged",
    ]);
    let mut series = Vec::new();
    for (k, run) in res.runs.iter().enumerate() {
        for r in &run.trace.records {
            t.push(vec![
                Cell::I(k),
                Cell::F(run.amplitude),
                Cell::I(r.iter),
                Cell::F(r.sup_norm),
                Cell::F(r.c1_norm),
                Cell::F(r.update),
                Cell::I(r.inner_iters),
                Cell::B(r.inner_converged),
            ]);
        }
        series.push((
            format!("start {k}"),
            run.trace
                .records
                .iter()
                .map(|r| (r.iter as f64, r.update))
                .collect::<Vec<_>>(),
        ));
    }
    out.csv("trace.csv", &t)?;
    let series: Vec<Series> = series
        .iter()
        .map(|(l, p)| Series {
            label: l,
            points: p.clone(),
        })
        .collect();
    out.write(
        "convergence.svg",
        &chart("Fixed-point updates", "iteration", "update", &series, true),
    )?;
    match (&res.method, &res.solution) {
        (Method::None, _) | (_, None) => Err(CliError::NotConverged("no nontrivial fixed point found".into())),
        (m, Some(u)) => {
            write_field(&out, &dp.mesh, u, "Fixed point")?;
            Ok(format!("{m:?}: sup u = {}", sci17(u.sup_norm())))
        }
    }
}

#[derive(Serialize)]
struct RescaleReport<'a> {
    command: &'static str,
    source_field: &'static str,
    result: &'a RescaleResult,
    rescaled_vertices: usize,
}

pub fn rescale(a: &RescaleArgs) -> Result<String, CliError> {
    let (problem, dp, out) = setup(&a.common)?;
    let case = match a.case.as_str() {
        "case1" => ScaleCase::Case1,
        "case2" => ScaleCase::Case2,
        other => return Err(invalid(format!("unknown case `{other}` (expected case1 or case2)"))),
    };
    let (u, label) = match a.field {
        FieldSource::Bump => (synthetic_bump(&dp, a.height).map_err(invalid)?, "bump"),
        FieldSource::Solve => {
            let res = multistart(&dp, &problem.fixed_point, a.common.seed).map_err(internal)?;
            let u = res
                .solution
                .ok_or_else(|| CliError::NotConverged("no nontrivial solution to rescale".into()))?;
            (u, "solve")
        }
    };
    let r = rescale_field(&u, &dp, case, problem.lambda, a.half_width).map_err(invalid)?;
    let mesh = r.rescaled_mesh.clone().expect("rescale returns its mesh");
    write_mesh(&out.path("rescaled"), &mesh, Some(&r.v)).map_err(internal)?;
    out.write("field.csv", &field_csv(&mesh, &r.v).map_err(internal)?)?;
    out.json(
        "report.json",
        &RescaleReport {
            command: "rescale",
            source_field: label,
            result: &r,
            rescaled_vertices: mesh.n_vertices(),
        },
    )?;
    Ok(format!(
        "N = {}, phi(N) = {}, mu = {}",
        sci17(r.n_k),
        sci17(r.phi_nk),
        sci17(r.mu_k)
    ))
}

#[derive(Serialize)]
struct BranchReport<'a> {
    command: &'static str,
    lambda_star: f64,
    #[serde(rename = "C_emp")]
    c_emp: f64,
    note: &'a str,
    rows: &'a [ContinuationRow],
}

pub fn probe_lambda(a: &ProbeLambdaArgs) -> Result<String, CliError> {
    let (problem, dp, out) = setup(&a.common)?;
    if a.steps == 0 || a.lmax.is_nan() || a.lmax <= 0.0 {
        return Err(invalid("--lmax must be positive and --steps at least 1"));
    }
    let grid = linspace(0.0, a.lmax, a.steps + 1);
    let mut cfg = ContinuationConfig {
        fixed_point: problem.fixed_point.clone(),
        seed: a.common.seed,
        ..ContinuationConfig::default()
    };
    cfg.solver.tol = problem.solver.tol;
    cfg.solver.max_iter = problem.solver.max_iter;
    let table = lambda_continuation(&dp, &grid, &cfg).map_err(internal)?;
    let mut t = Table::new(&["lambda", "sup_norm", "converged", "iterations"]);
    for r in &table.rows {
        t.push(vec![
            Cell::F(r.lambda),
            Cell::F(r.sup_norm),
            Cell::B(r.converged),
            Cell::I(r.iterations),
        ]);
    }
    out.csv("branch.csv", &t)?;
    out.json(
        "report.json",
        &BranchReport {
            command: "probe_lambda",
            lambda_star: table.lambda_star,
            c_emp: table.max_bound_observed,
            note: &table.note,
            rows: &table.rows,
        },
    )?;
    let pts = table
        .rows
        .iter()
        .filter(|r| r.converged)
        .map(|r| (r.lambda, r.sup_norm))
        .collect();
    out.write(
        "branch.svg",
        &chart(
            "Continuation branch",
            "lambda",
            "sup u",
            &[Series {
                label: "converged",
                points: pts,
            }],
            false,
        ),
    )?;
    Ok(format!(
        "lambda* = {}, C_emp = {}",
        sci17(table.lambda_star),
        sci17(table.max_bound_observed)
    ))
}

#[derive(Serialize)]
struct LiouvilleSummary<'a> {
    command: &'static str,
    #[serde(flatten)]
    report: &'a LiouvilleReport,
}

pub fn probe_liouville(a: &LiouvilleArgs) -> Result<String, CliError> {
    let report = liouville_scaling_probe(a.p, a.q, &a.radii, a.h).map_err(invalid)?;
    let out = OutDir::create(&a.out)?;
    let mut t = Table::new(&["radius", "sup_norm", "converged", "iterations", "n_vertices"]);
    for r in &report.rows {
        t.push(vec![
            Cell::F(r.radius),
            Cell::F(r.sup_norm),
            Cell::B(r.converged),
            Cell::I(r.iterations),
            Cell::I(r.n_vertices),
        ]);
    }
    out.csv("radii.csv", &t)?;
    out.json(
        "report.json",
        &LiouvilleSummary {
            command: "probe_liouville",
            report: &report,
        },
    )?;
    let pts = report.rows.iter().map(|r| (r.radius.log10(), r.sup_norm)).collect();
    out.write(
        "liouville.svg",
        &chart(
            "Scaling of sup u_R",
            "log10 R",
            "sup u_R",
            &[Series {
                label: "sup u_R",
                points: pts,
            }],
            true,
        ),
    )?;
    Ok(format!(
        "slope = {} (expected {})",
        sci17(report.slope),
        sci17(report.expected_slope)
    ))
}

#[derive(Serialize)]
struct LimitSummary<'a> {
    command: &'static str,
    gk: &'a GkTable,
    bk: &'a BkTable,
}

pub fn gk_limit(a: &GkArgs) -> Result<String, CliError> {
    let (problem, _dp, out) = setup(&a.common)?;
    let (st, yf) = (&problem.source, &problem.young);
    let f = st.f;
    let gk = gk_limit_check(yf, |t| f.eval(t), &a.n, &linspace(0.0, 2.0, 201), a.exponent).map_err(invalid)?;
    let bk = bk_limit_check(
        st,
        yf,
        &a.n,
        &linspace(0.0, 2.0, 21),
        &[0.0, 0.5, 1.0],
        &[[0.0, 0.0]],
        [0.0, 0.0],
    )
    .map_err(invalid)?;
    let mut t = Table::new(&["N", "gk_deviation", "bk_deviation"]);
    for (g, b) in gk.rows.iter().zip(&bk.rows) {
        t.push(vec![Cell::F(g.n), Cell::F(g.deviation), Cell::F(b.deviation)]);
    }
    out.csv("deviations.csv", &t)?;
    out.json(
        "report.json",
        &LimitSummary {
            command: "gk_limit",
            gk: &gk,
            bk: &bk,
        },
    )?;
    let s = |f: fn(&glap::blowup::DeviationRow) -> f64, rows: &[glap::blowup::DeviationRow]| -> Vec<(f64, f64)> {
        rows.iter().map(|r| (r.n.log10(), f(r))).collect()
    };
    out.write(
        "limits.svg",
        &chart(
            "Rescaled nonlinearities",
            "log10 N",
            "deviation",
            &[
                Series {
                    label: "g_k",
                    points: s(|r| r.deviation, &gk.rows),
                },
                Series {
                    label: "B_k",
                    points: s(|r| r.deviation, &bk.rows),
                },
            ],
            true,
        ),
    )?;
    let last = |rows: &[glap::blowup::DeviationRow]| rows.last().map_or(f64::NAN, |r| r.deviation);
    Ok(format!(
        "final g_k deviation = {}, final B_k deviation = {}",
        sci17(last(&gk.rows)),
        sci17(last(&bk.rows))
    ))
}
