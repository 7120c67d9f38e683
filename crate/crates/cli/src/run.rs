//! Executes a validated job and writes its artifacts.

use ddm_core::analysis::{
    asymptotic_order_check, coupled_refinement_study, discrete_error, epsilon_study, one_sided_study,
    self_convergence_study, AsymptoticTable,
};
use ddm_core::geometry::signed_distance;
use ddm_core::multigrid::solve_with_distance;
use ddm_core::{ConvergenceTable, SolveReport, TestCase};
use serde_json::json;

use crate::config::{Job, Settings};
use crate::output::OutDir;
use crate::plot::{loglog, Series};
use crate::selftest;

/// Runs `job`; `Ok(true)` when every requested solve converged.
pub fn run(job: &Job, settings: &Settings) -> anyhow::Result<bool> {
    if let Job::Selftest = job {
        return Ok(selftest::run());
    }
    let out = OutDir::create(&settings.out)?;
    match job {
        Job::Solve { case, grid, epsilon } => {
            let spec = case.spec();
            let r = signed_distance(&spec.geometry, grid)?;
            let (u, report) = solve_with_distance(spec, &r, *epsilon, &settings.opts.mg)?;
            let mut extra = json!({
                "case": case.name(),
                "epsilon": epsilon,
                "report": report_json(&report, settings.timing),
            });
            if case.has_exact_solution() {
                let sub = settings.opts.subdomain;
                let (l2, linf) = discrete_error(&u, |p| case.exact_solution(p).unwrap_or(f64::NAN), &r, sub)?;
                extra["error"] = json!({ "subdomain": sub.name(), "l2": l2, "linf": linf });
            }
            out.write_field("solution", &u, extra)?;
            log::info!(
                "{} cycles, relative residual {:.3e}",
                report.iterations,
                report.final_relative_residual
            );
            Ok(report.converged)
        }
        Job::Distance { case, grid } => {
            let r = signed_distance(&case.spec().geometry, grid)?;
            let extra = json!({
                "case": case.name(),
                "max_lipschitz_ratio": r.max_lipschitz_ratio(),
            });
            out.write_field("distance", r.field(), extra)?;
            Ok(true)
        }
        Job::Converge {
            case,
            grid,
            eps,
            reference,
        } => {
            let table = match reference {
                Some(e) => self_convergence_study(case, grid, *e, eps, &settings.opts)?,
                None => epsilon_study(case, grid, eps, &settings.opts)?,
            };
            emit_table(&out, settings, &table, &format!("{}: error vs width", case.name()))
        }
        Job::Refine { case, refinement } => {
            let r = refinement;
            let table = coupled_refinement_study(case, r.ratio, r.base_cells, r.levels, &settings.opts)?;
            let title = format!("{}: coupled refinement h = {} eps", case.name(), r.ratio);
            emit_table(&out, settings, &table, &title)
        }
        Job::Onesided { rule, grid, eps } => {
            let table = one_sided_study(*rule, grid, eps, &settings.opts)?;
            emit_table(&out, settings, &table, &format!("one-sided-1d: {rule:?}"))
        }
        Job::Asymptotic {
            case,
            eps,
            probes,
            cells,
            sharp_cells,
        } => {
            let table = asymptotic_order_check(case, eps, probes, *cells, *sharp_cells, &settings.opts)?;
            emit_asymptotic(&out, settings, case, &table)
        }
        Job::Selftest => unreachable!(),
    }
}

fn report_json(r: &SolveReport, timing: bool) -> serde_json::Value {
    json!({
        "iterations": r.iterations,
        "converged": r.converged,
        "hit_rounding_floor": r.hit_rounding_floor,
        "final_relative_residual": r.final_relative_residual,
        "contraction": r.contraction,
        "levels": r.levels,
        "residual_history": r.residual_history,
        "wall_seconds": if timing { r.wall_seconds } else { 0.0 },
    })
}

fn emit_table(out: &OutDir, settings: &Settings, table: &ConvergenceTable, title: &str) -> anyhow::Result<bool> {
    out.write("convergence.csv", &table.to_csv(settings.timing))?;
    for row in &table.rows {
        if let Some(why) = &row.failure {
            log::error!("eps={}: {why}", row.epsilon);
        } else if !row.converged {
            log::warn!("eps={}: not converged after {} cycles", row.epsilon, row.mg_cycles);
        }
    }
    if settings.plot {
        let pick = |f: fn(&ddm_core::ConvergenceRow) -> f64| table.rows.iter().map(|r| (r.epsilon, f(r))).collect();
        let series = [
            Series {
                label: "L2 error".into(),
                points: pick(|r| r.l2_error),
                slope: table.l2.full,
            },
            Series {
                label: "max error".into(),
                points: pick(|r| r.linf_error),
                slope: table.linf.full,
            },
        ];
        out.write("convergence.svg", &loglog(title, "epsilon", "error", &series))?;
    }
    Ok(table.all_converged())
}

fn emit_asymptotic(out: &OutDir, settings: &Settings, case: &TestCase, table: &AsymptoticTable) -> anyhow::Result<bool> {
    out.write("asymptotic.csv", &table.to_csv())?;
    if settings.plot {
        let mut series = Vec::new();
        for (k, x) in table.probes.iter().enumerate() {
            series.push(Series {
                label: format!("x={x} remainder"),
                points: table.rows.iter().map(|r| (r.epsilon, r.remainder[k].abs())).collect(),
                slope: table.remainder_slopes[k],
            });
            series.push(Series {
                label: format!("x={x} uncorrected"),
                points: table.rows.iter().map(|r| (r.epsilon, r.raw[k].abs())).collect(),
                slope: table.raw_slopes[k],
            });
        }
        let title = format!("{}: outer probe errors", case.name());
        out.write("asymptotic.svg", &loglog(&title, "epsilon", "|difference|", &series))?;
    }
    Ok(table.all_converged())
}
