//! Convergence study drivers.

use std::fmt::Write as _;

use rayon::prelude::*;

use super::{discrete_error, discrete_error_against, fit_rate, fmt_f64, ConvergenceRow, ConvergenceTable, Subdomain};
use crate::discretization::{DiscreteField, Grid};
use crate::error::{Error, Result};
use crate::geometry::{signed_distance, DistanceField};
use crate::model::{ProblemSpec, TestCase};
use crate::multigrid::{solve_with_distance, MgConfig, SolveReport};
use crate::reference::{expansion_eval, first_order_correction_1d, sharp_solve_1d, CorrectionSolution};

/// Settings shared by all studies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyOptions {
    pub mg: MgConfig,
    pub subdomain: Subdomain,
    /// Run independent rows concurrently. Each row holds a full multigrid
    /// hierarchy, so this multiplies peak memory by the thread count.
    pub parallel_rows: bool,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions {
            mg: MgConfig::default(),
            subdomain: Subdomain::Whole,
            parallel_rows: false,
        }
    }
}

fn map_rows<T: Sync, R: Send>(items: &[T], parallel: bool, f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    if parallel {
        items.par_iter().map(f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

fn row_from(eps: f64, grid: &Grid, report: &SolveReport, errors: (f64, f64)) -> ConvergenceRow {
    ConvergenceRow {
        epsilon: eps,
        h: grid.h_max(),
        n_cells: grid.len(),
        l2_error: errors.0,
        linf_error: errors.1,
        mg_cycles: report.iterations,
        final_residual: report.final_relative_residual,
        wall_seconds: report.wall_seconds,
        converged: report.converged,
        hit_rounding_floor: report.hit_rounding_floor,
        failure: None,
    }
}

fn exact_row(case: &TestCase, r: &DistanceField, eps: f64, opts: &StudyOptions) -> ConvergenceRow {
    let grid = *r.grid();
    let run = || -> Result<ConvergenceRow> {
        let exact = case.exact().ok_or_else(|| Error::NoExactSolution(case.name().to_string()))?;
        let spec = case.spec();
        let (u, report) = solve_with_distance(spec, r, eps, &opts.mg)?;
        let reference = |p| if spec.is_inner(p) { exact.inner.eval(p) } else { exact.outer.eval(p) };
        let errors = discrete_error(&u, reference, r, opts.subdomain)?;
        Ok(row_from(eps, &grid, &report, errors))
    };
    run().unwrap_or_else(|e| {
        log::warn!("{} at eps={eps}: {e}", case.name());
        ConvergenceRow::failed(eps, grid.h_max(), grid.len(), e.to_string())
    })
}

fn check_eps_list(eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        return Err(Error::Configuration("empty epsilon list".into()));
    }
    if let Some(e) = eps.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
        return Err(Error::Configuration(format!("epsilon must lie in (0, 1), got {e}")));
    }
    Ok(())
}

/// Uniform grid with `n` cells along every axis of the case domain.
pub(crate) fn case_grid(spec: &ProblemSpec, n: usize) -> Result<Grid> {
    Grid::from_bounds(&vec![n; spec.dim()], &spec.domain)
}

/// One solve per ε on a fixed grid, measured against the exact solution.
pub fn epsilon_study(case: &TestCase, grid: &Grid, eps: &[f64], opts: &StudyOptions) -> Result<ConvergenceTable> {
    check_eps_list(eps)?;
    if !case.has_exact_solution() {
        return Err(Error::NoExactSolution(case.name().to_string()));
    }
    let r = signed_distance(&case.spec().geometry, grid)?;
    let rows = map_rows(eps, opts.parallel_rows, |&e| exact_row(case, &r, e, opts));
    Ok(ConvergenceTable::new(rows, opts.subdomain, opts.mg.tol))
}

/// Like [`epsilon_study`], measured against a solve at `eps_ref` on the same grid.
pub fn self_convergence_study(
    case: &TestCase,
    grid: &Grid,
    eps_ref: f64,
    eps: &[f64],
    opts: &StudyOptions,
) -> Result<ConvergenceTable> {
    check_eps_list(eps)?;
    check_eps_list(&[eps_ref])?;
    if eps.iter().any(|&e| e <= eps_ref) {
        return Err(Error::Configuration("test widths must exceed the reference width".into()));
    }
    let spec = case.spec();
    let r = signed_distance(&spec.geometry, grid)?;
    let (reference, ref_report) = solve_with_distance(spec, &r, eps_ref, &opts.mg)?;
    if !ref_report.converged {
        log::warn!("reference solve at eps={eps_ref} did not converge");
    }
    let rows = map_rows(eps, opts.parallel_rows, |&e| {
        let run = || -> Result<ConvergenceRow> {
            let (u, report) = solve_with_distance(spec, &r, e, &opts.mg)?;
            let errors = discrete_error_against(&u, &reference, &r, opts.subdomain)?;
            let mut row = row_from(e, grid, &report, errors);
            row.converged &= ref_report.converged;
            Ok(row)
        };
        run().unwrap_or_else(|err| ConvergenceRow::failed(e, grid.h_max(), grid.len(), err.to_string()))
    });
    Ok(ConvergenceTable::new(rows, opts.subdomain, opts.mg.tol))
}

/// Refines the grid `levels` times from `n0` cells per axis with `h = ratio · ε`.
pub fn coupled_refinement_study(
    case: &TestCase,
    ratio: f64,
    n0: usize,
    levels: usize,
    opts: &StudyOptions,
) -> Result<ConvergenceTable> {
    if !(ratio > 0.0) {
        return Err(Error::Configuration(format!("ratio h/eps must be positive, got {ratio}")));
    }
    if levels == 0 {
        return Err(Error::Configuration("need at least one level".into()));
    }
    if !case.has_exact_solution() {
        return Err(Error::NoExactSolution(case.name().to_string()));
    }
    let grids = (0..levels)
        .map(|l| case_grid(case.spec(), n0 << l))
        .collect::<Result<Vec<_>>>()?;
    let eps: Vec<f64> = grids.iter().map(|g| g.h_max() / ratio).collect();
    check_eps_list(&eps)?;
    let rows = map_rows(&grids, opts.parallel_rows, |g| {
        let e = g.h_max() / ratio;
        match signed_distance(&case.spec().geometry, g) {
            Ok(r) => exact_row(case, &r, e, opts),
            Err(err) => ConvergenceRow::failed(e, g.h_max(), g.len(), err.to_string()),
        }
    });
    Ok(ConvergenceTable::new(rows, opts.subdomain, opts.mg.tol))
}

/// Exterior diffusivity as a function of ε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaRule {
    Constant(f64),
    /// `α = ε^m`.
    Power(f64),
}

impl AlphaRule {
    pub fn alpha(self, eps: f64) -> f64 {
        match self {
            AlphaRule::Constant(a) => a,
            AlphaRule::Power(m) => eps.powf(m),
        }
    }
}

/// One-sided limit: `α` follows `rule`, errors are measured on Ω1 only.
pub fn one_sided_study(rule: AlphaRule, grid: &Grid, eps: &[f64], opts: &StudyOptions) -> Result<ConvergenceTable> {
    check_eps_list(eps)?;
    let opts = StudyOptions {
        subdomain: Subdomain::Inner,
        ..*opts
    };
    let base = TestCase::one_sided_1d(rule.alpha(eps[0]))?;
    let r = signed_distance(&base.spec().geometry, grid)?;
    let rows = map_rows(eps, opts.parallel_rows, |&e| match TestCase::one_sided_1d(rule.alpha(e)) {
        Ok(case) => exact_row(&case, &r, e, &opts),
        Err(err) => ConvergenceRow::failed(e, grid.h_max(), grid.len(), err.to_string()),
    });
    Ok(ConvergenceTable::new(rows, Subdomain::Inner, opts.mg.tol))
}

/// Probe values for one ε.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticRow {
    pub epsilon: f64,
    /// `|u_ε − u₀ − ε u₁|` at each probe.
    pub remainder: Vec<f64>,
    /// `|u_ε − u₀|` at each probe.
    pub raw: Vec<f64>,
    pub mg_cycles: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticTable {
    pub probes: Vec<f64>,
    pub rows: Vec<AsymptoticRow>,
    /// Per probe; `None` when the fit is impossible, e.g. an exact zero.
    pub remainder_slopes: Vec<Option<f64>>,
    pub raw_slopes: Vec<Option<f64>>,
}

impl AsymptoticTable {
    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("epsilon,probe,remainder,raw,mg_cycles\n");
        for r in &self.rows {
            for (k, &x) in self.probes.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    fmt_f64(r.epsilon),
                    fmt_f64(x),
                    fmt_f64(r.remainder[k]),
                    fmt_f64(r.raw[k]),
                    r.mg_cycles
                );
            }
        }
        for (k, &x) in self.probes.iter().enumerate() {
            let f = |v: Option<f64>| v.map_or_else(|| "na".to_string(), fmt_f64);
            let _ = writeln!(
                s,
                "# slopes probe={} remainder={} raw={}",
                fmt_f64(x),
                f(self.remainder_slopes[k]),
                f(self.raw_slopes[k])
            );
        }
        s
    }
}

/// Compares diffuse solutions at outer probes with the sharp solution and
/// its first-order correction. `n_ddm` is the diffuse grid size and
/// `n_sharp` the number of sharp intervals per side.
pub fn asymptotic_order_check(
    case: &TestCase,
    eps: &[f64],
    probes: &[f64],
    n_ddm: usize,
    n_sharp: usize,
    opts: &StudyOptions,
) -> Result<AsymptoticTable> {
    check_eps_list(eps)?;
    let spec = case.spec();
    if spec.dim() != 1 {
        return Err(Error::Configuration("the asymptotic check is one-dimensional".into()));
    }
    if probes.is_empty() {
        return Err(Error::Configuration("no probe points".into()));
    }
    let x0 = match spec.geometry {
        crate::geometry::InterfaceGeometry::Point1d { x0 } => x0,
        _ => return Err(Error::Configuration("expected a point interface".into())),
    };
    let max_eps = eps.iter().cloned().fold(0.0, f64::max);
    let [a, b] = spec.domain[0];
    for &x in probes {
        if (x - x0).abs() < 10.0 * max_eps {
            return Err(Error::Configuration(format!(
                "probe {x} lies within 10 eps = {} of the interface",
                10.0 * max_eps
            )));
        }
        if !(x > a && x < b) {
            return Err(Error::Configuration(format!("probe {x} is outside the domain")));
        }
    }
    let sharp = sharp_solve_1d(spec, n_sharp)?;
    let corr: CorrectionSolution = first_order_correction_1d(spec, &sharp)?;
    let grid = case_grid(spec, n_ddm)?;
    let r = signed_distance(&spec.geometry, &grid)?;
    let rows = map_rows(eps, opts.parallel_rows, |&e| -> Result<AsymptoticRow> {
        let (u, report): (DiscreteField, SolveReport) = solve_with_distance(spec, &r, e, &opts.mg)?;
        let (mut remainder, mut raw) = (Vec::new(), Vec::new());
        for &x in probes {
            let ue = u.interpolate_1d(x);
            remainder.push((ue - expansion_eval(&sharp, &corr, e, x)).abs());
            raw.push((ue - sharp.eval(x)).abs());
        }
        Ok(AsymptoticRow {
            epsilon: e,
            remainder,
            raw,
            mg_cycles: report.iterations,
            converged: report.converged,
        })
    });
    let mut rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    rows.sort_by(|p, q| q.epsilon.total_cmp(&p.epsilon));
    let slope = |pick: &dyn Fn(&AsymptoticRow) -> f64| -> Option<f64> {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.epsilon, pick(r))).collect();
        fit_rate(&pts).ok()
    };
    let remainder_slopes = (0..probes.len()).map(|k| slope(&|r| r.remainder[k])).collect();
    let raw_slopes = (0..probes.len()).map(|k| slope(&|r| r.raw[k])).collect();
    Ok(AsymptoticTable {
        probes: probes.to_vec(),
        rows,
        remainder_slopes,
        raw_slopes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::InterfaceGeometry;
    use crate::model::SpatialFn;

    fn quick() -> StudyOptions {
        StudyOptions {
            mg: MgConfig {
                tol: 1e-9,
                ..MgConfig::default()
            },
            ..StudyOptions::default()
        }
    }

    #[test]
    fn epsilon_study_is_deterministic_and_sorted() {
        let case = TestCase::builtin("paper-1d").unwrap();
        let grid = case_grid(case.spec(), 2048).unwrap();
        let eps = [0.025, 0.1, 0.05];
        let a = epsilon_study(&case, &grid, &eps, &quick()).unwrap();
        let b = epsilon_study(&case, &grid, &eps, &StudyOptions { parallel_rows: true, ..quick() }).unwrap();
        assert_eq!(a.to_csv(false), b.to_csv(false));
        assert_eq!(a.rows[0].epsilon, 0.1);
        assert!(a.all_converged());
        assert!(a.rows.windows(2).all(|w| w[1].l2_error < w[0].l2_error));
    }

    #[test]
    fn whole_error_combines_parts() {
        let case = TestCase::builtin("paper-1d").unwrap();
        let grid = case_grid(case.spec(), 1024).unwrap();
        let t = |s| epsilon_study(&case, &grid, &[0.05], &StudyOptions { subdomain: s, ..quick() }).unwrap().rows[0].l2_error;
        let (w, i, o) = (t(Subdomain::Whole), t(Subdomain::Inner), t(Subdomain::Outer));
        assert!((w * w - i * i - o * o).abs() < 1e-12 * w * w);
    }

    #[test]
    fn coupled_path_errors_decrease() {
        let case = TestCase::builtin("paper-1d").unwrap();
        let t = coupled_refinement_study(&case, 0.1, 256, 3, &quick()).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.rows[2].n_cells, 1024);
        assert!((t.rows[0].epsilon - 10.0 * 2.0 / 256.0).abs() < 1e-15);
        assert!(t.rows.windows(2).all(|w| w[1].l2_error < w[0].l2_error && w[1].linf_error < w[0].linf_error));
    }

    #[test]
    fn self_convergence_needs_wider_tests() {
        let case = TestCase::builtin("pentagon-2d").unwrap();
        let grid = case_grid(case.spec(), 32).unwrap();
        assert!(self_convergence_study(&case, &grid, 0.2, &[0.1], &quick()).is_err());
        let t = self_convergence_study(&case, &grid, 0.2, &[0.8, 0.4], &quick()).unwrap();
        assert!(t.rows[0].l2_error > t.rows[1].l2_error);
    }

    #[test]
    fn missing_exact_solution() {
        let case = TestCase::builtin("starfish-2d").unwrap();
        let grid = case_grid(case.spec(), 16).unwrap();
        assert!(matches!(epsilon_study(&case, &grid, &[0.1], &quick()), Err(Error::NoExactSolution(_))));
    }

    #[test]
    fn one_sided_uses_inner_errors() {
        let grid = Grid::new_1d(1024, -1.0, 1.0).unwrap();
        let t = one_sided_study(AlphaRule::Power(2.0), &grid, &[0.1, 0.05], &quick()).unwrap();
        assert_eq!(t.subdomain, Subdomain::Inner);
        assert_eq!(AlphaRule::Power(2.0).alpha(0.1), 0.1f64.powf(2.0));
        assert_eq!(AlphaRule::Constant(0.3).alpha(0.1), 0.3);
    }

    #[test]
    fn probes_inside_the_layer_are_rejected() {
        let case = TestCase::builtin("paper-1d").unwrap();
        let e = asymptotic_order_check(&case, &[0.05], &[0.3], 1024, 64, &quick()).unwrap_err();
        assert!(matches!(e, Error::Configuration(_)));
        assert!(asymptotic_order_check(&case, &[0.01], &[1.5], 1024, 64, &quick()).is_err());
    }

    #[test]
    fn matched_derivatives_need_no_correction() {
        // u = cos(πx) on both sides with α = 2, κ = 0: no kink, no jump, u₁ = 0.
        let pi = std::f64::consts::PI;
        let spec = ProblemSpec {
            alpha: 2.0,
            beta: 1.0,
            gamma: 1.0,
            kappa: 0.0,
            g: SpatialFn::constant(0.0),
            q: SpatialFn::new(move |p| (pi * pi + 1.0) * (pi * p[0]).cos()),
            h: SpatialFn::new(move |p| (2.0 * pi * pi + 1.0) * (pi * p[0]).cos()),
            geometry: InterfaceGeometry::Point1d { x0: 0.0 },
            domain: vec![[-1.0, 1.0]],
        };
        let case = TestCase::new("matched", spec, None).unwrap();
        let eps = [0.04, 0.02, 0.01];
        let t = asymptotic_order_check(&case, &eps, &[-0.5, 0.5], 1 << 14, 1024, &quick()).unwrap();
        for r in &t.rows {
            for k in 0..2 {
                // u₁ is zero up to the sharp solver's discretization error.
                assert!((r.remainder[k] - r.raw[k]).abs() < 1e-3 * r.raw[k], "{r:?}");
            }
        }
        assert!(t.raw_slopes.iter().chain(&t.remainder_slopes).all(|s| s.unwrap() > 1.8), "{t:?}");
    }
}
