//! Error norms, log-log rate fits and convergence tables.

mod studies;

pub use studies::{
    asymptotic_order_check, coupled_refinement_study, epsilon_study, one_sided_study, self_convergence_study,
    AlphaRule, AsymptoticRow, AsymptoticTable, StudyOptions,
};

use std::fmt::Write as _;

use crate::discretization::DiscreteField;
use crate::error::{Error, Result};
use crate::geometry::DistanceField;
use crate::Point;

/// Points with `ε < RESOLUTION_GUARD · h` are left out of the resolved fit.
pub const RESOLUTION_GUARD: f64 = 20.0;

/// Errors below this multiple of the solver tolerance are left out of the
/// resolved fit.
pub const ERROR_GUARD: f64 = 100.0;

/// Region over which errors are measured. Cells with `r ≥ 0` belong to Ω1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Subdomain {
    #[default]
    Whole,
    /// Ω1, where the signed distance is nonnegative.
    Inner,
    /// Ω2, where the signed distance is negative.
    Outer,
}

impl Subdomain {
    #[inline]
    pub fn contains(self, r: f64) -> bool {
        match self {
            Subdomain::Whole => true,
            Subdomain::Inner => r >= 0.0,
            Subdomain::Outer => r < 0.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Subdomain::Whole => "whole",
            Subdomain::Inner => "inner",
            Subdomain::Outer => "outer",
        }
    }
}

/// `(l2, linf)` of `u − reference` over the cells of `subdomain`.
pub fn discrete_error(
    u: &DiscreteField,
    reference: impl Fn(Point) -> f64,
    r: &DistanceField,
    subdomain: Subdomain,
) -> Result<(f64, f64)> {
    error_norms(u, |k| reference(u.grid().center_of(k)), r, subdomain)
}

/// Like [`discrete_error`] against a field on the same grid.
pub fn discrete_error_against(
    u: &DiscreteField,
    reference: &DiscreteField,
    r: &DistanceField,
    subdomain: Subdomain,
) -> Result<(f64, f64)> {
    if reference.grid() != u.grid() {
        return Err(Error::InvalidGrid("reference field lives on a different grid".into()));
    }
    error_norms(u, |k| reference.values()[k], r, subdomain)
}

fn error_norms(u: &DiscreteField, reference: impl Fn(usize) -> f64, r: &DistanceField, sub: Subdomain) -> Result<(f64, f64)> {
    if r.grid() != u.grid() {
        return Err(Error::InvalidGrid("distance field lives on a different grid".into()));
    }
    let (mut sum, mut max, mut count) = (0.0, 0.0f64, 0usize);
    for (k, (&v, &rk)) in u.values().iter().zip(r.values()).enumerate() {
        if sub.contains(rk) {
            let e = v - reference(k);
            sum += e * e;
            max = max.max(e.abs());
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::EmptySubdomain);
    }
    Ok(((sum * u.grid().cell_measure()).sqrt(), max))
}

/// Least-squares slope of `log(error)` against `log(ε)`.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::InvalidData(format!("need at least 3 points, got {}", points.len())));
    }
    if let Some(&(e, v)) = points.iter().find(|(e, v)| !(*v > 0.0 && *e > 0.0 && v.is_finite())) {
        return Err(Error::InvalidData(format!("nonpositive or non-finite point ({e}, {v})")));
    }
    let n = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|(e, v)| (e.ln(), v.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidData("all abscissae coincide".into()));
    }
    Ok(sxy / sxx)
}

/// Full-range and resolved-range slopes of one error norm.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RateFit {
    pub full: Option<f64>,
    pub resolved: Option<f64>,
}

/// One solve in a study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub h: f64,
    pub n_cells: usize,
    pub l2_error: f64,
    pub linf_error: f64,
    pub mg_cycles: usize,
    pub final_residual: f64,
    pub wall_seconds: f64,
    pub converged: bool,
    pub hit_rounding_floor: bool,
    /// Set when the solve itself failed; the row is excluded from fits.
    pub failure: Option<String>,
}

impl ConvergenceRow {
    pub fn failed(epsilon: f64, h: f64, n_cells: usize, why: String) -> Self {
        ConvergenceRow {
            epsilon,
            h,
            n_cells,
            l2_error: f64::NAN,
            linf_error: f64::NAN,
            mg_cycles: 0,
            final_residual: f64::NAN,
            wall_seconds: 0.0,
            converged: false,
            hit_rounding_floor: false,
            failure: Some(why),
        }
    }

    /// `ε ≥ 20h`.
    pub fn is_resolved(&self) -> bool {
        self.epsilon >= RESOLUTION_GUARD * self.h
    }
}

/// Rows ordered by decreasing ε, plus fitted slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub subdomain: Subdomain,
    pub solver_tol: f64,
    pub l2: RateFit,
    pub linf: RateFit,
}

pub const CSV_HEADER: &str = "epsilon,h,n_cells,l2_error,linf_error,mg_cycles,final_residual,wall_seconds";

impl ConvergenceTable {
    pub fn new(mut rows: Vec<ConvergenceRow>, subdomain: Subdomain, solver_tol: f64) -> Self {
        rows.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
        let mut t = ConvergenceTable {
            rows,
            subdomain,
            solver_tol,
            l2: RateFit::default(),
            linf: RateFit::default(),
        };
        t.l2 = t.fit_norm(|r| r.l2_error);
        t.linf = t.fit_norm(|r| r.linf_error);
        t
    }

    fn fit_norm(&self, pick: impl Fn(&ConvergenceRow) -> f64) -> RateFit {
        let usable: Vec<&ConvergenceRow> = self.rows.iter().filter(|r| r.failure.is_none()).collect();
        let full: Vec<(f64, f64)> = usable.iter().map(|r| (r.epsilon, pick(r))).collect();
        let resolved: Vec<(f64, f64)> = usable
            .iter()
            .filter(|r| r.is_resolved() && pick(r) > ERROR_GUARD * self.solver_tol)
            .map(|r| (r.epsilon, pick(r)))
            .collect();
        RateFit {
            full: fit_rate(&full).ok(),
            resolved: fit_rate(&resolved).ok(),
        }
    }

    /// Slopes fitted to a subset of rows selected by position.
    pub fn slope_of(&self, range: std::ops::Range<usize>, norm_l2: bool) -> Result<f64> {
        let pts: Vec<(f64, f64)> = self.rows[range]
            .iter()
            .filter(|r| r.failure.is_none())
            .map(|r| (r.epsilon, if norm_l2 { r.l2_error } else { r.linf_error }))
            .collect();
        fit_rate(&pts)
    }

    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged && r.failure.is_none())
    }

    /// CSV with 17 significant digits and a trailing `# slopes` line. Wall
    /// time is written as zero unless `timing` is set, keeping output
    /// reproducible.
    pub fn to_csv(&self, timing: bool) -> String {
        let mut s = String::new();
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                fmt_f64(r.epsilon),
                fmt_f64(r.h),
                r.n_cells,
                fmt_f64(r.l2_error),
                fmt_f64(r.linf_error),
                r.mg_cycles,
                fmt_f64(r.final_residual),
                fmt_f64(if timing { r.wall_seconds } else { 0.0 }),
            );
        }
        let _ = writeln!(
            s,
            "# slopes subdomain={} l2_full={} l2_resolved={} linf_full={} linf_resolved={}",
            self.subdomain.name(),
            fmt_opt(self.l2.full),
            fmt_opt(self.l2.resolved),
            fmt_opt(self.linf.full),
            fmt_opt(self.linf.resolved),
        );
        s
    }
}

/// Scientific notation with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.16e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "na".into(), fmt_f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::Grid;
    use proptest::prelude::*;

    fn row(eps: f64, e: f64, h: f64) -> ConvergenceRow {
        ConvergenceRow {
            epsilon: eps,
            h,
            n_cells: 10,
            l2_error: e,
            linf_error: 2.0 * e,
            mg_cycles: 3,
            final_residual: 1e-11,
            wall_seconds: 0.25,
            converged: true,
            hit_rounding_floor: false,
            failure: None,
        }
    }

    #[test]
    fn exact_power_laws() {
        let lin = [(0.1, 0.05), (0.05, 0.025), (0.025, 0.0125)];
        assert!((fit_rate(&lin).unwrap() - 1.0).abs() < 1e-12);
        let quad = [(0.1, 0.01), (0.05, 0.0025), (0.025, 0.000625)];
        assert!((fit_rate(&quad).unwrap() - 2.0).abs() < 1e-12);
        assert!(fit_rate(&lin[..2]).is_err());
        assert!(matches!(fit_rate(&[(0.1, 0.0), (0.05, 1.0), (0.02, 1.0)]), Err(Error::InvalidData(_))));
    }

    #[test]
    fn error_examples() {
        let g = Grid::new_1d(8, -1.0, 1.0).unwrap();
        let r = DistanceField::new(DiscreteField::from_fn(g, |p| p[0]));
        let f = |p: Point| p[0] * p[0];
        let u = DiscreteField::from_fn(g, f);
        assert_eq!(discrete_error(&u, f, &r, Subdomain::Whole).unwrap(), (0.0, 0.0));
        // Shift 3 cells by c.
        let mut v = u.clone();
        for k in [5, 6, 7] {
            v.values_mut()[k] += 0.5;
        }
        let (l2, linf) = discrete_error(&v, f, &r, Subdomain::Inner).unwrap();
        assert!((l2 - 0.5 * (3.0f64 * 0.25).sqrt()).abs() < 1e-15);
        assert_eq!(linf, 0.5);

        let neg = DistanceField::new(DiscreteField::constant(g, -1.0));
        assert_eq!(discrete_error(&u, f, &neg, Subdomain::Inner).unwrap_err(), Error::EmptySubdomain);
    }

    #[test]
    fn table_is_sorted_and_guarded() {
        let h = 1e-3;
        let rows = vec![
            row(0.01, 0.01, h),
            row(0.1, 0.1, h),
            row(0.05, 0.05, h),
            row(0.015, 0.015, h),
        ];
        let t = ConvergenceTable::new(rows, Subdomain::Whole, 1e-10);
        let eps: Vec<f64> = t.rows.iter().map(|r| r.epsilon).collect();
        assert_eq!(eps, vec![0.1, 0.05, 0.015, 0.01]);
        assert!((t.l2.full.unwrap() - 1.0).abs() < 1e-12);
        // ε = 0.015 and 0.01 are below 20h: only two resolved points remain.
        assert_eq!(t.l2.resolved, None);
    }

    #[test]
    fn csv_format() {
        let t = ConvergenceTable::new(vec![row(0.1, 0.1, 1e-3), row(0.05, 0.05, 1e-3), row(0.025, 0.025, 1e-3)], Subdomain::Inner, 1e-10);
        let csv = t.to_csv(false);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "1.0000000000000001e-1,1.0000000000000000e-3,10,1.0000000000000001e-1,2.0000000000000001e-1,3,9.9999999999999994e-12,0.0000000000000000e0");
        assert!(lines[4].starts_with("# slopes subdomain=inner l2_full=1.0"));
        assert!(!csv.contains('\r'));
        assert_eq!(csv, t.to_csv(false));
        assert!(t.to_csv(true).contains("2.5000000000000000e-1"));
    }

    #[test]
    fn failed_rows_are_excluded() {
        let mut rows = vec![row(0.1, 0.1, 1e-3), row(0.05, 0.05, 1e-3), row(0.025, 0.025, 1e-3)];
        rows.push(ConvergenceRow::failed(0.0125, 1e-3, 10, "diverged".into()));
        let t = ConvergenceTable::new(rows, Subdomain::Whole, 1e-10);
        assert!((t.l2.full.unwrap() - 1.0).abs() < 1e-12);
        assert!(!t.all_converged());
        assert!(t.to_csv(false).contains("nan"));
    }

    proptest! {
        #[test]
        fn synthetic_power_law_is_exact(p in -3.0f64..3.0, c in 1e-3f64..1e3, n in 3usize..10) {
            let pts: Vec<(f64, f64)> = (0..n).map(|k| {
                let e = 0.2 * 0.5f64.powi(k as i32);
                (e, c * e.powf(p))
            }).collect();
            prop_assert!((fit_rate(&pts).unwrap() - p).abs() < 1e-12);
        }

        #[test]
        fn l2_squares_add_over_subdomains(seed in 0u64..500) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let g = Grid::new_2d([6, 6], [-1.0, 1.0], [-1.0, 1.0]).unwrap();
            let r = DistanceField::new(DiscreteField::from_fn(g, |_| rng.gen_range(-1.0..1.0)));
            let u = DiscreteField::from_fn(g, |p| p[0] + p[1]);
            let f = |p: Point| (p[0] * 3.0).sin();
            let (w, _) = discrete_error(&u, f, &r, Subdomain::Whole).unwrap();
            let parts: f64 = [Subdomain::Inner, Subdomain::Outer]
                .iter()
                .map(|&s| discrete_error(&u, f, &r, s).map_or(0.0, |e| e.0 * e.0))
                .sum();
            prop_assert!((w * w - parts).abs() < 1e-12 * (1.0 + w * w));
        }

        #[test]
        fn relabeling_cells_preserves_error(seed in 0u64..500) {
            use rand::{seq::SliceRandom, Rng, SeedableRng};
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let g = Grid::new_1d(16, 0.0, 1.0).unwrap();
            let e: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut perm = e.clone();
            perm.shuffle(&mut rng);
            let r = DistanceField::new(DiscreteField::constant(g, 1.0));
            let zero = DiscreteField::zeros(g);
            let a = discrete_error_against(&DiscreteField::from_values(g, e).unwrap(), &zero, &r, Subdomain::Whole).unwrap();
            let b = discrete_error_against(&DiscreteField::from_values(g, perm).unwrap(), &zero, &r, Subdomain::Whole).unwrap();
            prop_assert!((a.0 - b.0).abs() < 1e-14 && a.1 == b.1);
        }
    }
}
