//! Fast invariant checks across the solver modules.

use std::time::Instant;

use ddm_core::analysis::{epsilon_study, fit_rate, StudyOptions};
use ddm_core::discretization::build_operator;
use ddm_core::geometry::{polygon_signed_distance, signed_distance};
use ddm_core::multigrid::{solve, MgConfig};
use ddm_core::phasefield::{phi, surface_delta};
use ddm_core::reference::sharp_solve_1d;
use ddm_core::{Grid, InterfaceGeometry, TestCase};

type Check = fn() -> Result<String, String>;

fn ensure(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn case(name: &str) -> Result<TestCase, String> {
    TestCase::builtin(name).map_err(|e| e.to_string())
}

fn grid_of(c: &TestCase, n: usize) -> Result<Grid, String> {
    Grid::from_bounds(&vec![n; c.spec().dim()], &c.spec().domain).map_err(|e| e.to_string())
}

fn phase_field() -> Result<String, String> {
    let eps = 0.05;
    let sym = (0..100)
        .map(|k| {
            let r = -0.5 + 0.01 * k as f64;
            (phi(r, eps) + phi(-r, eps) - 1.0).abs()
        })
        .fold(0.0, f64::max);
    let n = 20_000;
    let h = 2.0 / n as f64;
    let mass: f64 = (0..n).map(|k| surface_delta(-1.0 + (k as f64 + 0.5) * h, eps) * h).sum();
    ensure(
        sym < 1e-15 && (phi(0.0, eps) - 0.5).abs() < 1e-15 && (mass - 1.0).abs() < 1e-8,
        format!("symmetry {sym:.1e}, delta mass {mass:.12}"),
    )
}

fn polygon_distance() -> Result<String, String> {
    let c = case("pentagon-2d")?;
    let geom = &c.spec().geometry;
    let verts = match geom {
        InterfaceGeometry::ConvexPolygon { vertices } => vertices.clone(),
        _ => return Err("pentagon case is not a polygon".into()),
    };
    let at_vertex = polygon_signed_distance(verts[0], geom).map_err(|e| e.to_string())?;
    let centroid = verts.iter().fold([0.0, 0.0], |a, v| [a[0] + v[0] / 5.0, a[1] + v[1] / 5.0]);
    let inside = polygon_signed_distance(centroid, geom).map_err(|e| e.to_string())?;
    ensure(
        at_vertex.abs() < 1e-15 && inside > 0.0,
        format!("vertex {at_vertex:.1e}, centroid {inside:.4}"),
    )
}

fn fast_marching() -> Result<String, String> {
    let grid = Grid::new_2d([64, 64], [-2.0, 2.0], [-2.0, 2.0]).map_err(|e| e.to_string())?;
    let circle = InterfaceGeometry::Ellipse { a: 1.0, b: 1.0 };
    let r = signed_distance(&circle, &grid).map_err(|e| e.to_string())?;
    let err = grid
        .centers()
        .zip(r.values())
        .map(|(p, &v)| (v - (1.0 - p[0].hypot(p[1]))).abs())
        .fold(0.0, f64::max);
    let h = grid.h_max();
    ensure(err < 2.0 * h, format!("max error {err:.3e} vs h {h:.3e}"))
}

fn exact_solutions() -> Result<String, String> {
    let mut worst = 0.0f64;
    for name in ["paper-1d", "one-sided-1d"] {
        let c = case(name)?;
        let s = c.spec();
        let i = c.exact().and_then(|e| e.interface_1d).ok_or("missing interface data")?;
        let lambda = s.lambda().ok_or("missing lambda")?;
        worst = worst.max((i.d_right - s.alpha * i.d_left - s.kappa * i.value - lambda).abs());
    }
    let at = case("paper-1d")?.exact_solution([0.25, 0.0]).map_err(|e| e.to_string())?;
    ensure(
        worst < 1e-10 && (at + 4.25).abs() < 1e-12,
        format!("flux identity {worst:.1e}, u(0.25) = {at}"),
    )
}

fn operator_symmetry() -> Result<String, String> {
    let mut worst = 0.0f64;
    for name in ["ellipse-2d", "starfish-2d", "pentagon-2d"] {
        let c = case(name)?;
        let op = build_operator(c.spec(), &grid_of(&c, 8)?, 0.2).map_err(|e| e.to_string())?;
        let a = op.to_dense();
        for (i, row) in a.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                worst = worst.max((v - a[j][i]).abs());
            }
        }
    }
    ensure(worst < 1e-12, format!("max asymmetry {worst:.1e}"))
}

fn multigrid_convergence() -> Result<String, String> {
    let c = case("paper-1d")?;
    let (_, report) = solve(c.spec(), &grid_of(&c, 1024)?, 0.05, &MgConfig::default()).map_err(|e| e.to_string())?;
    ensure(
        report.converged && report.worst_ratio() < 1.0,
        format!(
            "{} cycles, contraction {:.3}, worst ratio {:.3}",
            report.iterations,
            report.contraction,
            report.worst_ratio()
        ),
    )
}

fn sharp_reference() -> Result<String, String> {
    let c = case("paper-1d")?;
    let sharp = sharp_solve_1d(c.spec(), 2048).map_err(|e| e.to_string())?;
    let err = [-0.75, -0.3, 0.2, 0.6]
        .iter()
        .map(|&x| (sharp.eval(x) - c.exact_solution([x, 0.0]).unwrap_or(f64::NAN)).abs())
        .fold(0.0, f64::max);
    ensure(err < 1e-3, format!("max probe error {err:.3e}"))
}

fn rate_fit() -> Result<String, String> {
    let pts: Vec<(f64, f64)> = (0..5).map(|k| {
        let e = 0.1 * 0.5f64.powi(k);
        (e, 3.0 * e.powf(1.5))
    }).collect();
    let s = fit_rate(&pts).map_err(|e| e.to_string())?;
    ensure((s - 1.5).abs() < 1e-12, format!("slope {s}"))
}

fn study_determinism() -> Result<String, String> {
    let c = case("paper-1d")?;
    let g = grid_of(&c, 512)?;
    let opts = StudyOptions::default();
    let run = || epsilon_study(&c, &g, &[0.2, 0.1, 0.05], &opts).map(|t| t.to_csv(false));
    let a = run().map_err(|e| e.to_string())?;
    let b = run().map_err(|e| e.to_string())?;
    ensure(a == b, format!("{} bytes", a.len()))
}

const CHECKS: [(&str, Check); 9] = [
    ("phase field", phase_field),
    ("polygon distance", polygon_distance),
    ("fast marching", fast_marching),
    ("exact solutions", exact_solutions),
    ("operator symmetry", operator_symmetry),
    ("multigrid", multigrid_convergence),
    ("sharp reference", sharp_reference),
    ("rate fit", rate_fit),
    ("study determinism", study_determinism),
];

/// Prints one line per check; true when all pass.
pub fn run() -> bool {
    let mut all = true;
    for (name, check) in CHECKS {
        let t = Instant::now();
        let (tag, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                all = false;
                ("FAIL", d)
            }
        };
        println!("[{tag}] {name}: {detail} ({:.2} s)", t.elapsed().as_secs_f64());
    }
    all
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        assert!(super::run());
    }
}
