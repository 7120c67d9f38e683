//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::time::Instant;

use ddm_core::analysis::{
    asymptotic_order_check, coupled_refinement_study, epsilon_study, one_sided_study, self_convergence_study, AlphaRule,
    StudyOptions,
};
use ddm_core::discretization::build_operator;
use ddm_core::geometry::{polygon_signed_distance, signed_distance};
use ddm_core::multigrid::{self, solve_with_distance};
use ddm_core::reference::layer::{
    i0_left_offset, i0_right_offset, i1_left_limit, i1_right_offset, layer_d, layer_integrals, layer_phi,
    phi_over_d_identity,
};
use ddm_core::*;
use rand::{Rng, SeedableRng};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(v: Option<f64>, lo: f64, hi: f64) -> bool {
    v.is_some_and(|s| (lo..=hi).contains(&s))
}

fn fmt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".into(), |s| format!("{s:.4}"))
}

fn geometric(start: f64, k: usize) -> Vec<f64> {
    (0..k).map(|i| start * 0.5f64.powi(i as i32)).collect()
}

fn case_grid(case: &TestCase, n: usize) -> Grid {
    Grid::from_bounds(&vec![n; case.spec().dim()], &case.spec().domain).unwrap()
}

fn c1_epsilon_1d() -> Outcome {
    let case = TestCase::builtin("paper-1d").unwrap();
    let t = epsilon_study(&case, &case_grid(&case, 1 << 15), &geometric(0.1, 7), &StudyOptions::default()).unwrap();
    check(
        t.all_converged() && within(t.l2.resolved, 1.0, 1.4),
        format!("resolved L2 slope {} (full {}), want [1.00, 1.40]", fmt(t.l2.resolved), fmt(t.l2.full)),
    )
}

fn c2_coupled() -> Outcome {
    let case = TestCase::builtin("paper-1d").unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for (label, ratio) in [("eps=10h", 0.1), ("eps=20h", 0.05)] {
        let t = coupled_refinement_study(&case, ratio, 512, 6, &StudyOptions::default()).unwrap();
        pass &= t.all_converged() && within(t.l2.full, 0.85, 1.15) && within(t.linf.full, 0.85, 1.15);
        detail.push(format!("{label}: L2 {} Linf {}", fmt(t.l2.full), fmt(t.linf.full)));
    }
    check(pass, format!("{}, want [0.85, 1.15]", detail.join("; ")))
}

fn c3_ellipse() -> Outcome {
    let case = TestCase::builtin("ellipse-2d").unwrap();
    let t = epsilon_study(&case, &case_grid(&case, 512), &geometric(0.2, 5), &StudyOptions::default()).unwrap();
    check(
        t.all_converged() && within(t.l2.full, 1.0, 1.4),
        format!("L2 slope {}, want [1.00, 1.40]", fmt(t.l2.full)),
    )
}

fn c4_pentagon() -> Outcome {
    let case = TestCase::builtin("pentagon-2d").unwrap();
    let eps = [0.128, 0.064, 0.032, 0.016];
    let t = self_convergence_study(&case, &case_grid(&case, 512), 0.008, &eps, &StudyOptions::default()).unwrap();
    check(
        t.all_converged() && within(t.linf.full, 0.9, 1.5) && within(t.l2.full, 1.1, 1.9),
        format!("Linf slope {} want [0.9, 1.5], L2 slope {} want [1.1, 1.9]", fmt(t.linf.full), fmt(t.l2.full)),
    )
}

fn c5_one_sided() -> Outcome {
    let opts = StudyOptions::default();
    let mut pass = true;
    let mut detail = Vec::new();
    let grid = Grid::new_1d(1 << 18, -1.0, 1.0).unwrap();
    for m in [2.0, 3.0] {
        let t = one_sided_study(AlphaRule::Power(m), &grid, &geometric(0.05, 8), &opts).unwrap();
        pass &= t.all_converged() && within(t.l2.resolved, 1.7, 2.2);
        detail.push(format!("alpha=eps^{m}: {}", fmt(t.l2.resolved)));
    }
    let grid = Grid::new_1d(1 << 21, -1.0, 1.0).unwrap();
    let t = one_sided_study(AlphaRule::Constant(0.01), &grid, &geometric(0.05, 12), &opts).unwrap();
    let resolved: Vec<usize> = (0..t.rows.len()).filter(|&i| t.rows[i].is_resolved()).collect();
    let n = resolved.len();
    let (large, small) = if n >= 3 {
        (
            t.slope_of(resolved[0]..resolved[2] + 1, true).ok(),
            t.slope_of(resolved[n - 3]..resolved[n - 1] + 1, true).ok(),
        )
    } else {
        (None, None)
    };
    pass &= t.all_converged() && within(small, 0.85, 1.3) && large.is_some_and(|s| s >= 1.5);
    detail.push(format!("alpha=0.01: largest three {} want >= 1.5, smallest three {} want [0.85, 1.3]", fmt(large), fmt(small)));
    check(pass, format!("{}; power rules want [1.7, 2.2]", detail.join("; ")))
}

fn c6_asymptotics() -> Outcome {
    let case = TestCase::builtin("paper-1d").unwrap();
    let t = asymptotic_order_check(&case, &geometric(0.05, 5), &[-0.5, 0.5], 1 << 17, 1 << 14, &StudyOptions::default())
        .unwrap();
    let rem_ok = t.remainder_slopes.iter().all(|s| s.is_some_and(|s| s >= 1.8));
    let raw_ok = t.raw_slopes.iter().all(|&s| within(s, 0.85, 1.15));
    let show = |v: &[Option<f64>]| v.iter().map(|s| fmt(*s)).collect::<Vec<_>>().join("/");
    check(
        t.all_converged() && rem_ok && raw_ok,
        format!(
            "remainder slopes at -0.5/0.5 {} want >= 1.8; raw slopes {} want [0.85, 1.15]",
            show(&t.remainder_slopes),
            show(&t.raw_slopes)
        ),
    )
}

/// Adaptive Simpson quadrature.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

fn c7_layer_integrals() -> Outcome {
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    let mut quad_err = 0.0f64;
    let mut ident_err = 0.0f64;
    for _ in 0..20 {
        let z: f64 = rng.gen_range(-10.0..10.0);
        let alpha = [0.1, 0.5, 1.0, 2.0][rng.gen_range(0..4)];
        let (i0, i1, i2) = layer_integrals(z, alpha);
        let q0 = adaptive_simpson(&|s| 1.0 / layer_d(s, alpha), 0.0, z, 1e-13);
        let q1 = adaptive_simpson(&|s| layer_phi(s) / layer_d(s, alpha), 0.0, z, 1e-13);
        let q2 = adaptive_simpson(&layer_phi, 0.0, z, 1e-13);
        quad_err = quad_err.max((i0 - q0).abs()).max((i1 - q1).abs()).max((i2 - q2).abs());
        if alpha != 1.0 {
            let rel = (i0 - ((alpha - 1.0) / alpha * i1 + z / alpha)).abs() / (1.0 + z.abs() / alpha);
            let pd = (layer_phi(z) / layer_d(z, alpha) - phi_over_d_identity(z, alpha)).abs();
            ident_err = ident_err.max(rel).max(pd);
        }
    }
    let mut asym_err = 0.0f64;
    for alpha in [0.1, 0.5, 2.0] {
        let (p0, p1, _) = layer_integrals(30.0, alpha);
        let (m0, m1, _) = layer_integrals(-30.0, alpha);
        asym_err = asym_err
            .max((p0 - 30.0 - i0_right_offset(alpha)).abs())
            .max((m0 + 30.0 / alpha - i0_left_offset(alpha)).abs())
            .max((p1 - 30.0 - i1_right_offset(alpha)).abs())
            .max((m1 - i1_left_limit(alpha)).abs());
    }
    check(
        quad_err <= 1e-10 && ident_err <= 1e-12 && asym_err <= 1e-6,
        format!("quadrature {quad_err:.2e} (<= 1e-10), identities {ident_err:.2e} (<= 1e-12), asymptotes {asym_err:.2e} (<= 1e-6)"),
    )
}

fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

fn c8_solver() -> Outcome {
    let cfg = MgConfig::default();
    let mut dense_err = 0.0f64;
    let mut sym_err = 0.0f64;
    let small = [("paper-1d", 64, 0.1), ("ellipse-2d", 8, 0.3), ("pentagon-2d", 8, 0.4), ("starfish-2d", 8, 0.3)];
    for (name, n, eps) in small {
        let case = TestCase::builtin(name).unwrap();
        let g = case_grid(&case, n);
        let op = build_operator(case.spec(), &g, eps).unwrap();
        let a = op.to_dense();
        for i in 0..a.len() {
            for j in 0..a.len() {
                sym_err = sym_err.max((a[i][j] - a[j][i]).abs() / a[i][i].abs());
            }
        }
        let rhs = discretization::build_rhs(case.spec(), &g, eps).unwrap();
        let x = dense_solve(a, rhs.values().to_vec());
        let (u, _) = multigrid::solve(case.spec(), &g, eps, &cfg).unwrap();
        let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let dn = u.values().iter().zip(&x).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        dense_err = dense_err.max(dn / xn);
    }

    let case = TestCase::builtin("paper-1d").unwrap();
    let mut worst_contraction = 0.0f64;
    let mut rates = Vec::new();
    for (n, eps) in [(1024, 0.05), (4096, 0.05), (1024, 0.2), (8192, 0.01)] {
        let g = case_grid(&case, n);
        assert!(eps >= 10.0 * g.h_max());
        let (_, rep) = multigrid::solve(case.spec(), &g, eps, &cfg).unwrap();
        worst_contraction = worst_contraction.max(rep.contraction);
        rates.push(format!("{:.3}", rep.contraction));
    }

    // cos(π(x+3)/6) cos(π(y+3)/3) has zero normal derivative on (−3, 3)².
    let pi = std::f64::consts::PI;
    let exact = move |p: Point| (pi * (p[0] + 3.0) / 6.0).cos() * (pi * (p[1] + 3.0) / 3.0).cos();
    let mut spec = TestCase::builtin("ellipse-2d").unwrap().spec().clone();
    let gamma = spec.gamma;
    spec.q = SpatialFn::new(move |p| (pi * pi / 36.0 + pi * pi / 9.0 + gamma) * exact(p));
    spec.g = SpatialFn::constant(0.0);
    let mut pts = Vec::new();
    for n in [32, 64, 128, 256] {
        let g = Grid::new_2d([n, n], [-3.0, 3.0], [-3.0, 3.0]).unwrap();
        let far = DistanceField::new(DiscreteField::constant(g, 1e3));
        let (u, _) = solve_with_distance(&spec, &far, 0.1, &cfg).unwrap();
        let e2: f64 = g.centers().zip(u.values()).map(|(p, v)| (v - exact(p)).powi(2)).sum();
        pts.push((g.h(0), (e2 * g.cell_measure()).sqrt()));
    }
    let slope = analysis::fit_rate(&pts).ok();
    check(
        dense_err <= 1e-8 && sym_err <= 1e-12 && worst_contraction <= 0.5 && within(slope, 1.9, 2.1),
        format!(
            "dense {dense_err:.2e} (<= 1e-8), symmetry {sym_err:.2e} (<= 1e-12), contraction {} (<= 0.5), manufactured slope {} ([1.9, 2.1])",
            rates.join("/"),
            fmt(slope)
        ),
    )
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let t = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}

fn c9_geometry() -> Outcome {
    let circle = InterfaceGeometry::Implicit(SpatialFn::new(|p| 1.0 - p[0].hypot(p[1])));
    let mut errs = Vec::new();
    let mut bound_ok = true;
    for n in [64, 128] {
        let g = Grid::new_2d([n, n], [-2.5, 2.5], [-2.5, 2.5]).unwrap();
        let r = signed_distance(&circle, &g).unwrap();
        let e = g
            .centers()
            .zip(r.values())
            .map(|(p, v)| (v - (1.0 - p[0].hypot(p[1]))).abs())
            .fold(0.0, f64::max);
        bound_ok &= e <= 2.0 * g.h(0);
        errs.push(e);
    }
    let ratio = errs[0] / errs[1];
    let geom = TestCase::builtin("pentagon-2d").unwrap().spec().geometry.clone();
    let InterfaceGeometry::ConvexPolygon { vertices } = &geom else { unreachable!() };
    let brute = (0..vertices.len())
        .map(|i| segment_distance([0.0, 0.0], vertices[i], vertices[(i + 1) % vertices.len()]))
        .fold(f64::INFINITY, f64::min);
    let analytic = polygon_signed_distance([0.0, 0.0], &geom).unwrap();
    let pent = (analytic - brute).abs();
    check(
        bound_ok && (1.5..=2.5).contains(&ratio) && pent <= 1e-12,
        format!(
            "circle max error {:.3e}/{:.3e} (<= 2h), ratio {ratio:.3} ([1.5, 2.5]), pentagon |analytic - brute| {pent:.1e} (<= 1e-12)",
            errs[0], errs[1]
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("C1 1D epsilon convergence", c1_epsilon_1d),
        ("C2 coupled refinement", c2_coupled),
        ("C3 ellipse epsilon convergence", c3_ellipse),
        ("C4 pentagon self-convergence", c4_pentagon),
        ("C5 one-sided limit", c5_one_sided),
        ("C6 first-order exactness", c6_asymptotics),
        ("C7 layer integrals", c7_layer_integrals),
        ("C8 solver oracles", c8_solver),
        ("C9 geometry", c9_geometry),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.starts_with(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let tag = if out.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {name}: {} ({:.1} s)", out.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!out.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
