//! Sharp-interface 1D reference solutions and the first-order correction
//! predicted by matched asymptotics.

pub mod layer;

pub use layer::{
    i0_left_offset, i0_right_offset, i1_left_limit, i1_right_offset, layer_d, layer_integrals, layer_phi,
    log_alpha_exp, phi_over_d_identity,
};

use crate::discretization::lagrange4;
use crate::error::{Error, Result};
use crate::geometry::InterfaceGeometry;
use crate::model::ProblemSpec;

/// `|α − 1|` below which the unit-contrast formulas apply.
pub const UNIT_CONTRAST_TOL: f64 = 1e-8;

/// Interface systems worse conditioned than this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Two-sided function on vertex grids `[a, x0]` and `[x0, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Piecewise1d {
    x0: f64,
    a: f64,
    b: f64,
    /// Nodal values from `a` to `x0`.
    pub left: Vec<f64>,
    /// Nodal values from `x0` to `b`.
    pub right: Vec<f64>,
    /// One-sided derivative at the interface from the left.
    pub d_left: f64,
    /// One-sided derivative at the interface from the right.
    pub d_right: f64,
}

impl Piecewise1d {
    pub fn intervals(&self) -> usize {
        self.left.len() - 1
    }

    pub fn interface(&self) -> f64 {
        self.x0
    }

    pub fn value_left(&self) -> f64 {
        *self.left.last().unwrap()
    }

    pub fn value_right(&self) -> f64 {
        self.right[0]
    }

    pub fn left_nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let h = (self.x0 - self.a) / self.intervals() as f64;
        (0..self.left.len()).map(move |i| self.a + i as f64 * h)
    }

    pub fn right_nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let h = (self.b - self.x0) / self.intervals() as f64;
        (0..self.right.len()).map(move |i| self.x0 + i as f64 * h)
    }

    /// Cubic interpolation on the side containing `x`; `x ≥ x0` is the right.
    pub fn eval(&self, x: f64) -> f64 {
        let (vals, lo, hi) = if x >= self.x0 {
            (&self.right, self.x0, self.b)
        } else {
            (&self.left, self.a, self.x0)
        };
        let n = vals.len() - 1;
        let s = (x - lo) / (hi - lo) * n as f64;
        let base = (s.floor() as isize - 1).clamp(0, n as isize - 3) as usize;
        lagrange4(&vals[base..base + 4], s - base as f64)
    }
}

/// Sharp-interface solution pair `(u_L, u_R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SharpSolution {
    pub u: Piecewise1d,
}

impl SharpSolution {
    pub fn interface_value(&self) -> f64 {
        self.u.value_right()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.u.eval(x)
    }
}

/// Which interface conditions the correction satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContrastCase {
    /// `α ≠ 1`: value jump and a κ-weighted flux condition.
    General,
    /// `α = 1`: continuous value, flux driven by the zeroth-order kink.
    Unit,
}

impl ContrastCase {
    pub fn of(alpha: f64) -> Self {
        if (alpha - 1.0).abs() <= UNIT_CONTRAST_TOL {
            ContrastCase::Unit
        } else {
            ContrastCase::General
        }
    }
}

/// First-order outer correction `(u_{L,1}, u_{R,1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionSolution {
    pub u: Piecewise1d,
    pub case: ContrastCase,
}

impl CorrectionSolution {
    pub fn eval(&self, x: f64) -> f64 {
        self.u.eval(x)
    }

    /// A correction that vanishes identically on the grids of `sharp`.
    pub fn zero_like(sharp: &SharpSolution, alpha: f64) -> Self {
        let mut u = sharp.u.clone();
        u.left.iter_mut().chain(u.right.iter_mut()).for_each(|v| *v = 0.0);
        u.d_left = 0.0;
        u.d_right = 0.0;
        CorrectionSolution {
            u,
            case: ContrastCase::of(alpha),
        }
    }
}

/// Integration constants of the inner expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchingConstants {
    pub c00: f64,
    pub c11: f64,
    /// Needs the correction; see [`MatchingConstants::fill_c10`].
    pub c10: Option<f64>,
    /// Diagnostic only, recovered from the O(ε²) right-side matching.
    pub c21: Option<f64>,
}

impl MatchingConstants {
    /// `C10` from the correction's interface values, dispatching on α.
    pub fn fill_c10(&mut self, corr: &CorrectionSolution, alpha: f64, kappa: f64, lambda: f64) -> Result<f64> {
        let case = ContrastCase::of(alpha);
        if case != corr.case {
            return Err(Error::CaseMismatch(format!(
                "correction was computed for {:?} contrast but alpha = {alpha}",
                corr.case
            )));
        }
        let c10 = match case {
            ContrastCase::General => c10_general(corr, alpha)?,
            ContrastCase::Unit => c10_unit(corr, self.c00, kappa, lambda),
        };
        self.c10 = Some(c10);
        Ok(c10)
    }

    /// Fills `C21` from the right-side O(ε²) matching relation. Only defined
    /// for `α ≠ 1`; requires `C10`.
    pub fn fill_c21(&mut self, corr: &CorrectionSolution, spec: &ProblemSpec) -> Result<f64> {
        let alpha = spec.alpha;
        if ContrastCase::of(alpha) == ContrastCase::Unit {
            return Err(Error::CaseMismatch("C21 diagnostic needs alpha != 1".into()));
        }
        let c10 = self
            .c10
            .ok_or_else(|| Error::Internal("C10 must be filled before C21".into()))?;
        let lambda = interface_lambda(spec)?;
        let (k, c00, c11) = (spec.kappa, self.c00, self.c11);
        let x0 = interface_point(spec)?;
        let (q0, h0) = (spec.q.eval([x0, 0.0]), spec.h.eval([x0, 0.0]));
        let a = (k * k * c00 + k * lambda) / (alpha - 1.0);
        let c21 = corr.u.d_right - (a + k * c11 / alpha) * (alpha + 1.0).ln() / 2.0 - k * c10 / 2.0
            + (c00 * (spec.gamma - spec.beta) + h0 - q0 + a) * std::f64::consts::LN_2 / 2.0;
        self.c21 = Some(c21);
        Ok(c21)
    }
}

/// `C10` for `α ≠ 1`.
pub fn c10_general(corr: &CorrectionSolution, alpha: f64) -> Result<f64> {
    if ContrastCase::of(alpha) == ContrastCase::Unit {
        return Err(Error::CaseMismatch(format!(
            "alpha = {alpha} needs the unit-contrast formula"
        )));
    }
    let (ul, ur) = (corr.u.value_left(), corr.u.value_right());
    Ok(ur + (ul - ur) * (alpha + 1.0).ln() / alpha.ln())
}

/// `C10` for `α = 1`.
pub fn c10_unit(corr: &CorrectionSolution, c00: f64, kappa: f64, lambda: f64) -> f64 {
    corr.u.value_right() + (kappa * c00 + lambda) * std::f64::consts::LN_2 / 2.0
}

/// `C00` and `C11` from the zeroth-order traces.
pub fn matching_constants(sharp: &SharpSolution, alpha: f64) -> MatchingConstants {
    MatchingConstants {
        c00: sharp.interface_value(),
        c11: alpha * sharp.u.d_left,
        c10: None,
        c21: None,
    }
}

fn interface_point(spec: &ProblemSpec) -> Result<f64> {
    match (&spec.geometry, spec.dim()) {
        (InterfaceGeometry::Point1d { x0 }, 1) => Ok(*x0),
        _ => Err(Error::InvalidProblem("the sharp reference solver is 1D only".into())),
    }
}

fn interface_lambda(spec: &ProblemSpec) -> Result<f64> {
    spec.lambda()
        .ok_or_else(|| Error::InvalidProblem("the sharp reference needs a constant interface source".into()))
}

/// Solves `tri(sub, diag, sup) x = rhs` in place (Thomas algorithm).
fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    c[0] = sup[0] / beta;
    rhs[0] /= beta;
    for i in 1..n {
        beta = diag[i] - sub[i] * c[i - 1];
        if i + 1 < n {
            c[i] = sup[i] / beta;
        }
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

/// `−D u'' + c u = f` on a uniform vertex grid of `n` intervals with zero flux
/// at the outer end and `u = dirichlet` at the interface end.
///
/// `outer_first` puts the outer end at node 0 (the left subdomain).
fn side_solve(
    n: usize,
    h: f64,
    d: f64,
    c: f64,
    f: impl Fn(usize) -> f64,
    dirichlet: f64,
    outer_first: bool,
) -> Vec<f64> {
    // Unknowns exclude the interface node; index 0 is the outer end.
    let m = n;
    let a = d / (h * h);
    let sub = vec![-a; m];
    let diag = vec![2.0 * a + c; m];
    let mut sup = vec![-a; m];
    // Ghost reflection at the outer end doubles the inward coupling.
    sup[0] = -2.0 * a;
    let node = |k: usize| if outer_first { k } else { n - k };
    let mut rhs: Vec<f64> = (0..m).map(|k| f(node(k))).collect();
    rhs[m - 1] += a * dirichlet;
    let mut sub = sub;
    sub[0] = 0.0;
    thomas(&sub, &diag, &sup, &mut rhs);
    let mut out = rhs;
    out.push(dirichlet);
    if !outer_first {
        out.reverse();
    }
    out
}

/// One side of a two-domain problem after superposition: `u = p + t v`.
struct SideBasis {
    p: Vec<f64>,
    v: Vec<f64>,
    dp: f64,
    dv: f64,
}

impl SideBasis {
    fn combine(&self, t: f64) -> (Vec<f64>, f64) {
        let u = self.p.iter().zip(&self.v).map(|(p, v)| p + t * v).collect();
        (u, self.dp + t * self.dv)
    }
}

/// Second-order one-sided derivative at the interface node.
fn interface_derivative(u: &[f64], h: f64, right_side: bool) -> f64 {
    if right_side {
        (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h)
    } else {
        let n = u.len() - 1;
        (3.0 * u[n] - 4.0 * u[n - 1] + u[n - 2]) / (2.0 * h)
    }
}

/// Interface conditions `a_R t_R + a_L t_L = v` and
/// `u_R' − σ u_L' + p_R t_R + p_L t_L = f` on the traces `t`.
struct InterfaceRows {
    a_r: f64,
    a_l: f64,
    v: f64,
    sigma: f64,
    p_r: f64,
    p_l: f64,
    f: f64,
}

/// Condition number of a 2×2 matrix after normalizing its rows.
fn condition_2x2(m: [[f64; 2]; 2]) -> f64 {
    let rows: Vec<[f64; 2]> = m
        .iter()
        .map(|r| {
            let s = r[0].hypot(r[1]);
            if s > 0.0 {
                [r[0] / s, r[1] / s]
            } else {
                *r
            }
        })
        .collect();
    let (a, b, c, d) = (rows[0][0], rows[0][1], rows[1][0], rows[1][1]);
    let fro2 = a * a + b * b + c * c + d * d;
    let det = (a * d - b * c).abs();
    if det == 0.0 {
        return f64::INFINITY;
    }
    // σ_max/σ_min from the trace and determinant of MᵀM.
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
    ((fro2 + disc) / (fro2 - disc).max(f64::MIN_POSITIVE)).sqrt()
}

fn solve_two_domain(
    spec: &ProblemSpec,
    n: usize,
    sources: bool,
    rows: InterfaceRows,
) -> Result<Piecewise1d> {
    let x0 = interface_point(spec)?;
    let [a, b] = spec.domain[0];
    let hl = (x0 - a) / n as f64;
    let hr = (b - x0) / n as f64;
    let (q, h) = (&spec.q, &spec.h);
    let fl = |k: usize| if sources { h.eval([a + k as f64 * hl, 0.0]) } else { 0.0 };
    let fr = |k: usize| if sources { q.eval([x0 + k as f64 * hr, 0.0]) } else { 0.0 };
    let zero = |_: usize| 0.0;

    let build = |d: f64, c: f64, hs: f64, f: &dyn Fn(usize) -> f64, left: bool| {
        let p = side_solve(n, hs, d, c, f, 0.0, left);
        let v = side_solve(n, hs, d, c, zero, 1.0, left);
        SideBasis {
            dp: interface_derivative(&p, hs, !left),
            dv: interface_derivative(&v, hs, !left),
            p,
            v,
        }
    };
    let left = build(spec.alpha, spec.beta, hl, &fl, true);
    let right = build(1.0, spec.gamma, hr, &fr, false);

    let m = [
        [rows.a_r, rows.a_l],
        [right.dv + rows.p_r, -rows.sigma * left.dv + rows.p_l],
    ];
    let rhs = [rows.v, rows.f - right.dp + rows.sigma * left.dp];
    let cond = condition_2x2(m);
    if !(cond <= MAX_CONDITION) {
        return Err(Error::NearSingular { condition: cond });
    }
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let t_r = (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det;
    let t_l = (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det;

    let (ul, d_left) = left.combine(t_l);
    let (ur, d_right) = right.combine(t_r);
    Ok(Piecewise1d {
        x0,
        a,
        b,
        left: ul,
        right: ur,
        d_left,
        d_right,
    })
}

/// Solves the sharp two-sided problem with `n` intervals per subdomain.
pub fn sharp_solve_1d(spec: &ProblemSpec, n: usize) -> Result<SharpSolution> {
    if n < 16 {
        return Err(Error::InvalidGrid(format!("need at least 16 intervals per side, got {n}")));
    }
    spec.validate()?;
    let lambda = interface_lambda(spec)?;
    let rows = InterfaceRows {
        a_r: 1.0,
        a_l: -1.0,
        v: 0.0,
        sigma: spec.alpha,
        p_r: -spec.kappa,
        p_l: 0.0,
        f: lambda,
    };
    Ok(SharpSolution {
        u: solve_two_domain(spec, n, true, rows)?,
    })
}

/// Solves for the first-order correction on the grids of `sharp`.
pub fn first_order_correction_1d(spec: &ProblemSpec, sharp: &SharpSolution) -> Result<CorrectionSolution> {
    let (alpha, kappa) = (spec.alpha, spec.kappa);
    let kink = sharp.u.d_right - sharp.u.d_left;
    let case = ContrastCase::of(alpha);
    let rows = match case {
        ContrastCase::General => InterfaceRows {
            a_r: -1.0,
            a_l: 1.0,
            v: 0.5 * alpha.ln() * kink,
            sigma: alpha,
            p_r: -kappa / (1.0 - alpha),
            p_l: kappa * alpha / (1.0 - alpha),
            f: 0.0,
        },
        ContrastCase::Unit => InterfaceRows {
            a_r: 1.0,
            a_l: -1.0,
            v: 0.0,
            sigma: 1.0,
            p_r: -kappa,
            p_l: 0.0,
            f: 0.5 * kappa * kink,
        },
    };
    Ok(CorrectionSolution {
        u: solve_two_domain(spec, sharp.u.intervals(), false, rows)?,
        case,
    })
}

/// Outer expansion `u₀(x) + ε u₁(x)`.
pub fn expansion_eval(sharp: &SharpSolution, correction: &CorrectionSolution, eps: f64, x: f64) -> f64 {
    sharp.eval(x) + eps * correction.eval(x)
}
