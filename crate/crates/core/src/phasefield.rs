//! Tanh phase field and the diffuse coefficients built from it.

use rayon::prelude::*;

use crate::discretization::DiscreteField;
use crate::error::{Error, Result};
use crate::geometry::DistanceField;
use crate::model::ProblemSpec;

/// Beyond this many widths the profile is taken as exactly 0 or 1.
const SATURATION: f64 = 350.0;

/// Interface width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseFieldParams {
    epsilon: f64,
}

impl PhaseFieldParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidProblem(format!(
                "interface width must lie in (0, 1), got {epsilon}"
            )));
        }
        Ok(PhaseFieldParams { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// `½(1 + tanh(r/ε))`.
#[inline]
pub fn phi(r: f64, eps: f64) -> f64 {
    let s = r / eps;
    if s > SATURATION {
        1.0
    } else if s < -SATURATION {
        0.0
    } else {
        0.5 * (1.0 + s.tanh())
    }
}

/// `|∇φ|` for an Eikonal distance, `(2/ε) φ (1 − φ)`.
#[inline]
pub fn surface_delta(r: f64, eps: f64) -> f64 {
    let s = r / eps;
    if s.abs() > SATURATION {
        return 0.0;
    }
    // sech² form keeps full relative accuracy in the tails, where φ(1−φ)
    // would cancel.
    let c = s.cosh();
    0.5 / (eps * c * c)
}

/// Region-blended coefficient `outer + (inner − outer) φ`.
#[inline]
pub fn blend(outer: f64, inner: f64, phi: f64) -> f64 {
    outer + (inner - outer) * phi
}

/// Diffuse coefficient fields at every cell center: diffusivity `d`,
/// reaction `c`, source `f`, and interface weight `w`.
#[derive(Debug, Clone)]
pub struct DiffuseCoefficients {
    pub d: DiscreteField,
    pub c: DiscreteField,
    pub f: DiscreteField,
    pub w: DiscreteField,
}

pub fn diffuse_coefficients(r: &DistanceField, spec: &ProblemSpec, eps: f64) -> DiffuseCoefficients {
    let grid = *r.grid();
    let cells: Vec<[f64; 4]> = r
        .values()
        .par_iter()
        .enumerate()
        .map(|(k, &rk)| {
            let p = grid.center_of(k);
            let ph = phi(rk, eps);
            [
                blend(spec.alpha, 1.0, ph),
                blend(spec.beta, spec.gamma, ph),
                blend(spec.h.eval(p), spec.q.eval(p), ph),
                surface_delta(rk, eps),
            ]
        })
        .collect();
    let column = |m: usize| {
        DiscreteField::from_values(grid, cells.iter().map(|c| c[m]).collect())
            .expect("length matches grid")
    };
    DiffuseCoefficients {
        d: column(0),
        c: column(1),
        f: column(2),
        w: column(3),
    }
}
