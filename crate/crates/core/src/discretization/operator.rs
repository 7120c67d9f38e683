use rayon::prelude::*;

use super::grid::{DiscreteField, Grid};
use crate::error::{Error, Result};
use crate::geometry::{signed_distance, DistanceField};
use crate::model::ProblemSpec;
use crate::phasefield::{blend, phi, surface_delta};

/// Cells per parallel work item.
pub(crate) const CHUNK: usize = 4096;

/// Matrix-free cell-centered operator `−∇·(D∇u) + (c + κw) u` with zero flux
/// through the outer boundary.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    grid: Grid,
    kappa: f64,
    /// `D/h_x²` on the face between cells `k` and `k+1`; zero on boundary faces.
    ax: Vec<f64>,
    /// `D/h_y²` on the face between cells `k` and `k+nx`; zero on boundary faces.
    ay: Vec<f64>,
    c: Vec<f64>,
    w: Vec<f64>,
    diag: Vec<f64>,
}

impl DiscreteOperator {
    /// Assembles from face diffusivities and cell coefficients.
    ///
    /// `face_d[0][k]` is D on the face right of cell `k`, `face_d[1][k]` the
    /// one above it; entries on the outer boundary are ignored.
    pub fn from_parts(grid: Grid, face_d: [Vec<f64>; 2], c: Vec<f64>, w: Vec<f64>, kappa: f64) -> Result<Self> {
        let n = grid.len();
        if face_d[0].len() != n || (grid.dim() == 2 && face_d[1].len() != n) || c.len() != n || w.len() != n {
            return Err(Error::InvalidGrid("coefficient arrays do not match the grid".into()));
        }
        let (nx, ny) = (grid.nx(), grid.ny());
        let hx2 = grid.h(0) * grid.h(0);
        let mut ax = vec![0.0; n];
        let mut ay = vec![0.0; n];
        for j in 0..ny {
            for i in 0..nx {
                let k = grid.index(i, j);
                if i + 1 < nx {
                    ax[k] = face_d[0][k] / hx2;
                }
                if grid.dim() == 2 && j + 1 < ny {
                    ay[k] = face_d[1][k] / (grid.h(1) * grid.h(1));
                }
            }
        }
        if ax.iter().chain(&ay).any(|&a| !(a >= 0.0 && a.is_finite())) {
            return Err(Error::InvalidProblem("face diffusivity must be finite and nonnegative".into()));
        }
        let mut diag = vec![0.0; n];
        for j in 0..ny {
            for i in 0..nx {
                let k = grid.index(i, j);
                let mut s = ax[k] + ay[k] + c[k] + kappa * w[k];
                if i > 0 {
                    s += ax[k - 1];
                }
                if j > 0 {
                    s += ay[k - nx];
                }
                diag[k] = s;
            }
        }
        Ok(DiscreteOperator {
            grid,
            kappa,
            ax,
            ay,
            c,
            w,
            diag,
        })
    }

    /// Replaces the cell coefficients `c` and `w`, keeping the faces.
    pub(crate) fn with_reaction(mut self, c: Vec<f64>, w: Vec<f64>) -> Self {
        for k in 0..self.diag.len() {
            self.diag[k] += (c[k] - self.c[k]) + self.kappa * (w[k] - self.w[k]);
        }
        self.c = c;
        self.w = w;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn reaction(&self) -> &[f64] {
        &self.c
    }

    pub fn interface_weight(&self) -> &[f64] {
        &self.w
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Diffusivity on the face between cell `(i, j)` and its `axis` successor.
    pub fn face_diffusivity(&self, axis: usize, i: usize, j: usize) -> f64 {
        let k = self.grid.index(i, j);
        let h = self.grid.h(axis);
        if axis == 0 {
            self.ax[k] * h * h
        } else {
            self.ay[k] * h * h
        }
    }

    /// Off-diagonal-weighted neighbor sum `Σ a_f u_nbr` at cell `(i, j)`.
    #[inline(always)]
    fn neighbor_sum_with(&self, u: impl Fn(usize) -> f64, i: usize, j: usize, k: usize) -> f64 {
        let nx = self.grid.nx();
        let mut s = 0.0;
        if i + 1 < nx {
            s += self.ax[k] * u(k + 1);
        }
        if i > 0 {
            s += self.ax[k - 1] * u(k - 1);
        }
        if j + 1 < self.grid.ny() {
            s += self.ay[k] * u(k + nx);
        }
        if j > 0 {
            s += self.ay[k - nx] * u(k - nx);
        }
        s
    }

    /// `(A u)_k` in flux form `Σ a_f (u_k − u_nbr) + (c + κw) u_k`, which
    /// avoids cancelling the large `D/h²` terms against each other.
    #[inline(always)]
    fn apply_at(&self, u: &[f64], k: usize, nx: usize, ny: usize) -> f64 {
        let (i, j) = (k % nx, k / nx);
        let uk = u[k];
        let mut s = (self.c[k] + self.kappa * self.w[k]) * uk;
        if i + 1 < nx {
            s += self.ax[k] * (uk - u[k + 1]);
        }
        if i > 0 {
            s += self.ax[k - 1] * (uk - u[k - 1]);
        }
        if j + 1 < ny {
            s += self.ay[k] * (uk - u[k + nx]);
        }
        if j > 0 {
            s += self.ay[k - nx] * (uk - u[k - nx]);
        }
        s
    }

    /// `out = A u`.
    pub fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(b, chunk)| {
            let base = b * CHUNK;
            for (o, slot) in chunk.iter_mut().enumerate() {
                *slot = self.apply_at(u, base + o, nx, ny);
            }
        });
    }

    /// `out = rhs − A u`.
    pub fn residual_into(&self, u: &[f64], rhs: &[f64], out: &mut [f64]) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(b, chunk)| {
            let base = b * CHUNK;
            for (o, slot) in chunk.iter_mut().enumerate() {
                let k = base + o;
                *slot = rhs[k] - self.apply_at(u, k, nx, ny);
            }
        });
    }

    /// Per-cell magnitude of the terms summed by `rhs − A u`; the floating
    /// point rounding floor of the residual scales with it.
    pub fn residual_scale_into(&self, u: &[f64], rhs: &[f64], out: &mut [f64]) {
        let nx = self.grid.nx();
        let ny = self.grid.ny();
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(b, chunk)| {
            let base = b * CHUNK;
            for (o, slot) in chunk.iter_mut().enumerate() {
                let k = base + o;
                let (i, j) = (k % nx, k / nx);
                let uk = u[k];
                // Storing u_k itself is exact only to about ε|u_k|, so the
                // large face weights multiply |u_k| and not just the difference.
                let mut s = rhs[k].abs() + ((self.c[k] + self.kappa * self.w[k]) * uk).abs();
                if i + 1 < nx {
                    s += self.ax[k] * ((uk - u[k + 1]).abs() + uk.abs());
                }
                if i > 0 {
                    s += self.ax[k - 1] * ((uk - u[k - 1]).abs() + uk.abs());
                }
                if j + 1 < ny {
                    s += self.ay[k] * ((uk - u[k + nx]).abs() + uk.abs());
                }
                if j > 0 {
                    s += self.ay[k - nx] * ((uk - u[k - nx]).abs() + uk.abs());
                }
                *slot = s;
            }
        });
    }

    /// One red–black Gauss–Seidel sweep; red (even `i + j`) goes first.
    pub fn gauss_seidel_sweep(&self, u: &mut [f64], rhs: &[f64]) {
        for color in 0..2 {
            self.gauss_seidel_color(u, rhs, color);
        }
    }

    fn gauss_seidel_color(&self, u: &mut [f64], rhs: &[f64], color: usize) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let shared = SharedSlice::new(u);
        let update_row_range = |j: usize, i0: usize, i1: usize| {
            let mut i = i0 + (color + i0 + j) % 2;
            while i < i1 {
                let k = j * nx + i;
                // SAFETY: cell k has the active color; neighbor_sum reads only
                // cells of the other color, which no task writes during this
                // half-sweep, and each cell of the active color belongs to
                // exactly one task.
                unsafe {
                    let v = (rhs[k] + self.neighbor_sum_with(|m| shared.read(m), i, j, k)) / self.diag[k];
                    shared.write(k, v);
                }
                i += 2;
            }
        };
        if ny == 1 {
            (0..nx.div_ceil(CHUNK)).into_par_iter().for_each(|b| {
                update_row_range(0, b * CHUNK, ((b + 1) * CHUNK).min(nx));
            });
        } else {
            let rows_per_task = (CHUNK / nx).max(1);
            (0..ny.div_ceil(rows_per_task)).into_par_iter().for_each(|b| {
                for j in b * rows_per_task..((b + 1) * rows_per_task).min(ny) {
                    update_row_range(j, 0, nx);
                }
            });
        }
    }

    /// Dense matrix, row-major. Intended for oracles on small grids.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.grid.len();
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        let mut m = vec![vec![0.0; n]; n];
        for c in 0..n {
            e[c] = 1.0;
            self.apply_into(&e, &mut col);
            for r in 0..n {
                m[r][c] = col[r];
            }
            e[c] = 0.0;
        }
        m
    }
}

/// Raw view of a slice for colored in-place updates.
struct SharedSlice {
    ptr: *mut f64,
    len: usize,
}

// SAFETY: access is coordinated by the red–black coloring; see the call site.
unsafe impl Sync for SharedSlice {}
unsafe impl Send for SharedSlice {}

impl SharedSlice {
    fn new(s: &mut [f64]) -> Self {
        SharedSlice {
            ptr: s.as_mut_ptr(),
            len: s.len(),
        }
    }

    unsafe fn read(&self, k: usize) -> f64 {
        debug_assert!(k < self.len);
        *self.ptr.add(k)
    }

    unsafe fn write(&self, k: usize, v: f64) {
        debug_assert!(k < self.len);
        *self.ptr.add(k) = v;
    }
}

/// Builds the diffuse domain operator on `grid`, computing the signed
/// distance from the problem geometry.
pub fn build_operator(spec: &ProblemSpec, grid: &Grid, eps: f64) -> Result<DiscreteOperator> {
    let r = signed_distance(&spec.geometry, grid)?;
    build_operator_from_distance(spec, &r, eps)
}

/// Builds the operator from a precomputed signed distance. Face diffusivity
/// is evaluated at the mean of the two adjacent cell distances.
pub fn build_operator_from_distance(spec: &ProblemSpec, r: &DistanceField, eps: f64) -> Result<DiscreteOperator> {
    if !(eps > 0.0) {
        return Err(Error::InvalidProblem(format!("interface width must be positive, got {eps}")));
    }
    let grid = *r.grid();
    let rv = r.values();
    let n = grid.len();
    let nx = grid.nx();
    let face = |k: usize, m: usize| blend(spec.alpha, 1.0, phi(0.5 * (rv[k] + rv[m]), eps));
    let fx: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| if k % nx + 1 < nx { face(k, k + 1) } else { 0.0 })
        .collect();
    let fy: Vec<f64> = if grid.dim() == 2 {
        (0..n)
            .into_par_iter()
            .map(|k| if k + nx < n { face(k, k + nx) } else { 0.0 })
            .collect()
    } else {
        Vec::new()
    };
    let c = rv.par_iter().map(|&rk| blend(spec.beta, spec.gamma, phi(rk, eps))).collect();
    let w = rv.par_iter().map(|&rk| surface_delta(rk, eps)).collect();
    DiscreteOperator::from_parts(grid, [fx, fy], c, w, spec.kappa)
}

/// Right-hand side `f − g w` on `grid`.
pub fn build_rhs(spec: &ProblemSpec, grid: &Grid, eps: f64) -> Result<DiscreteField> {
    let r = signed_distance(&spec.geometry, grid)?;
    Ok(build_rhs_from_distance(spec, &r, eps))
}

pub fn build_rhs_from_distance(spec: &ProblemSpec, r: &DistanceField, eps: f64) -> DiscreteField {
    let grid = *r.grid();
    let values = r
        .values()
        .par_iter()
        .enumerate()
        .map(|(k, &rk)| {
            let p = grid.center_of(k);
            blend(spec.h.eval(p), spec.q.eval(p), phi(rk, eps)) - spec.g.eval(p) * surface_delta(rk, eps)
        })
        .collect();
    DiscreteField::from_values(grid, values).expect("length matches grid")
}

pub fn apply(op: &DiscreteOperator, u: &DiscreteField) -> DiscreteField {
    let mut out = DiscreteField::zeros(*op.grid());
    op.apply_into(u.values(), out.values_mut());
    out
}

pub fn residual(op: &DiscreteOperator, u: &DiscreteField, rhs: &DiscreteField) -> DiscreteField {
    let mut out = DiscreteField::zeros(*op.grid());
    op.residual_into(u.values(), rhs.values(), out.values_mut());
    out
}

/// Cell-measure-weighted l2 norm and max norm of `rhs − A u`.
pub fn residual_norms(op: &DiscreteOperator, u: &DiscreteField, rhs: &DiscreteField) -> (f64, f64) {
    let r = residual(op, u, rhs);
    (weighted_l2(r.values(), op.grid().cell_measure()), r.max_abs())
}

/// `sqrt(m Σ v²)` with a fixed summation order.
pub(crate) fn weighted_l2(v: &[f64], measure: f64) -> f64 {
    let partial: Vec<f64> = v
        .par_chunks(CHUNK)
        .map(|c| c.iter().map(|x| x * x).sum::<f64>())
        .collect();
    (partial.iter().sum::<f64>() * measure).sqrt()
}
