use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Point;

/// Cell-centered structured grid on an axis-aligned box.
///
/// One-dimensional grids carry a single dummy cell along the second axis so
/// that every kernel can index cells as `i + nx * j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: [usize; 2],
    lo: [f64; 2],
    hi: [f64; 2],
    h: [f64; 2],
}

impl Grid {
    pub fn new_1d(n: usize, a: f64, b: f64) -> Result<Self> {
        Self::check_axis(n, a, b)?;
        Ok(Grid {
            dim: 1,
            n: [n, 1],
            lo: [a, 0.0],
            hi: [b, 0.0],
            h: [(b - a) / n as f64, 1.0],
        })
    }

    pub fn new_2d(n: [usize; 2], x: [f64; 2], y: [f64; 2]) -> Result<Self> {
        Self::check_axis(n[0], x[0], x[1])?;
        Self::check_axis(n[1], y[0], y[1])?;
        Ok(Grid {
            dim: 2,
            n,
            lo: [x[0], y[0]],
            hi: [x[1], y[1]],
            h: [(x[1] - x[0]) / n[0] as f64, (y[1] - y[0]) / n[1] as f64],
        })
    }

    /// Grid on `bounds` with `cells[k]` cells along axis `k`; the dimension is
    /// `bounds.len()`.
    pub fn from_bounds(cells: &[usize], bounds: &[[f64; 2]]) -> Result<Self> {
        match (cells, bounds) {
            ([n], [b]) => Self::new_1d(*n, b[0], b[1]),
            ([nx, ny], [bx, by]) => Self::new_2d([*nx, *ny], *bx, *by),
            ([n], [bx, by]) => Self::new_2d([*n, *n], *bx, *by),
            _ => Err(Error::InvalidGrid(format!(
                "{} cell counts for a {}-dimensional box",
                cells.len(),
                bounds.len()
            ))),
        }
    }

    fn check_axis(n: usize, a: f64, b: f64) -> Result<()> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 cells per axis, got {n}")));
        }
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidGrid(format!("empty interval [{a}, {b}]")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nx(&self) -> usize {
        self.n[0]
    }

    pub fn ny(&self) -> usize {
        self.n[1]
    }

    /// Cells per axis, truncated to the grid dimension.
    pub fn cells_per_axis(&self) -> &[usize] {
        &self.n[..self.dim]
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn h(&self, axis: usize) -> f64 {
        self.h[axis]
    }

    /// Largest cell size over the active axes.
    pub fn h_max(&self) -> f64 {
        self.h[..self.dim].iter().copied().fold(0.0, f64::max)
    }

    pub fn lo(&self) -> [f64; 2] {
        self.lo
    }

    pub fn hi(&self) -> [f64; 2] {
        self.hi
    }

    /// Volume (length in 1D, area in 2D) of one cell.
    pub fn cell_measure(&self) -> f64 {
        self.h[..self.dim].iter().product()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.n[0] * j
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize) -> Point {
        let y = if self.dim == 2 {
            self.lo[1] + (j as f64 + 0.5) * self.h[1]
        } else {
            0.0
        };
        [self.lo[0] + (i as f64 + 0.5) * self.h[0], y]
    }

    /// Center of the cell with flat index `k`.
    #[inline]
    pub fn center_of(&self, k: usize) -> Point {
        self.center(k % self.n[0], k / self.n[0])
    }

    /// Grid with half as many cells per active axis, or `None` when an axis is
    /// odd or would drop below `min_cells`.
    pub fn coarsen(&self, min_cells: usize) -> Option<Grid> {
        let mut n = self.n;
        for axis in 0..self.dim {
            if n[axis] % 2 != 0 || n[axis] / 2 < min_cells {
                return None;
            }
            n[axis] /= 2;
        }
        let mut g = *self;
        g.n = n;
        for axis in 0..self.dim {
            g.h[axis] = (self.hi[axis] - self.lo[axis]) / n[axis] as f64;
        }
        Some(g)
    }

    /// Iterator over all cell centers in storage order.
    pub fn centers(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(move |k| self.center_of(k))
    }
}

/// Cell-centered scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField {
    grid: Grid,
    values: Vec<f64>,
}

impl DiscreteField {
    pub fn zeros(grid: Grid) -> Self {
        DiscreteField {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, v: f64) -> Self {
        DiscreteField {
            grid,
            values: vec![v; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "field has {} values for {} cells",
                values.len(),
                grid.len()
            )));
        }
        Ok(DiscreteField { grid, values })
    }

    /// Samples `f` at every cell center.
    pub fn from_fn(grid: Grid, f: impl FnMut(Point) -> f64) -> Self {
        let values = grid.centers().map(f).collect();
        DiscreteField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn fill(&mut self, v: f64) {
        self.values.iter_mut().for_each(|x| *x = v);
    }

    /// Cell-measure-weighted inner product.
    pub fn dot(&self, other: &DiscreteField) -> f64 {
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum();
        s * self.grid.cell_measure()
    }

    /// Discrete L² norm, `sqrt(Σ v² h^d)`.
    pub fn l2_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Piecewise-cubic interpolation through cell centers along the first
    /// axis of a 1D field. Points outside the center range use the end stencil.
    pub fn interpolate_1d(&self, x: f64) -> f64 {
        let g = &self.grid;
        let n = g.nx();
        let h = g.h(0);
        let s = (x - g.lo()[0]) / h - 0.5;
        if n < 4 {
            let i = (s.floor().max(0.0) as usize).min(n - 2);
            let t = s - i as f64;
            return self.values[i] * (1.0 - t) + self.values[i + 1] * t;
        }
        let base = (s.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        lagrange4(&self.values[base..base + 4], s - base as f64)
    }
}

/// Lagrange interpolation through samples at abscissae 0,1,2,3 evaluated at `t`.
pub(crate) fn lagrange4(v: &[f64], t: f64) -> f64 {
    let (t0, t1, t2, t3) = (t, t - 1.0, t - 2.0, t - 3.0);
    -v[0] * t1 * t2 * t3 / 6.0 + v[1] * t0 * t2 * t3 / 2.0 - v[2] * t0 * t1 * t3 / 2.0
        + v[3] * t0 * t1 * t2 / 6.0
}
