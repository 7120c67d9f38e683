//! Geometric multigrid V-cycle for the diffuse domain system.
//!
//! Coarse face diffusivities are re-evaluated from the cell-averaged signed
//! distance; coarse reaction and interface weights are cell averages of
//! the next finer level.

use std::time::Instant;

use rayon::prelude::*;

use crate::discretization::{build_operator_from_distance, build_rhs_from_distance, DiscreteField, DiscreteOperator, Grid};
use crate::error::{Error, Result};
use crate::geometry::{signed_distance, DistanceField};
use crate::model::ProblemSpec;

/// Solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgConfig {
    pub pre_sweeps: usize,
    pub post_sweeps: usize,
    pub coarse_sweeps: usize,
    /// Relative l2 residual target.
    pub tol: f64,
    pub max_cycles: usize,
    /// Smallest cell count per axis on the coarsest level.
    pub min_coarse_cells: usize,
    /// Maximum number of levels; `None` coarsens as far as possible.
    pub levels: Option<usize>,
    /// Stop once the residual stagnates within this multiple of its floating
    /// point rounding floor. Zero disables the check.
    pub rounding_guard: f64,
}

impl Default for MgConfig {
    fn default() -> Self {
        MgConfig {
            pre_sweeps: 2,
            post_sweeps: 2,
            coarse_sweeps: 50,
            tol: 1e-10,
            max_cycles: 200,
            min_coarse_cells: 4,
            levels: None,
            rounding_guard: 64.0,
        }
    }
}

impl MgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Configuration(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.levels == Some(0) {
            return Err(Error::Configuration("need at least one level".into()));
        }
        if self.min_coarse_cells < 2 {
            return Err(Error::Configuration("coarsest grid needs at least 2 cells per axis".into()));
        }
        Ok(())
    }
}

/// A cycle that reduces the residual by less than this counts as stagnant.
const STAGNATION_RATIO: f64 = 0.9;

struct Level {
    op: DiscreteOperator,
    u: Vec<f64>,
    rhs: Vec<f64>,
    res: Vec<f64>,
}

/// Operators from finest (index 0) to coarsest, with per-level scratch.
pub struct MgHierarchy {
    levels: Vec<Level>,
    pre: usize,
    post: usize,
    coarse: usize,
}

/// Cell average of the 2 (1D) or 4 (2D) children of each coarse cell.
pub fn restrict(fine: &DiscreteField, coarse_grid: &Grid) -> DiscreteField {
    let mut out = DiscreteField::zeros(*coarse_grid);
    restrict_into(fine.grid(), fine.values(), coarse_grid, out.values_mut());
    out
}

/// Piecewise-constant injection of each coarse value to its children.
pub fn prolong(coarse: &DiscreteField, fine_grid: &Grid) -> DiscreteField {
    let mut out = DiscreteField::zeros(*fine_grid);
    prolong_add(coarse.grid(), coarse.values(), fine_grid, out.values_mut());
    out
}

fn restrict_into(fg: &Grid, fine: &[f64], cg: &Grid, coarse: &mut [f64]) {
    let fnx = fg.nx();
    let cnx = cg.nx();
    if cg.dim() == 1 {
        coarse.par_iter_mut().enumerate().with_min_len(4096).for_each(|(i, c)| {
            *c = 0.5 * (fine[2 * i] + fine[2 * i + 1]);
        });
    } else {
        coarse.par_chunks_mut(cnx).enumerate().for_each(|(j, row)| {
            let (r0, r1) = (2 * j * fnx, (2 * j + 1) * fnx);
            for (i, c) in row.iter_mut().enumerate() {
                let a = 2 * i;
                *c = 0.25 * (fine[r0 + a] + fine[r0 + a + 1] + fine[r1 + a] + fine[r1 + a + 1]);
            }
        });
    }
}

fn prolong_add(cg: &Grid, coarse: &[f64], fg: &Grid, fine: &mut [f64]) {
    let fnx = fg.nx();
    let cnx = cg.nx();
    if cg.dim() == 1 {
        fine.par_iter_mut().enumerate().with_min_len(4096).for_each(|(i, f)| {
            *f += coarse[i / 2];
        });
    } else {
        fine.par_chunks_mut(fnx).enumerate().for_each(|(j, row)| {
            let crow = &coarse[(j / 2) * cnx..(j / 2 + 1) * cnx];
            for (i, f) in row.iter_mut().enumerate() {
                *f += crow[i / 2];
            }
        });
    }
}

impl MgHierarchy {
    /// Builds every level from the fine-grid signed distance.
    pub fn from_distance(spec: &ProblemSpec, r: &DistanceField, eps: f64, cfg: &MgConfig) -> Result<Self> {
        cfg.validate()?;
        let mut grids = vec![*r.grid()];
        while cfg.levels.map_or(true, |l| grids.len() < l) {
            match grids.last().unwrap().coarsen(cfg.min_coarse_cells) {
                Some(g) => grids.push(g),
                None => break,
            }
        }
        if let Some(l) = cfg.levels {
            if grids.len() < l {
                return Err(Error::Configuration(format!(
                    "grid {:?} cannot be coarsened to {l} levels with at least {} cells per axis",
                    r.grid().cells_per_axis(),
                    cfg.min_coarse_cells
                )));
            }
        }
        let mut distances = vec![r.clone()];
        for g in &grids[1..] {
            let coarse = restrict(distances.last().unwrap().field(), g);
            distances.push(DistanceField::new(coarse));
        }
        let mut levels: Vec<Level> = Vec::with_capacity(distances.len());
        for d in &distances {
            let mut op = build_operator_from_distance(spec, d, eps)?;
            // Cell-averaged reaction terms keep the layer integrals of c and
            // w when the coarse grid no longer resolves the layer.
            if let Some(fine) = levels.last() {
                let fg = fine.op.grid();
                let c = restrict(&DiscreteField::from_values(*fg, fine.op.reaction().to_vec())?, d.grid()).into_values();
                let w = restrict(&DiscreteField::from_values(*fg, fine.op.interface_weight().to_vec())?, d.grid()).into_values();
                op = op.with_reaction(c, w);
            }
            let n = d.grid().len();
            levels.push(Level {
                op,
                u: vec![0.0; n],
                rhs: vec![0.0; n],
                res: vec![0.0; n],
            });
        }
        Ok(MgHierarchy {
            levels,
            pre: cfg.pre_sweeps,
            post: cfg.post_sweeps,
            coarse: cfg.coarse_sweeps,
        })
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn grid(&self, level: usize) -> &Grid {
        self.levels[level].op.grid()
    }

    pub fn operator(&self, level: usize) -> &DiscreteOperator {
        &self.levels[level].op
    }

    /// `sweeps` red–black Gauss–Seidel sweeps on `level`.
    pub fn smooth(&self, level: usize, u: &mut [f64], rhs: &[f64], sweeps: usize) {
        let op = &self.levels[level].op;
        for _ in 0..sweeps {
            op.gauss_seidel_sweep(u, rhs);
        }
    }

    /// One V-cycle on the finest level, updating `u` in place.
    pub fn v_cycle(&mut self, u: &mut [f64], rhs: &[f64]) {
        if self.levels.len() == 1 {
            let sweeps = self.pre + self.coarse + self.post;
            self.smooth(0, u, rhs, sweeps);
            return;
        }
        let fine = &mut self.levels[0];
        fine.u.copy_from_slice(u);
        fine.rhs.copy_from_slice(rhs);
        self.cycle_level(0);
        u.copy_from_slice(&self.levels[0].u);
    }

    fn cycle_level(&mut self, l: usize) {
        let last = self.levels.len() - 1;
        if l == last {
            let lev = &mut self.levels[l];
            for _ in 0..self.coarse {
                lev.op.gauss_seidel_sweep(&mut lev.u, &lev.rhs);
            }
            return;
        }
        {
            let lev = &mut self.levels[l];
            for _ in 0..self.pre {
                lev.op.gauss_seidel_sweep(&mut lev.u, &lev.rhs);
            }
            lev.op.residual_into(&lev.u, &lev.rhs, &mut lev.res);
        }
        {
            let (head, tail) = self.levels.split_at_mut(l + 1);
            let (fine, coarse) = (&head[l], &mut tail[0]);
            restrict_into(fine.op.grid(), &fine.res, coarse.op.grid(), &mut coarse.rhs);
            coarse.u.iter_mut().for_each(|v| *v = 0.0);
        }
        self.cycle_level(l + 1);
        {
            let (head, tail) = self.levels.split_at_mut(l + 1);
            let (fine, coarse) = (&mut head[l], &tail[0]);
            prolong_add(coarse.op.grid(), &coarse.u, fine.op.grid(), &mut fine.u);
            for _ in 0..self.post {
                fine.op.gauss_seidel_sweep(&mut fine.u, &fine.rhs);
            }
        }
    }

    /// V-cycles from the initial guess in `u` until the stopping rule holds.
    pub fn solve(&mut self, u: &mut DiscreteField, rhs: &DiscreteField, cfg: &MgConfig) -> Result<SolveReport> {
        let start = Instant::now();
        let measure = self.grid(0).cell_measure();
        let n = self.grid(0).len();
        let rhs_norm = norm(rhs.values(), measure);
        let mut res = vec![0.0; n];
        let mut scale = vec![0.0; n];
        let op = &self.levels[0].op;
        op.residual_into(u.values(), rhs.values(), &mut res);
        let r0 = norm(&res, measure);
        let denom = if rhs_norm > 0.0 { rhs_norm } else { r0.max(f64::MIN_POSITIVE) };
        let mut history = vec![r0 / denom];
        let mut report = SolveReport {
            iterations: 0,
            converged: r0 == 0.0 || r0 / denom <= cfg.tol,
            hit_rounding_floor: false,
            final_relative_residual: r0 / denom,
            residual_history: Vec::new(),
            contraction: 0.0,
            wall_seconds: 0.0,
            levels: self.depth(),
        };
        let mut cycle = 0;
        while !report.converged && cycle < cfg.max_cycles {
            cycle += 1;
            self.v_cycle(u.values_mut(), rhs.values());
            let op = &self.levels[0].op;
            op.residual_into(u.values(), rhs.values(), &mut res);
            let r = norm(&res, measure);
            if !r.is_finite() || !u.is_finite() {
                return Err(Error::Divergence { cycle });
            }
            history.push(r / denom);
            if r / denom <= cfg.tol {
                report.converged = true;
            } else if cfg.rounding_guard > 0.0 {
                op.residual_scale_into(u.values(), rhs.values(), &mut scale);
                let floor = f64::EPSILON * norm(&scale, measure);
                // The floor estimate is pessimistic, so also require that
                // the last cycle made no real progress.
                let ratio = history[history.len() - 1] / history[history.len() - 2];
                if r <= cfg.rounding_guard * floor && ratio >= STAGNATION_RATIO {
                    report.converged = true;
                    report.hit_rounding_floor = true;
                }
            }
        }
        report.iterations = cycle;
        report.final_relative_residual = *history.last().unwrap();
        report.contraction = if cycle > 0 && history[0] > 0.0 {
            (report.final_relative_residual / history[0]).powf(1.0 / cycle as f64)
        } else {
            0.0
        };
        report.residual_history = history;
        report.wall_seconds = start.elapsed().as_secs_f64();
        Ok(report)
    }
}

fn norm(v: &[f64], measure: f64) -> f64 {
    crate::discretization::weighted_l2(v, measure)
}

/// Outcome of a multigrid solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    /// Stopped at the floating point residual floor before reaching `tol`.
    pub hit_rounding_floor: bool,
    pub final_relative_residual: f64,
    /// Relative residual before the first cycle and after each cycle.
    pub residual_history: Vec<f64>,
    /// Geometric mean of the per-cycle residual ratios.
    pub contraction: f64,
    pub wall_seconds: f64,
    pub levels: usize,
}

impl SolveReport {
    /// Largest residual ratio between consecutive cycles.
    pub fn worst_ratio(&self) -> f64 {
        self.residual_history
            .windows(2)
            .map(|w| w[1] / w[0])
            .fold(0.0, f64::max)
    }
}

/// Builds the hierarchy for `spec` on `grid`, computing the signed distance.
pub fn build_hierarchy(spec: &ProblemSpec, grid: &Grid, eps: f64, cfg: &MgConfig) -> Result<MgHierarchy> {
    let r = signed_distance(&spec.geometry, grid)?;
    MgHierarchy::from_distance(spec, &r, eps, cfg)
}

/// Solves from a precomputed signed distance, starting at zero.
pub fn solve_with_distance(spec: &ProblemSpec, r: &DistanceField, eps: f64, cfg: &MgConfig) -> Result<(DiscreteField, SolveReport)> {
    let mut mg = MgHierarchy::from_distance(spec, r, eps, cfg)?;
    let rhs = build_rhs_from_distance(spec, r, eps);
    let mut u = DiscreteField::zeros(*r.grid());
    let report = mg.solve(&mut u, &rhs, cfg)?;
    Ok((u, report))
}

/// Solves the diffuse domain problem on `grid` from a zero initial guess.
pub fn solve(spec: &ProblemSpec, grid: &Grid, eps: f64, cfg: &MgConfig) -> Result<(DiscreteField, SolveReport)> {
    let r = signed_distance(&spec.geometry, grid)?;
    solve_with_distance(spec, &r, eps, cfg)
}
