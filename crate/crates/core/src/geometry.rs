//! Interface descriptions and signed distance fields.
//!
//! Signed distances are positive inside Ω1 and negative outside.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use rayon::prelude::*;

use crate::discretization::{DiscreteField, Grid};
use crate::error::{Error, Result};
use crate::model::SpatialFn;
use crate::Point;

/// Boundary of the inner region Ω1.
#[derive(Clone)]
pub enum InterfaceGeometry {
    /// The 1D interface point; Ω1 is `x > x0`.
    Point1d { x0: f64 },
    /// `x²/a² + y²/b² < 1`.
    Ellipse { a: f64, b: f64 },
    /// Polar star `r < c0 (c1 + c2 sin kθ)`.
    Starfish { c0: f64, c1: f64, c2: f64, k: u32 },
    /// Counterclockwise convex polygon.
    ConvexPolygon { vertices: Vec<Point> },
    /// User level set, positive inside Ω1.
    Implicit(SpatialFn),
}

impl fmt::Debug for InterfaceGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Point1d { x0 } => f.debug_struct("Point1d").field("x0", x0).finish(),
            Self::Ellipse { a, b } => f.debug_struct("Ellipse").field("a", a).field("b", b).finish(),
            Self::Starfish { c0, c1, c2, k } => f
                .debug_struct("Starfish")
                .field("c0", c0)
                .field("c1", c1)
                .field("c2", c2)
                .field("k", k)
                .finish(),
            Self::ConvexPolygon { vertices } => {
                f.debug_struct("ConvexPolygon").field("vertices", vertices).finish()
            }
            Self::Implicit(_) => f.write_str("Implicit(..)"),
        }
    }
}

impl InterfaceGeometry {
    /// Builds a polygon, checking orientation and convexity.
    pub fn convex_polygon(vertices: Vec<Point>) -> Result<Self> {
        let g = Self::ConvexPolygon { vertices };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidGeometry(format!("{name} must be positive, got {v}")))
            }
        };
        match self {
            Self::Point1d { x0 } if !x0.is_finite() => {
                Err(Error::InvalidGeometry("interface point is not finite".into()))
            }
            Self::Point1d { .. } | Self::Implicit(_) => Ok(()),
            Self::Ellipse { a, b } => positive("a", *a).and(positive("b", *b)),
            Self::Starfish { c0, c1, c2, k } => {
                positive("c0", *c0)?;
                positive("c1", *c1)?;
                if !(c2.is_finite() && *c2 >= 0.0 && c2 < c1) {
                    return Err(Error::InvalidGeometry(format!(
                        "starfish amplitude c2={c2} must lie in [0, c1)"
                    )));
                }
                if *k == 0 {
                    return Err(Error::InvalidGeometry("starfish needs k >= 1".into()));
                }
                Ok(())
            }
            Self::ConvexPolygon { vertices } => check_convex_ccw(vertices),
        }
    }

    /// Axis-aligned bounding box `[[xmin, xmax], [ymin, ymax]]`, if bounded.
    pub fn bounding_box(&self) -> Option<[[f64; 2]; 2]> {
        match self {
            Self::Point1d { x0 } => Some([[*x0, *x0], [0.0, 0.0]]),
            Self::Ellipse { a, b } => Some([[-a, *a], [-b, *b]]),
            Self::Starfish { c0, c1, c2, .. } => {
                let r = c0 * (c1 + c2);
                Some([[-r, r], [-r, r]])
            }
            Self::ConvexPolygon { vertices } => {
                let mut bb = [[f64::INFINITY, f64::NEG_INFINITY]; 2];
                for v in vertices {
                    for axis in 0..2 {
                        bb[axis][0] = bb[axis][0].min(v[axis]);
                        bb[axis][1] = bb[axis][1].max(v[axis]);
                    }
                }
                Some(bb)
            }
            Self::Implicit(_) => None,
        }
    }
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn check_convex_ccw(v: &[Point]) -> Result<()> {
    if v.len() < 3 {
        return Err(Error::InvalidGeometry(format!(
            "polygon needs at least 3 vertices, got {}",
            v.len()
        )));
    }
    if v.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::InvalidGeometry("polygon vertex is not finite".into()));
    }
    let n = v.len();
    for i in 0..n {
        let c = cross(v[i], v[(i + 1) % n], v[(i + 2) % n]);
        if c <= 0.0 {
            let reason = if c == 0.0 { "collinear" } else { "not strictly convex counterclockwise" };
            return Err(Error::InvalidGeometry(format!(
                "polygon is {reason} at vertex {}",
                (i + 1) % n
            )));
        }
    }
    // Locally convex corners can still wind more than once.
    let turning: f64 = (0..n)
        .map(|i| {
            let (a, b, c) = (v[i], v[(i + 1) % n], v[(i + 2) % n]);
            let e1 = [b[0] - a[0], b[1] - a[1]];
            let e2 = [c[0] - b[0], c[1] - b[1]];
            (e1[0] * e2[1] - e1[1] * e2[0]).atan2(e1[0] * e2[0] + e1[1] * e2[1])
        })
        .sum();
    if (turning - 2.0 * std::f64::consts::PI).abs() > 1e-6 {
        return Err(Error::InvalidGeometry("polygon winds more than once".into()));
    }
    Ok(())
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
    let q = [a[0] + t * d[0], a[1] + t * d[1]];
    (p[0] - q[0]).hypot(p[1] - q[1])
}

/// Exact signed distance from `p` to a convex polygon boundary.
pub fn polygon_signed_distance(p: Point, poly: &InterfaceGeometry) -> Result<f64> {
    let InterfaceGeometry::ConvexPolygon { vertices } = poly else {
        return Err(Error::InvalidGeometry("expected a convex polygon".into()));
    };
    check_convex_ccw(vertices)?;
    Ok(polygon_distance_unchecked(p, vertices))
}

fn polygon_distance_unchecked(p: Point, v: &[Point]) -> f64 {
    let n = v.len();
    let mut dist = f64::INFINITY;
    let mut inside = true;
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        dist = dist.min(segment_distance(p, a, b));
        if cross(a, b, p) < 0.0 {
            inside = false;
        }
    }
    if inside {
        dist
    } else {
        -dist
    }
}

/// Level set function of the interface, positive inside Ω1.
///
/// Polygons return their exact signed distance.
pub fn level_set(p: Point, geom: &InterfaceGeometry) -> f64 {
    match geom {
        InterfaceGeometry::Point1d { x0 } => p[0] - x0,
        InterfaceGeometry::Ellipse { a, b } => a * a - p[0] * p[0] - (a * a) / (b * b) * p[1] * p[1],
        InterfaceGeometry::Starfish { c0, c1, c2, k } => {
            let theta = p[1].atan2(p[0]);
            c0 * (c1 + c2 * (*k as f64 * theta).sin()) - p[0].hypot(p[1])
        }
        InterfaceGeometry::ConvexPolygon { vertices } => polygon_distance_unchecked(p, vertices),
        InterfaceGeometry::Implicit(psi) => psi.eval(p),
    }
}

/// Initial narrow band for fast marching.
#[derive(Debug, Clone)]
pub struct Band {
    grid: Grid,
    /// Unsigned distance estimate; `INFINITY` off the band.
    pub distance: Vec<f64>,
    pub frozen: Vec<bool>,
    /// `+1` where ψ ≥ 0, `-1` elsewhere.
    pub sign: Vec<f64>,
}

impl Band {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn frozen_count(&self) -> usize {
        self.frozen.iter().filter(|&&f| f).count()
    }
}

#[inline]
fn sign_of(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Neighbor flat indices of cell `(i, j)` along `axis`.
fn axis_neighbors(grid: &Grid, i: usize, j: usize, axis: usize) -> [Option<usize>; 2] {
    let (n, c) = if axis == 0 { (grid.nx(), i) } else { (grid.ny(), j) };
    let at = |c2: usize| if axis == 0 { grid.index(c2, j) } else { grid.index(i, c2) };
    [
        if c > 0 { Some(at(c - 1)) } else { None },
        if c + 1 < n { Some(at(c + 1)) } else { None },
    ]
}

/// Freezes every cell next to a sign change of ψ and seeds it with the
/// linearly interpolated distance to the crossing.
pub fn initialize_band(levelset: &DiscreteField) -> Result<Band> {
    let grid = *levelset.grid();
    let psi = levelset.values();
    let n = grid.len();
    let mut distance = vec![f64::INFINITY; n];
    let mut frozen = vec![false; n];
    let sign: Vec<f64> = psi.iter().map(|&v| sign_of(v)).collect();

    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let k = grid.index(i, j);
            let mut inv_d2 = 0.0;
            let mut exact_zero = false;
            for axis in 0..grid.dim() {
                let h = grid.h(axis);
                let mut d_axis = f64::INFINITY;
                for nb in axis_neighbors(&grid, i, j, axis).into_iter().flatten() {
                    if sign[nb] != sign[k] {
                        let (a, b) = (psi[k].abs(), psi[nb].abs());
                        d_axis = d_axis.min(h * a / (a + b));
                    }
                }
                if d_axis.is_finite() {
                    if d_axis == 0.0 {
                        exact_zero = true;
                    } else {
                        inv_d2 += 1.0 / (d_axis * d_axis);
                    }
                }
            }
            if exact_zero {
                distance[k] = 0.0;
                frozen[k] = true;
            } else if inv_d2 > 0.0 {
                distance[k] = 1.0 / inv_d2.sqrt();
                frozen[k] = true;
            }
        }
    }
    if !frozen.iter().any(|&f| f) {
        return Err(Error::NoInterface);
    }
    Ok(Band {
        grid,
        distance,
        frozen,
        sign,
    })
}

#[derive(PartialEq)]
struct HeapEntry {
    dist: f64,
    cell: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance; ties broken by index for determinism.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// First-order Godunov solution of `|∇u| = 1` from accepted neighbor minima.
fn godunov_update(mins: &[(f64, f64)]) -> f64 {
    // mins: (neighbor value, h) per axis with a finite upwind value.
    let mut m: Vec<(f64, f64)> = mins.to_vec();
    m.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut u = m[0].0 + m[0].1;
    for k in 2..=m.len() {
        if u <= m.get(k - 1).map_or(f64::INFINITY, |e| e.0) {
            break;
        }
        // Solve Σ ((u - a_i)/h_i)² = 1 over the first k axes.
        let (mut qa, mut qb, mut qc) = (0.0, 0.0, -1.0);
        for &(a, h) in &m[..k] {
            let w = 1.0 / (h * h);
            qa += w;
            qb -= 2.0 * a * w;
            qc += a * a * w;
        }
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            break;
        }
        u = (-qb + disc.sqrt()) / (2.0 * qa);
    }
    u
}

/// Marches unsigned distance outward from the frozen band in increasing
/// order and reattaches the sign of ψ.
pub fn fast_march(band: &Band) -> Result<DistanceField> {
    let grid = band.grid;
    if !band.frozen.iter().any(|&f| f) {
        return Err(Error::NoInterface);
    }
    let mut dist = band.distance.clone();
    let mut accepted = band.frozen.clone();
    let mut heap = BinaryHeap::new();

    let push_neighbors = |k: usize,
                          dist: &mut Vec<f64>,
                          accepted: &Vec<bool>,
                          heap: &mut BinaryHeap<HeapEntry>| {
        let (i, j) = (k % grid.nx(), k / grid.nx());
        for axis in 0..grid.dim() {
            for nb in axis_neighbors(&grid, i, j, axis).into_iter().flatten() {
                if accepted[nb] {
                    continue;
                }
                let (ni, nj) = (nb % grid.nx(), nb / grid.nx());
                let mut mins = [(0.0, 0.0); 2];
                let mut count = 0;
                for ax in 0..grid.dim() {
                    let best = axis_neighbors(&grid, ni, nj, ax)
                        .into_iter()
                        .flatten()
                        .filter(|&m| accepted[m])
                        .map(|m| dist[m])
                        .fold(f64::INFINITY, f64::min);
                    if best.is_finite() {
                        mins[count] = (best, grid.h(ax));
                        count += 1;
                    }
                }
                let cand = godunov_update(&mins[..count]);
                if cand < dist[nb] {
                    dist[nb] = cand;
                    heap.push(HeapEntry { dist: cand, cell: nb });
                }
            }
        }
    };

    for k in 0..grid.len() {
        if accepted[k] {
            push_neighbors(k, &mut dist, &accepted, &mut heap);
        }
    }
    while let Some(HeapEntry { dist: d, cell }) = heap.pop() {
        if accepted[cell] || d > dist[cell] {
            continue;
        }
        accepted[cell] = true;
        push_neighbors(cell, &mut dist, &accepted, &mut heap);
    }

    let values = dist.iter().zip(&band.sign).map(|(d, s)| d * s).collect();
    Ok(DistanceField::new(DiscreteField::from_values(grid, values)?))
}

/// Signed distance to the interface at every cell center of `grid`.
pub fn signed_distance(geom: &InterfaceGeometry, grid: &Grid) -> Result<DistanceField> {
    geom.validate()?;
    match geom {
        InterfaceGeometry::Point1d { x0 } => {
            let x0 = *x0;
            Ok(DistanceField::new(DiscreteField::from_fn(*grid, |p| p[0] - x0)))
        }
        InterfaceGeometry::ConvexPolygon { vertices } => {
            let values = (0..grid.len())
                .into_par_iter()
                .map(|k| polygon_distance_unchecked(grid.center_of(k), vertices))
                .collect();
            Ok(DistanceField::new(DiscreteField::from_values(*grid, values)?))
        }
        _ => {
            let psi = DiscreteField::from_fn(*grid, |p| level_set(p, geom));
            fast_march(&initialize_band(&psi)?)
        }
    }
}

/// Signed distance sampled at cell centers, positive inside Ω1.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    field: DiscreteField,
}

impl DistanceField {
    pub fn new(field: DiscreteField) -> Self {
        DistanceField { field }
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.field.values()
    }

    pub fn field(&self) -> &DiscreteField {
        &self.field
    }

    pub fn into_field(self) -> DiscreteField {
        self.field
    }

    /// Largest `|r_i − r_j| / |x_i − x_j|` over face neighbors.
    pub fn max_lipschitz_ratio(&self) -> f64 {
        let g = self.grid();
        let r = self.values();
        let mut worst: f64 = 0.0;
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                let k = g.index(i, j);
                if i + 1 < g.nx() {
                    worst = worst.max((r[k + 1] - r[k]).abs() / g.h(0));
                }
                if g.dim() == 2 && j + 1 < g.ny() {
                    worst = worst.max((r[g.index(i, j + 1)] - r[k]).abs() / g.h(1));
                }
            }
        }
        worst
    }
}
