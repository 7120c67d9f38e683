//! Problem data, the built-in test cases, and their exact solutions.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{level_set, InterfaceGeometry};
use crate::Point;

/// Shared scalar function of position.
#[derive(Clone)]
pub struct SpatialFn {
    f: Arc<dyn Fn(Point) -> f64 + Send + Sync>,
    constant: Option<f64>,
}

impl SpatialFn {
    pub fn new(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        SpatialFn {
            f: Arc::new(f),
            constant: None,
        }
    }

    pub fn constant(v: f64) -> Self {
        SpatialFn {
            f: Arc::new(move |_| v),
            constant: Some(v),
        }
    }

    #[inline]
    pub fn eval(&self, p: Point) -> f64 {
        (self.f)(p)
    }

    /// The value, when the function was built with [`SpatialFn::constant`].
    pub fn as_constant(&self) -> Option<f64> {
        self.constant
    }
}

impl fmt::Debug for SpatialFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.constant {
            Some(v) => write!(f, "SpatialFn::constant({v})"),
            None => f.write_str("SpatialFn(..)"),
        }
    }
}

/// Physical data of a two-sided transmission problem.
///
/// Ω1 carries unit diffusivity, reaction `gamma` and source `q`; the outer
/// region Ω2 carries `alpha`, `beta` and `h`. The flux jump across the
/// interface is `kappa * u + g`.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub g: SpatialFn,
    pub q: SpatialFn,
    pub h: SpatialFn,
    pub geometry: InterfaceGeometry,
    /// One `[lo, hi]` interval per axis.
    pub domain: Vec<[f64; 2]>,
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        self.domain.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidProblem(msg));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be nonnegative, got {}", self.beta));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return bad(format!("kappa must be nonnegative, got {}", self.kappa));
        }
        if !(1..=2).contains(&self.dim()) {
            return bad(format!("domain must have 1 or 2 axes, got {}", self.dim()));
        }
        for (axis, iv) in self.domain.iter().enumerate() {
            if !(iv[0].is_finite() && iv[1].is_finite() && iv[1] > iv[0]) {
                return bad(format!("empty domain interval on axis {axis}"));
            }
        }
        self.geometry.validate()?;
        let one_d = matches!(self.geometry, InterfaceGeometry::Point1d { .. });
        if one_d != (self.dim() == 1) && !matches!(self.geometry, InterfaceGeometry::Implicit(_)) {
            return bad("geometry dimension does not match the domain".into());
        }
        if let Some(bb) = self.geometry.bounding_box() {
            for axis in 0..self.dim() {
                let iv = self.domain[axis];
                if !(bb[axis][0] > iv[0] && bb[axis][1] < iv[1]) {
                    return bad(format!("interface touches the domain boundary on axis {axis}"));
                }
            }
        }
        Ok(())
    }

    /// The interface source when it is a constant, as in the 1D cases.
    pub fn lambda(&self) -> Option<f64> {
        self.g.as_constant()
    }

    /// True when `p` lies in Ω1 (level set ≥ 0).
    pub fn is_inner(&self, p: Point) -> bool {
        level_set(p, &self.geometry) >= 0.0
    }
}

/// Interface value and one-sided derivatives of a 1D exact solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceData1d {
    pub value: f64,
    /// `u_R'(0)`, the Ω1 side.
    pub d_right: f64,
    /// `u_L'(0)`, the Ω2 side.
    pub d_left: f64,
}

/// Piecewise closed-form solution.
#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub inner: SpatialFn,
    pub outer: SpatialFn,
    pub interface_1d: Option<InterfaceData1d>,
}

/// Named problem with an optional exact solution.
#[derive(Debug, Clone)]
pub struct TestCase {
    name: String,
    spec: ProblemSpec,
    exact: Option<ExactSolution>,
}

/// Names accepted by [`TestCase::builtin`].
pub const BUILTIN_CASES: [&str; 5] = ["paper-1d", "ellipse-2d", "starfish-2d", "pentagon-2d", "one-sided-1d"];

/// Default exterior diffusivity of the one-sided case.
pub const ONE_SIDED_DEFAULT_ALPHA: f64 = 0.01;

fn u_right_1d(x: f64) -> f64 {
    (4.0 * x * x - 8.0 * x + 6.0) * (4.0 * PI * x).cos()
}

fn q_1d(x: f64) -> f64 {
    let p = 4.0 * x * x - 8.0 * x + 6.0;
    let (s, c) = (4.0 * PI * x).sin_cos();
    (16.0 * PI * PI + 1.0) * p * c + 64.0 * PI * (x - 1.0) * s - 8.0 * c
}

impl TestCase {
    pub fn new(name: impl Into<String>, spec: ProblemSpec, exact: Option<ExactSolution>) -> Result<Self> {
        spec.validate()?;
        Ok(TestCase {
            name: name.into(),
            spec,
            exact,
        })
    }

    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "paper-1d" => Ok(Self::paper_1d()),
            "ellipse-2d" => Ok(Self::ellipse_2d()),
            "starfish-2d" => Ok(Self::starfish_2d()),
            "pentagon-2d" => Ok(Self::pentagon_2d()),
            "one-sided-1d" => Self::one_sided_1d(ONE_SIDED_DEFAULT_ALPHA),
            other => Err(Error::UnknownCase(other.to_string())),
        }
    }

    fn paper_1d() -> Self {
        let spec = ProblemSpec {
            alpha: 0.5,
            beta: 1.0,
            gamma: 1.0,
            kappa: 1.6,
            g: SpatialFn::constant(-25.6),
            q: SpatialFn::new(|p| q_1d(p[0])),
            h: SpatialFn::new(|p| 8.0 * (p[0] + 1.0).powi(2) - 10.0),
            geometry: InterfaceGeometry::Point1d { x0: 0.0 },
            domain: vec![[-1.0, 1.0]],
        };
        let exact = ExactSolution {
            inner: SpatialFn::new(|p| u_right_1d(p[0])),
            outer: SpatialFn::new(|p| 8.0 * (p[0] + 1.0).powi(2) - 2.0),
            interface_1d: Some(InterfaceData1d {
                value: 6.0,
                d_right: -8.0,
                d_left: 16.0,
            }),
        };
        TestCase {
            name: "paper-1d".into(),
            spec,
            exact: Some(exact),
        }
    }

    /// The one-sided-limit case with exterior diffusivity `alpha`.
    pub fn one_sided_1d(alpha: f64) -> Result<Self> {
        let spec = ProblemSpec {
            alpha,
            beta: 0.0,
            gamma: 1.0,
            kappa: 1.6,
            g: SpatialFn::constant(-17.6),
            q: SpatialFn::new(|p| q_1d(p[0])),
            h: SpatialFn::constant(0.0),
            geometry: InterfaceGeometry::Point1d { x0: 0.0 },
            domain: vec![[-1.0, 1.0]],
        };
        let exact = ExactSolution {
            inner: SpatialFn::new(|p| u_right_1d(p[0])),
            outer: SpatialFn::constant(6.0),
            interface_1d: Some(InterfaceData1d {
                value: 6.0,
                d_right: -8.0,
                d_left: 0.0,
            }),
        };
        Self::new("one-sided-1d", spec, Some(exact))
    }

    fn ellipse_2d() -> Self {
        let spec = ProblemSpec {
            alpha: 0.5,
            beta: 1.0,
            gamma: 1.0,
            kappa: 1.0,
            g: SpatialFn::new(|p| {
                let (x, y) = (p[0], p[1]);
                x * x + 4.0 * y * y - 6.0 + 2.0 * (x * x + 16.0 * y * y).sqrt()
            }),
            q: SpatialFn::new(|p| -p[0] * p[0] - 4.0 * p[1] * p[1] + 16.0),
            h: SpatialFn::constant(2.0),
            geometry: InterfaceGeometry::Ellipse { a: 2.0, b: 1.0 },
            domain: vec![[-3.0, 3.0], [-3.0, 3.0]],
        };
        let exact = ExactSolution {
            inner: SpatialFn::new(|p| -p[0] * p[0] - 4.0 * p[1] * p[1] + 6.0),
            outer: SpatialFn::constant(2.0),
            interface_1d: None,
        };
        TestCase {
            name: "ellipse-2d".into(),
            spec,
            exact: Some(exact),
        }
    }

    fn starfish_2d() -> Self {
        let spec = ProblemSpec {
            alpha: 3.0,
            beta: 2.0,
            gamma: 1.0,
            kappa: 0.01,
            g: SpatialFn::constant(4.0),
            q: SpatialFn::new(|p| -p[0] * p[0] + 15.0),
            h: SpatialFn::new(|p| 2.5 * p[0].sin() + p[1].cos().exp()),
            geometry: InterfaceGeometry::Starfish {
                c0: 0.9,
                c1: 1.2,
                c2: 0.7,
                k: 5,
            },
            domain: vec![[-2.0, 2.0], [-2.0, 2.0]],
        };
        TestCase {
            name: "starfish-2d".into(),
            spec,
            exact: None,
        }
    }

    fn pentagon_2d() -> Self {
        let spec = ProblemSpec {
            alpha: 1.0,
            beta: 1.0,
            gamma: 2.0,
            kappa: 0.5,
            g: SpatialFn::constant(4.5),
            q: SpatialFn::new(|p| p[0] * p[0] + 5.0),
            h: SpatialFn::new(|p| -p[0].sin() - p[1].cos().exp()),
            geometry: InterfaceGeometry::ConvexPolygon {
                vertices: vec![[0.8, 0.0], [0.3, 0.9], [-0.5, 0.7], [-0.9, -0.2], [0.2, -0.8]],
            },
            domain: vec![[-2.0, 2.0], [-2.0, 2.0]],
        };
        TestCase {
            name: "pentagon-2d".into(),
            spec,
            exact: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn exact(&self) -> Option<&ExactSolution> {
        self.exact.as_ref()
    }

    pub fn has_exact_solution(&self) -> bool {
        self.exact.is_some()
    }

    /// Closed-form solution at `p`; Ω1 includes the interface itself.
    pub fn exact_solution(&self, p: Point) -> Result<f64> {
        let exact = self
            .exact
            .as_ref()
            .ok_or_else(|| Error::NoExactSolution(self.name.clone()))?;
        Ok(if self.spec.is_inner(p) {
            exact.inner.eval(p)
        } else {
            exact.outer.eval(p)
        })
    }
}
