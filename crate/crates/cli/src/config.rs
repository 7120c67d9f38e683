//! JSON run configuration and its validation into an executable job.

use std::fmt;
use std::path::{Path, PathBuf};

use ddm_core::analysis::{AlphaRule, StudyOptions};
use ddm_core::geometry::InterfaceGeometry;
use ddm_core::model::ONE_SIDED_DEFAULT_ALPHA;
use ddm_core::{Grid, MgConfig, ProblemSpec, SpatialFn, Subdomain, TestCase};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Solve,
    Distance,
    Converge,
    Refine,
    Onesided,
    Asymptotic,
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Distance => "distance",
            Command::Converge => "converge",
            Command::Refine => "refine",
            Command::Onesided => "onesided",
            Command::Asymptotic => "asymptotic",
            Command::Selftest => "selftest",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).ok()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    /// Built-in test case name.
    pub case: Option<String>,
    /// Inline problem with constant sources; exclusive with `case`.
    pub problem: Option<InlineProblem>,
    /// Cells per axis.
    pub cells: Option<usize>,
    pub epsilon: Option<f64>,
    pub epsilons: Option<Vec<f64>>,
    pub epsilon_sequence: Option<Sequence>,
    /// Measure against a solve at this width instead of the exact solution.
    pub reference_epsilon: Option<f64>,
    pub refinement: Option<Refinement>,
    pub alpha: Option<AlphaSpec>,
    pub probes: Option<Vec<f64>>,
    pub sharp_cells: Option<usize>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub subdomain: SubdomainName,
    pub out: Option<PathBuf>,
    #[serde(default = "default_plot")]
    pub plot: bool,
    /// Write measured wall time instead of zeros.
    #[serde(default)]
    pub timing: bool,
    pub threads: Option<usize>,
}

fn default_plot() -> bool {
    true
}

/// `start · factor^k` for `k < count`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sequence {
    pub start: f64,
    #[serde(default = "default_factor")]
    pub factor: f64,
    pub count: usize,
}

fn default_factor() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Refinement {
    /// `h / ε`.
    pub ratio: f64,
    pub base_cells: usize,
    pub levels: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum AlphaSpec {
    Constant(f64),
    /// `α = ε^m`.
    Power(f64),
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubdomainName {
    #[default]
    Whole,
    Inner,
    Outer,
}

impl From<SubdomainName> for Subdomain {
    fn from(s: SubdomainName) -> Self {
        match s {
            SubdomainName::Whole => Subdomain::Whole,
            SubdomainName::Inner => Subdomain::Inner,
            SubdomainName::Outer => Subdomain::Outer,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub pre_sweeps: usize,
    pub post_sweeps: usize,
    pub coarse_sweeps: usize,
    pub tol: f64,
    pub max_cycles: usize,
    pub min_coarse_cells: usize,
    pub levels: Option<usize>,
    pub rounding_guard: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let m = MgConfig::default();
        SolverConfig {
            pre_sweeps: m.pre_sweeps,
            post_sweeps: m.post_sweeps,
            coarse_sweeps: m.coarse_sweeps,
            tol: m.tol,
            max_cycles: m.max_cycles,
            min_coarse_cells: m.min_coarse_cells,
            levels: m.levels,
            rounding_guard: m.rounding_guard,
        }
    }
}

impl From<SolverConfig> for MgConfig {
    fn from(s: SolverConfig) -> Self {
        MgConfig {
            pre_sweeps: s.pre_sweeps,
            post_sweeps: s.post_sweeps,
            coarse_sweeps: s.coarse_sweeps,
            tol: s.tol,
            max_cycles: s.max_cycles,
            min_coarse_cells: s.min_coarse_cells,
            levels: s.levels,
            rounding_guard: s.rounding_guard,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineProblem {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub g: f64,
    pub q: f64,
    pub h: f64,
    pub geometry: GeometrySpec,
    pub domain: Vec<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum GeometrySpec {
    Point { x0: f64 },
    Ellipse { a: f64, b: f64 },
    Starfish { c0: f64, c1: f64, c2: f64, k: u32 },
    Polygon { vertices: Vec<[f64; 2]> },
}

/// A configuration problem tied to the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: &str, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Parses a JSON document, reporting the field path and line on failure.
pub fn parse(text: &str, origin: &Path) -> anyhow::Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        anyhow::anyhow!(
            "{}:{}:{}: field `{}`: {}",
            origin.display(),
            inner.line(),
            inner.column(),
            path,
            inner
        )
    })
}

/// Settings shared by every job.
#[derive(Debug, Clone)]
pub struct Settings {
    pub opts: StudyOptions,
    pub out: PathBuf,
    pub plot: bool,
    pub timing: bool,
    pub threads: usize,
}

/// A fully validated unit of work.
#[derive(Debug, Clone)]
pub enum Job {
    Solve {
        case: TestCase,
        grid: Grid,
        epsilon: f64,
    },
    Distance {
        case: TestCase,
        grid: Grid,
    },
    Converge {
        case: TestCase,
        grid: Grid,
        eps: Vec<f64>,
        reference: Option<f64>,
    },
    Refine {
        case: TestCase,
        refinement: Refinement,
    },
    Onesided {
        rule: AlphaRule,
        grid: Grid,
        eps: Vec<f64>,
    },
    Asymptotic {
        case: TestCase,
        eps: Vec<f64>,
        probes: Vec<f64>,
        cells: usize,
        sharp_cells: usize,
    },
    Selftest,
}

const DEFAULT_SHARP_CELLS: usize = 1 << 14;

type Checked<T> = std::result::Result<T, ConfigError>;

impl RunConfig {
    /// Names of the optional keys that are set.
    fn present(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        let mut mark = |set: bool, k: &'static str| {
            if set {
                keys.push(k)
            }
        };
        mark(self.case.is_some(), "case");
        mark(self.problem.is_some(), "problem");
        mark(self.cells.is_some(), "cells");
        mark(self.epsilon.is_some(), "epsilon");
        mark(self.epsilons.is_some(), "epsilons");
        mark(self.epsilon_sequence.is_some(), "epsilon_sequence");
        mark(self.reference_epsilon.is_some(), "reference_epsilon");
        mark(self.refinement.is_some(), "refinement");
        mark(self.alpha.is_some(), "alpha");
        mark(self.probes.is_some(), "probes");
        mark(self.sharp_cells.is_some(), "sharp_cells");
        keys
    }

    fn allowed(&self) -> &'static [&'static str] {
        match self.command {
            Command::Solve => &["case", "problem", "cells", "epsilon"],
            Command::Distance => &["case", "problem", "cells"],
            Command::Converge => &["case", "problem", "cells", "epsilons", "epsilon_sequence", "reference_epsilon"],
            Command::Refine => &["case", "problem", "refinement"],
            Command::Onesided => &["case", "cells", "epsilons", "epsilon_sequence", "alpha"],
            Command::Asymptotic => &["case", "problem", "cells", "epsilons", "epsilon_sequence", "probes", "sharp_cells"],
            Command::Selftest => &[],
        }
    }

    /// Checks every field needed by the command and builds the job.
    pub fn validate(&self) -> Checked<(Job, Settings)> {
        let allowed = self.allowed();
        if let Some(k) = self.present().into_iter().find(|k| !allowed.contains(k)) {
            return Err(ConfigError::new(k, format!("not used by `{}`", self.command.name())));
        }
        let mg: MgConfig = self.solver.into();
        mg.validate().map_err(|e| ConfigError::new("solver", e.to_string()))?;
        let threads = match self.threads {
            Some(0) => return Err(ConfigError::new("threads", "must be at least 1")),
            Some(t) => t,
            None => 1,
        };
        let settings = Settings {
            opts: StudyOptions {
                mg,
                subdomain: self.subdomain.into(),
                parallel_rows: threads > 1,
            },
            out: self.out.clone().unwrap_or_else(|| PathBuf::from("ddm-out")),
            plot: self.plot,
            timing: self.timing,
            threads,
        };
        let job = match self.command {
            Command::Solve => {
                let case = self.case()?;
                let epsilon = need(self.epsilon, "epsilon")?;
                check_eps("epsilon", &[epsilon])?;
                let grid = self.grid(&case)?;
                Job::Solve { case, grid, epsilon }
            }
            Command::Distance => {
                let case = self.case()?;
                let grid = self.grid(&case)?;
                Job::Distance { case, grid }
            }
            Command::Converge => {
                let case = self.case()?;
                let grid = self.grid(&case)?;
                let eps = self.eps()?;
                match self.reference_epsilon {
                    Some(e) => {
                        check_eps("reference_epsilon", &[e])?;
                        if eps.iter().any(|&x| x <= e) {
                            return Err(ConfigError::new(
                                "reference_epsilon",
                                "must be smaller than every test width",
                            ));
                        }
                    }
                    None if !case.has_exact_solution() => {
                        return Err(ConfigError::new(
                            "reference_epsilon",
                            format!("required: case `{}` has no exact solution", case.name()),
                        ))
                    }
                    None => {}
                }
                Job::Converge {
                    case,
                    grid,
                    eps,
                    reference: self.reference_epsilon,
                }
            }
            Command::Refine => {
                let case = self.case()?;
                if !case.has_exact_solution() {
                    return Err(ConfigError::new(
                        "case",
                        format!("`{}` has no exact solution", case.name()),
                    ));
                }
                let r = need(self.refinement, "refinement")?;
                if !(r.ratio > 0.0 && r.ratio.is_finite()) {
                    return Err(ConfigError::new("refinement.ratio", "must be positive"));
                }
                if r.base_cells < 2 {
                    return Err(ConfigError::new("refinement.base_cells", "need at least 2 cells"));
                }
                if r.levels == 0 || r.levels > 24 {
                    return Err(ConfigError::new("refinement.levels", "must be between 1 and 24"));
                }
                Job::Refine { case, refinement: r }
            }
            Command::Onesided => {
                if let Some(name) = &self.case {
                    if name != "one-sided-1d" {
                        return Err(ConfigError::new("case", "`onesided` always runs `one-sided-1d`"));
                    }
                }
                let rule = match self.alpha {
                    Some(AlphaSpec::Constant(a)) if a > 0.0 && a.is_finite() => AlphaRule::Constant(a),
                    Some(AlphaSpec::Power(m)) if m > 0.0 && m.is_finite() => AlphaRule::Power(m),
                    Some(_) => return Err(ConfigError::new("alpha", "value must be positive")),
                    None => AlphaRule::Constant(ONE_SIDED_DEFAULT_ALPHA),
                };
                let base = TestCase::one_sided_1d(ONE_SIDED_DEFAULT_ALPHA)
                    .map_err(|e| ConfigError::new("case", e.to_string()))?;
                let grid = self.grid(&base)?;
                let eps = self.eps()?;
                Job::Onesided { rule, grid, eps }
            }
            Command::Asymptotic => {
                let case = self.case()?;
                let spec = case.spec();
                let x0 = match spec.geometry {
                    InterfaceGeometry::Point1d { x0 } => x0,
                    _ => return Err(ConfigError::new("case", "the asymptotic check needs a 1D case")),
                };
                if spec.lambda().is_none() {
                    return Err(ConfigError::new("case", "the asymptotic check needs a constant interface source"));
                }
                let eps = self.eps()?;
                let probes = need(self.probes.clone(), "probes")?;
                if probes.is_empty() {
                    return Err(ConfigError::new("probes", "need at least one probe"));
                }
                let emax = eps.iter().fold(0.0f64, |m, &e| m.max(e));
                let [lo, hi] = spec.domain[0];
                for (k, &x) in probes.iter().enumerate() {
                    if !(x > lo && x < hi) || (x - x0).abs() < 10.0 * emax {
                        return Err(ConfigError::new(
                            &format!("probes[{k}]"),
                            format!("{x} must lie inside the domain and at least 10 interface widths from it"),
                        ));
                    }
                }
                let cells = need(self.cells, "cells")?;
                check_cells("cells", cells)?;
                let sharp_cells = self.sharp_cells.unwrap_or(DEFAULT_SHARP_CELLS);
                check_cells("sharp_cells", sharp_cells)?;
                Job::Asymptotic {
                    case,
                    eps,
                    probes,
                    cells,
                    sharp_cells,
                }
            }
            Command::Selftest => Job::Selftest,
        };
        Ok((job, settings))
    }

    fn case(&self) -> Checked<TestCase> {
        match (&self.case, &self.problem) {
            (Some(_), Some(_)) => Err(ConfigError::new("problem", "give either `case` or `problem`, not both")),
            (Some(name), None) => TestCase::builtin(name).map_err(|e| ConfigError::new("case", e.to_string())),
            (None, Some(p)) => p.build(),
            (None, None) => Err(ConfigError::new("case", "missing: give a test case name or an inline `problem`")),
        }
    }

    fn grid(&self, case: &TestCase) -> Checked<Grid> {
        let n = need(self.cells, "cells")?;
        check_cells("cells", n)?;
        let spec = case.spec();
        Grid::from_bounds(&vec![n; spec.dim()], &spec.domain).map_err(|e| ConfigError::new("cells", e.to_string()))
    }

    fn eps(&self) -> Checked<Vec<f64>> {
        let eps = match (&self.epsilons, self.epsilon_sequence) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::new(
                    "epsilon_sequence",
                    "give either `epsilons` or `epsilon_sequence`, not both",
                ))
            }
            (Some(list), None) => {
                check_eps("epsilons", list)?;
                list.clone()
            }
            (None, Some(s)) => {
                if s.count == 0 {
                    return Err(ConfigError::new("epsilon_sequence.count", "must be at least 1"));
                }
                if !(s.factor > 0.0 && s.factor < 1.0) {
                    return Err(ConfigError::new("epsilon_sequence.factor", "must lie in (0, 1)"));
                }
                let list: Vec<f64> = (0..s.count).map(|k| s.start * s.factor.powi(k as i32)).collect();
                check_eps("epsilon_sequence.start", &list)?;
                list
            }
            (None, None) => return Err(ConfigError::new("epsilons", "missing: give `epsilons` or `epsilon_sequence`")),
        };
        if eps.is_empty() {
            return Err(ConfigError::new("epsilons", "need at least one width"));
        }
        Ok(eps)
    }
}

impl InlineProblem {
    fn build(&self) -> Checked<TestCase> {
        let geometry = match &self.geometry {
            GeometrySpec::Point { x0 } => InterfaceGeometry::Point1d { x0: *x0 },
            GeometrySpec::Ellipse { a, b } => InterfaceGeometry::Ellipse { a: *a, b: *b },
            GeometrySpec::Starfish { c0, c1, c2, k } => InterfaceGeometry::Starfish {
                c0: *c0,
                c1: *c1,
                c2: *c2,
                k: *k,
            },
            GeometrySpec::Polygon { vertices } => InterfaceGeometry::convex_polygon(vertices.clone())
                .map_err(|e| ConfigError::new("problem.geometry", e.to_string()))?,
        };
        let spec = ProblemSpec {
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            kappa: self.kappa,
            g: SpatialFn::constant(self.g),
            q: SpatialFn::constant(self.q),
            h: SpatialFn::constant(self.h),
            geometry,
            domain: self.domain.clone(),
        };
        TestCase::new("inline", spec, None).map_err(|e| ConfigError::new("problem", e.to_string()))
    }
}

fn need<T>(v: Option<T>, field: &str) -> Checked<T> {
    v.ok_or_else(|| ConfigError::new(field, "missing"))
}

fn check_cells(field: &str, n: usize) -> Checked<()> {
    if n < 2 {
        return Err(ConfigError::new(field, "need at least 2 cells"));
    }
    Ok(())
}

fn check_eps(field: &str, eps: &[f64]) -> Checked<()> {
    match eps.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
        Some(e) => Err(ConfigError::new(field, format!("widths must lie in (0, 1), got {e}"))),
        None => Ok(()),
    }
}
