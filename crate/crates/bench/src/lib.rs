//! Fixtures for the kernel benchmarks.

use ddm_core::discretization::{build_operator_from_distance, build_rhs_from_distance};
use ddm_core::geometry::signed_distance;
use ddm_core::multigrid::build_hierarchy;
use ddm_core::{DiscreteField, DiscreteOperator, DistanceField, Grid, MgConfig, MgHierarchy, TestCase};

/// Interface width used by every fixture.
pub const EPSILON: f64 = 0.05;

/// A built-in case on a square grid with `n` cells per axis.
pub struct Fixture {
    pub case: TestCase,
    pub grid: Grid,
    pub distance: DistanceField,
    pub op: DiscreteOperator,
    pub rhs: DiscreteField,
}

impl Fixture {
    pub fn new(name: &str, n: usize) -> Self {
        let case = TestCase::builtin(name).expect("built-in case");
        let spec = case.spec();
        let grid = Grid::from_bounds(&vec![n; spec.dim()], &spec.domain).expect("grid");
        let distance = signed_distance(&spec.geometry, &grid).expect("distance");
        let op = build_operator_from_distance(spec, &distance, EPSILON).expect("operator");
        let rhs = build_rhs_from_distance(spec, &distance, EPSILON);
        Fixture {
            case,
            grid,
            distance,
            op,
            rhs,
        }
    }

    pub fn hierarchy(&self) -> MgHierarchy {
        build_hierarchy(self.case.spec(), &self.grid, EPSILON, &MgConfig::default()).expect("hierarchy")
    }
}
