//! Traversal-time objective with obstacle and field-boundary penalties.

use crate::error::Result;
use crate::geometry::Vec2;
use crate::kinodynamics::{self, KinodynamicLimits, PlanningPoint, VelocityProfile};
use crate::prior_db::PlanningScenario;
use crate::splines::{self, ArcLengthMap, Spline2D};

use super::{points_of, ControlPointSet, ObjectiveFn};

/// Sum of the circumscribed radii of two 7.5 cm robots, rounded up, cm.
pub const COMBINED_RADIUS: f64 = 11.0;

/// Objective value for control points that yield no feasible profile, s.
pub const INFEASIBLE_VALUE: f64 = 100.0;

/// Penalty per violating trajectory sample, s.
pub const DEFAULT_PENALTY: f64 = 10.0;

/// A spline trajectory with its arc-length map, planning points and
/// velocity profile.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub spline: Spline2D,
    pub map: ArcLengthMap,
    pub points: Vec<PlanningPoint>,
    pub profile: VelocityProfile,
}

/// Traversal time of the trajectory through a set of control points.
#[derive(Debug, Clone)]
pub struct Objective {
    pub scenario: PlanningScenario,
    pub limits: KinodynamicLimits,
    pub field_half_extents: Vec2,
    pub penalty_per_violation: f64,
    pub planning_points: usize,
    pub arc_samples: usize,
    /// Equidistant samples checked for collisions and field exits.
    pub violation_samples: usize,
    pub max_violations: usize,
    pub infeasible_value: f64,
    pub combined_radius: f64,
}

impl Objective {
    pub fn new(scenario: PlanningScenario, limits: KinodynamicLimits, field_half_extents: Vec2) -> Self {
        Objective {
            scenario,
            limits,
            field_half_extents,
            penalty_per_violation: DEFAULT_PENALTY,
            planning_points: kinodynamics::DEFAULT_PLANNING_POINTS,
            arc_samples: splines::DEFAULT_ARC_SAMPLES,
            violation_samples: 100,
            max_violations: 10,
            infeasible_value: INFEASIBLE_VALUE,
            combined_radius: COMBINED_RADIUS,
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.scenario.j
    }

    pub fn knots(&self, coords: &[f64]) -> Vec<Vec2> {
        let mut knots = Vec::with_capacity(coords.len() / 2 + 2);
        knots.push(self.scenario.sp);
        knots.extend(points_of(coords));
        knots.push(self.scenario.ep);
        knots
    }

    /// Builds and profiles the trajectory through `coords`.
    pub fn trajectory(&self, coords: &[f64]) -> Result<Trajectory> {
        let spline = splines::fit_end_slope_spline(&self.knots(coords), self.scenario.sv, self.scenario.ev)?;
        let map = splines::build_arclength_map(&spline, self.arc_samples)?;
        let points = kinodynamics::sample_planning_points(&spline, &map, self.planning_points)?;
        let profile =
            kinodynamics::profile_velocities(&points, self.scenario.sv.norm(), self.scenario.ev.norm(), &self.limits)?;
        Ok(Trajectory { spline, map, points, profile })
    }

    fn outside_field(&self, p: Vec2) -> bool {
        p.x.abs() > self.field_half_extents.x || p.y.abs() > self.field_half_extents.y
    }

    /// Counts violating samples (uncapped).
    ///
    /// A sample violates when it lies outside the field or closer than
    /// `combined_radius + Δ/2` to an obstacle, where `Δ` is the sample
    /// spacing; every point of the curve is within `Δ/2` of some sample, so
    /// zero violations guarantees positive clearance everywhere.
    pub fn violations(&self, trajectory: &Trajectory) -> usize {
        let n = self.violation_samples.max(2);
        let total = trajectory.map.total_length();
        let spacing = total / (n - 1) as f64;
        let keep_out = self.combined_radius + 0.5 * spacing;
        let interior_knots = &trajectory.spline.knots()[1..trajectory.spline.knots().len() - 1];
        let knot_exits = interior_knots.iter().filter(|k| self.outside_field(**k)).count();
        let samples = (0..n)
            .filter(|&i| {
                let u = trajectory.map.eval_unchecked(total * i as f64 / (n - 1) as f64);
                let p = trajectory.spline.eval_unchecked(u).point;
                self.outside_field(p) || self.scenario.obstacles.iter().any(|o| o.distance(p) < keep_out)
            })
            .count();
        knot_exits + samples
    }

    /// Traversal time plus penalties; never fails.
    pub fn evaluate(&self, coords: &[f64]) -> f64 {
        match self.trajectory(coords) {
            Ok(t) => {
                let count = self.violations(&t).min(self.max_violations);
                t.profile.total_time + self.penalty_per_violation * count as f64
            }
            Err(_) => self.infeasible_value,
        }
    }
}

impl ObjectiveFn for Objective {
    fn evaluate(&self, p: &[f64]) -> f64 {
        Objective::evaluate(self, p)
    }
}

pub fn evaluate_objective(objective: &Objective, p: &ControlPointSet) -> f64 {
    objective.evaluate(p.as_slice())
}
