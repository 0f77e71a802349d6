use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PlannerError, Result};
use crate::geometry::Vec2;

/// Maximum number of opponent robots treated as obstacles.
pub const MAX_OBSTACLES: usize = 5;

/// Length of a [`FeatureVector`]: SP, EP, SV, EV and five obstacle slots.
pub const FEATURE_DIM: usize = 8 + 2 * MAX_OBSTACLES;

/// One planning problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanningScenario {
    pub sp: Vec2,
    pub ep: Vec2,
    pub sv: Vec2,
    pub ev: Vec2,
    pub obstacles: Vec<Vec2>,
    /// Number of control points to optimise.
    pub j: usize,
}

impl PlanningScenario {
    pub fn validate(&self, half_extents: Vec2) -> Result<()> {
        let inside = |p: Vec2| p.x.abs() <= half_extents.x && p.y.abs() <= half_extents.y;
        if !(self.sp.is_finite() && self.ep.is_finite() && self.sv.is_finite() && self.ev.is_finite()) {
            return Err(PlannerError::invalid("scenario contains non-finite values"));
        }
        if self.sp.distance(self.ep) < 1e-9 {
            return Err(PlannerError::invalid("start and end positions coincide"));
        }
        if !inside(self.sp) || !inside(self.ep) {
            return Err(PlannerError::invalid(format!(
                "start {:?} or end {:?} outside the field",
                self.sp, self.ep
            )));
        }
        if self.obstacles.len() > MAX_OBSTACLES {
            return Err(PlannerError::invalid(format!("at most {MAX_OBSTACLES} obstacles, got {}", self.obstacles.len())));
        }
        if let Some(o) = self.obstacles.iter().find(|o| !o.is_finite() || !inside(**o)) {
            return Err(PlannerError::invalid(format!("obstacle {o:?} outside the field")));
        }
        if self.j == 0 {
            return Err(PlannerError::invalid("need at least one control point"));
        }
        Ok(())
    }

    /// Normalised k-NN features.
    ///
    /// Positions are divided by the field half extents and velocities by
    /// `v_max`. Obstacles fill the slots sorted by (x, y); unused slots hold
    /// a sentinel at twice the half extent, which also encodes the obstacle
    /// count.
    pub fn features(&self, half_extents: Vec2, v_max: f64) -> FeatureVector {
        let pos = |p: Vec2| [p.x / half_extents.x, p.y / half_extents.y];
        let vel = |v: Vec2| [v.x / v_max, v.y / v_max];
        let mut obstacles = self.obstacles.clone();
        obstacles.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        let mut f = Vec::with_capacity(FEATURE_DIM);
        f.extend(pos(self.sp));
        f.extend(pos(self.ep));
        f.extend(vel(self.sv));
        f.extend(vel(self.ev));
        for slot in 0..MAX_OBSTACLES {
            match obstacles.get(slot) {
                Some(o) => f.extend(pos(*o)),
                None => f.extend([2.0, 2.0]),
            }
        }
        FeatureVector(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn l1_distance(&self, other: &FeatureVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }
}

/// Random scenario source for database building and benchmarks.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioGenerator {
    pub half_extents: Vec2,
    pub v_max: f64,
    /// Fraction of the half extent kept free along the field edges when
    /// placing start and end positions.
    pub edge_margin: f64,
    /// Minimum start-to-end distance, cm.
    pub min_separation: f64,
    /// Minimum distance between an obstacle and the start or end, cm.
    pub obstacle_keepout: f64,
    pub max_obstacles: usize,
    /// Control-point counts to draw from.
    pub j_choices: Vec<usize>,
    /// When set, every scenario uses these obstacles.
    pub fixed_obstacles: Option<Vec<Vec2>>,
}

impl ScenarioGenerator {
    pub fn new(half_extents: Vec2, v_max: f64) -> Self {
        ScenarioGenerator {
            half_extents,
            v_max,
            edge_margin: 0.1,
            min_separation: 100.0,
            obstacle_keepout: 35.0,
            max_obstacles: MAX_OBSTACLES,
            j_choices: vec![1, 2],
            fixed_obstacles: None,
        }
    }

    pub fn with_j(mut self, j: usize) -> Self {
        self.j_choices = vec![j];
        self
    }

    pub fn with_fixed_obstacles(mut self, obstacles: Vec<Vec2>) -> Self {
        self.fixed_obstacles = Some(obstacles);
        self
    }

    fn uniform_point<R: Rng + ?Sized>(&self, rng: &mut R, scale: f64) -> Vec2 {
        let hx = self.half_extents.x * scale;
        let hy = self.half_extents.y * scale;
        Vec2::new(rng.random_range(-hx..=hx), rng.random_range(-hy..=hy))
    }

    fn velocity<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec2 {
        let speed = rng.random_range(0.0..=0.5 * self.v_max);
        let heading = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        Vec2::from_angle(heading) * speed
    }

    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> PlanningScenario {
        let inner = 1.0 - self.edge_margin;
        let obstacles = match &self.fixed_obstacles {
            Some(fixed) => fixed.clone(),
            None => {
                let count = rng.random_range(0..=self.max_obstacles);
                (0..count).map(|_| self.uniform_point(rng, 1.0)).collect()
            }
        };
        let clear = |p: Vec2| obstacles.iter().all(|o| o.distance(p) >= self.obstacle_keepout);
        let (sp, ep) = loop {
            let sp = self.uniform_point(rng, inner);
            let ep = self.uniform_point(rng, inner);
            if sp.distance(ep) >= self.min_separation && clear(sp) && clear(ep) {
                break (sp, ep);
            }
        };
        let sv = self.velocity(rng);
        let ev = self.velocity(rng);
        let j = self.j_choices[rng.random_range(0..self.j_choices.len())];
        PlanningScenario { sp, ep, sv, ev, obstacles, j }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn scenario() -> PlanningScenario {
        PlanningScenario {
            sp: Vec2::new(-500.0, 0.0),
            ep: Vec2::new(500.0, 250.0),
            sv: Vec2::new(100.0, 0.0),
            ev: Vec2::ZERO,
            obstacles: vec![Vec2::new(100.0, 0.0), Vec2::new(-100.0, 300.0)],
            j: 1,
        }
    }

    #[test]
    fn feature_layout() {
        let f = scenario().features(Vec2::new(1000.0, 1000.0), 200.0);
        assert_eq!(f.0.len(), FEATURE_DIM);
        assert_eq!(&f.0[..8], &[-0.5, 0.0, 0.5, 0.25, 0.5, 0.0, 0.0, 0.0]);
        // obstacles sorted by x
        assert_eq!(&f.0[8..12], &[-0.1, 0.3, 0.1, 0.0]);
        assert!(f.0[12..].iter().all(|v| *v == 2.0));
    }

    #[test]
    fn features_invariant_to_unit_change() {
        let s = scenario();
        let scaled = PlanningScenario {
            sp: s.sp * 10.0,
            ep: s.ep * 10.0,
            obstacles: s.obstacles.iter().map(|o| *o * 10.0).collect(),
            ..s.clone()
        };
        let a = s.features(Vec2::new(1000.0, 1000.0), 200.0);
        let b = scaled.features(Vec2::new(10000.0, 10000.0), 200.0);
        for (x, y) in a.0.iter().zip(&b.0) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn validation() {
        let h = Vec2::new(1000.0, 1000.0);
        assert!(scenario().validate(h).is_ok());
        assert!(PlanningScenario { ep: Vec2::new(-500.0, 0.0), ..scenario() }.validate(h).is_err());
        assert!(PlanningScenario { ep: Vec2::new(1500.0, 0.0), ..scenario() }.validate(h).is_err());
        assert!(PlanningScenario { obstacles: vec![Vec2::ZERO; 6], ..scenario() }.validate(h).is_err());
        assert!(PlanningScenario { j: 0, ..scenario() }.validate(h).is_err());
    }

    #[test]
    fn generated_scenarios_are_valid() {
        let g = ScenarioGenerator::new(Vec2::new(1000.0, 1000.0), 200.0);
        let mut r = rng::stream(1, "scenario", 0);
        for _ in 0..200 {
            let s = g.generate(&mut r);
            s.validate(g.half_extents).unwrap();
            assert!(s.sv.norm() <= 100.0 + 1e-9 && s.ev.norm() <= 100.0 + 1e-9);
            assert!(s.obstacles.iter().all(|o| o.distance(s.sp) >= 35.0 && o.distance(s.ep) >= 35.0));
            assert!(s.j == 1 || s.j == 2);
        }
    }
}
