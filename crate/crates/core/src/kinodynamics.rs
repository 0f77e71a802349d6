//! Planning points, per-point velocity caps and forward-backward velocity
//! profiling.

use serde::{Deserialize, Serialize};

use crate::error::{PlannerError, Result};
use crate::geometry::Vec2;
use crate::splines::{self, ArcLengthMap, Spline2D};

/// Default number of planning points per trajectory.
pub const DEFAULT_PLANNING_POINTS: usize = 200;

/// Robot limits used by the velocity profiler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinodynamicLimits {
    /// Translational speed cap, cm/s.
    pub v_max: f64,
    /// Rotational speed cap, rad/s.
    pub omega_max: f64,
    /// Tangential acceleration cap, cm/s².
    pub a_t_max: f64,
    /// Slope of the slip-limited radial acceleration regression, (cm/s²)/cm.
    pub a_rad_slope: f64,
    /// Intercept of the slip regression, cm/s².
    pub a_rad_intercept: f64,
    /// The slip cap applies only to turn radii below this value, cm.
    pub a_rad_valid_radius: f64,
}

impl Default for KinodynamicLimits {
    fn default() -> Self {
        KinodynamicLimits {
            v_max: 200.0,
            omega_max: 10.0,
            a_t_max: 300.0,
            a_rad_slope: -5.92,
            a_rad_intercept: 700.0,
            a_rad_valid_radius: 100.0,
        }
    }
}

impl KinodynamicLimits {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_max > 0.0 && self.omega_max > 0.0 && self.a_t_max > 0.0) {
            return Err(PlannerError::invalid(format!(
                "limits must be positive: v_max={}, omega_max={}, a_t_max={}",
                self.v_max, self.omega_max, self.a_t_max
            )));
        }
        if !(self.a_rad_slope.is_finite() && self.a_rad_intercept.is_finite() && self.a_rad_valid_radius >= 0.0) {
            return Err(PlannerError::invalid("slip model parameters must be finite"));
        }
        Ok(())
    }

    /// Radial acceleration at the slipping point for turn radius `r` (cm).
    pub fn radial_acceleration(&self, r: f64) -> f64 {
        self.a_rad_slope * r + self.a_rad_intercept
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanningPoint {
    pub index: usize,
    pub position: Vec2,
    /// Arc length from the trajectory start, cm.
    pub arc_s: f64,
    /// Signed curvature, 1/cm.
    pub kappa: f64,
    /// Global spline parameter of this point.
    pub param: f64,
}

/// Samples `n_points` planning points equidistant in arc length.
pub fn sample_planning_points(spline: &Spline2D, map: &ArcLengthMap, n_points: usize) -> Result<Vec<PlanningPoint>> {
    if n_points < 2 {
        return Err(PlannerError::invalid(format!("need at least 2 planning points, got {n_points}")));
    }
    let total = map.total_length();
    let last = (n_points - 1) as f64;
    (0..n_points)
        .map(|index| {
            let arc_s = total * index as f64 / last;
            let param = if index + 1 == n_points { spline.param_max() } else { map.eval_unchecked(arc_s) };
            let sp = spline.eval_unchecked(param);
            let kappa = splines::curvature_of(&sp, param)?;
            Ok(PlanningPoint { index, position: sp.point, arc_s, kappa, param })
        })
        .collect()
}

/// Highest admissible speed at a planning point, cm/s.
pub fn velocity_cap(point: &PlanningPoint, limits: &KinodynamicLimits) -> f64 {
    let curvature = point.kappa.abs();
    if curvature == 0.0 {
        return limits.v_max;
    }
    let mut cap = limits.v_max.min(limits.omega_max / curvature);
    let radius = 1.0 / curvature;
    if radius < limits.a_rad_valid_radius {
        let slip = (limits.radial_acceleration(radius).max(0.0) * radius).sqrt();
        cap = cap.min(slip);
    }
    cap
}

/// Per-point velocities and cumulative times along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityProfile {
    pub velocities: Vec<f64>,
    pub times: Vec<f64>,
    /// Spacing between planning points, cm.
    pub delta_s: f64,
    pub total_time: f64,
}

impl VelocityProfile {
    /// Accumulates times assuming constant acceleration between points.
    pub fn from_velocities(velocities: Vec<f64>, delta_s: f64) -> Result<Self> {
        if velocities.is_empty() {
            return Err(PlannerError::invalid("empty velocity list"));
        }
        let mut times = Vec::with_capacity(velocities.len());
        times.push(0.0);
        let mut t = 0.0;
        for (i, w) in velocities.windows(2).enumerate() {
            let sum = w[0] + w[1];
            if !(sum > 0.0) {
                return Err(PlannerError::InfeasibleProfile(format!("stalled between points {i} and {}", i + 1)));
            }
            t += 2.0 * delta_s / sum;
            times.push(t);
        }
        Ok(VelocityProfile { velocities, times, delta_s, total_time: t })
    }

    pub fn len(&self) -> usize {
        self.velocities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocities.is_empty()
    }

    /// Arc length of planning point `i`.
    pub fn arc_at(&self, i: usize) -> f64 {
        i as f64 * self.delta_s
    }
}

pub fn traversal_time(profile: &VelocityProfile) -> f64 {
    profile.total_time
}

/// Forward-backward pass over precomputed caps, in place.
pub fn forward_backward(velocities: &mut [f64], a_t_max: f64, delta_s: f64) {
    let window = 2.0 * a_t_max * delta_s;
    for i in 0..velocities.len().saturating_sub(1) {
        let reach = (velocities[i] * velocities[i] + window).sqrt();
        if velocities[i + 1] > reach {
            velocities[i + 1] = reach;
        }
    }
    for i in (0..velocities.len().saturating_sub(1)).rev() {
        let reach = (velocities[i + 1] * velocities[i + 1] + window).sqrt();
        if velocities[i] > reach {
            velocities[i] = reach;
        }
    }
}

/// Assigns the fastest admissible speed to every planning point.
///
/// Starts from the per-point caps, pins the end speeds, then limits the
/// speed change between neighbours to the constant-acceleration window
/// `|v'² - v²| ≤ 2·a_t_max·Δs`, first forwards and then backwards.
pub fn profile_velocities(
    points: &[PlanningPoint],
    v_start: f64,
    v_end: f64,
    limits: &KinodynamicLimits,
) -> Result<VelocityProfile> {
    if points.len() < 2 {
        return Err(PlannerError::invalid("need at least 2 planning points"));
    }
    if !(v_start >= 0.0 && v_end >= 0.0) {
        return Err(PlannerError::invalid(format!("end speeds must be non-negative: {v_start}, {v_end}")));
    }
    let delta_s = points[1].arc_s - points[0].arc_s;
    let mut v: Vec<f64> = points.iter().map(|p| velocity_cap(p, limits)).collect();
    let last = v.len() - 1;
    const TOL: f64 = 1e-6;
    if v_start > v[0] + TOL {
        return Err(PlannerError::InfeasibleProfile(format!("start speed {v_start} exceeds cap {}", v[0])));
    }
    if v_end > v[last] + TOL {
        return Err(PlannerError::InfeasibleProfile(format!("end speed {v_end} exceeds cap {}", v[last])));
    }
    v[0] = v_start;
    v[last] = v_end;
    forward_backward(&mut v, limits.a_t_max, delta_s);
    if v[0] < v_start - TOL {
        return Err(PlannerError::InfeasibleProfile(format!(
            "cannot slow from {v_start} to reach the end speed; start limited to {}",
            v[0]
        )));
    }
    if v[last] < v_end - TOL {
        return Err(PlannerError::InfeasibleProfile(format!(
            "end speed {v_end} unreachable; at most {}",
            v[last]
        )));
    }
    VelocityProfile::from_velocities(v, delta_s)
}
