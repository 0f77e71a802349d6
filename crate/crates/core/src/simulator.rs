//! Unicycle simulation with command delay and observation noise, the
//! nonlinear tracking controller, and tracking and clearance metrics.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bayesopt::{Trajectory, COMBINED_RADIUS};
use crate::geometry::{wrap_angle, Vec2};
use crate::kinodynamics::KinodynamicLimits;
use crate::rng;
use crate::splines::Spline2D;
use crate::table::{format_g, Table};

/// Pose and the velocities currently applied.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v_l: f64,
    pub v_w: f64,
}

impl RobotState {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

/// Tracking controller gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerParams {
    /// Damping coefficient.
    pub zeta: f64,
    /// Gain parameter in 1/m²; positions are in cm, so it enters the control
    /// law scaled by 1e-4.
    pub g: f64,
}

impl Default for TrackerParams {
    fn default() -> Self {
        TrackerParams { zeta: 0.7, g: 40.0 }
    }
}

const G_PER_CM2: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Control period, s.
    pub dt: f64,
    /// Commands reach the robot this many ticks after being issued.
    pub delay_packets: usize,
    /// Standard deviation of the observed position, cm.
    pub pos_noise_sigma: f64,
    /// Standard deviation of the observed heading, rad.
    pub theta_noise_sigma: f64,
    /// Simulation continues this long after the planned arrival, s.
    pub settle_time: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.016,
            delay_packets: 4,
            pos_noise_sigma: 0.5,
            theta_noise_sigma: 0.017,
            settle_time: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub planned: RobotState,
    pub actual: RobotState,
    /// Command applied by the robot during this tick.
    pub command_v: f64,
    pub command_w: f64,
    /// Command issued by the controller during this tick.
    pub issued_v: f64,
    pub issued_w: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SimTrace {
    pub samples: Vec<TraceSample>,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["t", "x_p", "y_p", "theta_p", "x_a", "y_a", "theta_a", "cmd_v", "cmd_w"]);
        for s in &self.samples {
            t.push(
                [
                    s.t,
                    s.planned.x,
                    s.planned.y,
                    s.planned.theta,
                    s.actual.x,
                    s.actual.y,
                    s.actual.theta,
                    s.command_v,
                    s.command_w,
                ]
                .iter()
                .map(|v| format_g(*v))
                .collect(),
            );
        }
        t
    }

    pub fn to_csv(&self) -> String {
        self.to_table().to_csv()
    }
}

/// Advances a unicycle by `dt` under constant commands, clamped to the
/// limits, integrating the arc exactly.
pub fn step_kinematics(state: RobotState, v: f64, w: f64, dt: f64, limits: &KinodynamicLimits) -> RobotState {
    let v = v.clamp(-limits.v_max, limits.v_max);
    let w = w.clamp(-limits.omega_max, limits.omega_max);
    let (x, y, theta) = if w.abs() < 1e-9 {
        (state.x + v * dt * state.theta.cos(), state.y + v * dt * state.theta.sin(), state.theta)
    } else {
        let theta = state.theta + w * dt;
        let r = v / w;
        (
            state.x + r * (theta.sin() - state.theta.sin()),
            state.y - r * (theta.cos() - state.theta.cos()),
            theta,
        )
    };
    RobotState { x, y, theta: wrap_angle(theta), v_l: v, v_w: w }
}

/// Controller output `(v, w)` for the observed state against a reference
/// with feed-forward velocities `u_r1` (cm/s) and `u_r2` (rad/s).
///
/// Errors are expressed in the reference frame.
pub fn tracker_control(actual: &RobotState, reference: &RobotState, u_r1: f64, u_r2: f64, params: &TrackerParams) -> (f64, f64) {
    let (dx, dy) = (reference.x - actual.x, reference.y - actual.y);
    let (s, c) = reference.theta.sin_cos();
    let e1 = c * dx + s * dy;
    let e2 = -s * dx + c * dy;
    let e3 = wrap_angle(reference.theta - actual.theta);
    let g = params.g * G_PER_CM2;
    let omega_n = (u_r2 * u_r2 + g * u_r1 * u_r1).sqrt();
    let k1 = 2.0 * params.zeta * omega_n;
    let k2 = g * u_r1.abs();
    let k3 = k1;
    let v = u_r1 * e3.cos() + k1 * e1;
    let w = u_r2 + u_r1.signum() * k2 * e2 + k3 * e3;
    // signum(0.0) is 1, but k2 vanishes with u_r1 so the sign is moot
    (v, w)
}

/// Reference state and feed-forward `(u_r1, u_r2)` at time `t`.
fn reference_at(trajectory: &Trajectory, t: f64) -> (RobotState, f64, f64) {
    let profile = &trajectory.profile;
    let times = &profile.times;
    let last = times.len() - 1;
    let (s, speed) = if t >= profile.total_time {
        (trajectory.map.total_length(), 0.0)
    } else {
        let i = times.partition_point(|&ti| ti <= t).saturating_sub(1).min(last - 1);
        let span = times[i + 1] - times[i];
        let f = if span > 0.0 { ((t - times[i]) / span).clamp(0.0, 1.0) } else { 0.0 };
        let s = profile.arc_at(i) + f * profile.delta_s;
        let v = profile.velocities[i] + f * (profile.velocities[i + 1] - profile.velocities[i]);
        (s, v)
    };
    let u = trajectory.map.eval_unchecked(s);
    let p = trajectory.spline.eval_unchecked(u);
    let kappa = crate::splines::curvature_of(&p, u).unwrap_or(0.0);
    let theta = if p.d1.norm() > 1e-12 { p.d1.angle() } else { heading_near(&trajectory.spline, u) };
    let w = speed * kappa;
    (RobotState { x: p.point.x, y: p.point.y, theta, v_l: speed, v_w: w }, speed, w)
}

/// Heading at a cusp, taken from a nearby parameter.
fn heading_near(spline: &Spline2D, u: f64) -> f64 {
    let eps = 1e-6;
    let v = if u + eps <= spline.param_max() {
        spline.eval_unchecked(u + eps).point - spline.eval_unchecked(u).point
    } else {
        spline.eval_unchecked(u).point - spline.eval_unchecked(u - eps).point
    };
    v.angle()
}

/// Closed-loop simulation of tracking `trajectory` from its start pose.
pub fn simulate_tracking(
    trajectory: &Trajectory,
    limits: &KinodynamicLimits,
    params: &TrackerParams,
    config: &SimConfig,
) -> SimTrace {
    let (start, _, _) = reference_at(trajectory, 0.0);
    let mut actual = start;
    let mut noise = rng::stream(config.seed, "sim-noise", 0);
    let mut queue: VecDeque<(f64, f64)> = VecDeque::with_capacity(config.delay_packets + 1);
    let ticks = ((trajectory.profile.total_time + config.settle_time) / config.dt).ceil() as usize + 1;
    let mut samples = Vec::with_capacity(ticks);
    for k in 0..ticks {
        let t = k as f64 * config.dt;
        let (reference, u_r1, u_r2) = reference_at(trajectory, t);
        let nx: f64 = noise.sample(StandardNormal);
        let ny: f64 = noise.sample(StandardNormal);
        let nt: f64 = noise.sample(StandardNormal);
        let observed = RobotState {
            x: actual.x + config.pos_noise_sigma * nx,
            y: actual.y + config.pos_noise_sigma * ny,
            theta: wrap_angle(actual.theta + config.theta_noise_sigma * nt),
            ..actual
        };
        let issued = tracker_control(&observed, &reference, u_r1, u_r2, params);
        queue.push_back(issued);
        let applied = if queue.len() > config.delay_packets { queue.pop_front().unwrap_or_default() } else { (0.0, 0.0) };
        samples.push(TraceSample {
            t,
            planned: reference,
            actual,
            command_v: applied.0,
            command_w: applied.1,
            issued_v: issued.0,
            issued_w: issued.1,
        });
        actual = step_kinematics(actual, applied.0, applied.1, config.dt, limits);
    }
    SimTrace { samples }
}

/// Natural log of the mean Euclidean distance between planned and actual
/// positions, floored by 1e-9 inside the log.
pub fn tracking_error(trace: &SimTrace) -> f64 {
    let n = trace.samples.len().max(1) as f64;
    let total: f64 = trace.samples.iter().map(|s| s.planned.position().distance(s.actual.position())).sum();
    (total / n + 1e-9).ln()
}

/// Reported clearance when there are no obstacles, cm.
pub const NO_OBSTACLE_CLEARANCE: f64 = 1e9;

/// Smallest distance from `samples` equally spaced parameter values along
/// the spline to any obstacle, minus [`COMBINED_RADIUS`]. Negative values
/// mean collision.
pub fn clearance(spline: &Spline2D, obstacles: &[Vec2], samples: usize) -> f64 {
    if obstacles.is_empty() {
        return NO_OBSTACLE_CLEARANCE;
    }
    let n = samples.max(2);
    let umax = spline.param_max();
    (0..n)
        .map(|i| {
            let p = spline.eval_unchecked(umax * i as f64 / (n - 1) as f64).point;
            obstacles.iter().map(|o| o.distance(p)).fold(f64::INFINITY, f64::min) - COMBINED_RADIUS
        })
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayesopt::Objective;
    use crate::prior_db::PlanningScenario;
    use crate::splines;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn limits() -> KinodynamicLimits {
        KinodynamicLimits::default()
    }

    #[test]
    fn straight_step() {
        let s = step_kinematics(RobotState::default(), 100.0, 0.0, 0.016, &limits());
        assert_abs_diff_eq!(s.x, 1.6, epsilon = 1e-12);
        assert_eq!((s.y, s.theta), (0.0, 0.0));
    }

    #[test]
    fn spin_in_place() {
        let lim = KinodynamicLimits { omega_max: 10.0, ..limits() };
        let s = step_kinematics(RobotState::default(), 0.0, PI, 1.0, &lim);
        assert_abs_diff_eq!(s.theta, PI, epsilon = 1e-12);
        assert_eq!((s.x, s.y), (0.0, 0.0));
    }

    #[test]
    fn commands_are_clamped() {
        let s = step_kinematics(RobotState::default(), 1e4, 1e3, 0.01, &limits());
        assert_eq!((s.v_l, s.v_w), (200.0, 10.0));
    }

    #[test]
    fn zero_error_passthrough() {
        let st = RobotState { x: 3.0, y: -2.0, theta: 0.4, v_l: 0.0, v_w: 0.0 };
        assert_eq!(tracker_control(&st, &st, 120.0, 0.7, &TrackerParams::default()), (120.0, 0.7));
    }

    #[test]
    fn gains_for_pure_rotation() {
        // u_r1 = 0, u_r2 = 2: ω_n = 2, k1 = k3 = 2.8, k2 = 0
        let r = RobotState::default();
        let a = RobotState { x: -1.0, y: -1.0, theta: -0.1, ..r };
        let (v, w) = tracker_control(&a, &r, 0.0, 2.0, &TrackerParams { zeta: 0.7, g: 40.0 });
        assert_abs_diff_eq!(v, 2.8, epsilon = 1e-12);
        assert_abs_diff_eq!(w, 2.0 + 2.8 * 0.1, epsilon = 1e-12);
    }

    #[test]
    fn te_values() {
        let sample = |d: f64| TraceSample {
            t: 0.0,
            planned: RobotState::default(),
            actual: RobotState { x: d, ..Default::default() },
            command_v: 0.0,
            command_w: 0.0,
            issued_v: 0.0,
            issued_w: 0.0,
        };
        let ones = SimTrace { samples: vec![sample(1.0); 7] };
        assert_abs_diff_eq!(tracking_error(&ones), 0.0, epsilon = 1e-6);
        let perfect = SimTrace { samples: vec![sample(0.0); 3] };
        assert_abs_diff_eq!(tracking_error(&perfect), 1e-9_f64.ln(), epsilon = 1e-12);
        let three = SimTrace { samples: vec![sample(1.0), sample(2.0), sample(3.0)] };
        assert_abs_diff_eq!(tracking_error(&three), (2.0 + 1e-9_f64).ln(), epsilon = 1e-12);
    }

    fn line() -> Spline2D {
        splines::fit_end_slope_spline(&[Vec2::ZERO, Vec2::new(100.0, 0.0)], Vec2::ZERO, Vec2::ZERO).unwrap()
    }

    #[test]
    fn clearance_examples() {
        assert_abs_diff_eq!(clearance(&line(), &[Vec2::new(50.0, 0.0)], 101), -COMBINED_RADIUS, epsilon = 1e-9);
        assert_eq!(clearance(&line(), &[], 10), NO_OBSTACLE_CLEARANCE);
        assert_abs_diff_eq!(clearance(&line(), &[Vec2::new(50.0, 20.0)], 101), 9.0, epsilon = 1e-9);
    }

    fn trajectory() -> Trajectory {
        let scenario = PlanningScenario {
            sp: Vec2::new(-300.0, -100.0),
            ep: Vec2::new(300.0, 150.0),
            sv: Vec2::new(80.0, 30.0),
            ev: Vec2::ZERO,
            obstacles: vec![],
            j: 1,
        };
        Objective::new(scenario, limits(), Vec2::new(1000.0, 1000.0)).trajectory(&[0.0, 100.0]).unwrap()
    }

    #[test]
    fn delay_shifts_commands() {
        let traj = trajectory();
        let quiet = SimConfig { pos_noise_sigma: 0.0, theta_noise_sigma: 0.0, ..Default::default() };
        let trace = simulate_tracking(&traj, &limits(), &TrackerParams::default(), &quiet);
        for (k, s) in trace.samples.iter().enumerate() {
            if k < 4 {
                assert_eq!((s.command_v, s.command_w), (0.0, 0.0));
            } else {
                let src = &trace.samples[k - 4];
                assert_eq!((s.command_v, s.command_w), (src.issued_v, src.issued_w));
            }
        }
        assert!(trace.samples[4].command_v != 0.0 || trace.samples[4].command_w != 0.0);
        assert!(trace.samples.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn noiseless_tracking_reaches_end() {
        let traj = trajectory();
        let cfg = SimConfig { delay_packets: 0, pos_noise_sigma: 0.0, theta_noise_sigma: 0.0, ..Default::default() };
        let trace = simulate_tracking(&traj, &limits(), &TrackerParams::default(), &cfg);
        let end = trace.samples.last().unwrap().actual.position();
        assert!(end.distance(Vec2::new(300.0, 150.0)) < 5.0, "{end:?}");
        assert!(tracking_error(&trace) < 0.0);
    }

    #[test]
    fn noise_enters_at_first_observation() {
        let traj = trajectory();
        let base = SimConfig { delay_packets: 0, pos_noise_sigma: 0.0, theta_noise_sigma: 0.0, ..Default::default() };
        let noisy = SimConfig { pos_noise_sigma: 0.5, ..base };
        let a = simulate_tracking(&traj, &limits(), &TrackerParams::default(), &base);
        let b = simulate_tracking(&traj, &limits(), &TrackerParams::default(), &noisy);
        assert_eq!(a.samples[0].actual, b.samples[0].actual);
        assert_ne!(a.samples[0].issued_v, b.samples[0].issued_v);
        assert_ne!(a.samples[1].actual, b.samples[1].actual);
    }

    #[test]
    fn trace_csv_header() {
        let traj = trajectory();
        let trace = simulate_tracking(&traj, &limits(), &TrackerParams::default(), &SimConfig::default());
        let csv = trace.to_csv();
        assert!(csv.starts_with("t,x_p,y_p,theta_p,x_a,y_a,theta_a,cmd_v,cmd_w\n"));
        assert_eq!(csv.lines().count(), trace.len() + 1);
    }
}
