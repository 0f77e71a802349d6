//! Trajectory planning for differential-drive soccer robots.
//!
//! Trajectories are end-slope cubic Bézier splines through a handful of
//! control points. A forward-backward velocity profiler turns a spline into a
//! traversal time under curvature, slip and acceleration limits, and that time
//! is minimised over control-point placement with Gaussian-process Bayesian
//! optimisation. Optimised scenarios are stored in a prior database; at run
//! time the k nearest stored scenarios (L1 distance over normalised features)
//! warm-start a short online optimisation.
//!
//! Module map:
//!
//! - [`splines`]: spline fitting, evaluation, curvature and arc-length maps.
//! - [`kinodynamics`]: planning points, velocity caps and profiling.
//! - [`bayesopt`]: GP surrogate, acquisitions, the BO loop, PSO baseline and
//!   the traversal-time objective.
//! - [`prior_db`]: scenarios, features, the record database and prior reuse.
//! - [`simulator`]: unicycle simulation, tracking controller and metrics.
//! - [`experiments`]: benchmark harnesses used by the command-line tool.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bayesopt;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod kinodynamics;
pub mod prior_db;
pub mod rng;
pub mod simulator;
pub mod splines;
pub mod table;

pub use error::{PlannerError, Result};
pub use geometry::Vec2;
