//! Gaussian-process Bayesian optimisation over control-point placements.
//!
//! The surrogate is a constant-mean GP with an ARD stationary kernel whose
//! hyperparameters are refit by marginal-likelihood maximisation. Everything
//! is phrased as minimisation: lower traversal time is better, and every
//! acquisition score is "larger means more worth sampling".

mod acquisition;
mod gp;
mod kernel;
mod lhs;
mod objective;
mod optimizer;
mod pso;

use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;

pub use acquisition::{acquisition, maximize_acquisition, normal_cdf, normal_pdf, AcquisitionKind, AcquisitionSearch};
pub use gp::{gp_fit, log_marginal_likelihood, optimize_hyperparams, optimize_hyperparams_within, GpModel, HyperBounds};
pub use kernel::{kernel, GpHyperparams, KernelKind};
pub use lhs::latin_hypercube;
pub use objective::{
    evaluate_objective, Objective, Trajectory, COMBINED_RADIUS, DEFAULT_PENALTY, INFEASIBLE_VALUE,
};
pub use optimizer::{bayesopt_minimize, BoSettings, Initialization, DEFAULT_LHS_POINTS};
pub(crate) use optimizer::cold_hyper;
pub use pso::{pso_minimize, PsoSettings};

/// Flat control-point coordinates `[x1, y1, x2, y2, ...]`, cm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ControlPointSet(pub Vec<f64>);

impl ControlPointSet {
    pub fn from_points(points: &[Vec2]) -> Self {
        ControlPointSet(points.iter().flat_map(|p| [p.x, p.y]).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Number of control points `j`.
    pub fn count(&self) -> usize {
        self.0.len() / 2
    }

    pub fn points(&self) -> Vec<Vec2> {
        points_of(&self.0)
    }
}

pub(crate) fn points_of(coords: &[f64]) -> Vec<Vec2> {
    coords.chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect()
}

/// Axis-aligned search box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len(), "bound dimensions differ");
        assert!(lower.iter().zip(&upper).all(|(l, u)| l < u), "empty bound interval");
        Bounds { lower, upper }
    }

    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Self {
        Bounds::new(vec![lower; dim], vec![upper; dim])
    }

    /// Box for `j` control points inside a field of the given half extents.
    pub fn for_control_points(j: usize, half_extents: Vec2) -> Self {
        let lower = (0..j).flat_map(|_| [-half_extents.x, -half_extents.y]).collect();
        let upper = (0..j).flat_map(|_| [half_extents.x, half_extents.y]).collect();
        Bounds::new(lower, upper)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn range(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().enumerate().all(|(i, &v)| v >= self.lower[i] && v <= self.upper[i])
    }

    pub fn clip(&self, p: &mut [f64]) {
        for (i, v) in p.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
    }
}

/// Anything that maps a point to a value to be minimised.
pub trait ObjectiveFn {
    fn evaluate(&self, p: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64> ObjectiveFn for F {
    fn evaluate(&self, p: &[f64]) -> f64 {
        self(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best_point: ControlPointSet,
    pub best_value: f64,
    /// Every evaluation in order.
    pub history: Vec<(ControlPointSet, f64)>,
    pub evaluations_used: usize,
    /// Hyperparameters of the last surrogate fit, when a surrogate was used.
    pub hyper: Option<GpHyperparams>,
}

impl OptimizationResult {
    pub(crate) fn from_history(history: Vec<(ControlPointSet, f64)>, hyper: Option<GpHyperparams>) -> Self {
        let mut best = 0;
        for (i, (_, y)) in history.iter().enumerate() {
            if *y < history[best].1 {
                best = i;
            }
        }
        let (best_point, best_value) = history.get(best).cloned().expect("optimisation history is empty");
        OptimizationResult { best_point, best_value, evaluations_used: history.len(), history, hyper }
    }

    /// Best value seen after each evaluation.
    pub fn incumbent_curve(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.history
            .iter()
            .map(|(_, y)| {
                best = best.min(*y);
                best
            })
            .collect()
    }

    /// 1-based evaluation index at which the incumbent first drops to
    /// `threshold` or below.
    pub fn evaluations_to_reach(&self, threshold: f64) -> Option<usize> {
        self.incumbent_curve().iter().position(|&b| b <= threshold).map(|i| i + 1)
    }
}
