use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::prior_db::PriorInit;
use crate::rng;

use super::acquisition::{maximize_acquisition, AcquisitionKind, AcquisitionSearch};
use super::gp::{gp_fit, optimize_hyperparams_within, GpModel, HyperBounds};
use super::kernel::{GpHyperparams, KernelKind};
use super::lhs::latin_hypercube;
use super::{Bounds, ControlPointSet, ObjectiveFn, OptimizationResult};

/// Default size of the Latin hypercube initial design.
pub const DEFAULT_LHS_POINTS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct BoSettings {
    pub kernel: KernelKind,
    pub acquisition: AcquisitionKind,
    /// Hyperparameters are refit on every `refit_every`-th acquisition step.
    pub refit_every: usize,
    pub hyper_restarts: usize,
    pub hyper_bounds: HyperBounds,
    pub search: AcquisitionSearch,
}

impl Default for BoSettings {
    fn default() -> Self {
        BoSettings {
            kernel: KernelKind::Matern52Ard,
            acquisition: AcquisitionKind::Ei,
            refit_every: 5,
            hyper_restarts: 1,
            hyper_bounds: HyperBounds::default(),
            search: AcquisitionSearch::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Initialization {
    /// Cold start from a Latin hypercube design of the given size.
    Lhs(usize),
    /// Warm start: evaluate the seed points, start refits from the prior
    /// hyperparameters.
    Prior(PriorInit),
}

impl Default for Initialization {
    fn default() -> Self {
        Initialization::Lhs(DEFAULT_LHS_POINTS)
    }
}

/// Data-scaled starting hyperparameters for a cold run.
pub(crate) fn cold_hyper(ys: &[f64], bounds: &Bounds, settings: &BoSettings) -> GpHyperparams {
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let var = ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n;
    let hb = &settings.hyper_bounds;
    GpHyperparams {
        mean,
        amplitude: var.sqrt().clamp(hb.amplitude.0.max(1e-2), hb.amplitude.1),
        length_scales: (0..bounds.dim())
            .map(|i| (0.25 * bounds.range(i)).clamp(hb.length_scale.0, hb.length_scale.1))
            .collect(),
        noise: 1e-3_f64.clamp(hb.noise.0, hb.noise.1),
        kernel: settings.kernel,
    }
}

/// Fits the surrogate, raising the noise when the kernel matrix will not
/// factorise.
fn fit_with_fallback(xs: &[ControlPointSet], ys: &[f64], hyper: &GpHyperparams) -> Option<GpModel> {
    let mut h = hyper.clone();
    for _ in 0..4 {
        match gp_fit(xs, ys, &h) {
            Ok(m) => return Some(m),
            Err(_) => h.noise = (h.noise * 10.0).max(1e-4),
        }
    }
    None
}

/// Gaussian-process Bayesian optimisation of `objective` over `bounds` with
/// `budget` evaluations in total, initial design included.
///
/// Every acquisition step draws its candidates from a sub-stream keyed by
/// the evaluation index, so the first evaluations of a long run coincide
/// with a shorter run under the same seed.
pub fn bayesopt_minimize(
    objective: &dyn ObjectiveFn,
    bounds: &Bounds,
    budget: usize,
    init: &Initialization,
    settings: &BoSettings,
    seed: u64,
) -> OptimizationResult {
    assert!(budget >= 1, "budget must be at least one evaluation");
    let design: Vec<ControlPointSet> = match init {
        Initialization::Lhs(count) => {
            latin_hypercube((*count).max(1), bounds, &mut rng::stream(seed, "lhs", 0))
        }
        Initialization::Prior(prior) if !prior.seed_points.is_empty() => prior
            .seed_points
            .iter()
            .map(|p| {
                let mut q = p.clone();
                bounds.clip(&mut q.0);
                q
            })
            .collect(),
        Initialization::Prior(_) => latin_hypercube(1, bounds, &mut rng::stream(seed, "lhs", 0)),
    };

    let mut xs: Vec<ControlPointSet> = Vec::with_capacity(budget);
    let mut ys: Vec<f64> = Vec::with_capacity(budget);
    for p in design.into_iter().take(budget) {
        ys.push(objective.evaluate(p.as_slice()));
        xs.push(p);
    }

    let prior_hyper = match init {
        Initialization::Prior(prior) if prior.hyper.dim() == bounds.dim() => {
            let mut h = prior.hyper.clone();
            h.kernel = settings.kernel;
            Some(h)
        }
        _ => None,
    };
    let mut hyper: Option<GpHyperparams> = None;
    let mut step = 0;
    while xs.len() < budget {
        let k = xs.len();
        let mut acq_rng = rng::stream(seed, "acq", k as u64);
        if hyper.is_none() || step % settings.refit_every.max(1) == 0 {
            let start = prior_hyper.clone().unwrap_or_else(|| cold_hyper(&ys, bounds, settings));
            hyper = Some(optimize_hyperparams_within(
                &xs,
                &ys,
                &start,
                settings.hyper_restarts,
                &settings.hyper_bounds,
            ));
        }
        step += 1;
        let h = hyper.as_ref().expect("hyperparameters set above");
        let next = match fit_with_fallback(&xs, &ys, h) {
            Some(model) => {
                let best_y = ys.iter().copied().fold(f64::INFINITY, f64::min);
                maximize_acquisition(&model, bounds, settings.acquisition, best_y, &settings.search, &mut acq_rng)
            }
            None => ControlPointSet(
                (0..bounds.dim()).map(|i| acq_rng.random_range(bounds.lower[i]..=bounds.upper[i])).collect(),
            ),
        };
        ys.push(objective.evaluate(next.as_slice()));
        xs.push(next);
    }

    OptimizationResult::from_history(xs.into_iter().zip(ys).collect(), hyper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::Cell;

    fn quadratic(p: &[f64]) -> f64 {
        (p[0] - 3.0).powi(2)
    }

    #[test]
    fn finds_quadratic_minimum() {
        let bounds = Bounds::uniform(1, -10.0, 10.0);
        let r = bayesopt_minimize(&quadratic, &bounds, 30, &Initialization::default(), &BoSettings::default(), 3);
        assert!((r.best_point.0[0] - 3.0).abs() < 0.1, "{:?}", r.best_point);
        assert_eq!(r.evaluations_used, 30);
    }

    #[test]
    fn constant_objective() {
        let bounds = Bounds::uniform(2, -1.0, 1.0);
        let r = bayesopt_minimize(&|_: &[f64]| 4.5, &bounds, 14, &Initialization::Lhs(5), &BoSettings::default(), 1);
        assert_eq!(r.best_value, 4.5);
        assert!(bounds.contains(r.best_point.as_slice()));
    }

    #[test]
    fn one_acquisition_step() {
        let calls = Cell::new(0);
        let f = |p: &[f64]| {
            calls.set(calls.get() + 1);
            p[0] * p[0]
        };
        let bounds = Bounds::uniform(1, -1.0, 1.0);
        let r = bayesopt_minimize(&f, &bounds, 6, &Initialization::Lhs(5), &BoSettings::default(), 9);
        assert_eq!(calls.get(), 6);
        assert_eq!(r.history.len(), 6);
        assert!(r.hyper.is_some());
    }

    #[test]
    fn longer_runs_extend_shorter_ones() {
        let bounds = Bounds::uniform(2, -5.0, 5.0);
        let f = |p: &[f64]| (p[0] - 1.0).powi(2) + (p[1] + 2.0).powi(2);
        let short = bayesopt_minimize(&f, &bounds, 15, &Initialization::default(), &BoSettings::default(), 4);
        let long = bayesopt_minimize(&f, &bounds, 20, &Initialization::default(), &BoSettings::default(), 4);
        assert_eq!(short.history[..], long.history[..15]);
    }

    #[test]
    fn incumbent_never_increases() {
        let bounds = Bounds::uniform(2, -5.0, 5.0);
        let f = |p: &[f64]| (p[0] * 1.3).sin() + (p[1] * 0.7).cos();
        let r = bayesopt_minimize(&f, &bounds, 25, &Initialization::default(), &BoSettings::default(), 8);
        let curve = r.incumbent_curve();
        assert!(curve.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*curve.last().unwrap(), r.best_value);
    }
}
