use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng;

use super::{Bounds, ControlPointSet, ObjectiveFn, OptimizationResult};

/// Global-best particle swarm parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsoSettings {
    pub particles: usize,
    /// Iterations including the initial evaluation of the swarm.
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Velocity limit as a fraction of each dimension's range.
    pub max_velocity: f64,
}

impl Default for PsoSettings {
    fn default() -> Self {
        PsoSettings { particles: 15, iterations: 100, inertia: 0.72, cognitive: 1.49, social: 1.49, max_velocity: 0.2 }
    }
}

/// Runs `particles × iterations` objective evaluations; the first iteration
/// evaluates the random initial swarm.
pub fn pso_minimize(objective: &dyn ObjectiveFn, bounds: &Bounds, settings: &PsoSettings, seed: u64) -> OptimizationResult {
    assert!(settings.particles >= 2, "need at least two particles");
    assert!(settings.iterations >= 1, "need at least one iteration");
    let dim = bounds.dim();
    let vmax: Vec<f64> = (0..dim).map(|i| settings.max_velocity * bounds.range(i)).collect();

    let mut init_rng = rng::stream(seed, "pso-init", 0);
    let mut pos: Vec<Vec<f64>> = (0..settings.particles)
        .map(|_| (0..dim).map(|i| init_rng.random_range(bounds.lower[i]..=bounds.upper[i])).collect())
        .collect();
    let mut vel: Vec<Vec<f64>> = (0..settings.particles)
        .map(|_| (0..dim).map(|i| init_rng.random_range(-vmax[i]..=vmax[i])).collect())
        .collect();

    let mut history = Vec::with_capacity(settings.particles * settings.iterations);
    let mut personal: Vec<(Vec<f64>, f64)> = Vec::with_capacity(settings.particles);
    for p in &pos {
        let y = objective.evaluate(p);
        history.push((ControlPointSet(p.clone()), y));
        personal.push((p.clone(), y));
    }
    let mut global = personal[0].clone();
    for pb in &personal {
        if pb.1 < global.1 {
            global = pb.clone();
        }
    }

    for it in 1..settings.iterations {
        let mut r = rng::stream(seed, "pso", it as u64);
        for k in 0..settings.particles {
            for i in 0..dim {
                let (r1, r2): (f64, f64) = (r.random(), r.random());
                let v = settings.inertia * vel[k][i]
                    + settings.cognitive * r1 * (personal[k].0[i] - pos[k][i])
                    + settings.social * r2 * (global.0[i] - pos[k][i]);
                vel[k][i] = v.clamp(-vmax[i], vmax[i]);
                pos[k][i] = (pos[k][i] + vel[k][i]).clamp(bounds.lower[i], bounds.upper[i]);
            }
            let y = objective.evaluate(&pos[k]);
            history.push((ControlPointSet(pos[k].clone()), y));
            if y < personal[k].1 {
                personal[k] = (pos[k].clone(), y);
                if y < global.1 {
                    global = personal[k].clone();
                }
            }
        }
    }

    OptimizationResult::from_history(history, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(p: &[f64]) -> f64 {
        p.iter().map(|x| x * x).sum()
    }

    #[test]
    fn sphere_minimum() {
        let bounds = Bounds::uniform(2, -5.0, 5.0);
        let r = pso_minimize(&sphere, &bounds, &PsoSettings::default(), 11);
        assert!(r.best_value < 1e-2, "{}", r.best_value);
        assert_eq!(r.evaluations_used, 1500);
    }

    #[test]
    fn single_iteration_is_initial_swarm() {
        let bounds = Bounds::uniform(2, -5.0, 5.0);
        let s = PsoSettings { iterations: 1, ..Default::default() };
        let r = pso_minimize(&sphere, &bounds, &s, 2);
        assert_eq!(r.history.len(), 15);
        let min = r.history.iter().map(|h| h.1).fold(f64::INFINITY, f64::min);
        assert_eq!(r.best_value, min);
    }

    #[test]
    fn deterministic() {
        let bounds = Bounds::uniform(3, -5.0, 5.0);
        let s = PsoSettings { iterations: 20, ..Default::default() };
        let a = pso_minimize(&sphere, &bounds, &s, 5);
        let b = pso_minimize(&sphere, &bounds, &s, 5);
        assert_eq!(a.incumbent_curve(), b.incumbent_curve());
        assert_eq!(a.history, b.history);
    }
}
