//! Constant-mean Gaussian-process regression with Cholesky-based solves.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{PlannerError, Result};
use crate::rng;

use super::kernel::{scaled_sq_distance, GpHyperparams};
use super::ControlPointSet;

/// Jitter ladder (relative to the kernel variance) tried when the plain
/// factorisation fails.
const JITTER_LADDER: [f64; 5] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

/// A fitted surrogate: observations plus the factorised kernel matrix.
#[derive(Debug, Clone)]
pub struct GpModel {
    dim: usize,
    /// Row-major `n × dim` inputs.
    xs: Vec<f64>,
    ys: Vec<f64>,
    hyper: GpHyperparams,
    inv_sq: Vec<f64>,
    /// Lower Cholesky factor of `K + (σ_n² + jitter) I`, row-major `n × n`.
    chol: Vec<f64>,
    /// `(K + σ_n² I)⁻¹ (y − m)`.
    alpha: Vec<f64>,
    jitter: f64,
}

impl GpModel {
    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hyper(&self) -> &GpHyperparams {
        &self.hyper
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.xs[i * self.dim..(i + 1) * self.dim]
    }

    /// Diagonal jitter that had to be added on top of the noise variance.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Index of the lowest observed value (first on ties).
    pub fn best_index(&self) -> usize {
        let mut best = 0;
        for (i, y) in self.ys.iter().enumerate() {
            if *y < self.ys[best] {
                best = i;
            }
        }
        best
    }

    fn signal_variance(&self) -> f64 {
        self.hyper.amplitude * self.hyper.amplitude
    }

    /// Posterior mean and standard deviation of the latent function.
    pub fn predict(&self, p: &ControlPointSet) -> (f64, f64) {
        self.predict_slice(p.as_slice())
    }

    pub(crate) fn predict_slice(&self, p: &[f64]) -> (f64, f64) {
        let n = self.len();
        let sv = self.signal_variance();
        let mut v: Vec<f64> = (0..n)
            .map(|i| sv * self.hyper.kernel.correlation(scaled_sq_distance(p, self.input(i), &self.inv_sq)))
            .collect();
        let mean = self.hyper.mean + v.iter().zip(&self.alpha).map(|(k, a)| k * a).sum::<f64>();
        forward_substitute(&self.chol, n, &mut v);
        let var = sv - v.iter().map(|x| x * x).sum::<f64>();
        (mean, var.max(0.0).sqrt())
    }

    /// Log marginal likelihood of the observations under this model.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.len();
        let fit: f64 = self.ys.iter().zip(&self.alpha).map(|(y, a)| (y - self.hyper.mean) * a).sum();
        let log_det_half: f64 = (0..n).map(|i| self.chol[i * n + i].ln()).sum();
        -0.5 * fit - log_det_half - 0.5 * n as f64 * (2.0 * PI).ln()
    }
}

fn check_inputs(xs: &[ControlPointSet], ys: &[f64], hyper: &GpHyperparams) -> Result<()> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(PlannerError::invalid(format!("need matching non-empty data, got {} inputs and {} values", xs.len(), ys.len())));
    }
    hyper.validate()?;
    if let Some(bad) = xs.iter().find(|x| x.dim() != hyper.dim()) {
        return Err(PlannerError::invalid(format!(
            "input of dimension {} does not match {} length scales",
            bad.dim(),
            hyper.dim()
        )));
    }
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(PlannerError::invalid("observations must be finite"));
    }
    Ok(())
}

/// Fits the GP to `(xs, ys)` under fixed hyperparameters.
pub fn gp_fit(xs: &[ControlPointSet], ys: &[f64], hyper: &GpHyperparams) -> Result<GpModel> {
    check_inputs(xs, ys, hyper)?;
    let dim = hyper.dim();
    let flat: Vec<f64> = xs.iter().flat_map(|x| x.as_slice().iter().copied()).collect();
    fit_flat(dim, flat, ys.to_vec(), hyper.clone())
}

fn fit_flat(dim: usize, xs: Vec<f64>, ys: Vec<f64>, hyper: GpHyperparams) -> Result<GpModel> {
    let n = ys.len();
    let inv_sq = hyper.inverse_sq_lengths();
    let sv = hyper.amplitude * hyper.amplitude;
    let noise_var = hyper.noise * hyper.noise;

    let mut base = vec![0.0; n * n];
    for i in 0..n {
        let xi = &xs[i * dim..(i + 1) * dim];
        base[i * n + i] = sv + noise_var;
        for j in 0..i {
            let k = sv * hyper.kernel.correlation(scaled_sq_distance(xi, &xs[j * dim..(j + 1) * dim], &inv_sq));
            base[i * n + j] = k;
            base[j * n + i] = k;
        }
    }

    let mut jitter = 0.0;
    let mut chol = cholesky(&base, n);
    for rel in JITTER_LADDER {
        if chol.is_some() {
            break;
        }
        jitter = rel * sv;
        let mut m = base.clone();
        for i in 0..n {
            m[i * n + i] += jitter;
        }
        chol = cholesky(&m, n);
    }
    let chol = chol.ok_or(PlannerError::IllConditioned { jitter })?;

    let mut alpha: Vec<f64> = ys.iter().map(|y| y - hyper.mean).collect();
    forward_substitute(&chol, n, &mut alpha);
    backward_substitute(&chol, n, &mut alpha);

    Ok(GpModel { dim, xs, ys, hyper, inv_sq, chol, alpha, jitter })
}

/// Lower-triangular Cholesky factor of a symmetric row-major matrix, or
/// `None` if it is not numerically positive definite.
fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves `L x = b` in place.
fn forward_substitute(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let row = &l[i * n..i * n + i];
        let s: f64 = row.iter().zip(&b[..i]).map(|(a, x)| a * x).sum();
        b[i] = (b[i] - s) / l[i * n + i];
    }
}

/// Solves `Lᵀ x = b` in place.
fn backward_substitute(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Log marginal likelihood of `ys` given `xs` and `hyper`.
pub fn log_marginal_likelihood(xs: &[ControlPointSet], ys: &[f64], hyper: &GpHyperparams) -> Result<f64> {
    Ok(gp_fit(xs, ys, hyper)?.log_marginal_likelihood())
}

/// Box constraints for the hyperparameter search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperBounds {
    pub length_scale: (f64, f64),
    pub amplitude: (f64, f64),
    pub noise: (f64, f64),
}

impl Default for HyperBounds {
    fn default() -> Self {
        HyperBounds { length_scale: (1.0, 2000.0), amplitude: (1e-3, 1e3), noise: (1e-6, 1.0) }
    }
}

/// Evaluation budget of one local search.
const SEARCH_EVALS_PER_PARAM: usize = 30;
const MIN_LOG_STEP: f64 = 1e-2;

struct SearchSpace {
    dim: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
    template: GpHyperparams,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SearchSpace {
    // θ = [ln σ_s, ln l_1, …, ln l_n, ln σ_n]
    fn hyper_of(&self, theta: &[f64]) -> GpHyperparams {
        let d = self.dim;
        GpHyperparams {
            mean: self.template.mean,
            amplitude: theta[0].exp(),
            length_scales: theta[1..=d].iter().map(|t| t.exp()).collect(),
            noise: theta[d + 1].exp(),
            kernel: self.template.kernel,
        }
    }

    /// Fits with the generalised-least-squares optimal constant mean and
    /// returns the resulting hyperparameters and log likelihood.
    fn score(&self, mut hyper: GpHyperparams) -> Option<(GpHyperparams, f64)> {
        hyper.mean = 0.0;
        let mut model = fit_flat(self.dim, self.xs.clone(), self.ys.clone(), hyper).ok()?;
        let n = self.ys.len();
        let mut ones = vec![1.0; n];
        forward_substitute(&model.chol, n, &mut ones);
        backward_substitute(&model.chol, n, &mut ones);
        let denom: f64 = ones.iter().sum();
        let numer: f64 = ones.iter().zip(&self.ys).map(|(w, y)| w * y).sum();
        let mean = if denom > 0.0 { numer / denom } else { self.template.mean };
        if !mean.is_finite() {
            return None;
        }
        // α(m) = K⁻¹y − m K⁻¹1
        for (a, w) in model.alpha.iter_mut().zip(&ones) {
            *a -= mean * w;
        }
        model.hyper.mean = mean;
        let lml = model.log_marginal_likelihood();
        lml.is_finite().then_some((model.hyper, lml))
    }

    fn local_search(&self, start: Vec<f64>) -> Option<(GpHyperparams, f64)> {
        let p = start.len();
        let mut theta = start;
        let (mut best_hyper, mut best) = self.score(self.hyper_of(&theta))?;
        let mut step = vec![1.0; p];
        let mut evals = 1;
        let max_evals = SEARCH_EVALS_PER_PARAM * p;
        while evals < max_evals && step.iter().any(|s| *s > MIN_LOG_STEP) {
            for c in 0..p {
                if step[c] <= MIN_LOG_STEP {
                    continue;
                }
                let mut moved = false;
                for dir in [1.0, -1.0] {
                    let mut cand = theta.clone();
                    cand[c] = (theta[c] + dir * step[c]).clamp(self.lower[c], self.upper[c]);
                    if cand[c] == theta[c] {
                        continue;
                    }
                    evals += 1;
                    if let Some((h, s)) = self.score(self.hyper_of(&cand)) {
                        if s > best {
                            theta = cand;
                            best = s;
                            best_hyper = h;
                            moved = true;
                            break;
                        }
                    }
                }
                if moved {
                    step[c] = (step[c] * 1.5).min(2.0);
                } else {
                    step[c] *= 0.5;
                }
            }
        }
        Some((best_hyper, best))
    }
}

/// Maximises the log marginal likelihood over amplitude, length scales and
/// noise (log-space coordinate search from `init` plus `restarts` random
/// starts); the constant mean is set to its closed-form optimum at every
/// step. Never returns hyperparameters scoring below `init`.
pub fn optimize_hyperparams(
    xs: &[ControlPointSet],
    ys: &[f64],
    init: &GpHyperparams,
    restarts: usize,
) -> GpHyperparams {
    optimize_hyperparams_within(xs, ys, init, restarts, &HyperBounds::default())
}

pub fn optimize_hyperparams_within(
    xs: &[ControlPointSet],
    ys: &[f64],
    init: &GpHyperparams,
    restarts: usize,
    bounds: &HyperBounds,
) -> GpHyperparams {
    if check_inputs(xs, ys, init).is_err() || xs.len() < 2 {
        return init.clone();
    }
    let dim = init.dim();
    let mut lower = vec![bounds.amplitude.0.ln()];
    let mut upper = vec![bounds.amplitude.1.ln()];
    lower.extend(std::iter::repeat_n(bounds.length_scale.0.ln(), dim));
    upper.extend(std::iter::repeat_n(bounds.length_scale.1.ln(), dim));
    lower.push(bounds.noise.0.ln());
    upper.push(bounds.noise.1.ln());

    let space = SearchSpace {
        dim,
        xs: xs.iter().flat_map(|x| x.as_slice().iter().copied()).collect(),
        ys: ys.to_vec(),
        template: init.clone(),
        lower,
        upper,
    };

    let init_score = log_marginal_likelihood(xs, ys, init).unwrap_or(f64::NEG_INFINITY);
    let mut best = (init.clone(), init_score);

    let clamp_start = |theta: Vec<f64>| -> Vec<f64> {
        theta.iter().enumerate().map(|(i, t)| t.clamp(space.lower[i], space.upper[i])).collect()
    };
    let mut starts = vec![clamp_start(
        std::iter::once(init.amplitude.ln())
            .chain(init.length_scales.iter().map(|l| l.ln()))
            .chain(std::iter::once(init.noise.max(bounds.noise.0).ln()))
            .collect(),
    )];
    let mut rng = rng::stream(0x0067_7068_7970_6572, "hyper-restart", xs.len() as u64);
    for _ in 0..restarts {
        let jittered: Vec<f64> = starts[0].iter().map(|t| t + rng.sample::<f64, _>(StandardNormal)).collect();
        starts.push(clamp_start(jittered));
    }

    for start in starts {
        if let Some((h, s)) = space.local_search(start) {
            if s > best.1 {
                best = (h, s);
            }
        }
    }
    best.0
}
