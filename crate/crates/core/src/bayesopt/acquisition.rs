use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::gp::GpModel;
use super::{Bounds, ControlPointSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AcquisitionKind {
    /// Expected improvement below the incumbent.
    #[serde(rename = "EI")]
    Ei,
    /// Negated lower confidence bound `-(μ - σ)`.
    #[serde(rename = "LCB")]
    Lcb,
    /// A-optimality: posterior standard deviation.
    Aopt,
}

impl AcquisitionKind {
    pub const ALL: [AcquisitionKind; 3] = [AcquisitionKind::Ei, AcquisitionKind::Lcb, AcquisitionKind::Aopt];

    pub fn name(self) -> &'static str {
        match self {
            AcquisitionKind::Ei => "EI",
            AcquisitionKind::Lcb => "LCB",
            AcquisitionKind::Aopt => "Aopt",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        AcquisitionKind::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(s))
    }
}

const LCB_BETA: f64 = 1.0;

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Score from a posterior `(μ, σ)`; larger is more worth sampling.
pub(crate) fn score(kind: AcquisitionKind, mean: f64, sd: f64, best_y: f64) -> f64 {
    match kind {
        AcquisitionKind::Ei => {
            if sd < 1e-12 {
                (best_y - mean).max(0.0)
            } else {
                let u = (best_y - mean) / sd;
                (sd * (u * normal_cdf(u) + normal_pdf(u))).max(0.0)
            }
        }
        AcquisitionKind::Lcb => -(mean - LCB_BETA * sd),
        AcquisitionKind::Aopt => sd,
    }
}

pub fn acquisition(model: &GpModel, p: &ControlPointSet, best_y: f64, kind: AcquisitionKind) -> f64 {
    let (mean, sd) = model.predict(p);
    score(kind, mean, sd, best_y)
}

/// Candidate counts for the random acquisition search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionSearch {
    pub uniform_candidates: usize,
    pub local_candidates: usize,
    /// Standard deviation of the local perturbations as a fraction of each
    /// dimension's range.
    pub local_sigma: f64,
}

impl Default for AcquisitionSearch {
    fn default() -> Self {
        AcquisitionSearch { uniform_candidates: 2000, local_candidates: 200, local_sigma: 0.05 }
    }
}

/// Draws uniform candidates over `bounds` plus Gaussian perturbations around
/// the incumbent, and returns the first candidate with the highest score.
pub fn maximize_acquisition<R: Rng + ?Sized>(
    model: &GpModel,
    bounds: &Bounds,
    kind: AcquisitionKind,
    best_y: f64,
    search: &AcquisitionSearch,
    rng: &mut R,
) -> ControlPointSet {
    let dim = bounds.dim();
    let incumbent = model.input(model.best_index()).to_vec();
    let total = search.uniform_candidates + search.local_candidates;
    let mut cand = vec![0.0; dim];
    let mut best: Option<(f64, Vec<f64>)> = None;
    for c in 0..total.max(1) {
        if c < search.uniform_candidates {
            for (i, v) in cand.iter_mut().enumerate() {
                *v = rng.random_range(bounds.lower[i]..=bounds.upper[i]);
            }
        } else {
            for (i, v) in cand.iter_mut().enumerate() {
                let z: f64 = rng.sample(StandardNormal);
                *v = incumbent[i] + z * search.local_sigma * bounds.range(i);
            }
            bounds.clip(&mut cand);
        }
        let (mean, sd) = model.predict_slice(&cand);
        let s = score(kind, mean, sd, best_y);
        if best.as_ref().is_none_or(|(b, _)| s > *b) {
            best = Some((s, cand.clone()));
        }
    }
    ControlPointSet(best.map(|(_, p)| p).unwrap_or(incumbent))
}
