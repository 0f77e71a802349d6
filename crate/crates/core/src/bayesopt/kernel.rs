use serde::{Deserialize, Serialize};

use crate::error::{PlannerError, Result};

use super::ControlPointSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelKind {
    #[serde(rename = "Matern52ARD")]
    Matern52Ard,
    #[serde(rename = "Matern32ARD")]
    Matern32Ard,
    #[serde(rename = "SEARD")]
    SquaredExpArd,
}

impl KernelKind {
    pub const ALL: [KernelKind; 3] = [KernelKind::Matern52Ard, KernelKind::Matern32Ard, KernelKind::SquaredExpArd];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Matern52Ard => "Matern52ARD",
            KernelKind::Matern32Ard => "Matern32ARD",
            KernelKind::SquaredExpArd => "SEARD",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        KernelKind::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(s))
    }

    /// Correlation as a function of the scaled squared distance `d`.
    #[inline]
    pub(crate) fn correlation(self, d: f64) -> f64 {
        match self {
            KernelKind::Matern52Ard => {
                let r = (5.0 * d).sqrt();
                (1.0 + r + 5.0 * d / 3.0) * (-r).exp()
            }
            KernelKind::Matern32Ard => {
                let r = (3.0 * d).sqrt();
                (1.0 + r) * (-r).exp()
            }
            KernelKind::SquaredExpArd => (-0.5 * d).exp(),
        }
    }
}

/// Constant mean, kernel amplitude, per-dimension length scales and
/// observation noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpHyperparams {
    pub mean: f64,
    pub amplitude: f64,
    pub length_scales: Vec<f64>,
    pub noise: f64,
    pub kernel: KernelKind,
}

impl GpHyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0 && self.noise >= 0.0 && self.mean.is_finite()) {
            return Err(PlannerError::invalid(format!(
                "invalid hyperparameters: amplitude={}, noise={}, mean={}",
                self.amplitude, self.noise, self.mean
            )));
        }
        if self.length_scales.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(PlannerError::invalid("length scales must be positive"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.length_scales.len()
    }

    pub(crate) fn inverse_sq_lengths(&self) -> Vec<f64> {
        self.length_scales.iter().map(|l| 1.0 / (l * l)).collect()
    }
}

#[inline]
pub(crate) fn scaled_sq_distance(a: &[f64], b: &[f64], inv_sq: &[f64]) -> f64 {
    a.iter().zip(b).zip(inv_sq).map(|((x, y), w)| (x - y) * (x - y) * w).sum()
}

/// Covariance between two control-point sets.
pub fn kernel(a: &ControlPointSet, b: &ControlPointSet, hyper: &GpHyperparams) -> Result<f64> {
    if a.dim() != b.dim() || a.dim() != hyper.dim() {
        return Err(PlannerError::invalid(format!(
            "dimension mismatch: {} vs {} with {} length scales",
            a.dim(),
            b.dim(),
            hyper.dim()
        )));
    }
    let d = scaled_sq_distance(a.as_slice(), b.as_slice(), &hyper.inverse_sq_lengths());
    Ok(hyper.amplitude * hyper.amplitude * hyper.kernel.correlation(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn hyper(kind: KernelKind) -> GpHyperparams {
        GpHyperparams { mean: 0.0, amplitude: 1.0, length_scales: vec![1.0, 1.0], noise: 0.0, kernel: kind }
    }

    #[test]
    fn self_covariance_is_amplitude_squared() {
        let a = ControlPointSet(vec![3.0, -4.0]);
        for kind in KernelKind::ALL {
            let h = GpHyperparams { amplitude: 2.5, ..hyper(kind) };
            assert_abs_diff_eq!(kernel(&a, &a, &h).unwrap(), 6.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn matern52_reference_value() {
        // d = 2: (1 + sqrt(10) + 10/3) exp(-sqrt(10))
        let k = kernel(&ControlPointSet(vec![0.0, 0.0]), &ControlPointSet(vec![1.0, 1.0]), &hyper(KernelKind::Matern52Ard))
            .unwrap();
        assert_abs_diff_eq!(k, 0.317_283_363_954_043_8, epsilon = 1e-14);
    }

    #[test]
    fn decays_monotonically() {
        for kind in KernelKind::ALL {
            let h = hyper(kind);
            let mut prev = f64::INFINITY;
            for step in 0..60 {
                let x = step as f64 * 0.5;
                let k = kernel(&ControlPointSet(vec![0.0, 0.0]), &ControlPointSet(vec![x, 0.0]), &h).unwrap();
                assert!(k <= prev);
                prev = k;
            }
            assert!(prev < 1e-6);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let h = hyper(KernelKind::Matern52Ard);
        assert!(kernel(&ControlPointSet(vec![0.0]), &ControlPointSet(vec![0.0, 1.0]), &h).is_err());
        assert!(kernel(&ControlPointSet(vec![0.0; 3]), &ControlPointSet(vec![0.0; 3]), &h).is_err());
    }

    #[test]
    fn kernel_names_round_trip() {
        for kind in KernelKind::ALL {
            assert_eq!(KernelKind::parse(kind.name()), Some(kind));
        }
    }
}
