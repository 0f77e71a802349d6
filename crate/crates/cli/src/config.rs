use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use trajopt::bayesopt::{AcquisitionKind, BoSettings, KernelKind};
use trajopt::kinodynamics::KinodynamicLimits;
use trajopt::prior_db::{OnlineSettings, PlanningContext, SeedTransfer};
use trajopt::simulator::{SimConfig, TrackerParams};
use trajopt::Vec2;

/// Flat run configuration. Every key is optional in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub field_half_x: f64,
    pub field_half_y: f64,
    pub v_max: f64,
    pub omega_max: f64,
    pub a_t_max: f64,
    pub kernel: KernelKind,
    pub acquisition: AcquisitionKind,
    /// Offline (database and benchmark) evaluation budget.
    pub budget: usize,
    /// Cold budget defining the reference in the prior benchmark.
    pub reference_budget: usize,
    pub online_budget: usize,
    pub k: usize,
    pub max_seed_points: usize,
    pub seed_transfer: SeedTransfer,
    pub j: usize,
    pub refit_every: usize,
    pub hyper_restarts: usize,
    pub dt: f64,
    pub delay_packets: usize,
    pub pos_noise_sigma: f64,
    pub theta_noise_sigma: f64,
    pub zeta: f64,
    pub g: f64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let limits = KinodynamicLimits::default();
        let bo = BoSettings::default();
        let online = OnlineSettings::default();
        let sim = SimConfig::default();
        let tracker = TrackerParams::default();
        RunConfig {
            field_half_x: 1000.0,
            field_half_y: 1000.0,
            v_max: limits.v_max,
            omega_max: limits.omega_max,
            a_t_max: limits.a_t_max,
            kernel: bo.kernel,
            acquisition: bo.acquisition,
            budget: 60,
            reference_budget: 200,
            online_budget: online.budget,
            k: online.k,
            max_seed_points: online.max_seed_points,
            seed_transfer: online.transfer,
            j: 1,
            refit_every: bo.refit_every,
            hyper_restarts: bo.hyper_restarts,
            dt: sim.dt,
            delay_packets: sim.delay_packets,
            pos_noise_sigma: sim.pos_noise_sigma,
            theta_noise_sigma: sim.theta_noise_sigma,
            zeta: tracker.zeta,
            g: tracker.g,
            seed: 0,
        }
    }
}

impl RunConfig {
    /// Reads the optional config file, applies `key=value` overrides and
    /// validates the result.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut map = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                match serde_json::from_str::<Value>(&text).with_context(|| format!("parsing config {}", p.display()))? {
                    Value::Object(m) => m,
                    _ => bail!("config {} must be a JSON object", p.display()),
                }
            }
            None => Map::new(),
        };
        for o in overrides {
            let (key, raw) = o.split_once('=').ok_or_else(|| anyhow!("override `{o}` is not key=value"))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            map.insert(key.trim().to_string(), value);
        }
        let cfg: RunConfig = serde_json::from_value(Value::Object(map)).context("invalid configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.field_half_x > 0.0 && self.field_half_y > 0.0) {
            bail!("field half extents must be positive");
        }
        self.limits().validate()?;
        if self.budget == 0 || self.online_budget == 0 || self.reference_budget == 0 {
            bail!("budgets must be positive");
        }
        if self.k == 0 || self.j == 0 || self.refit_every == 0 {
            bail!("k, j and refit_every must be positive");
        }
        if !(self.dt > 0.0) {
            bail!("dt must be positive");
        }
        if !(self.zeta > 0.0 && self.zeta <= 1.0 && self.g > 0.0) {
            bail!("tracker needs zeta in (0, 1] and g > 0");
        }
        if self.pos_noise_sigma < 0.0 || self.theta_noise_sigma < 0.0 {
            bail!("noise levels must be non-negative");
        }
        Ok(())
    }

    pub fn half_extents(&self) -> Vec2 {
        Vec2::new(self.field_half_x, self.field_half_y)
    }

    pub fn limits(&self) -> KinodynamicLimits {
        KinodynamicLimits { v_max: self.v_max, omega_max: self.omega_max, a_t_max: self.a_t_max, ..Default::default() }
    }

    pub fn context(&self) -> PlanningContext {
        PlanningContext {
            field_half_extents: self.half_extents(),
            limits: self.limits(),
            bo: BoSettings {
                kernel: self.kernel,
                acquisition: self.acquisition,
                refit_every: self.refit_every,
                hyper_restarts: self.hyper_restarts,
                ..Default::default()
            },
        }
    }

    pub fn online(&self) -> OnlineSettings {
        OnlineSettings {
            k: self.k,
            max_seed_points: self.max_seed_points,
            budget: self.online_budget,
            transfer: self.seed_transfer,
        }
    }

    pub fn sim(&self) -> SimConfig {
        SimConfig {
            dt: self.dt,
            delay_packets: self.delay_packets,
            pos_noise_sigma: self.pos_noise_sigma,
            theta_noise_sigma: self.theta_noise_sigma,
            seed: self.seed,
            ..Default::default()
        }
    }

    pub fn tracker(&self) -> TrackerParams {
        TrackerParams { zeta: self.zeta, g: self.g }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_apply() {
        let c = RunConfig::load(None, &["kernel=SEARD".into(), "budget=12".into(), "acquisition=LCB".into()]).unwrap();
        assert_eq!(c.kernel, KernelKind::SquaredExpArd);
        assert_eq!(c.acquisition, AcquisitionKind::Lcb);
        assert_eq!(c.budget, 12);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::load(None, &["bogus=1".into()]).is_err());
        assert!(RunConfig::load(None, &["budget".into()]).is_err());
        assert!(RunConfig::load(None, &["zeta=2".into()]).is_err());
    }

    #[test]
    fn file_and_override() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"j": 2, "seed": 5}"#).unwrap();
        let c = RunConfig::load(Some(&p), &["seed=7".into()]).unwrap();
        assert_eq!((c.j, c.seed), (2, 7));
    }
}
