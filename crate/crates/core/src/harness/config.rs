//! Run configuration and named presets.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::env::{CartPole, EnvModel, Environment, MountainCarContinuous, Pendulum, TabularEnv, TabularMdp};
use crate::error::{Error, Result};
use crate::estimate::{Baseline, ClipRange, Estimator, EstimatorKind};
use crate::mirror::MirrorMapKind;
use crate::optim::{Algorithm, OptimizerKind, ScheduleParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvName {
    Cartpole,
    MountainCar,
    Pendulum,
    Tabular,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub name: EnvName,
    pub horizon: Option<usize>,
    pub gamma: Option<f64>,
    /// Tabular only; defaults to the built-in 4-state benchmark.
    #[serde(default)]
    pub mdp: Option<TabularMdp>,
}

impl EnvConfig {
    pub fn build(&self) -> Result<EnvModel> {
        let mut env = match self.name {
            EnvName::Cartpole => EnvModel::CartPole(CartPole::new()),
            EnvName::MountainCar => EnvModel::MountainCar(MountainCarContinuous::new()),
            EnvName::Pendulum => EnvModel::Pendulum(Pendulum::new()),
            EnvName::Tabular => EnvModel::Tabular(TabularEnv::new(
                self.mdp.clone().unwrap_or_else(TabularMdp::benchmark),
            )),
        };
        env.configure(self.horizon, self.gamma)?;
        Ok(env)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    /// Hidden layer widths; ignored by tabular policies.
    pub hidden: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueConfig {
    pub hidden: Vec<usize>,
    pub lr: f64,
    /// Full-batch Adam steps per value fit.
    pub epochs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub algorithm: Algorithm,
    pub actor_critic: bool,
    pub schedule: ScheduleParams,
}

impl OptimizerConfig {
    pub fn kind(&self) -> OptimizerKind {
        OptimizerKind {
            algorithm: self.algorithm,
            actor_critic: self.actor_critic,
        }
    }
}

/// Everything needed to reproduce a run. Missing fields take the value of the
/// `cartpole-bgpo-diag` preset, or of the named `preset` when one is given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub env: EnvConfig,
    pub policy: PolicyConfig,
    pub value: ValueConfig,
    pub optimizer: OptimizerConfig,
    pub mirror: MirrorMapKind,
    pub estimator: EstimatorKind,
    /// Bootstrap V(s_H) at horizon truncation (GAE only).
    pub bootstrap_truncated: bool,
    pub clip: ClipRange,
    /// Trajectories per iteration.
    pub batch_size: usize,
    /// Environment steps consumed by the optimizer loop, excluding the
    /// initialization batch.
    pub total_timesteps: u64,
    pub seed: u64,
    pub eval_interval: u64,
    pub eval_episodes: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            preset: None,
            env: EnvConfig {
                name: EnvName::Cartpole,
                horizon: Some(100),
                gamma: Some(0.99),
                mdp: None,
            },
            policy: PolicyConfig { hidden: vec![8, 8] },
            value: ValueConfig {
                hidden: vec![32, 32],
                lr: 2.5e-3,
                epochs: 10,
            },
            optimizer: OptimizerConfig {
                algorithm: Algorithm::Bgpo,
                actor_critic: true,
                schedule: PRESET_SCHEDULE,
            },
            mirror: DIAG,
            estimator: EstimatorKind::Gae { lambda: 0.97 },
            bootstrap_truncated: false,
            clip: ClipRange::default(),
            batch_size: 50,
            total_timesteps: 500_000,
            seed: 0,
            eval_interval: 10_000,
            eval_episodes: 10,
        }
    }
}

const PRESET_SCHEDULE: ScheduleParams = ScheduleParams {
    b: 1.5,
    m: 2.0,
    c: 25.0,
    lambda: 1e-3,
};

const DIAG: MirrorMapKind = MirrorMapKind::DiagonalAdaptive {
    alpha: 1e-8,
    beta: 0.999,
};

/// Names accepted by [`preset`].
pub const PRESETS: &[&str] = &[
    "cartpole-bgpo-diag",
    "cartpole-vrbgpo-diag",
    "cartpole-bgpo-lp1.5",
    "cartpole-bgpo-lp2",
    "cartpole-bgpo-lp3",
    "mountaincar-bgpo-diag",
    "mountaincar-vrbgpo-diag",
    "pendulum-vrbgpo-diag",
    "tabular-bgpo-theorem",
    "tabular-vrbgpo-theorem",
];

/// A named configuration.
pub fn preset(name: &str) -> Result<RunConfig> {
    let mut c = RunConfig {
        preset: Some(name.to_string()),
        ..RunConfig::default()
    };
    match name {
        "cartpole-bgpo-diag" => {}
        "cartpole-vrbgpo-diag" => c.optimizer.algorithm = Algorithm::VrBgpo,
        "cartpole-bgpo-lp1.5" | "cartpole-bgpo-lp2" | "cartpole-bgpo-lp3" => {
            let (p, lambda) = match name {
                "cartpole-bgpo-lp1.5" => (1.5, 0.0064),
                "cartpole-bgpo-lp2" => (2.0, 0.0016),
                _ => (3.0, 0.0008),
            };
            c.mirror = MirrorMapKind::LpNorm { p };
            c.optimizer.schedule.lambda = lambda;
        }
        "mountaincar-bgpo-diag" | "mountaincar-vrbgpo-diag" => {
            c.env = EnvConfig {
                name: EnvName::MountainCar,
                horizon: Some(500),
                gamma: Some(0.99),
                mdp: None,
            };
            c.policy.hidden = vec![64, 64];
            c.batch_size = 100;
            c.total_timesteps = 7_500_000;
            c.eval_interval = 100_000;
            if name.contains("vrbgpo") {
                c.optimizer.algorithm = Algorithm::VrBgpo;
            }
        }
        "pendulum-vrbgpo-diag" => {
            c.env = EnvConfig {
                name: EnvName::Pendulum,
                horizon: Some(500),
                gamma: Some(0.99),
                mdp: None,
            };
            c.policy.hidden = vec![64, 64];
            c.batch_size = 100;
            c.total_timesteps = 5_000_000;
            c.eval_interval = 100_000;
            c.optimizer.algorithm = Algorithm::VrBgpo;
            c.optimizer.schedule.lambda = 1e-2;
        }
        "tabular-bgpo-theorem" | "tabular-vrbgpo-theorem" => {
            let algorithm = if name.contains("vrbgpo") {
                Algorithm::VrBgpo
            } else {
                Algorithm::Bgpo
            };
            let mdp = TabularMdp::benchmark();
            c.env = EnvConfig {
                name: EnvName::Tabular,
                horizon: Some(mdp.horizon),
                gamma: Some(mdp.gamma),
                mdp: None,
            };
            c.mirror = MirrorMapKind::NegativeEntropy {
                row_len: Some(mdp.n_actions()),
            };
            c.estimator = EstimatorKind::Pgt {
                baseline: Baseline::None,
            };
            c.optimizer = OptimizerConfig {
                algorithm,
                actor_critic: false,
                schedule: ScheduleParams::theorem_regime(algorithm, 1.0, 1.0, 0.5),
            };
            c.batch_size = 10;
            c.total_timesteps = 50_000;
            c.eval_interval = 5_000;
        }
        _ => {
            return Err(Error::Config(format!(
                "unknown preset {name:?}; known presets: {}",
                PRESETS.join(", ")
            )))
        }
    }
    Ok(c)
}

/// Recursively overlays `patch` onto `base`; objects merge key by key, any
/// other value replaces. An object whose `"kind"` differs from the base's
/// replaces it whole, so variant-specific fields do not leak across kinds.
pub fn merge_json(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) if b.get("kind") == p.get("kind") || p.get("kind").is_none() => {
            for (k, v) in p {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge_json(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, p) => *b = p.clone(),
    }
}

impl RunConfig {
    /// Parses a config document, overlaying it onto `preset_override` or its
    /// own `"preset"` field when present.
    pub fn from_json_str(text: &str, preset_override: Option<&str>) -> Result<Self> {
        let user: Value =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config is not valid JSON: {e}")))?;
        if !user.is_object() {
            return Err(Error::Config("config must be a JSON object".into()));
        }
        let name = preset_override
            .map(str::to_string)
            .or_else(|| user.get("preset").and_then(Value::as_str).map(str::to_string));
        let mut merged = match &name {
            Some(n) => serde_json::to_value(preset(n)?)?,
            None => serde_json::to_value(RunConfig::default())?,
        };
        merge_json(&mut merged, &user);
        if let Some(n) = name {
            merged["preset"] = Value::String(n);
        }
        let config: RunConfig =
            serde_json::from_value(merged).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, preset_override: Option<&str>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text, preset_override)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// The estimator with the environment's discount.
    pub fn estimator(&self, gamma: f64) -> Result<Estimator> {
        let mut e = Estimator::new(self.estimator.clone(), gamma)?;
        e.bootstrap_truncated = self.bootstrap_truncated;
        Ok(e)
    }

    /// Checks every invariant that can be checked without running, reporting
    /// failures as [`Error::Config`].
    pub fn validate(&self) -> Result<()> {
        let cfg = |e: Error| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        };
        let env = self.env.build().map_err(cfg)?;
        let spec = env.spec().clone();
        self.optimizer.schedule.validate().map_err(cfg)?;
        self.mirror.validate().map_err(cfg)?;
        self.estimator.validate().map_err(cfg)?;
        self.clip.validate().map_err(cfg)?;
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.total_timesteps < spec.horizon as u64 {
            return Err(Error::Config(format!(
                "total_timesteps {} is below the horizon {}",
                self.total_timesteps, spec.horizon
            )));
        }
        if self.eval_interval == 0 {
            return Err(Error::Config("eval_interval must be positive".into()));
        }
        if self.eval_episodes == 0 {
            return Err(Error::Config("eval_episodes must be positive".into()));
        }
        if self.estimator.needs_value_network() != self.optimizer.actor_critic {
            return Err(Error::Config(
                "the GAE estimator and actor_critic must be enabled together".into(),
            ));
        }
        if self.value.epochs > 0 && !(self.value.lr > 0.0) {
            return Err(Error::Config("value learning rate must be positive".into()));
        }
        if self.optimizer.actor_critic && self.value.hidden.contains(&0) {
            return Err(Error::Config("value layer sizes must be positive".into()));
        }
        if let EstimatorKind::Reinforce { baseline: Baseline::PerStep(b) }
        | EstimatorKind::Pgt { baseline: Baseline::PerStep(b) } = &self.estimator
        {
            if b.len() < spec.horizon {
                return Err(Error::Config(format!(
                    "per-step baseline has {} entries for horizon {}",
                    b.len(),
                    spec.horizon
                )));
            }
        }
        match (self.env.name, &self.mirror) {
            (EnvName::Tabular, MirrorMapKind::NegativeEntropy { row_len }) => {
                let n_a = spec.action_space.dim();
                if *row_len != Some(n_a) {
                    return Err(Error::Config(format!(
                        "tabular policies need the negative-entropy map with row_len = {n_a}"
                    )));
                }
            }
            (EnvName::Tabular, _) => {
                return Err(Error::Config(
                    "tabular policies are simplex-constrained; use the negative_entropy mirror map"
                        .into(),
                ))
            }
            (_, MirrorMapKind::NegativeEntropy { .. }) => {
                return Err(Error::Config(
                    "the negative_entropy map needs a tabular policy".into(),
                ))
            }
            _ => {}
        }
        if self.env.name != EnvName::Tabular && self.policy.hidden.contains(&0) {
            return Err(Error::Config("policy layer sizes must be positive".into()));
        }
        Ok(())
    }
}
