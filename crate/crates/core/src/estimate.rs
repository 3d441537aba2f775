//! Score-function policy-gradient estimators, GAE, importance weights and
//! value-network fitting.
//!
//! Every estimator has the form `g(τ|θ) = Σ_t c_t ∇log π_θ(a_t|s_t)`, where
//! the per-step coefficients `c_t` depend on the trajectory (and the value
//! network for GAE) but not on θ. Splitting the two lets VR-BGPO evaluate the
//! same estimator on one trajectory at two parameter vectors.

use serde::{Deserialize, Serialize};

use crate::env::Trajectory;
use crate::error::{check_len, Error, Result};
use crate::params::{axpy, ParamVector};
use crate::policy::{Policy, ValueNetwork};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    #[default]
    None,
    Constant(f64),
    /// One baseline value per time step.
    PerStep(Vec<f64>),
}

impl Baseline {
    fn at(&self, t: usize) -> f64 {
        match self {
            Baseline::None => 0.0,
            Baseline::Constant(b) => *b,
            Baseline::PerStep(b) => b[t],
        }
    }

    fn check(&self, len: usize) -> Result<()> {
        match self {
            Baseline::PerStep(b) if b.len() < len => Err(Error::DimensionMismatch {
                expected: len,
                actual: b.len(),
            }),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorKind {
    /// `Σ_t ∇log π(a_t|s_t) (Σ_j γʲ r_j − b_t)`
    Reinforce {
        #[serde(default)]
        baseline: Baseline,
    },
    /// `Σ_t ∇log π(a_t|s_t) Σ_{j≥t} (γʲ r_j − b_j)`
    Pgt {
        #[serde(default)]
        baseline: Baseline,
    },
    /// `Σ_t ∇log π(a_t|s_t) Â_t` with GAE advantages from a value network.
    Gae { lambda: f64 },
}

impl EstimatorKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            EstimatorKind::Gae { lambda } if !(0.0..=1.0).contains(lambda) => Err(
                Error::InvalidParameter(format!("GAE λ must lie in [0, 1], got {lambda}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn needs_value_network(&self) -> bool {
        matches!(self, EstimatorKind::Gae { .. })
    }
}

/// An estimator together with the settings shared by all its evaluations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimator {
    pub kind: EstimatorKind,
    pub gamma: f64,
    /// Bootstrap `V(s_H)` at horizon truncation instead of using 0. GAE only.
    #[serde(default)]
    pub bootstrap_truncated: bool,
}

impl Estimator {
    pub fn new(kind: EstimatorKind, gamma: f64) -> Result<Self> {
        kind.validate()?;
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "discount must lie in (0, 1), got {gamma}"
            )));
        }
        Ok(Estimator {
            kind,
            gamma,
            bootstrap_truncated: false,
        })
    }

    /// Per-step coefficients `c_t` for one trajectory.
    pub fn coefficients(
        &self,
        traj: &Trajectory,
        value: Option<&ValueNetwork>,
    ) -> Result<Vec<f64>> {
        let n = traj.len();
        if n == 0 {
            return Ok(Vec::new());
        }
        match &self.kind {
            EstimatorKind::Reinforce { baseline } => {
                baseline.check(n)?;
                let ret = discounted_return(&traj.rewards, self.gamma);
                Ok((0..n).map(|t| ret - baseline.at(t)).collect())
            }
            EstimatorKind::Pgt { baseline } => {
                baseline.check(n)?;
                let mut out = vec![0.0; n];
                let mut acc = 0.0;
                let mut discount = self.gamma.powi(n as i32 - 1);
                for t in (0..n).rev() {
                    acc += discount * traj.rewards[t] - baseline.at(t);
                    out[t] = acc;
                    discount /= self.gamma;
                }
                Ok(out)
            }
            EstimatorKind::Gae { lambda } => {
                let value = value.ok_or(Error::MissingValueNetwork)?;
                Ok(gae_advantages(traj, value, self.gamma, *lambda, self.bootstrap_truncated)?
                    .advantages)
            }
        }
    }

    pub fn gradient<P: Policy>(
        &self,
        policy: &P,
        traj: &Trajectory,
        value: Option<&ValueNetwork>,
    ) -> Result<ParamVector> {
        let c = self.coefficients(traj, value)?;
        gradient_from_coefficients(policy, traj, &c)
    }
}

/// `Σ_t γᵗ r_t`
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc)
}

/// The ascent-direction estimate of ∇J(θ) for one trajectory.
pub fn estimate_gradient<P: Policy>(
    kind: &EstimatorKind,
    traj: &Trajectory,
    policy: &P,
    value: Option<&ValueNetwork>,
    gamma: f64,
) -> Result<ParamVector> {
    Estimator::new(kind.clone(), gamma)?.gradient(policy, traj, value)
}

/// `Σ_t c_t ∇log π_θ(a_t|s_t)`
pub fn gradient_from_coefficients<P: Policy>(
    policy: &P,
    traj: &Trajectory,
    coefficients: &[f64],
) -> Result<ParamVector> {
    check_len(traj.len(), coefficients.len())?;
    let mut g = vec![0.0; policy.num_params()];
    for ((s, a), c) in traj.states.iter().zip(&traj.actions).zip(coefficients) {
        if *c != 0.0 {
            axpy(&mut g, *c, &policy.score(s, a)?);
        }
    }
    Ok(g.into())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gae {
    pub advantages: Vec<f64>,
    /// Regression targets `V̂_t = Â_t + V(s_t)`.
    pub targets: Vec<f64>,
}

/// GAE from explicit values; `values` has one more entry than `rewards`
/// (the last is the bootstrap value).
pub fn gae_from_values(rewards: &[f64], values: &[f64], gamma: f64, lambda: f64) -> Result<Gae> {
    check_len(rewards.len() + 1, values.len())?;
    let n = rewards.len();
    let mut advantages = vec![0.0; n];
    let mut acc = 0.0;
    for t in (0..n).rev() {
        let delta = rewards[t] + gamma * values[t + 1] - values[t];
        acc = delta + gamma * lambda * acc;
        advantages[t] = acc;
    }
    let targets = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok(Gae {
        advantages,
        targets,
    })
}

/// GAE along a trajectory. The final value is 0 on termination, and also on
/// truncation unless `bootstrap_truncated` is set.
pub fn gae_advantages(
    traj: &Trajectory,
    value: &ValueNetwork,
    gamma: f64,
    lambda: f64,
    bootstrap_truncated: bool,
) -> Result<Gae> {
    if traj.is_empty() {
        return Err(Error::InvalidParameter(
            "GAE needs a non-empty trajectory".into(),
        ));
    }
    let n = traj.len();
    let mut values = traj.states[..n]
        .iter()
        .map(|s| value.value(s))
        .collect::<Result<Vec<_>>>()?;
    let last = if bootstrap_truncated && !traj.terminated {
        value.value(&traj.states[n])?
    } else {
        0.0
    };
    values.push(last);
    gae_from_values(&traj.rewards, &values, gamma, lambda)
}

/// Bounds applied to the trajectory importance weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClipRange {
    pub lo: f64,
    pub hi: f64,
}

impl Default for ClipRange {
    fn default() -> Self {
        ClipRange { lo: 0.5, hi: 1.5 }
    }
}

impl ClipRange {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let c = ClipRange { lo, hi };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo > 0.0 && self.lo <= 1.0 && self.hi >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "clip range needs 0 < lo ≤ 1 ≤ hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImportanceWeight {
    /// The clipped weight.
    pub weight: f64,
    /// `Σ_t log π_old(a_t|s_t) − log π_new(a_t|s_t)`, before clipping.
    pub log_ratio: f64,
    pub clipped: bool,
    /// The log-ratio was NaN or infinite.
    pub nonfinite: bool,
}

/// `log p(τ|old) − log p(τ|new)`; transition terms cancel.
pub fn log_importance_ratio<P: Policy>(traj: &Trajectory, old: &P, new: &P) -> Result<f64> {
    let mut total = 0.0;
    for (s, a) in traj.states.iter().zip(&traj.actions) {
        total += old.log_prob(s, a)? - new.log_prob(s, a)?;
    }
    Ok(total)
}

/// Clips a log-ratio in the log domain, so no intermediate overflows.
pub fn clip_log_ratio(log_ratio: f64, clip: ClipRange) -> ImportanceWeight {
    let (lo, hi) = (clip.lo.ln(), clip.hi.ln());
    if log_ratio.is_nan() {
        return ImportanceWeight {
            weight: clip.lo,
            log_ratio,
            clipped: true,
            nonfinite: true,
        };
    }
    let bounded = log_ratio.clamp(lo, hi);
    let weight = if bounded == lo {
        clip.lo
    } else if bounded == hi {
        clip.hi
    } else {
        bounded.exp()
    };
    ImportanceWeight {
        weight,
        log_ratio,
        clipped: log_ratio < lo || log_ratio > hi,
        nonfinite: !log_ratio.is_finite(),
    }
}

/// `w(τ|θ_old, θ_new) = p(τ|θ_old) / p(τ|θ_new)`, clipped to `clip`.
/// The trajectory is assumed to have been sampled under `theta_new`.
pub fn importance_weight<P: Policy>(
    traj: &Trajectory,
    theta_old: &[f64],
    theta_new: &[f64],
    policy: &P,
    clip: ClipRange,
) -> Result<ImportanceWeight> {
    let old = policy.with_params(theta_old)?;
    let new = policy.with_params(theta_new)?;
    Ok(clip_log_ratio(log_importance_ratio(traj, &old, &new)?, clip))
}

/// Adam with bias correction.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(dim: usize, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    /// One descent step on `params` along `grad`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}

/// `Σ_τ Σ_t (V(s_t) − V̂_t)²`
pub fn value_loss(value: &ValueNetwork, trajs: &[Trajectory], targets: &[Vec<f64>]) -> Result<f64> {
    check_len(trajs.len(), targets.len())?;
    let mut loss = 0.0;
    for (traj, tgt) in trajs.iter().zip(targets) {
        check_len(traj.len(), tgt.len())?;
        for (s, y) in traj.states.iter().zip(tgt) {
            loss += (value.value(s)? - y).powi(2);
        }
    }
    Ok(loss)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitReport {
    pub initial_loss: f64,
    pub final_loss: f64,
}

/// Full-batch Adam on the summed squared value loss, `epochs` steps.
pub fn fit_value_network(
    value: &ValueNetwork,
    trajs: &[Trajectory],
    targets: &[Vec<f64>],
    lr: f64,
    epochs: usize,
) -> Result<(ValueNetwork, FitReport)> {
    if !(lr > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "learning rate must be positive, got {lr}"
        )));
    }
    check_len(trajs.len(), targets.len())?;
    let mut net = value.clone();
    let mut adam = Adam::new(net.params.len(), lr);
    let initial_loss = value_loss(&net, trajs, targets)?;
    let mut grad = vec![0.0; net.params.len()];
    for _ in 0..epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (traj, tgt) in trajs.iter().zip(targets) {
            check_len(traj.len(), tgt.len())?;
            for (s, y) in traj.states.iter().zip(tgt) {
                let tape = net.mlp.forward_tape(&net.params, s)?;
                let residual = tape.output()[0] - y;
                if residual != 0.0 {
                    net.mlp
                        .backward_add(&net.params, &tape, &[2.0 * residual], &mut grad)?;
                }
            }
        }
        adam.step(&mut net.params, &grad);
    }
    let final_loss = value_loss(&net, trajs, targets)?;
    Ok((
        net,
        FitReport {
            initial_loss,
            final_loss,
        },
    ))
}
