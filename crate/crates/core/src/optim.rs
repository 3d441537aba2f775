//! BGPO and VR-BGPO.
//!
//! One iteration `k` is split in two halves so callers can interleave their
//! own work (value-network fits, evaluation) at the points the algorithms
//! prescribe:
//!
//! 1. [`BregmanOptimizer::propose`]: θ̃ = prox(θ_k, u_k), η_k, and
//!    θ_{k+1} = θ_k + η_k(θ̃ − θ_k).
//! 2. [`BregmanOptimizer::absorb`]: with a fresh batch sampled at θ_{k+1},
//!    β_{k+1} and the momentum update producing u_{k+1}.
//!
//! The momentum buffer `u` approximates ∇f = −∇J, so gradient estimates
//! (ascent directions for J) enter with a minus sign.

use serde::{Deserialize, Serialize};

use crate::env::Trajectory;
use crate::error::{Error, Result};
use crate::estimate::{clip_log_ratio, log_importance_ratio, ClipRange};
use crate::mirror::{MirrorMap, MirrorMapKind};
use crate::params::{axpy, norm, ParamVector};
use crate::policy::Policy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Bgpo,
    VrBgpo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimizerKind {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub actor_critic: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub b: f64,
    pub m: f64,
    pub c: f64,
    pub lambda: f64,
}

impl ScheduleParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("b", self.b), ("m", self.m), ("c", self.c), ("lambda", self.lambda)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "schedule parameter {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Picks the smallest `m` satisfying the convergence theorems' conditions
    /// on `m` for the given `b`, `c`, so neither clamp is ever active.
    ///
    /// BGPO: `m ≥ max(b², (cb)²)`. VR-BGPO: `m ≥ max(2, b³, (cb)³, (5/(6b))^{2/3})`.
    pub fn theorem_regime(algorithm: Algorithm, b: f64, c: f64, lambda: f64) -> Self {
        let m = match algorithm {
            Algorithm::Bgpo => (b * b).max((c * b).powi(2)).max(2.0),
            Algorithm::VrBgpo => 2f64
                .max(b.powi(3))
                .max((c * b).powi(3))
                .max((5.0 / (6.0 * b)).powf(2.0 / 3.0)),
        };
        ScheduleParams { b, m, c, lambda }
    }
}

/// A schedule value together with its pre-clamp formula value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scheduled {
    pub value: f64,
    pub raw: f64,
    pub clamped: bool,
}

impl Scheduled {
    fn clamp_to_one(raw: f64) -> Self {
        Scheduled {
            value: raw.min(1.0),
            raw,
            clamped: raw > 1.0,
        }
    }
}

/// `η_k = b/(m+k)^{1/2}` (BGPO) or `b/(m+k)^{1/3}` (VR-BGPO), clamped to ≤ 1.
pub fn eta_schedule(algorithm: Algorithm, params: &ScheduleParams, k: u64) -> Result<Scheduled> {
    if k == 0 {
        return Err(Error::InvalidParameter("step index starts at 1".into()));
    }
    let base = params.m + k as f64;
    let raw = match algorithm {
        Algorithm::Bgpo => params.b / base.sqrt(),
        Algorithm::VrBgpo => params.b / base.cbrt(),
    };
    Ok(Scheduled::clamp_to_one(raw))
}

/// `β_{k+1} = c η_k` (BGPO) or `c η_k²` (VR-BGPO), clamped to ≤ 1.
pub fn beta_schedule(algorithm: Algorithm, params: &ScheduleParams, eta_prev: f64) -> Scheduled {
    let raw = match algorithm {
        Algorithm::Bgpo => params.c * eta_prev,
        Algorithm::VrBgpo => params.c * eta_prev * eta_prev,
    };
    Scheduled::clamp_to_one(raw)
}

/// The momentum buffer and the schedule values that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientEstimate {
    /// u_k, a descent direction for f = −J.
    pub u: ParamVector,
    pub k: u64,
    /// η_{k−1}, or 0 before the first step.
    pub eta: f64,
    /// β_k, or 1 for u_1 = −g(τ_1|θ_1).
    pub beta: f64,
}

/// `u_{k+1} = −β g_new + (1−β) (u_k + correction)`.
///
/// BGPO passes no correction. VR-BGPO passes `w g(τ|θ_k) − g(τ|θ_{k+1})`.
pub fn momentum_update(u: &[f64], beta: f64, g_new: &[f64], correction: Option<&[f64]>) -> ParamVector {
    let keep = 1.0 - beta;
    match correction {
        None => u.iter().zip(g_new).map(|(u, g)| -beta * g + keep * u).collect(),
        Some(corr) => u
            .iter()
            .zip(g_new)
            .zip(corr)
            .map(|((u, g), d)| -beta * g + keep * (u + d))
            .collect(),
    }
}

/// Mean of per-trajectory gradients in batch order.
pub fn batch_mean<P, G>(policy: &P, batch: &[Trajectory], grad: &G) -> Result<ParamVector>
where
    P: Policy,
    G: Fn(&P, &Trajectory) -> Result<ParamVector>,
{
    let mut sum = vec![0.0; policy.num_params()];
    for traj in batch {
        axpy(&mut sum, 1.0, &grad(policy, traj)?);
    }
    let n = batch.len().max(1) as f64;
    Ok(sum.into_iter().map(|x| x / n).collect())
}

/// What happened in [`BregmanOptimizer::propose`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProposeInfo {
    pub k: u64,
    pub eta: Scheduled,
    /// `‖(θ_k − θ̃_{k+1})/λ‖`, using u_k in place of ∇f(θ_k).
    pub metric: f64,
}

/// What happened in [`BregmanOptimizer::absorb`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AbsorbInfo {
    pub beta: f64,
    pub beta_clamped: bool,
    /// VR-BGPO only: mean clipped importance weight over the batch.
    pub mean_weight: f64,
    pub clipped_weights: usize,
    pub nonfinite_weights: usize,
}

#[derive(Clone, Debug)]
pub struct BregmanOptimizer<P: Policy> {
    pub algorithm: Algorithm,
    pub schedule: ScheduleParams,
    pub clip: ClipRange,
    mirror: MirrorMap,
    policy: P,
    previous: Option<P>,
    estimate: Option<GradientEstimate>,
    pending_eta: Option<f64>,
}

impl<P: Policy> BregmanOptimizer<P> {
    pub fn new(
        policy: P,
        algorithm: Algorithm,
        schedule: ScheduleParams,
        mirror: MirrorMapKind,
        clip: ClipRange,
    ) -> Result<Self> {
        schedule.validate()?;
        clip.validate()?;
        let mirror = MirrorMap::new(mirror, policy.num_params())?;
        if mirror.kind.is_constrained() {
            crate::mirror::check_simplex(policy.params(), row_len(&mirror.kind))?;
        }
        Ok(BregmanOptimizer {
            algorithm,
            schedule,
            clip,
            mirror,
            policy,
            previous: None,
            estimate: None,
            pending_eta: None,
        })
    }

    /// θ_k.
    pub fn policy(&self) -> &P {
        &self.policy
    }

    /// θ_{k−1}, once at least one step has been taken.
    pub fn previous(&self) -> Option<&P> {
        self.previous.as_ref()
    }

    pub fn mirror(&self) -> &MirrorMap {
        &self.mirror
    }

    pub fn estimate(&self) -> Option<&GradientEstimate> {
        self.estimate.as_ref()
    }

    /// The index k of the next [`propose`](Self::propose).
    pub fn iteration(&self) -> u64 {
        self.estimate.as_ref().map_or(0, |e| e.k)
    }

    /// `u_1 = −mean g(τ_1|θ_1)` from a batch sampled at θ_1.
    pub fn initialize<G>(&mut self, batch: &[Trajectory], grad: G) -> Result<()>
    where
        G: Fn(&P, &Trajectory) -> Result<ParamVector>,
    {
        let g = batch_mean(&self.policy, batch, &grad)?;
        let u: ParamVector = g.iter().map(|x| -x).collect();
        if !u.is_finite() {
            return Err(Error::NonFinite { iteration: 0 });
        }
        self.mirror.observe(&u)?;
        self.estimate = Some(GradientEstimate {
            u,
            k: 1,
            eta: 0.0,
            beta: 1.0,
        });
        self.previous = None;
        self.pending_eta = None;
        Ok(())
    }

    fn current(&self) -> Result<&GradientEstimate> {
        self.estimate
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("optimizer used before initialize".into()))
    }

    /// Moves θ_k to θ_{k+1}.
    pub fn propose(&mut self) -> Result<ProposeInfo> {
        if self.pending_eta.is_some() {
            return Err(Error::InvalidParameter(
                "propose called twice without absorb".into(),
            ));
        }
        let est = self.current()?;
        let k = est.k;
        let lambda = self.schedule.lambda;
        let theta = self.policy.params();
        let tilde = self
            .mirror
            .prox_step(theta, &est.u, lambda)
            .map_err(|e| match e {
                Error::StepFailure => Error::NonFinite { iteration: k as usize },
                e => e,
            })?;
        let metric = theta
            .iter()
            .zip(tilde.iter())
            .map(|(t, p)| ((t - p) / lambda).powi(2))
            .sum::<f64>()
            .sqrt();
        let eta = eta_schedule(self.algorithm, &self.schedule, k)?;
        let next = self
            .mirror
            .kind
            .interpolate(theta, &tilde, &est.u, lambda, eta.value);
        if !next.is_finite() {
            return Err(Error::NonFinite { iteration: k as usize });
        }
        let next_policy = self.policy.with_params(&next)?;
        self.previous = Some(std::mem::replace(&mut self.policy, next_policy));
        self.pending_eta = Some(eta.value);
        Ok(ProposeInfo { k, eta, metric })
    }

    /// Forms u_{k+1} from a batch sampled at θ_{k+1} and advances k.
    pub fn absorb<G>(&mut self, batch: &[Trajectory], grad: G) -> Result<AbsorbInfo>
    where
        G: Fn(&P, &Trajectory) -> Result<ParamVector>,
    {
        let eta = self
            .pending_eta
            .ok_or_else(|| Error::InvalidParameter("absorb called without propose".into()))?;
        let est = self.current()?;
        let k = est.k;
        let beta = beta_schedule(self.algorithm, &self.schedule, eta);
        let g_new = batch_mean(&self.policy, batch, &grad)?;
        let mut info = AbsorbInfo {
            beta: beta.value,
            beta_clamped: beta.clamped,
            ..AbsorbInfo::default()
        };
        let u = match self.algorithm {
            Algorithm::Bgpo => momentum_update(&est.u, beta.value, &g_new, None),
            Algorithm::VrBgpo => {
                let old = self.previous.as_ref().expect("propose stores θ_k");
                let mut weighted = vec![0.0; g_new.len()];
                let mut weight_sum = 0.0;
                for traj in batch {
                    let w = clip_log_ratio(log_importance_ratio(traj, old, &self.policy)?, self.clip);
                    info.clipped_weights += w.clipped as usize;
                    info.nonfinite_weights += w.nonfinite as usize;
                    weight_sum += w.weight;
                    axpy(&mut weighted, w.weight, &grad(old, traj)?);
                }
                let n = batch.len().max(1) as f64;
                info.mean_weight = weight_sum / n;
                let correction: Vec<f64> = weighted
                    .iter()
                    .zip(g_new.iter())
                    .map(|(wg, g)| wg / n - g)
                    .collect();
                momentum_update(&est.u, beta.value, &g_new, Some(&correction))
            }
        };
        if !u.is_finite() {
            return Err(Error::NonFinite { iteration: k as usize });
        }
        self.mirror.observe(&u)?;
        self.estimate = Some(GradientEstimate {
            u,
            k: k + 1,
            eta,
            beta: beta.value,
        });
        self.pending_eta = None;
        Ok(info)
    }

    /// One full iteration: propose, sample at θ_{k+1}, absorb.
    pub fn step<S, G>(&mut self, mut sample: S, grad: G) -> Result<(ProposeInfo, AbsorbInfo)>
    where
        S: FnMut(&P) -> Result<Vec<Trajectory>>,
        G: Fn(&P, &Trajectory) -> Result<ParamVector>,
    {
        let proposed = self.propose()?;
        let batch = sample(&self.policy)?;
        let absorbed = self.absorb(&batch, grad)?;
        Ok((proposed, absorbed))
    }

    /// `‖𝓑(θ_k)‖` with the true gradient: u = −∇J(θ_k) under the current ψ_k.
    pub fn exact_metric(&self, grad_j: &[f64]) -> Result<f64> {
        let u: Vec<f64> = grad_j.iter().map(|g| -g).collect();
        Ok(norm(&self.mirror.bregman_gradient(
            self.policy.params(),
            &u,
            self.schedule.lambda,
        )?))
    }
}

fn row_len(kind: &MirrorMapKind) -> Option<usize> {
    match kind {
        MirrorMapKind::NegativeEntropy { row_len } => *row_len,
        _ => None,
    }
}
