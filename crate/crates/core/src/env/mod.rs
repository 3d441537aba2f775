//! Seeded environments and rollouts.
//!
//! Three classic-control tasks with deterministic dynamics and a finite
//! tabular MDP with stochastic transitions. Every environment is stateful:
//! [`Environment::reset`] starts an episode and [`Environment::step`] advances
//! it, rejecting steps after the episode has terminated.

mod cartpole;
mod mountain_car;
mod pendulum;
mod tabular;

pub use cartpole::CartPole;
pub use mountain_car::MountainCarContinuous;
pub use pendulum::Pendulum;
pub use tabular::{exact_policy_value_and_gradient, one_hot, TabularEnv, TabularMdp};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{Action, Policy};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ActionSpace {
    Discrete(usize),
    Box { low: Vec<f64>, high: Vec<f64> },
}

impl ActionSpace {
    pub fn dim(&self) -> usize {
        match self {
            ActionSpace::Discrete(n) => *n,
            ActionSpace::Box { low, .. } => low.len(),
        }
    }

    /// Validates a discrete action or clamps a continuous one to the box.
    pub fn clamp(&self, action: &Action) -> Result<Action> {
        match (self, action) {
            (ActionSpace::Discrete(n), Action::Discrete(a)) if a < n => Ok(action.clone()),
            (ActionSpace::Discrete(n), Action::Discrete(a)) => Err(Error::InvalidAction(
                format!("action {a} out of range for {n} actions"),
            )),
            (ActionSpace::Box { low, high }, Action::Continuous(a)) if a.len() == low.len() => {
                Ok(Action::Continuous(
                    a.iter()
                        .zip(low.iter().zip(high))
                        .map(|(x, (lo, hi))| x.clamp(*lo, *hi))
                        .collect(),
                ))
            }
            _ => Err(Error::InvalidAction(format!(
                "{action:?} does not belong to {self:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub name: String,
    pub state_dim: usize,
    pub action_space: ActionSpace,
    pub horizon: usize,
    pub gamma: f64,
    /// Every emitted reward lies in this closed interval.
    pub reward_range: (f64, f64),
}

impl EnvSpec {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "discount must lie in (0, 1), got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub next_state: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

pub trait Environment {
    fn spec(&self) -> &EnvSpec;

    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<f64>;

    fn step<R: Rng + ?Sized>(&mut self, action: &Action, rng: &mut R) -> Result<Transition>;

    /// Overrides the horizon and discount, validating the result.
    fn configure(&mut self, horizon: Option<usize>, gamma: Option<f64>) -> Result<()>;
}

/// One episode: `states` holds the final state too, so it has one more entry
/// than the other per-step vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<Action>,
    pub rewards: Vec<f64>,
    /// log π(a_t|s_t) under the sampling policy.
    pub log_probs: Vec<f64>,
    /// True if the episode ended by termination rather than the horizon.
    pub terminated: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

/// Samples one episode of at most `horizon` steps.
pub fn rollout<E, P, R>(env: &mut E, policy: &P, rng: &mut R, horizon: usize) -> Result<Trajectory>
where
    E: Environment,
    P: Policy,
    R: Rng + ?Sized,
{
    if horizon > env.spec().horizon {
        return Err(Error::InvalidParameter(format!(
            "rollout horizon {horizon} exceeds the environment horizon {}",
            env.spec().horizon
        )));
    }
    let mut state = env.reset(rng);
    let mut traj = Trajectory {
        states: Vec::with_capacity(horizon + 1),
        actions: Vec::with_capacity(horizon),
        rewards: Vec::with_capacity(horizon),
        log_probs: Vec::with_capacity(horizon),
        terminated: false,
    };
    for _ in 0..horizon {
        let action = policy.sample_action(&state, rng)?;
        let log_prob = policy.log_prob(&state, &action)?;
        let tr = env.step(&action, rng)?;
        traj.states.push(std::mem::replace(&mut state, tr.next_state));
        traj.actions.push(action);
        traj.rewards.push(tr.reward);
        traj.log_probs.push(log_prob);
        if tr.done {
            traj.terminated = true;
            break;
        }
    }
    traj.states.push(state);
    Ok(traj)
}

/// Any of the built-in environments, for config-driven runs.
#[derive(Clone, Debug)]
pub enum EnvModel {
    CartPole(CartPole),
    MountainCar(MountainCarContinuous),
    Pendulum(Pendulum),
    Tabular(TabularEnv),
}

macro_rules! dispatch {
    ($self:expr, $e:ident => $body:expr) => {
        match $self {
            EnvModel::CartPole($e) => $body,
            EnvModel::MountainCar($e) => $body,
            EnvModel::Pendulum($e) => $body,
            EnvModel::Tabular($e) => $body,
        }
    };
}

impl Environment for EnvModel {
    fn spec(&self) -> &EnvSpec {
        dispatch!(self, e => e.spec())
    }

    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<f64> {
        dispatch!(self, e => e.reset(rng))
    }

    fn step<R: Rng + ?Sized>(&mut self, action: &Action, rng: &mut R) -> Result<Transition> {
        dispatch!(self, e => e.step(action, rng))
    }

    fn configure(&mut self, horizon: Option<usize>, gamma: Option<f64>) -> Result<()> {
        dispatch!(self, e => e.configure(horizon, gamma))
    }
}

pub(crate) fn apply_config(spec: &mut EnvSpec, horizon: Option<usize>, gamma: Option<f64>) -> Result<()> {
    let mut next = spec.clone();
    if let Some(h) = horizon {
        next.horizon = h;
    }
    if let Some(g) = gamma {
        next.gamma = g;
    }
    next.validate()?;
    *spec = next;
    Ok(())
}
