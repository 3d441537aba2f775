use rand::Rng;

use super::{apply_config, ActionSpace, EnvSpec, Environment, Transition};
use crate::error::{Error, Result};
use crate::policy::Action;

pub const MIN_POSITION: f64 = -1.2;
pub const MAX_POSITION: f64 = 0.6;
pub const MAX_SPEED: f64 = 0.07;
pub const GOAL_POSITION: f64 = 0.45;
/// Force multiplier applied to the clamped action.
pub const POWER: f64 = 0.0015;
/// Gravity coefficient of the `cos(3x)` hill.
pub const HILL_GRAVITY: f64 = 0.0025;
pub const GOAL_REWARD: f64 = 100.0;
/// Per-step cost is `ACTION_COST · a²` on the clamped action.
pub const ACTION_COST: f64 = 0.1;

/// Continuous mountain car. State is `(position, velocity)`, the action is a
/// force in `[−1, 1]` (clamped), and reaching the goal ends the episode with a
/// +100 bonus.
#[derive(Clone, Debug)]
pub struct MountainCarContinuous {
    spec: EnvSpec,
    state: Option<[f64; 2]>,
    done: bool,
}

impl Default for MountainCarContinuous {
    fn default() -> Self {
        Self::new()
    }
}

impl MountainCarContinuous {
    pub fn new() -> Self {
        MountainCarContinuous {
            spec: EnvSpec {
                name: "mountain_car_continuous".into(),
                state_dim: 2,
                action_space: ActionSpace::Box {
                    low: vec![-1.0],
                    high: vec![1.0],
                },
                horizon: 500,
                gamma: 0.99,
                reward_range: (-ACTION_COST, GOAL_REWARD),
            },
            state: None,
            done: false,
        }
    }

    /// One step of the hill-climb dynamics for an already clamped force.
    /// Returns the next state and whether the goal was reached.
    pub fn dynamics(state: [f64; 2], force: f64) -> ([f64; 2], bool) {
        let [position, velocity] = state;
        let velocity = (velocity + force * POWER - HILL_GRAVITY * (3.0 * position).cos())
            .clamp(-MAX_SPEED, MAX_SPEED);
        let position = (position + velocity).clamp(MIN_POSITION, MAX_POSITION);
        let velocity = if position == MIN_POSITION && velocity < 0.0 {
            0.0
        } else {
            velocity
        };
        let done = position >= GOAL_POSITION && velocity >= 0.0;
        ([position, velocity], done)
    }

    pub fn reset_to(&mut self, state: [f64; 2]) {
        self.state = Some(state);
        self.done = false;
    }
}

impl Environment for MountainCarContinuous {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<f64> {
        let s = [rng.random_range(-0.6..=-0.4), 0.0];
        self.reset_to(s);
        s.to_vec()
    }

    fn step<R: Rng + ?Sized>(&mut self, action: &Action, _rng: &mut R) -> Result<Transition> {
        let state = match self.state {
            Some(s) if !self.done => s,
            _ => return Err(Error::EpisodeDone),
        };
        let force = self.spec.action_space.clamp(action)?.continuous()?[0];
        let (next, done) = Self::dynamics(state, force);
        let mut reward = -ACTION_COST * force * force;
        if done {
            reward += GOAL_REWARD;
        }
        self.done = done;
        self.state = Some(next);
        Ok(Transition {
            next_state: next.to_vec(),
            reward,
            done,
        })
    }

    fn configure(&mut self, horizon: Option<usize>, gamma: Option<f64>) -> Result<()> {
        apply_config(&mut self.spec, horizon, gamma)
    }
}
