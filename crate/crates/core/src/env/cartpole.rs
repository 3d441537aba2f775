use rand::Rng;

use super::{apply_config, ActionSpace, EnvSpec, Environment, Transition};
use crate::error::{Error, Result};
use crate::policy::Action;

/// Gravitational acceleration (m/s²).
pub const GRAVITY: f64 = 9.8;
/// Cart mass (kg).
pub const MASS_CART: f64 = 1.0;
/// Pole mass (kg).
pub const MASS_POLE: f64 = 0.1;
/// Half the pole length (m).
pub const HALF_POLE_LENGTH: f64 = 0.5;
/// Magnitude of the horizontal push (N).
pub const FORCE_MAG: f64 = 10.0;
/// Euler integration step (s).
pub const TAU: f64 = 0.02;
/// Episode terminates when the pole leaves ±12°.
pub const THETA_THRESHOLD: f64 = 12.0 * 2.0 * std::f64::consts::PI / 360.0;
/// Episode terminates when the cart leaves ±2.4 m.
pub const X_THRESHOLD: f64 = 2.4;
/// Each initial state component is uniform in ±this.
pub const INIT_RANGE: f64 = 0.05;

/// Cart-pole balancing with two discrete actions: 0 pushes left, 1 pushes
/// right. State is `(x, ẋ, θ, θ̇)`; reward is +1 per step.
#[derive(Clone, Debug)]
pub struct CartPole {
    spec: EnvSpec,
    state: Option<[f64; 4]>,
    done: bool,
}

impl Default for CartPole {
    fn default() -> Self {
        Self::new()
    }
}

impl CartPole {
    pub fn new() -> Self {
        CartPole {
            spec: EnvSpec {
                name: "cartpole".into(),
                state_dim: 4,
                action_space: ActionSpace::Discrete(2),
                horizon: 100,
                gamma: 0.99,
                reward_range: (0.0, 1.0),
            },
            state: None,
            done: false,
        }
    }

    /// One Euler step of the cart-pole equations of motion.
    pub fn dynamics(state: [f64; 4], push_right: bool) -> [f64; 4] {
        let [x, x_dot, theta, theta_dot] = state;
        let force = if push_right { FORCE_MAG } else { -FORCE_MAG };
        let total_mass = MASS_CART + MASS_POLE;
        let pole_mass_length = MASS_POLE * HALF_POLE_LENGTH;
        let (sin, cos) = theta.sin_cos();
        let temp = (force + pole_mass_length * theta_dot * theta_dot * sin) / total_mass;
        let theta_acc = (GRAVITY * sin - cos * temp)
            / (HALF_POLE_LENGTH * (4.0 / 3.0 - MASS_POLE * cos * cos / total_mass));
        let x_acc = temp - pole_mass_length * theta_acc * cos / total_mass;
        [
            x + TAU * x_dot,
            x_dot + TAU * x_acc,
            theta + TAU * theta_dot,
            theta_dot + TAU * theta_acc,
        ]
    }

    pub fn is_terminal(state: &[f64; 4]) -> bool {
        state[0].abs() > X_THRESHOLD || state[2].abs() > THETA_THRESHOLD
    }

    /// Starts an episode from an explicit state.
    pub fn reset_to(&mut self, state: [f64; 4]) {
        self.state = Some(state);
        self.done = false;
    }
}

impl Environment for CartPole {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<f64> {
        let s = [(); 4].map(|_| rng.random_range(-INIT_RANGE..=INIT_RANGE));
        self.reset_to(s);
        s.to_vec()
    }

    fn step<R: Rng + ?Sized>(&mut self, action: &Action, _rng: &mut R) -> Result<Transition> {
        let state = match self.state {
            Some(s) if !self.done => s,
            _ => return Err(Error::EpisodeDone),
        };
        let a = self.spec.action_space.clamp(action)?.discrete()?;
        let next = Self::dynamics(state, a == 1);
        self.done = Self::is_terminal(&next);
        self.state = Some(next);
        Ok(Transition {
            next_state: next.to_vec(),
            reward: 1.0,
            done: self.done,
        })
    }

    fn configure(&mut self, horizon: Option<usize>, gamma: Option<f64>) -> Result<()> {
        apply_config(&mut self.spec, horizon, gamma)
    }
}
