use std::f64::consts::PI;

use rand::Rng;

use super::{apply_config, ActionSpace, EnvSpec, Environment, Transition};
use crate::error::{Error, Result};
use crate::policy::Action;

pub const MAX_SPEED: f64 = 8.0;
pub const MAX_TORQUE: f64 = 2.0;
pub const DT: f64 = 0.05;
pub const G: f64 = 10.0;
pub const MASS: f64 = 1.0;
pub const LENGTH: f64 = 1.0;

/// Largest per-step cost: π² + 0.1·8² + 0.001·2².
pub const MAX_COST: f64 = PI * PI + 0.1 * MAX_SPEED * MAX_SPEED + 0.001 * MAX_TORQUE * MAX_TORQUE;

/// Torque-limited pendulum swing-up. The internal state is `(θ, θ̇)` with θ = 0
/// upright; observations are `(cos θ, sin θ, θ̇)`. Reward is
/// `−(θ² + 0.1 θ̇² + 0.001 u²)` with θ normalized to `[−π, π)`. Never
/// terminates; episodes end at the horizon.
#[derive(Clone, Debug)]
pub struct Pendulum {
    spec: EnvSpec,
    state: Option<[f64; 2]>,
}

impl Default for Pendulum {
    fn default() -> Self {
        Self::new()
    }
}

pub fn angle_normalize(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

impl Pendulum {
    pub fn new() -> Self {
        Pendulum {
            spec: EnvSpec {
                name: "pendulum".into(),
                state_dim: 3,
                action_space: ActionSpace::Box {
                    low: vec![-MAX_TORQUE],
                    high: vec![MAX_TORQUE],
                },
                horizon: 500,
                gamma: 0.99,
                reward_range: (-MAX_COST, 0.0),
            },
            state: None,
        }
    }

    /// The internal `(θ, θ̇)` state of the current episode.
    pub fn angle_state(&self) -> Option<[f64; 2]> {
        self.state
    }

    pub fn observe(state: [f64; 2]) -> Vec<f64> {
        vec![state[0].cos(), state[0].sin(), state[1]]
    }

    /// One step for an already clamped torque; returns the next state and the reward.
    pub fn dynamics(state: [f64; 2], torque: f64) -> ([f64; 2], f64) {
        let [th, thdot] = state;
        let cost = angle_normalize(th).powi(2) + 0.1 * thdot * thdot + 0.001 * torque * torque;
        let thdot = (thdot
            + (3.0 * G / (2.0 * LENGTH) * th.sin() + 3.0 / (MASS * LENGTH * LENGTH) * torque) * DT)
            .clamp(-MAX_SPEED, MAX_SPEED);
        ([th + thdot * DT, thdot], -cost)
    }

    pub fn reset_to(&mut self, state: [f64; 2]) {
        self.state = Some(state);
    }
}

impl Environment for Pendulum {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<f64> {
        let s = [rng.random_range(-PI..=PI), rng.random_range(-1.0..=1.0)];
        self.reset_to(s);
        Self::observe(s)
    }

    fn step<R: Rng + ?Sized>(&mut self, action: &Action, _rng: &mut R) -> Result<Transition> {
        let state = self.state.ok_or(Error::EpisodeDone)?;
        let torque = self.spec.action_space.clamp(action)?.continuous()?[0];
        let (next, reward) = Self::dynamics(state, torque);
        self.state = Some(next);
        Ok(Transition {
            next_state: Self::observe(next),
            reward,
            done: false,
        })
    }

    fn configure(&mut self, horizon: Option<usize>, gamma: Option<f64>) -> Result<()> {
        apply_config(&mut self.spec, horizon, gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reset_range() {
        let mut env = Pendulum::new();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for _ in 0..10_000 {
            env.reset(&mut rng);
            let [th, thdot] = env.angle_state().unwrap();
            assert!((-PI..=PI).contains(&th));
            assert!((-1.0..=1.0).contains(&thdot));
            lo = lo.min(th);
            hi = hi.max(th);
        }
        assert!(lo < -3.1 && hi > 3.1);
    }

    #[test]
    fn upright_at_rest_is_an_equilibrium_with_zero_cost() {
        let ([th, thdot], r) = Pendulum::dynamics([0.0, 0.0], 0.0);
        assert_eq!((th, thdot, r), (0.0, 0.0, -0.0));
    }

    #[test]
    fn rewards_stay_in_range() {
        let mut env = Pendulum::new();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (lo, hi) = env.spec().reward_range;
        env.reset(&mut rng);
        for _ in 0..2000 {
            let a = rng.random_range(-5.0..5.0);
            let tr = env.step(&Action::Continuous(vec![a]), &mut rng).unwrap();
            assert!(tr.reward >= lo && tr.reward <= hi);
            assert!(!tr.done);
        }
    }

    #[test]
    fn normalize_wraps_into_half_open_interval() {
        assert!((angle_normalize(3.0 * PI) + PI).abs() < 1e-12);
        assert!((angle_normalize(0.5) - 0.5).abs() < 1e-15);
    }
}
