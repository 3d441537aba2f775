use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{apply_config, ActionSpace, EnvSpec, Environment, Transition};
use crate::error::{Error, Result};
use crate::policy::{Action, Policy};

/// Largest MDP the exact oracle accepts.
pub const ORACLE_MAX_STATES: usize = 8;
pub const ORACLE_MAX_HORIZON: usize = 10;

const ROW_TOL: f64 = 1e-9;

/// A finite MDP `(S, A, P, r, γ, ρ₀)` with horizon `H`.
///
/// The JSON form is `{"P": [s][a][s'], "r": [s][a], "rho0": [s], "gamma", "H"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularMdp {
    #[serde(rename = "P")]
    pub transitions: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "r")]
    pub rewards: Vec<Vec<f64>>,
    pub rho0: Vec<f64>,
    pub gamma: f64,
    #[serde(rename = "H")]
    pub horizon: usize,
}

pub fn one_hot(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

fn check_row(row: &[f64], what: &str) -> Result<()> {
    if row.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "{what} has a negative or non-finite probability"
        )));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_TOL {
        return Err(Error::InvalidParameter(format!("{what} sums to {sum}")));
    }
    Ok(())
}

impl TabularMdp {
    /// Validates shapes and probability rows.
    pub fn new(
        transitions: Vec<Vec<Vec<f64>>>,
        rewards: Vec<Vec<f64>>,
        rho0: Vec<f64>,
        gamma: f64,
        horizon: usize,
    ) -> Result<Self> {
        let mdp = TabularMdp {
            transitions,
            rewards,
            rho0,
            gamma,
            horizon,
        };
        mdp.validate()?;
        Ok(mdp)
    }

    pub fn validate(&self) -> Result<()> {
        let n_s = self.transitions.len();
        if n_s == 0 {
            return Err(Error::InvalidParameter("MDP needs at least one state".into()));
        }
        let n_a = self.transitions[0].len();
        if n_a == 0 {
            return Err(Error::InvalidParameter("MDP needs at least one action".into()));
        }
        if self.rewards.len() != n_s || self.rho0.len() != n_s {
            return Err(Error::InvalidParameter(
                "reward table and initial distribution must have one entry per state".into(),
            ));
        }
        for (s, rows) in self.transitions.iter().enumerate() {
            if rows.len() != n_a || self.rewards[s].len() != n_a {
                return Err(Error::InvalidParameter(format!(
                    "state {s} does not have {n_a} actions"
                )));
            }
            for (a, row) in rows.iter().enumerate() {
                if row.len() != n_s {
                    return Err(Error::InvalidParameter(format!(
                        "P({s},{a}) has {} entries, expected {n_s}",
                        row.len()
                    )));
                }
                check_row(row, &format!("P(·|{s},{a})"))?;
            }
        }
        if self.rewards.iter().flatten().any(|r| !r.is_finite()) {
            return Err(Error::InvalidParameter("rewards must be finite".into()));
        }
        check_row(&self.rho0, "rho0")?;
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

    pub fn from_json(text: &str) -> Result<Self> {
        let mdp: TabularMdp = serde_json::from_str(text)?;
        mdp.validate()?;
        Ok(mdp)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn n_states(&self) -> usize {
        self.transitions.len()
    }

    pub fn n_actions(&self) -> usize {
        self.transitions[0].len()
    }

    pub fn max_abs_reward(&self) -> f64 {
        self.rewards.iter().flatten().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// The 4-state, 2-action chain used by the tests and tabular presets.
    ///
    /// Action 1 moves right with probability 0.8 at a small cost; action 0
    /// drifts left. State 3 pays 1 per step, and staying put in state 0 pays a
    /// smaller 0.2, giving a local optimum.
    pub fn benchmark() -> Self {
        let right = |s: usize| (s + 1).min(3);
        let left = |s: usize| s.saturating_sub(1);
        let mut p = vec![vec![vec![0.0; 4]; 2]; 4];
        for (s, rows) in p.iter_mut().enumerate() {
            rows[0][left(s)] += 0.8;
            rows[0][s] += 0.2;
            rows[1][right(s)] += 0.8;
            rows[1][s] += 0.2;
        }
        let r = vec![
            vec![0.2, -0.05],
            vec![0.0, -0.05],
            vec![0.0, -0.05],
            vec![1.0, 0.95],
        ];
        TabularMdp::new(p, r, vec![0.4, 0.3, 0.2, 0.1], 0.9, 5).expect("benchmark MDP is valid")
    }
}

/// A tabular MDP as a stateful environment with one-hot observations.
#[derive(Clone, Debug)]
pub struct TabularEnv {
    pub mdp: TabularMdp,
    spec: EnvSpec,
    state: Option<usize>,
}

impl TabularEnv {
    pub fn new(mdp: TabularMdp) -> Self {
        let r = mdp.max_abs_reward();
        let spec = EnvSpec {
            name: "tabular".into(),
            state_dim: mdp.n_states(),
            action_space: ActionSpace::Discrete(mdp.n_actions()),
            horizon: mdp.horizon,
            gamma: mdp.gamma,
            reward_range: (-r, r),
        };
        TabularEnv {
            mdp,
            spec,
            state: None,
        }
    }

    pub fn current_state(&self) -> Option<usize> {
        self.state
    }
}

fn draw<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (i, p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

impl Environment for TabularEnv {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<f64> {
        let s = draw(&self.mdp.rho0, rng);
        self.state = Some(s);
        one_hot(self.mdp.n_states(), s)
    }

    fn step<R: Rng + ?Sized>(&mut self, action: &Action, rng: &mut R) -> Result<Transition> {
        let s = self.state.ok_or(Error::EpisodeDone)?;
        let a = self.spec.action_space.clamp(action)?.discrete()?;
        let next = draw(&self.mdp.transitions[s][a], rng);
        self.state = Some(next);
        Ok(Transition {
            next_state: one_hot(self.mdp.n_states(), next),
            reward: self.mdp.rewards[s][a],
            done: false,
        })
    }

    fn configure(&mut self, horizon: Option<usize>, gamma: Option<f64>) -> Result<()> {
        apply_config(&mut self.spec, horizon, gamma)?;
        self.mdp.horizon = self.spec.horizon;
        self.mdp.gamma = self.spec.gamma;
        Ok(())
    }
}

/// Exact finite-horizon objective `J(θ) = E[Σ_{t<H} γᵗ r_t]` and its gradient
/// for a discrete policy acting on one-hot states.
///
/// Uses forward state-occupancy and backward value recursions:
/// `∇J = Σ_t Σ_s d_t(s) Σ_a π(a|s) ∇log π(a|s) Q_t(s, a)` where `Q_t` carries
/// the absolute discount `γ^j` of every future reward, so this is exactly the
/// expectation of the PGT and REINFORCE estimators.
pub fn exact_policy_value_and_gradient<P: Policy>(
    mdp: &TabularMdp,
    policy: &P,
) -> Result<(f64, Vec<f64>)> {
    let n_s = mdp.n_states();
    let n_a = mdp.n_actions();
    let h = mdp.horizon;
    if n_s > ORACLE_MAX_STATES || h > ORACLE_MAX_HORIZON {
        return Err(Error::SizeLimit(format!(
            "{n_s} states, horizon {h} (limits: {ORACLE_MAX_STATES} states, horizon {ORACLE_MAX_HORIZON})"
        )));
    }

    let mut probs = Vec::with_capacity(n_s);
    let mut scores = Vec::with_capacity(n_s);
    for s in 0..n_s {
        let state = one_hot(n_s, s);
        let p = policy.action_probs(&state).ok_or_else(|| {
            Error::InvalidParameter("the exact oracle needs a discrete policy".into())
        })?;
        if p.len() != n_a {
            return Err(Error::DimensionMismatch {
                expected: n_a,
                actual: p.len(),
            });
        }
        let sc = (0..n_a)
            .map(|a| policy.score(&state, &Action::Discrete(a)))
            .collect::<Result<Vec<_>>>()?;
        probs.push(p);
        scores.push(sc);
    }

    // d[t][s] = P(s_t = s)
    let mut occupancy = vec![mdp.rho0.clone()];
    for t in 0..h.saturating_sub(1) {
        let mut next = vec![0.0; n_s];
        for s in 0..n_s {
            for a in 0..n_a {
                let mass = occupancy[t][s] * probs[s][a];
                for (sp, p) in mdp.transitions[s][a].iter().enumerate() {
                    next[sp] += mass * p;
                }
            }
        }
        occupancy.push(next);
    }

    let mut grad = vec![0.0; policy.num_params()];
    let mut value_next = vec![0.0; n_s];
    for t in (0..h).rev() {
        let discount = mdp.gamma.powi(t as i32);
        let mut value = vec![0.0; n_s];
        for s in 0..n_s {
            for a in 0..n_a {
                let future: f64 = mdp.transitions[s][a]
                    .iter()
                    .zip(&value_next)
                    .map(|(p, v)| p * v)
                    .sum();
                let q = discount * mdp.rewards[s][a] + future;
                value[s] += probs[s][a] * q;
                let w = occupancy[t][s] * probs[s][a] * q;
                for (g, sc) in grad.iter_mut().zip(&scores[s][a]) {
                    *g += w * sc;
                }
            }
        }
        value_next = value;
    }
    let j = mdp.rho0.iter().zip(&value_next).map(|(p, v)| p * v).sum();
    Ok((j, grad))
}
