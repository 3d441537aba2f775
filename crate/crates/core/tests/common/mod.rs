//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use bgpo::env::{one_hot, TabularMdp, Trajectory};
use bgpo::estimate::{Estimator, EstimatorKind};
use bgpo::policy::{Action, Policy};

/// ψ and ∇ψ written out from their textbook definitions.
#[derive(Clone, Debug)]
pub enum Potential {
    Euclidean,
    Lp(f64),
    /// ½ Σ h_i x_i² with fixed positive weights.
    Weighted(Vec<f64>),
    /// Σ x ln x on one simplex.
    Entropy,
}

impl Potential {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Potential::Euclidean => 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
            Potential::Lp(p) => {
                let s: f64 = x.iter().map(|v| v.abs().powf(*p)).sum();
                0.5 * s.powf(2.0 / p)
            }
            Potential::Weighted(h) => 0.5 * x.iter().zip(h).map(|(v, h)| h * v * v).sum::<f64>(),
            Potential::Entropy => x.iter().map(|v| v * v.ln()).sum(),
        }
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Potential::Euclidean => x.to_vec(),
            Potential::Lp(p) => {
                let n = x.iter().map(|v| v.abs().powf(*p)).sum::<f64>().powf(1.0 / p);
                if n == 0.0 {
                    return vec![0.0; x.len()];
                }
                x.iter()
                    .map(|v| v.signum() * v.abs().powf(p - 1.0) * n.powf(2.0 - p))
                    .collect()
            }
            Potential::Weighted(h) => x.iter().zip(h).map(|(v, h)| h * v).collect(),
            Potential::Entropy => x.iter().map(|v| v.ln() + 1.0).collect(),
        }
    }

    pub fn distance(&self, y: &[f64], x: &[f64]) -> f64 {
        let g = self.grad(x);
        self.value(y) - self.value(x) - g.iter().zip(y.iter().zip(x)).map(|(g, (y, x))| g * (y - x)).sum::<f64>()
    }
}

/// Euclidean projection onto `{x : x_i ≥ floor, Σ x_i = 1}`.
pub fn project_simplex(y: &[f64], floor: f64) -> Vec<f64> {
    let n = y.len();
    let mass = 1.0 - floor * n as f64;
    let shifted: Vec<f64> = y.iter().map(|v| v - floor).collect();
    let mut sorted = shifted.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (i, s) in sorted.iter().enumerate() {
        cum += s;
        let t = (cum - mass) / (i + 1) as f64;
        if s - t > 0.0 {
            tau = t;
        }
    }
    shifted.iter().map(|v| (v - tau).max(0.0) + floor).collect()
}

/// Minimizes `⟨u, x⟩ + (1/λ) D_ψ(x, θ)` by projected gradient descent with
/// Barzilai-Borwein steps, on ℝ^d or on the simplex.
pub fn prox_oracle(psi: &Potential, theta: &[f64], u: &[f64], lambda: f64) -> Vec<f64> {
    let on_simplex = matches!(psi, Potential::Entropy);
    let project = |x: Vec<f64>| if on_simplex { project_simplex(&x, 1e-15) } else { x };
    let anchor = psi.grad(theta);
    let grad = |x: &[f64]| -> Vec<f64> {
        let g = psi.grad(x);
        let mut out: Vec<f64> = (0..x.len()).map(|i| u[i] + (g[i] - anchor[i]) / lambda).collect();
        if on_simplex {
            // Projection ignores shifts along the all-ones direction.
            let mean = out.iter().sum::<f64>() / out.len() as f64;
            out.iter_mut().for_each(|v| *v -= mean);
        }
        out
    };
    let mut x = theta.to_vec();
    let mut g = grad(&x);
    let mut step = lambda * 1e-2;
    for _ in 0..200_000 {
        let next = project(x.iter().zip(&g).map(|(x, g)| x - step * g).collect());
        let g_next = grad(&next);
        let s: Vec<f64> = next.iter().zip(&x).map(|(a, b)| a - b).collect();
        let moved = s.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if moved < 1e-15 {
            return next;
        }
        let y: Vec<f64> = g_next.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ss: f64 = s.iter().map(|v| v * v).sum();
        step = if sy > 0.0 { ss / sy } else { step };
        if on_simplex {
            // Keep the trial point inside the domain of ln.
            let shrink = next
                .iter()
                .zip(&g_next)
                .filter(|(_, g)| **g > 0.0)
                .map(|(x, g)| 0.5 * x / g)
                .fold(f64::INFINITY, f64::min);
            step = step.min(shrink.max(1e-18));
        }
        x = next;
        g = g_next;
    }
    x
}

/// Every trajectory of a small tabular MDP under `policy`, with its probability.
pub fn enumerate_trajectories<P: Policy>(mdp: &TabularMdp, policy: &P) -> Vec<(f64, Trajectory)> {
    let n_s = mdp.n_states();
    let n_a = mdp.n_actions();
    let mut out = Vec::new();
    let mut stack: Vec<(f64, Vec<usize>, Vec<usize>)> = (0..n_s)
        .filter(|&s| mdp.rho0[s] > 0.0)
        .map(|s| (mdp.rho0[s], vec![s], vec![]))
        .collect();
    while let Some((prob, states, actions)) = stack.pop() {
        if actions.len() == mdp.horizon {
            let traj = Trajectory {
                states: states.iter().map(|&s| one_hot(n_s, s)).collect(),
                actions: actions.iter().map(|&a| Action::Discrete(a)).collect(),
                rewards: states
                    .iter()
                    .zip(&actions)
                    .map(|(&s, &a)| mdp.rewards[s][a])
                    .collect(),
                log_probs: states
                    .iter()
                    .zip(&actions)
                    .map(|(&s, &a)| {
                        policy
                            .log_prob(&one_hot(n_s, s), &Action::Discrete(a))
                            .unwrap()
                    })
                    .collect(),
                terminated: false,
            };
            out.push((prob, traj));
            continue;
        }
        let s = *states.last().unwrap();
        let pi = policy.action_probs(&one_hot(n_s, s)).unwrap();
        for a in 0..n_a {
            for s2 in 0..n_s {
                let p = prob * pi[a] * mdp.transitions[s][a][s2];
                if p > 0.0 {
                    let mut st = states.clone();
                    st.push(s2);
                    let mut ac = actions.clone();
                    ac.push(a);
                    stack.push((p, st, ac));
                }
            }
        }
    }
    out
}

/// Exact mean and per-component variance of an estimator by enumeration.
pub fn exact_moments<P: Policy>(
    mdp: &TabularMdp,
    policy: &P,
    kind: &EstimatorKind,
) -> (Vec<f64>, Vec<f64>) {
    let est = Estimator::new(kind.clone(), mdp.gamma).unwrap();
    let trajs = enumerate_trajectories(mdp, policy);
    let d = policy.num_params();
    let mut mean = vec![0.0; d];
    let mut second = vec![0.0; d];
    for (p, t) in &trajs {
        let g = est.gradient(policy, t, None).unwrap();
        for i in 0..d {
            mean[i] += p * g[i];
            second[i] += p * g[i] * g[i];
        }
    }
    let var = (0..d).map(|i| second[i] - mean[i] * mean[i]).collect();
    (mean, var)
}

/// `J(θ)` by enumeration: the probability-weighted discounted return.
pub fn enumerated_value<P: Policy>(mdp: &TabularMdp, policy: &P) -> f64 {
    enumerate_trajectories(mdp, policy)
        .iter()
        .map(|(p, t)| {
            p * t
                .rewards
                .iter()
                .enumerate()
                .map(|(j, r)| mdp.gamma.powi(j as i32) * r)
                .sum::<f64>()
        })
        .sum()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Population mean and variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n)
}
