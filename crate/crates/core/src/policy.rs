//! Parametric policies with exact score functions, and the value network.
//!
//! Parameter layout (stable across the crate): MLP parameters as documented in
//! [`crate::mlp`], followed by the Gaussian `log_std` entries when present.
//! Tabular policies store one probability row per state, row-major.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::mirror::{check_simplex, MirrorMapKind};
use crate::mlp::MlpSpec;
use crate::params::ParamVector;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Action {
    Discrete(usize),
    Continuous(Vec<f64>),
}

impl Action {
    pub fn discrete(&self) -> Result<usize> {
        match self {
            Action::Discrete(a) => Ok(*a),
            Action::Continuous(_) => Err(Error::InvalidAction(
                "expected a discrete action".into(),
            )),
        }
    }

    pub fn continuous(&self) -> Result<&[f64]> {
        match self {
            Action::Continuous(a) => Ok(a),
            Action::Discrete(_) => Err(Error::InvalidAction(
                "expected a continuous action".into(),
            )),
        }
    }
}

/// A stochastic policy π_θ(a|s).
pub trait Policy: Clone {
    fn num_params(&self) -> usize;

    fn params(&self) -> &[f64];

    fn set_params(&mut self, params: &[f64]) -> Result<()>;

    fn with_params(&self, params: &[f64]) -> Result<Self> {
        let mut p = self.clone();
        p.set_params(params)?;
        Ok(p)
    }

    fn log_prob(&self, state: &[f64], action: &Action) -> Result<f64>;

    /// ∇_θ log π_θ(a|s), in parameter order.
    fn score(&self, state: &[f64], action: &Action) -> Result<Vec<f64>>;

    fn sample_action<R: Rng + ?Sized>(&self, state: &[f64], rng: &mut R) -> Result<Action>;

    /// The full action distribution, for discrete policies.
    fn action_probs(&self, _state: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - lse).collect()
}

fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let draw: f64 = rng.random();
    let mut cum = 0.0;
    for (i, p) in probs.iter().enumerate() {
        cum += p;
        if draw < cum {
            return i;
        }
    }
    // Rounding left the cumulative sum a hair below one.
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

/// Softmax over MLP logits, one per discrete action.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoricalPolicy {
    pub mlp: MlpSpec,
    params: ParamVector,
}

impl CategoricalPolicy {
    pub fn new<R: Rng + ?Sized>(mlp: MlpSpec, rng: &mut R) -> Result<Self> {
        mlp.validate()?;
        let params = mlp.init(rng).into();
        Ok(CategoricalPolicy { mlp, params })
    }

    pub fn from_params(mlp: MlpSpec, params: impl Into<ParamVector>) -> Result<Self> {
        mlp.validate()?;
        let params = params.into();
        check_len(mlp.num_params(), params.len())?;
        Ok(CategoricalPolicy { mlp, params })
    }

    pub fn n_actions(&self) -> usize {
        self.mlp.output_dim()
    }

    pub fn probs(&self, state: &[f64]) -> Result<Vec<f64>> {
        let logits = self.mlp.forward(&self.params, state)?;
        Ok(log_softmax(&logits).into_iter().map(f64::exp).collect())
    }

    fn check_action(&self, action: &Action) -> Result<usize> {
        let a = action.discrete()?;
        if a >= self.n_actions() {
            return Err(Error::InvalidAction(format!(
                "action {a} out of range for {} actions",
                self.n_actions()
            )));
        }
        Ok(a)
    }
}

impl Policy for CategoricalPolicy {
    fn num_params(&self) -> usize {
        self.params.len()
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        check_len(self.params.len(), params.len())?;
        self.params.copy_from_slice(params);
        Ok(())
    }

    fn log_prob(&self, state: &[f64], action: &Action) -> Result<f64> {
        let a = self.check_action(action)?;
        let logits = self.mlp.forward(&self.params, state)?;
        Ok(log_softmax(&logits)[a])
    }

    fn score(&self, state: &[f64], action: &Action) -> Result<Vec<f64>> {
        let a = self.check_action(action)?;
        let tape = self.mlp.forward_tape(&self.params, state)?;
        let mut grad_logits: Vec<f64> = log_softmax(tape.output())
            .into_iter()
            .map(|l| -l.exp())
            .collect();
        grad_logits[a] += 1.0;
        self.mlp.backward(&self.params, &tape, &grad_logits)
    }

    fn sample_action<R: Rng + ?Sized>(&self, state: &[f64], rng: &mut R) -> Result<Action> {
        Ok(Action::Discrete(sample_categorical(&self.probs(state)?, rng)))
    }

    fn action_probs(&self, state: &[f64]) -> Option<Vec<f64>> {
        self.probs(state).ok()
    }
}

/// Diagonal Gaussian with an MLP mean and state-independent `log_std`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianPolicy {
    pub mlp: MlpSpec,
    /// MLP parameters followed by `log_std`.
    params: ParamVector,
}

impl GaussianPolicy {
    /// `log_std` starts at zero (unit standard deviation).
    pub fn new<R: Rng + ?Sized>(mlp: MlpSpec, rng: &mut R) -> Result<Self> {
        mlp.validate()?;
        let mut params = mlp.init(rng);
        params.extend(std::iter::repeat_n(0.0, mlp.output_dim()));
        Ok(GaussianPolicy {
            mlp,
            params: params.into(),
        })
    }

    pub fn from_params(mlp: MlpSpec, params: impl Into<ParamVector>) -> Result<Self> {
        mlp.validate()?;
        let params = params.into();
        check_len(mlp.num_params() + mlp.output_dim(), params.len())?;
        Ok(GaussianPolicy { mlp, params })
    }

    pub fn action_dim(&self) -> usize {
        self.mlp.output_dim()
    }

    fn split(&self) -> (&[f64], &[f64]) {
        self.params.split_at(self.mlp.num_params())
    }

    pub fn log_std(&self) -> &[f64] {
        self.split().1
    }

    pub fn mean(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.mlp.forward(self.split().0, state)
    }
}

impl Policy for GaussianPolicy {
    fn num_params(&self) -> usize {
        self.params.len()
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        check_len(self.params.len(), params.len())?;
        self.params.copy_from_slice(params);
        Ok(())
    }

    fn log_prob(&self, state: &[f64], action: &Action) -> Result<f64> {
        let a = action.continuous()?;
        check_len(self.action_dim(), a.len())?;
        let mean = self.mean(state)?;
        Ok(a.iter()
            .zip(&mean)
            .zip(self.log_std())
            .map(|((a, m), ls)| {
                let z = (a - m) * (-ls).exp();
                -0.5 * z * z - ls - 0.5 * LN_2PI
            })
            .sum())
    }

    fn score(&self, state: &[f64], action: &Action) -> Result<Vec<f64>> {
        let a = action.continuous()?;
        check_len(self.action_dim(), a.len())?;
        let (net, log_std) = self.split();
        let tape = self.mlp.forward_tape(net, state)?;
        let mut grad_mean = Vec::with_capacity(a.len());
        let mut grad_log_std = Vec::with_capacity(a.len());
        for ((a, m), ls) in a.iter().zip(tape.output()).zip(log_std) {
            let inv_std = (-ls).exp();
            let z = (a - m) * inv_std;
            grad_mean.push(z * inv_std);
            grad_log_std.push(z * z - 1.0);
        }
        let mut grad = self.mlp.backward(net, &tape, &grad_mean)?;
        grad.extend(grad_log_std);
        Ok(grad)
    }

    fn sample_action<R: Rng + ?Sized>(&self, state: &[f64], rng: &mut R) -> Result<Action> {
        let mean = self.mean(state)?;
        Ok(Action::Continuous(
            mean.iter()
                .zip(self.log_std())
                .map(|(m, ls)| {
                    let eps: f64 = rng.sample(StandardNormal);
                    m + ls.exp() * eps
                })
                .collect(),
        ))
    }
}

/// Directly parameterized tabular policy: one probability row per state.
///
/// States are one-hot vectors of length `n_states`; the hot index selects the
/// row. The feasible set is a product of simplices, matching
/// [`MirrorMapKind::NegativeEntropy`] with `row_len = n_actions`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularPolicy {
    pub n_states: usize,
    pub n_actions: usize,
    params: ParamVector,
}

impl TabularPolicy {
    pub fn uniform(n_states: usize, n_actions: usize) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidParameter(
                "tabular policy needs at least one state and one action".into(),
            ));
        }
        let p = 1.0 / n_actions as f64;
        Ok(TabularPolicy {
            n_states,
            n_actions,
            params: vec![p; n_states * n_actions].into(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_actions = rows.first().map_or(0, Vec::len);
        let mut p = TabularPolicy::uniform(rows.len(), n_actions)?;
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        p.set_params(&flat)?;
        Ok(p)
    }

    pub fn mirror_map(&self) -> MirrorMapKind {
        MirrorMapKind::NegativeEntropy {
            row_len: Some(self.n_actions),
        }
    }

    pub fn state_index(&self, state: &[f64]) -> Result<usize> {
        check_len(self.n_states, state.len())?;
        Ok(state
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
                if *v > best.1 {
                    (i, *v)
                } else {
                    best
                }
            })
            .0)
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.params[s * self.n_actions..(s + 1) * self.n_actions]
    }

    fn check_action(&self, action: &Action) -> Result<usize> {
        let a = action.discrete()?;
        if a >= self.n_actions {
            return Err(Error::InvalidAction(format!(
                "action {a} out of range for {} actions",
                self.n_actions
            )));
        }
        Ok(a)
    }
}

impl Policy for TabularPolicy {
    fn num_params(&self) -> usize {
        self.params.len()
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        check_len(self.params.len(), params.len())?;
        check_simplex(params, Some(self.n_actions))?;
        self.params.copy_from_slice(params);
        Ok(())
    }

    fn log_prob(&self, state: &[f64], action: &Action) -> Result<f64> {
        let a = self.check_action(action)?;
        Ok(self.row(self.state_index(state)?)[a].ln())
    }

    fn score(&self, state: &[f64], action: &Action) -> Result<Vec<f64>> {
        let a = self.check_action(action)?;
        let s = self.state_index(state)?;
        let mut g = vec![0.0; self.params.len()];
        let i = s * self.n_actions + a;
        g[i] = 1.0 / self.params[i];
        Ok(g)
    }

    fn sample_action<R: Rng + ?Sized>(&self, state: &[f64], rng: &mut R) -> Result<Action> {
        let s = self.state_index(state)?;
        Ok(Action::Discrete(sample_categorical(self.row(s), rng)))
    }

    fn action_probs(&self, state: &[f64]) -> Option<Vec<f64>> {
        self.state_index(state).ok().map(|s| self.row(s).to_vec())
    }
}

/// Any of the built-in policies, for config-driven runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyModel {
    Categorical(CategoricalPolicy),
    Gaussian(GaussianPolicy),
    Tabular(TabularPolicy),
}

macro_rules! dispatch {
    ($self:expr, $p:ident => $body:expr) => {
        match $self {
            PolicyModel::Categorical($p) => $body,
            PolicyModel::Gaussian($p) => $body,
            PolicyModel::Tabular($p) => $body,
        }
    };
}

impl Policy for PolicyModel {
    fn num_params(&self) -> usize {
        dispatch!(self, p => p.num_params())
    }

    fn params(&self) -> &[f64] {
        dispatch!(self, p => p.params())
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        dispatch!(self, p => p.set_params(params))
    }

    fn log_prob(&self, state: &[f64], action: &Action) -> Result<f64> {
        dispatch!(self, p => p.log_prob(state, action))
    }

    fn score(&self, state: &[f64], action: &Action) -> Result<Vec<f64>> {
        dispatch!(self, p => p.score(state, action))
    }

    fn sample_action<R: Rng + ?Sized>(&self, state: &[f64], rng: &mut R) -> Result<Action> {
        dispatch!(self, p => p.sample_action(state, rng))
    }

    fn action_probs(&self, state: &[f64]) -> Option<Vec<f64>> {
        dispatch!(self, p => p.action_probs(state))
    }
}

impl PolicyModel {
    /// Shape metadata written next to the flat parameter blob.
    pub fn shape(&self) -> serde_json::Value {
        match self {
            PolicyModel::Categorical(p) => serde_json::json!({
                "kind": "categorical",
                "layer_sizes": p.mlp.layer_sizes,
                "n_params": p.num_params(),
                "layout": "per layer: weights (out x in, row-major), then bias",
            }),
            PolicyModel::Gaussian(p) => serde_json::json!({
                "kind": "gaussian",
                "layer_sizes": p.mlp.layer_sizes,
                "action_dim": p.action_dim(),
                "n_params": p.num_params(),
                "layout": "per layer: weights (out x in, row-major), then bias; then log_std",
            }),
            PolicyModel::Tabular(p) => serde_json::json!({
                "kind": "tabular",
                "n_states": p.n_states,
                "n_actions": p.n_actions,
                "n_params": p.num_params(),
                "layout": "probability rows, row-major by state",
            }),
        }
    }
}

/// State-value network V(s) with scalar output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueNetwork {
    pub mlp: MlpSpec,
    pub params: ParamVector,
}

impl ValueNetwork {
    pub fn new<R: Rng + ?Sized>(input_dim: usize, hidden: &[usize], rng: &mut R) -> Result<Self> {
        let mlp = MlpSpec::with_hidden(input_dim, hidden, 1)?;
        let params = mlp.init(rng).into();
        Ok(ValueNetwork { mlp, params })
    }

    pub fn from_params(mlp: MlpSpec, params: impl Into<ParamVector>) -> Result<Self> {
        mlp.validate()?;
        if mlp.output_dim() != 1 {
            return Err(Error::InvalidParameter(
                "value network must have a scalar output".into(),
            ));
        }
        let params = params.into();
        check_len(mlp.num_params(), params.len())?;
        Ok(ValueNetwork { mlp, params })
    }

    /// A network whose output is identically zero.
    pub fn zeros(input_dim: usize, hidden: &[usize]) -> Result<Self> {
        let mlp = MlpSpec::with_hidden(input_dim, hidden, 1)?;
        let params = ParamVector::zeros(mlp.num_params());
        Ok(ValueNetwork { mlp, params })
    }

    pub fn value(&self, state: &[f64]) -> Result<f64> {
        Ok(self.mlp.forward(&self.params, state)?[0])
    }

    pub fn value_grad(&self, state: &[f64]) -> Result<Vec<f64>> {
        let tape = self.mlp.forward_tape(&self.params, state)?;
        self.mlp.backward(&self.params, &tape, &[1.0])
    }

    pub fn shape(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": "value",
            "layer_sizes": self.mlp.layer_sizes,
            "n_params": self.params.len(),
            "layout": "per layer: weights (out x in, row-major), then bias",
        })
    }
}
