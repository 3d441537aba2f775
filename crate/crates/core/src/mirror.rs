//! Mirror maps: Bregman distances, prox steps and Bregman gradients.
//!
//! Every map is a strongly convex potential ψ. The prox step solves
//!
//! ```text
//! θ̃ = argmin_θ ⟨u, θ⟩ + (1/λ) D_ψ(θ, θ_k)
//! ```
//!
//! in closed form, where `u` is a descent direction for f = −J (the optimizers
//! store u ≈ ∇f = −∇J, so the step always moves along −u).
//!
//! | map               | ψ(x)                 | prox                                   |
//! |-------------------|----------------------|----------------------------------------|
//! | Euclidean         | ½‖x‖²                | θ − λu                                 |
//! | ℓp-norm           | ½‖x‖_p²              | ∇ψ*(∇ψ(θ) − λu), q = p/(p−1)            |
//! | diagonal adaptive | ½ xᵀ diag(√v + α) x  | θ − λ u / (√v + α)                     |
//! | negative entropy  | Σ x ln x (simplex)   | θ_i e^{−λu_i} / Σ_j θ_j e^{−λu_j}       |

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::params::{dot, norm, ParamVector};

/// Probability mass below this is floored after a multiplicative update.
pub const SIMPLEX_FLOOR: f64 = 1e-12;

/// Tolerance on row sums when validating simplex points.
pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MirrorMapKind {
    Euclidean,
    LpNorm {
        p: f64,
    },
    /// Adam-style diagonal metric `H_k = diag(√v_k + alpha)`, with
    /// `v_k = beta v_{k−1} + (1 − beta) u_k²`.
    DiagonalAdaptive {
        alpha: f64,
        beta: f64,
    },
    /// Negative entropy over a product of simplices. `row_len` splits the
    /// parameter vector into consecutive simplices; `None` treats the whole
    /// vector as one simplex.
    NegativeEntropy {
        #[serde(default)]
        row_len: Option<usize>,
    },
}

/// Per-run internal state of a mirror map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MirrorState {
    /// EMA of squared gradients. Only the diagonal map reads or writes it.
    pub v: Vec<f64>,
    pub step_count: u64,
}

impl MirrorState {
    pub fn new(dim: usize) -> Self {
        MirrorState {
            v: vec![0.0; dim],
            step_count: 0,
        }
    }

    /// `v ← β v + (1 − β) u²`, componentwise.
    pub fn update_diagonal(&self, u: &[f64], beta: f64, alpha: f64) -> Result<MirrorState> {
        check_len(self.v.len(), u.len())?;
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "EMA factor must lie in (0, 1), got {beta}"
            )));
        }
        if !(alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "diagonal floor must be positive, got {alpha}"
            )));
        }
        let v = self
            .v
            .iter()
            .zip(u)
            .map(|(v, g)| beta * v + (1.0 - beta) * g * g)
            .collect();
        Ok(MirrorState {
            v,
            step_count: self.step_count + 1,
        })
    }
}

impl MirrorMapKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MirrorMapKind::Euclidean => Ok(()),
            MirrorMapKind::LpNorm { p } => {
                if p > 1.0 && p.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "ℓp mirror map needs 1 < p < ∞, got {p}"
                    )))
                }
            }
            MirrorMapKind::DiagonalAdaptive { alpha, beta } => {
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "diagonal floor must be positive, got {alpha}"
                    )));
                }
                if !(beta > 0.0 && beta < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "EMA factor must lie in (0, 1), got {beta}"
                    )));
                }
                Ok(())
            }
            MirrorMapKind::NegativeEntropy { row_len } => match row_len {
                Some(0) => Err(Error::InvalidParameter(
                    "simplex row length must be positive".into(),
                )),
                _ => Ok(()),
            },
        }
    }

    /// Strong-convexity modulus ν with respect to the Euclidean norm, used in
    /// the descent inequality `⟨u, θ̃ − θ⟩ ≤ −(ν/λ)‖θ̃ − θ‖²`.
    ///
    /// For ℓp with p > 2 the potential is strictly but not strongly convex, so
    /// ν = 0 (the inequality reduces to plain descent).
    pub fn strong_convexity(&self) -> f64 {
        match *self {
            MirrorMapKind::Euclidean => 1.0,
            MirrorMapKind::LpNorm { p } => {
                if p <= 2.0 {
                    p - 1.0
                } else {
                    0.0
                }
            }
            MirrorMapKind::DiagonalAdaptive { alpha, .. } => alpha,
            MirrorMapKind::NegativeEntropy { .. } => 1.0,
        }
    }

    pub fn is_constrained(&self) -> bool {
        matches!(self, MirrorMapKind::NegativeEntropy { .. })
    }

    /// The potential ψ(x).
    pub fn potential(&self, state: &MirrorState, x: &[f64]) -> Result<f64> {
        match *self {
            MirrorMapKind::Euclidean => Ok(0.5 * dot(x, x)),
            MirrorMapKind::LpNorm { p } => Ok(0.5 * lp_norm(x, p).powi(2)),
            MirrorMapKind::DiagonalAdaptive { alpha, .. } => {
                check_len(state.v.len(), x.len())?;
                Ok(0.5
                    * x.iter()
                        .zip(&state.v)
                        .map(|(x, v)| (v.sqrt() + alpha) * x * x)
                        .sum::<f64>())
            }
            MirrorMapKind::NegativeEntropy { row_len } => {
                check_simplex(x, row_len)?;
                Ok(x.iter().map(|&x| x * x.ln()).sum())
            }
        }
    }

    /// The mirror (link) map ∇ψ(x).
    pub fn potential_grad(&self, state: &MirrorState, x: &[f64]) -> Result<Vec<f64>> {
        match *self {
            MirrorMapKind::Euclidean => Ok(x.to_vec()),
            MirrorMapKind::LpNorm { p } => link(p, x),
            MirrorMapKind::DiagonalAdaptive { alpha, .. } => {
                check_len(state.v.len(), x.len())?;
                Ok(x.iter()
                    .zip(&state.v)
                    .map(|(x, v)| (v.sqrt() + alpha) * x)
                    .collect())
            }
            MirrorMapKind::NegativeEntropy { row_len } => {
                check_simplex(x, row_len)?;
                Ok(x.iter().map(|&x| x.ln() + 1.0).collect())
            }
        }
    }

    /// `D_ψ(y, x) = ψ(y) − ψ(x) − ⟨∇ψ(x), y − x⟩`.
    pub fn bregman_distance(&self, state: &MirrorState, y: &[f64], x: &[f64]) -> Result<f64> {
        check_len(x.len(), y.len())?;
        let d = match *self {
            MirrorMapKind::Euclidean => {
                0.5 * y.iter().zip(x).map(|(y, x)| (y - x).powi(2)).sum::<f64>()
            }
            MirrorMapKind::DiagonalAdaptive { alpha, .. } => {
                check_len(state.v.len(), x.len())?;
                0.5 * y
                    .iter()
                    .zip(x)
                    .zip(&state.v)
                    .map(|((y, x), v)| (v.sqrt() + alpha) * (y - x).powi(2))
                    .sum::<f64>()
            }
            MirrorMapKind::LpNorm { p } => {
                let grad = link(p, x)?;
                let diff: Vec<f64> = y.iter().zip(x).map(|(y, x)| y - x).collect();
                0.5 * lp_norm(y, p).powi(2) - 0.5 * lp_norm(x, p).powi(2) - dot(&grad, &diff)
            }
            MirrorMapKind::NegativeEntropy { row_len } => {
                check_simplex(y, row_len)?;
                check_simplex(x, row_len)?;
                // Generalized KL; equals KL(y‖x) when both rows sum to one.
                y.iter()
                    .zip(x)
                    .map(|(&y, &x)| y * (y / x).ln() - y + x)
                    .sum::<f64>()
            }
        };
        // Cancellation can leave tiny negative residues.
        Ok(d.max(0.0))
    }

    /// The exact minimizer of `⟨u, θ⟩ + (1/λ) D_ψ(θ, θ_k)` over the map's domain.
    pub fn prox_step(
        &self,
        state: &MirrorState,
        theta: &[f64],
        u: &[f64],
        lambda: f64,
    ) -> Result<ParamVector> {
        check_len(theta.len(), u.len())?;
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "prox step size must be positive, got {lambda}"
            )));
        }
        let out: Vec<f64> = match *self {
            MirrorMapKind::Euclidean => theta.iter().zip(u).map(|(t, g)| t - lambda * g).collect(),
            MirrorMapKind::LpNorm { p } => {
                let q = p / (p - 1.0);
                let dual: Vec<f64> = link(p, theta)?
                    .iter()
                    .zip(u)
                    .map(|(y, g)| y - lambda * g)
                    .collect();
                link(q, &dual)?
            }
            MirrorMapKind::DiagonalAdaptive { alpha, .. } => {
                check_len(state.v.len(), theta.len())?;
                theta
                    .iter()
                    .zip(u)
                    .zip(&state.v)
                    .map(|((t, g), v)| t - lambda * g / (v.sqrt() + alpha))
                    .collect()
            }
            MirrorMapKind::NegativeEntropy { row_len } => {
                check_simplex(theta, row_len)?;
                let width = row_len.unwrap_or(theta.len());
                let mut out = Vec::with_capacity(theta.len());
                for (row, grad) in theta.chunks(width).zip(u.chunks(width)) {
                    out.extend(multiplicative_update(row, grad, lambda));
                }
                out
            }
        };
        if out.iter().any(|x| !x.is_finite()) {
            return Err(Error::StepFailure);
        }
        Ok(out.into())
    }

    /// `(θ − prox(θ, u, λ)) / λ`.
    pub fn bregman_gradient(
        &self,
        state: &MirrorState,
        theta: &[f64],
        u: &[f64],
        lambda: f64,
    ) -> Result<ParamVector> {
        let prox = self.prox_step(state, theta, u, lambda)?;
        Ok(theta
            .iter()
            .zip(prox.iter())
            .map(|(t, p)| (t - p) / lambda)
            .collect())
    }

    /// `θ + η(θ̃ − θ)`.
    ///
    /// For the Euclidean map θ̃ − θ = −λu, which is applied directly as
    /// `θ − (λη) u` so that the iterate matches a plain policy-gradient step
    /// with step size λη bit for bit.
    pub fn interpolate(
        &self,
        theta: &[f64],
        theta_tilde: &[f64],
        u: &[f64],
        lambda: f64,
        eta: f64,
    ) -> ParamVector {
        match self {
            MirrorMapKind::Euclidean => {
                let step = lambda * eta;
                theta.iter().zip(u).map(|(t, g)| t - step * g).collect()
            }
            _ => theta
                .iter()
                .zip(theta_tilde)
                .map(|(t, tt)| t + eta * (tt - t))
                .collect(),
        }
    }
}

/// A mirror map together with its evolving state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MirrorMap {
    pub kind: MirrorMapKind,
    pub state: MirrorState,
}

impl MirrorMap {
    pub fn new(kind: MirrorMapKind, dim: usize) -> Result<Self> {
        kind.validate()?;
        Ok(MirrorMap {
            kind,
            state: MirrorState::new(dim),
        })
    }

    /// Moves ψ_k to ψ_{k+1} given the new momentum buffer.
    pub fn observe(&mut self, u: &[f64]) -> Result<()> {
        match self.kind {
            MirrorMapKind::DiagonalAdaptive { alpha, beta } => {
                self.state = self.state.update_diagonal(u, beta, alpha)?;
            }
            _ => self.state.step_count += 1,
        }
        Ok(())
    }

    pub fn prox_step(&self, theta: &[f64], u: &[f64], lambda: f64) -> Result<ParamVector> {
        self.kind.prox_step(&self.state, theta, u, lambda)
    }

    pub fn bregman_gradient(&self, theta: &[f64], u: &[f64], lambda: f64) -> Result<ParamVector> {
        self.kind.bregman_gradient(&self.state, theta, u, lambda)
    }

    pub fn bregman_distance(&self, y: &[f64], x: &[f64]) -> Result<f64> {
        self.kind.bregman_distance(&self.state, y, x)
    }
}

/// ‖x‖_p, computed with max-scaling so large or tiny entries do not overflow.
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale
        * x.iter()
            .map(|v| (v.abs() / scale).powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
}

/// The ℓp link function, the gradient of ½‖x‖_p²:
/// `sign(x_j)|x_j|^{p−1} / ‖x‖_p^{p−2}`.
///
/// The zero vector maps to zero (the minimizer of ψ).
pub fn link(p: f64, x: &[f64]) -> Result<Vec<f64>> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "link exponent must exceed 1, got {p}"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::StepFailure);
    }
    if p == 2.0 {
        return Ok(x.to_vec());
    }
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Ok(vec![0.0; x.len()]);
    }
    // Degree-one homogeneous: link(s·x̂) = s·link(x̂).
    let unit: Vec<f64> = x.iter().map(|v| v / scale).collect();
    let unit_norm = lp_norm(&unit, p);
    let factor = unit_norm.powf(2.0 - p);
    let out: Vec<f64> = unit
        .iter()
        .map(|v| scale * v.signum() * v.abs().powf(p - 1.0) * factor)
        .map(|v| if v == 0.0 { 0.0 } else { v })
        .collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::StepFailure);
    }
    Ok(out)
}

/// Inverse of [`link`]: the ℓq link with `q = p / (p − 1)`.
pub fn link_conjugate(p: f64, y: &[f64]) -> Result<Vec<f64>> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "link exponent must exceed 1, got {p}"
        )));
    }
    link(p / (p - 1.0), y)
}

fn multiplicative_update(row: &[f64], grad: &[f64], lambda: f64) -> Vec<f64> {
    let logits: Vec<f64> = row
        .iter()
        .zip(grad)
        .map(|(t, g)| t.ln() - lambda * g)
        .collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    for x in w.iter_mut() {
        *x = (*x / total).max(SIMPLEX_FLOOR);
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

/// Checks that every row of `x` lies strictly inside the probability simplex.
pub fn check_simplex(x: &[f64], row_len: Option<usize>) -> Result<()> {
    let width = row_len.unwrap_or(x.len());
    if x.is_empty() || width == 0 || x.len() % width != 0 {
        return Err(Error::NotOnSimplex(format!(
            "length {} is not a multiple of row length {width}",
            x.len()
        )));
    }
    for (i, row) in x.chunks(width).enumerate() {
        if let Some(bad) = row.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::NotOnSimplex(format!(
                "row {i} has non-positive entry {bad}"
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::NotOnSimplex(format!("row {i} sums to {sum}")));
        }
    }
    Ok(())
}

/// Euclidean norm of the Bregman gradient; the logged convergence diagnostic.
pub fn bregman_gradient_norm(
    map: &MirrorMap,
    theta: &[f64],
    u: &[f64],
    lambda: f64,
) -> Result<f64> {
    Ok(norm(&map.bregman_gradient(theta, u, lambda)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    const ENTROPY: MirrorMapKind = MirrorMapKind::NegativeEntropy { row_len: None };

    fn state(dim: usize) -> MirrorState {
        MirrorState::new(dim)
    }

    #[test]
    fn euclidean_distance_is_half_squared_norm() {
        let d = MirrorMapKind::Euclidean
            .bregman_distance(&state(2), &[1.0, 2.0], &[0.0, 0.0])
            .unwrap();
        assert_eq!(d, 2.5);
    }

    #[test]
    fn distance_to_self_is_zero() {
        let x = [0.2, 0.3, 0.5];
        let maps = [
            MirrorMapKind::Euclidean,
            MirrorMapKind::LpNorm { p: 1.5 },
            MirrorMapKind::LpNorm { p: 3.0 },
            MirrorMapKind::DiagonalAdaptive {
                alpha: 0.1,
                beta: 0.9,
            },
            ENTROPY,
        ];
        for m in maps {
            assert_eq!(m.bregman_distance(&state(3), &x, &x).unwrap(), 0.0, "{m:?}");
        }
    }

    #[test]
    fn entropy_distance_is_kl() {
        let d = ENTROPY
            .bregman_distance(&state(2), &[0.25, 0.75], &[0.5, 0.5])
            .unwrap();
        let kl = 0.25 * 0.5f64.ln() + 0.75 * 1.5f64.ln();
        assert!((d - kl).abs() < 1e-15);
        assert!((d - 0.130812).abs() < 1e-6);
    }

    #[test]
    fn distance_rejects_bad_inputs() {
        assert!(matches!(
            MirrorMapKind::Euclidean.bregman_distance(&state(2), &[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            ENTROPY.bregman_distance(&state(2), &[0.6, 0.6], &[0.5, 0.5]),
            Err(Error::NotOnSimplex(_))
        ));
        assert!(matches!(
            ENTROPY.bregman_distance(&state(2), &[1.0, 0.0], &[0.5, 0.5]),
            Err(Error::NotOnSimplex(_))
        ));
    }

    #[test]
    fn euclidean_and_p2_prox() {
        let theta = [1.0, 2.0];
        let u = [0.5, -1.0];
        for m in [MirrorMapKind::Euclidean, MirrorMapKind::LpNorm { p: 2.0 }] {
            let out = m.prox_step(&state(2), &theta, &u, 0.1).unwrap();
            assert!((out[0] - 0.95).abs() < 1e-15);
            assert!((out[1] - 2.1).abs() < 1e-15);
        }
    }

    #[test]
    fn entropy_prox_is_multiplicative_weights() {
        let out = ENTROPY
            .prox_step(&state(2), &[0.5, 0.5], &[2f64.ln(), 0.0], 1.0)
            .unwrap();
        assert!((out[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((out[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn entropy_prox_works_per_row() {
        let m = MirrorMapKind::NegativeEntropy { row_len: Some(2) };
        let theta = [0.5, 0.5, 0.2, 0.8];
        let out = m
            .prox_step(&state(4), &theta, &[2f64.ln(), 0.0, 0.0, 0.0], 1.0)
            .unwrap();
        assert!((out[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((out[2] - 0.2).abs() < 1e-15);
        assert!((out[3] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn entropy_prox_floors_vanishing_mass() {
        let out = ENTROPY
            .prox_step(&state(2), &[0.5, 0.5], &[1000.0, 0.0], 1.0)
            .unwrap();
        assert!(out[0] > 0.0 && out[0] <= SIMPLEX_FLOOR);
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn link_examples() {
        let l = link(1.5, &[1.0, -1.0]).unwrap();
        let c = 2f64.powf(1.0 / 3.0);
        assert!((l[0] - c).abs() < 1e-12 && (l[1] + c).abs() < 1e-12);
        assert!((l[0] - 1.259921).abs() < 1e-6);

        let x = [0.3, -0.7, 1.1];
        assert_eq!(link(2.0, &x).unwrap(), x.to_vec());
        let back = link_conjugate(3.0, &link(3.0, &x).unwrap()).unwrap();
        for (a, b) in back.iter().zip(&x) {
            assert!(((a - b) / b).abs() < 1e-9);
        }
    }

    #[test]
    fn link_of_zero_is_zero() {
        assert_eq!(link(1.5, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(link_conjugate(3.0, &[0.0; 3]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn link_rejects_non_finite() {
        assert!(matches!(
            link(1.5, &[f64::INFINITY, 1.0]),
            Err(Error::StepFailure)
        ));
    }

    #[test]
    fn lp_prox_reports_non_finite_as_step_failure() {
        let m = MirrorMapKind::LpNorm { p: 1.5 };
        let r = m.prox_step(&state(2), &[1.0, 1.0], &[f64::NAN, 0.0], 0.1);
        assert!(matches!(r, Err(Error::StepFailure)));
    }

    #[test]
    fn diagonal_state_update() {
        let s = state(2).update_diagonal(&[2.0, 0.0], 0.999, 1e-8).unwrap();
        assert!((s.v[0] - 0.004).abs() < 1e-15);
        assert_eq!(s.v[1], 0.0);
        assert_eq!(s.step_count, 1);

        let decayed = s.update_diagonal(&[0.0, 0.0], 0.5, 1e-8).unwrap();
        assert_eq!(decayed.v[0], 0.5 * s.v[0]);

        let mut s = state(1);
        for _ in 0..20_000 {
            s = s.update_diagonal(&[3.0], 0.999, 1e-8).unwrap();
        }
        assert!((s.v[0] - 9.0).abs() < 1e-6);
    }

    #[test]
    fn diagonal_state_rejects_bad_parameters() {
        assert!(state(1).update_diagonal(&[1.0], 1.0, 1e-8).is_err());
        assert!(state(1).update_diagonal(&[1.0], 0.5, 0.0).is_err());
    }

    #[test]
    fn bregman_gradient_closed_forms() {
        let theta = [0.3, -1.2, 2.0];
        let u = [0.7, 0.1, -0.4];
        let g = MirrorMapKind::Euclidean
            .bregman_gradient(&state(3), &theta, &u, 0.5)
            .unwrap();
        for (a, b) in g.iter().zip(&u) {
            assert!((a - b).abs() < 1e-15);
        }

        let zero = MirrorMapKind::LpNorm { p: 3.0 }
            .bregman_gradient(&state(3), &theta, &[0.0; 3], 0.5)
            .unwrap();
        assert!(zero.iter().all(|v| v.abs() < 1e-15));

        let s = MirrorState {
            v: vec![4.0, 0.25, 1.0],
            step_count: 3,
        };
        let alpha = 0.5;
        let g = MirrorMapKind::DiagonalAdaptive { alpha, beta: 0.9 }
            .bregman_gradient(&s, &theta, &u, 0.5)
            .unwrap();
        for i in 0..3 {
            let expected = u[i] / (s.v[i].sqrt() + alpha);
            assert!((g[i] - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn validate_rejects_degenerate_maps() {
        assert!(MirrorMapKind::LpNorm { p: 1.0 }.validate().is_err());
        assert!(MirrorMapKind::DiagonalAdaptive {
            alpha: 0.0,
            beta: 0.9
        }
        .validate()
        .is_err());
        assert!(MirrorMapKind::NegativeEntropy { row_len: Some(0) }
            .validate()
            .is_err());
    }

    #[test]
    fn serde_shape() {
        let m: MirrorMapKind =
            serde_json::from_str(r#"{"kind":"diagonal_adaptive","alpha":1e-8,"beta":0.999}"#)
                .unwrap();
        assert_eq!(
            m,
            MirrorMapKind::DiagonalAdaptive {
                alpha: 1e-8,
                beta: 0.999
            }
        );
    }
}
