//! Belief-state entropy functionals (natural log, `0 log 0 = 0`).
//!
//! With `rho = A(u) pi` the predicted belief and `q_y(i) = B^i(y,u) rho(i)`:
//!
//! - `belief_entropy(pi)            = H(pi)`
//! - `predicted_entropy(pi, u)      = H(rho)`                          (l2)
//! - `transition_entropy(pi, u)     = sum_j pi(j) H(A(.|j, u))`        (l3)
//! - `expected_posterior_entropy    = sum_y p(y) H(Pi(pi, u, y))`      (E[l1])
//! - `backward_entropy(pi, u)       = H(X_k | X_{k+1})` under `pi_bar`  (g~)
//!
//! Gradients are partial derivatives of the formulas extended to the open
//! positive orthant. They are only finite in the simplex interior.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::PomdpModel;

/// A value together with its gradient with respect to the belief entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageCostEvaluation {
    pub value: f64,
    pub gradient: Vec<f64>,
}

impl StageCostEvaluation {
    pub fn zero(n: usize) -> Self {
        Self { value: 0.0, gradient: vec![0.0; n] }
    }

    pub fn linear(belief: &[f64], weights: &[f64]) -> Self {
        Self { value: dot(belief, weights), gradient: weights.to_vec() }
    }

    /// `self + scale * other`.
    pub fn add_scaled(mut self, scale: f64, other: &StageCostEvaluation) -> Self {
        self.value += scale * other.value;
        for (g, o) in self.gradient.iter_mut().zip(&other.gradient) {
            *g += scale * o;
        }
        self
    }

    pub fn scaled(mut self, scale: f64) -> Self {
        self.value *= scale;
        for g in self.gradient.iter_mut() {
            *g *= scale;
        }
        self
    }

    pub fn gradient_is_finite(&self) -> bool {
        self.gradient.iter().all(|g| g.is_finite())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Shannon entropy in nats.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().map(|&x| xlogx(x)).sum::<f64>()
}

pub fn belief_entropy(belief: &[f64]) -> f64 {
    entropy(belief)
}

pub fn belief_entropy_eval(belief: &[f64]) -> StageCostEvaluation {
    StageCostEvaluation { value: entropy(belief), gradient: belief.iter().map(|&p| -(p.ln() + 1.0)).collect() }
}

/// Pulls a gradient with respect to `rho = A(u) pi` back to `pi`.
fn pull_back(model: &PomdpModel, u: usize, grad_rho: &[f64]) -> Vec<f64> {
    let n = model.num_states();
    let a = model.transition_matrix(u);
    (0..n).map(|j| (0..n).filter(|&i| a[i][j] > 0.0).map(|i| a[i][j] * grad_rho[i]).sum()).collect()
}

/// Entropy of the predicted belief, `H(X_{k+1} | y^k, u^k)`.
pub fn predicted_entropy(model: &PomdpModel, belief: &[f64], u: usize) -> StageCostEvaluation {
    let rho = model.predict(belief, u);
    let grad_rho: Vec<f64> = rho.iter().map(|&r| if r > 0.0 { -(r.ln() + 1.0) } else { f64::INFINITY }).collect();
    StageCostEvaluation { value: entropy(&rho), gradient: pull_back(model, u, &grad_rho) }
}

/// Entropy of each column of `A(u)`: `H(X_{k+1} | X_k = j, u)`.
pub fn column_entropies(model: &PomdpModel, u: usize) -> Vec<f64> {
    let n = model.num_states();
    let a = model.transition_matrix(u);
    (0..n).map(|j| -(0..n).map(|i| xlogx(a[i][j])).sum::<f64>()).collect()
}

/// `H(X_{k+1} | X_k, y^k, u^k)`; linear in the belief.
pub fn transition_entropy(model: &PomdpModel, belief: &[f64], u: usize) -> StageCostEvaluation {
    StageCostEvaluation::linear(belief, &column_entropies(model, u))
}

/// `E_Y[H(Pi(pi, u, Y))] = H(X_{k+1} | Y_{k+1}, y^k, u^k)`.
pub fn expected_posterior_entropy(model: &PomdpModel, belief: &[f64], u: usize) -> StageCostEvaluation {
    let n = model.num_states();
    let ny = model.num_measurements();
    let b = model.observation_matrix(u);
    let rho = model.predict(belief, u);
    let p_y: Vec<f64> = (0..ny).map(|y| (0..n).map(|i| b[i][y] * rho[i]).sum()).collect();

    // sum_y p(y) H(pi'_y) = -sum_{i,y} q log q + sum_y p log p
    let mut value = 0.0;
    for y in 0..ny {
        for i in 0..n {
            value -= xlogx(b[i][y] * rho[i]);
        }
        value += xlogx(p_y[y]);
    }

    // d/d rho_i = sum_y B_iy (ln p_y - ln B_iy - ln rho_i)
    let grad_rho: Vec<f64> = (0..n)
        .map(|i| {
            if rho[i] <= 0.0 {
                return f64::INFINITY;
            }
            let ln_rho = rho[i].ln();
            (0..ny).filter(|&y| b[i][y] > 0.0).map(|y| b[i][y] * (p_y[y].ln() - b[i][y].ln() - ln_rho)).sum()
        })
        .collect();
    StageCostEvaluation { value: value.max(0.0), gradient: pull_back(model, u, &grad_rho) }
}

/// `I(X_{k+1}; Y_{k+1} | y^k, u^k) = l2 - E[l1]`.
pub fn predicted_information_gain(model: &PomdpModel, belief: &[f64], u: usize) -> StageCostEvaluation {
    predicted_entropy(model, belief, u).add_scaled(-1.0, &expected_posterior_entropy(model, belief, u))
}

/// `l~1(pi, u, y)`: entropy of the filtered belief.
pub fn posterior_entropy(model: &PomdpModel, belief: &[f64], u: usize, y: usize) -> Result<f64> {
    Ok(entropy(&model.filter_update(belief, u, y)?))
}

/// `l~(pi, u, y) = l~1 - l~2 + l~3`.
pub fn ell_tilde(model: &PomdpModel, belief: &[f64], u: usize, y: usize) -> Result<f64> {
    let l1 = posterior_entropy(model, belief, u, y)?;
    let l2 = entropy(&model.predict(belief, u));
    let l3 = dot(belief, &column_entropies(model, u));
    Ok(l1 - l2 + l3)
}

/// `E_Y[l~(pi, u, Y)]`.
pub fn expected_ell_tilde(model: &PomdpModel, belief: &[f64], u: usize) -> StageCostEvaluation {
    expected_posterior_entropy(model, belief, u)
        .add_scaled(-1.0, &predicted_entropy(model, belief, u))
        .add_scaled(1.0, &transition_entropy(model, belief, u))
}

/// `g~(pi, u) = H(X_k | X_{k+1}, y^k, u^k)`.
///
/// The value is evaluated from the backward-kernel formula; the gradient uses
/// the identity `g~ = H(pi) + l3 - l2`.
pub fn backward_entropy(model: &PomdpModel, belief: &[f64], u: usize) -> StageCostEvaluation {
    let n = model.num_states();
    let a = model.transition_matrix(u);
    let rho = model.predict(belief, u);
    let mut value = 0.0;
    for i in 0..n {
        if rho[i] <= 0.0 {
            continue;
        }
        for j in 0..n {
            let joint = a[i][j] * belief[j];
            if joint > 0.0 {
                value -= joint * (joint / rho[i]).ln();
            }
        }
    }
    let gradient = belief_entropy_eval(belief)
        .add_scaled(1.0, &transition_entropy(model, belief, u))
        .add_scaled(-1.0, &predicted_entropy(model, belief, u))
        .gradient;
    StageCostEvaluation { value: value.max(0.0), gradient }
}
