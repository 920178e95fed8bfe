//! Trajectory inference and smoother-entropy accounting.
//!
//! Everything here conditions on a realised measurement record `y^T` and
//! control record `u^{T-1}`. Index conventions follow the model: `u^{T-1}[k-1]`
//! drives the transition from `x_k` to `x_{k+1}` and the kernel of `y_{k+1}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::{backward_entropy, column_entropies, entropy, predicted_entropy};
use crate::error::{Error, Result};
use crate::model::{Belief, PomdpModel, IMPOSSIBLE_MEASUREMENT};
use crate::simulate::{run_seed, sample_trajectory, Policy};

/// Largest enumeration the exhaustive routines accept.
pub const ENUMERATION_LIMIT: usize = 1_000_000;

fn check_lengths(model: &PomdpModel, measurements: &[usize], controls: &[usize]) -> Result<()> {
    let t = measurements.len();
    if t == 0 {
        return Err(Error::InvalidArgument("empty measurement record".into()));
    }
    if controls.len() + 1 != t {
        return Err(Error::InvalidArgument(format!(
            "{} measurements need {} controls, got {}",
            t,
            t - 1,
            controls.len()
        )));
    }
    if let Some(&y) = measurements.iter().find(|&&y| y >= model.num_measurements()) {
        return Err(Error::InvalidArgument(format!("measurement {y} out of range")));
    }
    if let Some(&u) = controls.iter().find(|&&u| u >= model.num_controls()) {
        return Err(Error::InvalidArgument(format!("control {u} out of range")));
    }
    Ok(())
}

fn ln(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Filter beliefs `pi_1..pi_T` along a record. Zero-likelihood records map to
/// [`Error::InfeasibleEvidence`].
pub fn filter_beliefs(model: &PomdpModel, measurements: &[usize], controls: &[usize]) -> Result<Vec<Belief>> {
    check_lengths(model, measurements, controls)?;
    let infeasible = |e: Error| match e {
        Error::ImpossibleMeasurement { .. } => Error::InfeasibleEvidence,
        other => other,
    };
    let mut beliefs = Vec::with_capacity(measurements.len());
    beliefs.push(model.initial_belief(measurements[0]).map_err(infeasible)?);
    for (k, &u) in controls.iter().enumerate() {
        let next = model.filter_update(&beliefs[k], u, measurements[k + 1]).map_err(infeasible)?;
        beliefs.push(next);
    }
    Ok(beliefs)
}

/// `ln p(x^T, y^T | u^{T-1})`.
pub fn joint_log_likelihood(model: &PomdpModel, states: &[usize], measurements: &[usize], controls: &[usize]) -> f64 {
    let mut lp =
        ln(model.initial_distribution()[states[0]]) + ln(model.initial_observation(states[0], measurements[0]));
    for (k, &u) in controls.iter().enumerate() {
        lp += ln(model.transition(u, states[k + 1], states[k]));
        lp += ln(model.observation(u, states[k + 1], measurements[k + 1]));
    }
    lp
}

/// MAP state trajectory (log-domain Viterbi, ties toward smaller state index).
pub fn viterbi(model: &PomdpModel, measurements: &[usize], controls: &[usize]) -> Result<Vec<usize>> {
    check_lengths(model, measurements, controls)?;
    let n = model.num_states();
    let t = measurements.len();
    let mut score: Vec<f64> = (0..n)
        .map(|i| ln(model.initial_distribution()[i]) + ln(model.initial_observation(i, measurements[0])))
        .collect();
    let mut back = vec![vec![0usize; n]; t];
    for k in 1..t {
        let u = controls[k - 1];
        let y = measurements[k];
        let mut next = vec![f64::NEG_INFINITY; n];
        for i in 0..n {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for j in 0..n {
                let s = score[j] + ln(model.transition(u, i, j));
                if s > best {
                    best = s;
                    arg = j;
                }
            }
            next[i] = best + ln(model.observation(u, i, y));
            back[k][i] = arg;
        }
        score = next;
    }
    let mut last = 0;
    for i in 1..n {
        if score[i] > score[last] {
            last = i;
        }
    }
    if score[last] == f64::NEG_INFINITY {
        return Err(Error::InfeasibleEvidence);
    }
    let mut path = vec![0; t];
    path[t - 1] = last;
    for k in (1..t).rev() {
        path[k - 1] = back[k][path[k]];
    }
    Ok(path)
}

/// Smoothed marginals and pairwise posteriors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedPosterior {
    /// `marginals[k-1][i] = p(x_k = i | y^T, u^{T-1})`.
    pub marginals: Vec<Vec<f64>>,
    /// `pairwise[k-1][i][j] = p(x_{k+1} = i, x_k = j | y^T, u^{T-1})`.
    pub pairwise: Vec<Vec<Vec<f64>>>,
}

/// Scaled forward-backward smoother.
pub fn forward_backward(model: &PomdpModel, measurements: &[usize], controls: &[usize]) -> Result<SmoothedPosterior> {
    let alphas = filter_beliefs(model, measurements, controls)?;
    let n = model.num_states();
    let t = measurements.len();

    // beta_k(j) = p(y_{k+1..T} | x_k = j) / p(y_{k+1..T} | y^k), rescaled each step
    let mut betas = vec![vec![1.0; n]; t];
    for k in (0..t - 1).rev() {
        let u = controls[k];
        let y = measurements[k + 1];
        let mut b: Vec<f64> = (0..n)
            .map(|j| (0..n).map(|i| model.transition(u, i, j) * model.observation(u, i, y) * betas[k + 1][i]).sum())
            .collect();
        let scale: f64 = b.iter().zip(alphas[k].iter()).map(|(x, a)| x * a).sum();
        if !(scale >= IMPOSSIBLE_MEASUREMENT) {
            return Err(Error::InfeasibleEvidence);
        }
        b.iter_mut().for_each(|v| *v /= scale);
        betas[k] = b;
    }

    let marginals: Vec<Vec<f64>> = (0..t)
        .map(|k| {
            let g: Vec<f64> = (0..n).map(|i| alphas[k][i] * betas[k][i]).collect();
            let s: f64 = g.iter().sum();
            g.into_iter().map(|v| v / s).collect()
        })
        .collect();

    let pairwise = (0..t - 1)
        .map(|k| {
            let u = controls[k];
            let y = measurements[k + 1];
            let mut m: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            alphas[k][j] * model.transition(u, i, j) * model.observation(u, i, y) * betas[k + 1][i]
                        })
                        .collect()
                })
                .collect();
            let s: f64 = m.iter().flatten().sum();
            m.iter_mut().flatten().for_each(|v| *v /= s);
            m
        })
        .collect();
    Ok(SmoothedPosterior { marginals, pairwise })
}

/// `H(X^T | y^T, u^{T-1})` via the backward decomposition
/// `H(pi_T) + sum_k sum_i p(x_{k+1} = i | y^T) H(p(x_k | x_{k+1} = i, y^k, u^k))`.
pub fn pointwise_smoother_entropy(model: &PomdpModel, measurements: &[usize], controls: &[usize]) -> Result<f64> {
    let smoothed = forward_backward(model, measurements, controls)?;
    let beliefs = filter_beliefs(model, measurements, controls)?;
    pointwise_smoother_entropy_from(model, &beliefs, controls, &smoothed)
}

fn pointwise_smoother_entropy_from(
    model: &PomdpModel,
    beliefs: &[Belief],
    controls: &[usize],
    smoothed: &SmoothedPosterior,
) -> Result<f64> {
    let n = model.num_states();
    let t = beliefs.len();
    let mut h = entropy(&beliefs[t - 1]);
    for k in 0..t - 1 {
        let joint = model.joint_predicted_belief(&beliefs[k], controls[k]);
        for i in 0..n {
            let w = smoothed.marginals[k + 1][i];
            if w <= 0.0 {
                continue;
            }
            if let Some(kernel) = joint.backward_kernel(i) {
                h += w * entropy(&kernel);
            }
        }
    }
    Ok(h)
}

/// Exact `p(x^T | y^T, u^{T-1})` by enumeration; `x_1` is the least
/// significant digit of the flat index.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPosterior {
    pub num_states: usize,
    pub horizon: usize,
    pub probabilities: Vec<f64>,
}

impl JointPosterior {
    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        (0..self.horizon)
            .map(|_| {
                let x = index % self.num_states;
                index /= self.num_states;
                x
            })
            .collect()
    }

    pub fn encode(&self, states: &[usize]) -> usize {
        states.iter().rev().fold(0, |acc, &x| acc * self.num_states + x)
    }

    pub fn entropy(&self) -> f64 {
        entropy(&self.probabilities)
    }

    /// Most probable trajectory and its probability.
    pub fn mode(&self) -> (Vec<usize>, f64) {
        let (idx, p) =
            self.probabilities
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bi, bp), (i, &p)| if p > bp { (i, p) } else { (bi, bp) });
        (self.decode(idx), p)
    }
}

pub fn brute_force_joint_posterior(
    model: &PomdpModel,
    measurements: &[usize],
    controls: &[usize],
) -> Result<JointPosterior> {
    check_lengths(model, measurements, controls)?;
    let n = model.num_states();
    let t = measurements.len();
    let total = (n as f64).powi(t as i32);
    if total > ENUMERATION_LIMIT as f64 {
        return Err(Error::SizeGuard(format!("N^T = {total} exceeds {ENUMERATION_LIMIT}")));
    }
    let total = total as usize;
    let mut post = JointPosterior { num_states: n, horizon: t, probabilities: vec![0.0; total] };
    let mut states = vec![0usize; t];
    for idx in 0..total {
        let mut rest = idx;
        for s in states.iter_mut() {
            *s = rest % n;
            rest /= n;
        }
        let mut p = model.initial_distribution()[states[0]] * model.initial_observation(states[0], measurements[0]);
        for (k, &u) in controls.iter().enumerate() {
            if p == 0.0 {
                break;
            }
            p *= model.transition(u, states[k + 1], states[k])
                * model.observation(u, states[k + 1], measurements[k + 1]);
        }
        post.probabilities[idx] = p;
    }
    let z: f64 = post.probabilities.iter().sum();
    if !(z > 0.0) {
        return Err(Error::InfeasibleEvidence);
    }
    post.probabilities.iter_mut().for_each(|p| *p /= z);
    Ok(post)
}

/// Per-stage terms of the additive smoother-entropy decompositions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LedgerStage {
    /// `H(X_k | X_{k-1}, U_{k-1})`, with `H(X_1)` at `k = 1`.
    pub causal_entropy: f64,
    /// `I(X_k; Y_k | Y^{k-1}, U^{k-1})`.
    pub directed_information: f64,
    /// `H(X_k | Y^k, U^{k-1})`.
    pub filter_entropy: f64,
    /// `I(X_k; X_{k-1} | Y^{k-1}, U^{k-1})`, zero at `k = 1`.
    pub state_dependence: f64,
    /// `H(X_k | X_{k+1}, Y^k, U^k)`, zero at `k = T`.
    pub backward_entropy: f64,
}

/// Exact expectations of the smoother-entropy decompositions under a policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyLedger {
    /// `H(X^T | Y^T, U^{T-1})`, averaging pointwise smoother entropies.
    pub smoother_entropy: f64,
    pub causal_entropy: f64,
    pub directed_information: f64,
    pub first_form: f64,
    pub second_form: f64,
    pub third_form: f64,
    /// `sum_k H(X_k | Y^k, U^{k-1})`.
    pub sum_filter_marginal_entropy: f64,
    /// `sum_k H(X_k | Y^T, U^{T-1})`.
    pub sum_smoothed_marginal_entropy: f64,
    pub stages: Vec<LedgerStage>,
}

impl EntropyLedger {
    /// `|smoother - (causal - directed information)|`.
    pub fn decomposition_residual(&self) -> f64 {
        (self.smoother_entropy - (self.causal_entropy - self.directed_information)).abs()
    }

    /// Largest pairwise disagreement among the three additive forms and the
    /// smoother entropy.
    pub fn form_residual(&self) -> f64 {
        let v = [self.smoother_entropy, self.first_form, self.second_form, self.third_form];
        let mut worst: f64 = 0.0;
        for a in 0..v.len() {
            for b in a + 1..v.len() {
                worst = worst.max((v[a] - v[b]).abs());
            }
        }
        worst
    }
}

struct LedgerAcc {
    stages: Vec<LedgerStage>,
    pred_entropy: Vec<f64>,
    obs_entropy: Vec<f64>,
    obs_cond_entropy: Vec<f64>,
    smoother: f64,
    smoothed_marginals: f64,
}

/// Enumerates every measurement sequence under `policy` and accumulates the
/// exact expectations of all decomposition terms.
pub fn entropy_ledger(model: &PomdpModel, policy: &dyn Policy) -> Result<EntropyLedger> {
    let t = model.horizon();
    let ny = model.num_measurements();
    let leaves = (ny as f64).powi(t as i32);
    if leaves > ENUMERATION_LIMIT as f64 {
        return Err(Error::SizeGuard(format!("|Y|^T = {leaves} exceeds {ENUMERATION_LIMIT}")));
    }
    let mut acc = LedgerAcc {
        stages: vec![LedgerStage::default(); t],
        pred_entropy: vec![0.0; t],
        obs_entropy: vec![0.0; t],
        obs_cond_entropy: vec![0.0; t],
        smoother: 0.0,
        smoothed_marginals: 0.0,
    };

    let pi0 = model.initial_distribution();
    let n = model.num_states();
    let p_y1: Vec<f64> = (0..ny).map(|y| (0..n).map(|i| model.initial_observation(i, y) * pi0[i]).sum()).collect();
    acc.stages[0].causal_entropy = entropy(pi0);
    acc.obs_entropy[0] = entropy(&p_y1);
    acc.obs_cond_entropy[0] =
        (0..n).map(|i| pi0[i] * entropy(&(0..ny).map(|y| model.initial_observation(i, y)).collect::<Vec<_>>())).sum();

    let mut ys = Vec::with_capacity(t);
    let mut us = Vec::with_capacity(t);
    for (y1, &p) in p_y1.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        let belief = model.initial_belief(y1)?;
        ys.push(y1);
        ledger_visit(model, policy, &belief, p, &mut ys, &mut us, &mut acc)?;
        ys.pop();
    }

    let mut stages = acc.stages;
    for k in 0..t {
        stages[k].directed_information = acc.obs_entropy[k] - acc.obs_cond_entropy[k];
        if k > 0 {
            stages[k].state_dependence = acc.pred_entropy[k] - stages[k].causal_entropy;
        }
    }
    let causal_entropy: f64 = stages.iter().map(|s| s.causal_entropy).sum();
    let directed_information: f64 = stages.iter().map(|s| s.directed_information).sum();
    let first_form = stages.iter().map(|s| s.causal_entropy - s.directed_information).sum();
    let second_form = stages.iter().map(|s| s.filter_entropy - s.state_dependence).sum();
    let third_form = stages[t - 1].filter_entropy + stages.iter().map(|s| s.backward_entropy).sum::<f64>();
    let sum_filter_marginal_entropy = stages.iter().map(|s| s.filter_entropy).sum();
    Ok(EntropyLedger {
        smoother_entropy: acc.smoother,
        causal_entropy,
        directed_information,
        first_form,
        second_form,
        third_form,
        sum_filter_marginal_entropy,
        sum_smoothed_marginal_entropy: acc.smoothed_marginals,
        stages,
    })
}

fn ledger_visit(
    model: &PomdpModel,
    policy: &dyn Policy,
    belief: &Belief,
    prob: f64,
    ys: &mut Vec<usize>,
    us: &mut Vec<usize>,
    acc: &mut LedgerAcc,
) -> Result<()> {
    let k = ys.len();
    let t = model.horizon();
    acc.stages[k - 1].filter_entropy += prob * entropy(belief);
    if k == t {
        let smoothed = forward_backward(model, ys, us)?;
        let beliefs = filter_beliefs(model, ys, us)?;
        acc.smoother += prob * pointwise_smoother_entropy_from(model, &beliefs, us, &smoothed)?;
        acc.smoothed_marginals += prob * smoothed.marginals.iter().map(|m| entropy(m)).sum::<f64>();
        return Ok(());
    }
    let n = model.num_states();
    let ny = model.num_measurements();
    let u = policy.action(k, belief);
    let rho = model.predict(belief, u);
    let p_y = model.observation_likelihood(belief, u);

    acc.stages[k - 1].backward_entropy += prob * backward_entropy(model, belief, u).value;
    acc.stages[k].causal_entropy += prob * crate::entropy::dot(belief, &column_entropies(model, u));
    acc.pred_entropy[k] += prob * predicted_entropy(model, belief, u).value;
    acc.obs_entropy[k] += prob * entropy(&p_y);
    acc.obs_cond_entropy[k] += prob * (0..n).map(|i| rho[i] * entropy(&model.observation_matrix(u)[i])).sum::<f64>();

    us.push(u);
    for y in 0..ny {
        if p_y[y] <= 0.0 {
            continue;
        }
        let next = model.filter_update(belief, u, y)?;
        ys.push(y);
        ledger_visit(model, policy, &next, prob * p_y[y], ys, us, acc)?;
        ys.pop();
    }
    us.pop();
    Ok(())
}

/// Convenience wrapper for a fixed control sequence.
pub fn entropy_ledger_open_loop(model: &PomdpModel, controls: &[usize]) -> Result<EntropyLedger> {
    if controls.len() + 1 != model.horizon() {
        return Err(Error::InvalidArgument(format!(
            "open-loop sequence needs {} controls, got {}",
            model.horizon() - 1,
            controls.len()
        )));
    }
    entropy_ledger(model, &crate::simulate::OpenLoop(controls.to_vec()))
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self { mean: f64::NAN, stderr: f64::NAN };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Self { mean, stderr: 0.0 };
        }
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self { mean, stderr: (var / n as f64).sqrt() }
    }
}

/// Monte-Carlo estimate of the smoother entropy under `policy`.
pub fn monte_carlo_smoother_entropy(
    model: &PomdpModel,
    policy: &dyn Policy,
    runs: usize,
    seed: u64,
) -> Result<Estimate> {
    if runs == 0 {
        return Err(Error::InvalidArgument("runs must be at least 1".into()));
    }
    let samples = (0..runs as u64)
        .into_par_iter()
        .map(|r| {
            let rec = sample_trajectory(model, policy, run_seed(seed, r))?;
            pointwise_smoother_entropy(model, &rec.measurements, &rec.controls)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Estimate::from_samples(&samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::OpenLoop;
    use rand::SeedableRng;

    fn perfect_model(horizon: usize) -> PomdpModel {
        let n = 3;
        let eye: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        let a = vec![vec![0.2, 0.3, 0.5], vec![0.5, 0.4, 0.1], vec![0.3, 0.3, 0.4]];
        PomdpModel::new(
            n,
            vec!["u".into()],
            vec!["0".into(), "1".into(), "2".into()],
            vec![a],
            vec![eye],
            None,
            vec![0.2, 0.5, 0.3],
            horizon,
        )
        .unwrap()
    }

    #[test]
    fn viterbi_with_perfect_observations_returns_observed_states() {
        let m = perfect_model(4);
        let ys = [2, 0, 1, 1];
        assert_eq!(viterbi(&m, &ys, &[0, 0, 0]).unwrap(), ys.to_vec());
        assert!(pointwise_smoother_entropy(&m, &ys, &[0, 0, 0]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn viterbi_horizon_one_is_argmax_of_initial_belief() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let m = PomdpModel::random(&mut rng, 3, 1, 2, 1);
        for y in 0..2 {
            let b = m.initial_belief(y).unwrap();
            assert_eq!(viterbi(&m, &[y], &[]).unwrap(), vec![b.argmax()]);
        }
    }

    #[test]
    fn viterbi_rejects_impossible_records() {
        let m = perfect_model(2);
        // A(0) has no zero entries, but perfect observation makes y_1 = 0 with pi0(0) > 0 fine;
        // make it impossible via a zero-prior model instead.
        let m = PomdpModel::new(
            3,
            vec!["u".into()],
            m.measurements().to_vec(),
            vec![m.transition_matrix(0).to_vec()],
            vec![m.observation_matrix(0).to_vec()],
            None,
            vec![0.0, 0.5, 0.5],
            2,
        )
        .unwrap();
        assert!(matches!(viterbi(&m, &[0, 1], &[0]), Err(Error::InfeasibleEvidence)));
        assert!(matches!(forward_backward(&m, &[0, 1], &[0]), Err(Error::InfeasibleEvidence)));
    }

    #[test]
    fn uninformative_static_model_has_uniform_marginals() {
        let m = PomdpModel::new(
            3,
            vec!["u".into()],
            vec!["a".into(), "b".into()],
            vec![vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]],
            vec![vec![vec![0.5, 0.5]; 3]],
            None,
            vec![1.0 / 3.0; 3],
            4,
        )
        .unwrap();
        let post = forward_backward(&m, &[0, 1, 1, 0], &[0, 0, 0]).unwrap();
        for row in &post.marginals {
            for v in row {
                assert!((v - 1.0 / 3.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn last_smoothed_marginal_is_filter_belief() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let m = PomdpModel::random(&mut rng, 3, 2, 3, 4);
        let ys = [1, 0, 2, 2];
        let us = [1, 0, 1];
        let post = forward_backward(&m, &ys, &us).unwrap();
        let beliefs = filter_beliefs(&m, &ys, &us).unwrap();
        for i in 0..3 {
            assert!((post.marginals[3][i] - beliefs[3][i]).abs() < 1e-14);
        }
    }

    #[test]
    fn independent_states_give_sum_of_column_entropies() {
        let col = [0.6, 0.3, 0.1];
        let m = PomdpModel::new(
            3,
            vec!["u".into()],
            vec!["y".into(), "z".into()],
            vec![(0..3).map(|i| vec![col[i]; 3]).collect()],
            vec![vec![vec![0.5, 0.5]; 3]],
            None,
            col.to_vec(),
            4,
        )
        .unwrap();
        let h = pointwise_smoother_entropy(&m, &[0, 1, 0, 1], &[0, 0, 0]).unwrap();
        assert!((h - 4.0 * entropy(&col)).abs() < 1e-13);
    }

    #[test]
    fn pointwise_entropy_matches_enumeration() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let m = PomdpModel::random(&mut rng, 3, 2, 3, 4);
            let ys = [0, 2, 1, 1];
            let us = [1, 1, 0];
            let h = pointwise_smoother_entropy(&m, &ys, &us).unwrap();
            let brute = brute_force_joint_posterior(&m, &ys, &us).unwrap();
            assert!((h - brute.entropy()).abs() < 1e-10);
            let total: f64 = brute.probabilities.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pairwise_posteriors_match_enumeration() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let m = PomdpModel::random(&mut rng, 3, 2, 2, 4);
        let ys = [1, 0, 0, 1];
        let us = [0, 1, 1];
        let post = forward_backward(&m, &ys, &us).unwrap();
        let brute = brute_force_joint_posterior(&m, &ys, &us).unwrap();
        let mut pair = vec![vec![vec![0.0; 3]; 3]; 3];
        for (idx, p) in brute.probabilities.iter().enumerate() {
            let x = brute.decode(idx);
            for k in 0..3 {
                pair[k][x[k + 1]][x[k]] += p;
            }
        }
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    assert!((post.pairwise[k][i][j] - pair[k][i][j]).abs() < 1e-12);
                }
                let row: f64 = post.pairwise[k][i].iter().sum();
                assert!((row - post.marginals[k + 1][i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn brute_force_posterior_edge_cases() {
        let m = perfect_model(1);
        let post = brute_force_joint_posterior(&m, &[1], &[]).unwrap();
        assert_eq!(post.probabilities, m.initial_belief(1).unwrap().into_inner());

        let m = perfect_model(13);
        let ys = vec![0; 13];
        assert!(matches!(brute_force_joint_posterior(&m, &ys, &[0; 12]), Err(Error::SizeGuard(_))));
    }

    #[test]
    fn uninformative_measurements_carry_no_directed_information() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let base = PomdpModel::random(&mut rng, 3, 2, 2, 3);
        let m = PomdpModel::new(
            3,
            base.controls().to_vec(),
            base.measurements().to_vec(),
            (0..2).map(|u| base.transition_matrix(u).to_vec()).collect(),
            vec![vec![vec![0.4, 0.6]; 3]; 2],
            Some(vec![vec![0.4, 0.6]; 3]),
            base.initial_distribution().to_vec(),
            3,
        )
        .unwrap();
        let ledger = entropy_ledger_open_loop(&m, &[1, 0]).unwrap();
        assert!(ledger.directed_information.abs() < 1e-12);
        assert!((ledger.smoother_entropy - ledger.causal_entropy).abs() < 1e-12);
    }

    #[test]
    fn perfect_observation_point_mass_has_zero_smoother_entropy() {
        let base = perfect_model(3);
        let m = PomdpModel::new(
            3,
            base.controls().to_vec(),
            base.measurements().to_vec(),
            vec![base.transition_matrix(0).to_vec()],
            vec![base.observation_matrix(0).to_vec()],
            None,
            vec![0.0, 1.0, 0.0],
            3,
        )
        .unwrap();
        let ledger = entropy_ledger_open_loop(&m, &[0, 0]).unwrap();
        assert!(ledger.smoother_entropy.abs() < 1e-14);
    }

    #[test]
    fn ledger_identities_hold_on_random_instance() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let m = PomdpModel::random(&mut rng, 2, 2, 2, 3);
        let ledger = entropy_ledger_open_loop(&m, &[0, 1]).unwrap();
        assert!(ledger.decomposition_residual() < 1e-10, "{ledger:?}");
        assert!(ledger.form_residual() < 1e-10, "{ledger:?}");
    }

    #[test]
    fn monte_carlo_estimate_is_zero_for_deterministic_model() {
        let m = PomdpModel::new(
            2,
            vec!["swap".into()],
            vec!["a".into(), "b".into()],
            vec![vec![vec![0.0, 1.0], vec![1.0, 0.0]]],
            vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]]],
            None,
            vec![1.0, 0.0],
            4,
        )
        .unwrap();
        let est = monte_carlo_smoother_entropy(&m, &OpenLoop(vec![0; 3]), 50, 1).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn monte_carlo_estimate_converges_to_ledger() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let m = PomdpModel::random(&mut rng, 3, 2, 2, 4);
        let policy = OpenLoop(vec![0, 1, 1]);
        let exact = entropy_ledger(&m, &policy).unwrap().smoother_entropy;
        let est = monte_carlo_smoother_entropy(&m, &policy, 10_000, 99).unwrap();
        assert!((est.mean - exact).abs() < 3.0 * est.stderr, "{est:?} vs {exact}");
    }
}
