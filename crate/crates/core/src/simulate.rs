//! Closed-loop trajectory sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{Belief, PomdpModel};

/// A deterministic control law `u_k = mu_k(pi_k)` for stages `1 <= k < T`.
pub trait Policy: Sync {
    fn action(&self, k: usize, belief: &Belief) -> usize;
}

/// Ignores the belief and plays a fixed control sequence (`controls[k - 1]` at stage `k`).
#[derive(Debug, Clone)]
pub struct OpenLoop(pub Vec<usize>);

impl Policy for OpenLoop {
    fn action(&self, k: usize, _belief: &Belief) -> usize {
        self.0[k - 1]
    }
}

/// Wraps a closure as a policy.
pub struct FnPolicy<F>(pub F);

impl<F> Policy for FnPolicy<F>
where
    F: Fn(usize, &Belief) -> usize + Sync,
{
    fn action(&self, k: usize, belief: &Belief) -> usize {
        (self.0)(k, belief)
    }
}

/// One realisation of states, measurements, controls and filter beliefs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub states: Vec<usize>,
    pub measurements: Vec<usize>,
    pub controls: Vec<usize>,
    pub beliefs: Vec<Belief>,
}

/// Per-run seed used by every parallel Monte-Carlo loop.
#[inline]
pub fn run_seed(seed: u64, run: u64) -> u64 {
    seed ^ run
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Inverse-CDF draw from a finite distribution.
pub fn sample_index<R: Rng + ?Sized>(rng: &mut R, probs: impl IntoIterator<Item = f64>) -> usize {
    let r: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, p) in probs.into_iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
        }
        acc += p;
        if r < acc {
            return i;
        }
    }
    last_positive
}

/// Samples `x^T`, `y^T`, `u^{T-1}` from the model under `policy`, filtering
/// along the way. Reproducible for a given seed.
pub fn sample_trajectory(model: &PomdpModel, policy: &dyn Policy, seed: u64) -> Result<TrajectoryRecord> {
    let mut rng = rng_from_seed(seed);
    sample_trajectory_with(model, policy, &mut rng)
}

pub fn sample_trajectory_with<R: Rng + ?Sized>(
    model: &PomdpModel,
    policy: &dyn Policy,
    rng: &mut R,
) -> Result<TrajectoryRecord> {
    let t = model.horizon();
    let n = model.num_states();
    let ny = model.num_measurements();
    let mut states = Vec::with_capacity(t);
    let mut measurements = Vec::with_capacity(t);
    let mut controls = Vec::with_capacity(t.saturating_sub(1));
    let mut beliefs = Vec::with_capacity(t);

    let x1 = sample_index(rng, model.initial_distribution().iter().copied());
    let y1 = sample_index(rng, (0..ny).map(|y| model.initial_observation(x1, y)));
    let mut belief = model.initial_belief(y1)?;
    states.push(x1);
    measurements.push(y1);
    beliefs.push(belief.clone());

    for k in 1..t {
        let u = policy.action(k, &belief);
        let x = *states.last().expect("non-empty");
        let next = sample_index(rng, (0..n).map(|i| model.transition(u, i, x)));
        let y = sample_index(rng, (0..ny).map(|yy| model.observation(u, next, yy)));
        belief = model.filter_update(&belief, u, y)?;
        controls.push(u);
        states.push(next);
        measurements.push(y);
        beliefs.push(belief.clone());
    }
    Ok(TrajectoryRecord { states, measurements, controls, beliefs })
}
