//! Controlled hidden Markov models and the Bayesian filter.
//!
//! Matrix orientation:
//! - `transition[u][i][j]` is `p(X_{k+1} = i | X_k = j, U_k = u)`, so every
//!   column `j` of `A(u)` is a distribution.
//! - `observation[u][i][y]` is `p(Y_{k+1} = y | X_{k+1} = i, U_k = u)`, so every
//!   row `i` of `B(u)` is a distribution.
//! - `initial_observation[i][y]` is `p(Y_1 = y | X_1 = i)`.

use std::ops::Deref;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when validating stochastic matrices and distributions.
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// Normalisers below this are treated as zero-probability events.
pub const IMPOSSIBLE_MEASUREMENT: f64 = 1e-300;

/// A finite controlled HMM together with its planning horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct PomdpModel {
    num_states: usize,
    controls: Vec<String>,
    measurements: Vec<String>,
    transition: Vec<Vec<Vec<f64>>>,
    observation: Vec<Vec<Vec<f64>>>,
    initial_observation: Vec<Vec<f64>>,
    initial_distribution: Vec<f64>,
    horizon: usize,
}

/// On-disk JSON layout of a model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub num_states: usize,
    pub controls: Vec<String>,
    pub measurements: Vec<String>,
    pub transition: Vec<Vec<Vec<f64>>>,
    pub observation: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_observation: Option<Vec<Vec<f64>>>,
    pub initial_distribution: Vec<f64>,
    pub horizon: usize,
}

fn check_prob(value: f64, what: &str) -> Result<()> {
    if !value.is_finite() || !(-STOCHASTIC_TOL..=1.0 + STOCHASTIC_TOL).contains(&value) {
        return Err(Error::InvalidModel(format!("{what}: entry {value} outside [0, 1]")));
    }
    Ok(())
}

fn check_sum(sum: f64, what: &str) -> Result<()> {
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::InvalidModel(format!("{what} sums to {sum}, expected 1")));
    }
    Ok(())
}

impl PomdpModel {
    /// Builds and validates a model. When `initial_observation` is `None` the
    /// kernel of the first control is used for the time-1 measurement.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        num_states: usize,
        controls: Vec<String>,
        measurements: Vec<String>,
        transition: Vec<Vec<Vec<f64>>>,
        observation: Vec<Vec<Vec<f64>>>,
        initial_observation: Option<Vec<Vec<f64>>>,
        initial_distribution: Vec<f64>,
        horizon: usize,
    ) -> Result<Self> {
        let n = num_states;
        if n == 0 {
            return Err(Error::InvalidModel("num_states must be positive".into()));
        }
        if controls.is_empty() {
            return Err(Error::InvalidModel("at least one control is required".into()));
        }
        if measurements.is_empty() {
            return Err(Error::InvalidModel("at least one measurement is required".into()));
        }
        if horizon == 0 {
            return Err(Error::InvalidModel("horizon must be at least 1".into()));
        }
        let nu = controls.len();
        let ny = measurements.len();
        if transition.len() != nu {
            return Err(Error::InvalidModel(format!(
                "transition has {} control slices, expected {nu}",
                transition.len()
            )));
        }
        for (u, a) in transition.iter().enumerate() {
            if a.len() != n || a.iter().any(|row| row.len() != n) {
                return Err(Error::InvalidModel(format!("transition[{u}] is not {n}x{n}")));
            }
            for row in a {
                for &v in row {
                    check_prob(v, &format!("transition[{u}]"))?;
                }
            }
            for j in 0..n {
                let s: f64 = (0..n).map(|i| a[i][j]).sum();
                check_sum(s, &format!("column {j} of transition[{u}]"))?;
            }
        }
        if observation.len() != nu {
            return Err(Error::InvalidModel(format!(
                "observation has {} control slices, expected {nu}",
                observation.len()
            )));
        }
        for (u, b) in observation.iter().enumerate() {
            if b.len() != n || b.iter().any(|row| row.len() != ny) {
                return Err(Error::InvalidModel(format!("observation[{u}] is not {n}x{ny}")));
            }
            for (i, row) in b.iter().enumerate() {
                for &v in row {
                    check_prob(v, &format!("observation[{u}]"))?;
                }
                check_sum(row.iter().sum(), &format!("row {i} of observation[{u}]"))?;
            }
        }
        let initial_observation = initial_observation.unwrap_or_else(|| observation[0].clone());
        if initial_observation.len() != n || initial_observation.iter().any(|r| r.len() != ny) {
            return Err(Error::InvalidModel(format!("initial_observation is not {n}x{ny}")));
        }
        for (i, row) in initial_observation.iter().enumerate() {
            for &v in row {
                check_prob(v, "initial_observation")?;
            }
            check_sum(row.iter().sum(), &format!("row {i} of initial_observation"))?;
        }
        if initial_distribution.len() != n {
            return Err(Error::InvalidModel(format!(
                "initial_distribution has length {}, expected {n}",
                initial_distribution.len()
            )));
        }
        for &v in &initial_distribution {
            check_prob(v, "initial_distribution")?;
        }
        check_sum(initial_distribution.iter().sum(), "initial_distribution")?;

        Ok(Self {
            num_states,
            controls,
            measurements,
            transition,
            observation,
            initial_observation,
            initial_distribution,
            horizon,
        })
    }

    pub fn from_file_struct(file: ModelFile) -> Result<Self> {
        Self::new(
            file.num_states,
            file.controls,
            file.measurements,
            file.transition,
            file.observation,
            file.initial_observation,
            file.initial_distribution,
            file.horizon,
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidModel(format!("cannot parse model JSON: {e}")))?;
        Self::from_file_struct(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_file_struct(&self) -> ModelFile {
        ModelFile {
            num_states: self.num_states,
            controls: self.controls.clone(),
            measurements: self.measurements.clone(),
            transition: self.transition.clone(),
            observation: self.observation.clone(),
            initial_observation: Some(self.initial_observation.clone()),
            initial_distribution: self.initial_distribution.clone(),
            horizon: self.horizon,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file_struct()).expect("model serialises")
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_controls(&self) -> usize {
        self.controls.len()
    }

    pub fn num_measurements(&self) -> usize {
        self.measurements.len()
    }

    pub fn controls(&self) -> &[String] {
        &self.controls
    }

    pub fn measurements(&self) -> &[String] {
        &self.measurements
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Returns a copy of the model with a different horizon.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidModel("horizon must be at least 1".into()));
        }
        Ok(Self { horizon, ..self.clone() })
    }

    /// `A^{ij}(u)`.
    #[inline]
    pub fn transition(&self, u: usize, i: usize, j: usize) -> f64 {
        self.transition[u][i][j]
    }

    pub fn transition_matrix(&self, u: usize) -> &[Vec<f64>] {
        &self.transition[u]
    }

    /// `B^i(y, u)`.
    #[inline]
    pub fn observation(&self, u: usize, i: usize, y: usize) -> f64 {
        self.observation[u][i][y]
    }

    pub fn observation_matrix(&self, u: usize) -> &[Vec<f64>] {
        &self.observation[u]
    }

    /// `B^i(y_1)`.
    #[inline]
    pub fn initial_observation(&self, i: usize, y: usize) -> f64 {
        self.initial_observation[i][y]
    }

    pub fn initial_distribution(&self) -> &[f64] {
        &self.initial_distribution
    }

    fn check_control(&self, u: usize) {
        assert!(u < self.num_controls(), "control {u} out of range");
    }

    fn check_measurement(&self, y: usize) -> Result<()> {
        if y >= self.num_measurements() {
            return Err(Error::InvalidArgument(format!(
                "measurement {y} out of range (|Y| = {})",
                self.num_measurements()
            )));
        }
        Ok(())
    }

    /// Predicted belief `sum_j A^{ij}(u) pi(j)`.
    pub fn predict(&self, belief: &[f64], u: usize) -> Vec<f64> {
        self.check_control(u);
        let a = &self.transition[u];
        a.iter().map(|row| row.iter().zip(belief).map(|(aij, pj)| aij * pj).sum()).collect()
    }

    /// Posterior of `X_1` after the first measurement.
    pub fn initial_belief(&self, y1: usize) -> Result<Belief> {
        self.check_measurement(y1)?;
        let unnorm: Vec<f64> =
            (0..self.num_states).map(|i| self.initial_observation[i][y1] * self.initial_distribution[i]).collect();
        let norm: f64 = unnorm.iter().sum();
        if !(norm >= IMPOSSIBLE_MEASUREMENT) {
            return Err(Error::ImpossibleMeasurement { measurement: y1, normaliser: norm });
        }
        Ok(Belief::from_unnormalised(unnorm))
    }

    /// `pi_bar(i, j) = A^{ij}(u) pi(j)`.
    pub fn joint_predicted_belief(&self, belief: &[f64], u: usize) -> JointPredictedBelief {
        self.check_control(u);
        let n = self.num_states;
        let a = &self.transition[u];
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = a[i][j] * belief[j];
            }
        }
        JointPredictedBelief { n, data }
    }

    /// `p(y | pi, u)` for every measurement.
    pub fn observation_likelihood(&self, belief: &[f64], u: usize) -> Vec<f64> {
        let pred = self.predict(belief, u);
        let b = &self.observation[u];
        (0..self.num_measurements()).map(|y| pred.iter().enumerate().map(|(i, p)| b[i][y] * p).sum()).collect()
    }

    /// Unnormalised filter numerator `B^i(y, u) (A(u) pi)(i)`.
    pub(crate) fn filter_numerator(&self, predicted: &[f64], u: usize, y: usize) -> Vec<f64> {
        let b = &self.observation[u];
        predicted.iter().enumerate().map(|(i, p)| b[i][y] * p).collect()
    }

    /// One step of the Bayesian filter.
    pub fn filter_update(&self, belief: &[f64], u: usize, y: usize) -> Result<Belief> {
        self.check_measurement(y)?;
        let pred = self.predict(belief, u);
        let unnorm = self.filter_numerator(&pred, u, y);
        let norm: f64 = unnorm.iter().sum();
        if !(norm >= IMPOSSIBLE_MEASUREMENT) {
            return Err(Error::ImpossibleMeasurement { measurement: y, normaliser: norm });
        }
        Ok(Belief::from_unnormalised(unnorm))
    }

    /// Draws a model with Dirichlet(1)-like random kernels. Used by the
    /// randomised verification suites.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        num_states: usize,
        num_controls: usize,
        num_measurements: usize,
        horizon: usize,
    ) -> Self {
        fn dist<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
            // -ln(U) gives Exp(1); normalised exponentials are uniform on the simplex.
            let raw: Vec<f64> = (0..len).map(|_| -(1.0 - rng.gen::<f64>()).ln() + 1e-3).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / s).collect()
        }
        let n = num_states;
        let transition = (0..num_controls)
            .map(|_| {
                let cols: Vec<Vec<f64>> = (0..n).map(|_| dist(rng, n)).collect();
                (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect()
            })
            .collect();
        let observation = (0..num_controls).map(|_| (0..n).map(|_| dist(rng, num_measurements)).collect()).collect();
        let initial_observation = (0..n).map(|_| dist(rng, num_measurements)).collect();
        let initial_distribution = dist(rng, n);
        Self::new(
            n,
            (0..num_controls).map(|u| format!("u{u}")).collect(),
            (0..num_measurements).map(|y| format!("y{y}")).collect(),
            transition,
            observation,
            Some(initial_observation),
            initial_distribution,
            horizon,
        )
        .expect("random model is valid")
    }
}

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Belief(Vec<f64>);

impl Belief {
    /// Validates a probability vector (entries non-negative, sum one within 1e-10).
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::InvalidArgument("belief must be non-empty".into()));
        }
        if probabilities.iter().any(|p| !p.is_finite() || *p < -1e-12) {
            return Err(Error::InvalidArgument(format!("belief has invalid entries: {probabilities:?}")));
        }
        let s: f64 = probabilities.iter().sum();
        if (s - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("belief sums to {s}")));
        }
        Ok(Self::from_unnormalised(probabilities))
    }

    /// Clamps tiny negative entries and renormalises. The caller guarantees a
    /// positive total mass.
    pub fn from_unnormalised(mut values: Vec<f64>) -> Self {
        for v in values.iter_mut() {
            if *v < 0.0 && *v > -1e-12 {
                *v = 0.0;
            }
        }
        let s: f64 = values.iter().sum();
        debug_assert!(s > 0.0);
        for v in values.iter_mut() {
            *v /= s;
        }
        Self(values)
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn point_mass(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Self(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Index of the largest entry (first one on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }
}

impl Deref for Belief {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for Belief {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// `p(X_{k+1} = i, X_k = j | y^k, u^k)` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPredictedBelief {
    n: usize,
    data: Vec<f64>,
}

impl JointPredictedBelief {
    pub fn num_states(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Marginal of `X_{k+1}` (sum over `j`): the predicted belief.
    pub fn next_marginal(&self) -> Vec<f64> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j)).sum()).collect()
    }

    /// Marginal of `X_k` (sum over `i`): the input belief.
    pub fn current_marginal(&self) -> Vec<f64> {
        (0..self.n).map(|j| (0..self.n).map(|i| self.get(i, j)).sum()).collect()
    }

    /// Backward kernel `p(X_k = . | X_{k+1} = i, y^k, u^k)`, or `None` when
    /// `X_{k+1} = i` has zero predicted probability.
    pub fn backward_kernel(&self, i: usize) -> Option<Vec<f64>> {
        let row = &self.data[i * self.n..(i + 1) * self.n];
        let s: f64 = row.iter().sum();
        if s <= 0.0 {
            return None;
        }
        Some(row.iter().map(|v| v / s).collect())
    }
}
