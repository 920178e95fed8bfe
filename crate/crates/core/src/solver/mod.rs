//! Tangent-plane PWLC approximation of concave stage costs and alpha-vector
//! dynamic programming over the finite horizon.
//!
//! All PWLC functions use the minimisation convention: a function is the
//! pointwise minimum of its hyperplanes, so tangents of a concave cost are
//! upper bounds.

pub mod backup;
pub mod base_points;
pub mod gap;
pub mod lp;
pub mod prune;
pub mod pwlc;

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use backup::{dp_backup, Projections, PruneMode};
pub use base_points::{generate_base_points, BasePointScheme, BasePointSet};
pub use gap::{approximation_gap, GapStatistics};
pub use prune::{prune, prune_pairwise, PruneStats, DEFAULT_MARGIN};
pub use pwlc::{build_pwlc_cost, tangent_alpha, AlphaVector, Provenance, PwlcFunction};

use crate::costs::{stage_cost, terminal_cost, CostModel, Objective};
use crate::entropy::dot;
use crate::error::{Error, Result};
use crate::model::{Belief, PomdpModel};
use crate::simulate::Policy;

/// Relative tolerance below which two action values count as tied.
pub const ACTION_TIE_TOL: f64 = 1e-12;
/// Samples used for the gap statistics stored with a solved policy.
pub const POLICY_GAP_SAMPLES: usize = 2000;

/// Seed for the belief sampling of point-based mode.
pub const POINT_SAMPLE_SEED: u64 = 0x5eed;
/// Probability of a random control while sampling beliefs under an interim policy.
pub const POINT_SAMPLE_EXPLORATION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub base_points: BasePointScheme,
    pub prune: PruneMode,
    /// Witness margin used by exact pruning.
    pub tolerance: f64,
    /// Point-based mode only: simulated trajectories per round whose beliefs
    /// are added to the backup points.
    #[serde(default)]
    pub point_samples: usize,
    /// Point-based mode only: sampling rounds. The first samples random
    /// controls, later ones follow the previous round's policy.
    #[serde(default = "default_point_rounds")]
    pub point_rounds: usize,
}

fn default_point_rounds() -> usize {
    2
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            base_points: BasePointScheme::Vertex,
            prune: PruneMode::Incremental,
            tolerance: DEFAULT_MARGIN,
            point_samples: 0,
            point_rounds: default_point_rounds(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    /// Vector count of `J_k` for `k = 1..T`.
    pub vectors_per_stage: Vec<usize>,
    pub prune: PruneStats,
    pub wall_time_secs: f64,
    /// Beliefs used by point-based backups (the base points otherwise).
    #[serde(default)]
    pub backup_points: usize,
    /// Stage-1 cost approximation gaps, one entry per control.
    pub stage_cost_gaps: Vec<GapStatistics>,
}

impl SolverStats {
    fn empty() -> Self {
        Self {
            vectors_per_stage: Vec::new(),
            prune: PruneStats::default(),
            wall_time_secs: 0.0,
            backup_points: 0,
            stage_cost_gaps: Vec::new(),
        }
    }
}

fn backward_induction(
    model: &PomdpModel,
    stage_costs: &[Vec<PwlcFunction>],
    terminal: &PwlcFunction,
    options: &SolverOptions,
    points: &[Vec<f64>],
    stats: &mut PruneStats,
) -> Result<Vec<PwlcFunction>> {
    let t = model.horizon();
    let mut values = vec![terminal.clone()];
    for k in (1..t).rev() {
        let (j, s) = dp_backup(model, &stage_costs[k - 1], &values[0], options.prune, options.tolerance, points)?;
        stats.absorb(&s);
        values.insert(0, j);
    }
    Ok(values)
}

/// Output of [`solve`]: approximate cost-to-go functions and the PWLC stage
/// costs they were built from.
#[derive(Debug, Clone)]
pub struct SolvedPolicy {
    model: PomdpModel,
    pub objective: Objective,
    pub lambda: f64,
    pub options: SolverOptions,
    pub base_points: BasePointSet,
    /// `value_functions[k - 1]` is `J_k`; the last entry is the terminal cost.
    pub value_functions: Vec<PwlcFunction>,
    /// `stage_costs[k - 1][u]` for `k = 1..T-1`.
    pub stage_costs: Vec<Vec<PwlcFunction>>,
    pub stats: SolverStats,
}

fn terminal_pwlc(cost: &CostModel, base: &BasePointSet, margin: f64) -> Result<PwlcFunction> {
    let f = build_pwlc_cost(|pi| terminal_cost(cost, pi), &base.points, None)?;
    PwlcFunction::new(prune(f.vectors, margin).0)
}

/// PWLC stage costs for every decision stage and control.
pub fn build_stage_costs(
    model: &PomdpModel,
    cost: &CostModel,
    base: &BasePointSet,
    margin: f64,
) -> Result<Vec<Vec<PwlcFunction>>> {
    let build_stage = |k: usize| -> Result<Vec<PwlcFunction>> {
        (0..model.num_controls())
            .map(|u| {
                let f = build_pwlc_cost(|pi| stage_cost(model, cost, k, pi, u), &base.points, Some(u))?;
                PwlcFunction::new(prune(f.vectors, margin).0)
            })
            .collect()
    };
    let t = model.horizon();
    if t < 2 {
        return Ok(Vec::new());
    }
    if cost.stage_cost_overrides.is_none() {
        let first = build_stage(1)?;
        return Ok(vec![first; t - 1]);
    }
    (1..t).map(build_stage).collect()
}

/// Solves the PWLC surrogate of `cost.objective` by backward induction.
pub fn solve(model: &PomdpModel, cost: &CostModel, options: &SolverOptions) -> Result<SolvedPolicy> {
    if !cost.objective.is_concave() {
        return Err(Error::NonConcaveObjective(cost.objective));
    }
    cost.validate(model)?;
    if !(options.tolerance >= 0.0 && options.tolerance.is_finite()) {
        return Err(Error::InvalidArgument(format!("tolerance must be finite and >= 0, got {}", options.tolerance)));
    }
    let started = Instant::now();
    let base = generate_base_points(model.num_states(), options.base_points)?;
    let margin = options.tolerance;
    let t = model.horizon();

    let stage_costs = build_stage_costs(model, cost, &base, margin)?;
    let terminal = terminal_pwlc(cost, &base, margin)?;
    let mut points = base.points.clone();
    let mut prune_stats = PruneStats::default();
    let mut values = backward_induction(model, &stage_costs, &terminal, options, &points, &mut prune_stats)?;
    if options.prune == PruneMode::PointBased && options.point_samples > 0 && t > 1 {
        for round in 0..options.point_rounds {
            let seed = POINT_SAMPLE_SEED.wrapping_add(round as u64);
            let extra = if round == 0 {
                base_points::reachable_beliefs(model, None, options.point_samples, 1.0, seed)
            } else {
                let interim = SolvedPolicy {
                    model: model.clone(),
                    objective: cost.objective,
                    lambda: cost.lambda,
                    options: *options,
                    base_points: base.clone(),
                    value_functions: values.clone(),
                    stage_costs: stage_costs.clone(),
                    stats: SolverStats::empty(),
                };
                base_points::reachable_beliefs(
                    model,
                    Some(&interim),
                    options.point_samples,
                    POINT_SAMPLE_EXPLORATION,
                    seed,
                )
            };
            base_points::merge_points(&mut points, extra);
            values = backward_induction(model, &stage_costs, &terminal, options, &points, &mut prune_stats)?;
        }
    }

    let stage_cost_gaps = stage_costs
        .first()
        .map(|costs| {
            costs
                .iter()
                .enumerate()
                .map(|(u, f)| {
                    approximation_gap(|pi| stage_cost(model, cost, 1, pi, u).value, f, POLICY_GAP_SAMPLES, Some(u))
                })
                .collect()
        })
        .unwrap_or_default();

    let stats = SolverStats {
        vectors_per_stage: values.iter().map(|v| v.len()).collect(),
        backup_points: points.len(),
        prune: prune_stats,
        wall_time_secs: started.elapsed().as_secs_f64(),
        stage_cost_gaps,
    };
    Ok(SolvedPolicy {
        model: model.clone(),
        objective: cost.objective,
        lambda: cost.lambda,
        options: *options,
        base_points: base,
        value_functions: values,
        stage_costs,
        stats,
    })
}

/// `min_alpha <q, alpha>` for an unnormalised belief `q`.
fn min_unnormalised(f: &PwlcFunction, q: &[f64]) -> f64 {
    f.vectors.iter().map(|v| dot(q, &v.weights)).fold(f64::INFINITY, f64::min)
}

impl SolvedPolicy {
    pub fn model(&self) -> &PomdpModel {
        &self.model
    }

    pub fn horizon(&self) -> usize {
        self.model.horizon()
    }

    /// `J_k`, `1 <= k <= T`.
    pub fn value_function(&self, k: usize) -> &PwlcFunction {
        &self.value_functions[k - 1]
    }

    /// One-step lookahead values `c^_k(pi,u) + sum_y p(y) J_{k+1}(Pi(pi,u,y))`
    /// for every control.
    pub fn action_values(&self, k: usize, belief: &[f64]) -> Result<Vec<f64>> {
        let t = self.horizon();
        if k == 0 || k >= t {
            return Err(Error::InvalidArgument(format!("decision stage {k} outside 1..{}", t.saturating_sub(1))));
        }
        let next = &self.value_functions[k];
        let n = self.model.num_states();
        Ok((0..self.model.num_controls())
            .map(|u| {
                let rho = self.model.predict(belief, u);
                let mut v = self.stage_costs[k - 1][u].value(belief);
                let mut q = vec![0.0; n];
                for y in 0..self.model.num_measurements() {
                    for i in 0..n {
                        q[i] = self.model.observation(u, i, y) * rho[i];
                    }
                    if q.iter().any(|&x| x > 0.0) {
                        v += min_unnormalised(next, &q);
                    }
                }
                v
            })
            .collect())
    }

    /// Greedy control at stage `k`; near-ties go to the lowest index.
    pub fn greedy_action(&self, k: usize, belief: &[f64]) -> Result<usize> {
        let values = self.action_values(k, belief)?;
        Ok(argmin_with_ties(&values))
    }

    pub fn to_file(&self) -> PolicyFile {
        let records = |f: &PwlcFunction, stage: usize| -> Vec<VectorRecord> {
            f.vectors.iter().map(|v| VectorRecord { stage, action: v.action, weights: v.weights.clone() }).collect()
        };
        let t = self.horizon();
        PolicyFile {
            objective: self.objective,
            lambda: self.lambda,
            horizon: t,
            num_states: self.model.num_states(),
            num_controls: self.model.num_controls(),
            num_stages: t - 1,
            options: self.options,
            base_points: self.base_points.clone(),
            stages: (1..t).flat_map(|k| records(&self.value_functions[k - 1], k)).collect(),
            terminal: records(&self.value_functions[t - 1], t),
            stage_costs: self
                .stage_costs
                .iter()
                .enumerate()
                .flat_map(|(k, per_u)| per_u.iter().flat_map(move |f| records(f, k + 1)))
                .collect(),
            stats: self.stats.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("policy serialises")
    }

    /// Rebuilds a policy from its file form for use with `model`.
    pub fn from_file(file: PolicyFile, model: &PomdpModel) -> Result<Self> {
        let bad = |msg: String| Error::InvalidArgument(format!("policy file: {msg}"));
        if file.num_states != model.num_states() || file.num_controls != model.num_controls() {
            return Err(bad(format!(
                "solved for {} states / {} controls, model has {} / {}",
                file.num_states,
                file.num_controls,
                model.num_states(),
                model.num_controls()
            )));
        }
        if file.horizon != model.horizon() {
            return Err(bad(format!("horizon {} does not match model horizon {}", file.horizon, model.horizon())));
        }
        let t = file.horizon;
        let n = file.num_states;
        let to_alpha = |r: &VectorRecord, provenance| -> Result<AlphaVector> {
            if r.weights.len() != n {
                return Err(bad(format!("vector at stage {} has {} weights", r.stage, r.weights.len())));
            }
            if r.action.is_some_and(|a| a >= file.num_controls) {
                return Err(bad(format!("vector at stage {} has invalid action", r.stage)));
            }
            Ok(AlphaVector::new(r.weights.clone(), r.action, provenance))
        };
        let mut values = Vec::with_capacity(t);
        for k in 1..t {
            let vs = file
                .stages
                .iter()
                .filter(|r| r.stage == k)
                .map(|r| to_alpha(r, Provenance::Backup))
                .collect::<Result<Vec<_>>>()?;
            values.push(PwlcFunction::new(vs).map_err(|_| bad(format!("stage {k} has no vectors")))?);
        }
        let term = file.terminal.iter().map(|r| to_alpha(r, Provenance::Backup)).collect::<Result<Vec<_>>>()?;
        values.push(PwlcFunction::new(term).map_err(|_| bad("terminal cost has no vectors".into()))?);
        let mut stage_costs = Vec::with_capacity(t.saturating_sub(1));
        for k in 1..t {
            let mut per_u = Vec::with_capacity(file.num_controls);
            for u in 0..file.num_controls {
                let vs = file
                    .stage_costs
                    .iter()
                    .filter(|r| r.stage == k && r.action == Some(u))
                    .map(|r| to_alpha(r, Provenance::Backup))
                    .collect::<Result<Vec<_>>>()?;
                per_u
                    .push(PwlcFunction::new(vs).map_err(|_| bad(format!("no stage cost for stage {k}, control {u}")))?);
            }
            stage_costs.push(per_u);
        }
        Ok(Self {
            model: model.clone(),
            objective: file.objective,
            lambda: file.lambda,
            options: file.options,
            base_points: file.base_points,
            value_functions: values,
            stage_costs,
            stats: file.stats,
        })
    }

    pub fn from_json(text: &str, model: &PomdpModel) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?, model)
    }

    pub fn load(path: &Path, model: &PomdpModel) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?, model)
    }
}

impl Policy for SolvedPolicy {
    fn action(&self, k: usize, belief: &Belief) -> usize {
        self.greedy_action(k, belief).expect("policy queried at a decision stage")
    }
}

/// Index of the smallest value; values within a relative `ACTION_TIE_TOL`
/// of an earlier one do not displace it.
pub fn argmin_with_ties(values: &[f64]) -> usize {
    let mut best = 0;
    for (u, &v) in values.iter().enumerate().skip(1) {
        let b = values[best];
        if v < b - ACTION_TIE_TOL * b.abs().max(1.0) {
            best = u;
        }
    }
    best
}

/// One alpha vector in a policy file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorRecord {
    pub stage: usize,
    pub action: Option<usize>,
    pub weights: Vec<f64>,
}

/// Serialised form of a [`SolvedPolicy`]. `stages` holds `J_k` for the
/// decision stages `k = 1..T-1`, `terminal` holds `J_T`, and `stage_costs`
/// holds the PWLC stage costs keyed by stage and control.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyFile {
    pub objective: Objective,
    pub lambda: f64,
    pub horizon: usize,
    pub num_states: usize,
    pub num_controls: usize,
    pub num_stages: usize,
    pub options: SolverOptions,
    pub base_points: BasePointSet,
    pub stages: Vec<VectorRecord>,
    pub terminal: Vec<VectorRecord>,
    pub stage_costs: Vec<VectorRecord>,
    pub stats: SolverStats,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::build_cloud_model;

    #[test]
    fn convex_objectives_are_rejected() {
        let (m, c) = build_cloud_model();
        for o in [Objective::ActiveEstimationConvex, Objective::ActiveObfuscationConvex] {
            let err = solve(&m, &c.with_objective(o), &SolverOptions::default()).unwrap_err();
            assert!(matches!(err, Error::NonConcaveObjective(_)));
        }
    }

    #[test]
    fn horizon_one_is_terminal_cost_only() {
        let (m, c) = build_cloud_model();
        let m = m.with_horizon(1).unwrap();
        let p = solve(&m, &c.with_objective(Objective::StandardPomdp), &SolverOptions::default()).unwrap();
        assert_eq!(p.value_functions.len(), 1);
        assert!(p.stage_costs.is_empty());
        assert!(p.greedy_action(1, &[1.0 / 3.0; 3]).is_err());
        let pi = [0.2, 0.3, 0.5];
        assert!((p.value_function(1).value(&pi) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn zero_costs_pick_the_first_control() {
        let (m, c) = build_cloud_model();
        let zero = CostModel::terminal_only(&m, vec![0.0; 3], Objective::StandardPomdp);
        let _ = c;
        let p = solve(&m.with_horizon(3).unwrap(), &zero, &SolverOptions::default()).unwrap();
        for pi in crate::quasi::simplex_points(3, 50) {
            assert_eq!(p.greedy_action(1, &pi).unwrap(), 0);
        }
    }

    #[test]
    fn regulator_keeps_the_goal_state() {
        let (m, c) = build_cloud_model();
        let p = solve(&m, &c.with_objective(Objective::StandardPomdp), &SolverOptions::default()).unwrap();
        assert_eq!(p.greedy_action(9, &[0.0, 0.0, 1.0]).unwrap(), 2);
    }

    #[test]
    fn argmin_tie_break() {
        assert_eq!(argmin_with_ties(&[1.0, 1.0, 0.5]), 2);
        assert_eq!(argmin_with_ties(&[1.0, 1.0 - 1e-15, 1.0]), 0);
        assert_eq!(argmin_with_ties(&[0.0, 0.0]), 0);
    }

    #[test]
    fn policy_file_round_trip() {
        let (m, c) = build_cloud_model();
        let m = m.with_horizon(4).unwrap();
        let p = solve(&m, &c, &SolverOptions::default()).unwrap();
        let file = p.to_file();
        assert_eq!(file.num_stages, 3);
        let back = SolvedPolicy::from_json(&p.to_json(), &m).unwrap();
        assert_eq!(back.value_functions.len(), p.value_functions.len());
        for pi in crate::quasi::simplex_points(3, 100) {
            for k in 1..4 {
                assert_eq!(back.greedy_action(k, &pi).unwrap(), p.greedy_action(k, &pi).unwrap());
                assert_eq!(back.value_function(k).value(&pi), p.value_function(k).value(&pi));
            }
        }
        assert!(SolvedPolicy::from_json(&p.to_json(), &m.with_horizon(5).unwrap()).is_err());
    }
}
