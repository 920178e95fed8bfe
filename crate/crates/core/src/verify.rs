//! Randomised verification suites: entropy identities, curvature of the
//! belief-state costs, PWLC bounds, a grid-DP solver oracle, Viterbi
//! optimality and the marginal-entropy bound chain.
//!
//! Every instance derives its own seed from the suite seed so a failure can
//! be replayed on its own.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::costs::{convex_form_costs, stage_cost, terminal_cost, CostModel, Objective};
use crate::entropy::dot;
use crate::error::{Error, Result};
use crate::experiments::{build_cloud_model, build_navigation_model};
use crate::inference::{brute_force_joint_posterior, entropy_ledger, joint_log_likelihood, viterbi};
use crate::model::{Belief, PomdpModel};
use crate::quasi::simplex_points;
use crate::simulate::{rng_from_seed, run_seed, sample_trajectory, FnPolicy, OpenLoop, Policy};
use crate::solver::base_points::compositions;
use crate::solver::prune::prune;
use crate::solver::pwlc::{build_pwlc_cost, AlphaVector, Provenance, PwlcFunction};
use crate::solver::{generate_base_points, solve, BasePointScheme, SolverOptions};

pub const DEFAULT_SEED: u64 = 20_240_521;

/// Result of one check; `failures` lists the instance seeds that failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Worst observed statistic (a residual, violation or agreement rate).
    pub worst: f64,
    pub tolerance: f64,
    pub instances: usize,
    pub seed: u64,
    pub failures: Vec<u64>,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: worst {:.3e} (tolerance {:.1e}, {} instances, seed {})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.tolerance,
            self.instances,
            self.seed
        )?;
        if !self.detail.is_empty() {
            write!(f, " {}", self.detail)?;
        }
        if !self.failures.is_empty() {
            let shown: Vec<String> = self.failures.iter().take(10).map(|s| s.to_string()).collect();
            write!(f, " failing seeds [{}]", shown.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Identities,
    Structure,
    Solver,
    All,
}

impl FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "identities" => Ok(Scope::Identities),
            "structure" => Ok(Scope::Structure),
            "solver" => Ok(Scope::Solver),
            "all" => Ok(Scope::All),
            other => Err(Error::InvalidArgument(format!(
                "unknown scope '{other}' (expected identities, structure, solver or all)"
            ))),
        }
    }
}

/// Runs the suites of `scope` at their default sizes.
pub fn run_scope(scope: Scope, seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    if matches!(scope, Scope::Identities | Scope::All) {
        out.push(identity_suite(100, seed)?);
        out.push(viterbi_suite(200, seed)?);
        out.push(bound_chain_suite(100, seed)?);
    }
    if matches!(scope, Scope::Structure | Scope::All) {
        out.push(structure_suite(1000, seed));
    }
    if matches!(scope, Scope::Solver | Scope::All) {
        out.push(pwlc_bound_suite(10_000)?);
        out.push(lattice_refinement_suite(10_000)?);
        out.push(prune_soundness_suite(50, seed));
        out.push(grid_oracle_suite(500, seed)?);
    }
    Ok(out)
}

/// Uniform draw from the open simplex.
pub fn random_belief<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln() + 1e-12).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// Small random POMDP with N, |Y| in {2,3}, |U| in {1,2}, T in {2,3,4}.
pub fn random_small_model<R: Rng + ?Sized>(rng: &mut R) -> PomdpModel {
    let n = rng.gen_range(2..=3);
    let ny = rng.gen_range(2..=3);
    let nu = rng.gen_range(1..=2);
    let t = rng.gen_range(2..=4);
    PomdpModel::random(rng, n, nu, ny, t)
}

/// A deterministic output-feedback law: a random control for each
/// (stage, most likely state) pair.
pub fn random_feedback_policy<R: Rng + ?Sized>(
    rng: &mut R,
    model: &PomdpModel,
) -> FnPolicy<impl Fn(usize, &Belief) -> usize + Sync> {
    let table: Vec<Vec<usize>> = (0..model.horizon())
        .map(|_| (0..model.num_states()).map(|_| rng.gen_range(0..model.num_controls())).collect())
        .collect();
    FnPolicy(move |k: usize, b: &Belief| table[k - 1][b.argmax()])
}

/// Callback receiving `(y^T, u^{T-1}, p(y^T))`.
pub type Visitor<'a> = dyn FnMut(&[usize], &[usize], f64) -> Result<()> + 'a;

/// Visits every measurement sequence with positive probability under
/// `policy`, passing `(y^T, u^{T-1}, p(y^T))`.
pub fn for_each_measurement_sequence(model: &PomdpModel, policy: &dyn Policy, visit: &mut Visitor<'_>) -> Result<()> {
    fn rec(
        model: &PomdpModel,
        policy: &dyn Policy,
        belief: Belief,
        ys: &mut Vec<usize>,
        us: &mut Vec<usize>,
        p: f64,
        visit: &mut Visitor<'_>,
    ) -> Result<()> {
        if ys.len() == model.horizon() {
            return visit(ys, us, p);
        }
        let k = ys.len();
        let u = policy.action(k, &belief);
        let lik = model.observation_likelihood(belief.as_slice(), u);
        for (y, &py) in lik.iter().enumerate() {
            if py <= 0.0 {
                continue;
            }
            let next = model.filter_update(belief.as_slice(), u, y)?;
            ys.push(y);
            us.push(u);
            rec(model, policy, next, ys, us, p * py, visit)?;
            ys.pop();
            us.pop();
        }
        Ok(())
    }
    let n = model.num_states();
    for y in 0..model.num_measurements() {
        let py: f64 = (0..n).map(|i| model.initial_distribution()[i] * model.initial_observation(i, y)).sum();
        if py <= 0.0 {
            continue;
        }
        let mut ys = vec![y];
        let mut us = Vec::new();
        rec(model, policy, model.initial_belief(y)?, &mut ys, &mut us, py, visit)?;
    }
    Ok(())
}

/// Expected smoother entropy from the brute-force joint posterior.
pub fn brute_force_smoother_entropy(model: &PomdpModel, policy: &dyn Policy) -> Result<f64> {
    let mut total = 0.0;
    for_each_measurement_sequence(model, policy, &mut |ys, us, p| {
        total += p * brute_force_joint_posterior(model, ys, us)?.entropy();
        Ok(())
    })?;
    Ok(total)
}

/// Smoother entropy equals causal entropy minus directed information, and
/// the three additive forms equal the brute-force oracle.
pub fn identity_suite(instances: usize, seed: u64) -> Result<CheckOutcome> {
    const TOL: f64 = 1e-10;
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for i in 0..instances as u64 {
        let s = run_seed(seed, i);
        let mut rng = rng_from_seed(s);
        let model = random_small_model(&mut rng);
        let policy = random_feedback_policy(&mut rng, &model);
        let ledger = entropy_ledger(&model, &policy)?;
        let oracle = brute_force_smoother_entropy(&model, &policy)?;
        let r = [
            (oracle - (ledger.causal_entropy - ledger.directed_information)).abs(),
            (oracle - ledger.smoother_entropy).abs(),
            (oracle - ledger.first_form).abs(),
            (oracle - ledger.second_form).abs(),
            (oracle - ledger.third_form).abs(),
            ledger.form_residual(),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        worst = worst.max(r);
        if !(r < TOL) {
            failures.push(s);
        }
    }
    Ok(CheckOutcome {
        name: "identities".into(),
        passed: failures.is_empty(),
        worst,
        tolerance: TOL,
        instances,
        seed,
        failures,
        detail: String::new(),
    })
}

/// Midpoint concavity of `g^e_k`, `l^o_k` and convexity of `l^e_k`, `g^o_k`
/// on both builtin models, per control.
pub fn structure_suite(pairs: usize, seed: u64) -> CheckOutcome {
    const TOL: f64 = 1e-10;
    let mut worst = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    let mut instances = 0;
    for (m_idx, (model, cost)) in [build_cloud_model(), build_navigation_model()].into_iter().enumerate() {
        let est = cost.with_objective(Objective::ActiveEstimation);
        let obf = cost.with_objective(Objective::ActiveObfuscation);
        let n = model.num_states();
        for u in 0..model.num_controls() {
            for p in 0..pairs as u64 {
                let s = run_seed(seed, ((m_idx as u64) << 40) | ((u as u64) << 32) | p);
                let mut rng = rng_from_seed(s);
                let a = random_belief(&mut rng, n);
                let b = random_belief(&mut rng, n);
                let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
                let concave = |f: &dyn Fn(&[f64]) -> f64| 0.5 * (f(&a) + f(&b)) - f(&mid);
                let ge = concave(&|pi| stage_cost(&model, &est, 1, pi, u).value);
                let lo = concave(&|pi| stage_cost(&model, &obf, 1, pi, u).value);
                let le = -concave(&|pi| convex_form_costs(&model, &cost, 1, pi, u).estimation);
                let go = -concave(&|pi| convex_form_costs(&model, &cost, 1, pi, u).obfuscation);
                let violation = [ge, lo, le, go].into_iter().fold(f64::NEG_INFINITY, f64::max);
                worst = worst.max(violation);
                instances += 1;
                if violation > TOL {
                    failures.push(s);
                }
            }
        }
    }
    CheckOutcome {
        name: "structure".into(),
        passed: failures.is_empty(),
        worst,
        tolerance: TOL,
        instances,
        seed,
        failures,
        detail: String::new(),
    }
}

fn pwlc_surrogates(
    model: &PomdpModel,
    cost: &CostModel,
    scheme: BasePointScheme,
) -> Result<Vec<(Option<usize>, PwlcFunction)>> {
    let base = generate_base_points(model.num_states(), scheme)?;
    let mut out = Vec::new();
    for u in 0..model.num_controls() {
        out.push((Some(u), build_pwlc_cost(|pi| stage_cost(model, cost, 1, pi, u), &base.points, Some(u))?));
    }
    out.push((None, build_pwlc_cost(|pi| terminal_cost(cost, pi), &base.points, None)?));
    Ok(out)
}

fn true_cost(model: &PomdpModel, cost: &CostModel, control: Option<usize>, pi: &[f64]) -> f64 {
    match control {
        Some(u) => stage_cost(model, cost, 1, pi, u).value,
        None => terminal_cost(cost, pi).value,
    }
}

/// The tangent surrogate never undercuts the true cost, for every concave
/// objective and control on both builtin models.
pub fn pwlc_bound_suite(samples: usize) -> Result<CheckOutcome> {
    const TOL: f64 = 1e-9;
    let mut worst = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    let mut instances = 0;
    for (model, base_cost) in [build_cloud_model(), build_navigation_model()] {
        let pts = simplex_points(model.num_states(), samples);
        for (o_idx, objective) in Objective::CONCAVE.into_iter().enumerate() {
            let cost = base_cost.with_objective(objective);
            for (control, f) in pwlc_surrogates(&model, &cost, BasePointScheme::Vertex)? {
                let under = pts
                    .iter()
                    .map(|pi| true_cost(&model, &cost, control, pi) - f.value(pi))
                    .fold(f64::NEG_INFINITY, f64::max);
                worst = worst.max(under);
                instances += 1;
                if under > TOL {
                    failures.push(o_idx as u64);
                }
            }
        }
    }
    Ok(CheckOutcome {
        name: "pwlc upper bound".into(),
        passed: failures.is_empty(),
        worst,
        tolerance: TOL,
        instances,
        seed: 0,
        failures,
        detail: "worst is max(g - g^) over quasi-random interior beliefs".into(),
    })
}

/// Max surrogate gap on the cloud model is non-increasing over lattice
/// resolutions 2, 4, 8.
pub fn lattice_refinement_suite(samples: usize) -> Result<CheckOutcome> {
    let (model, base_cost) = build_cloud_model();
    let pts = simplex_points(model.num_states(), samples);
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    let mut instances = 0;
    let mut detail = Vec::new();
    for (o_idx, objective) in Objective::CONCAVE.into_iter().enumerate() {
        let cost = base_cost.with_objective(objective);
        let mut gaps: Vec<Vec<f64>> = Vec::new();
        for m in [2, 4, 8] {
            gaps.push(
                pwlc_surrogates(&model, &cost, BasePointScheme::Lattice(m))?
                    .iter()
                    .map(|(control, f)| {
                        pts.iter()
                            .map(|pi| f.value(pi) - true_cost(&model, &cost, *control, pi))
                            .fold(f64::NEG_INFINITY, f64::max)
                    })
                    .collect(),
            );
        }
        for c in 0..gaps[0].len() {
            instances += 1;
            let increase = (gaps[1][c] - gaps[0][c]).max(gaps[2][c] - gaps[1][c]);
            worst = worst.max(increase);
            if increase > 1e-12 {
                failures.push(o_idx as u64);
            }
        }
        if objective == Objective::ActiveObfuscation {
            detail.push(format!("obfuscation control-1 gaps {:.4}/{:.4}/{:.4}", gaps[0][0], gaps[1][0], gaps[2][0]));
        }
    }
    Ok(CheckOutcome {
        name: "lattice refinement".into(),
        passed: failures.is_empty(),
        worst,
        tolerance: 1e-12,
        instances,
        seed: 0,
        failures,
        detail: detail.join("; "),
    })
}

/// Pruning leaves the pointwise minimum of random alpha sets unchanged.
pub fn prune_soundness_suite(instances: usize, seed: u64) -> CheckOutcome {
    const TOL: f64 = 1e-9;
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for i in 0..instances as u64 {
        let s = run_seed(seed, i);
        let mut rng = rng_from_seed(s);
        let n = rng.gen_range(2..=4);
        let count = rng.gen_range(2..=40);
        let vectors: Vec<AlphaVector> = (0..count)
            .map(|_| AlphaVector::new((0..n).map(|_| rng.gen::<f64>()).collect(), None, Provenance::Backup))
            .collect();
        let full = PwlcFunction::new(vectors.clone()).expect("non-empty");
        let pruned = PwlcFunction::new(prune(vectors, 1e-9).0).expect("prune keeps a vector");
        let r =
            simplex_points(n, 10_000).iter().map(|pi| (full.value(pi) - pruned.value(pi)).abs()).fold(0.0, f64::max);
        worst = worst.max(r);
        if r > TOL {
            failures.push(s);
        }
    }
    CheckOutcome {
        name: "prune soundness".into(),
        passed: failures.is_empty(),
        worst,
        tolerance: TOL,
        instances,
        seed,
        failures,
        detail: String::new(),
    }
}

/// Exhaustive DP for a linear-cost problem on an interior grid with
/// nearest-neighbour interpolation of the successor beliefs.
pub struct GridOracle<'a> {
    model: &'a PomdpModel,
    cost: &'a CostModel,
    pub grid: Vec<Vec<f64>>,
    /// `values[k - 1][g]` approximates `J_k` at grid point `g`.
    pub values: Vec<Vec<f64>>,
    /// Largest half-L1 distance from a visited successor to its grid point.
    pub max_snap: f64,
}

impl<'a> GridOracle<'a> {
    /// Grid of all beliefs `c / m` with every `c_i >= 1`.
    pub fn new(model: &'a PomdpModel, cost: &'a CostModel, m: usize) -> Self {
        let n = model.num_states();
        let grid: Vec<Vec<f64>> = compositions(m - n, n)
            .into_iter()
            .map(|c| c.into_iter().map(|ci| (ci + 1) as f64 / m as f64).collect())
            .collect();
        let t = model.horizon();
        let mut oracle = Self { model, cost, grid, values: vec![Vec::new(); t], max_snap: 0.0 };
        oracle.values[t - 1] = oracle.grid.iter().map(|g| cost.lambda * dot(g, &cost.terminal_cost)).collect();
        for k in (1..t).rev() {
            let vals: Vec<f64> = (0..oracle.grid.len())
                .map(|g| {
                    let pi = oracle.grid[g].clone();
                    oracle.q_values(k, &pi).into_iter().fold(f64::INFINITY, f64::min)
                })
                .collect();
            oracle.values[k - 1] = vals;
        }
        oracle
    }

    fn nearest(&mut self, pi: &[f64]) -> usize {
        let (idx, d) = self
            .grid
            .iter()
            .enumerate()
            .map(|(i, g)| (i, g.iter().zip(pi).map(|(a, b)| (a - b).abs()).sum::<f64>()))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        self.max_snap = self.max_snap.max(0.5 * d);
        idx
    }

    /// One-step lookahead values at stage `k` against the grid values of
    /// stage `k + 1`.
    pub fn q_values(&mut self, k: usize, pi: &[f64]) -> Vec<f64> {
        let model = self.model;
        (0..model.num_controls())
            .map(|u| {
                let mut v = self.cost.lambda * dot(pi, &self.cost.stage_cost_column(k, u));
                let lik = model.observation_likelihood(pi, u);
                for (y, &py) in lik.iter().enumerate() {
                    if py <= 0.0 {
                        continue;
                    }
                    let next = model.filter_update(pi, u, y).expect("positive likelihood");
                    let g = self.nearest(next.as_slice());
                    v += py * self.values[k][g];
                }
                v
            })
            .collect()
    }
}

/// Grid size (`m = 22` gives 210 interior points for three states).
pub const GRID_RESOLUTION: usize = 22;

/// Greedy actions of the PWLC solver on the cloud model with the
/// standard objective against the grid-DP oracle.
pub fn grid_oracle_suite(beliefs: usize, seed: u64) -> Result<CheckOutcome> {
    let (model, cost) = build_cloud_model();
    let cost = cost.with_objective(Objective::StandardPomdp);
    let policy = solve(&model, &cost, &SolverOptions::default())?;
    let mut oracle = GridOracle::new(&model, &cost, GRID_RESOLUTION);
    let t = model.horizon();
    let mut agree = 0usize;
    let mut unexplained = Vec::new();
    for i in 0..beliefs as u64 {
        let s = run_seed(seed, i);
        let mut rng = rng_from_seed(s);
        let pi = random_belief(&mut rng, model.num_states());
        let k = rng.gen_range(1..t);
        let q = oracle.q_values(k, &pi);
        let mut order: Vec<usize> = (0..q.len()).collect();
        order.sort_by(|&a, &b| q[a].total_cmp(&q[b]).then(a.cmp(&b)));
        let oracle_action = order[0];
        let solver_action = policy.greedy_action(k, &pi)?;
        if oracle_action == solver_action {
            agree += 1;
        } else {
            // the grid values at every later stage can be off by the snap
            // distance, so both compared Q-values carry (T - k) snaps of error
            let interp_error = 2.0 * (t - k) as f64 * oracle.max_snap;
            let gap = q[order[1]] - q[order[0]];
            if gap >= interp_error {
                unexplained.push(s);
            }
        }
    }
    let rate = agree as f64 / beliefs as f64;
    Ok(CheckOutcome {
        name: "grid-DP oracle agreement".into(),
        passed: rate >= 0.95 && unexplained.is_empty(),
        worst: rate,
        tolerance: 0.95,
        instances: beliefs,
        seed,
        failures: unexplained,
        detail: format!("{} grid points, snap radius {:.4}", oracle.grid.len(), oracle.max_snap),
    })
}

/// Viterbi attains the exhaustive maximum of the joint log-likelihood.
pub fn viterbi_suite(instances: usize, seed: u64) -> Result<CheckOutcome> {
    const TOL: f64 = 1e-9;
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for i in 0..instances as u64 {
        let s = run_seed(seed, i);
        let mut rng = rng_from_seed(s);
        let n = rng.gen_range(2..=3);
        let t = rng.gen_range(1..=5);
        let nu = rng.gen_range(1..=2);
        let ny = rng.gen_range(2..=3);
        let model = PomdpModel::random(&mut rng, n, nu, ny, t);
        let controls: Vec<usize> = (1..t).map(|_| rng.gen_range(0..nu)).collect();
        let record = sample_trajectory(&model, &OpenLoop(controls.clone()), rng.gen())?;
        let path = viterbi(&model, &record.measurements, &controls)?;
        let decoded = joint_log_likelihood(&model, &path, &record.measurements, &controls);
        let total = n.pow(t as u32);
        let mut best = f64::NEG_INFINITY;
        for idx in 0..total {
            let mut rest = idx;
            let states: Vec<usize> = (0..t)
                .map(|_| {
                    let x = rest % n;
                    rest /= n;
                    x
                })
                .collect();
            best = best.max(joint_log_likelihood(&model, &states, &record.measurements, &controls));
        }
        let r = (best - decoded).abs();
        worst = worst.max(r);
        if !(r < TOL) {
            failures.push(s);
        }
    }
    Ok(CheckOutcome {
        name: "viterbi optimality".into(),
        passed: failures.is_empty(),
        worst,
        tolerance: TOL,
        instances,
        seed,
        failures,
        detail: String::new(),
    })
}

/// `sum_k H(X_k|Y^k) >= sum_k H(X_k|Y^T) >= H(X^T|Y^T)`, with equality
/// throughout when every transition column is the same.
pub fn bound_chain_suite(instances: usize, seed: u64) -> Result<CheckOutcome> {
    const TOL: f64 = 1e-10;
    let mut worst_violation = f64::NEG_INFINITY;
    let mut worst_equality: f64 = 0.0;
    let mut failures = Vec::new();
    for i in 0..instances as u64 {
        let s = run_seed(seed, i);
        let mut rng = rng_from_seed(s);
        let model = random_small_model(&mut rng);
        let policy = random_feedback_policy(&mut rng, &model);
        let l = entropy_ledger(&model, &policy)?;
        let v = (l.smoother_entropy - l.sum_smoothed_marginal_entropy)
            .max(l.sum_smoothed_marginal_entropy - l.sum_filter_marginal_entropy);
        worst_violation = worst_violation.max(v);

        let independent = independent_states(&mut rng, &model);
        let policy = random_feedback_policy(&mut rng, &independent);
        let li = entropy_ledger(&independent, &policy)?;
        let e = (li.sum_filter_marginal_entropy - li.smoother_entropy).abs();
        worst_equality = worst_equality.max(e);
        if v > TOL || e > TOL {
            failures.push(s);
        }
    }
    Ok(CheckOutcome {
        name: "entropy bound chain".into(),
        passed: failures.is_empty(),
        worst: worst_violation.max(worst_equality),
        tolerance: TOL,
        instances,
        seed,
        failures,
        detail: format!("worst violation {worst_violation:.3e}, worst equality residual {worst_equality:.3e}"),
    })
}

/// Copy of `model` whose transition columns are all one random distribution
/// per control, making successive states independent.
pub fn independent_states<R: Rng + ?Sized>(rng: &mut R, model: &PomdpModel) -> PomdpModel {
    let n = model.num_states();
    let transition = (0..model.num_controls())
        .map(|_| {
            let col = random_belief(rng, n);
            (0..n).map(|i| vec![col[i]; n]).collect()
        })
        .collect();
    PomdpModel::new(
        n,
        model.controls().to_vec(),
        model.measurements().to_vec(),
        transition,
        (0..model.num_controls()).map(|u| model.observation_matrix(u).to_vec()).collect(),
        Some(
            (0..n).map(|i| (0..model.num_measurements()).map(|y| model.initial_observation(i, y)).collect()).collect(),
        ),
        model.initial_distribution().to_vec(),
        model.horizon(),
    )
    .expect("independent model is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scope_parsing() {
        assert_eq!("ALL".parse::<Scope>().unwrap(), Scope::All);
        assert!("everything".parse::<Scope>().is_err());
    }

    #[test]
    fn small_suites_pass() {
        assert!(identity_suite(5, 3).unwrap().passed);
        assert!(viterbi_suite(10, 3).unwrap().passed);
        assert!(bound_chain_suite(5, 3).unwrap().passed);
        assert!(structure_suite(20, 3).passed);
        assert!(prune_soundness_suite(5, 3).passed);
    }

    #[test]
    fn brute_force_enumeration_sums_to_one() {
        let mut rng = rng_from_seed(9);
        let model = random_small_model(&mut rng);
        let policy = random_feedback_policy(&mut rng, &model);
        let mut total = 0.0;
        for_each_measurement_sequence(&model, &policy, &mut |_, _, p| {
            total += p;
            Ok(())
        })
        .unwrap();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_has_interior_points_only() {
        let (model, cost) = build_cloud_model();
        let short = model.with_horizon(2).unwrap();
        let oracle = GridOracle::new(&short, &cost, GRID_RESOLUTION);
        assert_eq!(oracle.grid.len(), 210);
        assert!(oracle.grid.iter().flatten().all(|&v| v > 0.0));
    }
}
