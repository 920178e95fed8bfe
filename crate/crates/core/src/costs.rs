//! Operational costs and the belief-state stage costs of every planning
//! objective.
//!
//! Stage costs (for `1 <= k < T`), with `c = lambda * <pi, c_k(., u)>`:
//!
//! | objective              | stage cost                         | terminal cost            |
//! |------------------------|------------------------------------|--------------------------|
//! | `ActiveEstimation`     | `g~(pi,u) + c`                     | `H(pi) + lambda <pi,c_T>`|
//! | `ActiveObfuscation`    | `c - E_Y[l~(pi,u,Y)]`              | `lambda <pi,c_T>`        |
//! | `StandardPomdp`        | `c`                                | `lambda <pi,c_T>`        |
//! | `MinDirectedInfo`      | `c + I(X_{k+1}; Y_{k+1} | pi, u)`   | `lambda <pi,c_T>`        |
//! | `MinMarginalEntropy`   | `H(pi) + c`                        | `H(pi) + lambda <pi,c_T>`|
//! | `MinTerminalEntropy`   | `c`                                | `H(pi) + lambda <pi,c_T>`|
//!
//! The first six are concave in the belief. The two `*Convex` objectives are
//! the alternative (equivalent but convex) reformulations of estimation and
//! obfuscation; they can be evaluated but not solved by the PWLC solver.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::entropy::{
    backward_entropy, belief_entropy_eval, dot, expected_ell_tilde, predicted_information_gain, StageCostEvaluation,
};
use crate::error::{Error, Result};
use crate::model::PomdpModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    ActiveEstimation,
    ActiveObfuscation,
    StandardPomdp,
    MinDirectedInfo,
    MinMarginalEntropy,
    MinTerminalEntropy,
    /// Active estimation through the first belief-state form (`l^e_k`).
    ActiveEstimationConvex,
    /// Active obfuscation through the second belief-state form (`g^o_k`).
    ActiveObfuscationConvex,
}

impl Objective {
    pub const ALL: [Objective; 8] = [
        Objective::ActiveEstimation,
        Objective::ActiveObfuscation,
        Objective::StandardPomdp,
        Objective::MinDirectedInfo,
        Objective::MinMarginalEntropy,
        Objective::MinTerminalEntropy,
        Objective::ActiveEstimationConvex,
        Objective::ActiveObfuscationConvex,
    ];

    /// Objectives whose stage and terminal costs are concave in the belief.
    pub const CONCAVE: [Objective; 6] = [
        Objective::ActiveEstimation,
        Objective::ActiveObfuscation,
        Objective::StandardPomdp,
        Objective::MinDirectedInfo,
        Objective::MinMarginalEntropy,
        Objective::MinTerminalEntropy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Objective::ActiveEstimation => "active_estimation",
            Objective::ActiveObfuscation => "active_obfuscation",
            Objective::StandardPomdp => "standard_pomdp",
            Objective::MinDirectedInfo => "min_directed_info",
            Objective::MinMarginalEntropy => "min_marginal_entropy",
            Objective::MinTerminalEntropy => "min_terminal_entropy",
            Objective::ActiveEstimationConvex => "active_estimation_convex",
            Objective::ActiveObfuscationConvex => "active_obfuscation_convex",
        }
    }

    pub fn is_concave(self) -> bool {
        !matches!(self, Objective::ActiveEstimationConvex | Objective::ActiveObfuscationConvex)
    }

    /// Whether the smoother entropy counts against (estimation) or for
    /// (obfuscation) this objective. `None` for the entropy-agnostic baseline.
    pub fn sense(self) -> Option<Sense> {
        match self {
            Objective::ActiveEstimation
            | Objective::ActiveEstimationConvex
            | Objective::MinMarginalEntropy
            | Objective::MinTerminalEntropy => Some(Sense::Estimation),
            Objective::ActiveObfuscation | Objective::ActiveObfuscationConvex | Objective::MinDirectedInfo => {
                Some(Sense::Obfuscation)
            }
            Objective::StandardPomdp => None,
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Objective {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Objective::ALL
            .into_iter()
            .find(|o| o.name() == norm)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown objective `{s}`")))
    }
}

/// Sign convention for reporting total cost: the smoother entropy is added
/// for estimation and subtracted for obfuscation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Estimation,
    Obfuscation,
}

impl Sense {
    pub fn entropy_sign(self) -> f64 {
        match self {
            Sense::Estimation => 1.0,
            Sense::Obfuscation => -1.0,
        }
    }
}

/// Operational costs `c_k(x, u)`, `c_T(x)` and the objective selector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// `stage_cost[x][u]`, used at every stage without an override.
    pub stage_cost: Vec<Vec<f64>>,
    /// Optional per-stage tables, `stage_cost_overrides[k - 1][x][u]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage_cost_overrides: Option<Vec<Vec<Vec<f64>>>>,
    pub terminal_cost: Vec<f64>,
    pub objective: Objective,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

fn default_lambda() -> f64 {
    1.0
}

impl CostModel {
    /// Zero stage costs with the given terminal cost.
    pub fn terminal_only(model: &PomdpModel, terminal_cost: Vec<f64>, objective: Objective) -> Self {
        Self {
            stage_cost: vec![vec![0.0; model.num_controls()]; model.num_states()],
            stage_cost_overrides: None,
            terminal_cost,
            objective,
            lambda: 1.0,
        }
    }

    pub fn with_objective(&self, objective: Objective) -> Self {
        Self { objective, ..self.clone() }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..self.clone() }
    }

    pub fn validate(&self, model: &PomdpModel) -> Result<()> {
        let n = model.num_states();
        let nu = model.num_controls();
        let check_table = |t: &Vec<Vec<f64>>, what: &str| -> Result<()> {
            if t.len() != n || t.iter().any(|r| r.len() != nu) {
                return Err(Error::InvalidCost(format!("{what} must be {n} x {nu}")));
            }
            if t.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidCost(format!("{what} entries must be finite and non-negative")));
            }
            Ok(())
        };
        check_table(&self.stage_cost, "stage_cost")?;
        if let Some(overrides) = &self.stage_cost_overrides {
            if overrides.len() + 1 != model.horizon() {
                return Err(Error::InvalidCost(format!(
                    "stage_cost_overrides needs T - 1 = {} tables, got {}",
                    model.horizon() - 1,
                    overrides.len()
                )));
            }
            for (k, t) in overrides.iter().enumerate() {
                check_table(t, &format!("stage_cost_overrides[{k}]"))?;
            }
        }
        if self.terminal_cost.len() != n {
            return Err(Error::InvalidCost(format!("terminal_cost must have length {n}")));
        }
        if self.terminal_cost.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidCost("terminal_cost entries must be finite and non-negative".into()));
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::InvalidCost(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        Ok(())
    }

    pub fn from_json(text: &str, model: &PomdpModel) -> Result<Self> {
        let cost: CostModel =
            serde_json::from_str(text).map_err(|e| Error::InvalidCost(format!("cannot parse cost JSON: {e}")))?;
        cost.validate(model)?;
        Ok(cost)
    }

    pub fn load(path: &Path, model: &PomdpModel) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?, model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("cost model serialises")
    }

    /// Column `u` of the stage-cost table in force at stage `k` (1-based).
    pub fn stage_cost_column(&self, k: usize, u: usize) -> Vec<f64> {
        let table = match &self.stage_cost_overrides {
            Some(o) if k >= 1 && k - 1 < o.len() => &o[k - 1],
            _ => &self.stage_cost,
        };
        table.iter().map(|row| row[u]).collect()
    }

    /// `c_k(x, u)`.
    pub fn stage_cost_at(&self, k: usize, x: usize, u: usize) -> f64 {
        match &self.stage_cost_overrides {
            Some(o) if k >= 1 && k - 1 < o.len() => o[k - 1][x][u],
            _ => self.stage_cost[x][u],
        }
    }

    /// Whether every stage-cost table is identically zero.
    pub fn has_zero_stage_costs(&self) -> bool {
        let zero = |t: &Vec<Vec<f64>>| t.iter().flatten().all(|v| *v == 0.0);
        zero(&self.stage_cost) && self.stage_cost_overrides.as_ref().is_none_or(|o| o.iter().all(zero))
    }
}

fn operational(cost: &CostModel, k: usize, belief: &[f64], u: usize) -> StageCostEvaluation {
    StageCostEvaluation::linear(belief, &cost.stage_cost_column(k, u)).scaled(cost.lambda)
}

/// Belief-state stage cost of `cost.objective` at stage `k` (`1 <= k < T`).
pub fn stage_cost(model: &PomdpModel, cost: &CostModel, k: usize, belief: &[f64], u: usize) -> StageCostEvaluation {
    let c = operational(cost, k, belief, u);
    match cost.objective {
        Objective::ActiveEstimation => c.add_scaled(1.0, &backward_entropy(model, belief, u)),
        Objective::ActiveObfuscation => c.add_scaled(-1.0, &expected_ell_tilde(model, belief, u)),
        Objective::StandardPomdp | Objective::MinTerminalEntropy => c,
        Objective::MinDirectedInfo => c.add_scaled(1.0, &predicted_information_gain(model, belief, u)),
        Objective::MinMarginalEntropy => c.add_scaled(1.0, &belief_entropy_eval(belief)),
        Objective::ActiveEstimationConvex => c.add_scaled(1.0, &expected_ell_tilde(model, belief, u)),
        Objective::ActiveObfuscationConvex => c.add_scaled(-1.0, &backward_entropy(model, belief, u)),
    }
}

/// Belief-state terminal cost of `cost.objective`.
pub fn terminal_cost(cost: &CostModel, belief: &[f64]) -> StageCostEvaluation {
    let c = StageCostEvaluation::linear(belief, &cost.terminal_cost).scaled(cost.lambda);
    match cost.objective {
        Objective::ActiveEstimation | Objective::MinMarginalEntropy | Objective::MinTerminalEntropy => {
            c.add_scaled(1.0, &belief_entropy_eval(belief))
        }
        Objective::ActiveObfuscationConvex => c.add_scaled(-1.0, &belief_entropy_eval(belief)),
        Objective::ActiveObfuscation
        | Objective::StandardPomdp
        | Objective::MinDirectedInfo
        | Objective::ActiveEstimationConvex => c,
    }
}

/// The two convex reformulation stage costs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexFormCosts {
    /// `l^e_k = E_Y[l~] + c`.
    pub estimation: f64,
    /// `g^o_k = c - g~`.
    pub obfuscation: f64,
}

pub fn convex_form_costs(model: &PomdpModel, cost: &CostModel, k: usize, belief: &[f64], u: usize) -> ConvexFormCosts {
    let c = cost.lambda * dot(belief, &cost.stage_cost_column(k, u));
    ConvexFormCosts {
        estimation: expected_ell_tilde(model, belief, u).value + c,
        obfuscation: c - backward_entropy(model, belief, u).value,
    }
}
