//! Planning for finite-horizon POMDPs whose objective involves the smoother
//! entropy `H(X^T | Y^T, U^{T-1})`: the conditional entropy of the whole
//! state trajectory given the measurement and control records.
//!
//! Minimising it (active estimation) makes trajectories easy to
//! reconstruct; maximising it (active obfuscation) hides them. Both problems
//! are rewritten as belief-state MDPs with concave costs, approximated by
//! tangent planes and solved with alpha-vector dynamic programming.
//!
//! Module map:
//!
//! - [`model`]: POMDP kernels, beliefs and the Bayesian filter
//! - [`entropy`], [`costs`]: belief-state entropy functionals and stage costs
//! - [`solver`]: PWLC approximation, pruning, backups and policies
//! - [`inference`]: Viterbi, smoothing and exact entropy accounting
//! - [`simulate`], [`experiments`]: closed-loop Monte Carlo and benchmarks
//! - [`verify`]: randomised property suites used by the command-line tool

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod costs;
pub mod entropy;
pub mod error;
pub mod experiments;
pub mod inference;
pub mod model;
pub mod quasi;
pub mod simulate;
pub mod solver;
pub mod verify;

pub use costs::{stage_cost, terminal_cost, CostModel, Objective, Sense};
pub use error::{Error, Result};
pub use model::{Belief, JointPredictedBelief, PomdpModel};
pub use simulate::{OpenLoop, Policy, TrajectoryRecord};
pub use solver::{solve, SolvedPolicy, SolverOptions};
