use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pwlc::PwlcFunction;
use crate::quasi::simplex_points;

/// Sampled over-approximation `pwlc(pi) - f(pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapStatistics {
    pub control: Option<usize>,
    pub max: f64,
    pub mean: f64,
    pub min: f64,
    pub samples: usize,
}

/// Evaluates the gap at `sample_size` quasi-random interior beliefs.
pub fn approximation_gap<F>(f: F, pwlc: &PwlcFunction, sample_size: usize, control: Option<usize>) -> GapStatistics
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let gaps: Vec<f64> = simplex_points(pwlc.dim(), sample_size).par_iter().map(|pi| pwlc.value(pi) - f(pi)).collect();
    GapStatistics {
        control,
        max: gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean: gaps.iter().sum::<f64>() / gaps.len().max(1) as f64,
        min: gaps.iter().copied().fold(f64::INFINITY, f64::min),
        samples: gaps.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::{belief_entropy, belief_entropy_eval, dot, StageCostEvaluation};
    use crate::solver::base_points::{generate_base_points, BasePointScheme};
    use crate::solver::pwlc::build_pwlc_cost;

    #[test]
    fn linear_cost_has_no_gap() {
        let w = [1.0, 0.0, 2.0];
        let pts = generate_base_points(3, BasePointScheme::Vertex).unwrap().points;
        let f = build_pwlc_cost(|p: &[f64]| StageCostEvaluation::linear(p, &w), &pts, Some(0)).unwrap();
        let g = approximation_gap(|p| dot(p, &w), &f, 5000, Some(0));
        assert!(g.max.abs() < 1e-13 && g.min.abs() < 1e-13);
    }

    #[test]
    fn entropy_gap_is_positive_and_shrinks_with_refinement() {
        let pts = generate_base_points(3, BasePointScheme::Vertex).unwrap().points;
        let f = build_pwlc_cost(belief_entropy_eval, &pts, None).unwrap();
        let vertex = approximation_gap(belief_entropy, &f, 10_000, None);
        assert!(vertex.max > 0.0);
        assert!(vertex.min >= -1e-12);
        let mut last = f64::INFINITY;
        for m in [2, 4, 8] {
            let pts = generate_base_points(3, BasePointScheme::Lattice(m)).unwrap().points;
            let f = build_pwlc_cost(belief_entropy_eval, &pts, None).unwrap();
            let g = approximation_gap(belief_entropy, &f, 10_000, None);
            assert!(g.max <= last);
            last = g.max;
        }
    }
}
