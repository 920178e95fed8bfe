use serde::{Deserialize, Serialize};

use crate::entropy::{dot, StageCostEvaluation};
use crate::error::{Error, Result};

/// Where an alpha vector came from. Diagnostic only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Tangent plane at the given base point.
    Tangent(usize),
    Backup,
}

/// A hyperplane `pi -> <pi, weights>` tagged with the control that
/// generated it (`None` for terminal-stage vectors).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaVector {
    pub weights: Vec<f64>,
    pub action: Option<usize>,
    pub provenance: Provenance,
}

impl AlphaVector {
    pub fn new(weights: Vec<f64>, action: Option<usize>, provenance: Provenance) -> Self {
        Self { weights, action, provenance }
    }

    #[inline]
    pub fn value(&self, belief: &[f64]) -> f64 {
        dot(belief, &self.weights)
    }
}

/// Pointwise minimum of finitely many hyperplanes over the simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwlcFunction {
    pub vectors: Vec<AlphaVector>,
}

impl PwlcFunction {
    pub fn new(vectors: Vec<AlphaVector>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::InvalidArgument("a PWLC function needs at least one vector".into()));
        }
        let n = vectors[0].weights.len();
        if vectors.iter().any(|v| v.weights.len() != n || v.weights.iter().any(|w| !w.is_finite())) {
            return Err(Error::InvalidArgument("alpha vectors must be finite and equally sized".into()));
        }
        Ok(Self { vectors })
    }

    pub fn zero(n: usize) -> Self {
        Self { vectors: vec![AlphaVector::new(vec![0.0; n], None, Provenance::Backup)] }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].weights.len()
    }

    pub fn value(&self, belief: &[f64]) -> f64 {
        self.vectors.iter().map(|v| v.value(belief)).fold(f64::INFINITY, f64::min)
    }

    /// Index of the minimising vector; ties go to the first.
    pub fn argmin(&self, belief: &[f64]) -> usize {
        let mut best = 0;
        let mut best_val = f64::INFINITY;
        for (i, v) in self.vectors.iter().enumerate() {
            let val = v.value(belief);
            if val < best_val {
                best = i;
                best_val = val;
            }
        }
        best
    }
}

/// Tangent hyperplane of a concave function at `base`:
/// `<pi, alpha> = f(base) + <pi - base, grad f(base)>`.
pub fn tangent_alpha(eval: &StageCostEvaluation, base: &[f64]) -> Vec<f64> {
    let offset = eval.value - dot(base, &eval.gradient);
    eval.gradient.iter().map(|g| g + offset).collect()
}

/// Upper PWLC approximation of a concave function from its tangents at
/// every base point.
pub fn build_pwlc_cost<F>(f: F, base_points: &[Vec<f64>], action: Option<usize>) -> Result<PwlcFunction>
where
    F: Fn(&[f64]) -> StageCostEvaluation,
{
    let vectors = base_points
        .iter()
        .enumerate()
        .map(|(idx, xi)| {
            let eval = f(xi);
            if !eval.value.is_finite() || !eval.gradient_is_finite() {
                return Err(Error::BoundaryBasePoint { index: idx });
            }
            Ok(AlphaVector::new(tangent_alpha(&eval, xi), action, Provenance::Tangent(idx)))
        })
        .collect::<Result<Vec<_>>>()?;
    PwlcFunction::new(vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::{belief_entropy, belief_entropy_eval};
    use crate::quasi::simplex_points;

    #[test]
    fn linear_function_is_reproduced_exactly() {
        let w = [0.3, 1.2, 0.0];
        let pts = vec![vec![0.2, 0.3, 0.5], vec![0.9, 0.05, 0.05], vec![1.0 / 3.0; 3]];
        let f = build_pwlc_cost(|pi: &[f64]| StageCostEvaluation::linear(pi, &w), &pts, Some(0)).unwrap();
        for p in simplex_points(3, 200) {
            assert!((f.value(&p) - dot(&p, &w)).abs() < 1e-14);
        }
        for v in &f.vectors {
            for (a, b) in v.weights.iter().zip(&w) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn entropy_tangent_at_centre_is_flat() {
        let f = build_pwlc_cost(belief_entropy_eval, &[vec![0.25; 4]], None).unwrap();
        for w in &f.vectors[0].weights {
            assert!((w - 4f64.ln()).abs() < 1e-14);
        }
        let vertex = [1.0, 0.0, 0.0, 0.0];
        assert!((f.value(&vertex) - belief_entropy(&vertex) - 4f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn boundary_base_point_rejected() {
        let err = build_pwlc_cost(belief_entropy_eval, &[vec![0.5, 0.5], vec![1.0, 0.0]], None).unwrap_err();
        assert!(matches!(err, Error::BoundaryBasePoint { index: 1 }));
    }
}
